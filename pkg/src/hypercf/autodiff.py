"""Float64 dense/sparse numeric kernel with reverse-mode gradients.

The primitive set is deliberately closed: it contains exactly the
operations needed by normalized incidence propagation and by the masked
counterfactual objective (matmul, COO sparse matmul, broadcasting
add/mul, guarded reciprocal square root, leaky rectifier, sigmoid, row
softmax / log-softmax, mask gather, dropout-by-mask, and sum / L1
reductions).  Everything is computed in 64-bit floats; near the decision
boundary the objective differences are tiny and float32 would make flip
detection flaky.

Gradients are recorded on an explicit :class:`Tape`.  A tape is
single-owner: one optimization job builds one tape per step.  Values
(`numpy` arrays) are treated as immutable once recorded.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

RSQRT_EPS = 1e-12
DEFAULT_LEAKY_SLOPE = 0.01


class ShapeMismatch(ValueError):
    """Operand shapes cannot be combined under the primitive's rule."""


class NonFiniteResult(ArithmeticError):
    """A primitive produced inf/nan, which signals upstream degeneracy."""


def as_array(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def _finite(name: str, out: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(out)):
        raise NonFiniteResult(f"{name} produced a non-finite value")
    return out


@dataclass(frozen=True)
class Coo:
    """Sparse matrix in coordinate form.

    Entries are sorted lexicographically by (row, col) and deduplicated;
    values are finite float64.  The index structure is immutable; kernels
    that need different values on the same pattern pass them separately
    (see :func:`spmm`).
    """

    rows: int
    cols: int
    row_idx: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        ri = np.asarray(self.row_idx, dtype=np.int64)
        ci = np.asarray(self.col_idx, dtype=np.int64)
        vals = as_array(self.values)
        if not (ri.ndim == ci.ndim == vals.ndim == 1 and len(ri) == len(ci) == len(vals)):
            raise ShapeMismatch("coo arrays must be equal-length 1-d")
        if len(ri):
            if ri.min() < 0 or ri.max() >= self.rows or ci.min() < 0 or ci.max() >= self.cols:
                raise ValueError("coo index out of range")
            key = ri * self.cols + ci
            if np.any(np.diff(key) <= 0):
                raise ValueError("coo entries must be sorted by (row, col) without duplicates")
        if not np.all(np.isfinite(vals)):
            raise ValueError("coo values must be finite")
        for a in (ri, ci, vals):
            a.setflags(write=False)
        object.__setattr__(self, "row_idx", ri)
        object.__setattr__(self, "col_idx", ci)
        object.__setattr__(self, "values", vals)

    @property
    def nnz(self) -> int:
        return len(self.row_idx)

    @classmethod
    def from_triples(cls, rows: int, cols: int, triples) -> "Coo":
        triples = sorted((int(r), int(c), float(v)) for r, c, v in triples)
        ri = np.array([t[0] for t in triples], dtype=np.int64)
        ci = np.array([t[1] for t in triples], dtype=np.int64)
        vals = np.array([t[2] for t in triples], dtype=np.float64)
        return cls(rows, cols, ri, ci, vals)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.rows, self.cols))
        out[self.row_idx, self.col_idx] = self.values
        return out

    def with_values(self, values) -> "Coo":
        return Coo(self.rows, self.cols, self.row_idx, self.col_idx, as_array(values))


class Var:
    """A value node.  ``tape is None`` means plain (constant) evaluation."""

    __slots__ = ("value", "tape", "idx")

    def __init__(self, value, tape: "Tape | None" = None, idx: int = -1):
        self.value = as_array(value)
        self.tape = tape
        self.idx = idx

    def __repr__(self):
        return f"Var(shape={self.value.shape}, recorded={self.tape is not None})"


def _wrap(x) -> Var:
    return x if isinstance(x, Var) else Var(x)


class _Record:
    __slots__ = ("name", "out", "pulls", "recompute")

    def __init__(self, name, out, pulls, recompute):
        self.name = name
        self.out = out
        # (parent_node_idx, vjp) pairs; vjp maps d(out) -> d(parent)
        self.pulls = pulls
        self.recompute = recompute


class Tape:
    """Ordered record of primitive applications for reverse traversal.

    Single-owner by design; create one per differentiation job.
    """

    def __init__(self):
        self._records: list[_Record] = []
        self._grads: list[np.ndarray | None] | None = None
        self.leaves: list[Var] = []

    def __len__(self):
        return len(self._records)

    def leaf(self, value) -> Var:
        v = Var(as_array(value).copy(), self, len(self._records))
        v.value.setflags(write=False)
        self._records.append(_Record("leaf", v.value, (), None))
        self.leaves.append(v)
        return v

    def _node(self, name, out, pulls, recompute) -> Var:
        out.setflags(write=False)
        v = Var.__new__(Var)
        v.value = out
        v.tape = self
        v.idx = len(self._records)
        self._records.append(_Record(name, out, tuple(pulls), recompute))
        return v

    def backward(self, out: Var) -> None:
        """Accumulate gradients of the scalar ``out`` into every leaf."""
        if out.tape is not self or out.idx < 0:
            raise ValueError("backward target is not rooted on this tape")
        if out.value.size != 1:
            raise ValueError("backward requires a scalar output")
        grads: list[np.ndarray | None] = [None] * len(self._records)
        grads[out.idx] = np.ones_like(out.value)
        for i in range(out.idx, -1, -1):
            g = grads[i]
            if g is None:
                continue
            for pid, pull in self._records[i].pulls:
                contrib = pull(g)
                grads[pid] = contrib if grads[pid] is None else grads[pid] + contrib
        self._grads = grads

    def grad(self, v: Var) -> np.ndarray:
        """Gradient for a leaf after :meth:`backward`; zero if unused."""
        if self._grads is None:
            raise RuntimeError("backward has not been run")
        if v.tape is not self:
            raise ValueError("variable does not belong to this tape")
        g = self._grads[v.idx]
        return np.zeros_like(v.value) if g is None else g

    def replay_check(self) -> None:
        """Re-execute every recorded primitive and compare outputs exactly."""
        for rec in self._records:
            if rec.recompute is None:
                continue
            again = rec.recompute()
            if not np.array_equal(again, rec.out):
                raise AssertionError(f"replay of {rec.name} diverged")


def _tape_of(*vars_: Var) -> Tape | None:
    for v in vars_:
        if v.tape is not None:
            return v.tape
    return None


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, s in enumerate(shape):
        if s == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# primitives


def matmul(a, b) -> Var:
    a, b = _wrap(a), _wrap(b)
    av, bv = a.value, b.value
    if av.ndim != 2 or bv.ndim != 2 or av.shape[1] != bv.shape[0]:
        raise ShapeMismatch(f"matmul {av.shape} @ {bv.shape}")
    out = _finite("matmul", av @ bv)
    t = _tape_of(a, b)
    if t is None:
        return Var(out)
    pulls = []
    if a.tape is t:
        pulls.append((a.idx, lambda g: g @ bv.T))
    if b.tape is t:
        pulls.append((b.idx, lambda g: av.T @ g))
    return t._node("matmul", out, pulls, lambda: av @ bv)


def _spmm_raw(coo: Coo, vals: np.ndarray, x: np.ndarray, transpose: bool) -> np.ndarray:
    n_out = coo.cols if transpose else coo.rows
    src = coo.row_idx if transpose else coo.col_idx
    dst = coo.col_idx if transpose else coo.row_idx
    out = np.zeros((n_out, x.shape[1]))
    # np.add.at keeps the entry order deterministic
    np.add.at(out, dst, vals[:, None] * x[src])
    return out


def spmm(coo: Coo, x, values=None, transpose: bool = False) -> Var:
    """Sparse-times-dense product ``S @ x`` (or ``S.T @ x``).

    ``values`` overrides the pattern's stored values and may be a recorded
    variable, in which case gradients also flow into the sparse entries.
    """
    x = _wrap(x)
    values = _wrap(coo.values if values is None else values)
    xv, vv = x.value, values.value
    if xv.ndim != 2:
        raise ShapeMismatch("spmm needs a 2-d dense operand")
    need = coo.rows if transpose else coo.cols
    if xv.shape[0] != need:
        raise ShapeMismatch(f"spmm dense operand has {xv.shape[0]} rows, needs {need}")
    if vv.shape != (coo.nnz,):
        raise ShapeMismatch("spmm values must be one per stored entry")
    out = _finite("spmm", _spmm_raw(coo, vv, xv, transpose))
    t = _tape_of(values, x)
    if t is None:
        return Var(out)
    src = coo.row_idx if transpose else coo.col_idx
    dst = coo.col_idx if transpose else coo.row_idx
    pulls = []
    if values.tape is t:
        pulls.append((values.idx, lambda g: np.einsum("kf,kf->k", g[dst], xv[src])))
    if x.tape is t:
        pulls.append((x.idx, lambda g: _spmm_raw(coo, vv, g, not transpose)))
    return t._node("spmm", out, pulls, lambda: _spmm_raw(coo, vv, xv, transpose))


def _broadcast_binary(name, a, b, fwd, dfa, dfb) -> Var:
    a, b = _wrap(a), _wrap(b)
    av, bv = a.value, b.value
    try:
        np.broadcast_shapes(av.shape, bv.shape)
    except ValueError as exc:
        raise ShapeMismatch(f"{name} {av.shape} vs {bv.shape}") from exc
    out = _finite(name, fwd(av, bv))
    t = _tape_of(a, b)
    if t is None:
        return Var(out)
    pulls = []
    if a.tape is t:
        pulls.append((a.idx, lambda g: _unbroadcast(dfa(g, av, bv), av.shape)))
    if b.tape is t:
        pulls.append((b.idx, lambda g: _unbroadcast(dfb(g, av, bv), bv.shape)))
    return t._node(name, out, pulls, lambda: fwd(av, bv))


def add(a, b) -> Var:
    return _broadcast_binary(
        "add", a, b, lambda x, y: x + y,
        lambda g, x, y: g, lambda g, x, y: g,
    )


def mul(a, b) -> Var:
    return _broadcast_binary(
        "mul", a, b, lambda x, y: x * y,
        lambda g, x, y: g * y, lambda g, x, y: g * x,
    )


def _unary(name, a, fwd, df) -> Var:
    a = _wrap(a)
    av = a.value
    out = _finite(name, fwd(av))
    if a.tape is None:
        return Var(out)
    t = a.tape
    pulls = [(a.idx, lambda g: df(g, av, out))]
    return t._node(name, out, pulls, lambda: fwd(av))


def smul(a, s: float) -> Var:
    s = float(s)
    return _unary("smul", a, lambda x: x * s, lambda g, x, o: g * s)


def rsqrt(a, eps: float = RSQRT_EPS) -> Var:
    """Elementwise 1/sqrt with a zero guard: inputs below ``eps`` map to 0.

    The guard makes a fully-demoted node or emptied hyperedge contribute
    a zero row/column instead of an infinity.
    """

    def fwd(x):
        ok = x >= eps
        return np.where(ok, 1.0 / np.sqrt(np.where(ok, x, 1.0)), 0.0)

    return _unary("rsqrt", a, fwd,
                  lambda g, x, o: np.where(x >= eps, -0.5 * o ** 3, 0.0) * g)


def leaky_relu(a, slope: float = DEFAULT_LEAKY_SLOPE) -> Var:
    slope = float(slope)
    return _unary(
        "leaky_relu", a,
        lambda x: np.where(x > 0, x, slope * x),
        lambda g, x, o: np.where(x > 0, 1.0, slope) * g,
    )


def sigmoid(a) -> Var:
    def fwd(x):
        out = np.empty_like(x)
        pos = x >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        ex = np.exp(x[~pos])
        out[~pos] = ex / (1.0 + ex)
        return out

    return _unary("sigmoid", a, fwd, lambda g, x, o: o * (1.0 - o) * g)


def softmax_rows(a) -> Var:
    def fwd(x):
        z = x - x.max(axis=-1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=-1, keepdims=True)

    return _unary(
        "softmax_rows", a, fwd,
        lambda g, x, o: o * (g - (g * o).sum(axis=-1, keepdims=True)),
    )


def log_softmax_rows(a) -> Var:
    def fwd(x):
        z = x - x.max(axis=-1, keepdims=True)
        return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))

    return _unary(
        "log_softmax_rows", a, fwd,
        lambda g, x, o: g - np.exp(o) * g.sum(axis=-1, keepdims=True),
    )


def dropout(a, mask) -> Var:
    """Multiply by a pregenerated 0 / (1/keep) mask; mask is never differentiated."""
    mask = as_array(mask)
    return mul(a, Var(mask))


def gather(src, index_map, fill: float = 1.0) -> Var:
    """Lift per-tunable values onto a longer vector.

    ``out[i] = src[index_map[i]]`` where ``index_map[i] >= 0`` and ``fill``
    elsewhere.  This is how a small vector of mask entries is spread onto
    the incidence pattern (frozen coordinates stay at 1).
    """
    src = _wrap(src)
    im = np.asarray(index_map, dtype=np.int64)
    sv = src.value
    if sv.ndim != 1 or im.ndim != 1:
        raise ShapeMismatch("gather needs 1-d operands")
    hit = im >= 0
    if hit.any() and im[hit].max() >= len(sv):
        raise ShapeMismatch("gather index out of range")

    def fwd(x):
        out = np.full(im.shape, float(fill))
        out[hit] = x[im[hit]]
        return out

    out = _finite("gather", fwd(sv))
    if src.tape is None:
        return Var(out)
    t = src.tape

    def pull(g):
        return np.bincount(im[hit], weights=g[hit], minlength=len(sv))

    return t._node("gather", out, [(src.idx, pull)], lambda: fwd(sv))


def sum_all(a) -> Var:
    return _unary("sum_all", a, lambda x: np.asarray(x.sum()),
                  lambda g, x, o: np.full_like(x, float(g)))


def l1_norm(a) -> Var:
    return _unary("l1_norm", a, lambda x: np.asarray(np.abs(x).sum()),
                  lambda g, x, o: np.sign(x) * float(g))
