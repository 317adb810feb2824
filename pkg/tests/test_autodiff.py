import numpy as np
import pytest

import hypercf.autodiff as ad
from hypercf.autodiff import Coo, Tape, Var, NonFiniteResult, ShapeMismatch
from helpers import fd_gradient, max_rel_err

FD_TOL = 1e-5


def _coo_random(rng, n, m, density=0.4):
    mask = rng.random((n, m)) < density
    if not mask.any():
        mask[0, 0] = True
    r, c = np.nonzero(mask)
    vals = rng.uniform(0.5, 2.0, size=len(r))
    return Coo(n, m, r, c, vals)


# ------------------------------------------------------------ Coo container

def test_coo_from_triples_sorts_and_freezes():
    c = Coo.from_triples(3, 3, [(2, 0, 3.0), (0, 1, 1.0), (1, 2, 2.0)])
    assert c.row_idx.tolist() == [0, 1, 2]
    assert c.values.tolist() == [1.0, 2.0, 3.0]
    with pytest.raises(ValueError):
        c.values[0] = 9.0


def test_coo_rejects_unsorted_duplicate_or_out_of_range():
    with pytest.raises(ValueError):
        Coo(3, 3, np.array([2, 0]), np.array([0, 1]), np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        Coo(2, 2, np.array([0, 0]), np.array([1, 1]), np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        Coo(2, 2, np.array([0, 2]), np.array([0, 0]), np.array([1.0, 1.0]))


def test_coo_to_dense_round_trip():
    rng = np.random.default_rng(0)
    c = _coo_random(rng, 5, 4)
    d = c.to_dense()
    assert d.shape == (5, 4)
    for r, col, v in zip(c.row_idx, c.col_idx, c.values):
        assert d[r, col] == v
    assert d.sum() == pytest.approx(c.values.sum())


def test_coo_with_values_replaces_only_values():
    rng = np.random.default_rng(1)
    c = _coo_random(rng, 4, 4)
    c2 = c.with_values(np.ones(len(c.values)))
    assert np.array_equal(c2.row_idx, c.row_idx)
    assert c2.values.tolist() == [1.0] * len(c.values)


# ------------------------------------------------------- scalar FD oracles

def _check_grad(build, x0, tol=FD_TOL):
    """build(leaf_var) -> scalar Var; compares tape gradient to central FD."""
    tape = Tape()
    leaf = tape.leaf(x0)
    out = build(leaf)
    tape.backward(out)

    def f(v):
        t2 = Tape()
        l2 = t2.leaf(v.reshape(np.asarray(x0).shape))
        return float(build(l2).value)

    fd = fd_gradient(f, np.asarray(x0, dtype=np.float64).ravel())
    assert max_rel_err(tape.grad(leaf).ravel(), fd) < tol


@pytest.mark.parametrize("seed", range(6))
def test_grad_matmul(seed):
    rng = np.random.default_rng(seed)
    b = rng.standard_normal((4, 3))
    x0 = rng.standard_normal((2, 4))
    _check_grad(lambda l: ad.sum_all(ad.matmul(l, Var(b))), x0)


@pytest.mark.parametrize("seed", range(6))
def test_grad_mul_broadcast(seed):
    rng = np.random.default_rng(seed)
    col = rng.standard_normal((5, 1))
    x0 = rng.standard_normal((5, 3))
    _check_grad(lambda l: ad.sum_all(ad.mul(l, Var(col))), x0)
    x1 = rng.standard_normal((5, 1))
    other = rng.standard_normal((5, 3))
    _check_grad(lambda l: ad.sum_all(ad.mul(l, Var(other))), x1)


@pytest.mark.parametrize("seed", range(4))
def test_grad_add_smul(seed):
    rng = np.random.default_rng(seed)
    b = rng.standard_normal((3, 3))
    x0 = rng.standard_normal((3, 3))
    _check_grad(lambda l: ad.sum_all(ad.add(ad.smul(l, -1.7), Var(b))), x0)


@pytest.mark.parametrize("seed", range(6))
def test_grad_rsqrt(seed):
    rng = np.random.default_rng(seed)
    x0 = rng.uniform(0.5, 3.0, size=7)
    _check_grad(lambda l: ad.sum_all(ad.rsqrt(l)), x0)


def test_rsqrt_guard_below_eps():
    tape = Tape()
    leaf = tape.leaf(np.array([0.0, 1e-13, 4.0]))
    out = ad.rsqrt(leaf)
    assert out.value[0] == 0.0 and out.value[1] == 0.0
    assert out.value[2] == pytest.approx(0.5)
    tape.backward(ad.sum_all(out))
    g = tape.grad(leaf)
    # guarded entries are flat: no gradient leaks through the cutoff
    assert g[0] == 0.0 and g[1] == 0.0
    assert g[2] == pytest.approx(-0.5 * 4.0 ** -1.5)


@pytest.mark.parametrize("seed", range(4))
def test_grad_leaky_relu(seed):
    rng = np.random.default_rng(seed)
    x0 = rng.standard_normal((4, 3)) * 2
    x0[np.abs(x0) < 0.05] = 0.5  # keep FD away from the kink
    w = rng.standard_normal((4, 3))
    _check_grad(lambda l: ad.sum_all(ad.mul(ad.leaky_relu(l), Var(w))), x0)


def test_leaky_relu_values():
    out = ad.leaky_relu(Var(np.array([-2.0, 0.0, 3.0])))
    assert out.value.tolist() == [-0.02, 0.0, 3.0]
    out2 = ad.leaky_relu(Var(np.array([-1.0])), slope=0.2)
    assert out2.value[0] == pytest.approx(-0.2)


@pytest.mark.parametrize("seed", range(4))
def test_grad_sigmoid(seed):
    rng = np.random.default_rng(seed)
    x0 = rng.standard_normal(6) * 3
    w = rng.standard_normal(6)
    _check_grad(lambda l: ad.sum_all(ad.mul(ad.sigmoid(l), Var(w))), x0)


def test_sigmoid_stable_at_extremes():
    out = ad.sigmoid(Var(np.array([-800.0, 0.0, 800.0])))
    assert np.all(np.isfinite(out.value))
    assert out.value[0] == pytest.approx(0.0, abs=1e-12)
    assert out.value[1] == 0.5
    assert out.value[2] == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(4))
def test_grad_softmax_log_softmax(seed):
    rng = np.random.default_rng(seed)
    x0 = rng.standard_normal((3, 4)) * 2
    w = rng.standard_normal((3, 4))
    _check_grad(lambda l: ad.sum_all(ad.mul(ad.softmax_rows(l), Var(w))), x0)
    _check_grad(lambda l: ad.sum_all(ad.mul(ad.log_softmax_rows(l), Var(w))), x0)


def test_softmax_rows_sum_to_one_and_shift_invariance():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((5, 4)) * 50
    p = ad.softmax_rows(Var(a)).value
    assert np.allclose(p.sum(axis=1), 1.0, atol=1e-12)
    p2 = ad.softmax_rows(Var(a + 1000.0)).value
    assert np.allclose(p, p2, atol=1e-12)
    lp = ad.log_softmax_rows(Var(a)).value
    assert np.all(np.isfinite(lp))
    assert np.allclose(np.exp(lp), p, atol=1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_grad_l1_norm(seed):
    rng = np.random.default_rng(seed)
    x0 = rng.uniform(0.2, 2.0, size=8)  # strictly positive: away from |.| kink
    _check_grad(lambda l: ad.l1_norm(l), x0)


@pytest.mark.parametrize("seed", range(4))
def test_grad_gather(seed):
    rng = np.random.default_rng(seed)
    index_map = np.array([1, -1, 0, 1, -1, 2])
    w = rng.standard_normal(6)
    x0 = rng.standard_normal(3)
    _check_grad(lambda l: ad.sum_all(ad.mul(ad.gather(l, index_map), Var(w))), x0)


def test_gather_fill_and_accumulation():
    src = np.array([10.0, 20.0])
    out = ad.gather(Var(src), np.array([0, -1, 1, 0]), fill=7.0)
    assert out.value.tolist() == [10.0, 7.0, 20.0, 10.0]
    tape = Tape()
    leaf = tape.leaf(src)
    tape.backward(ad.sum_all(ad.gather(leaf, np.array([0, -1, 1, 0]))))
    # entry 0 feeds two output slots, entry 1 feeds one
    assert tape.grad(leaf).tolist() == [2.0, 1.0]


def test_dropout_is_constant_mask_mul():
    rng = np.random.default_rng(0)
    x0 = rng.standard_normal((4, 3))
    keep = (rng.random((4, 3)) < 0.5).astype(float) * 2.0
    tape = Tape()
    leaf = tape.leaf(x0)
    out = ad.dropout(leaf, keep)
    assert np.array_equal(out.value, x0 * keep)
    tape.backward(ad.sum_all(out))
    assert np.array_equal(tape.grad(leaf), keep)


# --------------------------------------------------------------- spmm

@pytest.mark.parametrize("seed", range(8))
@pytest.mark.parametrize("transpose", [False, True])
def test_spmm_matches_dense(seed, transpose):
    rng = np.random.default_rng(seed)
    n, m = int(rng.integers(2, 32)), int(rng.integers(2, 32))
    coo = _coo_random(rng, n, m)
    k = int(rng.integers(1, 6))
    x = rng.standard_normal((n if transpose else m, k))
    got = ad.spmm(coo, Var(x), transpose=transpose).value
    dense = coo.to_dense()
    ref = (dense.T if transpose else dense) @ x
    assert np.allclose(got, ref, atol=1e-12)


@pytest.mark.parametrize("seed", range(6))
def test_spmm_grad_wrt_dense_operand(seed):
    rng = np.random.default_rng(seed)
    coo = _coo_random(rng, 5, 4)
    x0 = rng.standard_normal((4, 3))
    w = rng.standard_normal((5, 3))
    _check_grad(lambda l: ad.sum_all(ad.mul(ad.spmm(coo, l), Var(w))), x0)
    xt = rng.standard_normal((5, 3))
    wt = rng.standard_normal((4, 3))
    _check_grad(
        lambda l: ad.sum_all(ad.mul(ad.spmm(coo, l, transpose=True), Var(wt))), xt)


@pytest.mark.parametrize("seed", range(6))
def test_spmm_grad_wrt_values(seed):
    rng = np.random.default_rng(seed)
    coo = _coo_random(rng, 5, 4)
    x = rng.standard_normal((4, 3))
    w = rng.standard_normal((5, 3))
    v0 = rng.uniform(0.2, 1.5, size=len(coo.values))
    _check_grad(
        lambda l: ad.sum_all(ad.mul(ad.spmm(coo, Var(x), values=l), Var(w))), v0)


def test_spmm_values_override_changes_result():
    coo = Coo(2, 2, np.array([0, 1]), np.array([0, 1]), np.array([2.0, 3.0]))
    x = np.eye(2)
    base = ad.spmm(coo, Var(x)).value
    overridden = ad.spmm(coo, Var(x), values=Var(np.array([5.0, 7.0]))).value
    assert base.tolist() == [[2.0, 0.0], [0.0, 3.0]]
    assert overridden.tolist() == [[5.0, 0.0], [0.0, 7.0]]


# ------------------------------------------------------------ tape rules

def test_tape_leaf_copies_input():
    src = np.ones(3)
    tape = Tape()
    leaf = tape.leaf(src)
    src[0] = 99.0
    assert leaf.value[0] == 1.0
    with pytest.raises(ValueError):
        leaf.value[0] = 5.0


def test_unused_leaf_gets_zero_grad():
    tape = Tape()
    a = tape.leaf(np.ones(2))
    b = tape.leaf(np.ones(3))
    tape.backward(ad.sum_all(a))
    assert tape.grad(b).shape == (3,)
    assert np.all(tape.grad(b) == 0.0)


def test_backward_requires_scalar_root():
    tape = Tape()
    a = tape.leaf(np.ones((2, 2)))
    with pytest.raises(ValueError):
        tape.backward(ad.smul(a, 2.0))


def test_replay_check_accepts_deterministic_graph():
    tape = Tape()
    a = tape.leaf(np.arange(4.0))
    out = ad.sum_all(ad.mul(ad.sigmoid(a), a))
    tape.backward(out)
    tape.replay_check()  # raises if any primitive replays differently


def test_results_deterministic_across_runs():
    def run():
        tape = Tape()
        a = tape.leaf(np.linspace(-2, 2, 6).reshape(2, 3))
        out = ad.sum_all(ad.softmax_rows(ad.matmul(a, Var(np.eye(3)))))
        tape.backward(out)
        return out.value.copy(), tape.grad(a).copy()
    v1, g1 = run()
    v2, g2 = run()
    assert np.array_equal(v1, v2) and np.array_equal(g1, g2)


# ------------------------------------------------------------- diagnostics

def test_shape_mismatch_raises():
    with pytest.raises(ShapeMismatch):
        ad.matmul(Var(np.ones((2, 3))), Var(np.ones((2, 3))))
    with pytest.raises(ShapeMismatch):
        ad.add(Var(np.ones((2, 3))), Var(np.ones((4, 3))))


def test_non_finite_result_raises():
    with pytest.raises(NonFiniteResult):
        ad.matmul(Var(np.full((1, 2), np.inf)), Var(np.ones((2, 1))))
    with pytest.raises(NonFiniteResult):
        ad.mul(Var(np.array([np.nan])), Var(np.array([1.0])))
