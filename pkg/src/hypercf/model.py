"""Hypergraph convolutional classifier: operator construction, forward
pass, training loop, prediction, and checkpoint serialization.

The forward pass never materializes the dense propagation operator; it
factors S = D^{-1/2} A W B^{-1} A^T D^{-1/2} into sparse products, with
A the (optionally masked) incidence pattern.  Degrees are recomputed
from the masked incidence inside the same differentiation tape, so mask
gradients see their effect on the normalization.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tape, Var
from .hypergraph import Hypergraph

DEGREE_EPS = ad.RSQRT_EPS
ACTIVATION = "leaky_relu"
HIDDEN_DIMS = (64, 32)

_CKPT_MAGIC = b"HCFM0001"

# rng stream tags, so one user seed fans out into independent streams
SEED_INIT = 101
SEED_DROPOUT = 102


@dataclass(frozen=True)
class ModelParams:
    """Frozen classifier weights plus the architecture descriptor.

    ``weights`` holds one matrix per convolution layer (layer_dims[l] ×
    layer_dims[l+1]) followed by the final linear classification layer
    (C × C), applied to the last convolution output without propagation.
    """

    layer_dims: tuple
    weights: tuple
    activation: str = ACTIVATION
    negative_slope: float = 0.01
    dropout_prob: float = 0.5
    seed: int = 0

    def __post_init__(self):
        dims = tuple(int(d) for d in self.layer_dims)
        if len(dims) < 2 or any(d <= 0 for d in dims):
            raise ValueError("layer_dims must be >= 2 positive sizes")
        ws = tuple(np.array(w, dtype=np.float64) for w in self.weights)
        if len(ws) != len(dims):
            raise ValueError(f"expected {len(dims)} weight matrices, got {len(ws)}")
        want = [(dims[l], dims[l + 1]) for l in range(len(dims) - 1)]
        want.append((dims[-1], dims[-1]))
        for l, (w, shape) in enumerate(zip(ws, want)):
            if w.shape != shape:
                raise ValueError(f"weight {l} has shape {w.shape}, expected {shape}")
            if not np.all(np.isfinite(w)):
                raise ValueError(f"weight {l} has non-finite entries")
            w.setflags(write=False)
        if self.activation != ACTIVATION:
            raise ValueError(f"unsupported activation {self.activation!r}")
        object.__setattr__(self, "layer_dims", dims)
        object.__setattr__(self, "weights", ws)

    @property
    def num_layers(self) -> int:
        return len(self.layer_dims) - 1

    @property
    def num_classes(self) -> int:
        return self.layer_dims[-1]


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    learning_rate: float = 0.01
    weight_decay: float = 5e-4
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be nonnegative")
        if self.learning_rate <= 0 or self.weight_decay < 0:
            raise ValueError("rates must be positive")


def init_params(num_features: int, num_classes: int, seed: int = 0,
                hidden=HIDDEN_DIMS) -> ModelParams:
    """Seeded uniform Glorot-style initialization for every layer."""
    dims = (num_features, *hidden, num_classes)
    rng = np.random.default_rng(np.random.SeedSequence((seed, SEED_INIT)))
    shapes = [(dims[l], dims[l + 1]) for l in range(len(dims) - 1)]
    shapes.append((num_classes, num_classes))
    ws = []
    for fan_in, fan_out in shapes:
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        ws.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
    return ModelParams(layer_dims=dims, weights=tuple(ws), seed=seed)


def build_operator(h: Hypergraph, soft_mask=None) -> np.ndarray:
    """Dense normalized propagation operator, mask applied if given.

    ``soft_mask`` carries one value per stored incidence (aligned with
    ``h.incidences``); absent entries of the incidence matrix stay zero
    regardless.  Degrees below the epsilon guard zero out their rows and
    columns instead of dividing by ~0.
    """
    a = np.zeros((h.num_nodes, h.num_edges))
    vals = np.ones(h.nnz) if soft_mask is None else np.asarray(soft_mask, dtype=np.float64)
    if vals.shape != (h.nnz,):
        raise ad.ShapeMismatch("soft_mask must carry one value per incidence")
    a[h.node_idx, h.edge_idx] = vals
    w = h.edge_weights
    d = a @ w
    b = a.sum(axis=0)
    dinv = np.where(d >= DEGREE_EPS, 1.0 / np.sqrt(np.maximum(d, DEGREE_EPS)), 0.0)
    binv = np.where(b >= DEGREE_EPS, 1.0 / np.maximum(b, DEGREE_EPS), 0.0)
    return (dinv[:, None] * a * (w * binv)[None, :]) @ a.T * dinv[None, :]


def spectral_norm_estimate(s: np.ndarray, iters: int = 200, seed: int = 0) -> float:
    """Power-iteration estimate of the largest eigenvalue magnitude."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(s.shape[0])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        w = s @ v
        est = np.linalg.norm(w)
        if est == 0.0:
            return 0.0
        v = w / est
    return float(est)


def forward_logits(h: Hypergraph, x, params: ModelParams, *,
                   weight_vars=None, values=None, mode: str = "eval",
                   dropout_masks=None) -> Var:
    """Logits of every node; records onto a tape when any operand carries one.

    ``values`` replaces the incidence entries (the soft mask, one per
    stored incidence); ``weight_vars`` lets the training loop pass leaf
    variables for the layer matrices.
    """
    if mode not in ("train", "eval"):
        raise ValueError(f"unknown mode {mode!r}")
    L = params.num_layers
    if mode == "train" and (dropout_masks is None or len(dropout_masks) != L):
        raise ValueError("train mode needs one dropout mask per convolution layer")
    coo = h.to_coo()
    v = ad._wrap(coo.values if values is None else values)
    ws = weight_vars if weight_vars is not None else [Var(w) for w in params.weights]

    w_col = h.edge_weights[:, None]
    d = ad.spmm(coo, Var(w_col), values=v)                       # node degrees
    b = ad.spmm(coo, Var(np.ones((h.num_nodes, 1))), values=v,
                transpose=True)                                  # edge degrees
    dinv = ad.rsqrt(d)
    brs = ad.rsqrt(b)
    wb = ad.mul(ad.mul(brs, brs), Var(w_col))                    # W B^{-1} diagonal

    cur = ad._wrap(np.asarray(x, dtype=np.float64))
    for l in range(L):
        u = ad.mul(cur, dinv)
        t = ad.spmm(coo, u, values=v, transpose=True)
        t = ad.mul(t, wb)
        z = ad.mul(ad.spmm(coo, t, values=v), dinv)
        cur = ad.leaky_relu(ad.matmul(z, ws[l]), params.negative_slope)
        if mode == "train":
            cur = ad.dropout(cur, dropout_masks[l])
    return ad.matmul(cur, ws[L])


def forward(h: Hypergraph, x, params: ModelParams, soft_mask=None,
            mode: str = "eval", dropout_masks=None):
    """Plain (untaped) forward pass: (probabilities, logits) arrays."""
    logits = forward_logits(h, x, params, values=soft_mask, mode=mode,
                            dropout_masks=dropout_masks)
    probs = ad.softmax_rows(logits)
    return probs.value, logits.value


def predict(h: Hypergraph, x, params: ModelParams, node: int):
    """Predicted class and probability row; ties go to the lowest class."""
    if not 0 <= node < h.num_nodes:
        raise IndexError(f"node {node} out of range")
    probs, _ = forward(h, x, params)
    return int(np.argmax(probs[node])), probs[node]


def _dropout_masks(rng, num_nodes: int, params: ModelParams):
    keep = 1.0 - params.dropout_prob
    masks = []
    for l in range(params.num_layers):
        dim = params.layer_dims[l + 1]
        masks.append((rng.random((num_nodes, dim)) < keep) / keep)
    return masks


def train(h: Hypergraph, x, labels, train_nodes, cfg: TrainConfig,
          params: ModelParams | None = None, val_nodes=None, log_cb=None) -> ModelParams:
    """Full-batch gradient descent on the training-node log-likelihood.

    Deterministic given cfg.seed (initialization and dropout both derive
    from it).  ``log_cb(epoch, loss, val_accuracy)`` is invoked once per
    epoch when provided; val_accuracy is None without ``val_nodes``.
    """
    x = np.asarray(x, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    train_nodes = np.asarray(train_nodes, dtype=np.int64)
    if len(train_nodes) == 0:
        raise ValueError("training split is empty")
    if params is None:
        params = init_params(x.shape[1], int(labels.max()) + 1, seed=cfg.seed)

    n, c = h.num_nodes, params.num_classes
    indicator = np.zeros((n, c))
    indicator[train_nodes, labels[train_nodes]] = 1.0
    scale = -1.0 / len(train_nodes)
    rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, SEED_DROPOUT)))
    weights = [w.copy() for w in params.weights]

    for epoch in range(cfg.epochs):
        tape = Tape()
        wvars = [tape.leaf(w) for w in weights]
        masks = _dropout_masks(rng, n, params)
        logits = forward_logits(h, x, params, weight_vars=wvars,
                                mode="train", dropout_masks=masks)
        logp = ad.log_softmax_rows(logits)
        loss = ad.smul(ad.sum_all(ad.mul(logp, Var(indicator))), scale)
        tape.backward(loss)
        for w, wv in zip(weights, wvars):
            # torch-style decoupled-from-loss weight decay, applied in the step
            w -= cfg.learning_rate * (tape.grad(wv) + cfg.weight_decay * w)
        if log_cb is not None:
            trained = ModelParams(params.layer_dims, tuple(weights), seed=cfg.seed)
            val_acc = None
            if val_nodes is not None and len(val_nodes):
                probs, _ = forward(h, x, trained)
                val_acc = float(np.mean(np.argmax(probs[val_nodes], 1) == labels[val_nodes]))
            log_cb(epoch, float(loss.value), val_acc)

    return ModelParams(params.layer_dims, tuple(weights), seed=cfg.seed)


# ---------------------------------------------------------------------------
# checkpoint format v1: magic, little-endian u64 header length, canonical
# JSON header, then each weight matrix as row-major little-endian float64.


def save_checkpoint(params: ModelParams, path) -> None:
    header = {
        "format": 1,
        "layer_dims": list(params.layer_dims),
        "activation": params.activation,
        "negative_slope": params.negative_slope,
        "dropout_prob": params.dropout_prob,
        "seed": params.seed,
        "arrays": [{"name": f"P{l}", "rows": w.shape[0], "cols": w.shape[1]}
                   for l, w in enumerate(params.weights)],
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as f:
        f.write(_CKPT_MAGIC)
        f.write(struct.pack("<Q", len(blob)))
        f.write(blob)
        for w in params.weights:
            f.write(np.ascontiguousarray(w, dtype="<f8").tobytes())


class CheckpointError(ValueError):
    pass


def load_checkpoint(path) -> ModelParams:
    with open(path, "rb") as f:
        if f.read(len(_CKPT_MAGIC)) != _CKPT_MAGIC:
            raise CheckpointError("bad magic; not a model checkpoint")
        try:
            (hlen,) = struct.unpack("<Q", f.read(8))
            header = json.loads(f.read(hlen))
        except (struct.error, json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise CheckpointError(f"unreadable checkpoint header: {exc}") from exc
        if header.get("format") != 1:
            raise CheckpointError(f"unsupported checkpoint format {header.get('format')}")
        ws = []
        for desc in header["arrays"]:
            r, c = int(desc["rows"]), int(desc["cols"])
            buf = f.read(r * c * 8)
            if len(buf) != r * c * 8:
                raise CheckpointError(f"truncated payload for {desc['name']}")
            ws.append(np.frombuffer(buf, dtype="<f8").reshape(r, c).astype(np.float64))
        if f.read(1):
            raise CheckpointError("trailing bytes after payload")
    return ModelParams(
        layer_dims=tuple(header["layer_dims"]),
        weights=tuple(ws),
        activation=header["activation"],
        negative_slope=header["negative_slope"],
        dropout_prob=header["dropout_prob"],
        seed=header["seed"],
    )
