"""Shared builders and independent oracles for the test suite.

The dense constructions here deliberately use plain loops rather than the
library's vectorized kernels, so they can serve as independent references.
"""

import numpy as np

from hypercf.hypergraph import Hypergraph
from hypercf.model import ModelParams, TrainConfig, init_params
from hypercf.explainer import ExplainConfig

RSQRT_EPS = 1e-12

# recipe used by every synthetic-instance test: the stock step size is too
# timid for 30-60 node instances, and the stock beta overpowers the
# prediction term on models this small
SYNTH_TRAIN = TrainConfig(seed=0, learning_rate=0.5, epochs=200)
SYNTH_EXPLAIN = ExplainConfig(beta=0.02)


def random_hypergraph(seed, n_max=50, m_max=50, weighted=True,
                      min_nodes=2, min_edges=1):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(min_nodes, n_max + 1))
    m = int(rng.integers(min_edges, m_max + 1))
    members = []
    for _ in range(m):
        k = int(rng.integers(1, min(n, 5) + 1))
        members.append(sorted(rng.choice(n, size=k, replace=False).tolist()))
    w = rng.uniform(0.2, 2.0, size=m) if weighted else None
    return Hypergraph.from_edge_lists(n, members, w)


def chain_hypergraph(seed, n=24, span=3):
    """Locally random hypergraph whose hyperedges only join nearby indices,
    so the hop diameter grows with n (needed to have structure strictly
    outside a 3-hop view)."""
    rng = np.random.default_rng(seed)
    members = []
    for i in range(n - 1):
        hi = min(n, i + span + 1)
        k = int(rng.integers(2, min(4, hi - i) + 1))
        members.append(sorted({i, *(int(v) for v in rng.integers(i, hi, size=k))}))
    w = rng.uniform(0.5, 1.5, size=len(members))
    return Hypergraph.from_edge_lists(n, members, w)


def random_features(rng, h, f=4):
    return rng.standard_normal((h.num_nodes, f))


def random_instance(seed, n_max=12, m_max=10, f=4, c=3, hidden=(6, 5)):
    """Small (hypergraph, features, untrained params) triple for gradient
    and equivalence checks."""
    rng = np.random.default_rng((seed, 7))
    h = random_hypergraph(rng.integers(2**31), n_max=n_max, m_max=m_max)
    x = random_features(rng, h, f)
    params = init_params(f, c, seed=int(rng.integers(2**31)), hidden=hidden)
    return h, x, params


def dense_incidence(h: Hypergraph, mask=None):
    """H as a dense array; mask is an optional per-incidence value vector."""
    hd = np.zeros((h.num_nodes, h.num_edges))
    for k, (i, e) in enumerate(h.incidences):
        hd[i, e] = 1.0 if mask is None else mask[k]
    return hd


def dense_operator(h: Hypergraph, mask=None):
    """Reference construction of the normalized propagation operator,
    entry by entry with explicit loops."""
    hd = dense_incidence(h, mask)
    w = np.array(h.edge_weights)
    d = np.zeros(h.num_nodes)
    for i in range(h.num_nodes):
        for e in range(h.num_edges):
            d[i] += hd[i, e] * w[e]
    b = np.zeros(h.num_edges)
    for e in range(h.num_edges):
        for i in range(h.num_nodes):
            b[e] += hd[i, e]
    dinv = np.array([0.0 if v < RSQRT_EPS else v ** -0.5 for v in d])
    binv = np.array([0.0 if v < RSQRT_EPS else 1.0 / v for v in b])
    s = np.zeros((h.num_nodes, h.num_nodes))
    for i in range(h.num_nodes):
        for j in range(h.num_nodes):
            acc = 0.0
            for e in range(h.num_edges):
                acc += hd[i, e] * w[e] * binv[e] * hd[j, e]
            s[i, j] = dinv[i] * acc * dinv[j]
    return s


def fd_gradient(f, x0, h=1e-4):
    """Central finite differences of a scalar function of a vector."""
    x0 = np.asarray(x0, dtype=np.float64)
    g = np.zeros_like(x0)
    for i in range(x0.size):
        hi = x0.copy()
        lo = x0.copy()
        hi.flat[i] += h
        lo.flat[i] -= h
        g.flat[i] = (f(hi) - f(lo)) / (2.0 * h)
    return g


def max_rel_err(got, ref, floor=1e-8):
    got = np.asarray(got, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    scale = np.maximum(np.abs(ref), floor)
    return float(np.max(np.abs(got - ref) / scale)) if got.size else 0.0


def zero_weight_params(f=2, c=2) -> ModelParams:
    p = init_params(f, c, seed=0)
    return ModelParams(
        layer_dims=p.layer_dims,
        weights=tuple(np.zeros_like(w) for w in p.weights),
        dropout_prob=p.dropout_prob,
        seed=p.seed,
    )
