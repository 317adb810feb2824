"""Hypergraph incidence structure, degree computation, neighborhood
queries, sub-hypergraph extraction, and graph conversions.

All structures here are immutable after construction and safe to share
across concurrent explanation workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .autodiff import Coo


def _int_pairs(pairs) -> np.ndarray:
    a = np.asarray(pairs, dtype=np.int64)
    if a.size == 0:
        a = a.reshape(0, 2)
    if a.ndim != 2 or a.shape[1] != 2:
        raise ValueError("expected a (K, 2) array of index pairs")
    return a


@dataclass(frozen=True)
class Hypergraph:
    """Node-hyperedge incidence structure in coordinate form.

    ``incidences`` is a (K, 2) int64 array of (node, edge) pairs, sorted
    lexicographically, no duplicates.  ``edge_weights`` is the diagonal of
    the hyperedge weight matrix; defaults to all ones.  Hyperedges with
    identical member sets are retained as distinct columns.
    """

    num_nodes: int
    num_edges: int
    incidences: np.ndarray
    edge_weights: np.ndarray | None = None

    def __post_init__(self):
        inc = _int_pairs(self.incidences)
        if len(inc):
            if inc[:, 0].min() < 0 or inc[:, 0].max() >= self.num_nodes:
                raise ValueError("incidence node index out of range")
            if inc[:, 1].min() < 0 or inc[:, 1].max() >= self.num_edges:
                raise ValueError("incidence edge index out of range")
            key = inc[:, 0] * max(self.num_edges, 1) + inc[:, 1]
            if np.any(np.diff(key) <= 0):
                raise ValueError("incidences must be sorted by (node, edge) with no duplicates")
        w = self.edge_weights
        w = np.ones(self.num_edges) if w is None else np.asarray(w, dtype=np.float64)
        if w.shape != (self.num_edges,):
            raise ValueError("edge_weights must have one entry per hyperedge")
        if len(w) and (not np.all(np.isfinite(w)) or w.min() <= 0):
            raise ValueError("edge_weights must be positive and finite")
        inc.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "incidences", inc)
        object.__setattr__(self, "edge_weights", w)

    @classmethod
    def from_edge_lists(cls, num_nodes: int, members, weights=None) -> "Hypergraph":
        """Build from a list of member lists, one per hyperedge."""
        pairs = sorted(
            (int(i), e) for e, nodes in enumerate(members) for i in set(nodes)
        )
        return cls(num_nodes, len(members), _int_pairs(pairs), weights)

    @property
    def nnz(self) -> int:
        return len(self.incidences)

    @property
    def node_idx(self) -> np.ndarray:
        return self.incidences[:, 0]

    @property
    def edge_idx(self) -> np.ndarray:
        return self.incidences[:, 1]

    @cached_property
    def _node_ptr(self) -> np.ndarray:
        return np.searchsorted(self.node_idx, np.arange(self.num_nodes + 1))

    @cached_property
    def _edge_sorted(self) -> tuple:
        order = np.lexsort((self.node_idx, self.edge_idx))
        ptr = np.searchsorted(self.edge_idx[order], np.arange(self.num_edges + 1))
        return order, ptr

    def edges_of(self, node: int) -> np.ndarray:
        lo, hi = self._node_ptr[node], self._node_ptr[node + 1]
        return self.edge_idx[lo:hi]

    def members_of(self, edge: int) -> np.ndarray:
        order, ptr = self._edge_sorted
        return self.node_idx[order[ptr[edge]:ptr[edge + 1]]]

    def to_coo(self, values=None) -> Coo:
        vals = np.ones(self.nnz) if values is None else values
        return Coo(self.num_nodes, self.num_edges, self.node_idx, self.edge_idx, vals)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.num_nodes, self.num_edges))
        out[self.node_idx, self.edge_idx] = 1.0
        return out


@dataclass(frozen=True)
class DegreeVectors:
    node_degrees: np.ndarray
    edge_degrees: np.ndarray


@dataclass(frozen=True)
class SimpleGraph:
    """Plain undirected graph: sorted (u, v) pairs with u < v, no loops."""

    num_nodes: int
    edges: np.ndarray

    def __post_init__(self):
        e = _int_pairs(self.edges)
        if len(e):
            if e.min() < 0 or e.max() >= self.num_nodes:
                raise ValueError("edge endpoint out of range")
            if np.any(e[:, 0] >= e[:, 1]):
                raise ValueError("edges must satisfy u < v (no self-loops)")
            key = e[:, 0] * self.num_nodes + e[:, 1]
            if np.any(np.diff(key) <= 0):
                raise ValueError("edges must be sorted with no duplicates")
        e.setflags(write=False)
        object.__setattr__(self, "edges", e)


@dataclass(frozen=True)
class SubHypergraphView:
    """An extracted neighborhood with bookkeeping back to the parent.

    ``node_map``/``edge_map`` take local indices to global ones (both
    strictly increasing, hence injective).  ``features`` carries the
    feature rows of the selected nodes so the view is self-contained.
    """

    sub: Hypergraph
    features: np.ndarray
    node_map: np.ndarray
    edge_map: np.ndarray
    target_local: int


def compute_degrees(h: Hypergraph) -> DegreeVectors:
    """Weighted node degrees and raw hyperedge cardinalities."""
    node_deg = np.bincount(
        h.node_idx, weights=h.edge_weights[h.edge_idx], minlength=h.num_nodes
    )
    edge_deg = np.bincount(h.edge_idx, minlength=h.num_edges).astype(np.float64)
    return DegreeVectors(node_deg, edge_deg)


def n_hop_nodes(h: Hypergraph, node: int, n: int) -> np.ndarray:
    """Nodes reachable within n hyperedge hops, start included.

    One hop is node -> incident hyperedge -> member node.  Returns a
    sorted index array; always contains ``node`` (even when isolated).
    """
    if not 0 <= node < h.num_nodes:
        raise IndexError(f"node {node} out of range for {h.num_nodes} nodes")
    if n < 0:
        raise ValueError("hop count must be nonnegative")
    seen_n = np.zeros(h.num_nodes, dtype=bool)
    seen_e = np.zeros(h.num_edges, dtype=bool)
    seen_n[node] = True
    frontier = np.array([node], dtype=np.int64)
    for _ in range(n):
        if not len(frontier):
            break
        edges = np.unique(np.concatenate([h.edges_of(i) for i in frontier]))
        edges = edges[~seen_e[edges]]
        seen_e[edges] = True
        if not len(edges):
            break
        members = np.unique(np.concatenate([h.members_of(e) for e in edges]))
        frontier = members[~seen_n[members]]
        seen_n[frontier] = True
    return np.flatnonzero(seen_n)


def hyperedges_touching(h: Hypergraph, nodes) -> np.ndarray:
    """Sorted hyperedge indices with at least one member in ``nodes``."""
    nodes = np.asarray(nodes, dtype=np.int64)
    if len(nodes) and (nodes.min() < 0 or nodes.max() >= h.num_nodes):
        raise IndexError("node index out of range")
    mask = np.zeros(h.num_nodes, dtype=bool)
    mask[nodes] = True
    return np.unique(h.edge_idx[mask[h.node_idx]])


def extract_subhypergraph(h: Hypergraph, x: np.ndarray, node: int, n: int) -> SubHypergraphView:
    """The n-hop computational neighborhood of ``node``.

    Node set is the n-hop ball, edge set is every hyperedge touching it,
    incidences restricted to both.  For a model with at most n layers the
    target's logits computed on the view match the full structure.
    """
    if n < 1:
        raise ValueError("hop count must be >= 1")
    node_set = n_hop_nodes(h, node, n)
    edge_set = hyperedges_touching(h, node_set)
    node_lut = np.full(h.num_nodes, -1, dtype=np.int64)
    node_lut[node_set] = np.arange(len(node_set))
    edge_lut = np.full(h.num_edges, -1, dtype=np.int64)
    edge_lut[edge_set] = np.arange(len(edge_set))
    keep = (node_lut[h.node_idx] >= 0) & (edge_lut[h.edge_idx] >= 0)
    local = np.column_stack((node_lut[h.node_idx[keep]], edge_lut[h.edge_idx[keep]]))
    sub = Hypergraph(len(node_set), len(edge_set), local, h.edge_weights[edge_set])
    return SubHypergraphView(
        sub=sub,
        features=np.asarray(x, dtype=np.float64)[node_set],
        node_map=node_set,
        edge_map=edge_set,
        target_local=int(node_lut[node]),
    )


def full_view(h: Hypergraph, x: np.ndarray, node: int) -> SubHypergraphView:
    """Trivial view covering the whole hypergraph (identity maps)."""
    if not 0 <= node < h.num_nodes:
        raise IndexError(f"node {node} out of range")
    return SubHypergraphView(
        sub=h,
        features=np.asarray(x, dtype=np.float64),
        node_map=np.arange(h.num_nodes, dtype=np.int64),
        edge_map=np.arange(h.num_edges, dtype=np.int64),
        target_local=node,
    )


def neighborhood_conversion(g: SimpleGraph) -> Hypergraph:
    """One hyperedge per node: edge i contains node i and its neighbors."""
    members = [[i] for i in range(g.num_nodes)]
    for u, v in g.edges:
        members[u].append(int(v))
        members[v].append(int(u))
    return Hypergraph.from_edge_lists(g.num_nodes, members)


def star_expansion(h: Hypergraph) -> SimpleGraph:
    """Bipartite expansion: auxiliary node N+e adjacent to members of edge e."""
    pairs = np.column_stack((h.node_idx, h.num_nodes + h.edge_idx))
    return SimpleGraph(h.num_nodes + h.num_edges, pairs)


def remove_incidences(h: Hypergraph, pairs) -> Hypergraph:
    """Drop specific (node, edge) incidences; sizes and weights unchanged."""
    pairs = _int_pairs(pairs)
    key = h.node_idx * max(h.num_edges, 1) + h.edge_idx
    want = pairs[:, 0] * max(h.num_edges, 1) + pairs[:, 1]
    pos = np.searchsorted(key, want)
    ok = (pos < len(key)) & (key[np.minimum(pos, len(key) - 1)] == want) if len(key) else np.zeros(len(want), bool)
    if not np.all(ok):
        bad = pairs[~ok][0]
        raise KeyError(f"incidence ({bad[0]}, {bad[1]}) not present")
    keep = np.ones(h.nnz, dtype=bool)
    keep[pos] = False
    return Hypergraph(h.num_nodes, h.num_edges, h.incidences[keep], h.edge_weights)


def remove_edges(h: Hypergraph, edges) -> Hypergraph:
    """Empty out whole hyperedges; the columns stay (zero degree is guarded downstream)."""
    edges = np.asarray(edges, dtype=np.int64)
    if len(edges) and (edges.min() < 0 or edges.max() >= h.num_edges):
        raise IndexError("edge index out of range")
    drop = np.zeros(h.num_edges, dtype=bool)
    drop[edges] = True
    keep = ~drop[h.edge_idx]
    return Hypergraph(h.num_nodes, h.num_edges, h.incidences[keep], h.edge_weights)
