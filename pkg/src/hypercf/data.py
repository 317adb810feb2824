"""Dataset bundles: the on-disk JSON format, strict validation, and
synthetic generators so the whole suite runs without external data.

Format v1 is a single JSON object with keys ``name``, ``num_nodes``,
``num_features``, ``num_classes``, exactly one of ``edges`` (undirected
pairs) or ``hyperedges`` (member lists), ``features`` (sparse
[node, feature, value] triples), ``labels``, and ``splits``.  Bundles
are kept canonical (sorted triples, sorted u < v edges, sorted members)
so saving is byte-deterministic and round-trips are exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .hypergraph import Hypergraph, SimpleGraph, neighborhood_conversion

SPLIT_TAGS = ("train", "val", "test", "other")

REQUIRED_KEYS = ("name", "num_nodes", "num_features", "num_classes",
                 "features", "labels", "splits")

# rng stream tags
SEED_PLANTED = 201
SEED_BRIDGE = 202


class DatasetFormatError(ValueError):
    """A bundle violated a documented format invariant; message names it."""


@dataclass
class DatasetBundle:
    name: str
    num_nodes: int
    num_features: int
    num_classes: int
    features: list
    labels: list
    splits: list
    edges: list | None = None
    hyperedges: list | None = None


def _fail(msg: str):
    raise DatasetFormatError(msg)


def validate(b: DatasetBundle) -> None:
    if not isinstance(b.name, str) or not b.name:
        _fail("name: must be a nonempty string")
    n, f, c = b.num_nodes, b.num_features, b.num_classes
    for key, v in (("num_nodes", n), ("num_features", f), ("num_classes", c)):
        if not isinstance(v, int) or v < 1:
            _fail(f"{key}: must be a positive integer")
    if (b.edges is None) == (b.hyperedges is None):
        _fail("structure: exactly one of 'edges' or 'hyperedges' required")

    if len(b.labels) != n:
        _fail(f"labels: expected {n} entries, got {len(b.labels)}")
    labels = np.asarray(b.labels)
    if labels.dtype.kind not in "iu":
        _fail("labels: entries must be integers")
    if len(labels) and (labels.min() < 0 or labels.max() >= c):
        _fail(f"labels: value out of range [0, {c})")
    present = np.unique(labels)
    if len(present) != c:
        missing = sorted(set(range(c)) - set(int(x) for x in present))
        _fail(f"labels: class {missing[0]} unused (classes must be dense)")

    if len(b.splits) != n:
        _fail(f"splits: expected {n} entries, got {len(b.splits)}")
    bad = [s for s in b.splits if s not in SPLIT_TAGS]
    if bad:
        _fail(f"splits: unknown tag {bad[0]!r}")

    if b.features:
        arr = np.asarray(b.features, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 3:
            _fail("features: entries must be [node, feature, value] triples")
        ni, fi = arr[:, 0], arr[:, 1]
        if np.any(ni != np.floor(ni)) or np.any(fi != np.floor(fi)):
            _fail("features: node and feature indices must be integers")
        if ni.min() < 0 or ni.max() >= n:
            _fail(f"features: node index out of range [0, {n})")
        if fi.min() < 0 or fi.max() >= f:
            _fail(f"features: feature index out of range [0, {f})")
        if not np.all(np.isfinite(arr[:, 2])):
            _fail("features: non-finite value")
        key = ni.astype(np.int64) * f + fi.astype(np.int64)
        if np.any(np.diff(key) <= 0):
            _fail("features: triples must be sorted by (node, feature) with no duplicates")

    if b.edges is not None and len(b.edges):
        e = np.asarray(b.edges, dtype=np.int64)
        if e.ndim != 2 or e.shape[1] != 2:
            _fail("edges: entries must be [u, v] pairs")
        if e.min() < 0 or e.max() >= n:
            _fail(f"edges: endpoint out of range [0, {n})")
        if np.any(e[:, 0] >= e[:, 1]):
            _fail("edges: pairs must satisfy u < v (no self-loops)")
        key = e[:, 0] * n + e[:, 1]
        if np.any(np.diff(key) <= 0):
            _fail("edges: pairs must be sorted with no duplicates")

    if b.hyperedges is not None:
        for i, members in enumerate(b.hyperedges):
            if not members:
                _fail(f"hyperedges: edge {i} is empty")
            m = np.asarray(members, dtype=np.int64)
            if m.min() < 0 or m.max() >= n:
                _fail(f"hyperedges: edge {i} member out of range [0, {n})")
            if np.any(np.diff(m) <= 0):
                _fail(f"hyperedges: edge {i} members must be sorted with no duplicates")


def load(path) -> DatasetBundle:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DatasetFormatError(f"parse: {exc}") from exc
    if not isinstance(raw, dict):
        _fail("top level: expected a JSON object")
    known = set(REQUIRED_KEYS) | {"edges", "hyperedges"}
    for key in raw:
        if key not in known:
            _fail(f"unknown key {key!r}")
    for key in REQUIRED_KEYS:
        if key not in raw:
            _fail(f"missing key {key!r}")
    b = DatasetBundle(
        name=raw["name"],
        num_nodes=raw["num_nodes"],
        num_features=raw["num_features"],
        num_classes=raw["num_classes"],
        features=raw["features"],
        labels=raw["labels"],
        splits=raw["splits"],
        edges=raw.get("edges"),
        hyperedges=raw.get("hyperedges"),
    )
    validate(b)
    return b


def save(b: DatasetBundle, path) -> None:
    validate(b)
    obj = {
        "name": b.name,
        "num_nodes": b.num_nodes,
        "num_features": b.num_features,
        "num_classes": b.num_classes,
        "features": b.features,
        "labels": b.labels,
        "splits": b.splits,
    }
    if b.edges is not None:
        obj["edges"] = b.edges
    else:
        obj["hyperedges"] = b.hyperedges
    text = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
        fh.write("\n")


def to_structures(b: DatasetBundle):
    """Materialize (hypergraph, dense features, labels, split index map).

    Graph-form bundles pass through the neighborhood conversion (one
    hyperedge per node containing it and its neighbors).
    """
    validate(b)
    if b.edges is not None:
        g = SimpleGraph(b.num_nodes, np.asarray(b.edges, dtype=np.int64).reshape(-1, 2))
        h = neighborhood_conversion(g)
    else:
        h = Hypergraph.from_edge_lists(b.num_nodes, b.hyperedges)
    x = np.zeros((b.num_nodes, b.num_features))
    if b.features:
        arr = np.asarray(b.features, dtype=np.float64)
        x[arr[:, 0].astype(np.int64), arr[:, 1].astype(np.int64)] = arr[:, 2]
    labels = np.asarray(b.labels, dtype=np.int64)
    tags = np.asarray(b.splits)
    splits = {tag: np.flatnonzero(tags == tag) for tag in SPLIT_TAGS}
    return h, x, labels, splits


def _feature_triples(x: np.ndarray) -> list:
    out = []
    for i, j in zip(*np.nonzero(x)):
        out.append([int(i), int(j), float(x[i, j])])
    return out


def _split_block(rng, nodes, tags, frac_train=0.5, frac_val=0.25):
    order = rng.permutation(nodes)
    k_train = max(1, int(len(nodes) * frac_train))
    k_val = max(1, int(len(nodes) * frac_val))
    for i in order[:k_train]:
        tags[i] = "train"
    for i in order[k_train:k_train + k_val]:
        tags[i] = "val"
    for i in order[k_train + k_val:]:
        tags[i] = "test"


def synth_planted(num_nodes: int = 60, num_classes: int = 2,
                  intra_edge_prob: float = 0.8, inter_edge_prob: float = 0.05,
                  feature_noise: float = 0.0, seed: int = 0) -> DatasetBundle:
    """Class-block hypergraph with one-hot(+noise) features.

    Hyperedges are drawn mostly within the planted class blocks, so at
    feature_noise=0 the classes are separable by construction.
    """
    if not (0.0 <= inter_edge_prob < intra_edge_prob <= 1.0):
        raise ValueError("need 0 <= inter_edge_prob < intra_edge_prob <= 1")
    if num_nodes < 4 * num_classes:
        raise ValueError("too few nodes for the requested class count")
    rng = np.random.default_rng(np.random.SeedSequence((seed, SEED_PLANTED)))
    labels = np.sort(np.arange(num_nodes) % num_classes)
    # magnitude 3 keeps full-batch SGD decisive on instances this small
    x = 3.0 * np.eye(num_classes)[labels]
    if feature_noise > 0:
        x = x + feature_noise * rng.standard_normal(x.shape)

    by_class = [np.flatnonzero(labels == c) for c in range(num_classes)]
    hyperedges = []
    for i in range(num_nodes):
        mates = by_class[labels[i]]
        mates = mates[mates != i]
        if rng.random() < intra_edge_prob:
            extra = rng.choice(mates, size=min(int(rng.integers(2, 4)), len(mates)),
                               replace=False)
            hyperedges.append(sorted({i, *extra.tolist()}))
        if rng.random() < inter_edge_prob:
            others = np.delete(np.arange(num_nodes), i)
            extra = rng.choice(others, size=int(rng.integers(2, 4)), replace=False)
            hyperedges.append(sorted({i, *extra.tolist()}))

    tags = [""] * num_nodes
    for c in range(num_classes):
        _split_block(rng, by_class[c], tags, frac_train=0.4, frac_val=0.2)
    return DatasetBundle(
        name=f"planted-s{seed}",
        num_nodes=num_nodes,
        num_features=num_classes,
        num_classes=num_classes,
        features=_feature_triples(x),
        labels=[int(v) for v in labels],
        splits=tags,
        hyperedges=hyperedges,
    )


@dataclass(frozen=True)
class BridgeInfo:
    """Where the planted bridges live, for oracle-style assertions."""

    bridge_nodes: tuple
    bridge_edges: tuple
    decoy_edges: tuple  # one tuple of edge ids per bridge node


def synth_planted_bridge(block_size: int = 16, num_bridges: int = 3,
                         decoys_per_bridge: int = 4, feature_noise: float = 0.0,
                         seed: int = 0):
    """Two class blocks plus feature-free bridge nodes with a known
    unique minimal counterfactual.

    Each bridge node carries ``decoys_per_bridge`` singleton hyperedges
    and one bridge hyperedge into the class-1 block.  Its prediction
    (class 1, inherited through the bridge) flips to class 0 exactly when
    the bridge is cut: with the bridge gone the node aggregates only its
    own all-zero features, giving identically zero logits and the
    tie-break class.  Removing decoys alone never flips it.
    """
    if block_size < 6 or num_bridges < 1 or decoys_per_bridge < 1:
        raise ValueError("need block_size >= 6 and at least one bridge/decoy")
    rng = np.random.default_rng(np.random.SeedSequence((seed, SEED_BRIDGE)))
    bs = block_size
    num_nodes = 2 * bs + num_bridges
    a_nodes = np.arange(bs)
    b_nodes = np.arange(bs, 2 * bs)
    bridge_nodes = list(range(2 * bs, 2 * bs + num_bridges))

    labels = np.zeros(num_nodes, dtype=np.int64)
    labels[b_nodes] = 1
    labels[bridge_nodes] = 1  # what the trained model should predict for them

    x = np.zeros((num_nodes, 2))
    x[a_nodes, 0] = 3.0  # same magnitude as the planted generator
    x[b_nodes, 1] = 3.0
    if feature_noise > 0:
        x[:2 * bs] += feature_noise * rng.standard_normal((2 * bs, 2))

    hyperedges = []
    for start in (0, bs):  # short overlapping runs around each block ring
        for i in range(bs):
            hyperedges.append(sorted({start + i, start + (i + 1) % bs,
                                      start + (i + 2) % bs}))
    bridge_edges, decoy_edges = [], []
    for v in bridge_nodes:
        decoys = []
        for _ in range(decoys_per_bridge):
            decoys.append(len(hyperedges))
            hyperedges.append([v])
        bridge_edges.append(len(hyperedges))
        anchors = rng.choice(b_nodes, size=4, replace=False)
        hyperedges.append(sorted({v, *anchors.tolist()}))
        decoy_edges.append(tuple(decoys))

    tags = [""] * num_nodes
    _split_block(rng, a_nodes, tags)
    _split_block(rng, b_nodes, tags)
    for v in bridge_nodes:
        tags[v] = "test"

    bundle = DatasetBundle(
        name=f"planted-bridge-s{seed}",
        num_nodes=num_nodes,
        num_features=2,
        num_classes=2,
        features=_feature_triples(x),
        labels=[int(v) for v in labels],
        splits=tags,
        hyperedges=hyperedges,
    )
    info = BridgeInfo(tuple(bridge_nodes), tuple(bridge_edges), tuple(decoy_edges))
    return bundle, info
