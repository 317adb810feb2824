"""Convert the published citation-network distributions into dataset JSON.

Source layout, one directory with eight files per dataset name:

    ind.<name>.x          scipy sparse features of the labeled training rows
    ind.<name>.tx         scipy sparse features of the test rows
    ind.<name>.allx       features of all non-test rows (x is its prefix)
    ind.<name>.y/.ty/.ally  one-hot label arrays aligned with the above
    ind.<name>.graph      dict: node id -> neighbor id list
    ind.<name>.test.index test node ids, file order, one per line

All pickles were written under Python 2, hence latin1 decoding. Node ids
0..len(allx)-1 are the allx rows; test ids continue from there but the
test.index file is shuffled, so tx row k belongs to the node named on
line k. CiteSeer's test ids additionally have gaps (papers with no
features); the missing ids become zero-feature, label-0 filler nodes
tagged split "other".
"""

from __future__ import annotations

import hashlib
import io
import json
import os
import pickle
from dataclasses import asdict, dataclass

import numpy as np
import scipy.sparse as sp

SUFFIXES = ("x", "y", "tx", "ty", "allx", "ally", "graph", "test.index")

# published statistics the strict path enforces
EXPECTED_STATS = {
    "cora": {"nodes": 2708, "features": 1433, "classes": 7, "train": 140},
    "citeseer": {"nodes": 3327, "features": 3703, "classes": 6, "train": 120},
    "pubmed": {"nodes": 19717, "features": 500, "classes": 3, "train": 60},
}
VAL_SIZE = 500


class SourceError(ValueError):
    """Missing or corrupt source data; the message carries checksum context."""


@dataclass
class RawParts:
    x: sp.spmatrix
    y: np.ndarray
    tx: sp.spmatrix
    ty: np.ndarray
    allx: sp.spmatrix
    ally: np.ndarray
    graph: dict
    test_index: np.ndarray
    checksums: dict


@dataclass
class ConversionManifest:
    dataset: str
    source_files: dict  # filename -> {"sha256", "bytes"}
    nodes: int
    features: int
    classes: int
    edges: int
    splits: dict
    output_sha256: str


# old pickles reference pre-1.8 scipy module paths
_LEGACY_MODULES = {
    "scipy.sparse.csr": "scipy.sparse",
    "scipy.sparse.csc": "scipy.sparse",
    "scipy.sparse.coo": "scipy.sparse",
    "scipy.sparse.lil": "scipy.sparse",
}


class _CompatUnpickler(pickle.Unpickler):
    def find_class(self, module, name):
        return super().find_class(_LEGACY_MODULES.get(module, module), name)


def _unpickle(blob: bytes):
    return _CompatUnpickler(io.BytesIO(blob), encoding="latin1").load()


def read_planetoid_dir(source_dir, name: str) -> RawParts:
    """Load and checksum the eight source files; fail with diagnostics."""
    blobs, checksums = {}, {}
    for suffix in SUFFIXES:
        path = os.path.join(source_dir, f"ind.{name}.{suffix}")
        if not os.path.isfile(path):
            raise SourceError(f"missing source file: {path}")
        with open(path, "rb") as fh:
            blob = fh.read()
        blobs[suffix] = (path, blob)
        checksums[os.path.basename(path)] = {
            "sha256": hashlib.sha256(blob).hexdigest(),
            "bytes": len(blob),
        }

    def corrupt(suffix, exc):
        path, blob = blobs[suffix]
        digest = hashlib.sha256(blob).hexdigest()
        return SourceError(
            f"corrupt source file {path} (sha256 {digest}): {exc}")

    parts = {}
    for suffix in ("x", "y", "tx", "ty", "allx", "ally", "graph"):
        try:
            parts[suffix] = _unpickle(blobs[suffix][1])
        except Exception as exc:  # noqa: BLE001 - any unpickle failure is corrupt input
            raise corrupt(suffix, exc) from exc
    for suffix in ("x", "tx", "allx"):
        if not sp.issparse(parts[suffix]):
            raise corrupt(suffix, f"expected a scipy sparse matrix, got {type(parts[suffix]).__name__}")
    for suffix in ("y", "ty", "ally"):
        arr = np.asarray(parts[suffix])
        if arr.ndim != 2:
            raise corrupt(suffix, f"expected a 2-d one-hot array, got shape {arr.shape}")
        parts[suffix] = arr
    if not isinstance(parts["graph"], dict):
        raise corrupt("graph", f"expected a dict, got {type(parts['graph']).__name__}")

    try:
        lines = blobs["test.index"][1].decode("ascii").split()
        test_index = np.array([int(tok) for tok in lines], dtype=np.int64)
    except (UnicodeDecodeError, ValueError) as exc:
        raise corrupt("test.index", exc) from exc
    if len(test_index) == 0:
        raise corrupt("test.index", "no test ids")

    return RawParts(parts["x"], parts["y"], parts["tx"], parts["ty"],
                    parts["allx"], parts["ally"], parts["graph"],
                    test_index, checksums)


def _check(cond, msg):
    if not cond:
        raise SourceError(msg)


def assemble(name: str, parts: RawParts, val_size: int = VAL_SIZE):
    """Pure assembly: (bundle dict in dataset format v1, emitted stats)."""
    allx = parts.allx.tocsr().astype(np.float64)
    tx = parts.tx.tocsr().astype(np.float64)
    ally = parts.ally
    ty = parts.ty
    test_idx = np.asarray(parts.test_index, dtype=np.int64)

    num_features = allx.shape[1]
    num_classes = ally.shape[1]
    _check(tx.shape[1] == num_features,
           f"feature width mismatch: allx {num_features}, tx {tx.shape[1]}")
    _check(ty.shape[1] == num_classes,
           f"class count mismatch: ally {num_classes}, ty {ty.shape[1]}")
    _check(allx.shape[0] == ally.shape[0],
           f"allx has {allx.shape[0]} rows but ally {ally.shape[0]}")
    _check(tx.shape[0] == ty.shape[0],
           f"tx has {tx.shape[0]} rows but ty {ty.shape[0]}")
    _check(len(test_idx) == tx.shape[0],
           f"test.index names {len(test_idx)} nodes but tx has {tx.shape[0]} rows")
    _check(len(np.unique(test_idx)) == len(test_idx), "duplicate test ids")
    train_len = parts.y.shape[0]
    _check((parts.x.tocsr().astype(np.float64) != allx[:train_len]).nnz == 0,
           "x is not the head of allx")
    _check(np.array_equal(np.asarray(parts.y), ally[:train_len]),
           "y is not the head of ally")

    base = allx.shape[0]
    lo, hi = int(test_idx.min()), int(test_idx.max())
    _check(lo == base, f"test ids start at {lo}, expected {base}")
    n = hi + 1

    feat = sp.lil_matrix((n, num_features))
    feat[:base] = allx
    labels = np.zeros(n, dtype=np.int64)
    labels[:base] = np.argmax(ally, axis=1)
    splits = ["other"] * n
    for k, t in enumerate(test_idx):
        feat[t] = tx[k]
        labels[t] = int(np.argmax(ty[k]))
        splits[t] = "test"
    # ids inside [base, n) absent from test.index stay zero rows / "other"

    _check(train_len + val_size <= base,
           f"train ({train_len}) + val ({val_size}) exceed the {base} non-test rows")
    for i in range(train_len):
        splits[i] = "train"
    for i in range(train_len, train_len + val_size):
        splits[i] = "val"

    used = np.unique(labels)
    _check(len(used) == num_classes,
           f"labels use {len(used)} of {num_classes} classes")

    pairs = set()
    for u, nbrs in parts.graph.items():
        u = int(u)
        _check(0 <= u < n, f"graph node {u} out of range [0, {n})")
        for v in nbrs:
            v = int(v)
            _check(0 <= v < n, f"graph neighbor {v} out of range [0, {n})")
            if u != v:
                pairs.add((min(u, v), max(u, v)))
    edges = sorted(pairs)

    coo = feat.tocoo()
    order = np.lexsort((coo.col, coo.row))
    triples = [[int(coo.row[k]), int(coo.col[k]), float(coo.data[k])]
               for k in order if coo.data[k] != 0.0]

    bundle = {
        "name": name,
        "num_nodes": n,
        "num_features": int(num_features),
        "num_classes": int(num_classes),
        "features": triples,
        "labels": [int(v) for v in labels],
        "splits": splits,
        "edges": [[int(u), int(v)] for u, v in edges],
    }
    stats = {
        "nodes": n,
        "features": int(num_features),
        "classes": int(num_classes),
        "edges": len(edges),
        "splits": {
            "train": train_len,
            "val": val_size,
            "test": len(test_idx),
            "other": n - train_len - val_size - len(test_idx),
        },
    }
    return bundle, stats


def convert(source_dir, name: str, out_path, val_size: int = VAL_SIZE,
            strict: bool = True) -> ConversionManifest:
    """Read, assemble, enforce published counts, write bundle + manifest."""
    if strict and name not in EXPECTED_STATS:
        raise SourceError(
            f"unknown dataset {name!r}; expected one of {sorted(EXPECTED_STATS)}")
    parts = read_planetoid_dir(source_dir, name)
    bundle, stats = assemble(name, parts, val_size=val_size)
    if strict:
        exp = EXPECTED_STATS[name]
        bad = [f"{key} {stats[key]} != {exp[key]}"
               for key in ("nodes", "features", "classes")
               if stats[key] != exp[key]]
        if stats["splits"]["train"] != exp["train"]:
            bad.append(f"train split {stats['splits']['train']} != {exp['train']}")
        if bad:
            raise SourceError(
                "converted counts do not match the published statistics: "
                + "; ".join(bad))

    text = json.dumps(bundle, sort_keys=True, separators=(",", ":")) + "\n"
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(text)
    manifest = ConversionManifest(
        dataset=name,
        source_files=parts.checksums,
        output_sha256=hashlib.sha256(text.encode("utf-8")).hexdigest(),
        **stats,
    )
    with open(str(out_path) + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(asdict(manifest), fh, sort_keys=True, indent=1)
        fh.write("\n")
    return manifest
