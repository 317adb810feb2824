"""Exhaustive minimality oracle, random-perturbation baseline, and the
closed-form Bernoulli success bound for random search.

All three operate on the full hypergraph, never on an extracted view:
the oracle certifies witnesses by direct forward re-evaluation and its
completeness claim must not inherit any locality argument.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

import numpy as np

from .explainer import CounterfactualResult
from .hypergraph import (Hypergraph, hyperedges_touching, n_hop_nodes,
                         remove_edges, remove_incidences)
from .model import ModelParams, predict

SEED_BASELINE = 301


class SearchSpaceTooLarge(ValueError):
    """Tunable set exceeds the enumeration cap; use the gradient method."""


@dataclass(frozen=True)
class OracleResult:
    """Certified minimal counterfactual size.

    minimal_size None means even removing everything tunable fails.
    ``witnesses`` lists every removal set at the minimal cardinality
    (incidence pairs for nhp, edge ids for hp), in enumeration order.
    ``nodes_enumerated`` counts subsets actually evaluated.
    """

    minimal_size: int | None
    witnesses: tuple
    nodes_enumerated: int


def _tunable_items(h: Hypergraph, node: int, variant: str, hop_count: int):
    if variant == "nhp":
        edges = h.edges_of(node)
        return [(int(node), int(e)) for e in edges]
    if variant == "hp":
        reach = n_hop_nodes(h, node, hop_count)
        return [int(e) for e in hyperedges_touching(h, reach)]
    raise ValueError(f"unknown variant {variant!r}")


def _apply_items(h: Hypergraph, variant: str, items) -> Hypergraph:
    if variant == "nhp":
        return remove_incidences(h, list(items))
    return remove_edges(h, list(items))


def brute_force_min_cf(h: Hypergraph, x, params: ModelParams, node: int,
                       variant: str, max_degree: int = 12,
                       hop_count: int = 3) -> OracleResult:
    """Enumerate removal subsets by increasing cardinality, lexicographic
    within each, stopping at the first cardinality containing a flip."""
    items = _tunable_items(h, node, variant, hop_count)
    if len(items) > max_degree:
        raise SearchSpaceTooLarge(
            f"{len(items)} tunable entries exceeds cap {max_degree}")
    yhat, _ = predict(h, x, params, node)
    tried = 0
    for size in range(1, len(items) + 1):
        witnesses = []
        for combo in itertools.combinations(items, size):
            tried += 1
            edited = _apply_items(h, variant, combo)
            new_class, _ = predict(edited, x, params, node)
            if new_class != yhat:
                witnesses.append(tuple(combo))
        if witnesses:
            return OracleResult(size, tuple(witnesses), tried)
    return OracleResult(None, (), tried)


def random_baseline(h: Hypergraph, x, params: ModelParams, node: int,
                    variant: str, attempts: int, seed: int,
                    hop_count: int = 3) -> CounterfactualResult | None:
    """Keep each tunable entry with probability 1/2, independently per
    attempt; return the smallest valid counterfactual found.

    Attempts are never deduplicated: each is an independent Bernoulli
    trial, matching the model behind bernoulli_lower_bound.  An attempt
    is only forward-evaluated when it could beat the current best.
    """
    if attempts < 1:
        raise ValueError("attempts must be >= 1")
    t0 = time.perf_counter()
    items = _tunable_items(h, node, variant, hop_count)
    if not items:
        return None
    yhat, _ = predict(h, x, params, node)
    rng = np.random.default_rng(np.random.SeedSequence((seed, SEED_BASELINE)))
    best = None  # (size, attempt, removal items)
    for attempt in range(1, attempts + 1):
        keep = rng.integers(0, 2, size=len(items)).astype(bool)
        removal = [items[i] for i in np.flatnonzero(~keep)]
        if not removal:
            continue
        if best is not None and len(removal) >= best[0]:
            continue
        edited = _apply_items(h, variant, removal)
        new_class, _ = predict(edited, x, params, node)
        if new_class != yhat:
            best = (len(removal), attempt, removal, new_class)
    if best is None:
        return None
    size, attempt, removal, new_class = best
    removal = tuple(sorted(removal))
    return CounterfactualResult(
        node=node,
        variant=variant,
        original_class=yhat,
        new_class=new_class,
        size=size,
        found_at_iteration=attempt,
        wall_time=time.perf_counter() - t0,
        removed_incidences=removal if variant == "nhp" else None,
        removed_edges=removal if variant == "hp" else None,
    )


def bernoulli_lower_bound(d_v: int, t: int) -> float:
    """Probability that t half-keep draws over d_v entries hit one
    specific subset at least once: 1 - (1 - 2^-d_v)^t."""
    if d_v < 0 or t < 0:
        raise ValueError("degree and attempts must be nonnegative")
    return float(1.0 - (1.0 - 2.0 ** (-d_v)) ** t)
