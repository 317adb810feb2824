"""Gradient-searched counterfactual explanations over the incidence
structure.

Two granularities: ``nhp`` tunes one mask entry per hyperedge incident
to the target node (removing single incidences), ``hp`` tunes one entry
per hyperedge in the target's n-hop neighborhood (removing whole
hyperedges).  The relaxed mask is optimized with momentum gradient
descent on the gated objective; flips are always certified on the
binarized mask, and the returned edit set is re-validated against the
full hypergraph, not just the extracted view.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tape, Var
from .hypergraph import (Hypergraph, SubHypergraphView, extract_subhypergraph,
                         full_view, hyperedges_touching, n_hop_nodes,
                         remove_edges, remove_incidences)
from .model import ModelParams, forward, forward_logits, predict

VARIANTS = ("nhp", "hp")


class NothingTunable(ValueError):
    """The variant's tunable set is empty; no counterfactual is possible."""


@dataclass(frozen=True)
class ExplainConfig:
    iterations: int = 500
    learning_rate: float = 0.1
    momentum: float = 0.9
    beta: float = 0.5
    threshold: float = 0.5
    hop_count: int = 3
    seed: int = 0
    search_scope: str = "view"  # "view": optimize on the n-hop extract; "full": whole structure
    init_logit: float = 3.0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must lie in (0, 1)")
        if self.beta < 0 or self.learning_rate <= 0 or not 0.0 <= self.momentum < 1.0:
            raise ValueError("invalid optimizer constants")
        if self.hop_count < 1:
            raise ValueError("hop_count must be >= 1")
        if self.search_scope not in ("view", "full"):
            raise ValueError(f"unknown search_scope {self.search_scope!r}")


@dataclass
class PerturbationState:
    """Tunable pre-sigmoid mask entries plus their incidence coordinates.

    ``entry_map[t]`` lists positions into the view's incidence array
    governed by tunable t; ``index_map`` is the inverse (position ->
    tunable, -1 where frozen at 1).  For ``hp``, ``tunable_edges`` holds
    the local hyperedge id behind each tunable.
    """

    variant: str
    tunable_logits: np.ndarray
    entry_map: tuple
    index_map: np.ndarray
    tunable_edges: np.ndarray | None = None


@dataclass(frozen=True)
class CounterfactualResult:
    node: int
    variant: str
    original_class: int
    new_class: int
    size: int
    found_at_iteration: int
    wall_time: float
    removed_incidences: tuple | None = None  # nhp: global (node, edge) pairs
    removed_edges: tuple | None = None       # hp: global edge indices


def init_state(view: SubHypergraphView, variant: str, cfg: ExplainConfig) -> PerturbationState:
    """Near-identity mask over the variant's tunable set."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    sub = view.sub
    index_map = np.full(sub.nnz, -1, dtype=np.int64)
    tunable_edges = None
    if variant == "nhp":
        positions = np.flatnonzero(sub.node_idx == view.target_local)
        if not len(positions):
            raise NothingTunable("target node has no incidences")
        entry_map = tuple(np.array([p]) for p in positions)
    else:
        reach = n_hop_nodes(sub, view.target_local, cfg.hop_count)
        tunable_edges = hyperedges_touching(sub, reach)
        if not len(tunable_edges):
            raise NothingTunable("no hyperedge lies in the target's neighborhood")
        entry_map = tuple(np.flatnonzero(sub.edge_idx == e) for e in tunable_edges)
    for t, positions in enumerate(entry_map):
        index_map[positions] = t
    return PerturbationState(
        variant=variant,
        tunable_logits=np.full(len(entry_map), float(cfg.init_logit)),
        entry_map=entry_map,
        index_map=index_map,
        tunable_edges=tunable_edges,
    )


def _soft_values(state: PerturbationState) -> np.ndarray:
    """Relaxed mask as one value per view incidence (frozen entries 1)."""
    soft = 1.0 / (1.0 + np.exp(-state.tunable_logits))
    vals = np.ones(len(state.index_map))
    hit = state.index_map >= 0
    vals[hit] = soft[state.index_map[hit]]
    return vals


def lift_soft(view: SubHypergraphView, state: PerturbationState) -> np.ndarray:
    """Dense mask: ones except sigmoid values at the tunable coordinates.

    nhp touches only the target node's row; hp sets whole columns to the
    hyperedge's value.
    """
    sub = view.sub
    mask = np.ones((sub.num_nodes, sub.num_edges))
    soft = 1.0 / (1.0 + np.exp(-state.tunable_logits))
    if state.variant == "nhp":
        for t, positions in enumerate(state.entry_map):
            for p in positions:
                mask[sub.node_idx[p], sub.edge_idx[p]] = soft[t]
    else:
        for t, e in enumerate(state.tunable_edges):
            mask[:, e] = soft[t]
    return mask


def binarize(state: PerturbationState, threshold: float):
    """Threshold the relaxed mask (ties kept).

    Returns (binary per-incidence values, removed tunable ids).
    """
    soft = 1.0 / (1.0 + np.exp(-state.tunable_logits))
    removed = np.flatnonzero(soft < threshold)
    vals = np.ones(len(state.index_map))
    for t in removed:
        vals[state.entry_map[t]] = 0.0
    return vals, removed


def cf_loss(view: SubHypergraphView, params: ModelParams, state: PerturbationState,
            original_class: int, beta: float, tape: Tape, gate: float | None = None):
    """Gated counterfactual objective; returns (loss, logits leaf).

    gate is the indicator that the binarized mask has not yet flipped the
    prediction; pass it explicitly to hold it fixed (finite-difference
    checks), otherwise it is evaluated here.  Gradients flow through the
    soft prediction and mask-distance terms only.
    """
    if gate is None:
        bin_vals, removed = binarize(state, 0.5)
        if len(removed):
            probs, _ = forward(view.sub, view.features, params, soft_mask=bin_vals)
            gate = 0.0 if int(np.argmax(probs[view.target_local])) != original_class else 1.0
        else:
            gate = 1.0
    leaf = tape.leaf(state.tunable_logits)
    soft = ad.sigmoid(leaf)
    vals = ad.gather(soft, state.index_map, fill=1.0)
    logits = forward_logits(view.sub, view.features, params, values=vals)
    logp = ad.log_softmax_rows(logits)
    pick = np.zeros(logits.value.shape)
    pick[view.target_local, original_class] = 1.0
    pred_term = ad.sum_all(ad.mul(logp, Var(pick)))
    dist_term = ad.l1_norm(ad.add(Var(np.ones(len(state.index_map))), ad.smul(vals, -1.0)))
    loss = ad.add(ad.smul(pred_term, float(gate)), ad.smul(dist_term, float(beta)))
    return loss, leaf


def _flip_check(view, params, state, threshold, yhat, cache):
    """Binarize and test the discrete flip on the view; memoized per edit set."""
    bin_vals, removed = binarize(state, threshold)
    key = tuple(int(t) for t in removed)
    if key not in cache:
        if not key:
            cache[key] = False
        else:
            probs, _ = forward(view.sub, view.features, params, soft_mask=bin_vals)
            cache[key] = int(np.argmax(probs[view.target_local])) != yhat
    return cache[key], key


def _to_global(view, state, removed_ids):
    if state.variant == "nhp":
        pairs = []
        for t in removed_ids:
            p = int(state.entry_map[t][0])
            pairs.append((int(view.node_map[view.sub.node_idx[p]]),
                          int(view.edge_map[view.sub.edge_idx[p]])))
        return tuple(sorted(pairs))
    return tuple(sorted(int(view.edge_map[state.tunable_edges[t]]) for t in removed_ids))


def apply_result(h: Hypergraph, result: CounterfactualResult) -> Hypergraph:
    """Re-apply a result's edit set to the full structure."""
    if result.variant == "nhp":
        return remove_incidences(h, list(result.removed_incidences))
    return remove_edges(h, list(result.removed_edges))


def explain(h: Hypergraph, x, params: ModelParams, node: int, variant: str,
            cfg: ExplainConfig) -> CounterfactualResult | None:
    """Momentum-gradient counterfactual search for one node.

    Runs cfg.iterations steps, tracking every iteration whose binarized
    mask flips the view prediction; returns the smallest edit set (ties:
    earliest iteration) that also flips the prediction on the full
    hypergraph, or None.  Deterministic: the loop itself draws no
    randomness.
    """
    t0 = time.perf_counter()
    yhat_full, _ = predict(h, x, params, node)
    if cfg.search_scope == "view":
        view = extract_subhypergraph(h, x, node, cfg.hop_count)
    else:
        view = full_view(h, x, node)
    state = init_state(view, variant, cfg)

    probs, _ = forward(view.sub, view.features, params)
    yhat = int(np.argmax(probs[view.target_local]))
    if yhat != yhat_full:
        raise RuntimeError("internal: view prediction diverged from full structure")

    velocity = np.zeros_like(state.tunable_logits)
    cache: dict = {}
    candidates: dict = {}  # edit set -> (size, iteration)
    flipped, _ = _flip_check(view, params, state, cfg.threshold, yhat, cache)
    for it in range(1, cfg.iterations + 1):
        tape = Tape()
        loss, leaf = cf_loss(view, params, state, yhat, cfg.beta, tape,
                             gate=0.0 if flipped else 1.0)
        tape.backward(loss)
        velocity = cfg.momentum * velocity + tape.grad(leaf)
        state.tunable_logits = state.tunable_logits - cfg.learning_rate * velocity
        flipped, key = _flip_check(view, params, state, cfg.threshold, yhat, cache)
        if flipped and key not in candidates:
            candidates[key] = (len(key), it)

    for key, (size, it) in sorted(candidates.items(), key=lambda kv: (kv[1][0], kv[1][1])):
        removal = _to_global(view, state, key)
        if state.variant == "nhp":
            edited = remove_incidences(h, list(removal))
        else:
            edited = remove_edges(h, list(removal))
        new_class, _ = predict(edited, x, params, node)
        if new_class != yhat_full:
            return CounterfactualResult(
                node=node,
                variant=variant,
                original_class=yhat_full,
                new_class=new_class,
                size=size,
                found_at_iteration=it,
                wall_time=time.perf_counter() - t0,
                removed_incidences=removal if variant == "nhp" else None,
                removed_edges=removal if variant == "hp" else None,
            )
    return None
