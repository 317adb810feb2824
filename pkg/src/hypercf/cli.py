"""Operator-facing command line.

Subcommands: train, explain, oracle, baseline, convert, bench, synth.
Every run directory receives a config.json echoing the full effective
configuration, and all randomness fans out from the single --seed flag,
so reruns with the same config reproduce outputs (wall-time fields are
the documented exception).

Exit codes: 0 success, 2 usage, 3 data/configuration failure, 4 numeric
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict

import numpy as np

from . import __version__, autodiff, baselines, data, explainer, metrics, model
from .data import DatasetFormatError
from .hypergraph import (SimpleGraph, extract_subhypergraph, full_view,
                         neighborhood_conversion, star_expansion)

EXIT_OK = 0
EXIT_DATA = 3
EXIT_NUMERIC = 4

SEED_NODE_STREAM = 401


class DataError(ValueError):
    """CLI-level data/configuration failure (exit code 3)."""


# ---------------------------------------------------------------------------
# shared plumbing


def _load_structures(path):
    bundle = data.load(path)
    h, x, labels, splits = data.to_structures(bundle)
    return bundle, h, x, labels, splits


def _load_model(path, bundle, x):
    params = model.load_checkpoint(path)
    if params.layer_dims[0] != x.shape[1]:
        raise DataError(
            f"checkpoint expects {params.layer_dims[0]} features, dataset has {x.shape[1]}")
    if params.num_classes != bundle.num_classes:
        raise DataError(
            f"checkpoint expects {params.num_classes} classes, dataset has {bundle.num_classes}")
    return params


def _select_nodes(selector: str, splits) -> list:
    if selector == "all-test":
        return [int(i) for i in splits["test"]]
    selector = selector.strip()
    if not selector:
        return []
    try:
        return [int(tok) for tok in selector.split(",")]
    except ValueError as exc:
        raise DataError(f"bad --nodes value {selector!r}") from exc


def _write_config(out_dir, command: str, cfg: dict) -> None:
    os.makedirs(out_dir, exist_ok=True)
    payload = {"command": command, "version": __version__, **cfg}
    with open(os.path.join(out_dir, "config.json"), "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _write_jsonl(path, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True))
            fh.write("\n")


def _node_seed(seed: int, node: int) -> int:
    return int(np.random.SeedSequence((seed, SEED_NODE_STREAM, node)).generate_state(1)[0])


def _empty_reports(out_dir, dataset_name, method, variant, cfg_echo):
    _write_config(out_dir, method, cfg_echo)
    _write_jsonl(os.path.join(out_dir, "results.jsonl"), [])
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        json.dump({"dataset": dataset_name, "method": method, "variant": variant,
                   "num_records": 0}, fh, sort_keys=True, indent=1)
        fh.write("\n")
    metrics.write_report_csv([], os.path.join(out_dir, "report.csv"))


def _emit_reports(out_dir, records_json, mrecords, dataset_name, method, variant, cfg_echo):
    _write_config(out_dir, method, cfg_echo)
    _write_jsonl(os.path.join(out_dir, "results.jsonl"), records_json)
    report = metrics.aggregate(mrecords, dataset_name, method, variant, cfg_echo)
    metrics.write_report_json(report, os.path.join(out_dir, "report.json"))
    metrics.write_report_csv([report], os.path.join(out_dir, "report.csv"))
    metrics.write_size_histogram(mrecords, os.path.join(out_dir, "size_histogram.csv"))
    return report


# ---------------------------------------------------------------------------
# explanation workers (shared by explain and bench)

_CTX: dict = {}


def _worker_init(payload):
    _CTX.update(payload)


def _result_fields(result):
    if result is None:
        return {"found": False, "new_class": None, "size": None,
                "found_at_iteration": None, "removed_incidences": None,
                "removed_edges": None, "wall_time_s": None}
    return {
        "found": True,
        "new_class": result.new_class,
        "size": result.size,
        "found_at_iteration": result.found_at_iteration,
        "removed_incidences": [list(p) for p in result.removed_incidences]
        if result.removed_incidences is not None else None,
        "removed_edges": list(result.removed_edges)
        if result.removed_edges is not None else None,
        "wall_time_s": result.wall_time,
    }


def _explain_one(task):
    node, variant, cfg_kw = task
    h, x, params = _CTX["h"], _CTX["x"], _CTX["params"]
    cfg = explainer.ExplainConfig(**cfg_kw)
    note = None
    original_class, _ = model.predict(h, x, params, node)
    try:
        result = explainer.explain(h, x, params, node, variant, cfg)
    except explainer.NothingTunable as exc:
        result, note = None, str(exc)
    if cfg.search_scope == "view":
        view = extract_subhypergraph(h, x, node, cfg.hop_count)
    else:
        view = full_view(h, x, node)
    den_sub, den_full = metrics.scope_denominators(h, view, variant)
    rec = {
        "dataset": _CTX["dataset"],
        "method": "gradient",
        "variant": variant,
        "node": node,
        "original_class": original_class,
        "denominator_sub": den_sub,
        "denominator_full": den_full,
        "config": cfg_kw,
        **_result_fields(result),
    }
    if note:
        rec["note"] = note
    if result is not None:
        rec["sparsity_sub"] = metrics.sparsity(result.size, den_sub)
        rec["sparsity_full"] = metrics.sparsity(result.size, den_full)
    return rec


def _run_tasks(payload, tasks, jobs: int):
    if jobs <= 1 or len(tasks) <= 1:
        _worker_init(payload)
        return [_explain_one(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs, initializer=_worker_init,
                             initargs=(payload,)) as ex:
        return list(ex.map(_explain_one, tasks))


def _to_metric_records(records_json):
    out = []
    for rec in records_json:
        out.append(metrics.ExplanationRecord(
            node=rec["node"],
            found=rec["found"],
            size=rec["size"] or 0,
            denominator_sub=rec["denominator_sub"],
            denominator_full=rec["denominator_full"],
            wall_time=rec.get("wall_time_s") or 0.0,
        ))
    return out


# ---------------------------------------------------------------------------
# subcommands


def cmd_train(args) -> int:
    bundle, h, x, labels, splits = _load_structures(args.dataset)
    cfg = model.TrainConfig(epochs=args.epochs, learning_rate=args.learning_rate,
                            weight_decay=args.weight_decay, seed=args.seed)
    log_rows = []

    def log_cb(epoch, loss, val_acc):
        log_rows.append((epoch, loss, val_acc))

    params = model.train(h, x, labels, splits["train"], cfg,
                         val_nodes=splits["val"], log_cb=log_cb)
    ckpt_dir = os.path.dirname(os.path.abspath(args.out_checkpoint))
    os.makedirs(ckpt_dir, exist_ok=True)
    model.save_checkpoint(params, args.out_checkpoint)
    stem, _ = os.path.splitext(args.out_checkpoint)
    with open(stem + ".log.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "loss", "val_accuracy"])
        for row in log_rows:
            writer.writerow(row)
    _write_config(ckpt_dir, "train", {
        "dataset": args.dataset, "out_checkpoint": args.out_checkpoint,
        "epochs": cfg.epochs, "learning_rate": cfg.learning_rate,
        "weight_decay": cfg.weight_decay, "seed": cfg.seed,
    })
    final_val = log_rows[-1][2] if log_rows else None
    print(f"trained {cfg.epochs} epochs on {bundle.name}; "
          f"final val accuracy: {final_val}")
    return EXIT_OK


def _explain_cfg_kw(args) -> dict:
    return {
        "iterations": args.iterations,
        "learning_rate": args.learning_rate,
        "momentum": args.momentum,
        "beta": args.beta,
        "threshold": args.threshold,
        "hop_count": args.hop_count,
        "seed": args.seed,
        "search_scope": args.search_scope,
    }


def cmd_explain(args) -> int:
    bundle, h, x, labels, splits = _load_structures(args.dataset)
    params = _load_model(args.checkpoint, bundle, x)
    nodes = _select_nodes(args.nodes, splits)
    cfg_kw = _explain_cfg_kw(args)
    cfg_echo = {"dataset": args.dataset, "checkpoint": args.checkpoint,
                "variant": args.variant, "nodes": args.nodes, "jobs": args.jobs,
                **cfg_kw}
    if not nodes:
        _empty_reports(args.out_dir, bundle.name, "gradient", args.variant, cfg_echo)
        print("no nodes requested; empty report written")
        return EXIT_OK
    payload = {"h": h, "x": x, "params": params, "dataset": bundle.name}
    tasks = [(node, args.variant, cfg_kw) for node in nodes]
    records_json = _run_tasks(payload, tasks, args.jobs)
    report = _emit_reports(args.out_dir, records_json, _to_metric_records(records_json),
                           bundle.name, "gradient", args.variant, cfg_echo)
    print(f"{bundle.name} {args.variant}: accuracy {report.accuracy:.3f} "
          f"over {report.num_records} nodes; mean size {report.size_mean}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    bundle, h, x, labels, splits = _load_structures(args.dataset)
    params = _load_model(args.checkpoint, bundle, x)
    nodes = _select_nodes(args.nodes, splits)
    cfg_echo = {"dataset": args.dataset, "checkpoint": args.checkpoint,
                "variant": args.variant, "nodes": args.nodes,
                "max_degree": args.max_degree, "hop_count": args.hop_count}
    if not nodes:
        _empty_reports(args.out_dir, bundle.name, "oracle", args.variant, cfg_echo)
        print("no nodes requested; empty report written")
        return EXIT_OK
    records_json, mrecords = [], []
    for node in nodes:
        view = extract_subhypergraph(h, x, node, args.hop_count)
        den_sub, den_full = metrics.scope_denominators(h, view, args.variant)
        rec = {"dataset": bundle.name, "method": "oracle", "variant": args.variant,
               "node": node, "denominator_sub": den_sub, "denominator_full": den_full}
        try:
            res = baselines.brute_force_min_cf(h, x, params, node, args.variant,
                                               max_degree=args.max_degree,
                                               hop_count=args.hop_count)
            rec.update({
                "found": res.minimal_size is not None,
                "size": res.minimal_size,
                "witnesses": [list(map(list, w)) if args.variant == "nhp" else list(w)
                              for w in res.witnesses],
                "nodes_enumerated": res.nodes_enumerated,
            })
            if res.minimal_size is not None:
                rec["sparsity_sub"] = metrics.sparsity(res.minimal_size, den_sub)
                rec["sparsity_full"] = metrics.sparsity(res.minimal_size, den_full)
        except baselines.SearchSpaceTooLarge as exc:
            rec.update({"found": False, "size": None, "skipped": str(exc)})
        records_json.append(rec)
        mrecords.append(metrics.ExplanationRecord(
            node=node, found=bool(rec.get("found")), size=rec.get("size") or 0,
            denominator_sub=den_sub, denominator_full=den_full))
    report = _emit_reports(args.out_dir, records_json, mrecords,
                           bundle.name, "oracle", args.variant, cfg_echo)
    print(f"oracle {args.variant}: minimal CF found for "
          f"{report.accuracy:.3f} of {report.num_records} nodes")
    if args.explainer_results:
        _gap_report(args, records_json)
    return EXIT_OK


def _gap_report(args, oracle_records) -> None:
    by_node = {}
    with open(args.explainer_results, "r", encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            if rec.get("found"):
                by_node[rec["node"]] = rec["size"]
    gaps = []
    for rec in oracle_records:
        if rec.get("found") and rec["node"] in by_node:
            gaps.append({"node": rec["node"], "oracle_size": rec["size"],
                         "explainer_size": by_node[rec["node"]],
                         "gap": by_node[rec["node"]] - rec["size"]})
    mean_gap = float(np.mean([g["gap"] for g in gaps])) if gaps else None
    path = os.path.join(args.out_dir, "gap_report.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"mean_gap": mean_gap, "num_compared": len(gaps), "per_node": gaps},
                  fh, sort_keys=True, indent=1)
        fh.write("\n")
    print(f"minimality gap: mean {mean_gap} over {len(gaps)} nodes")


def cmd_baseline(args) -> int:
    bundle, h, x, labels, splits = _load_structures(args.dataset)
    params = _load_model(args.checkpoint, bundle, x)
    nodes = _select_nodes(args.nodes, splits)
    cfg_echo = {"dataset": args.dataset, "checkpoint": args.checkpoint,
                "variant": args.variant, "nodes": args.nodes,
                "attempts": args.attempts, "hop_count": args.hop_count,
                "seed": args.seed}
    _write_bound_table(os.path.join(args.out_dir, "bound_table.csv"))
    if not nodes:
        _empty_reports(args.out_dir, bundle.name, "random", args.variant, cfg_echo)
        print("no nodes requested; empty report written")
        return EXIT_OK
    records_json, mrecords = [], []
    for node in nodes:
        res = baselines.random_baseline(h, x, params, node, args.variant,
                                        attempts=args.attempts,
                                        seed=_node_seed(args.seed, node),
                                        hop_count=args.hop_count)
        view = extract_subhypergraph(h, x, node, args.hop_count)
        den_sub, den_full = metrics.scope_denominators(h, view, args.variant)
        original_class, _ = model.predict(h, x, params, node)
        rec = {"dataset": bundle.name, "method": "random", "variant": args.variant,
               "node": node, "original_class": original_class,
               "denominator_sub": den_sub, "denominator_full": den_full,
               **_result_fields(res)}
        if res is not None:
            rec["sparsity_sub"] = metrics.sparsity(res.size, den_sub)
            rec["sparsity_full"] = metrics.sparsity(res.size, den_full)
        records_json.append(rec)
        mrecords.append(metrics.ExplanationRecord(
            node=node, found=res is not None,
            size=res.size if res else 0,
            denominator_sub=den_sub, denominator_full=den_full,
            wall_time=res.wall_time if res else 0.0))
    report = _emit_reports(args.out_dir, records_json, mrecords,
                           bundle.name, "random", args.variant, cfg_echo)
    print(f"random baseline {args.variant}: accuracy {report.accuracy:.3f} "
          f"over {report.num_records} nodes")
    return EXIT_OK


def _write_bound_table(path) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["degree", "attempts", "lower_bound"])
        for d_v in range(1, 11):
            for t in (10, 100):
                writer.writerow([d_v, t, baselines.bernoulli_lower_bound(d_v, t)])


def cmd_convert(args) -> int:
    bundle = data.load(args.input)
    if args.graph_to_hypergraph:
        if bundle.edges is None:
            raise DataError("--graph-to-hypergraph needs a graph-form bundle")
        g_edges = np.asarray(bundle.edges, dtype=np.int64).reshape(-1, 2)
        h = neighborhood_conversion(SimpleGraph(bundle.num_nodes, g_edges))
        hyperedges = [[int(v) for v in h.members_of(e)] for e in range(h.num_edges)]
        out = data.DatasetBundle(
            name=bundle.name + "-hyper", num_nodes=bundle.num_nodes,
            num_features=bundle.num_features, num_classes=bundle.num_classes,
            features=bundle.features, labels=bundle.labels, splits=bundle.splits,
            hyperedges=hyperedges)
        data.save(out, args.output)
        print(f"neighborhood conversion: {bundle.num_nodes} nodes -> "
              f"{h.num_edges} hyperedges (one per node)")
    else:
        if bundle.hyperedges is None:
            raise DataError("--star-expansion needs a hypergraph-form bundle")
        h, x, labels, splits = data.to_structures(bundle)
        g = star_expansion(h)
        n, m = h.num_nodes, h.num_edges
        out = data.DatasetBundle(
            name=bundle.name + "-star", num_nodes=n + m,
            num_features=bundle.num_features, num_classes=bundle.num_classes,
            features=bundle.features,
            labels=bundle.labels + [0] * m,
            splits=bundle.splits + ["other"] * m,
            edges=[[int(u), int(v)] for u, v in g.edges])
        data.save(out, args.output)
        print(f"star expansion: {n}+{m}={n + m} nodes, {g.edges.shape[0]} edges")
    return EXIT_OK


def cmd_bench(args) -> int:
    bundle, h, x, labels, splits = _load_structures(args.dataset)
    params = _load_model(args.checkpoint, bundle, x)
    nodes = _select_nodes(args.nodes, splits)
    alphas = [float(s) for s in args.alphas.split(",")]
    momenta = [float(s) for s in args.momenta.split(",")]
    variants = [s.strip() for s in args.variants.split(",")]
    cfg_echo = {"dataset": args.dataset, "checkpoint": args.checkpoint,
                "nodes": args.nodes, "alphas": alphas, "momenta": momenta,
                "variants": variants, "iterations": args.iterations,
                "beta": args.beta, "threshold": args.threshold,
                "hop_count": args.hop_count, "seed": args.seed,
                "jobs": args.jobs}
    _write_config(args.out_dir, "bench", cfg_echo)
    payload = {"h": h, "x": x, "params": params, "dataset": bundle.name}
    rows = []
    cells = []
    for variant in variants:
        for alpha in alphas:
            for momentum in momenta:
                cfg_kw = {"iterations": args.iterations, "learning_rate": alpha,
                          "momentum": momentum, "beta": args.beta,
                          "threshold": args.threshold, "hop_count": args.hop_count,
                          "seed": args.seed, "search_scope": args.search_scope}
                tasks = [(node, variant, cfg_kw) for node in nodes]
                records_json = _run_tasks(payload, tasks, args.jobs)
                report = metrics.aggregate(_to_metric_records(records_json),
                                           bundle.name, "gradient", variant, cfg_kw)
                row = {"alpha": alpha, "momentum": momentum,
                       **metrics.report_csv_row(report)}
                rows.append(row)
                cells.append({"alpha": alpha, "momentum": momentum,
                              "variant": variant, "accuracy": report.accuracy,
                              "size_mean": report.size_mean,
                              "sparsity_mean": report.sparsity_mean,
                              "time_mean_s": report.time_mean_s})
                print(f"cell variant={variant} alpha={alpha} momentum={momentum}: "
                      f"accuracy {report.accuracy:.3f}")
    cols = ["dataset", "method", "variant", "alpha", "momentum", "accuracy",
            "sparsity_mean", "sparsity_std", "size_mean", "size_std", "time_mean_s"]
    with open(os.path.join(args.out_dir, "grid_report.csv"), "w",
              encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=cols)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in cols})
    with open(os.path.join(args.out_dir, "grid_report.json"), "w", encoding="utf-8") as fh:
        json.dump({"dataset": bundle.name, "cells": cells}, fh, sort_keys=True, indent=1)
        fh.write("\n")
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.kind == "planted":
        bundle = data.synth_planted(num_nodes=args.num_nodes,
                                    num_classes=args.num_classes,
                                    intra_edge_prob=args.intra_edge_prob,
                                    inter_edge_prob=args.inter_edge_prob,
                                    feature_noise=args.feature_noise,
                                    seed=args.seed)
        data.save(bundle, args.output)
        print(f"planted dataset: {bundle.num_nodes} nodes, "
              f"{len(bundle.hyperedges)} hyperedges, {bundle.num_classes} classes")
    else:
        bundle, info = data.synth_planted_bridge(block_size=args.block_size,
                                                 num_bridges=args.num_bridges,
                                                 decoys_per_bridge=args.decoys_per_bridge,
                                                 feature_noise=args.feature_noise,
                                                 seed=args.seed)
        data.save(bundle, args.output)
        with open(args.output + ".bridge.json", "w", encoding="utf-8") as fh:
            json.dump(asdict(info), fh, sort_keys=True, indent=1)
            fh.write("\n")
        print(f"bridge dataset: {bundle.num_nodes} nodes, "
              f"{len(bundle.hyperedges)} hyperedges, bridges at {list(info.bridge_nodes)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_explain_flags(p):
    p.add_argument("--iterations", type=int, default=500)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--hop-count", type=int, default=3)
    p.add_argument("--search-scope", choices=("view", "full"), default="view")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hypercf",
        description="Hypergraph node classifier with counterfactual structure explanations")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("train", help="train a classifier and write a checkpoint")
    p.add_argument("dataset")
    p.add_argument("out_checkpoint")
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--learning-rate", type=float, default=0.01)
    p.add_argument("--weight-decay", type=float, default=5e-4)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("explain", help="gradient counterfactual search")
    p.add_argument("dataset")
    p.add_argument("checkpoint")
    p.add_argument("out_dir")
    p.add_argument("--variant", choices=explainer.VARIANTS, required=True)
    p.add_argument("--nodes", default="all-test",
                   help="'all-test' or comma-separated node ids")
    _add_explain_flags(p)
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("oracle", help="exhaustive minimal counterfactual search")
    p.add_argument("dataset")
    p.add_argument("checkpoint")
    p.add_argument("out_dir")
    p.add_argument("--variant", choices=explainer.VARIANTS, required=True)
    p.add_argument("--nodes", default="all-test")
    p.add_argument("--max-degree", type=int, default=12)
    p.add_argument("--hop-count", type=int, default=3)
    p.add_argument("--explainer-results", default=None,
                   help="results.jsonl to compare for the minimality gap")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("baseline", help="random half-keep perturbation baseline")
    p.add_argument("dataset")
    p.add_argument("checkpoint")
    p.add_argument("out_dir")
    p.add_argument("--variant", choices=explainer.VARIANTS, required=True)
    p.add_argument("--nodes", default="all-test")
    p.add_argument("--attempts", type=int, default=100)
    p.add_argument("--hop-count", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("convert", help="dataset structure conversions")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--graph-to-hypergraph", action="store_true")
    group.add_argument("--star-expansion", action="store_true")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("bench", help="hyperparameter grid over the explainer")
    p.add_argument("dataset")
    p.add_argument("checkpoint")
    p.add_argument("out_dir")
    p.add_argument("--alphas", default="0.1,0.01")
    p.add_argument("--momenta", default="0,0.5,0.9")
    p.add_argument("--variants", default="nhp,hp")
    p.add_argument("--nodes", default="all-test")
    p.add_argument("--iterations", type=int, default=500)
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--hop-count", type=int, default=3)
    p.add_argument("--search-scope", choices=("view", "full"), default="view")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("synth", help="emit a synthetic dataset")
    p.add_argument("output")
    p.add_argument("--kind", choices=("planted", "bridge"), default="planted")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--num-nodes", type=int, default=60)
    p.add_argument("--num-classes", type=int, default=2)
    p.add_argument("--intra-edge-prob", type=float, default=0.8)
    p.add_argument("--inter-edge-prob", type=float, default=0.05)
    p.add_argument("--feature-noise", type=float, default=0.0)
    p.add_argument("--block-size", type=int, default=16)
    p.add_argument("--num-bridges", type=int, default=3)
    p.add_argument("--decoys-per-bridge", type=int, default=4)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "func", None) is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        return args.func(args)
    except (DatasetFormatError, model.CheckpointError, DataError,
            FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (autodiff.NonFiniteResult,) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
