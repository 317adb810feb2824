"""Explanation metrics and run-report aggregation.

Sparsity needs a denominator scope: ``sub`` measures against the
target's n-hop neighborhood (incidences for nhp, hyperedges for hp),
``full`` against the whole structure.  Records carry both so the choice
stays auditable.  Standard deviations are population (divide by n), and
every report says so in its header.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, asdict

import numpy as np

from .explainer import CounterfactualResult
from .hypergraph import Hypergraph, SubHypergraphView

STD_CONVENTION = "population"
CSV_COLUMNS = ("dataset", "method", "variant", "accuracy", "sparsity_mean",
               "sparsity_std", "size_mean", "size_std", "time_mean_s")


@dataclass(frozen=True)
class ExplanationRecord:
    """One explanation attempt, reduced to what the metrics need."""

    node: int
    found: bool
    size: int = 0
    denominator_sub: int = 0
    denominator_full: int = 0
    wall_time: float = 0.0


def explanation_size(result: CounterfactualResult) -> int:
    """Removed incidences (nhp) or removed hyperedges (hp)."""
    removal = result.removed_incidences if result.variant == "nhp" else result.removed_edges
    return len(removal or ())


def sparsity(size: int, denominator: int) -> float:
    """Fraction of the considered structure preserved: 1 - size/denominator."""
    if denominator <= 0:
        raise ValueError("sparsity denominator must be positive")
    return 1.0 - size / denominator


def scope_denominators(h: Hypergraph, view: SubHypergraphView, variant: str):
    """(sub, full) denominators for one node's record."""
    if variant == "nhp":
        return view.sub.nnz, h.nnz
    return view.sub.num_edges, h.num_edges


def make_record(result: CounterfactualResult | None, node: int,
                denominator_sub: int, denominator_full: int,
                wall_time: float | None = None) -> ExplanationRecord:
    if result is None:
        return ExplanationRecord(node=node, found=False,
                                 denominator_sub=denominator_sub,
                                 denominator_full=denominator_full,
                                 wall_time=wall_time or 0.0)
    return ExplanationRecord(
        node=node,
        found=True,
        size=explanation_size(result),
        denominator_sub=denominator_sub,
        denominator_full=denominator_full,
        wall_time=result.wall_time if wall_time is None else wall_time,
    )


def accuracy(records) -> float:
    """Fraction of attempted nodes with a valid counterfactual."""
    records = list(records)
    if not records:
        raise ValueError("accuracy over an empty record set")
    return sum(1 for r in records if r.found) / len(records)


@dataclass
class RunReport:
    dataset: str
    method: str
    variant: str
    config: dict
    num_records: int
    accuracy: float
    time_mean_s: float
    size_mean: float | None = None
    size_std: float | None = None
    sparsity_mean: float | None = None
    sparsity_std: float | None = None
    sparsity_full_mean: float | None = None
    sparsity_full_std: float | None = None
    std_convention: str = STD_CONVENTION
    records: list = field(default_factory=list)


def aggregate(records, dataset: str, method: str, variant: str,
              config: dict | None = None) -> RunReport:
    """Means and population stds over found records; accuracy over all."""
    records = list(records)
    if not records:
        raise ValueError("cannot aggregate an empty record set")
    report = RunReport(
        dataset=dataset,
        method=method,
        variant=variant,
        config=dict(config or {}),
        num_records=len(records),
        accuracy=accuracy(records),
        time_mean_s=float(np.mean([r.wall_time for r in records])),
        records=records,
    )
    found = [r for r in records if r.found]
    if found:
        sizes = np.array([r.size for r in found], dtype=np.float64)
        sp_sub = np.array([sparsity(r.size, r.denominator_sub) for r in found])
        sp_full = np.array([sparsity(r.size, r.denominator_full) for r in found])
        report.size_mean = float(sizes.mean())
        report.size_std = float(sizes.std(ddof=0))
        report.sparsity_mean = float(sp_sub.mean())
        report.sparsity_std = float(sp_sub.std(ddof=0))
        report.sparsity_full_mean = float(sp_full.mean())
        report.sparsity_full_std = float(sp_full.std(ddof=0))
    return report


def report_csv_row(report: RunReport) -> dict:
    return {
        "dataset": report.dataset,
        "method": report.method,
        "variant": report.variant,
        "accuracy": report.accuracy,
        "sparsity_mean": report.sparsity_mean,
        "sparsity_std": report.sparsity_std,
        "size_mean": report.size_mean,
        "size_std": report.size_std,
        "time_mean_s": report.time_mean_s,
    }


def write_report_csv(reports, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(CSV_COLUMNS))
        writer.writeheader()
        for report in reports:
            row = report_csv_row(report)
            writer.writerow({k: ("" if row[k] is None else row[k]) for k in CSV_COLUMNS})


def write_report_json(report: RunReport, path) -> None:
    obj = asdict(report)
    obj["records"] = [asdict(r) for r in report.records]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=1)
        fh.write("\n")


def write_size_histogram(records, path) -> None:
    """Plot-ready CSV: one row per observed explanation size."""
    sizes = [r.size for r in records if r.found]
    counts: dict = {}
    for s in sizes:
        counts[s] = counts.get(s, 0) + 1
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["size", "count"])
        for s in sorted(counts):
            writer.writerow([s, counts[s]])
