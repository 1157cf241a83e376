"""Benchmark records, quotient aggregation, and the repeated-run harness.

Protocol: every instance is run ``repeats`` times with distinct seeds. Per
instance and metric (communication cost Co, edge cut Cut, enhancement time
T) the min/mean/max over the repeats of the after-value is divided by the
min/mean/max of the before-value, giving 9 quotients; for Co and Cut a
quotient below 1 means the enhancement helped. T has no before-value of
its own, so it is divided by a per-instance baseline time when one is
supplied and by the total enhancement time of the instance otherwise.
Quotients are then combined across instances by geometric mean, with the
geometric standard deviation as the spread indicator.
"""

from __future__ import annotations

import csv
import io
import math
import random
import time
from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, Partition, TopologySpec, contract_blocks
from .mapping import (
    grow_partition,
    greedy_allc,
    greedy_min,
    identity_mapping,
    mapping_from_assignment,
)
from .objective import coco_from_distances, edge_cut
from .pcube import PcubeLabeling
from .timer import TimerConfig, TraceRecord, run_timer

QUOTIENT_KEYS = tuple(
    f"q{metric}_{stat}" for metric in ("Co", "Cut", "T") for stat in ("min", "mean", "max")
)


@dataclass(frozen=True)
class RunRecord:
    """One enhancement run on one instance."""

    instance: str
    topology: str
    seed: int
    coco_before: int
    coco_after: int
    cut_before: int
    cut_after: int
    millis: float
    baseline_millis: float | None = None
    trace: tuple[TraceRecord, ...] = field(default=(), repr=False)

    def to_dict(self, *, with_trace: bool = False) -> dict:
        d = {
            "instance": self.instance,
            "topology": self.topology,
            "seed": self.seed,
            "coco_before": self.coco_before,
            "coco_after": self.coco_after,
            "cut_before": self.cut_before,
            "cut_after": self.cut_after,
            "millis": self.millis,
            "baseline_millis": self.baseline_millis,
        }
        if with_trace:
            d["trace"] = [t.to_dict() for t in self.trace]
        return d


@dataclass(frozen=True)
class AggregateReport:
    """Per-instance quotients and their geometric means / deviations."""

    repeats: int
    per_instance: dict[str, dict[str, float]]
    geo_mean: dict[str, float]
    geo_std: dict[str, float]
    counts: dict[str, int]
    excluded: dict[str, list[str]]

    def to_dict(self) -> dict:
        return {
            "repeats": self.repeats,
            "per_instance": self.per_instance,
            "geo_mean": self.geo_mean,
            "geo_std": self.geo_std,
            "counts": self.counts,
            "excluded": self.excluded,
        }


def _stats(values: list[float]) -> dict[str, float]:
    return {
        "min": min(values),
        "mean": sum(values) / len(values),
        "max": max(values),
    }


def aggregate(runs: list[RunRecord], repeats: int = 5) -> AggregateReport:
    """Compute the 9 quotients per instance and their geometric means.

    Every instance must contribute exactly ``repeats`` runs. Instances with
    a non-positive denominator for some quotient are excluded from that
    quotient's aggregation and reported under ``excluded``.
    """
    by_instance: dict[str, list[RunRecord]] = {}
    for r in runs:
        by_instance.setdefault(r.instance, []).append(r)
    if not by_instance:
        raise ValueError("no runs to aggregate")
    for name, rs in by_instance.items():
        if len(rs) != repeats:
            raise ValueError(f"instance {name}: {len(rs)} runs, expected {repeats}")

    per_instance: dict[str, dict[str, float]] = {}
    excluded: dict[str, list[str]] = {k: [] for k in QUOTIENT_KEYS}
    for name, rs in by_instance.items():
        after = {
            "Co": _stats([float(r.coco_after) for r in rs]),
            "Cut": _stats([float(r.cut_after) for r in rs]),
            "T": _stats([r.millis for r in rs]),
        }
        before = {
            "Co": _stats([float(r.coco_before) for r in rs]),
            "Cut": _stats([float(r.cut_before) for r in rs]),
        }
        baselines = {r.baseline_millis for r in rs}
        baseline = baselines.pop() if len(baselines) == 1 else None
        t_denom = baseline if baseline is not None else sum(r.millis for r in rs)
        quotients: dict[str, float] = {}
        for metric in ("Co", "Cut", "T"):
            for stat in ("min", "mean", "max"):
                key = f"q{metric}_{stat}"
                denom = t_denom if metric == "T" else before[metric][stat]
                if denom is None or denom <= 0:
                    excluded[key].append(name)
                    continue
                quotients[key] = after[metric][stat] / denom
        per_instance[name] = quotients

    geo_mean: dict[str, float] = {}
    geo_std: dict[str, float] = {}
    counts: dict[str, int] = {}
    for key in QUOTIENT_KEYS:
        logs = [
            math.log(q[key])
            for q in per_instance.values()
            if key in q and q[key] > 0
        ]
        counts[key] = len(logs)
        if not logs:
            continue
        mean_log = sum(logs) / len(logs)
        geo_mean[key] = math.exp(mean_log)
        geo_std[key] = math.exp(
            math.sqrt(sum((x - mean_log) ** 2 for x in logs) / len(logs))
        )
    return AggregateReport(
        repeats=repeats,
        per_instance=per_instance,
        geo_mean=geo_mean,
        geo_std=geo_std,
        counts=counts,
        excluded=excluded,
    )


def csv_report(report: AggregateReport) -> str:
    """Per-instance quotient table plus GEOMEAN/GEOSTD summary rows."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["instance", *QUOTIENT_KEYS])
    for name in report.per_instance:
        row = [name] + [
            f"{report.per_instance[name][k]:.6f}" if k in report.per_instance[name] else ""
            for k in QUOTIENT_KEYS
        ]
        writer.writerow(row)
    for label, table in (("GEOMEAN", report.geo_mean), ("GEOSTD", report.geo_std)):
        writer.writerow(
            [label] + [f"{table[k]:.6f}" if k in table else "" for k in QUOTIENT_KEYS]
        )
    return buf.getvalue()


def run_instance(
    name: str,
    ga: Graph,
    spec: TopologySpec,
    gp_labeling: PcubeLabeling,
    gp_dist: np.ndarray,
    *,
    method: str = "identity",
    repeats: int = 5,
    hierarchies: int = 50,
    eps: float = 0.03,
    seed: int = 0,
    baseline_seconds: float | None = None,
    keep_traces: bool = False,
) -> list[RunRecord]:
    """Partition, map, enhance, and measure one instance ``repeats`` times."""
    k = gp_labeling.n
    records = []
    for rep in range(repeats):
        run_seed = seed + rep
        part = grow_partition(ga, k, eps, random.Random(run_seed))
        if method == "identity":
            mapping = identity_mapping(part, gp_labeling)
        elif method in ("greedy-allc", "greedy-min"):
            gc = contract_blocks(ga, part)
            build = greedy_allc if method == "greedy-allc" else greedy_min
            mapping = mapping_from_assignment(part, build(gc, gp_dist))
        else:
            raise ValueError(f"unknown mapping method {method!r}")
        coco_before = coco_from_distances(ga, mapping, gp_dist)
        cut_before = edge_cut(ga, Partition(np.asarray(mapping), k))
        t0 = time.perf_counter()
        enhanced, _, trace = run_timer(
            ga, gp_labeling, mapping, TimerConfig(n_hierarchies=hierarchies, seed=run_seed)
        )
        millis = (time.perf_counter() - t0) * 1e3
        records.append(
            RunRecord(
                instance=name,
                topology=str(spec),
                seed=run_seed,
                coco_before=coco_before,
                coco_after=coco_from_distances(ga, enhanced, gp_dist),
                cut_before=cut_before,
                cut_after=edge_cut(ga, Partition(np.asarray(enhanced), k)),
                millis=millis,
                baseline_millis=None if baseline_seconds is None else baseline_seconds * 1e3,
                trace=tuple(trace) if keep_traces else (),
            )
        )
    return records
