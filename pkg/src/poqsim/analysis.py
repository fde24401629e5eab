"""Evaluator/reference correlations and quality-per-latency efficiency."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .records import TASK_TYPES, EfficiencyProfile, GenerationRecord

log = logging.getLogger(__name__)

REFERENCES = ("gt", "judge")
AVERAGED = "averaged"


class UndefinedCorrelation(ValueError):
    """Pearson r is undefined because a series has zero variance."""


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"series must be 1-d and equal length, got {x.shape} and {y.shape}")
    if x.size < 2:
        raise ValueError("need at least two points")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelation("constant series")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


@dataclass(frozen=True)
class CorrelationReport:
    evaluator_key: str
    reference: str
    task_scope: str
    pearson_r: float | None  # None when undefined
    n: int


def _reference_value(rec: GenerationRecord, reference: str) -> float | None:
    if reference == "gt":
        return rec.gt_score
    if reference == "judge":
        return rec.judge_score
    raise ValueError(f"reference must be one of {REFERENCES}, got {reference!r}")


def correlation_report(
    records: Iterable[GenerationRecord], evaluator_key: str, reference: str
) -> list[CorrelationReport]:
    """Per-task Pearson r of normalized evaluator scores against a reference.

    The ``averaged`` row is the unweighted mean of the defined per-task r
    values; its ``n`` is the total sample count across those tasks.  Tasks
    with fewer than two usable records are omitted (and logged).
    """
    pairs: dict[str, tuple[list[float], list[float]]] = {t: ([], []) for t in TASK_TYPES}
    for rec in records:
        e = rec.norm_score(evaluator_key)
        ref = _reference_value(rec, reference)
        if e is None or ref is None:
            continue
        xs, ys = pairs[rec.task_type]
        xs.append(e)
        ys.append(ref)

    rows = []
    for task in TASK_TYPES:
        xs, ys = pairs[task]
        if len(xs) < 2:
            log.info("skipping %s/%s/%s: %d usable records", evaluator_key, reference, task, len(xs))
            continue
        try:
            r = pearson(xs, ys)
        except UndefinedCorrelation:
            r = None
        rows.append(CorrelationReport(evaluator_key, reference, task, r, len(xs)))

    defined = [row for row in rows if row.pearson_r is not None]
    if defined:
        mean_r = math.fsum(row.pearson_r for row in defined) / len(defined)
        rows.append(CorrelationReport(evaluator_key, reference, AVERAGED, mean_r, sum(r.n for r in defined)))
    return rows


def correlation_table(records: Sequence[GenerationRecord]) -> list[CorrelationReport]:
    evaluators = sorted({key for rec in records for key in rec.eval_scores})
    out = []
    for evaluator in evaluators:
        for reference in REFERENCES:
            out.extend(correlation_report(records, evaluator, reference))
    return out


@dataclass(frozen=True)
class EfficiencyPoint:
    model_key: str
    avg_quality: float
    avg_latency_ms: float
    quality_per_ms: float
    avg_quality_judge: float | None = None


def efficiency_frontier(
    records: Iterable[GenerationRecord], profiles: Iterable[EfficiencyProfile]
) -> list[EfficiencyPoint]:
    """Average gt quality per model divided by its measured latency.

    Models lacking either gt-scored records or an inference profile are left out.
    """
    latency = {p.node_key: p.avg_latency_ms for p in profiles if p.node_type == "inference"}
    gt: dict[str, list[float]] = {}
    judge: dict[str, list[float]] = {}
    for rec in records:
        if rec.gt_score is not None:
            gt.setdefault(rec.model_key, []).append(rec.gt_score)
        if rec.judge_score is not None:
            judge.setdefault(rec.model_key, []).append(rec.judge_score)
    points = []
    for model in sorted(gt):
        if model not in latency:
            log.info("no inference profile for %s; omitted from frontier", model)
            continue
        quality = math.fsum(gt[model]) / len(gt[model])
        judged = judge.get(model)
        points.append(
            EfficiencyPoint(
                model_key=model,
                avg_quality=quality,
                avg_latency_ms=latency[model],
                quality_per_ms=quality / latency[model],
                avg_quality_judge=math.fsum(judged) / len(judged) if judged else None,
            )
        )
    return points


def _cell(value) -> str:
    if value is None:
        return "undefined"
    return repr(value) if isinstance(value, float) else str(value)


def write_correlations_csv(rows: Iterable[CorrelationReport], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["evaluator_key", "reference", "task_scope", "pearson_r", "n"])
        for r in rows:
            writer.writerow([r.evaluator_key, r.reference, r.task_scope, _cell(r.pearson_r), r.n])


def write_frontier_csv(points: Iterable[EfficiencyPoint], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["model_key", "avg_quality_gt", "avg_quality_judge", "avg_latency_ms", "quality_per_ms"])
        for p in points:
            judge = "" if p.avg_quality_judge is None else repr(p.avg_quality_judge)
            writer.writerow([p.model_key, repr(p.avg_quality), judge, repr(p.avg_latency_ms), repr(p.quality_per_ms)])
