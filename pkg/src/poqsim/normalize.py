"""Min-max scaling of evaluator scores and latency-based node costs.

Raw evaluator scores are put on a common [0, 10] scale with one span per
(evaluator, task type), fitted jointly over every model's outputs.  Node
costs are average latencies min-max scaled to [0, 1] within each node-type
pool.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .records import (
    NODE_TYPES,
    TASK_TYPES,
    EfficiencyProfile,
    EvalScore,
    GenerationRecord,
    RecordError,
    _choice,
    _real,
    _require,
    _text,
    iter_jsonl,
    save_jsonl,
)

DEGENERATE_SCORE = 5.0


@dataclass(frozen=True)
class NormalizationSpan:
    evaluator_key: str
    task_type: str
    min_raw: float
    max_raw: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "evaluator_key": self.evaluator_key,
            "task_type": self.task_type,
            "min_raw": self.min_raw,
            "max_raw": self.max_raw,
        }

    @classmethod
    def from_dict(cls, obj: Mapping[str, Any]) -> "NormalizationSpan":
        lo = _real(_require(obj, "min_raw", float), "min_raw")
        hi = _real(_require(obj, "max_raw", float), "max_raw")
        if hi < lo:
            raise RecordError(f"max_raw {hi!r} < min_raw {lo!r}")
        return cls(
            evaluator_key=_text(obj, "evaluator_key", nonempty=True),
            task_type=_choice(obj, "task_type", TASK_TYPES),
            min_raw=lo,
            max_raw=hi,
        )


@dataclass(frozen=True)
class NodeCost:
    node_key: str
    node_type: str
    cost_norm: float
    avg_latency_ms: float | None = None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "node_key": self.node_key,
            "node_type": self.node_type,
            "cost_norm": self.cost_norm,
        }
        if self.avg_latency_ms is not None:
            out["avg_latency_ms"] = self.avg_latency_ms
        return out

    @classmethod
    def from_dict(cls, obj: Mapping[str, Any]) -> "NodeCost":
        cost = _real(_require(obj, "cost_norm", float), "cost_norm")
        if not 0.0 <= cost <= 1.0:
            raise RecordError(f"cost_norm {cost!r} outside [0, 1]")
        latency = obj.get("avg_latency_ms")
        return cls(
            node_key=_text(obj, "node_key", nonempty=True),
            node_type=_choice(obj, "node_type", NODE_TYPES),
            cost_norm=cost,
            avg_latency_ms=None if latency is None else _real(latency, "avg_latency_ms"),
        )


def fit_spans(records: Iterable[GenerationRecord], evaluator_key: str) -> dict[str, NormalizationSpan]:
    """Per-task min/max of ``evaluator_key``'s raw scores.

    Records without a score from this evaluator are ignored; a task type with
    no scored records gets no span.
    """
    bounds: dict[str, list[float]] = {}
    for rec in records:
        score = rec.eval_scores.get(evaluator_key)
        if score is None:
            continue
        b = bounds.get(rec.task_type)
        if b is None:
            bounds[rec.task_type] = [score.raw, score.raw]
        else:
            b[0] = min(b[0], score.raw)
            b[1] = max(b[1], score.raw)
    return {
        task: NormalizationSpan(evaluator_key, task, lo, hi)
        for task, (lo, hi) in sorted(bounds.items())
    }


def fit_all_spans(records: Sequence[GenerationRecord]) -> list[NormalizationSpan]:
    evaluators = sorted({key for rec in records for key in rec.eval_scores})
    spans = []
    for evaluator in evaluators:
        spans.extend(fit_spans(records, evaluator).values())
    return spans


def apply_span(raw: float, span: NormalizationSpan) -> float:
    if span.max_raw == span.min_raw:
        return DEGENERATE_SCORE
    value = 10.0 * ((raw - span.min_raw) / (span.max_raw - span.min_raw))
    return min(max(value, 0.0), 10.0)


def normalize_records(
    records: Iterable[GenerationRecord], spans: Iterable[NormalizationSpan]
) -> list[GenerationRecord]:
    """Fill in ``norm`` for every evaluator score that has a matching span.

    Raises :class:`RecordError` if a record carries a raw score for an
    (evaluator, task) pair with no span.
    """
    table = {(s.evaluator_key, s.task_type): s for s in spans}
    out = []
    for rec in records:
        if not rec.eval_scores:
            out.append(rec)
            continue
        scores = {}
        for key, score in rec.eval_scores.items():
            span = table.get((key, rec.task_type))
            if span is None:
                raise RecordError(
                    f"no normalization span for evaluator {key!r}, task {rec.task_type!r} "
                    f"(record {rec.id!r}, model {rec.model_key!r})"
                )
            scores[key] = EvalScore(raw=score.raw, norm=apply_span(score.raw, span))
        out.append(replace(rec, eval_scores=scores))
    return out


def latency_costs(profiles: Iterable[EfficiencyProfile], node_type: str) -> list[NodeCost]:
    pool = [p for p in profiles if p.node_type == node_type]
    if not pool:
        raise ValueError(f"no {node_type!r} profiles")
    for p in pool:
        if p.avg_latency_ms <= 0:
            raise ValueError(f"nonpositive latency {p.avg_latency_ms!r} for {p.node_key!r}")
    lo = min(p.avg_latency_ms for p in pool)
    hi = max(p.avg_latency_ms for p in pool)
    width = hi - lo
    return [
        NodeCost(
            node_key=p.node_key,
            node_type=node_type,
            cost_norm=0.0 if width == 0 else (p.avg_latency_ms - lo) / width,
            avg_latency_ms=p.avg_latency_ms,
        )
        for p in pool
    ]


def all_latency_costs(profiles: Sequence[EfficiencyProfile]) -> list[NodeCost]:
    """Costs for every node-type pool present, inference first."""
    present = {p.node_type for p in profiles}
    out: list[NodeCost] = []
    for node_type in NODE_TYPES:
        if node_type in present:
            out.extend(latency_costs(profiles, node_type))
    return out


# ---------------------------------------------------------------------------
# sidecar files


def save_spans(spans: Iterable[NormalizationSpan], path: str | Path) -> None:
    save_jsonl(spans, path)


def load_spans(path: str | Path) -> list[NormalizationSpan]:
    out = []
    seen = set()
    for lineno, obj in iter_jsonl(path):
        try:
            span = NormalizationSpan.from_dict(obj)
        except RecordError as exc:
            raise RecordError(exc.reason, path, lineno) from None
        key = (span.evaluator_key, span.task_type)
        if key in seen:
            raise RecordError(f"duplicate span {key!r}", path, lineno)
        seen.add(key)
        out.append(span)
    return out


COST_CSV_FIELDS = ("node_type", "node_key", "avg_latency_ms", "cost_norm")


def save_costs(costs: Iterable[NodeCost], path: str | Path) -> None:
    """Write costs as JSONL, or as CSV when ``path`` ends in ``.csv``."""
    path = Path(path)
    if path.suffix.lower() != ".csv":
        save_jsonl(costs, path)
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COST_CSV_FIELDS)
        for c in costs:
            latency = "" if c.avg_latency_ms is None else repr(c.avg_latency_ms)
            writer.writerow([c.node_type, c.node_key, latency, repr(c.cost_norm)])


def load_costs(path: str | Path) -> list[NodeCost]:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        rows = []
        with path.open("r", encoding="utf-8", newline="") as fh:
            for lineno, row in enumerate(csv.DictReader(fh), start=2):
                try:
                    obj: dict[str, Any] = {
                        "node_key": row.get("node_key"),
                        "node_type": row.get("node_type"),
                        "cost_norm": float(row["cost_norm"]),
                    }
                    if row.get("avg_latency_ms"):
                        obj["avg_latency_ms"] = float(row["avg_latency_ms"])
                    rows.append((lineno, obj))
                except (KeyError, TypeError, ValueError) as exc:
                    raise RecordError(f"bad cost row ({exc})", path, lineno) from None
    else:
        rows = list(iter_jsonl(path))
    out = []
    seen = set()
    for lineno, obj in rows:
        try:
            cost = NodeCost.from_dict(obj)
        except RecordError as exc:
            raise RecordError(exc.reason, path, lineno) from None
        if cost.node_key in seen:
            raise RecordError(f"duplicate node_key {cost.node_key!r}", path, lineno)
        seen.add(cost.node_key)
        out.append(cost)
    return out
