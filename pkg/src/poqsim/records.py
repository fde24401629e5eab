"""Data model and JSONL persistence shared by every pipeline stage.

Each stage reads and writes one-object-per-line JSON files.  Loaders validate
the whole file before returning anything: a bad line raises
:class:`RecordError` naming the file and line, never a partial result.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping, Sequence

DATASETS = ("squad", "cnn_dailymail", "synthetic")
TASK_TYPES = ("qa", "summarization")
NODE_TYPES = ("inference", "eval")

SCORE_MIN = 0.0
SCORE_MAX = 10.0
# serialization rounding slack for the [0, 10] range check
SCORE_SLACK = 1e-9


class RecordError(ValueError):
    """A record failed validation.  Carries the source path and 1-based line."""

    def __init__(self, message: str, path: str | Path | None = None, line: int | None = None):
        self.path = str(path) if path is not None else None
        self.line = line
        self.reason = message
        where = ""
        if self.path is not None:
            where = self.path
            if line is not None:
                where += f":{line}"
            where += ": "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


@dataclass(frozen=True)
class TaskRecord:
    id: str
    dataset: str
    task_type: str
    input: str
    reference: str


@dataclass(frozen=True)
class EvalScore:
    raw: float
    norm: float | None = None


@dataclass(frozen=True)
class GenerationRecord:
    id: str
    dataset: str
    task_type: str
    model_key: str
    prompt: str
    reference: str
    output: str
    gt_score: float | None = None
    eval_scores: Mapping[str, EvalScore] = field(default_factory=dict)
    judge_score: float | None = None

    @property
    def key(self) -> tuple[str, str]:
        return (self.id, self.model_key)

    def norm_score(self, evaluator_key: str) -> float | None:
        score = self.eval_scores.get(evaluator_key)
        return None if score is None else score.norm


@dataclass(frozen=True)
class EfficiencyProfile:
    node_key: str
    node_type: str
    avg_latency_ms: float
    throughput_sps: float
    peak_mem_mb: float
    batch_size: int


@dataclass(frozen=True)
class Judgment:
    id: str
    model_key: str
    score: float
    justification: str = ""


@dataclass(frozen=True)
class NodePool:
    inference_nodes: tuple[str, ...]
    eval_nodes: tuple[str, ...]

    def __post_init__(self):
        for name, nodes in (("inference_nodes", self.inference_nodes), ("eval_nodes", self.eval_nodes)):
            if not nodes:
                raise RecordError(f"{name} must be non-empty")
            if len(set(nodes)) != len(nodes):
                raise RecordError(f"{name} contains duplicates")

    @classmethod
    def from_records(cls, records: Iterable[GenerationRecord]) -> "NodePool":
        """Pool of model and evaluator keys seen in ``records``, sorted."""
        models: set[str] = set()
        evaluators: set[str] = set()
        for rec in records:
            models.add(rec.model_key)
            evaluators.update(rec.eval_scores)
        return cls(tuple(sorted(models)), tuple(sorted(evaluators)))


# ---------------------------------------------------------------------------
# field validation helpers


def _require(obj: Mapping[str, Any], name: str, kind: type | tuple[type, ...]) -> Any:
    if name not in obj:
        raise RecordError(f"missing field {name!r}")
    value = obj[name]
    if kind is float:
        kind = (int, float)
    if isinstance(value, bool) or not isinstance(value, kind):
        raise RecordError(f"field {name!r} has wrong type {type(value).__name__}")
    return value


def _text(obj: Mapping[str, Any], name: str, nonempty: bool = False) -> str:
    value = _require(obj, name, str)
    if nonempty and not value.strip():
        raise RecordError(f"field {name!r} is empty")
    return value


def _choice(obj: Mapping[str, Any], name: str, allowed: Sequence[str]) -> str:
    value = _require(obj, name, str)
    if value not in allowed:
        raise RecordError(f"field {name!r} must be one of {list(allowed)}, got {value!r}")
    return value


def _real(value: Any, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise RecordError(f"field {name!r} must be a number")
    value = float(value)
    if not math.isfinite(value):
        raise RecordError(f"field {name!r} must be finite")
    return value


def check_score(value: float, name: str) -> float:
    """Validate a [0, 10] score; values within the slack are clipped onto the range."""
    value = _real(value, name)
    if value < SCORE_MIN - SCORE_SLACK or value > SCORE_MAX + SCORE_SLACK:
        raise RecordError(f"{name} {value!r} outside [0, 10]")
    return min(max(value, SCORE_MIN), SCORE_MAX)


def _optional_score(obj: Mapping[str, Any], name: str) -> float | None:
    if obj.get(name) is None:
        return None
    return check_score(obj[name], name)


# ---------------------------------------------------------------------------
# dict conversion


def task_from_dict(obj: Mapping[str, Any]) -> TaskRecord:
    return TaskRecord(
        id=_text(obj, "id", nonempty=True),
        dataset=_choice(obj, "dataset", DATASETS),
        task_type=_choice(obj, "task_type", TASK_TYPES),
        input=_text(obj, "input", nonempty=True),
        reference=_text(obj, "reference", nonempty=True),
    )


def task_to_dict(rec: TaskRecord) -> dict[str, Any]:
    return {
        "id": rec.id,
        "dataset": rec.dataset,
        "task_type": rec.task_type,
        "input": rec.input,
        "reference": rec.reference,
    }


def generation_from_dict(obj: Mapping[str, Any]) -> GenerationRecord:
    evals: dict[str, EvalScore] = {}
    raw_evals = obj.get("eval_scores")
    if raw_evals is not None:
        if not isinstance(raw_evals, dict):
            raise RecordError("field 'eval_scores' must be an object")
        for key in sorted(raw_evals):
            entry = raw_evals[key]
            if not isinstance(entry, dict) or "raw" not in entry:
                raise RecordError(f"eval_scores[{key!r}] must be an object with 'raw'")
            norm = entry.get("norm")
            evals[key] = EvalScore(
                raw=_real(entry["raw"], f"eval_scores[{key!r}].raw"),
                norm=None if norm is None else check_score(norm, f"eval_scores[{key!r}].norm"),
            )
    return GenerationRecord(
        id=_text(obj, "id", nonempty=True),
        dataset=_choice(obj, "dataset", DATASETS),
        task_type=_choice(obj, "task_type", TASK_TYPES),
        model_key=_text(obj, "model_key", nonempty=True),
        prompt=_text(obj, "prompt"),
        reference=_text(obj, "reference"),
        output=_text(obj, "output"),
        gt_score=_optional_score(obj, "gt_score"),
        eval_scores=evals,
        judge_score=_optional_score(obj, "judge_score"),
    )


def generation_to_dict(rec: GenerationRecord) -> dict[str, Any]:
    out: dict[str, Any] = {
        "id": rec.id,
        "dataset": rec.dataset,
        "task_type": rec.task_type,
        "model_key": rec.model_key,
        "prompt": rec.prompt,
        "reference": rec.reference,
        "output": rec.output,
    }
    if rec.gt_score is not None:
        out["gt_score"] = rec.gt_score
    if rec.eval_scores:
        evals = {}
        for key in sorted(rec.eval_scores):
            score = rec.eval_scores[key]
            entry: dict[str, Any] = {"raw": score.raw}
            if score.norm is not None:
                entry["norm"] = score.norm
            evals[key] = entry
        out["eval_scores"] = evals
    if rec.judge_score is not None:
        out["judge_score"] = rec.judge_score
    return out


def profile_from_dict(obj: Mapping[str, Any]) -> EfficiencyProfile:
    latency = _real(_require(obj, "avg_latency_ms", float), "avg_latency_ms")
    if latency <= 0:
        raise RecordError(f"avg_latency_ms must be > 0, got {latency!r}")
    throughput = _real(_require(obj, "throughput_sps", float), "throughput_sps")
    if throughput <= 0:
        raise RecordError(f"throughput_sps must be > 0, got {throughput!r}")
    mem = _real(_require(obj, "peak_mem_mb", float), "peak_mem_mb")
    if mem < 0:
        raise RecordError(f"peak_mem_mb must be >= 0, got {mem!r}")
    batch = _require(obj, "batch_size", int)
    if batch < 1:
        raise RecordError(f"batch_size must be positive, got {batch!r}")
    return EfficiencyProfile(
        node_key=_text(obj, "node_key", nonempty=True),
        node_type=_choice(obj, "node_type", NODE_TYPES),
        avg_latency_ms=latency,
        throughput_sps=throughput,
        peak_mem_mb=mem,
        batch_size=batch,
    )


def profile_to_dict(p: EfficiencyProfile) -> dict[str, Any]:
    return {
        "node_key": p.node_key,
        "node_type": p.node_type,
        "avg_latency_ms": p.avg_latency_ms,
        "throughput_sps": p.throughput_sps,
        "peak_mem_mb": p.peak_mem_mb,
        "batch_size": p.batch_size,
    }


def judgment_from_dict(obj: Mapping[str, Any]) -> Judgment:
    return Judgment(
        id=_text(obj, "id", nonempty=True),
        model_key=_text(obj, "model_key", nonempty=True),
        score=check_score(_require(obj, "score", float), "score"),
        justification=_text(obj, "justification") if "justification" in obj else "",
    )


def judgment_to_dict(j: Judgment) -> dict[str, Any]:
    return {"id": j.id, "model_key": j.model_key, "score": j.score, "justification": j.justification}


# ---------------------------------------------------------------------------
# JSONL I/O


def iter_jsonl(path: str | Path) -> Iterator[tuple[int, dict[str, Any]]]:
    """Yield ``(line_number, object)`` for each non-blank line of ``path``."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RecordError(f"malformed JSON ({exc.msg})", path, lineno) from None
            if not isinstance(obj, dict):
                raise RecordError("expected a JSON object", path, lineno)
            yield lineno, obj


def _load(path, convert, key_of, what: str) -> list:
    out = []
    seen: dict[Any, int] = {}
    for lineno, obj in iter_jsonl(path):
        try:
            rec = convert(obj)
        except RecordError as exc:
            raise RecordError(exc.reason, path, lineno) from None
        key = key_of(rec)
        if key in seen:
            raise RecordError(
                f"duplicate {what} {key!r} (first seen on line {seen[key]})", path, lineno
            )
        seen[key] = lineno
        out.append(rec)
    return out


def load_corpus(path: str | Path) -> list[TaskRecord]:
    return _load(path, task_from_dict, lambda r: r.id, "id")


def load_generations(path: str | Path) -> list[GenerationRecord]:
    return _load(path, generation_from_dict, lambda r: r.key, "(id, model_key)")


def load_efficiency(path: str | Path) -> list[EfficiencyProfile]:
    return _load(path, profile_from_dict, lambda p: p.node_key, "node_key")


def load_judgments(path: str | Path) -> list[Judgment]:
    return _load(path, judgment_from_dict, lambda j: (j.id, j.model_key), "(id, model_key)")


_TO_DICT = {
    TaskRecord: task_to_dict,
    GenerationRecord: generation_to_dict,
    EfficiencyProfile: profile_to_dict,
    Judgment: judgment_to_dict,
}


def dumps_line(obj: Mapping[str, Any]) -> str:
    """Canonical one-line JSON: insertion order kept, no whitespace padding."""
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"), allow_nan=False)


def to_dict(record: Any) -> dict[str, Any]:
    if isinstance(record, dict):
        return record
    convert = _TO_DICT.get(type(record))
    if convert is None:
        to = getattr(record, "to_dict", None)
        if to is None:
            raise TypeError(f"cannot serialize {type(record).__name__}")
        return to()
    return convert(record)


def save_jsonl(records: Iterable[Any], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(dumps_line(to_dict(rec)))
            fh.write("\n")


# ---------------------------------------------------------------------------
# score merging


def merge_scores(
    generations: Sequence[GenerationRecord],
    gt: Mapping[tuple[str, str], float] | None = None,
    evals: Mapping[tuple[str, str, str], float] | None = None,
    judges: Mapping[tuple[str, str], float] | None = None,
) -> list[GenerationRecord]:
    """Attach externally computed scores to their ``(id, model_key)`` records.

    ``evals`` maps ``(id, model_key, evaluator_key)`` to a raw evaluator
    score; any normalized value already present for that evaluator is
    dropped because it no longer matches the raw value.  A key with no
    matching record raises :class:`RecordError`.
    """
    gt = gt or {}
    evals = evals or {}
    judges = judges or {}
    index = {rec.key: pos for pos, rec in enumerate(generations)}

    for name, mapping in (("gt", gt), ("judge", judges)):
        for key in mapping:
            if key not in index:
                raise RecordError(f"orphan {name} score for {key!r}: no such (id, model_key)")
    for key in evals:
        if key[:2] not in index:
            raise RecordError(f"orphan eval score for {key!r}: no such (id, model_key)")

    per_record: dict[tuple[str, str], dict[str, float]] = {}
    for (rid, model, evaluator), raw in evals.items():
        per_record.setdefault((rid, model), {})[evaluator] = _real(raw, "raw")

    out = []
    for rec in generations:
        changes: dict[str, Any] = {}
        if rec.key in gt:
            changes["gt_score"] = check_score(gt[rec.key], "gt_score")
        if rec.key in judges:
            changes["judge_score"] = check_score(judges[rec.key], "judge_score")
        if rec.key in per_record:
            merged = dict(rec.eval_scores)
            for evaluator, raw in per_record[rec.key].items():
                merged[evaluator] = EvalScore(raw=raw)
            changes["eval_scores"] = {k: merged[k] for k in sorted(merged)}
        out.append(replace(rec, **changes) if changes else rec)
    return out


def judgments_to_map(judgments: Iterable[Judgment]) -> dict[tuple[str, str], float]:
    return {(j.id, j.model_key): j.score for j in judgments}
