"""Deterministic synthetic fixtures: tasks, scored generations, profiles, judgments.

Outputs are placeholder token strings built so that token F1 against the
reference hits a chosen quality level.  Each reference has
``REFERENCE_TOKENS`` distinct tokens; an output sharing ``c`` of them and
padded with ``REFERENCE_TOKENS - c`` filler tokens has F1 exactly
``c / REFERENCE_TOKENS``.  Ground-truth scores therefore move in steps of
``10 / REFERENCE_TOKENS`` and recomputing them with
:func:`poqsim.gt_metrics.score_generations` reproduces them.

Evaluator raw scores are ``offset + scale * (fidelity * g + sqrt(1 - fidelity**2) * s * eps + noise_sd * eta)``
where ``g`` is the ground-truth score, ``s`` its standard deviation within
the task, and ``eps``, ``eta`` standard normals.  With ``noise_sd = 0`` the
expected Pearson correlation between raw score and ground truth equals
``fidelity``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .gt_metrics import token_f1
from .records import (
    TASK_TYPES,
    EfficiencyProfile,
    EvalScore,
    GenerationRecord,
    Judgment,
    TaskRecord,
    save_jsonl,
)

REFERENCE_TOKENS = 20

TASKS_FILE = "tasks.jsonl"
GENERATIONS_FILE = "generations.jsonl"
EFFICIENCY_FILE = "efficiency.jsonl"
JUDGMENTS_FILE = "judgments.jsonl"


@dataclass(frozen=True)
class ModelProfile:
    model_key: str
    quality_mean: float
    quality_sd: float
    latency_ms: float
    peak_mem_mb: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.quality_mean <= 10.0:
            raise ValueError(f"{self.model_key}: quality_mean must be in [0, 10]")
        if self.quality_sd < 0:
            raise ValueError(f"{self.model_key}: quality_sd must be >= 0")
        if self.latency_ms <= 0:
            raise ValueError(f"{self.model_key}: latency_ms must be > 0")


@dataclass(frozen=True)
class EvaluatorProfile:
    evaluator_key: str
    fidelity: float
    latency_ms: float
    noise_sd: float = 0.0
    scale: float = 1.0
    offset: float = 0.0
    batch_size: int = 32
    peak_mem_mb: float = 0.0

    def __post_init__(self):
        if not -1.0 <= self.fidelity <= 1.0:
            raise ValueError(f"{self.evaluator_key}: fidelity must be in [-1, 1]")
        if self.noise_sd < 0:
            raise ValueError(f"{self.evaluator_key}: noise_sd must be >= 0")
        if self.latency_ms <= 0:
            raise ValueError(f"{self.evaluator_key}: latency_ms must be > 0")
        if self.scale <= 0:
            raise ValueError(f"{self.evaluator_key}: scale must be > 0")


@dataclass(frozen=True)
class SynthSpec:
    seed: int
    n_per_task: int
    models: tuple[ModelProfile, ...]
    evaluators: tuple[EvaluatorProfile, ...]
    tasks: tuple[str, ...] = TASK_TYPES
    judge_per_group: int = 30
    judge_noise_sd: float = 1.0

    def __post_init__(self):
        if self.n_per_task < 1:
            raise ValueError("n_per_task must be positive")
        if not self.models:
            raise ValueError("need at least one model profile")
        for task in self.tasks:
            if task not in TASK_TYPES:
                raise ValueError(f"unknown task type {task!r}")

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["tasks"] = list(self.tasks)
        return out

    @classmethod
    def from_dict(cls, obj: Mapping[str, Any]) -> "SynthSpec":
        obj = dict(obj)
        models = tuple(ModelProfile(**m) for m in obj.pop("models"))
        evaluators = tuple(EvaluatorProfile(**e) for e in obj.pop("evaluators", ()))
        if "tasks" in obj:
            obj["tasks"] = tuple(obj["tasks"])
        return cls(models=models, evaluators=evaluators, **obj)

    @classmethod
    def load(cls, path: str | Path) -> "SynthSpec":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class SynthBundle:
    tasks: list[TaskRecord]
    generations: list[GenerationRecord]
    profiles: list[EfficiencyProfile]
    judgments: list[Judgment] = field(default_factory=list)


def deployment_spec(seed: int = 0, n_per_task: int = 200) -> SynthSpec:
    """Five models and three evaluators shaped like the reference deployment.

    Two fast high-quality models, one mid model, two slow low-quality models;
    one evaluator that tracks quality well and two that barely do.
    """
    models = (
        ModelProfile("gemma_2_2b_it", 5.3, 2.5, 1108.0),
        ModelProfile("llama_3_2_3b", 5.4, 2.5, 1077.7),
        ModelProfile("phi3_mini_4k", 1.5, 1.5, 2409.3),
        ModelProfile("qwen2_1_5b", 1.6, 1.5, 2320.6),
        ModelProfile("tinyllama_1_1b", 2.1, 2.0, 1470.1),
    )
    evaluators = (
        EvaluatorProfile("ce_deberta", -0.04, 5.9, scale=3.0, offset=-1.0),
        EvaluatorProfile("ce_minilm", -0.24, 1.0, scale=0.8, offset=2.0),
        EvaluatorProfile("sts_stsb", 0.66, 0.9, scale=0.1, offset=0.0, batch_size=64),
    )
    return SynthSpec(seed=seed, n_per_task=n_per_task, models=models, evaluators=evaluators)


def _texts(task: str, index: int, quality: float) -> tuple[str, str, str, float]:
    """Prompt, reference, output and exact gt score for one (record, quality)."""
    overlap = int(round(quality / 10.0 * REFERENCE_TOKENS))
    reference = " ".join(f"ref{j}" for j in range(REFERENCE_TOKENS))
    output = " ".join(
        [f"ref{j}" for j in range(overlap)] + [f"gen{j}" for j in range(REFERENCE_TOKENS - overlap)]
    )
    kind = "question" if task == "qa" else "article"
    prompt = f"synthetic {kind} {index}"
    return prompt, reference, output, token_f1(output, reference).scaled


def generate(spec: SynthSpec) -> SynthBundle:
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    n_tasks, n, n_models, n_evals = len(spec.tasks), spec.n_per_task, len(spec.models), len(spec.evaluators)
    # every stream is drawn up front so that changing one profile's location
    # parameters leaves all other draws untouched
    z_quality = rng.standard_normal((n_tasks, n, n_models))
    z_signal = rng.standard_normal((n_tasks, n, n_models, n_evals))
    z_noise = rng.standard_normal((n_tasks, n, n_models, n_evals))
    z_judge = rng.standard_normal((n_tasks, n, n_models))
    judge_orders = [rng.permutation(n) for _ in range(n_tasks * n_models)]

    tasks: list[TaskRecord] = []
    generations: list[GenerationRecord] = []
    judgments: list[Judgment] = []
    for t, task in enumerate(spec.tasks):
        gt = np.empty((n, n_models))
        texts = []
        for i in range(n):
            row = []
            for f, model in enumerate(spec.models):
                q = min(max(model.quality_mean + model.quality_sd * z_quality[t, i, f], 0.0), 10.0)
                prompt, reference, output, g = _texts(task, i, q)
                gt[i, f] = g
                row.append((prompt, reference, output))
            texts.append(row)
        spread = float(gt.std())
        if spread == 0.0:
            spread = 1.0

        judged = np.zeros((n, n_models), dtype=bool)
        for f in range(n_models):
            order = judge_orders[t * n_models + f]
            judged[order[: spec.judge_per_group], f] = True

        for i in range(n):
            rid = f"{task}-{i:04d}"
            prompt, reference, _ = texts[i][0]
            tasks.append(TaskRecord(rid, "synthetic", task, prompt, reference))
            for f, model in enumerate(spec.models):
                g = float(gt[i, f])
                evals = {}
                for m, ev in enumerate(spec.evaluators):
                    signal = ev.fidelity * g + math.sqrt(1.0 - ev.fidelity**2) * spread * z_signal[t, i, f, m]
                    raw = ev.offset + ev.scale * (signal + ev.noise_sd * z_noise[t, i, f, m])
                    evals[ev.evaluator_key] = EvalScore(raw=float(raw))
                generations.append(
                    GenerationRecord(
                        id=rid,
                        dataset="synthetic",
                        task_type=task,
                        model_key=model.model_key,
                        prompt=prompt,
                        reference=reference,
                        output=texts[i][f][2],
                        gt_score=g,
                        eval_scores={k: evals[k] for k in sorted(evals)},
                    )
                )
                if judged[i, f]:
                    score = min(max(g + spec.judge_noise_sd * float(z_judge[t, i, f]), 0.0), 10.0)
                    judgments.append(Judgment(rid, model.model_key, score, "synthetic judgment"))

    profiles = [
        EfficiencyProfile(m.model_key, "inference", m.latency_ms, 1000.0 / m.latency_ms, m.peak_mem_mb, 1)
        for m in spec.models
    ]
    profiles += [
        EfficiencyProfile(e.evaluator_key, "eval", e.latency_ms, 1000.0 / e.latency_ms, e.peak_mem_mb, e.batch_size)
        for e in spec.evaluators
    ]
    return SynthBundle(tasks, generations, profiles, judgments)


def write_bundle(bundle: SynthBundle, out_dir: str | Path) -> dict[str, Path]:
    out_dir = Path(out_dir)
    paths = {
        "tasks": out_dir / TASKS_FILE,
        "generations": out_dir / GENERATIONS_FILE,
        "efficiency": out_dir / EFFICIENCY_FILE,
        "judgments": out_dir / JUDGMENTS_FILE,
    }
    save_jsonl(bundle.tasks, paths["tasks"])
    save_jsonl(bundle.generations, paths["generations"])
    save_jsonl(bundle.profiles, paths["efficiency"])
    save_jsonl(bundle.judgments, paths["judgments"])
    return paths
