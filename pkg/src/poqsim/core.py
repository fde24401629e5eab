"""Reward arithmetic for one cost-aware PoQ round.

Quality signals are normalized evaluator scores in [0, 10]; costs are
normalized latencies in [0, 1].  Everything here is a pure function of its
inputs; sampling lives in :mod:`poqsim.simulation`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

MAX_K = 3


@dataclass(frozen=True)
class RewardParams:
    """Reward coefficients and evaluator-subset size.

    ``alpha_*`` weight quality/closeness and must be positive.  ``beta_*``
    weight cost; zero is allowed so that cost-blind baselines can be swept.
    """

    alpha_f: float = 1.0
    beta_f: float = 1.0
    alpha_m: float = 1.0
    beta_m: float = 1.0
    k: int = 3

    def __post_init__(self):
        for name in ("alpha_f", "alpha_m"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be > 0, got {value!r}")
        for name in ("beta_f", "beta_m"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be >= 0, got {value!r}")
        if isinstance(self.k, bool) or not isinstance(self.k, int) or not 1 <= self.k <= MAX_K:
            raise ValueError(f"k must be an integer in [1, {MAX_K}], got {self.k!r}")


@dataclass(frozen=True)
class EvaluatorOutcome:
    evaluator_key: str
    norm_score: float
    deviation: float
    closeness: float
    reward: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "evaluator_key": self.evaluator_key,
            "norm_score": self.norm_score,
            "deviation": self.deviation,
            "closeness": self.closeness,
            "reward": self.reward,
        }


@dataclass(frozen=True)
class RoundOutcome:
    record_id: str
    model_key: str
    evaluator_subset: tuple[str, ...]
    consensus_q: float
    inference_reward: float
    per_evaluator: tuple[EvaluatorOutcome, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "record_id": self.record_id,
            "model_key": self.model_key,
            "evaluator_subset": list(self.evaluator_subset),
            "consensus_q": self.consensus_q,
            "inference_reward": self.inference_reward,
            "per_evaluator": [e.to_dict() for e in self.per_evaluator],
        }

    @classmethod
    def from_dict(cls, obj: Mapping[str, Any]) -> "RoundOutcome":
        return cls(
            record_id=obj["record_id"],
            model_key=obj["model_key"],
            evaluator_subset=tuple(obj["evaluator_subset"]),
            consensus_q=obj["consensus_q"],
            inference_reward=obj["inference_reward"],
            per_evaluator=tuple(EvaluatorOutcome(**e) for e in obj["per_evaluator"]),
        )


def _check_scores(scores: Sequence[float]) -> None:
    if len(scores) == 0:
        raise ValueError("need at least one evaluator score")
    for e in scores:
        if not 0.0 <= e <= 10.0:
            raise ValueError(f"normalized score {e!r} outside [0, 10]")


def consensus_quality(scores: Sequence[float]) -> float:
    """Mean of the selected evaluators' scores, rescaled to [0, 1]."""
    _check_scores(scores)
    return math.fsum(scores) / (10.0 * len(scores))


def inference_reward(q: float, cost: float, params: RewardParams) -> float:
    return params.alpha_f * q - params.beta_f * cost


def evaluator_outcomes(
    scores: Sequence[tuple[str, float]],
    costs: Mapping[str, float],
    params: RewardParams,
) -> list[EvaluatorOutcome]:
    """Deviation, closeness and reward for each ``(evaluator_key, score)``.

    Deviation is measured against the mean of the whole subset, the
    evaluator's own score included, so a lone evaluator always has
    deviation 0.
    """
    values = [e for _, e in scores]
    _check_scores(values)
    mean = math.fsum(values) / len(values)
    out = []
    for key, e in scores:
        if key not in costs:
            raise KeyError(f"no cost for evaluator {key!r}")
        deviation = abs(e - mean) / 10.0
        closeness = 1.0 - deviation
        reward = params.alpha_m * closeness - params.beta_m * costs[key]
        out.append(EvaluatorOutcome(key, e, deviation, closeness, reward))
    return out


def run_round(
    record_id: str,
    model_key: str,
    subset: Sequence[str],
    scores: Mapping[str, float],
    inference_cost: float,
    eval_costs: Mapping[str, float],
    params: RewardParams,
) -> RoundOutcome:
    """Score one (record, model) pair with the given evaluator subset.

    ``scores`` maps evaluator key to its normalized score for this pair.
    """
    if len(set(subset)) != len(subset):
        raise ValueError(f"duplicate evaluators in subset {list(subset)}")
    missing = [m for m in subset if m not in scores]
    if missing:
        raise KeyError(f"no score from {missing} for ({record_id!r}, {model_key!r})")
    pairs = [(m, scores[m]) for m in subset]
    q = consensus_quality([e for _, e in pairs])
    return RoundOutcome(
        record_id=record_id,
        model_key=model_key,
        evaluator_subset=tuple(subset),
        consensus_q=q,
        inference_reward=inference_reward(q, inference_cost, params),
        per_evaluator=tuple(evaluator_outcomes(pairs, eval_costs, params)),
    )
