"""Cost-aware Proof-of-Quality simulation and incentive analysis."""

__version__ = "0.1.0"

from .analysis import CorrelationReport, EfficiencyPoint, UndefinedCorrelation, correlation_report, efficiency_frontier, pearson
from .core import RewardParams, RoundOutcome, consensus_quality, evaluator_outcomes, inference_reward, run_round
from .gt_metrics import TokenF1Result, normalize_text, score_generations, token_f1
from .normalize import NodeCost, NormalizationSpan, apply_span, fit_spans, latency_costs, normalize_records
from .records import (
    EfficiencyProfile,
    EvalScore,
    GenerationRecord,
    Judgment,
    NodePool,
    RecordError,
    TaskRecord,
    load_corpus,
    load_efficiency,
    load_generations,
    load_judgments,
    merge_scores,
    save_jsonl,
)
from .simulation import NodeStats, SimConfig, SimulationResult, run_simulation, sweep
from .synth import EvaluatorProfile, ModelProfile, SynthSpec, generate, deployment_spec
