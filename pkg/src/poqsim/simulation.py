"""Seeded Monte Carlo driver for repeated PoQ rounds and parameter sweeps.

All randomness comes from one ``numpy.random.Generator`` backed by PCG64,
seeded from ``SimConfig.seed``.  Each round draws, in order: the record
index, the inference node, the subset size (only under the
``uniform_1_to_3`` policy), then the evaluator subset.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .core import MAX_K, RewardParams, RoundOutcome, run_round
from .normalize import NodeCost
from .records import GenerationRecord, NodePool, TaskRecord, dumps_line

K_POLICIES = ("fixed", "uniform_1_to_3")
SCHEDULING = ("uniform",)
GRID_KEYS = ("alpha_f", "beta_f", "alpha_m", "beta_m", "k")


@dataclass(frozen=True)
class SimConfig:
    rounds: int = 5000
    seed: int = 0
    params: RewardParams = field(default_factory=RewardParams)
    scheduling: str = "uniform"
    k_policy: str = "fixed"

    def __post_init__(self):
        if isinstance(self.rounds, bool) or not isinstance(self.rounds, int) or self.rounds < 1:
            raise ValueError(f"rounds must be a positive integer, got {self.rounds!r}")
        if not isinstance(self.seed, (int, np.integer)) or not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if self.scheduling not in SCHEDULING:
            raise ValueError(f"scheduling must be one of {SCHEDULING}, got {self.scheduling!r}")
        if self.k_policy not in K_POLICIES:
            raise ValueError(f"k_policy must be one of {K_POLICIES}, got {self.k_policy!r}")

    def to_dict(self) -> dict[str, Any]:
        p = self.params
        return {
            "rounds": self.rounds,
            "seed": int(self.seed),
            "alpha_f": p.alpha_f,
            "beta_f": p.beta_f,
            "alpha_m": p.alpha_m,
            "beta_m": p.beta_m,
            "k": p.k,
            "k_policy": self.k_policy,
            "scheduling": self.scheduling,
        }


@dataclass
class NodeStats:
    node_key: str
    node_type: str
    cost_norm: float
    total_reward: float = 0.0
    job_count: int = 0
    avg_latency_ms: float | None = None

    @property
    def avg_reward(self) -> float:
        if self.job_count == 0:
            return math.nan
        return self.total_reward / self.job_count


@dataclass(frozen=True)
class SimEvent:
    """A round that could not use the configured subset size."""

    round_index: int
    record_id: str
    model_key: str
    kind: str  # "reduced_k" or "skipped"
    requested_k: int
    available: int


@dataclass
class SimulationResult:
    config: SimConfig
    stats: list[NodeStats]
    trace: list[RoundOutcome] | None
    events: list[SimEvent]
    executed_rounds: int

    def stats_by_key(self) -> dict[str, NodeStats]:
        return {s.node_key: s for s in self.stats}


def _score_table(records: Iterable[GenerationRecord]) -> dict[tuple[str, str], dict[str, float]]:
    table = {}
    for rec in records:
        table[rec.key] = {
            key: score.norm for key, score in sorted(rec.eval_scores.items()) if score.norm is not None
        }
    return table


def run_simulation(
    config: SimConfig,
    corpus: Sequence[TaskRecord] | None,
    scored_records: Sequence[GenerationRecord],
    costs: Sequence[NodeCost],
    keep_trace: bool = False,
) -> SimulationResult:
    """Run ``config.rounds`` PoQ rounds over pre-scored records.

    Records are sampled uniformly from ``corpus`` (or, when it is None, from
    the distinct ids of ``scored_records`` in file order).  Inference nodes
    are the sorted model keys of ``scored_records``.  A round with fewer
    scored evaluators than requested runs with what is available; a round
    with none is skipped.  Both cases are reported in ``events``.
    """
    if corpus is None:
        record_ids = list(dict.fromkeys(rec.id for rec in scored_records))
    else:
        record_ids = [t.id for t in corpus]
    if not record_ids:
        raise ValueError("no records to sample from")
    pool = NodePool.from_records(scored_records)
    models = list(pool.inference_nodes)

    inference_costs = {c.node_key: c for c in costs if c.node_type == "inference"}
    eval_costs = {c.node_key: c for c in costs if c.node_type == "eval"}
    missing = [m for m in models if m not in inference_costs]
    missing += [m for m in pool.eval_nodes if m not in eval_costs]
    if missing:
        raise KeyError(f"no cost for nodes {missing}")
    eval_cost_values = {k: c.cost_norm for k, c in eval_costs.items()}

    stats: dict[str, NodeStats] = {}
    for m in models:
        c = inference_costs[m]
        stats[m] = NodeStats(m, "inference", c.cost_norm, avg_latency_ms=c.avg_latency_ms)
    for m in pool.eval_nodes:
        c = eval_costs[m]
        stats[m] = NodeStats(m, "eval", c.cost_norm, avg_latency_ms=c.avg_latency_ms)

    table = _score_table(scored_records)
    params = config.params
    rng = np.random.Generator(np.random.PCG64(config.seed))
    trace: list[RoundOutcome] | None = [] if keep_trace else None
    events: list[SimEvent] = []
    executed = 0

    for round_index in range(config.rounds):
        record_id = record_ids[int(rng.integers(len(record_ids)))]
        model = models[int(rng.integers(len(models)))]
        if config.k_policy == "uniform_1_to_3":
            k = int(rng.integers(1, MAX_K + 1))
        else:
            k = params.k
        scores = table.get((record_id, model), {})
        available = list(scores)
        if not available:
            events.append(SimEvent(round_index, record_id, model, "skipped", k, 0))
            continue
        if len(available) < k:
            events.append(SimEvent(round_index, record_id, model, "reduced_k", k, len(available)))
            k = len(available)
        picks = rng.choice(len(available), size=k, replace=False)
        subset = [available[int(j)] for j in picks]

        outcome = run_round(
            record_id,
            model,
            subset,
            scores,
            inference_costs[model].cost_norm,
            eval_cost_values,
            params,
        )
        executed += 1
        node = stats[model]
        node.total_reward += outcome.inference_reward
        node.job_count += 1
        for ev in outcome.per_evaluator:
            node = stats[ev.evaluator_key]
            node.total_reward += ev.reward
            node.job_count += 1
        if trace is not None:
            trace.append(outcome)

    return SimulationResult(config, list(stats.values()), trace, events, executed)


# ---------------------------------------------------------------------------
# sweeps


@dataclass
class SweepPoint:
    index: int
    label: str
    config: SimConfig
    result: SimulationResult

    @property
    def stats(self) -> list[NodeStats]:
        return self.result.stats


def derive_seed(base_seed: int, index: int) -> int:
    """Seed for grid point ``index``; stable across platforms and numpy versions."""
    state = np.random.SeedSequence([int(base_seed), int(index)]).generate_state(1, np.uint64)
    return int(state[0])


def expand_grid(base: SimConfig, grid: Mapping[str, Sequence[Any]]) -> list[tuple[str, SimConfig]]:
    """Cartesian product of ``grid`` over the base config, in key order given."""
    unknown = [k for k in grid if k not in GRID_KEYS]
    if unknown:
        raise ValueError(f"unknown grid keys {unknown}; expected a subset of {GRID_KEYS}")
    keys = [k for k in grid]
    for k in keys:
        if len(grid[k]) == 0:
            raise ValueError(f"grid axis {k!r} is empty")
    points = []
    for index, values in enumerate(itertools.product(*(grid[k] for k in keys))):
        overrides = dict(zip(keys, values))
        if "k" in overrides:
            overrides["k"] = int(overrides["k"])
        params = replace(base.params, **overrides)
        config = replace(base, params=params, seed=derive_seed(base.seed, index))
        label = ",".join(f"{k}={overrides[k]}" for k in keys) or "base"
        points.append((label, config))
    return points


def _run_point(args):
    config, corpus, records, costs, keep_trace = args
    return run_simulation(config, corpus, records, costs, keep_trace=keep_trace)


def sweep(
    base_config: SimConfig,
    grid: Mapping[str, Sequence[Any]],
    corpus: Sequence[TaskRecord] | None,
    scored_records: Sequence[GenerationRecord],
    costs: Sequence[NodeCost],
    workers: int = 1,
    keep_trace: bool = False,
) -> list[SweepPoint]:
    """One simulation per grid point, optionally across ``workers`` processes.

    Results are identical whatever ``workers`` is, since each point owns its
    derived seed.
    """
    points = expand_grid(base_config, grid)
    jobs = [(config, corpus, scored_records, costs, keep_trace) for _, config in points]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_point, jobs))
    else:
        results = [_run_point(job) for job in jobs]
    return [
        SweepPoint(index, label, config, result)
        for index, ((label, config), result) in enumerate(zip(points, results))
    ]


# ---------------------------------------------------------------------------
# output formats

STATS_FIELDS = ("node_type", "node_key", "avg_reward", "avg_latency_ms", "cost_norm", "jobs")


def _fmt(value: float | None) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return repr(float(value))


def stats_csv(stats: Iterable[NodeStats]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(STATS_FIELDS)
    for s in stats:
        writer.writerow(
            [s.node_type, s.node_key, _fmt(s.avg_reward), _fmt(s.avg_latency_ms), _fmt(s.cost_norm), s.job_count]
        )
    return buf.getvalue()


def write_stats_csv(stats: Iterable[NodeStats], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(stats_csv(stats), encoding="utf-8", newline="")


def write_trace(trace: Iterable[RoundOutcome], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for outcome in trace:
            fh.write(dumps_line(outcome.to_dict()))
            fh.write("\n")
