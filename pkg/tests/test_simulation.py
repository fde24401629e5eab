import math
from dataclasses import replace

import pytest

from poqsim.core import RewardParams
from poqsim.normalize import NodeCost, all_latency_costs, fit_all_spans, normalize_records
from poqsim.records import EvalScore, TaskRecord
from poqsim.simulation import (
    SimConfig,
    derive_seed,
    expand_grid,
    run_simulation,
    stats_csv,
    sweep,
    write_trace,
)
from poqsim.synth import EvaluatorProfile, ModelProfile, SynthSpec, generate

from conftest import make_record

UNIT = RewardParams()


def tiny_inputs(score=10.0):
    recs = [make_record("q1", "m1", eval_scores={"e1": EvalScore(0.0, score)})]
    costs = [NodeCost("m1", "inference", 0.0), NodeCost("e1", "eval", 0.0)]
    return recs, costs


def synthetic(models, evaluators=None, seed=3, n=100):
    evaluators = evaluators or (
        EvaluatorProfile("good", 0.9, 1.0),
        EvaluatorProfile("okay", 0.7, 2.0, scale=5.0),
        EvaluatorProfile("weak", 0.3, 3.0, offset=4.0),
    )
    spec = SynthSpec(seed=seed, n_per_task=n, models=tuple(models), evaluators=tuple(evaluators))
    bundle = generate(spec)
    recs = normalize_records(bundle.generations, fit_all_spans(bundle.generations))
    return bundle.tasks, recs, all_latency_costs(bundle.profiles)


class TestSimConfig:
    @pytest.mark.parametrize("kw", [{"rounds": 0}, {"seed": -1}, {"seed": 2**64}, {"k_policy": "random"}, {"scheduling": "rr"}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            SimConfig(**kw)


class TestRunSimulation:
    def test_one_round(self):
        recs, costs = tiny_inputs()
        res = run_simulation(SimConfig(rounds=1, seed=0, params=RewardParams(k=1)), None, recs, costs)
        m1 = res.stats_by_key()["m1"]
        assert (m1.job_count, m1.avg_reward) == (1, 1.0)
        assert res.stats_by_key()["e1"].avg_reward == 1.0

    def test_reduced_k_is_recorded(self):
        recs, costs = tiny_inputs()
        res = run_simulation(SimConfig(rounds=3, seed=0), None, recs, costs)
        assert res.executed_rounds == 3
        assert [e.kind for e in res.events] == ["reduced_k"] * 3
        assert res.events[0].available == 1

    def test_skipped_round(self):
        # m2 has only a raw score, so no evaluator is usable for it
        recs = [make_record("q1", "m1", eval_scores={"e1": EvalScore(0.0, 5.0)}),
                make_record("q1", "m2", eval_scores={"e1": EvalScore(0.0)})]
        costs = [NodeCost("m1", "inference", 0.0), NodeCost("m2", "inference", 1.0), NodeCost("e1", "eval", 0.0)]
        res = run_simulation(SimConfig(rounds=200, seed=1), None, recs, costs)
        skipped = [e for e in res.events if e.kind == "skipped"]
        assert skipped and all(e.model_key == "m2" for e in skipped)
        stats = res.stats_by_key()
        assert stats["m2"].job_count == 0 and math.isnan(stats["m2"].avg_reward)
        assert stats["m1"].job_count == res.executed_rounds == 200 - len(skipped)

    def test_missing_cost(self):
        recs, _ = tiny_inputs()
        with pytest.raises(KeyError, match="e1"):
            run_simulation(SimConfig(rounds=1), None, recs, [NodeCost("m1", "inference", 0.0)])

    def test_corpus_defines_sampling_pool(self):
        recs, costs = tiny_inputs()
        corpus = [TaskRecord("q1", "squad", "qa", "x", "y"), TaskRecord("q2", "squad", "qa", "x", "y")]
        res = run_simulation(SimConfig(rounds=100, seed=5), corpus, recs, costs)
        skipped = sum(e.kind == "skipped" for e in res.events)
        assert 0 < skipped < 100
        assert res.executed_rounds + skipped == 100

    def test_determinism(self, deployment_inputs):
        corpus, recs, costs = deployment_inputs
        cfg = SimConfig(rounds=500, seed=42)
        a = run_simulation(cfg, corpus, recs, costs, keep_trace=True)
        b = run_simulation(cfg, corpus, recs, costs, keep_trace=True)
        assert stats_csv(a.stats) == stats_csv(b.stats)
        assert a.trace == b.trace
        c = run_simulation(SimConfig(rounds=500, seed=43), corpus, recs, costs, keep_trace=True)
        assert c.trace != a.trace

    def test_conservation_and_subsets(self, deployment_inputs):
        corpus, recs, costs = deployment_inputs
        for policy in ("fixed", "uniform_1_to_3"):
            res = run_simulation(SimConfig(rounds=600, seed=7, k_policy=policy, params=RewardParams(k=2)),
                                 corpus, recs, costs, keep_trace=True)
            inference = [s for s in res.stats if s.node_type == "inference"]
            assert sum(s.job_count for s in inference) == res.executed_rounds == 600
            sizes = {len(o.evaluator_subset) for o in res.trace}
            assert sizes == ({2} if policy == "fixed" else {1, 2, 3})
            for o in res.trace:
                assert len(set(o.evaluator_subset)) == len(o.evaluator_subset)
            evals = [s for s in res.stats if s.node_type == "eval"]
            assert sum(s.job_count for s in evals) == sum(len(o.evaluator_subset) for o in res.trace)
            assert all(s.job_count <= 600 for s in evals)

    def test_zero_cost_node_reward_is_alpha_times_mean_q(self, deployment_inputs):
        corpus, recs, costs = deployment_inputs
        params = RewardParams(alpha_f=1.7, beta_f=2.0)
        res = run_simulation(SimConfig(rounds=800, seed=11, params=params), corpus, recs, costs, keep_trace=True)
        zero = [c.node_key for c in costs if c.node_type == "inference" and c.cost_norm == 0.0][0]
        qs = [o.consensus_q for o in res.trace if o.model_key == zero]
        expected = sum(params.alpha_f * q for q in qs) / len(qs)
        assert res.stats_by_key()[zero].avg_reward == pytest.approx(expected, rel=1e-12)

    def test_higher_cost_identical_quality_earns_less(self):
        models = [ModelProfile("cheap", 5.0, 2.0, 100.0), ModelProfile("dear", 5.0, 2.0, 200.0)]
        corpus, recs, costs = synthetic(models)
        # give both models identical score distributions by copying cheap's scores onto dear
        by_key = {(r.id, r.model_key): r for r in recs}
        recs = [replace(r, eval_scores=by_key[(r.id, "cheap")].eval_scores) for r in recs]
        res = run_simulation(SimConfig(rounds=5000, seed=2), corpus, recs, costs)
        s = res.stats_by_key()
        assert s["cheap"].avg_reward > s["dear"].avg_reward


class TestSweep:
    def test_singleton_matches_run(self, deployment_inputs):
        corpus, recs, costs = deployment_inputs
        base = SimConfig(rounds=300, seed=9)
        (point,) = sweep(base, {"beta_f": [0.5]}, corpus, recs, costs)
        direct = run_simulation(SimConfig(rounds=300, seed=derive_seed(9, 0), params=RewardParams(beta_f=0.5)),
                                corpus, recs, costs)
        assert stats_csv(point.stats) == stats_csv(direct.stats)

    def test_cardinality_and_labels(self, deployment_inputs):
        corpus, recs, costs = deployment_inputs
        points = sweep(SimConfig(rounds=50), {"alpha_f": [1, 2], "k": [1, 3]}, corpus, recs, costs)
        assert len(points) == 4
        assert len({p.label for p in points}) == 4
        assert len({p.config.seed for p in points}) == 4
        assert points[3].config.params.alpha_f == 2 and points[3].config.params.k == 3

    def test_parallel_matches_serial(self, deployment_inputs):
        corpus, recs, costs = deployment_inputs
        grid = {"beta_f": [0.0, 1.0]}
        serial = sweep(SimConfig(rounds=200), grid, corpus, recs, costs)
        parallel = sweep(SimConfig(rounds=200), grid, corpus, recs, costs, workers=2)
        assert [stats_csv(p.stats) for p in serial] == [stats_csv(p.stats) for p in parallel]

    def test_beta_f_effect(self, deployment_inputs):
        corpus, recs, costs = deployment_inputs
        # same seed for both beta values so the sampled rounds coincide
        runs = {b: run_simulation(SimConfig(rounds=3000, seed=4, params=RewardParams(beta_f=b)), corpus, recs, costs,
                                  keep_trace=True) for b in (0.0, 1.0)}
        cost = {c.node_key: c.cost_norm for c in costs}
        free = runs[0.0].stats_by_key()
        paid = runs[1.0].stats_by_key()
        models = [k for k, c in cost.items() if k in free and free[k].node_type == "inference"]
        # quality-only ordering at beta_f = 0
        mean_q = {}
        for m in models:
            qs = [o.consensus_q for o in runs[0.0].trace if o.model_key == m]
            mean_q[m] = sum(qs) / len(qs)
        assert sorted(models, key=lambda m: free[m].avg_reward) == sorted(models, key=mean_q.get)
        dearest = max(models, key=cost.get)
        cheapest = min(models, key=cost.get)
        assert paid[dearest].avg_reward < free[dearest].avg_reward
        assert paid[cheapest].avg_reward == free[cheapest].avg_reward

    def test_bad_grid(self):
        with pytest.raises(ValueError):
            expand_grid(SimConfig(), {"gamma": [1]})
        with pytest.raises(ValueError):
            expand_grid(SimConfig(), {"k": []})


def test_stats_csv_layout(tmp_path):
    recs, costs = tiny_inputs()
    res = run_simulation(SimConfig(rounds=2, seed=0, params=RewardParams(k=1)), None, recs, costs, keep_trace=True)
    lines = stats_csv(res.stats).splitlines()
    assert lines[0] == "node_type,node_key,avg_reward,avg_latency_ms,cost_norm,jobs"
    assert lines[1] == "inference,m1,1.0,,0.0,2"
    write_trace(res.trace, tmp_path / "t.jsonl")
    assert len((tmp_path / "t.jsonl").read_text().splitlines()) == 2
