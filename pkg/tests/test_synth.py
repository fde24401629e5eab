import json

import pytest

from poqsim.analysis import correlation_report
from poqsim.gt_metrics import score_generations
from poqsim.normalize import all_latency_costs, fit_all_spans, normalize_records
from poqsim.simulation import SimConfig, run_simulation
from poqsim.synth import (
    EvaluatorProfile,
    ModelProfile,
    SynthSpec,
    generate,
    deployment_spec,
    write_bundle,
)


def spec_with(evaluators, models=None, seed=1, n=200, tasks=("qa", "summarization")):
    models = models or (ModelProfile("m1", 5.0, 2.5, 100.0), ModelProfile("m2", 4.0, 2.5, 200.0))
    return SynthSpec(seed=seed, n_per_task=n, models=tuple(models), evaluators=tuple(evaluators), tasks=tasks)


def test_byte_identical(tmp_path):
    spec = deployment_spec(seed=3, n_per_task=20)
    a = write_bundle(generate(spec), tmp_path / "a")
    b = write_bundle(generate(spec), tmp_path / "b")
    for key in a:
        assert a[key].read_bytes() == b[key].read_bytes()


def test_gt_scores_survive_rescoring():
    recs = generate(deployment_spec(n_per_task=30)).generations
    assert [r.gt_score for r in score_generations(recs)] == [r.gt_score for r in recs]


def test_noiseless_channel():
    recs = generate(spec_with([EvaluatorProfile("e", 1.0, 1.0)])).generations
    assert all(r.eval_scores["e"].raw == r.gt_score for r in recs)
    recs = normalize_records(recs, fit_all_spans(recs))
    rows = correlation_report(recs, "e", "gt")
    assert all(r.pearson_r == pytest.approx(1.0) for r in rows)


def test_zero_fidelity():
    recs = generate(spec_with([EvaluatorProfile("e", 0.0, 1.0)], tasks=("qa",))).generations
    recs = normalize_records(recs, fit_all_spans(recs))
    (row, _) = correlation_report(recs, "e", "gt")
    assert row.n == 400
    assert abs(row.pearson_r) < 0.15


def test_shape_and_judge_subsample():
    spec = deployment_spec(n_per_task=50)
    b = generate(spec)
    assert len(b.tasks) == 100 and len(b.generations) == 500
    assert len(b.profiles) == 8
    # 30 per (task, model) group
    assert len(b.judgments) == 2 * 5 * 30
    assert {(j.id, j.model_key) for j in b.judgments} <= {r.key for r in b.generations}
    assert all(0 <= j.score <= 10 for j in b.judgments)


def test_spec_round_trip(tmp_path):
    spec = deployment_spec(seed=9, n_per_task=3)
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(spec.to_dict()))
    assert SynthSpec.load(path) == spec


@pytest.mark.parametrize("bad", [
    lambda: ModelProfile("m", 11.0, 1.0, 1.0),
    lambda: ModelProfile("m", 5.0, -1.0, 1.0),
    lambda: EvaluatorProfile("e", 1.5, 1.0),
    lambda: EvaluatorProfile("e", 0.5, 0.0),
    lambda: SynthSpec(seed=0, n_per_task=0, models=(ModelProfile("m", 1, 1, 1),), evaluators=()),
])
def test_invalid_profiles(bad):
    with pytest.raises(ValueError):
        bad()


def _pipeline_reward(spec, model, seed=0):
    b = generate(spec)
    recs = normalize_records(b.generations, fit_all_spans(b.generations))
    res = run_simulation(SimConfig(rounds=3000, seed=seed), b.tasks, recs, all_latency_costs(b.profiles))
    return res.stats_by_key()[model].avg_reward


def test_lower_latency_wins_with_equal_quality():
    models = (ModelProfile("fast", 5.0, 2.0, 100.0), ModelProfile("slow", 5.0, 2.0, 200.0))
    spec = spec_with([EvaluatorProfile("e1", 0.9, 1.0), EvaluatorProfile("e2", 0.6, 2.0)], models=models)
    b = generate(spec)
    recs = normalize_records(b.generations, fit_all_spans(b.generations))
    res = run_simulation(SimConfig(rounds=5000, seed=0), b.tasks, recs, all_latency_costs(b.profiles))
    s = res.stats_by_key()
    assert s["fast"].avg_reward > s["slow"].avg_reward


def test_planted_monotonicity():
    evaluators = [EvaluatorProfile("e1", 1.0, 1.0), EvaluatorProfile("e2", 0.8, 2.0, scale=3.0)]
    rewards = []
    for mean in (2.0, 3.0, 4.0, 5.0, 6.0):
        models = (ModelProfile("probe", mean, 1.5, 150.0), ModelProfile("anchor", 4.0, 2.0, 100.0),
                  ModelProfile("slow", 3.0, 2.0, 300.0))
        rewards.append(_pipeline_reward(spec_with(evaluators, models=models), "probe"))
    assert rewards == sorted(rewards)
