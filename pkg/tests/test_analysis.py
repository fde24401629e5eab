import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from poqsim.analysis import (
    UndefinedCorrelation,
    correlation_report,
    efficiency_frontier,
    pearson,
    write_correlations_csv,
)
from poqsim.normalize import fit_all_spans, normalize_records
from poqsim.records import EfficiencyProfile, EvalScore
from poqsim.synth import EvaluatorProfile, ModelProfile, SynthSpec, generate

from conftest import make_record


def pearson_oracle(xs, ys):
    """Computational (sum-of-products) form, plain Python."""
    n = len(xs)
    sx, sy = sum(xs), sum(ys)
    sxy = sum(x * y for x, y in zip(xs, ys))
    sxx = sum(x * x for x in xs)
    syy = sum(y * y for y in ys)
    return (n * sxy - sx * sy) / math.sqrt((n * sxx - sx * sx) * (n * syy - sy * sy))


small = st.floats(-100, 100, allow_nan=False)


class TestPearson:
    def test_perfect(self):
        assert pearson([1, 2, 3], [3, 5, 7]) == pytest.approx(1.0, abs=1e-15)
        assert pearson([1, 2, 3], [-1, -2, -3]) == pytest.approx(-1.0, abs=1e-15)

    def test_against_oracle(self):
        xs, ys = [1, 2, 3, 4], [2, 1, 4, 3]
        assert pearson_oracle(xs, ys) == pytest.approx(0.6, abs=1e-15)
        assert pearson(xs, ys) == pytest.approx(pearson_oracle(xs, ys), abs=1e-12)

    @given(st.lists(st.tuples(small, small), min_size=3, max_size=30))
    def test_against_oracle_property(self, pts):
        xs, ys = zip(*pts)
        assume(np.std(xs) > 1e-3 and np.std(ys) > 1e-3)
        assert pearson(xs, ys) == pytest.approx(pearson_oracle(xs, ys), abs=1e-6)

    @given(st.lists(st.tuples(small, small), min_size=3, max_size=30), st.floats(0.1, 10), small, st.floats(0.1, 10))
    def test_affine_invariance(self, pts, a, b, c):
        xs, ys = zip(*pts)
        assume(np.std(xs) > 1e-2 and np.std(ys) > 1e-2)
        r = pearson(xs, ys)
        assert pearson([a * x + b for x in xs], ys) == pytest.approx(r, abs=1e-9)
        assert pearson([-c * x for x in xs], ys) == pytest.approx(-r, abs=1e-9)

    def test_constant_is_undefined(self):
        with pytest.raises(UndefinedCorrelation):
            pearson([1, 1, 1], [1, 2, 3])

    def test_shape_errors(self):
        with pytest.raises(ValueError):
            pearson([1], [1])
        with pytest.raises(ValueError):
            pearson([1, 2], [1, 2, 3])


def recs(values, task="qa", judge=None):
    out = []
    for i, (e, g) in enumerate(values):
        out.append(make_record(f"{task}{i}", task_type=task, gt_score=g,
                               judge_score=None if judge is None else judge[i],
                               eval_scores={"e": EvalScore(0.0, e)}))
    return out


class TestCorrelationReport:
    def test_identity_signal(self):
        qa = recs([(g, g) for g in (1.0, 4.0, 2.0, 9.0)])
        summ = recs([(g, g) for g in (3.0, 0.5, 7.0)], "summarization")
        rows = correlation_report(qa + summ, "e", "gt")
        assert [(r.task_scope, r.n) for r in rows] == [("qa", 4), ("summarization", 3), ("averaged", 7)]
        assert all(r.pearson_r == pytest.approx(1.0) for r in rows)

    def test_averaged_is_unweighted_mean(self):
        qa = recs([(1.0, 1.0), (2.0, 1.0), (3.0, 4.0), (4.0, 3.0)])
        summ = recs([(1.0, 3.0), (2.0, 2.0), (3.0, 1.0)], "summarization")
        rows = {r.task_scope: r for r in correlation_report(qa + summ, "e", "gt")}
        assert rows["summarization"].pearson_r == pytest.approx(-1.0)
        expected = (pearson_oracle([1, 2, 3, 4], [1, 1, 4, 3]) - 1.0) / 2
        assert rows["averaged"].pearson_r == pytest.approx(expected, abs=1e-12)

    def test_judge_filtering(self):
        qa = recs([(1.0, 1.0), (2.0, 2.0), (3.0, 3.0), (4.0, 4.0)], judge=[2.0, None, 6.0, 7.0])
        (row, avg) = correlation_report(qa, "e", "judge")
        assert row.n == 3 and avg.n == 3

    def test_too_few_records_omitted(self):
        qa = recs([(1.0, 1.0)])
        assert correlation_report(qa, "e", "gt") == []

    def test_undefined_surfaced(self, tmp_path):
        qa = recs([(5.0, 1.0), (5.0, 2.0), (5.0, 3.0)])
        rows = correlation_report(qa, "e", "gt")
        assert len(rows) == 1 and rows[0].pearson_r is None
        write_correlations_csv(rows, tmp_path / "c.csv")
        assert "undefined" in (tmp_path / "c.csv").read_text()

    def test_shuffle_invariant(self):
        values = [(float(i % 7), float((i * 3) % 5)) for i in range(30)]
        rows = correlation_report(recs(values), "e", "gt")
        rng = np.random.default_rng(0)
        shuffled = [values[i] for i in rng.permutation(len(values))]
        again = correlation_report(recs(shuffled), "e", "gt")
        assert [r.pearson_r for r in rows] == pytest.approx([r.pearson_r for r in again], abs=1e-12)

    def test_planted_correlation(self):
        spec = SynthSpec(seed=5, n_per_task=200, tasks=("qa",),
                         models=(ModelProfile("m1", 5.0, 2.5, 1.0), ModelProfile("m2", 4.0, 2.5, 2.0)),
                         evaluators=(EvaluatorProfile("e", 0.7, 1.0, scale=2.0, offset=-3.0),))
        records = generate(spec).generations
        records = normalize_records(records, fit_all_spans(records))
        (row, _) = correlation_report(records, "e", "gt")
        assert row.n == 400
        assert row.pearson_r == pytest.approx(0.7, abs=0.1)


class TestEfficiencyFrontier:
    def profiles(self, **lat):
        return [EfficiencyProfile(k, "inference", v, 1.0, 0.0, 1) for k, v in lat.items()]

    def test_deployment_pattern(self):
        records = [make_record("q1", "llama", gt_score=5.3), make_record("q1", "qwen", gt_score=1.6)]
        pts = {p.model_key: p for p in efficiency_frontier(records, self.profiles(llama=1077.7, qwen=2320.6))}
        ratio = pts["llama"].quality_per_ms / pts["qwen"].quality_per_ms
        assert ratio == pytest.approx((5.3 / 1077.7) / (1.6 / 2320.6), rel=1e-12)
        assert ratio == pytest.approx(7.1, abs=0.1)

    def test_singleton(self):
        (p,) = efficiency_frontier([make_record(gt_score=4.0), make_record("q2", gt_score=6.0)], self.profiles(m1=50.0))
        assert (p.avg_quality, p.avg_latency_ms, p.quality_per_ms) == (5.0, 50.0, 0.1)
        assert p.avg_quality_judge is None

    def test_scaling_laws(self):
        records = [make_record("q1", "a", gt_score=3.0, judge_score=8.0), make_record("q1", "b", gt_score=6.0)]
        base = efficiency_frontier(records, self.profiles(a=10.0, b=40.0))
        slow = efficiency_frontier(records, self.profiles(a=20.0, b=80.0))
        for p, q in zip(base, slow):
            assert q.quality_per_ms == pytest.approx(p.quality_per_ms / 2)
        assert base[0].avg_quality_judge == 8.0

    def test_unprofiled_or_unscored_omitted(self):
        records = [make_record("q1", "a", gt_score=3.0), make_record("q1", "b")]
        assert [p.model_key for p in efficiency_frontier(records, self.profiles(b=1.0, c=2.0))] == []
