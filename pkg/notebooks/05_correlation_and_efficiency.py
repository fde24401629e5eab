"""
Evaluator correlation and quality per millisecond
=================================================

Which evaluators track ground truth, and which models buy their quality
cheaply.  Correlations are computed per task and then averaged; judge
correlations only use the judged subsample.
"""

# %%
from poqsim import correlation_report, efficiency_frontier, generate, merge_scores, deployment_spec
from poqsim.normalize import fit_all_spans, normalize_records
from poqsim.records import judgments_to_map

bundle = generate(deployment_spec(seed=0, n_per_task=200))
records = normalize_records(bundle.generations, fit_all_spans(bundle.generations))
records = merge_scores(records, judges=judgments_to_map(bundle.judgments))

for evaluator in ("sts_stsb", "ce_deberta", "ce_minilm"):
    for reference in ("gt", "judge"):
        avg = correlation_report(records, evaluator, reference)[-1]
        print(f"{evaluator:10} vs {reference:5} r={avg.pearson_r:+.3f} (n={avg.n})")

# %%
points = efficiency_frontier(records, bundle.profiles)
best = max(points, key=lambda p: p.quality_per_ms)
for p in sorted(points, key=lambda p: -p.quality_per_ms):
    print(f"{p.model_key:16} quality {p.avg_quality:4.2f} latency {p.avg_latency_ms:7.1f} ms "
          f"q/ms {p.quality_per_ms * 1000:.2f}e-3  ({best.quality_per_ms / p.quality_per_ms:.1f}x behind best)")
