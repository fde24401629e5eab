"""
Ground-truth scoring and evaluator normalization
=================================================

Token F1 against the reference gives the ground-truth quality of an answer
on a 0-10 scale.  Evaluator scores arrive on arbitrary scales and are
min-max normalized per task type before they are used as quality signals.
"""

# %%
from poqsim import normalize_text, token_f1

print(normalize_text("The cat sat on the mat."))
for pred, ref in [("the cat sat", "cat sat down"), ("cat cat", "cat"), ("", "")]:
    r = token_f1(pred, ref)
    print(f"{pred!r:16} vs {ref!r:16} P={r.precision:.3f} R={r.recall:.3f} F1={r.f1:.3f} score={r.scaled:.1f}")

# %%
# A small synthetic metric file: two models, one evaluator whose raw scores
# live on a shifted and stretched scale.
from poqsim import EvaluatorProfile, ModelProfile, SynthSpec, generate
from poqsim.normalize import fit_all_spans, normalize_records

spec = SynthSpec(
    seed=0,
    n_per_task=5,
    models=(ModelProfile("big", 6.0, 2.0, 900.0), ModelProfile("small", 3.0, 2.0, 400.0)),
    evaluators=(EvaluatorProfile("sts", 0.8, 1.0, scale=0.05, offset=0.3),),
)
records = generate(spec).generations
spans = fit_all_spans(records)
for span in spans:
    print(span)

# %%
normalized = normalize_records(records, spans)
for rec in normalized[:6]:
    s = rec.eval_scores["sts"]
    print(f"{rec.id:20} {rec.model_key:6} gt={rec.gt_score:4.1f} raw={s.raw:+.3f} norm={s.norm:5.2f}")
