import pytest

from poqsim.normalize import all_latency_costs, fit_all_spans, normalize_records
from poqsim.records import EvalScore, GenerationRecord
from poqsim.synth import generate, deployment_spec

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def deployment_bundle():
    return generate(deployment_spec(seed=0))


@pytest.fixture(scope="session")
def deployment_inputs(deployment_bundle):
    recs = normalize_records(deployment_bundle.generations, fit_all_spans(deployment_bundle.generations))
    return deployment_bundle.tasks, recs, all_latency_costs(deployment_bundle.profiles)


def make_record(id="q1", model_key="m1", task_type="qa", output="cat sat", reference="cat sat", **kw):
    evals = kw.pop("eval_scores", {})
    evals = {k: v if isinstance(v, EvalScore) else EvalScore(*v) if isinstance(v, tuple) else EvalScore(v)
             for k, v in evals.items()}
    return GenerationRecord(
        id=id,
        dataset=kw.pop("dataset", "squad" if task_type == "qa" else "cnn_dailymail"),
        task_type=task_type,
        model_key=model_key,
        prompt=kw.pop("prompt", "what sat?"),
        reference=reference,
        output=output,
        eval_scores=evals,
        **kw,
    )
