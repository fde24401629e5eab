"""
Monte Carlo PoQ simulation
==========================

Five inference nodes and three evaluators, shaped like a small real
deployment: two fast, strong models, one middling one, two slow, weak ones,
and one informative evaluator beside two noisy ones.  5000 rounds sample a
record, a model and an evaluator subset each time.
"""

# %%
from poqsim import SimConfig, generate, deployment_spec, run_simulation
from poqsim.normalize import all_latency_costs, fit_all_spans, normalize_records

bundle = generate(deployment_spec(seed=0, n_per_task=200))
records = normalize_records(bundle.generations, fit_all_spans(bundle.generations))
costs = all_latency_costs(bundle.profiles)

result = run_simulation(SimConfig(rounds=5000, seed=1), bundle.tasks, records, costs, keep_trace=True)
print(f"{'type':9} {'node':16} {'avg reward':>10} {'latency':>8} {'cost':>6} {'jobs':>5}")
for s in result.stats:
    print(f"{s.node_type:9} {s.node_key:16} {s.avg_reward:10.3f} {s.avg_latency_ms:8.1f} {s.cost_norm:6.3f} {s.job_count:5d}")

# %%
# The trace holds every round; the first few:
for outcome in result.trace[:3]:
    print(outcome.record_id, outcome.model_key, outcome.evaluator_subset, round(outcome.consensus_q, 3))

# %%
# Sampling K per round instead of always using all three evaluators.
varied = run_simulation(SimConfig(rounds=5000, seed=1, k_policy="uniform_1_to_3"), bundle.tasks, records, costs)
for s in varied.stats:
    if s.node_type == "eval":
        print(f"{s.node_key:12} jobs {s.job_count:5d} avg reward {s.avg_reward:.3f}")
