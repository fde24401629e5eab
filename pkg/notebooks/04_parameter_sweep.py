"""
Sweeping reward coefficients
============================

Scores and costs are computed once; only the reward weights change between
runs.  Each grid point gets its own seed derived from the base seed and its
index.
"""

# %%
from poqsim import SimConfig, generate, deployment_spec, sweep
from poqsim.normalize import all_latency_costs, fit_all_spans, normalize_records

bundle = generate(deployment_spec(seed=0, n_per_task=100))
records = normalize_records(bundle.generations, fit_all_spans(bundle.generations))
costs = all_latency_costs(bundle.profiles)

points = sweep(SimConfig(rounds=2000, seed=7), {"beta_f": [0.0, 0.5, 1.0, 2.0]}, bundle.tasks, records, costs)

# %%
models = [s.node_key for s in points[0].stats if s.node_type == "inference"]
print(f"{'':14}" + "".join(f"{m[:12]:>13}" for m in models))
for point in points:
    by_key = point.result.stats_by_key()
    print(f"{point.label:14}" + "".join(f"{by_key[m].avg_reward:13.3f}" for m in models))
