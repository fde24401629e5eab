"""
Node costs and single-round rewards
===================================

Average latencies are min-max scaled into [0, 1] within each node pool.  A
round then combines the selected evaluators' scores into a consensus
quality, pays the inference node quality minus cost, and pays each
evaluator for agreeing with the subset mean, minus its own cost.
"""

# %%
from poqsim import EfficiencyProfile, RewardParams, inference_reward, latency_costs, run_round

latency = {"gemma_2_2b_it": 1108.0, "llama_3_2_3b": 1077.7, "phi3_mini_4k": 2409.3,
           "qwen2_1_5b": 2320.6, "tinyllama_1_1b": 1470.1}
profiles = [EfficiencyProfile(k, "inference", v, 1000.0 / v, 0.0, 1) for k, v in latency.items()]
for cost in latency_costs(profiles, "inference"):
    print(f"{cost.node_key:16} {cost.avg_latency_ms:8.1f} ms  cost {cost.cost_norm:.3f}")

# %%
# One round: three evaluators score an answer from tinyllama.
params = RewardParams(alpha_f=1.0, beta_f=1.0, alpha_m=1.0, beta_m=1.0, k=3)
scores = {"sts_stsb": 7.0, "ce_minilm": 4.0, "ce_deberta": 6.5}
eval_costs = {"sts_stsb": 0.0, "ce_minilm": 0.02, "ce_deberta": 1.0}
outcome = run_round("qa-0001", "tinyllama_1_1b", list(scores), scores, 0.295, eval_costs, params)
print(f"consensus quality {outcome.consensus_q:.3f}, inference reward {outcome.inference_reward:+.3f}")
for ev in outcome.per_evaluator:
    print(f"  {ev.evaluator_key:10} e={ev.norm_score:4.1f} d={ev.deviation:.3f} reward={ev.reward:+.3f}")

# %%
# Raising the cost weight moves reward away from slow nodes.
for beta in (0.0, 0.5, 1.0, 2.0):
    p = RewardParams(beta_f=beta)
    print(beta, [round(inference_reward(0.6, c, p), 3) for c in (0.0, 0.295, 1.0)])
