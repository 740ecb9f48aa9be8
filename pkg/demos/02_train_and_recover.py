"""
Train one agent per site, then let them react to a two-site outage
===================================================================

A short run so the script finishes in a minute or so; the trends get clearer with
more episodes.
"""

import numpy as np

from ranres import build_hex_layout, RanEnv, OutageScenario, TrainConfig, train, infer, policy_of
from ranres.baselines import neighbor_only_rollout, no_action_rollout

layout = build_hex_layout(1, 300.0, 0, 300)
env = RanEnv(layout, normalize_reward=True)

cfg = TrainConfig(episodes=40, steps_per_episode=50, hidden=(64, 64), gamma=0.5,
                  learning_rate=1e-2, warmup=200, seed=0, normalize_reward=True)
agents, log = train(env, cfg)
print('trained', len(agents), 'agents over', log.env_steps, 'steps')
print('episode return, first 5 vs last 5: %.3f  %.3f' % (np.mean(log.episode_returns[:5]),
                                                          np.mean(log.episode_returns[-5:])))

policy = policy_of(agents)
scenario = OutageScenario.of({1, 4})
runs = {'multi_agent': infer(policy, env, scenario, 10),
        'neighbor_only': neighbor_only_rollout(env, scenario, policy, 10),
        'no_action': no_action_rollout(env, scenario, 10)}

for kind, traj in runs.items():
    s = traj.final.snapshot
    print('%-14s coverage %.3f  service %.3f  reward %.3f' % (
        kind, s.p_coverage, s.p_service, env.state_reward(traj.final.state)))

# tilt / power the full policy ended with, one row per cell
print(runs['multi_agent'].final.state.config_matrix.reshape(7, 3, 2))
