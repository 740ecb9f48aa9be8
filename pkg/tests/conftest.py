"""Shared fixtures for the statistical checks: a small 7-site model and the 1-site toy runs.

Both are trained once per session. Acceptance lines are collected here and echoed in the
terminal summary so they appear in the plain ``pytest -v`` log.
"""

import numpy as np
import pytest

from ranres.env import N_ACTIONS, RanEnv
from ranres.layout import build_hex_layout
from ranres.marl import TrainConfig, policy_of, qnet_forward, smoothed, train

ACCEPTANCE_LINES = []

# gamma 0.5 and SGD at 1e-2: at the default gamma the telescoping reward leaves the
# top actions a Q gap of (1 - gamma) * dR and this scaled-down run diverges
SCALED_TRAIN = dict(gamma=0.5, learning_rate=1e-2, optimizer="sgd", normalize_reward=True)
TOY_SEEDS = range(10)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def toy_env():
    return RanEnv(build_hex_layout(0, 300.0, 0, 50), normalize_reward=True)


@pytest.fixture(scope="session")
def toy_sweep(toy_env):
    s0 = toy_env.reset()
    return s0, np.array([toy_env.step(s0, {0: a})[1] for a in range(N_ACTIONS)])


@pytest.fixture(scope="session")
def toy_runs(toy_env, toy_sweep):
    """Per seed: greedy action after training, its share of the best one-step reward, losses."""
    s0, rewards = toy_sweep
    best = rewards.max()
    runs = []
    for seed in TOY_SEEDS:
        cfg = TrainConfig(episodes=200, steps_per_episode=50, l_max=0, seed=seed, **SCALED_TRAIN)
        agents, log = train(toy_env, cfg)
        a = int(np.argmax(qnet_forward(agents[0].online, s0.observation)))
        runs.append(dict(seed=seed, action=a, ratio=rewards[a] / best,
                         smoothed_loss=smoothed(log.losses[0], 500)))
    return runs


@pytest.fixture(scope="session")
def seven_site():
    """7 sites, 500 users, 300 episodes of 100 steps. Returns (env, policy)."""
    env = RanEnv(build_hex_layout(1, 300.0, 0, 500), normalize_reward=True)
    cfg = TrainConfig(episodes=300, steps_per_episode=100, seed=0, **SCALED_TRAIN)
    agents, _ = train(env, cfg)
    return env, policy_of(agents)
