"""Statistical checks on the session-trained 7-site model (see conftest)."""

import numpy as np
import pytest

from ranres.baselines import neighbor_only_rollout
from ranres.config import LayoutConfig, ScenarioConfig
from ranres.dynamic import run_dynamic
from ranres.env import OutageScenario
from ranres.marl import infer

pytestmark = pytest.mark.slow


def _scenario(seed, n_off):
    rng = np.random.default_rng(np.random.SeedSequence([seed, 7]))
    return OutageScenario.of(int(s) for s in rng.choice(7, n_off, replace=False))


def test_two_site_outage_never_loses_coverage(seven_site):
    env, policy = seven_site
    held = 0
    for seed in range(20):
        traj = infer(policy, env, _scenario(seed, 2), 10)
        start = env.evaluate(env.reset(_scenario(seed, 2)))[1].p_coverage
        held += traj.final.snapshot.p_coverage >= start
    assert held >= 16


def test_full_policy_beats_neighbor_only_in_median_reward(seven_site):
    env, policy = seven_site
    full, local = [], []
    for seed in range(20):
        sc = _scenario(seed, 1)
        full.append(env.state_reward(infer(policy, env, sc, 10).final.state))
        local.append(env.state_reward(neighbor_only_rollout(env, sc, policy, 10).final.state))
    assert np.median(full) >= np.median(local)


def test_dynamic_recovery_not_below_post_outage(seven_site):
    env, policy = seven_site
    end, after = [], []
    for seed in range(20):
        cfg = ScenarioConfig(layout=LayoutConfig(n_users=500), n_outage=1, seed=seed)
        rec = run_dynamic(cfg, policy, env).records
        end.append(rec[-1].p_coverage)
        after.append(rec[31].p_coverage)
    assert np.median(end) >= np.median(after)
