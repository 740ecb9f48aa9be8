import numpy as np
import pytest

from ranres.baselines import BaselinePolicy, compensating_sites, neighbor_only_rollout, no_action_rollout
from ranres.env import N_ACTIONS, NOOP_ACTION, OutageScenario, RanEnv
from ranres.layout import build_hex_layout, neighbor_sites
from ranres.marl import QNetworkParams


def constant_net(n_in, action):
    b = np.zeros(N_ACTIONS)
    b[action] = 1.0
    return QNetworkParams([np.zeros((n_in, 4)), np.zeros((4, N_ACTIONS))], [np.zeros(4), b])


@pytest.fixture(scope="module")
def env():
    return RanEnv(build_hex_layout(1, 300.0, 0, 2500))


@pytest.fixture(scope="module")
def always_up():
    return {s: constant_net(42, N_ACTIONS - 1) for s in range(7)}


def test_no_action_keeps_configuration(env):
    traj = no_action_rollout(env, OutageScenario.of({0, 3}), 5)
    assert len(traj) == 5
    assert all(r.state.key() == traj.initial.state.key() for r in traj.steps)
    assert all(r.reward == 0.0 for r in traj.steps)


def test_no_action_zero_steps(env):
    assert len(no_action_rollout(env, OutageScenario.of({1}), 0)) == 0


def test_no_action_single_outage_below_golden(env):
    golden = env.evaluate(env.reset())[1].p_coverage
    traj = no_action_rollout(env, OutageScenario.of({0}), 3)
    assert traj.final.snapshot.p_coverage < golden


def _acting(traj):
    return {s for s, a in traj.steps[0].actions.items() if a != NOOP_ACTION}


def test_centre_outage_all_ring_agents_act(env, always_up):
    traj = neighbor_only_rollout(env, OutageScenario.of({0}), always_up, 2)
    assert _acting(traj) == neighbor_sites(env.layout, 0) == {1, 2, 3, 4, 5, 6}


@pytest.mark.parametrize("site", range(1, 7))
def test_ring_outage_three_agents_act(env, always_up, site):
    traj = neighbor_only_rollout(env, OutageScenario.of({site}), always_up, 1)
    assert _acting(traj) == neighbor_sites(env.layout, site)
    assert len(_acting(traj)) == 3


def test_no_outage_degenerates_to_no_action(env, always_up):
    a = neighbor_only_rollout(env, OutageScenario(0), always_up, 3)
    b = no_action_rollout(env, OutageScenario(0), 3)
    assert _acting(a) == set()
    assert [r.state.key() for r in a.steps] == [r.state.key() for r in b.steps]


@pytest.mark.parametrize("off", [{1}, {2, 5}, {1, 4}])
def test_non_neighbour_rows_untouched(env, always_up, off):
    traj = neighbor_only_rollout(env, OutageScenario.of(off), always_up, 4)
    movers = compensating_sites(env, off)
    m0 = traj.initial.state.config_matrix
    for rec in traj.steps:
        for s in set(range(7)) - movers:
            assert np.array_equal(rec.state.config_matrix[3 * s:3 * s + 3], m0[3 * s:3 * s + 3])


def test_baseline_policy_validation(always_up):
    BaselinePolicy("no_action")
    BaselinePolicy("neighbor_only", always_up)
    with pytest.raises(ValueError):
        BaselinePolicy("neighbor_only")
    with pytest.raises(ValueError):
        BaselinePolicy("random")


def test_neighbor_only_needs_every_site(env, always_up):
    partial = {s: always_up[s] for s in range(6)}
    with pytest.raises(ValueError):
        neighbor_only_rollout(env, OutageScenario.of({1}), partial, 1)
