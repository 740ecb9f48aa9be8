"""Reference policies: leave the network alone, or let only the failed sites' neighbours act."""

from __future__ import annotations

from dataclasses import dataclass

from .env import NOOP_ACTION, OutageScenario, RanEnv
from .layout import neighbor_sites
from .marl import Trajectory, check_policy, greedy_actions, rollout

POLICY_KINDS = ("multi_agent", "neighbor_only", "no_action")


@dataclass(frozen=True)
class BaselinePolicy:
    kind: str
    policy: dict | None = None

    def __post_init__(self):
        if self.kind not in ("no_action", "neighbor_only"):
            raise ValueError(f"unknown baseline kind {self.kind!r}")
        if self.kind == "neighbor_only" and not self.policy:
            raise ValueError("neighbor_only needs trained agents for every site")


def no_action_rollout(env: RanEnv, scenario: OutageScenario, k_steps: int) -> Trajectory:
    return rollout(env, scenario, k_steps,
                   lambda st: {s: NOOP_ACTION for s in env.active_sites(st)})


def compensating_sites(env: RanEnv, off_sites) -> set[int]:
    """Operational first-ring neighbours of any failed site."""
    near = set()
    for s in off_sites:
        near |= neighbor_sites(env.layout, s)
    return near - set(off_sites)


def neighbor_only_rollout(env: RanEnv, scenario: OutageScenario, policy: dict,
                          k_steps: int) -> Trajectory:
    """Greedy rollout where only neighbours of failed sites act; everyone else holds still."""
    check_policy(policy, env)
    acting = compensating_sites(env, scenario.off_sites)

    def choose(state):
        live = env.active_sites(state)
        actions = {s: NOOP_ACTION for s in live}
        actions.update(greedy_actions(policy, state, [s for s in live if s in acting]))
        return actions

    return rollout(env, scenario, k_steps, choose)
