"""Tilt/power reconfiguration MDP over a sectorised network with base-station outages.

State: an (M, 2) matrix of (electrical tilt, transmit power) per cell.
Action: one index in [0, 729) per site, three base-9 digits, one per sector.
Reward: R(s') - R(s) where R is total throughput when the resilience gate holds and
the product of the two availabilities otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .layout import NetworkLayout
from .link import LinkParams, LinkReport, evaluate_arrays
from .radio import CellConfig, RadioParams, link_geometry
from .resilience import ResilienceSnapshot, ResilienceThresholds, snapshot

ETILT_RANGE = (0.0, 14.0)
POWER_RANGE = (0.0, 40.0)
TILT_STEP = 1.0
POWER_STEP = 5.0
CELLS_PER_SITE = 3
N_ACTIONS = 9 ** CELLS_PER_SITE
NOOP_ACTION = 4 + 4 * 9 + 4 * 81
# digit k of a site action -> (dtilt, dpower) = (k // 3 - 1, k % 3 - 1) steps; the
# least-significant digit drives the site's lowest cell id. Stored in checkpoints.
ACTION_CONVENTION = "base9-lsd-first-cell;digit=3*(dtilt+1)+(dpower+1);tilt=1deg;power=5dB"


@dataclass(frozen=True)
class EnvState:
    config_matrix: np.ndarray
    outage_sites: frozenset = frozenset()
    mtilt: float = 0.0

    def __post_init__(self):
        m = np.array(self.config_matrix, dtype=float).reshape(-1, 2)
        if (np.any(m[:, 0] < ETILT_RANGE[0]) or np.any(m[:, 0] > ETILT_RANGE[1])
                or np.any(m[:, 1] < POWER_RANGE[0]) or np.any(m[:, 1] > POWER_RANGE[1])):
            raise ValueError("configuration outside the tilt/power box")
        m.flags.writeable = False
        object.__setattr__(self, "config_matrix", m)
        object.__setattr__(self, "outage_sites", frozenset(int(s) for s in self.outage_sites))

    @property
    def n_cells(self) -> int:
        return self.config_matrix.shape[0]

    @property
    def operational(self) -> np.ndarray:
        on = np.ones(self.n_cells, dtype=bool)
        for s in self.outage_sites:
            on[CELLS_PER_SITE * s:CELLS_PER_SITE * (s + 1)] = False
        return on

    @property
    def normalized_view(self) -> np.ndarray:
        """(M, 2) view in [0, 1]; cells of failed sites read as (0, 0) since they radiate nothing."""
        view = self.config_matrix / np.array([ETILT_RANGE[1], POWER_RANGE[1]])
        return np.where(self.operational[:, None], view, 0.0)

    @property
    def observation(self) -> np.ndarray:
        return self.normalized_view.ravel()

    def cell_configs(self) -> list[CellConfig]:
        on = self.operational
        return [CellConfig(j, float(e), float(p), self.mtilt, bool(on[j]))
                for j, (e, p) in enumerate(self.config_matrix)]

    def key(self) -> tuple:
        return self.config_matrix.tobytes(), tuple(sorted(self.outage_sites))


@dataclass(frozen=True)
class SiteAction:
    index: int
    decoded: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class OutageScenario:
    n_off: int
    off_sites: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "off_sites", frozenset(int(s) for s in self.off_sites))
        if len(self.off_sites) != self.n_off:
            raise ValueError("n_off must match the number of distinct off sites")

    @classmethod
    def of(cls, sites) -> "OutageScenario":
        sites = frozenset(sites)
        return cls(len(sites), sites)


def encode_state(configs: list[CellConfig], outage_sites=()) -> EnvState:
    ordered = sorted(configs, key=lambda c: c.cell_id)
    matrix = np.array([[c.etilt, c.tx_power] for c in ordered], dtype=float).reshape(-1, 2)
    off = set(outage_sites)
    for c in ordered:
        if not c.operational:
            off.add(c.cell_id // CELLS_PER_SITE)
    mtilt = ordered[0].mtilt if ordered else 0.0
    return EnvState(matrix, frozenset(off), mtilt)


def decode_action(index: int) -> SiteAction:
    if not 0 <= index < N_ACTIONS:
        raise ValueError(f"action index {index} outside [0, {N_ACTIONS})")
    deltas = []
    rest = int(index)
    for _ in range(CELLS_PER_SITE):
        digit, rest = rest % 9, rest // 9
        deltas.append(((digit // 3 - 1) * TILT_STEP, (digit % 3 - 1) * POWER_STEP))
    return SiteAction(int(index), tuple(deltas))


def encode_action(deltas) -> int:
    """Inverse of decode_action for per-cell (dtilt, dpower) deltas."""
    index = 0
    for k, (dt, dp) in enumerate(deltas):
        digit = 3 * (int(round(dt / TILT_STEP)) + 1) + (int(round(dp / POWER_STEP)) + 1)
        index += digit * 9 ** k
    return index


def apply_actions(state: EnvState, actions: dict) -> EnvState:
    """Add per-site deltas to the configuration and clamp to the tilt/power box."""
    matrix = state.config_matrix.copy()
    n_sites = state.n_cells // CELLS_PER_SITE
    for site, action in actions.items():
        if site in state.outage_sites:
            raise ValueError(f"site {site} is in outage and cannot act")
        if not 0 <= site < n_sites:
            raise KeyError(f"unknown site {site}")
        if not isinstance(action, SiteAction):
            action = decode_action(int(action))
        for k, (dt, dp) in enumerate(action.decoded):
            j = CELLS_PER_SITE * site + k
            matrix[j, 0] = min(max(matrix[j, 0] + dt, ETILT_RANGE[0]), ETILT_RANGE[1])
            matrix[j, 1] = min(max(matrix[j, 1] + dp, POWER_RANGE[0]), POWER_RANGE[1])
    return EnvState(matrix, state.outage_sites, state.mtilt)


def reward_state(report: LinkReport, snap: ResilienceSnapshot, normalize: bool = False,
                 demand: float | None = None) -> float:
    """Total throughput behind the gate, availability product otherwise.

    With ``normalize`` the throughput branch is divided by N * demand.
    """
    if snap.gate_z:
        total = report.sum_throughput
        if normalize:
            if not demand:
                raise ValueError("normalised reward needs the demanded rate")
            total /= report.n_users * demand
        return float(total)
    return snap.p_coverage * snap.p_service


def reward_transition(r_prev: float, r_next: float) -> float:
    return r_next - r_prev


def inject_outage(rng: np.random.Generator, n_sites: int, l_max: int) -> OutageScenario:
    """Draw L uniformly from 1..l_max, then a uniform L-subset of sites.

    ``l_max = 0`` yields the empty scenario (used for single-site toy networks).
    """
    if not 0 <= l_max <= max(n_sites - 2, 0):
        raise ValueError(f"l_max must lie in [0, {max(n_sites - 2, 0)}] for {n_sites} sites")
    if l_max == 0:
        return OutageScenario(0)
    n_off = int(rng.integers(1, l_max + 1))
    off = rng.choice(n_sites, size=n_off, replace=False)
    return OutageScenario(n_off, frozenset(int(s) for s in off))


class RanEnv:
    """Evaluates configurations of a fixed layout and hands out the shared global reward."""

    def __init__(self, layout: NetworkLayout, radio: RadioParams = RadioParams(),
                 link: LinkParams = LinkParams(),
                 thresholds: ResilienceThresholds = ResilienceThresholds(),
                 normalize_reward: bool = False, initial_etilt: float = 7.0,
                 initial_power: float = 30.0, mtilt: float = 0.0):
        self.layout = layout
        self.radio = radio
        self.link = link
        self.thresholds = thresholds
        self.normalize_reward = normalize_reward
        self.initial_etilt = initial_etilt
        self.initial_power = initial_power
        self.mtilt = mtilt
        self.geometry = link_geometry(layout, radio)
        self._cache_key = None
        self._cache_val = None

    @property
    def n_sites(self) -> int:
        return self.layout.n_sites

    @property
    def n_cells(self) -> int:
        return self.layout.n_cells

    def with_layout(self, layout: NetworkLayout) -> "RanEnv":
        return RanEnv(layout, self.radio, self.link, self.thresholds, self.normalize_reward,
                      self.initial_etilt, self.initial_power, self.mtilt)

    def reset(self, scenario: OutageScenario = OutageScenario(0)) -> EnvState:
        bad = [s for s in scenario.off_sites if not 0 <= s < self.n_sites]
        if bad:
            raise KeyError(f"unknown outage sites {bad}")
        matrix = np.tile([self.initial_etilt, self.initial_power], (self.n_cells, 1))
        return EnvState(matrix, scenario.off_sites, self.mtilt)

    def active_sites(self, state: EnvState) -> list[int]:
        return [s for s in range(self.n_sites) if s not in state.outage_sites]

    def evaluate(self, state: EnvState) -> tuple[LinkReport, ResilienceSnapshot]:
        key = state.key()
        if key == self._cache_key:
            return self._cache_val
        tilt = state.config_matrix[:, 0] + state.mtilt
        report = evaluate_arrays(self.geometry, tilt, state.config_matrix[:, 1],
                                 state.operational, self.radio, self.link)
        val = (report, snapshot(report, self.thresholds))
        self._cache_key, self._cache_val = key, val
        return val

    def state_reward(self, state: EnvState) -> float:
        report, snap = self.evaluate(state)
        return reward_state(report, snap, self.normalize_reward, self.link.demand)

    def step(self, state: EnvState, actions: dict):
        """Apply actions, re-evaluate the whole network, return the shared reward."""
        r_prev = self.state_reward(state)
        nxt = apply_actions(state, actions)
        report, snap = self.evaluate(nxt)
        r_next = reward_state(report, snap, self.normalize_reward, self.link.demand)
        return nxt, reward_transition(r_prev, r_next), report, snap


def env_step(env: RanEnv, state: EnvState, actions: dict):
    return env.step(state, actions)
