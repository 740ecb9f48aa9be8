"""Independent per-site DQN learners sharing one global reward.

The Q-networks are small ReLU MLPs written directly in numpy so the backward pass can be
checked against finite differences.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .env import ACTION_CONVENTION, N_ACTIONS, EnvState, OutageScenario, RanEnv, inject_outage

CHECKPOINT_MAGIC = b"RANRDQN\x00"
CHECKPOINT_VERSION = 1


@dataclass
class QNetworkParams:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def dims(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def copy(self) -> "QNetworkParams":
        return QNetworkParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for pair in zip(self.weights, self.biases) for a in pair])

    def digest(self) -> str:
        return hashlib.sha256(self.flat().tobytes()).hexdigest()


def init_qnet(rng: np.random.Generator, n_in: int, hidden=(256, 256), n_out: int = N_ACTIONS,
              zero_output: bool = True) -> QNetworkParams:
    """He-uniform hidden weights, zero biases.

    The output layer starts at zero so actions never tried read as Q = 0 rather than as a
    random draw that the greedy argmax would latch onto.
    """
    dims = [n_in, *hidden, n_out]
    weights, biases = [], []
    for k, (a, b) in enumerate(zip(dims[:-1], dims[1:])):
        bound = np.sqrt(6.0 / a)
        if zero_output and k == len(dims) - 2:
            weights.append(np.zeros((a, b)))
        else:
            weights.append(rng.uniform(-bound, bound, size=(a, b)))
        biases.append(np.zeros(b))
    return QNetworkParams(weights, biases)


def _forward(params: QNetworkParams, x: np.ndarray):
    acts = [x]
    h = x
    last = len(params.weights) - 1
    for k, (w, b) in enumerate(zip(params.weights, params.biases)):
        h = h @ w + b
        if k < last:
            h = np.maximum(h, 0.0)
        acts.append(h)
    return acts


def qnet_forward(params: QNetworkParams, state_view) -> np.ndarray:
    x = np.asarray(state_view, dtype=float)
    if x.shape[-1] != params.weights[0].shape[0]:
        raise ValueError(f"expected input of length {params.weights[0].shape[0]}, got {x.shape[-1]}")
    return _forward(params, x)[-1]


def td_loss_and_grads(params: QNetworkParams, states, actions, targets):
    """Mean squared TD error over the batch and its gradient w.r.t. every parameter."""
    states = np.atleast_2d(np.asarray(states, dtype=float))
    actions = np.asarray(actions, dtype=int)
    targets = np.asarray(targets, dtype=float)
    acts = _forward(params, states)
    q = acts[-1]
    rows = np.arange(len(actions))
    resid = q[rows, actions] - targets
    loss = float(np.mean(resid ** 2))

    grad_out = np.zeros_like(q)
    grad_out[rows, actions] = 2.0 * resid / len(actions)
    gw, gb = [None] * len(params.weights), [None] * len(params.weights)
    g = grad_out
    for k in range(len(params.weights) - 1, -1, -1):
        gw[k] = acts[k].T @ g
        gb[k] = g.sum(axis=0)
        if k:
            g = (g @ params.weights[k].T) * (acts[k] > 0)
    return loss, QNetworkParams(gw, gb)


def select_action(params: QNetworkParams, state_view, epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy; greedy ties resolve to the lowest index."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    n_out = params.weights[-1].shape[1]
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(n_out))
    return int(np.argmax(qnet_forward(params, state_view)))


class ReplayMemory:
    """Fixed-capacity ring buffer of (s, a, r, s', terminal) transitions."""

    def __init__(self, capacity: int, state_dim: int):
        if capacity < 1:
            raise ValueError("replay capacity must be positive")
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim))
        self.next_states = np.zeros((capacity, state_dim))
        self.actions = np.zeros(capacity, dtype=int)
        self.rewards = np.zeros(capacity)
        self.terminal = np.zeros(capacity, dtype=bool)
        self.size = 0
        self._next = 0

    def __len__(self):
        return self.size

    def add(self, s, a, r, s2, terminal):
        i = self._next
        self.states[i] = s
        self.actions[i] = a
        self.rewards[i] = r
        self.next_states[i] = s2
        self.terminal[i] = terminal
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample_indices(self, rng: np.random.Generator, batch: int) -> np.ndarray:
        if batch > self.size:
            raise ValueError(f"replay holds {self.size} transitions, minibatch needs {batch}")
        return rng.choice(self.size, size=batch, replace=False)

    def batch(self, idx):
        return (self.states[idx], self.actions[idx], self.rewards[idx],
                self.next_states[idx], self.terminal[idx])


@dataclass
class TrainConfig:
    episodes: int = 1000
    steps_per_episode: int = 500
    gamma: float = 0.95
    learning_rate: float = 1e-3
    minibatch: int = 64
    replay_capacity: int = 100_000
    target_sync: int = 500
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_fraction: float = 0.5
    l_max: int = 5
    warmup: int = 1000
    grad_clip: float = 10.0
    hidden: tuple = (256, 256)
    optimizer: str = "sgd"
    checkpoint_every: int = 100
    normalize_reward: bool = False
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        for name in ("episodes", "steps_per_episode", "minibatch", "replay_capacity",
                     "target_sync", "checkpoint_every"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError("optimizer must be 'sgd' or 'adam'")
        self.hidden = tuple(int(h) for h in self.hidden)

    def epsilon(self, step: int) -> float:
        horizon = self.eps_decay_fraction * self.episodes * self.steps_per_episode
        if horizon <= 0:
            return self.eps_end
        frac = step / horizon
        if frac >= 1.0:
            return self.eps_end
        return self.eps_start + frac * (self.eps_end - self.eps_start)


@dataclass
class AgentBundle:
    site_id: int
    online: QNetworkParams
    target: QNetworkParams
    replay: ReplayMemory
    rng: np.random.Generator
    steps: int = 0
    adam_m: list = field(default_factory=list)
    adam_v: list = field(default_factory=list)

    def sync_target(self):
        self.target = self.online.copy()


def make_agent(site_id: int, n_in: int, cfg: TrainConfig, rng: np.random.Generator) -> AgentBundle:
    online = init_qnet(rng, n_in, cfg.hidden)
    return AgentBundle(site_id, online, online.copy(), ReplayMemory(cfg.replay_capacity, n_in), rng)


def bellman_targets(target: QNetworkParams, rewards, next_states, terminal, gamma: float) -> np.ndarray:
    rewards = np.asarray(rewards, dtype=float)
    if gamma == 0.0:
        return rewards.copy()
    nxt = qnet_forward(target, next_states).max(axis=1)
    return np.where(terminal, rewards, rewards + gamma * nxt)


def _apply_gradient(agent: AgentBundle, grads: QNetworkParams, cfg: TrainConfig):
    flat = [g for pair in zip(grads.weights, grads.biases) for g in pair]
    norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in flat)))
    scale = min(1.0, cfg.grad_clip / norm) if norm > 0 else 1.0
    params = [p for pair in zip(agent.online.weights, agent.online.biases) for p in pair]
    if cfg.optimizer == "sgd":
        for p, g in zip(params, flat):
            p -= cfg.learning_rate * scale * g
        return
    b1, b2, eps = 0.9, 0.999, 1e-8
    if not agent.adam_m:
        agent.adam_m = [np.zeros_like(p) for p in params]
        agent.adam_v = [np.zeros_like(p) for p in params]
    t = agent.steps + 1
    for p, g, m, v in zip(params, flat, agent.adam_m, agent.adam_v):
        g = g * scale
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        p -= cfg.learning_rate * (m / (1 - b1 ** t)) / (np.sqrt(v / (1 - b2 ** t)) + eps)


def train_on_batch(agent: AgentBundle, batch, cfg: TrainConfig) -> float:
    """One gradient step on a given batch; returns the loss before the step."""
    s, a, r, s2, term = batch
    y = bellman_targets(agent.target, r, s2, term, cfg.gamma)
    loss, grads = td_loss_and_grads(agent.online, s, a, y)
    _apply_gradient(agent, grads, cfg)
    agent.steps += 1
    if agent.steps % cfg.target_sync == 0:
        agent.sync_target()
    return loss


def train_step(agent: AgentBundle, minibatch: int, cfg: TrainConfig) -> float:
    idx = agent.replay.sample_indices(agent.rng, minibatch)
    return train_on_batch(agent, agent.replay.batch(idx), cfg)


@dataclass
class TrainLog:
    episode_returns: list = field(default_factory=list)
    episode_outages: list = field(default_factory=list)
    episode_losses: list = field(default_factory=list)
    losses: dict = field(default_factory=dict)  # site -> per-gradient-step losses
    env_steps: int = 0

    def to_csv(self) -> str:
        lines = ["episode,n_off,off_sites,return,mean_loss"]
        for k, (ret, off, ml) in enumerate(zip(self.episode_returns, self.episode_outages,
                                               self.episode_losses)):
            sites = " ".join(str(s) for s in off)
            lines.append(f"{k},{len(off)},{sites},{ret!r},{ml!r}")
        return "\n".join(lines) + "\n"


def smoothed(values, window: int) -> np.ndarray:
    """Trailing moving average (window shrinks at the start)."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return v
    c = np.cumsum(np.insert(v, 0, 0.0))
    idx = np.arange(1, v.size + 1)
    lo = np.maximum(idx - window, 0)
    return (c[idx] - c[lo]) / (idx - lo)


def train(env: RanEnv, cfg: TrainConfig, checkpoint_path=None, progress=None):
    """Train one DQN agent per site. Returns (agents, log)."""
    seeds = np.random.SeedSequence(cfg.seed).spawn(env.n_sites + 1)
    scenario_rng = np.random.default_rng(seeds[0])
    n_in = 2 * env.n_cells
    agents = [make_agent(s, n_in, cfg, np.random.default_rng(seeds[s + 1])) for s in range(env.n_sites)]
    tlog = TrainLog(losses={a.site_id: [] for a in agents})
    step = 0
    for ep in range(cfg.episodes):
        scenario = inject_outage(scenario_rng, env.n_sites, cfg.l_max)
        state = env.reset(scenario)
        active = [a for a in agents if a.site_id not in scenario.off_sites]
        ep_return, ep_losses = 0.0, []
        for t in range(cfg.steps_per_episode):
            eps = cfg.epsilon(step)
            obs = state.observation
            actions = {a.site_id: select_action(a.online, obs, eps, a.rng) for a in active}
            state, reward, _, _ = env.step(state, actions)
            terminal = t + 1 == cfg.steps_per_episode
            obs2 = state.observation
            for a in active:
                a.replay.add(obs, actions[a.site_id], reward, obs2, terminal)
                if len(a.replay) >= max(cfg.warmup, cfg.minibatch):
                    loss = train_step(a, cfg.minibatch, cfg)
                    tlog.losses[a.site_id].append(loss)
                    ep_losses.append(loss)
            ep_return += reward
            step += 1
        tlog.episode_returns.append(ep_return)
        tlog.episode_outages.append(sorted(scenario.off_sites))
        tlog.episode_losses.append(float(np.mean(ep_losses)) if ep_losses else float("nan"))
        if checkpoint_path is not None and (ep + 1) % cfg.checkpoint_every == 0:
            save_checkpoint(checkpoint_path, policy_of(agents), env.n_cells, cfg)
        if progress is not None:
            progress(ep, tlog)
    tlog.env_steps = step
    if checkpoint_path is not None:
        save_checkpoint(checkpoint_path, policy_of(agents), env.n_cells, cfg)
    return agents, tlog


def policy_of(agents) -> dict:
    """Site id -> online Q-network parameters."""
    return {a.site_id: a.online for a in agents}


def greedy_actions(policy: dict, state: EnvState, sites) -> dict:
    obs = state.observation
    return {s: int(np.argmax(qnet_forward(policy[s], obs))) for s in sites}


@dataclass
class StepRecord:
    t: int
    actions: dict
    state: EnvState
    reward: float
    report: object
    snapshot: object

    def to_json(self, policy_kind: str) -> str:
        snap = self.snapshot
        return json.dumps({
            "policy": policy_kind,
            "step": self.t,
            "actions": {str(k): int(v) for k, v in sorted(self.actions.items())},
            "reward": self.reward,
            "p_coverage": snap.p_coverage,
            "p_service": snap.p_service,
            "coverage_state": snap.coverage_state,
            "service_state": snap.service_state,
            "rsrp_mix": list(snap.rsrp_mix),
            "sum_throughput": self.report.sum_throughput,
            "states": self.state.config_matrix.tolist(),
            "outage_sites": sorted(self.state.outage_sites),
        }, sort_keys=True)


@dataclass
class Trajectory:
    initial: StepRecord
    steps: list

    def __len__(self):
        return len(self.steps)

    @property
    def final(self) -> StepRecord:
        return self.steps[-1] if self.steps else self.initial

    def to_jsonl(self, policy_kind: str) -> str:
        return "".join(r.to_json(policy_kind) + "\n" for r in [self.initial, *self.steps])


def rollout(env: RanEnv, scenario: OutageScenario, k_steps: int, choose) -> Trajectory:
    """Run ``choose(state) -> actions`` for k_steps from the post-outage reset state."""
    state = env.reset(scenario)
    report, snap = env.evaluate(state)
    initial = StepRecord(0, {}, state, 0.0, report, snap)
    steps = []
    for t in range(1, k_steps + 1):
        actions = choose(state)
        state, reward, report, snap = env.step(state, actions)
        steps.append(StepRecord(t, actions, state, reward, report, snap))
    return Trajectory(initial, steps)


def check_policy(policy: dict, env: RanEnv):
    missing = set(range(env.n_sites)) - set(policy)
    if missing:
        raise ValueError(f"checkpoint lacks agents for sites {sorted(missing)}")
    n_in = 2 * env.n_cells
    for s, p in policy.items():
        if p.weights[0].shape[0] != n_in or p.weights[-1].shape[1] != N_ACTIONS:
            raise ValueError(f"agent {s} does not match a {env.n_cells}-cell network")


def infer(policy: dict, env: RanEnv, scenario: OutageScenario, k_steps: int = 10) -> Trajectory:
    """Greedy rollout of every surviving site's agent."""
    if k_steps < 1:
        raise ValueError("k_steps must be >= 1")
    check_policy(policy, env)
    return rollout(env, scenario, k_steps,
                   lambda st: greedy_actions(policy, st, env.active_sites(st)))


def _atomic_write(path: Path, data: bytes):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_checkpoint(path, policy: dict, n_cells: int, cfg: TrainConfig | None = None):
    """Binary checkpoint (little-endian) plus a JSON sidecar with the training config."""
    path = Path(path)
    sites = sorted(policy)
    dims = policy[sites[0]].dims
    tag = ACTION_CONVENTION.encode()
    out = [CHECKPOINT_MAGIC, struct.pack("<IIII", CHECKPOINT_VERSION, n_cells, len(sites), len(dims)),
           struct.pack(f"<{len(dims)}I", *dims), struct.pack("<I", len(tag)), tag]
    for s in sites:
        p = policy[s]
        if p.dims != dims:
            raise ValueError("all agents must share one architecture")
        out.append(struct.pack("<I", s))
        for w, b in zip(p.weights, p.biases):
            out.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
            out.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    _atomic_write(path, b"".join(out))
    side = {"format_version": CHECKPOINT_VERSION, "n_cells": n_cells, "sites": sites,
            "action_convention": ACTION_CONVENTION,
            "train_config": asdict(cfg) if cfg is not None else None,
            "seed": cfg.seed if cfg is not None else None}
    _atomic_write(sidecar_path(path), (json.dumps(side, indent=1, sort_keys=True) + "\n").encode())


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def load_checkpoint(path) -> tuple[dict, int]:
    """Returns (site -> QNetworkParams, n_cells)."""
    data = Path(path).read_bytes()
    if not data.startswith(CHECKPOINT_MAGIC):
        raise ValueError(f"{path}: not a checkpoint file")
    off = len(CHECKPOINT_MAGIC)
    version, n_cells, n_agents, n_dims = struct.unpack_from("<IIII", data, off)
    off += 16
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    dims = struct.unpack_from(f"<{n_dims}I", data, off)
    off += 4 * n_dims
    (tag_len,) = struct.unpack_from("<I", data, off)
    off += 4
    tag = data[off:off + tag_len].decode()
    off += tag_len
    if tag != ACTION_CONVENTION:
        raise ValueError(f"{path}: action convention {tag!r} differs from {ACTION_CONVENTION!r}")
    policy = {}
    for _ in range(n_agents):
        (site,) = struct.unpack_from("<I", data, off)
        off += 4
        ws, bs = [], []
        for a, b in zip(dims[:-1], dims[1:]):
            ws.append(np.frombuffer(data, dtype="<f8", count=a * b, offset=off).reshape(a, b).astype(float))
            off += 8 * a * b
            bs.append(np.frombuffer(data, dtype="<f8", count=b, offset=off).astype(float))
            off += 8 * b
        policy[site] = QNetworkParams(ws, bs)
    if off != len(data):
        raise ValueError(f"{path}: trailing bytes in checkpoint")
    return policy, n_cells


__all__ = [
    "AgentBundle", "QNetworkParams", "ReplayMemory", "StepRecord", "TrainConfig", "TrainLog",
    "Trajectory", "bellman_targets", "check_policy", "greedy_actions", "infer", "init_qnet",
    "load_checkpoint", "make_agent", "policy_of", "qnet_forward", "rollout", "save_checkpoint",
    "select_action", "smoothed", "td_loss_and_grads", "train", "train_on_batch", "train_step",
]
