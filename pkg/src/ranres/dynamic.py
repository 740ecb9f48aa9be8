"""Second-by-second outage timeline: healthy network, outage, detection, delayed recovery.

Each tick evaluates the whole network once and emits a ``MetricsRecord``. Actions are
applied one per tick, starting ``trigger_delay_s`` after the outage is detected, until the
action budget is spent.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import compensating_sites
from .config import ScenarioConfig
from .env import NOOP_ACTION, EnvState, OutageScenario, RanEnv, apply_actions
from .layout import NetworkLayout, UserPoint
from .marl import check_policy, greedy_actions

METRICS_FIELDS = ("t", "mean_rsrp", "mean_throughput", "p_coverage", "p_service",
                  "coverage_state", "service_state", "rsrp_good", "rsrp_fair", "rsrp_poor",
                  "acted")
_NUMERIC = ("t", "mean_rsrp", "mean_throughput", "p_coverage", "p_service",
            "rsrp_good", "rsrp_fair", "rsrp_poor")


@dataclass(frozen=True)
class MetricsRecord:
    t: int
    mean_rsrp: float
    mean_throughput: float
    p_coverage: float
    p_service: float
    coverage_state: str
    service_state: str
    rsrp_mix: tuple
    acted: bool = False

    def row(self) -> list[str]:
        g, f, p = self.rsrp_mix
        return [str(self.t), repr(self.mean_rsrp), repr(self.mean_throughput),
                repr(self.p_coverage), repr(self.p_service), self.coverage_state,
                self.service_state, repr(g), repr(f), repr(p), "1" if self.acted else "0"]


@dataclass
class DynamicRun:
    records: list
    off_sites: tuple
    detected_at: int | None
    action_ticks: list = field(default_factory=list)
    final_state: EnvState | None = None

    def __len__(self):
        return len(self.records)

    @property
    def final(self) -> MetricsRecord:
        return self.records[-1]


def pick_outage_sites(cfg: ScenarioConfig, n_sites: int) -> tuple:
    if cfg.outage_sites:
        bad = [s for s in cfg.outage_sites if not 0 <= s < n_sites]
        if bad:
            raise ValueError(f"outage sites {bad} outside the layout")
        return tuple(sorted(set(cfg.outage_sites)))
    if not 0 <= cfg.n_outage < n_sites:
        raise ValueError(f"n_outage must lie in [0, {n_sites - 1}]")
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))
    return tuple(sorted(int(s) for s in rng.choice(n_sites, cfg.n_outage, replace=False)))


def random_walk(layout: NetworkLayout, rng: np.random.Generator, step_m: float) -> NetworkLayout:
    """Move every user ``step_m`` metres in a uniform direction, reflecting at the area edge."""
    xy = layout.user_xy
    ang = rng.uniform(0.0, 2 * np.pi, len(xy))
    moved = xy + step_m * np.column_stack([np.cos(ang), np.sin(ang)])
    x0, y0, x1, y1 = layout.bounds
    lo, hi = np.array([x0, y0]), np.array([x1, y1])
    moved = np.where(moved < lo, 2 * lo - moved, moved)
    moved = np.clip(np.where(moved > hi, 2 * hi - moved, moved), lo, hi)
    users = [UserPoint(u.user_id, (float(x), float(y)), u.height_ut)
             for u, (x, y) in zip(layout.users, moved)]
    return layout.with_users(users)


def _policy_actions(kind: str, policy, env: RanEnv, state: EnvState) -> dict:
    live = env.active_sites(state)
    if kind == "no_action":
        return {s: NOOP_ACTION for s in live}
    if kind == "multi_agent":
        return greedy_actions(policy, state, live)
    acting = compensating_sites(env, state.outage_sites)
    actions = {s: NOOP_ACTION for s in live}
    actions.update(greedy_actions(policy, state, [s for s in live if s in acting]))
    return actions


def _record(t: int, env: RanEnv, state: EnvState, acted: bool) -> MetricsRecord:
    report, snap = env.evaluate(state)
    return MetricsRecord(t, report.mean_rsrp, report.mean_throughput, snap.p_coverage,
                         snap.p_service, snap.coverage_state, snap.service_state,
                         tuple(snap.rsrp_mix), acted)


def run_dynamic(cfg: ScenarioConfig, policy: dict | None = None, env: RanEnv | None = None) -> DynamicRun:
    """Simulate ticks 0..duration_s and return one record per tick.

    Detection: with ``detector = "alarm"`` the outage is seen on the tick it happens (the
    failed cells stop radiating); with ``"classifier"`` detection waits for a coverage or
    service state of O, which may never come.
    """
    if cfg.policy != "no_action":
        if not policy:
            raise ValueError(f"policy {cfg.policy!r} needs trained agents")
    env = env or cfg.make_env()
    if policy:
        check_policy(policy, env)
    off = pick_outage_sites(cfg, env.n_sites)
    mob_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 2]))
    step_m = cfg.user_speed_kmh / 3.6 * cfg.tick_s

    state = env.reset(OutageScenario(0))
    records, action_ticks = [], []
    detected_at = None
    budget = cfg.actions_budget
    for t in range(0, cfg.duration_s + 1, cfg.tick_s):
        if step_m and t > 0:
            env = env.with_layout(random_walk(env.layout, mob_rng, step_m))
        if t >= cfg.outage_at_s and off and not state.outage_sites:
            state = EnvState(state.config_matrix, frozenset(off), state.mtilt)
        acted = False
        if detected_at is None and state.outage_sites:
            if cfg.detector == "alarm":
                detected_at = t
            else:
                _, snap = env.evaluate(state)
                if "O" in (snap.coverage_state, snap.service_state):
                    detected_at = t
        if detected_at is not None and budget > 0 and t >= detected_at + cfg.trigger_delay_s:
            state = apply_actions(state, _policy_actions(cfg.policy, policy, env, state))
            budget -= 1
            acted = True
            action_ticks.append(t)
        records.append(_record(t, env, state, acted))
    return DynamicRun(records, off, detected_at, action_ticks, state)


def metrics_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRICS_FIELDS)
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()


def parse_metrics_csv(text: str) -> list[MetricsRecord]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != METRICS_FIELDS:
        raise ValueError("not a metrics CSV (header mismatch)")
    out = []
    for r in rows[1:]:
        out.append(MetricsRecord(int(r[0]), float(r[1]), float(r[2]), float(r[3]), float(r[4]),
                                 r[5], r[6], (float(r[7]), float(r[8]), float(r[9])), r[10] == "1"))
    return out


def metrics_summary(records) -> dict:
    cols = {name: [] for name in _NUMERIC}
    states = {"coverage_state": {}, "service_state": {}}
    for r in records:
        g, f, p = r.rsrp_mix
        vals = dict(t=r.t, mean_rsrp=r.mean_rsrp, mean_throughput=r.mean_throughput,
                    p_coverage=r.p_coverage, p_service=r.p_service,
                    rsrp_good=g, rsrp_fair=f, rsrp_poor=p)
        for k, v in vals.items():
            cols[k].append(v)
        for k in states:
            letter = getattr(r, k)
            states[k][letter] = states[k].get(letter, 0) + 1
    summary = {"n_records": len(records), "n_actions": sum(r.acted for r in records)}
    for k, v in cols.items():
        summary[k] = ({"min": float(min(v)), "max": float(max(v)), "mean": float(np.mean(v))}
                      if v else {"min": None, "max": None, "mean": None})
    summary.update({f"{k}_counts": dict(sorted(c.items())) for k, c in states.items()})
    return summary


def summary_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".summary.json")


def export_metrics(records, path) -> Path:
    """Write the metrics CSV at ``path`` and its JSON summary next to it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(metrics_csv(records))
    summary_path(path).write_text(json.dumps(metrics_summary(records), indent=1, sort_keys=True) + "\n")
    return path


def write_plot_data(records, out_dir) -> list[Path]:
    """Time series for the RSRP, throughput, coverage and service curves."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    series = {
        "plot_rsrp.csv": (("t", "mean_rsrp_dbm", "pct_good", "pct_fair", "pct_poor"),
                          lambda r: (r.t, r.mean_rsrp, *(100 * v for v in r.rsrp_mix))),
        "plot_throughput.csv": (("t", "mean_throughput_mbps"),
                                lambda r: (r.t, r.mean_throughput / 1e6)),
        "plot_coverage.csv": (("t", "pct_covered", "coverage_state"),
                              lambda r: (r.t, 100 * r.p_coverage, r.coverage_state)),
        "plot_service.csv": (("t", "pct_satisfied", "service_state"),
                             lambda r: (r.t, 100 * r.p_service, r.service_state)),
    }
    written = []
    for name, (header, fn) in series.items():
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in records:
            w.writerow([repr(v) if isinstance(v, float) else v for v in fn(r)])
        (out_dir / name).write_text(buf.getvalue())
        written.append(out_dir / name)
    return written
