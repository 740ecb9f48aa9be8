"""Scenario configuration and its flat ``key = value`` file format.

One key per line, ``#`` starts a comment, blank lines are ignored. Keys are listed in
``KEYS``; an unknown key or an unparsable value raises ``ConfigError``. Lists (``hidden``,
``outage_sites``) are comma separated, booleans are ``true``/``false``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .env import RanEnv
from .layout import NetworkLayout, build_hex_layout
from .link import LinkParams
from .marl import TrainConfig
from .radio import RadioParams
from .resilience import ResilienceThresholds


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class LayoutConfig:
    n_rings: int = 1
    inter_site_distance: float = 300.0
    n_users: int = 2500
    bs_height: float = 10.0
    ut_height: float = 1.5
    layout_seed: int = 0

    def build(self) -> NetworkLayout:
        return build_hex_layout(self.n_rings, self.inter_site_distance, self.layout_seed,
                                self.n_users, self.bs_height, self.ut_height)


@dataclass(frozen=True)
class ScenarioConfig:
    layout: LayoutConfig = field(default_factory=LayoutConfig)
    radio: RadioParams = field(default_factory=RadioParams)
    link: LinkParams = field(default_factory=LinkParams)
    thresholds: ResilienceThresholds = field(default_factory=ResilienceThresholds)
    initial_etilt: float = 7.0
    initial_power: float = 30.0
    mtilt: float = 0.0
    n_outage: int = 1
    outage_sites: tuple = ()
    duration_s: int = 80
    outage_at_s: int = 30
    trigger_delay_s: int = 5
    actions_budget: int = 5
    tick_s: int = 1
    user_speed_kmh: float = 0.0
    detector: str = "alarm"
    policy: str = "multi_agent"
    k_steps: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.tick_s <= 0 or self.duration_s < 0:
            raise ConfigError("tick_s must be positive and duration_s non-negative")
        if self.outage_at_s + self.trigger_delay_s + self.actions_budget * self.tick_s > self.duration_s:
            raise ConfigError("timeline infeasible: outage_at_s + trigger_delay_s + "
                              "actions_budget * tick_s exceeds duration_s")
        if self.policy not in ("multi_agent", "neighbor_only", "no_action"):
            raise ConfigError(f"unknown policy {self.policy!r}")
        if self.detector not in ("alarm", "classifier"):
            raise ConfigError(f"unknown detector {self.detector!r}")
        if self.user_speed_kmh and not 3.0 <= self.user_speed_kmh <= 10.0:
            raise ConfigError("user_speed_kmh must be 0 (off) or within [3, 10]")

    def make_env(self, layout: NetworkLayout | None = None, normalize_reward: bool = False) -> RanEnv:
        return RanEnv(layout or self.layout.build(), self.radio, self.link, self.thresholds,
                      normalize_reward, self.initial_etilt, self.initial_power, self.mtilt)


# key -> (block, field); block None means a top-level ScenarioConfig field
_BLOCKS = {
    "layout": LayoutConfig,
    "radio": RadioParams,
    "link": LinkParams,
    "thresholds": ResilienceThresholds,
}
# cover_min is not a key of its own: link.rsrp_min feeds it
_SKIP = {("thresholds", "cover_min")}
_SCENARIO_TOP = [f.name for f in dataclasses.fields(ScenarioConfig) if f.name not in _BLOCKS]
_TRAIN_KEYS = [f.name for f in dataclasses.fields(TrainConfig) if f.name != "seed"]


def _key_table() -> dict:
    table = {}
    for block, cls in _BLOCKS.items():
        for f in dataclasses.fields(cls):
            if (block, f.name) not in _SKIP:
                table[f.name] = ("scenario", block, f)
    for f in dataclasses.fields(ScenarioConfig):
        if f.name in _SCENARIO_TOP:
            table[f.name] = ("scenario", None, f)
    for f in dataclasses.fields(TrainConfig):
        if f.name in _TRAIN_KEYS:
            table[f.name] = ("train", None, f)
    return table


KEYS = _key_table()


def _parse_value(raw: str, f: dataclasses.Field, key: str):
    t = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", str(f.type))
    raw = raw.strip()
    try:
        if key in ("hidden", "outage_sites"):
            return tuple(int(v) for v in raw.replace(" ", "").split(",") if v)
        if t == "bool":
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if t == "int | None":
            return None if raw.lower() in ("none", "") else int(raw)
        if t == "int":
            return int(raw)
        if t == "float":
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key == "seed":
            try:
                values["seed"] = int(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for seed: {raw!r}") from exc
            continue
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = _parse_value(raw, KEYS[key][2], key)
    return values


def build_configs(values: dict, seed: int | None = None) -> tuple[ScenarioConfig, TrainConfig]:
    blocks = {b: {} for b in _BLOCKS}
    top, train = {}, {}
    for key, val in values.items():
        if key == "seed":
            continue
        kind, block, f = KEYS[key]
        if kind == "train":
            train[key] = val
        elif block is None:
            top[key] = val
        else:
            blocks[block][key] = val
    if "rsrp_min" in blocks["link"]:
        blocks["thresholds"]["cover_min"] = blocks["link"]["rsrp_min"]
    s = values.get("seed", 0) if seed is None else seed
    try:
        built = {b: _BLOCKS[b](**kw) for b, kw in blocks.items()}
        scenario = ScenarioConfig(**built, **top, seed=s)
        train_cfg = TrainConfig(**train, seed=s)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return scenario, train_cfg


def load_config(path=None, seed: int | None = None) -> tuple[ScenarioConfig, TrainConfig]:
    text = Path(path).read_text() if path is not None else ""
    return build_configs(parse_config_text(text), seed)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ",".join(str(x) for x in v)
    if v is None:
        return "none"
    return repr(v) if isinstance(v, float) else str(v)


def dump_config(scenario: ScenarioConfig, train: TrainConfig) -> str:
    """Full key/value snapshot; parsing it back reproduces both configs."""
    lines = ["# ranres configuration snapshot", f"seed = {scenario.seed}"]
    for key, (kind, block, f) in KEYS.items():
        if kind == "train":
            v = getattr(train, key)
        elif block is None:
            v = getattr(scenario, key)
        else:
            v = getattr(getattr(scenario, block), key)
        if key == "seed":
            continue
        lines.append(f"{key} = {_fmt(v)}")
    return "\n".join(lines) + "\n"
