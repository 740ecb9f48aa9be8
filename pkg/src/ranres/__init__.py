"""Simulate a sectorised 5G network, knock out base stations, and let per-site DQN agents
retune antenna tilt and transmit power to win coverage and throughput back."""

from .layout import NetworkLayout, build_hex_layout, neighbor_sites
from .radio import CellConfig, RadioParams, antenna_gain, path_loss_umi_los, received_power
from .link import LinkParams, LinkReport, evaluate_network
from .resilience import ResilienceSnapshot, ResilienceThresholds, classify_coverage, classify_service, snapshot
from .env import NOOP_ACTION, N_ACTIONS, EnvState, OutageScenario, RanEnv, decode_action, encode_action
from .marl import TrainConfig, infer, load_checkpoint, policy_of, save_checkpoint, train
from .baselines import neighbor_only_rollout, no_action_rollout
from .config import LayoutConfig, ScenarioConfig, load_config
from .dynamic import MetricsRecord, export_metrics, run_dynamic

__version__ = "0.1.0"
