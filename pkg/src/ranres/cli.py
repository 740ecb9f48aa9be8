"""Command line entry point: ``ranres <subcommand> [--config F] [--seed N] [--out DIR]``.

Exit codes: 0 success, 2 configuration or usage error, 1 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .baselines import neighbor_only_rollout, no_action_rollout
from .config import ConfigError, ScenarioConfig, dump_config, load_config
from .dynamic import export_metrics, pick_outage_sites, run_dynamic, write_plot_data
from .env import OutageScenario
from .link import LinkReport
from .marl import infer, load_checkpoint, save_checkpoint, policy_of, train
from .resilience import snapshot

CHECKPOINT_NAME = "agents.ckpt"


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value configuration file")
    common.add_argument("--seed", type=int, help="overrides the seed in the config")
    common.add_argument("--out", type=Path, default=Path("ranres_out"), help="output directory")

    p = argparse.ArgumentParser(prog="ranres", description="RAN outage resilience simulator")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    sub.add_parser("train", parents=[common], help="train one DQN agent per site")
    for name, text in (("infer", "greedy multi-agent rollout after an outage"),
                       ("evaluate", "dynamic outage timeline with metrics and plot data")):
        sp = sub.add_parser(name, parents=[common], help=text)
        sp.add_argument("--checkpoint", type=Path)
    sp = sub.add_parser("baseline", parents=[common], help="no_action or neighbor_only rollout")
    sp.add_argument("kind", choices=("no_action", "neighbor_only"))
    sp.add_argument("--checkpoint", type=Path)
    sp = sub.add_parser("classify", parents=[common], help="resilience snapshot of a link report CSV")
    sp.add_argument("report", type=Path)
    sub.add_parser("layout", parents=[common], help="emit the layout as JSON")
    return p


def _prepare_out(out: Path, scenario: ScenarioConfig, train_cfg) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.cfg").write_text(dump_config(scenario, train_cfg))
    (out / "seed.txt").write_text(f"{scenario.seed}\n")
    return out


def _policy(args, needed: bool):
    if args.checkpoint is None:
        if needed:
            raise ConfigError("--checkpoint is required for this policy")
        return None
    policy, _ = load_checkpoint(args.checkpoint)
    return policy


def _scenario(cfg: ScenarioConfig, n_sites: int) -> OutageScenario:
    return OutageScenario.of(pick_outage_sites(cfg, n_sites))


def cmd_train(args, scenario, train_cfg, out):
    env = scenario.make_env(normalize_reward=train_cfg.normalize_reward)
    ckpt = out / CHECKPOINT_NAME
    agents, log = train(env, train_cfg, checkpoint_path=ckpt)
    save_checkpoint(ckpt, policy_of(agents), env.n_cells, train_cfg)
    (out / "train_log.csv").write_text(log.to_csv())
    lines = ["site,step,loss"] + [f"{s},{k},{v!r}" for s, vals in sorted(log.losses.items())
                                  for k, v in enumerate(vals)]
    (out / "losses.csv").write_text("\n".join(lines) + "\n")
    print(f"trained {len(agents)} agents over {log.env_steps} steps -> {ckpt}")


def cmd_infer(args, scenario, train_cfg, out):
    env = scenario.make_env()
    traj = infer(_policy(args, True), env, _scenario(scenario, env.n_sites), scenario.k_steps)
    (out / "trajectory.jsonl").write_text(traj.to_jsonl("multi_agent"))
    print(json.dumps(traj.final.snapshot.to_dict(), sort_keys=True))


def cmd_baseline(args, scenario, train_cfg, out):
    env = scenario.make_env()
    sc = _scenario(scenario, env.n_sites)
    if args.kind == "no_action":
        traj = no_action_rollout(env, sc, scenario.k_steps)
    else:
        traj = neighbor_only_rollout(env, sc, _policy(args, True), scenario.k_steps)
    (out / "trajectory.jsonl").write_text(traj.to_jsonl(args.kind))
    print(json.dumps(traj.final.snapshot.to_dict(), sort_keys=True))


def cmd_evaluate(args, scenario, train_cfg, out):
    policy = _policy(args, scenario.policy != "no_action")
    run = run_dynamic(scenario, policy)
    export_metrics(run.records, out / "metrics.csv")
    write_plot_data(run.records, out)
    f = run.final
    print(f"off_sites={list(run.off_sites)} detected_at={run.detected_at} "
          f"actions_at={run.action_ticks} final p_coverage={f.p_coverage:.4f} "
          f"p_service={f.p_service:.4f} states={f.coverage_state}{f.service_state}")


def cmd_classify(args, scenario, train_cfg, out):
    report = LinkReport.from_csv(args.report.read_text())
    snap = snapshot(report, scenario.thresholds)
    text = json.dumps(snap.to_dict(), indent=1, sort_keys=True) + "\n"
    (out / "snapshot.json").write_text(text)
    print(f"coverage_state={snap.coverage_state} service_state={snap.service_state}")


def cmd_layout(args, scenario, train_cfg, out):
    (out / "layout.json").write_text(scenario.layout.build().to_json())
    print(f"wrote {out / 'layout.json'}")


COMMANDS = {"train": cmd_train, "infer": cmd_infer, "baseline": cmd_baseline,
            "evaluate": cmd_evaluate, "classify": cmd_classify, "layout": cmd_layout}


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        scenario, train_cfg = load_config(args.config, args.seed)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        out = _prepare_out(args.out, scenario, train_cfg)
        COMMANDS[args.command](args, scenario, train_cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
