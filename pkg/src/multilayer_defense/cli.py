"""Command-line entry point: ``multilayer-defense {simulate,train,evaluate,report}``.

Exit codes: 0 success, 1 a reference criterion failed, 2 usage or configuration
error, 3 filesystem error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import harness, training
from .config import DEFAULT_CONFIG_PATH, DEFAULT_REFERENCE_PATH, BatteryConfig, load_battery
from .coordinator import load_policy, save_policy
from .errors import ConfigError

EXIT_OK, EXIT_CRITERIA, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("multilayer_defense")


class UsageError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="multilayer-defense",
        description="Simulate, train and evaluate a layered missile defense (EW, cyber, deception).",
    )
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def common(sp, *, out_required=True):
        sp.add_argument("--config", type=Path, default=DEFAULT_CONFIG_PATH, help="battery configuration (YAML)")
        sp.add_argument("--seed", type=int, default=None, help="base seed (overrides the configuration)")
        sp.add_argument("--out", type=Path, required=out_required, help="output directory")

    sim = sub.add_parser("simulate", help="run the Monte Carlo battery")
    common(sim)
    sim.add_argument("--runs", type=int, default=None, help="runs per scenario (overrides the configuration)")
    sim.add_argument("--policy", type=Path, default=None, help="trained policy file for the multi-layer scenario")
    sim.add_argument("--format", choices=("csv", "json", "both"), default="both", help="which result files to write")
    sim.add_argument("--no-events", action="store_true", help="skip the per-step event log")

    tr = sub.add_parser("train", help="train the defense coordinator")
    common(tr)
    tr.add_argument("--episodes", type=int, default=2000)
    tr.add_argument("--mode", choices=("tabular", "dqn"), default="tabular")
    tr.add_argument("--scenario", default="multi_layer", help="scenario to train on")
    tr.add_argument("--eval-seeds", type=int, default=200, help="evaluation episodes for the greedy-vs-random summary")

    ev = sub.add_parser("evaluate", help="score a trained policy against uniform-random play")
    common(ev, out_required=False)
    ev.add_argument("--policy", type=Path, required=True)
    ev.add_argument("--scenario", default="multi_layer")
    ev.add_argument("--runs", type=int, default=200, help="evaluation episodes")

    rp = sub.add_parser("report", help="check results against the reference table")
    rp.add_argument("results", type=Path, help="runs.csv or summary.json")
    rp.add_argument("--reference", type=Path, default=DEFAULT_REFERENCE_PATH)
    rp.add_argument("--config", type=Path, default=DEFAULT_CONFIG_PATH, help="supplies budgets to normalize spend")
    rp.add_argument("--out", type=Path, default=None, help="directory for the verdict files")
    rp.add_argument("--format", choices=("csv", "json", "both"), default="json")
    return p


def _prepare_out(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {path}: {exc}") from exc
    return path


def _battery(args) -> BatteryConfig:
    if not args.config.is_file():
        raise ConfigError(f"configuration file {args.config} does not exist", key="--config")
    battery = load_battery(args.config)
    if args.seed is not None:
        battery = replace(battery, base_seed=args.seed)
    runs = getattr(args, "runs", None)
    if runs is not None:
        if runs < 1:
            raise UsageError("--runs must be at least 1")
        battery = replace(battery, runs=tuple(runs for _ in battery.scenarios))
    return battery


def _scenario(battery: BatteryConfig, name: str):
    if name not in battery.catalog:
        raise ConfigError(f"unknown scenario {name!r}", key="--scenario")
    return battery.catalog[name]


def cmd_simulate(args) -> int:
    battery = _battery(args)
    if args.policy is not None:
        scenarios = tuple(
            replace(s, policy="trained", policy_path=str(args.policy)) if s.name == "multi_layer" else s
            for s in battery.scenarios
        )
        battery = replace(battery, scenarios=scenarios)
    out = _prepare_out(args.out)
    t0 = time.perf_counter()
    events = io.StringIO() if not args.no_events else None
    report = harness.run_configured_battery(battery, event_log=events)
    elapsed = time.perf_counter() - t0
    if args.format in ("csv", "both"):
        harness.write_runs_csv(report.results, out / "runs.csv")
    if args.format in ("json", "both"):
        harness.write_summary_json(report, out / "summary.json")
    if events is not None:
        (out / "events.jsonl").write_text(events.getvalue())
    for name, s in report.scenarios.items():
        print(f"{name:15s} runs={s.runs:4d} acquisition={s.acquisition_rate:6.3f} deviation={s.deviation_mean:7.3f} deg")
    print(f"{report.total_runs} runs in {elapsed:.1f} s -> {out}")
    return EXIT_OK


def cmd_train(args) -> int:
    battery = _battery(args)
    scenario = _scenario(battery, args.scenario)
    if not scenario.layers:
        raise ConfigError(f"scenario {scenario.name!r} enables no defense layer", key=f"scenarios.{scenario.name}.layers")
    if args.episodes < 1:
        raise UsageError("--episodes must be at least 1")
    out = _prepare_out(args.out)
    seed = 0 if args.seed is None else args.seed
    cfg = training.TrainingConfig(episodes=args.episodes, seed=seed)

    def progress(i, ret):
        if (i + 1) % 100 == 0:
            log.info("episode %d return %.3f", i + 1, ret)

    result = training.train(scenario, args.mode, cfg, progress=progress)
    save_policy(result.policy, out / "policy.bin")
    curve = result.learning_curve()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["episode", "return", "epsilon", "moving_average"])
    for i, (r, e, m) in enumerate(zip(result.returns, result.epsilons, curve)):
        w.writerow([i, repr(r), repr(e), repr(float(m))])
    (out / "learning_curve.csv").write_text(buf.getvalue())
    gate = training.learning_gate(scenario, result.policy, training.evaluation_seeds(args.eval_seeds))
    print(f"greedy mean return {gate.trained_mean:.3f}")
    print(f"random mean return {gate.random_mean:.3f}")
    print(f"improvement {100 * gate.improvement:+.1f}% ({'meets' if gate.passed else 'below'} the +20% gate)")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    battery = _battery(args)
    scenario = _scenario(battery, args.scenario)
    try:
        policy = load_policy(args.policy)
    except ValueError as exc:
        raise ConfigError(f"{args.policy}: {exc}", key="--policy") from exc
    if args.runs < 1:
        raise UsageError("--runs must be at least 1")
    gate = training.learning_gate(scenario, policy, training.evaluation_seeds(args.runs))
    summary = {
        "scenario": scenario.name,
        "episodes": args.runs,
        "trained_mean_return": gate.trained_mean,
        "random_mean_return": gate.random_mean,
        "improvement": gate.improvement,
        "passed": gate.passed,
    }
    print(json.dumps(summary, indent=2))
    if args.out is not None:
        (_prepare_out(args.out) / "evaluation.json").write_text(json.dumps(summary, indent=2) + "\n")
    return EXIT_OK


def cmd_report(args) -> int:
    reference = harness.load_reference(args.reference)
    path = args.results
    if not path.is_file():
        raise OSError(f"cannot read {path}")
    if path.suffix == ".json":
        try:
            report = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON: {exc}", key="<summary>") from exc
        if not isinstance(report, dict) or not isinstance(report.get("scenarios"), dict):
            raise ConfigError(f"{path}: missing 'scenarios' mapping", key="scenarios")
    else:
        try:
            results = harness.read_runs_csv(path)
        except harness.MalformedRunsError as exc:
            raise ConfigError(f"{path}: malformed CSV at line {exc.line}: {exc}", key=f"line {exc.line}") from exc
        calibration = load_battery(args.config).scenarios[0].calibration
        report = harness.report_from_runs(results, calibration)
    verdicts = harness.compare_to_reference(report, reference)

    print(f"{'criterion':26s} {'measured':>10s} {'reference':>14s} {'tolerance':>9s}  status")
    for v in verdicts:
        ref = f"{v.reference[0]:g}" if v.reference[0] == v.reference[1] else f"{v.reference[0]:g}-{v.reference[1]:g}"
        measured = "-" if v.measured is None else f"{v.measured:.4f}"
        print(f"{v.name:26s} {measured:>10s} {ref:>14s} {v.tolerance:>9s}  {v.status.upper()}")
    if args.out is not None:
        out = _prepare_out(args.out)
        rows = [v.to_dict() for v in verdicts]
        if args.format in ("json", "both"):
            (out / "verdict.json").write_text(json.dumps(rows, indent=2) + "\n")
        if args.format in ("csv", "both"):
            buf = io.StringIO()
            w = csv.DictWriter(buf, fieldnames=list(rows[0]) if rows else ["name"], lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow({**r, "reference": "/".join(f"{x:g}" for x in r["reference"])})
            (out / "verdict.csv").write_text(buf.getvalue())
    return EXIT_OK if all(v.status == "pass" for v in verdicts) else EXIT_CRITERIA


COMMANDS = {"simulate": cmd_simulate, "train": cmd_train, "evaluate": cmd_evaluate, "report": cmd_report}


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help and 2 for usage errors
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc} [key: {exc.key}]", file=sys.stderr)
        return EXIT_CONFIG
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
