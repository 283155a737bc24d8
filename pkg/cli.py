#!/usr/bin/env python3
"""
Usage: python cli.py {run,check,sweep,audit} <config.env> [options]

Exit codes: 0 success, 1 configuration error, 2 solver failure.
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

import config as settings
from src.scenario_io import (
    Config,
    audit_scenario,
    check_scenario,
    ensure_valid,
    explain,
    parse_config,
    run_scenario,
    sweep,
)
from src.utils.errors import ConfigParseError, ConfigValidationError, PoromechError
from src.utils.logging_config import setup_global_logging

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="poromech", description="Two-phase poromechanics simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("config", nargs="?", help="scenario document (key=value)")
        p.add_argument("--config", dest="config_flag", help="scenario document, alternative to the positional")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="seed for randomized audits")
        p.add_argument("--eps-final", type=float, help="last ε level of the schedule")
        p.add_argument("--h", type=float, help="time step in seconds")
        p.add_argument("--steps", type=int, help="number of time steps")
        p.add_argument("--quiet", action="store_true", help="warnings only, no progress bar")

    common(sub.add_parser("run", help="transient run with series, snapshots and manifest"))
    check = sub.add_parser("check", help="validation and weak-coupling audit only")
    common(check)
    check.add_argument("--explain", action="store_true", help="print the rule to assumption mapping")
    sweep_parser = sub.add_parser("sweep", help="independent runs over the values of one setting")
    common(sweep_parser)
    sweep_parser.add_argument("--param", required=True, help="setting to vary, e.g. eps_final")
    sweep_parser.add_argument("--values", nargs="+", required=True, help="values, one run each")
    audit = sub.add_parser("audit", help="property battery on the configured scenario")
    common(audit)
    audit.add_argument("--samples", type=int, help="monotonicity probe samples")
    return parser


def load_scenario(args: argparse.Namespace, audit_weak_coupling: bool) -> Config:
    path = args.config_flag or args.config
    if not path:
        raise ConfigParseError("no scenario document given")
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigParseError(f"cannot read {path}: {exc}") from exc

    config = parse_config(text, str(path.parent))
    overrides = {
        "output_dir": args.out,
        "seed": args.seed,
        "eps_final": args.eps_final,
        "time_step_s": args.h,
        "n_steps": args.steps,
    }
    overrides = {key: value for key, value in overrides.items() if value is not None}
    if args.out is None and config.output_dir == Config.output_dir:
        overrides["output_dir"] = str(Path(settings.POROMECH_OUTPUT_ROOT) / path.stem)
    if args.seed is None and config.seed == Config.seed:
        overrides["seed"] = settings.POROMECH_DEFAULT_SEED
    config = config.with_overrides(**overrides)
    config.issues = ensure_valid(config, audit_weak_coupling=audit_weak_coupling)
    return config


def cmd_run(args: argparse.Namespace) -> int:
    config = load_scenario(args, audit_weak_coupling=True)
    result = run_scenario(config, show_progress=settings.POROMECH_SHOW_PROGRESS and not args.quiet)
    print(f"Run completed: {result.stats.steps} steps, {result.stats.newton_iterations} Newton iterations")
    print(f"Outputs: {result.out_dir}")
    return EXIT_OK


def cmd_check(args: argparse.Namespace) -> int:
    if args.explain:
        for rule in explain():
            print(f"{rule['label']:<11} {rule['rule']:<16} {rule['severity']:<8} {rule['description']}")
        if not (args.config or args.config_flag):
            return EXIT_OK
    config = load_scenario(args, audit_weak_coupling=False)
    report = check_scenario(config)
    for issue in report["issues"]:
        print(f"{issue['severity']:<8} {issue['label']} {issue['message']}")
    if report.get("boundary_saturation"):
        values = report["boundary_saturation"]
        print(f"boundary saturation s_n^D: min {min(values):.6g}, max {max(values):.6g}")
    print("configuration valid" if report["valid"] else "configuration invalid")
    return EXIT_OK if report["valid"] else EXIT_CONFIG


def cmd_sweep(args: argparse.Namespace) -> int:
    config = load_scenario(args, audit_weak_coupling=False)
    outcomes = sweep(config, args.param, args.values, max_workers=settings.POROMECH_THREADS,
                     show_progress=settings.POROMECH_SHOW_PROGRESS and not args.quiet)
    for outcome in outcomes:
        line = f"{args.param}={outcome.value}: {outcome.status} -> {outcome.out_dir}"
        print(line if outcome.error is None else f"{line} ({outcome.error})")
    return EXIT_OK if all(o.status == "completed" for o in outcomes) else EXIT_SOLVER


def cmd_audit(args: argparse.Namespace) -> int:
    config = load_scenario(args, audit_weak_coupling=False)
    report = audit_scenario(config, samples=args.samples)
    for check in report.checks:
        print(f"{'PASS' if check.passed else 'FAIL'}  {check.name:<22} value={check.value:.6g}")
    return EXIT_OK if report.passed else EXIT_SOLVER


COMMANDS = {"run": cmd_run, "check": cmd_check, "sweep": cmd_sweep, "audit": cmd_audit}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_global_logging(quiet=args.quiet)
    try:
        return COMMANDS[args.command](args)
    except (ConfigParseError, ConfigValidationError) as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PoromechError as exc:
        print(f"Solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
