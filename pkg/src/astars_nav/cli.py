"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 runtime failure (including
a majority of failed trials), 3 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import report
from .config import ConfigError, ScenarioConfig, SweepSpec, load_config, load_sweep_spec
from .montecarlo import MonteCarloFailure, run_monte_carlo, sweep

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("astars_nav")


def _overrides(cfg: ScenarioConfig, args) -> ScenarioConfig:
    kw = {}
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.trials is not None:
        kw["trials"] = args.trials
    return dataclasses.replace(cfg, **kw) if kw else cfg


def _config(args) -> ScenarioConfig:
    return _overrides(load_config(args.config), args)


def cmd_simulate(args) -> int:
    cfg = _config(args)
    out = Path(args.out)
    try:
        res = run_monte_carlo(cfg)
        code = EXIT_OK
    except MonteCarloFailure as exc:
        log.error("%s", exc)
        res, code = exc.result, EXIT_RUNTIME
    report.emit_csv(report.trial_rows(res), out / "trials.csv", report.TRIAL_COLUMNS)
    report.emit_csv(report.summary_rows(res), out / "summary.csv", report.SUMMARY_COLUMNS)
    for row in report.summary_rows(res):
        log.info("%s %s rmse %.3f m (%d failures)", row["rx_name"], row["stage"], row["rmse_m"], row["failures"])
    return code


def cmd_sweep(args) -> int:
    spec = load_sweep_spec(args.config)
    spec = dataclasses.replace(spec, base=_overrides(spec.base, args))
    rows = sweep(spec)
    report.emit_csv(rows, Path(args.out) / "sweep.csv", report.SWEEP_COLUMNS)
    for r in rows:
        log.info("%s=%s rmse %.3f m", r.variable, r.value, r.rmse_m)
    return EXIT_OK


def cmd_dop(args) -> int:
    cfg = _config(args)
    summary, per_trial = report.dop_rows(cfg)
    out = Path(args.out)
    report.emit_csv(summary, out / "dop.csv", report.DOP_COLUMNS)
    report.emit_csv(per_trial, out / "dop_trials.csv", report.DOP_TRIAL_COLUMNS)
    return EXIT_OK


def cmd_beamwidth(args) -> int:
    cfg = _config(args)
    report.emit_csv(report.beamwidth_rows(cfg), Path(args.out) / "beamwidth.csv", report.BEAMWIDTH_COLUMNS)
    return EXIT_OK


def cmd_timesync(args) -> int:
    cfg = _config(args)
    report.emit_csv(report.timesync_rows(cfg), Path(args.out) / "timesync.csv", report.TIMESYNC_COLUMNS)
    return EXIT_OK


def cmd_budget(args) -> int:
    cfg = _config(args)
    report.emit_csv(report.budget_rows(cfg), Path(args.out) / "budget.csv", report.BUDGET_COLUMNS)
    return EXIT_OK


COMMANDS = {
    "simulate": (cmd_simulate, "Monte Carlo run: per-trial errors and RMSE summary"),
    "sweep": (cmd_sweep, "parameter sweep from a sweep file"),
    "dop": (cmd_dop, "transmission vs reflection DoP comparison"),
    "beamwidth": (cmd_beamwidth, "beam footprint uncertainty table"),
    "timesync": (cmd_timesync, "time synchronisation ranging error table"),
    "budget": (cmd_budget, "per-term error budget"),
}


def _add_common(p: argparse.ArgumentParser, suppress: bool) -> None:
    # sub-level copies must not overwrite values given before the command
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=d(None), help="override the config seed")
    p.add_argument("--trials", type=int, default=d(None), help="override the trial count")
    p.add_argument("--out", default=d("out"), help="output directory (default: out)")
    p.add_argument("--format", choices=["csv"], default=d("csv"))
    p.add_argument("-v", "--verbose", action="store_true", default=d(False))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="astars-nav", description=__doc__.splitlines()[0])
    _add_common(p, suppress=False)
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        s = sub.add_parser(name, help=help_)
        _add_common(s, suppress=True)
        s.add_argument("config", help="sweep file" if name == "sweep" else "scenario file (TOML)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    handler = COMMANDS[args.command][0]
    try:
        return handler(args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    except (RuntimeError, ArithmeticError, ValueError) as exc:
        log.error("runtime error: %s", exc)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
