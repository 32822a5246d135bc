"""Regenerate every CSV table from the shipped configs.

Usage: python scripts/reproduce_all.py [--out results] [--trials N]
"""
import argparse
import sys
from pathlib import Path

from astars_nav import cli

ROOT = Path(__file__).resolve().parent.parent
CONFIGS = ROOT / "configs"

JOBS = [
    ("beamwidth", "default.toml", "beamwidth"),
    ("timesync", "default.toml", "timesync"),
    ("dop", "default.toml", "dop"),
    ("budget", "calibrated.toml", "budget"),
    ("simulate", "calibrated.toml", "simulate"),
    ("sweep", "sweep_sat_count.toml", "sat_count"),
    ("sweep", "sweep_timing_urban.toml", "timing_urban"),
    ("sweep", "sweep_timing_indoor.toml", "timing_indoor"),
    ("sweep", "sweep_elements.toml", "elements"),
]


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="results")
    p.add_argument("--trials", type=int, default=None, help="override every trial count")
    p.add_argument("--seed", type=int, default=None)
    args = p.parse_args(argv)
    worst = 0
    for command, config, sub in JOBS:
        flags = ["--out", str(Path(args.out) / sub), "-v"]
        if args.trials is not None:
            flags += ["--trials", str(args.trials)]
        if args.seed is not None:
            flags += ["--seed", str(args.seed)]
        print(f"{command} {config} -> {Path(args.out) / sub}", flush=True)
        code = cli.main(flags + [command, str(CONFIGS / config)])
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
