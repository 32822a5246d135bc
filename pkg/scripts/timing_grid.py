"""Receiver RMSE over synchronisation delay and satellite count, both receivers.

Writes one CSV row per (receiver, satellite count, delay) using the
calibrated profile.
"""
import argparse
import dataclasses
from pathlib import Path

from astars_nav.config import apply_sweep_value, load_config
from astars_nav.montecarlo import run_monte_carlo
from astars_nav.report import emit_csv

ROOT = Path(__file__).resolve().parent.parent
COLUMNS = ("rx_name", "sat_count", "timing_ns", "rmse_m", "p95_m", "failures", "trials")


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config", default=str(ROOT / "configs" / "calibrated.toml"))
    p.add_argument("--counts", type=int, nargs="+", default=[6, 8, 12])
    p.add_argument("--timing", type=float, nargs="+", default=[float(t) for t in range(0, 11)])
    p.add_argument("--trials", type=int, default=300)
    p.add_argument("--out", default="results/timing_grid.csv")
    args = p.parse_args(argv)
    base = load_config(args.config)
    rows = []
    for n in args.counts:
        for t in args.timing:
            cfg = apply_sweep_value(apply_sweep_value(base, "sat_count", n), "timing_ns", t)
            cfg = dataclasses.replace(cfg, trials=args.trials)
            res = run_monte_carlo(cfg)
            for name in res.receiver_names:
                rows.append({"rx_name": name, "sat_count": n, "timing_ns": t, "rmse_m": res.rmse(name),
                             "p95_m": res.percentile(name, 95), "failures": res.failures(name),
                             "trials": args.trials})
                print(f"{name:>7} N={n:2d} {t:4.1f} ns  rmse {res.rmse(name):.3f} m", flush=True)
    emit_csv(rows, args.out, COLUMNS)


if __name__ == "__main__":
    main()
