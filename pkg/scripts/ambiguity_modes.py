"""Compare known integers against double-difference resolution with a base.

Reports RMSE, failure counts and ratio-test rejections for a range of
carrier phase noise levels on the base and rover accumulation epochs.
"""
import argparse
import dataclasses
from pathlib import Path

from astars_nav.config import load_config
from astars_nav.montecarlo import MonteCarloFailure, run_monte_carlo
from astars_nav.report import emit_csv

ROOT = Path(__file__).resolve().parent.parent
COLUMNS = ("mode", "dd_phase_std_cyc", "rx_name", "rmse_m", "failures", "rejected", "trials")


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config", default=str(ROOT / "configs" / "rtk_dd.toml"))
    p.add_argument("--phase", type=float, nargs="+", default=[0.005, 0.01, 0.02, 0.05])
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--out", default="results/ambiguity_modes.csv")
    args = p.parse_args(argv)
    base = dataclasses.replace(load_config(args.config), trials=args.trials)
    rows = []
    runs = [("known", None)] + [("dd", s) for s in args.phase]
    for mode, std in runs:
        errors = dataclasses.replace(base.errors, ambiguity_mode=mode,
                                     dd_phase_std=std if std is not None else base.errors.dd_phase_std)
        cfg = dataclasses.replace(base, errors=errors)
        try:
            res = run_monte_carlo(cfg)
        except MonteCarloFailure as exc:
            res = exc.result
        for name in res.receiver_names:
            recs = res.for_receiver(name)
            rows.append({"mode": mode, "dd_phase_std_cyc": std if std is not None else 0.0, "rx_name": name,
                         "rmse_m": res.rmse(name), "failures": res.failures(name),
                         "rejected": sum(r.failure == "ambiguity_rejected" for r in recs), "trials": args.trials})
            print(f"{mode:>5} {std!s:>6} {name:>7} rmse {res.rmse(name):.3f} m, {res.failures(name)} failed",
                  flush=True)
    emit_csv(rows, args.out, COLUMNS)


if __name__ == "__main__":
    main()
