"""Tables and CSV output.

Floats are written with 9 significant digits, rows in a fixed column
order, so identical inputs give identical bytes.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import math
from pathlib import Path

import numpy as np

from .astars import PhaseShiftModel, beam_uncertainty, beamwidth_theta
from .config import ScenarioConfig
from .constants import L1_WAVELENGTH, L2_WAVELENGTH, L5_WAVELENGTH, SPEED_OF_LIGHT
from .error_budget import dop_report, dop_scenario_compare, total_error_omega
from .montecarlo import RunResult, trial_rng
from .observation import TimeSyncModel, timesync_gamma
from .scenario import generate_scenario, scene_geometry, timesync_model
from .solver import SingularGeometryError

SWEEP_COLUMNS = ("variable", "value", "rmse_m", "p5_m", "p95_m", "trials", "failures")
TRIAL_COLUMNS = ("trial", "rx_name", "err_x_m", "err_y_m", "err_z_m", "err_3d_m", "stage1_err_m", "iterations")
SUMMARY_COLUMNS = ("rx_name", "stage", "rmse_m", "p5_m", "p95_m", "trials", "failures", "mean_pdop")
BEAMWIDTH_COLUMNS = ("rx_name", "r_ru_m", "elements_per_row", "wavelength_m", "theta_beam_rad",
                     "delta_p_m", "expected_m")
TIMESYNC_COLUMNS = ("meas_rate_hz", "timing_ns", "gamma_s", "distance_error_m")
BUDGET_COLUMNS = ("rx_name", "dop_mode", "phase_shift_m", "beamwidth_m", "timesync_m", "dop_scaled_m",
                  "total_m", "meas_sigma_m", "mean_pdop")
DOP_COLUMNS = ("mode", "trials", "mean_hdop", "mean_vdop", "mean_pdop")
DOP_TRIAL_COLUMNS = ("trial", "mode", "hdop", "vdop", "pdop")

GNSS_WAVELENGTHS = (L1_WAVELENGTH, L2_WAVELENGTH, L5_WAVELENGTH)


class ReportIOError(OSError):
    pass


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "{:.9g}".format(float(v))
    return str(v)


def _as_dict(row) -> dict:
    if dataclasses.is_dataclass(row):
        return dataclasses.asdict(row)
    return dict(row)


def render_csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        d = _as_dict(row)
        w.writerow([format_value(d[c]) for c in columns])
    return buf.getvalue()


def emit_csv(rows, path, columns) -> Path:
    """Write `rows` (dicts or dataclasses) as UTF-8 CSV in `columns` order."""
    p = Path(path)
    text = render_csv(rows, columns)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        with p.open("w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ReportIOError(f"cannot write {p}: {exc}") from exc
    return p


def trial_rows(result: RunResult) -> list[dict]:
    out = []
    for r in result.records:
        out.append({
            "trial": r.trial, "rx_name": r.rx_name,
            "err_x_m": r.error[0], "err_y_m": r.error[1], "err_z_m": r.error[2],
            "err_3d_m": r.err_3d, "stage1_err_m": r.stage1_err, "iterations": r.iterations,
        })
    return out


def summary_rows(result: RunResult) -> list[dict]:
    out = []
    for name in result.receiver_names:
        for stage in ("astars", "receiver"):
            out.append({
                "rx_name": name, "stage": stage, "rmse_m": result.rmse(name, stage),
                "p5_m": result.percentile(name, 5, stage), "p95_m": result.percentile(name, 95, stage),
                "trials": result.config.trials, "failures": result.failures(name),
                "mean_pdop": result.dop_stats(name)["mean_pdop"],
            })
    return out


def beamwidth_rows(cfg: ScenarioConfig, elements=range(40, 201), wavelengths=GNSS_WAVELENGTHS) -> list[dict]:
    """Beam footprint uncertainty per receiver distance, element count and wavelength."""
    geo = scene_geometry(cfg)
    out = []
    for rx in cfg.receivers:
        r_Ru = float(np.linalg.norm(np.asarray(rx.position, float) - geo.centroid))
        for lam in wavelengths:
            for e in elements:
                arr = dataclasses.replace(geo.array, elements_per_row=int(e))
                dp, ex = beam_uncertainty(r_Ru, arr, lam)
                out.append({"rx_name": rx.name, "r_ru_m": r_Ru, "elements_per_row": int(e),
                            "wavelength_m": lam, "theta_beam_rad": beamwidth_theta(arr, lam),
                            "delta_p_m": dp, "expected_m": ex})
    return out


def timesync_rows(cfg: ScenarioConfig, timing_ns=tuple(i * 0.5 for i in range(21)),
                  rates=tuple(range(50, 501, 50))) -> list[dict]:
    """Ranging error ``c * gamma`` over delay bound and measurement rate."""
    out = []
    for f in rates:
        for t in timing_ns:
            model = TimeSyncModel(t * 1e-9, cfg.timesync.meas_std, float(f))
            g = timesync_gamma(model)
            out.append({"meas_rate_hz": float(f), "timing_ns": float(t), "gamma_s": g,
                        "distance_error_m": SPEED_OF_LIGHT * g})
    return out


def budget_rows(cfg: ScenarioConfig) -> list[dict]:
    """Mean error terms per receiver over `cfg.trials` sampled constellations."""
    geo = scene_geometry(cfg)
    a = cfg.astars
    phase = PhaseShiftModel(a.phase_hardware, a.phase_amplifier, a.phase_noise_std)
    sync = timesync_model(cfg)
    sigma = math.hypot(cfg.errors.meas_noise_std, cfg.errors.multipath_std)
    acc = {(rx.name, m): [] for rx in cfg.receivers for m in ("single", "literal")}
    pd = {rx.name: [] for rx in cfg.receivers}
    for t in range(cfg.trials):
        scene = generate_scenario(cfg, trial_rng(cfg.seed, t, 0), geo)
        for rs in scene.receivers:
            try:
                dop = dop_report(rs.sat_positions, geo.centroid)
            except SingularGeometryError:
                continue
            pd[rs.name].append(dop.pdop)
            for mode in ("single", "literal"):
                rep = total_error_omega(phase, (rs.r_Ru, geo.array, a.wavelength), sync, dop, sigma,
                                        literal=(mode == "literal"))
                acc[(rs.name, mode)].append(rep)
    out = []
    for rx in cfg.receivers:
        for mode in ("single", "literal"):
            reps = acc[(rx.name, mode)]
            if not reps:
                continue
            terms = {k: float(np.mean([getattr(r, k) for r in reps]))
                     for k in ("phase_shift_m", "beamwidth_m", "timesync_m", "dop_scaled_m")}
            out.append({"rx_name": rx.name, "dop_mode": mode, **terms,
                        "total_m": terms["phase_shift_m"] + terms["beamwidth_m"] + terms["timesync_m"]
                        + terms["dop_scaled_m"],
                        "meas_sigma_m": sigma, "mean_pdop": float(np.mean(pd[rx.name]))})
    return out


def dop_rows(cfg: ScenarioConfig):
    """Per-mode mean DoP and the per-trial values behind it."""
    geo = scene_geometry(cfg)
    rng = np.random.default_rng([cfg.seed, 7])
    res = dop_scenario_compare(cfg.trials, rng, geo.centroid, geo.boresight_azimuth,
                               cfg.constellation.count, geo.sky)
    summary, per_trial = [], []
    for mode, s in res.items():
        summary.append({"mode": mode, "trials": len(s.hdop), "mean_hdop": s.mean_hdop,
                        "mean_vdop": s.mean_vdop, "mean_pdop": s.mean_pdop})
        for i in range(len(s.hdop)):
            per_trial.append({"trial": i, "mode": mode, "hdop": s.hdop[i], "vdop": s.vdop[i], "pdop": s.pdop[i]})
    return summary, per_trial
