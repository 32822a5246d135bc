"""Monte Carlo driver: per-trial pipeline, aggregation and parameter sweeps."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .ambiguity import (AmbiguityRejectedError, InsufficientObservationsError, NoCandidateError,
                        fix_integers, fixed_baseline_and_recover, float_solve, form_double_differences)
from .astars import PhaseShiftModel, beam_uncertainty, elos_angle, incidence_angles, phase_shift_range_error
from .channel import AoaErrorModel, aoa_error_std, element_snr
from .config import ScenarioConfig, SweepSpec, apply_sweep_value
from .constants import SPEED_OF_LIGHT
from .geo import EcefVector
from .observation import (ClockModel, ObsErrorConfig, compensate_obs, synthesize_direct_obs,
                          synthesize_elos_obs)
from .scenario import ReceiverScene, Scene, SceneGeometry, generate_scenario, link_budget, scene_geometry
from .solver import (IterationConfig, NonPhysicalElosWarning, SingularGeometryError, correct_ranges,
                     decouple_elos_distance, solve_astars_fix, solve_receiver_fix)

# independent per-trial streams
_SCENE, _NOISE, _BEAM, _AMB = 0, 1, 2, 3


class MonteCarloFailure(RuntimeError):
    def __init__(self, msg, result=None):
        super().__init__(msg)
        self.result = result


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    rx_name: str
    error: np.ndarray  # receiver error, m (x, y, z)
    stage1_error: np.ndarray  # surface fix error, m
    iterations: int  # Gauss-Newton iterations, both stages
    pdop: float
    failure: str = ""

    @property
    def ok(self) -> bool:
        return not self.failure

    @property
    def err_3d(self) -> float:
        return float(np.linalg.norm(self.error))

    @property
    def stage1_err(self) -> float:
        return float(np.linalg.norm(self.stage1_error))


@dataclass(frozen=True)
class RunResult:
    config: ScenarioConfig = field(repr=False)
    records: tuple = field(repr=False)
    trace: tuple = field(default=(), repr=False)

    @property
    def receiver_names(self) -> list:
        return [r.name for r in self.config.receivers]

    def for_receiver(self, name: str) -> list:
        return [r for r in self.records if r.rx_name == name]

    def errors(self, name: str, stage: str = "receiver") -> np.ndarray:
        recs = [r for r in self.for_receiver(name) if r.ok]
        if stage == "astars":
            return np.array([r.stage1_err for r in recs])
        return np.array([r.err_3d for r in recs])

    def rmse(self, name: str, stage: str = "receiver") -> float:
        e = self.errors(name, stage)
        return float(np.sqrt(np.mean(e ** 2))) if e.size else math.nan

    def failures(self, name: str) -> int:
        return sum(1 for r in self.for_receiver(name) if not r.ok)

    def percentile(self, name: str, q: float, stage: str = "receiver") -> float:
        e = self.errors(name, stage)
        return float(np.percentile(e, q)) if e.size else math.nan

    def dop_stats(self, name: str) -> dict:
        p = np.array([r.pdop for r in self.for_receiver(name)])
        p = p[np.isfinite(p)]
        return {"mean_pdop": float(np.mean(p)) if p.size else math.nan,
                "median_pdop": float(np.median(p)) if p.size else math.nan}


def trial_rng(seed: int, trial: int, stream: int, sub: int = 0):
    return np.random.default_rng([int(seed), int(trial), stream, sub])


def _aoa_std(cfg: ScenarioConfig, rs: ReceiverScene, geo: SceneGeometry) -> np.ndarray:
    e = cfg.errors
    if e.aoa_std >= 0:
        return np.full(len(rs.sats), e.aoa_std * e.aoa_scale)
    budget = link_budget(cfg)
    r_iRs = np.linalg.norm(rs.sat_positions - geo.centroid, axis=1)
    out = np.empty(len(r_iRs))
    for k, r in enumerate(r_iRs):
        model = AoaErrorModel(element_snr(budget, float(r)), e.snapshots, cfg.astars.elements_per_row)
        out[k] = aoa_error_std(model)
    return out * e.aoa_scale


def broadcast_angles(cfg: ScenarioConfig, rs: ReceiverScene, geo: SceneGeometry, rng) -> dict:
    """Angles the surface broadcasts: beam-centre AoD, noisy and quantised AoA.

    The beam points at a spot displaced from the receiver by a uniform
    distance inside the beam footprint, in a random direction across the
    line of sight.
    """
    e = cfg.errors
    to_rx = rs.position - geo.centroid
    u = to_rx / np.linalg.norm(to_rx)
    if e.beam_error and rs.r_Ru > 0:
        dp, _ = beam_uncertainty(rs.r_Ru, geo.array, cfg.astars.wavelength)
        w = np.cross(u, rng.normal(size=3))
        w /= np.linalg.norm(w)
        centre = to_rx - rng.uniform(0.0, dp) * w
    else:
        centre = to_rx
    std = _aoa_std(cfg, rs, geo)
    noise = rng.normal(0.0, 1.0, len(rs.sats)) * std
    q = e.quantization_step
    quant = rng.uniform(-q / 2, q / 2, len(rs.sats)) if q > 0 else np.zeros(len(rs.sats))
    out = {}
    for k, sat in enumerate(rs.sats):
        aoa, aod = incidence_angles(rs.mode, geo.normal, rs.sat_positions[k] - geo.centroid, centre)
        out[sat.id] = elos_angle(rs.mode, aoa + noise[k] + quant[k], aod)
    return out


def _phase_model(cfg: ScenarioConfig) -> PhaseShiftModel:
    a = cfg.astars
    return PhaseShiftModel(a.phase_hardware, a.phase_amplifier, a.phase_noise_std)


def _elos_epoch(cfg, rs, geo, scene, ints, rng, omega):
    e = cfg.errors
    err = ObsErrorConfig(meas_noise_std=e.meas_noise_std, multipath_std=e.multipath_std,
                         ambiguities=ints, quantization_step=e.quantization_step)
    clocks = ClockModel(receiver_bias=scene.gamma, elos_time=rs.elos_time)
    s = err.noise_std
    noise = rng.normal(0.0, s, len(rs.sats)) if s > 0 else np.zeros(len(rs.sats))
    return [synthesize_elos_obs(sat, geo.array, clocks, err, float(omega[k]), rng, cfg.astars.wavelength,
                                noise=float(noise[k]))
            for k, sat in enumerate(rs.sats)]


def _resolve_dd(cfg, rs, geo, scene, rover_ints, rng_amb, omega):
    """Rover integers from DD ambiguity resolution against a synthetic base.

    The DD epochs form an accumulation period before the positioning epoch,
    with the same integers and surface phase error.
    """
    e = cfg.errors
    lam = cfg.astars.wavelength
    base = geo.centroid + np.asarray(e.base_offset, dtype=float)
    base_ints = {s.id: int(rng_amb.integers(-e.ambiguity_range, e.ambiguity_range + 1)) for s in rs.sats}
    phase_m = e.dd_phase_std * lam
    base_err = ObsErrorConfig(meas_noise_std=phase_m, multipath_std=0.0, ambiguities=base_ints)
    rover_rel = ObsErrorConfig(meas_noise_std=phase_m, multipath_std=0.0, ambiguities=rover_ints)
    base_clock = ClockModel(receiver_bias=float(rng_amb.normal(0.0, 1e-6)))
    rover_clock = ClockModel(receiver_bias=scene.gamma, elos_time=rs.elos_time)
    code_off = -SPEED_OF_LIGHT * (rover_clock.receiver_bias - rover_clock.elos_time)
    sat_clock = {"sat_clock": {s.id: s.clock_bias for s in rs.sats}}
    sets = []
    for ep in range(e.dd_epochs):
        rover = [synthesize_elos_obs(s, geo.array, rover_clock, rover_rel, float(omega[k]), rng_amb, lam,
                                     epoch=float(ep)) for k, s in enumerate(rs.sats)]
        # the surface path model assumes broadcast satellite clocks are applied
        base_obs = [compensate_obs(synthesize_direct_obs(s, base, base_clock, base_err, rng_amb, lam,
                                                         epoch=float(ep)), sat_clock)
                    for s in rs.sats]
        rc, bc = {}, {}
        for s in rs.sats:
            nr = float(rng_amb.normal(0.0, e.code_std)) if e.code_std > 0 else 0.0
            nb = float(rng_amb.normal(0.0, e.code_std)) if e.code_std > 0 else 0.0
            p = s.position.as_array()
            rc[s.id] = float(np.linalg.norm(p - geo.centroid)) + code_off + nr
            bc[s.id] = float(np.linalg.norm(p - base)) - SPEED_OF_LIGHT * base_clock.receiver_bias + nb
        sets.append(form_double_differences(rover, base_obs, rs.sats, base, scene.initial_point,
                                            rover_code=rc, base_code=bc,
                                            phase_std=max(e.dd_phase_std, 1e-6),
                                            code_std=max(e.code_std, 1e-4)))
    flt = float_solve(sets)
    fixed = fix_integers(flt, e.ratio_threshold)
    ref = flt.reference_sat
    _, rec = fixed_baseline_and_recover(flt, fixed, base_ints, rover_ints[ref] - base_ints[ref])
    return rec


def run_receiver(cfg: ScenarioConfig, scene: Scene, rs: ReceiverScene, geo: SceneGeometry,
                 trial: int, index: int, keep_trace: bool = False) -> tuple[TrialRecord, tuple]:
    """Full two-stage pipeline for one receiver in one trial."""
    e = cfg.errors
    seed = cfg.seed
    rng_noise = trial_rng(seed, trial, _NOISE, index)
    rng_beam = trial_rng(seed, trial, _BEAM, index)
    rng_amb = trial_rng(seed, trial, _AMB, index)
    nan3 = np.full(3, np.nan)

    def failed(reason, s1=nan3, its=0):
        return TrialRecord(trial, rs.name, nan3, s1, its, rs.pdop, reason), ()

    mask = cfg.constellation.pdop_mask
    if mask > 0 and not rs.pdop <= mask:
        return failed("pdop_mask")

    lam = cfg.astars.wavelength
    ints = {s.id: int(rng_amb.integers(-e.ambiguity_range, e.ambiguity_range + 1)) for s in rs.sats}
    if e.phase_shift:
        omega = np.atleast_1d(phase_shift_range_error(_phase_model(cfg), lam, rng_noise, size=len(rs.sats)))
    else:
        omega = np.zeros(len(rs.sats))
    obs = _elos_epoch(cfg, rs, geo, scene, ints, rng_noise, omega)

    if e.ambiguity_mode == "dd":
        try:
            ints_used = _resolve_dd(cfg, rs, geo, scene, ints, rng_amb, omega)
        except AmbiguityRejectedError:
            return failed("ambiguity_rejected")
        except (SingularGeometryError, NoCandidateError, InsufficientObservationsError, np.linalg.LinAlgError):
            return failed("ambiguity_float")
    else:
        ints_used = ints
    obs = [compensate_obs(o, {"ambiguity": ints_used}) for o in obs]

    it_cfg = IterationConfig(initial_point=EcefVector.from_array(scene.initial_point),
                             convergence_norm=cfg.solver.convergence_norm,
                             max_iterations=cfg.solver.max_iterations,
                             max_condition=cfg.solver.max_condition)
    try:
        fix = solve_astars_fix(obs, rs.sats, it_cfg)
    except SingularGeometryError:
        return failed("singular_stage1")
    s1 = fix.position.as_array() - geo.centroid
    if not fix.converged:
        return failed("diverged_stage1", s1, fix.iterations)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonPhysicalElosWarning)
        r_hat = decouple_elos_distance(fix)
    angles = broadcast_angles(cfg, rs, geo, rng_beam)
    ranges = correct_ranges(fix, r_hat, angles, rs.sats)
    try:
        rf = solve_receiver_fix(ranges, rs.sats, it_cfg, initial_point=fix.position)
    except SingularGeometryError:
        return failed("singular_stage2", s1, fix.iterations)
    its = fix.iterations + rf.iterations
    if not rf.converged:
        return failed("diverged_stage2", s1, its)
    err = rf.position.as_array() - rs.position
    trace = (fix.trace, rf.trace) if keep_trace else ()
    return TrialRecord(trial, rs.name, err, s1, its, rs.pdop), trace


def run_trial(cfg: ScenarioConfig, trial: int, geo: SceneGeometry | None = None, keep_trace=False):
    geo = geo or scene_geometry(cfg)
    scene = generate_scenario(cfg, trial_rng(cfg.seed, trial, _SCENE), geo)
    out, traces = [], []
    for i, rs in enumerate(scene.receivers):
        rec, tr = run_receiver(cfg, scene, rs, geo, trial, i, keep_trace)
        out.append(rec)
        traces.append(tr)
    return out, traces


def run_monte_carlo(cfg: ScenarioConfig, keep_trace: bool = False, fail_fraction: float = 0.5) -> RunResult:
    """Run `cfg.trials` independent trials for every receiver.

    Raises
    ------
    MonteCarloFailure
        If more than `fail_fraction` of the trials fail for any receiver;
        the partial result is attached.
    """
    geo = scene_geometry(cfg)
    records = []
    trace = ()
    for t in range(cfg.trials):
        recs, traces = run_trial(cfg, t, geo, keep_trace and t == 0)
        records.extend(recs)
        if keep_trace and t == 0:
            trace = tuple(traces)
    result = RunResult(cfg, tuple(records), trace)
    for name in result.receiver_names:
        bad = result.failures(name)
        if bad > fail_fraction * cfg.trials:
            raise MonteCarloFailure(f"{bad}/{cfg.trials} trials failed for receiver {name!r}", result)
    return result


@dataclass(frozen=True)
class SweepRow:
    variable: str
    value: float
    rmse_m: float
    p5_m: float
    p95_m: float
    trials: int
    failures: int


def sweep(spec: SweepSpec) -> list[SweepRow]:
    """One summary row per swept value.

    Every value reuses the base seed, so all points see the same random
    draws and differences between rows come from the parameter alone.
    """
    rows = []
    name = spec.receiver_name
    for v in spec.values:
        cfg = apply_sweep_value(spec.base, spec.variable, v)
        res = run_monte_carlo(cfg)
        rows.append(SweepRow(spec.variable, v, res.rmse(name, spec.stage),
                             res.percentile(name, 5, spec.stage), res.percentile(name, 95, spec.stage),
                             cfg.trials, res.failures(name)))
    return rows
