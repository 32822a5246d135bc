"""Two-stage positioning: surface fix from carrier phase, then receiver fix.

Stage 1 runs Gauss-Newton on ``phi*lambda = |s_i - x| - c T`` with
``T = T_u - T_R`` and recovers the surface centroid and the joint time
term. Stage 2 turns the time term into the ELoS distance, corrects every
satellite range with the broadcast angles and solves a pure range fix for
the receiver, seeded at the stage-1 position.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .astars import ElosGeometry, corrected_range
from .constants import SPEED_OF_LIGHT
from .geo import EcefVector, SatelliteState, as_array, positions_array
from .observation import CarrierPhaseObs


class SingularGeometryError(np.linalg.LinAlgError):
    pass


class NonPhysicalElosWarning(UserWarning):
    pass


@dataclass(frozen=True)
class IterationConfig:
    initial_point: EcefVector | None = None
    convergence_norm: float = 1e-4  # m, on (dx, dy, dz, c dT)
    max_iterations: int = 20
    max_condition: float = 1e12  # on the normal equations

    def __post_init__(self):
        if not self.convergence_norm > 0:
            raise ValueError("convergence threshold must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True)
class LinearizedSystem:
    design: np.ndarray
    residuals: np.ndarray
    expansion: np.ndarray

    @property
    def unknowns(self) -> int:
        return self.design.shape[1]


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    step_norm: float
    residual_norm: float


@dataclass(frozen=True)
class AstarsFix:
    position: EcefVector
    time_term: float
    iterations: int
    converged: bool
    trace: tuple = field(default=(), repr=False)


@dataclass(frozen=True)
class ReceiverFix:
    position: EcefVector
    iterations: int
    converged: bool
    per_sat_ranges: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)
    trace: tuple = field(default=(), repr=False)


def _obs_values(obs) -> np.ndarray:
    return np.array([o.value_m if isinstance(o, CarrierPhaseObs) else float(o) for o in obs])


def _lstsq(A: np.ndarray, y: np.ndarray, max_condition: float) -> np.ndarray:
    # column equilibration keeps the metre and second columns comparable
    scale = np.linalg.norm(A, axis=0)
    if np.any(scale == 0):
        raise SingularGeometryError("design matrix has an all-zero column")
    As = A / scale
    sv = np.linalg.svd(As, compute_uv=False)
    if sv.size < A.shape[1] or sv[-1] <= 0 or (sv[0] / sv[-1]) ** 2 > max_condition:
        raise SingularGeometryError("satellite geometry is singular or ill-conditioned")
    x, *_ = np.linalg.lstsq(As, y, rcond=None)
    return x / scale


def linearize_ls_step(obs, sats, expansion, time_term: float = 0.0, with_clock: bool = True,
                      max_condition: float = 1e12):
    """One linearised least-squares step about `expansion`.

    Parameters
    ----------
    obs : sequence of CarrierPhaseObs or float
        Compensated observations (metres) in the order of `sats`.
    sats : sequence of SatelliteState or (n, 3) array
    expansion : EcefVector or array_like
        Taylor expansion point.
    time_term : float
        Current estimate of ``T_u - T_R`` (seconds); ignored without clock.
    with_clock : bool
        Stage 1 carries the ``-c`` time column; stage 2 does not.

    Returns
    -------
    system : LinearizedSystem
    step : ndarray
        ``(dx, dy, dz[, dT])`` solving the system in the LS sense.
    """
    S = positions_array(sats)
    y = _obs_values(obs)
    x0 = as_array(expansion)
    n_unknown = 4 if with_clock else 3
    if len(y) != len(S):
        raise ValueError("observation and satellite counts differ")
    if len(S) < n_unknown:
        raise SingularGeometryError(f"need at least {n_unknown} satellites, got {len(S)}")
    diff = S - x0
    r = np.linalg.norm(diff, axis=1)
    los = diff / r[:, None]
    if with_clock:
        A = np.hstack([-los, np.full((len(S), 1), -SPEED_OF_LIGHT)])
        dr = y - (r - SPEED_OF_LIGHT * time_term)
    else:
        A = -los
        dr = y - r
    step = _lstsq(A, dr, max_condition)
    return LinearizedSystem(design=A, residuals=dr, expansion=x0), step


def _step_norm(step: np.ndarray) -> float:
    v = step.copy()
    if v.size == 4:
        v[3] *= SPEED_OF_LIGHT
    return float(np.linalg.norm(v))


def _iterate(obs, sats, cfg: IterationConfig, x0, with_clock: bool):
    x = as_array(x0).copy()
    T = 0.0
    trace = []
    converged = False
    it = 0
    for it in range(1, cfg.max_iterations + 1):
        system, step = linearize_ls_step(obs, sats, x, T, with_clock, cfg.max_condition)
        x = x + step[:3]
        if with_clock:
            T = T + step[3]
        norm = _step_norm(step)
        trace.append(IterationRecord(it, norm, float(np.linalg.norm(system.residuals))))
        if norm < cfg.convergence_norm:
            converged = True
            break
    return x, T, it, converged, tuple(trace)


def _seed(cfg: IterationConfig):
    if cfg.initial_point is None:
        raise ValueError("an initial point is required")
    return as_array(cfg.initial_point)


def solve_astars_fix(obs, sats, cfg: IterationConfig) -> AstarsFix:
    """Iterate the stage-1 system to the surface centroid and time term."""
    x, T, it, ok, trace = _iterate(obs, sats, cfg, _seed(cfg), with_clock=True)
    return AstarsFix(EcefVector.from_array(x), float(T), it, ok, trace)


def decouple_elos_distance(fix: AstarsFix, tolerance: float = 1e-12) -> float:
    """ELoS distance ``c * T_R_hat`` with ``T_R_hat = -time_term``.

    The receiver clock is disciplined to network time, so the time term is
    ``-T_R`` plus the residual synchronisation error, which therefore lands
    in the returned distance. A positive time term means a negative path
    length; it is flagged with a :class:`NonPhysicalElosWarning`.
    """
    t_hat = -fix.time_term
    if t_hat < -tolerance:
        warnings.warn(f"time term {fix.time_term:.3e} s implies a negative ELoS path",
                      NonPhysicalElosWarning, stacklevel=2)
    return SPEED_OF_LIGHT * t_hat


def _sat_ids(sats) -> list:
    return [s.id if isinstance(s, SatelliteState) else i for i, s in enumerate(sats)]


def correct_ranges(fix: AstarsFix, r_Ru: float, angles: Mapping[int, ElosGeometry], sats) -> np.ndarray:
    """Satellite-to-receiver ranges from the triangle through the surface.

    ``r_iRs`` is recomputed from the estimated surface position; `angles`
    maps satellite id to the broadcast ELoS geometry.
    """
    S = positions_array(sats)
    ids = _sat_ids(sats)
    chi = np.empty(len(ids))
    for k, sid in enumerate(ids):
        if sid not in angles:
            raise KeyError(f"no angle record for satellite {sid}")
        chi[k] = angles[sid].chi
    r_iRs = np.linalg.norm(S - fix.position.as_array(), axis=1)
    return np.atleast_1d(corrected_range(r_iRs, max(r_Ru, 0.0), chi))


def solve_receiver_fix(ranges, sats, cfg: IterationConfig, initial_point=None) -> ReceiverFix:
    """Range-only Gauss-Newton fix (three unknowns) for the receiver."""
    ranges = np.asarray(ranges, dtype=float)
    x0 = as_array(initial_point) if initial_point is not None else _seed(cfg)
    x, _, it, ok, trace = _iterate(ranges, sats, cfg, x0, with_clock=False)
    return ReceiverFix(EcefVector.from_array(x), it, ok, ranges, trace)
