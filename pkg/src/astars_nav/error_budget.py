"""Error budget of the surface-assisted fix.

DoP is taken from ``Q = (G^T G)^-1`` with unit line-of-sight rows and a
trailing clock column; its position block is rotated into the local ENU
frame before the horizontal and vertical parts are read off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .astars import AstarsArray, PhaseShiftModel, beam_uncertainty, wrapped_phase
from .constants import SPEED_OF_LIGHT
from .constellation import SkySpec, draw_sky, place_satellites, sky_angles
from .geo import as_array, enu_rotation, positions_array
from .observation import TimeSyncModel, timesync_gamma
from .solver import SingularGeometryError


@dataclass(frozen=True)
class DopReport:
    q_matrix: np.ndarray = field(repr=False)
    pdop: float
    hdop: float
    vdop: float

    def __post_init__(self):
        if not (self.pdop > 0 and self.hdop > 0 and self.vdop > 0):
            raise ValueError("DoP values must be positive")


@dataclass(frozen=True)
class ErrorBudgetReport:
    phase_shift_m: float
    beamwidth_m: float
    timesync_m: float
    dop_scaled_m: float
    total_m: float
    meas_sigma: float

    def as_row(self) -> dict:
        return {
            "phase_shift_m": self.phase_shift_m,
            "beamwidth_m": self.beamwidth_m,
            "timesync_m": self.timesync_m,
            "dop_scaled_m": self.dop_scaled_m,
            "total_m": self.total_m,
            "meas_sigma_m": self.meas_sigma,
        }


@dataclass(frozen=True)
class QuantizationModel:
    step: float

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("quantization step must be positive")

    @property
    def variance(self) -> float:
        return self.step ** 2 / 12.0

    def sample(self, rng, size=None):
        return rng.uniform(-self.step / 2, self.step / 2, size=size)


def geometry_matrix(sats, receiver) -> np.ndarray:
    S = positions_array(sats)
    d = S - as_array(receiver)
    los = d / np.linalg.norm(d, axis=1)[:, None]
    return np.hstack([los, np.ones((len(S), 1))])


def _q_inverse(G: np.ndarray) -> np.ndarray:
    return np.linalg.inv(G.T @ G)


def _q_qr(G: np.ndarray) -> np.ndarray:
    R = np.linalg.qr(G, mode="r")
    Rinv = np.linalg.inv(R)
    return Rinv @ Rinv.T


def dop_report(sats, receiver, method: str = "inverse", max_condition: float = 1e12) -> DopReport:
    """PDoP/HDoP/VDoP at `receiver`.

    Parameters
    ----------
    sats : sequence of SatelliteState or (n, 3) array
    receiver : EcefVector or array_like
    method : {"inverse", "qr"}
        Direct normal-matrix inverse or a QR factorisation of G.

    Raises
    ------
    SingularGeometryError
        Fewer than four satellites or a rank-deficient G.
    """
    G = geometry_matrix(sats, receiver)
    if G.shape[0] < 4:
        raise SingularGeometryError(f"need at least 4 satellites, got {G.shape[0]}")
    sv = np.linalg.svd(G, compute_uv=False)
    if sv[-1] <= 0 or (sv[0] / sv[-1]) ** 2 > max_condition:
        raise SingularGeometryError("observation matrix is rank deficient")
    if method == "inverse":
        Q = _q_inverse(G)
    elif method == "qr":
        Q = _q_qr(G)
    else:
        raise ValueError(f"unknown method {method!r}")
    R = enu_rotation(receiver)
    Qe = R @ Q[:3, :3] @ R.T
    h2 = Qe[0, 0] + Qe[1, 1]
    v2 = Qe[2, 2]
    return DopReport(q_matrix=Q, pdop=math.sqrt(h2 + v2), hdop=math.sqrt(h2), vdop=math.sqrt(v2))


def sigma_scaled(dop: DopReport, sigma: float):
    """``(PDoP, HDoP, VDoP) * sigma``."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    return dop.pdop * sigma, dop.hdop * sigma, dop.vdop * sigma


def total_error_omega(phase: PhaseShiftModel, beam, sync: TimeSyncModel, dop: DopReport | None,
                      sigma: float, literal: bool = False, beam_term: str = "delta_p") -> ErrorBudgetReport:
    """Sum of the four error terms of the surface-assisted range.

    Parameters
    ----------
    phase : PhaseShiftModel
        Its mean phase (noise excluded) sets the phase-shift term.
    beam : tuple
        ``(r_Ru, array, wavelength)``.
    sync : TimeSyncModel
    dop : DopReport or None
        None drops the geometry term (no constellation given).
    sigma : float
        Measurement standard deviation, metres.
    literal : bool
        Multiply by PDoP twice, as a literal reading of the combined
        formula would; the default applies it once.
    beam_term : {"delta_p", "expected"}
        Full lateral uncertainty or its mean.
    """
    r_Ru, array, wavelength = beam
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    phase_m = float(wrapped_phase(phase)) * wavelength / (2 * math.pi)
    dp, expected = beam_uncertainty(r_Ru, array, wavelength)
    if beam_term == "delta_p":
        beam_m = dp
    elif beam_term == "expected":
        beam_m = expected
    else:
        raise ValueError(f"unknown beam term {beam_term!r}")
    sync_m = SPEED_OF_LIGHT * timesync_gamma(sync)
    if dop is None:
        dop_m = 0.0
    else:
        sigma_position = sigma_scaled(dop, sigma)[0]
        dop_m = sigma_position * dop.pdop if literal else sigma_position
    total = phase_m + beam_m + sync_m + dop_m
    return ErrorBudgetReport(phase_m, beam_m, sync_m, dop_m, total, float(sigma))


@dataclass(frozen=True)
class DopSummary:
    mode: str
    hdop: np.ndarray = field(repr=False)
    vdop: np.ndarray = field(repr=False)
    pdop: np.ndarray = field(repr=False)

    @property
    def mean_hdop(self) -> float:
        return float(np.mean(self.hdop))

    @property
    def mean_vdop(self) -> float:
        return float(np.mean(self.vdop))

    @property
    def mean_pdop(self) -> float:
        return float(np.mean(self.pdop))


def dop_scenario_compare(trials: int, rng, origin, boresight_azimuth: float, count: int = 12,
                         spec: SkySpec = SkySpec(), modes=("transmission", "reflection")) -> dict:
    """Mean DoP per azimuth mode over matched random constellations.

    Each trial draws one set of unit uniforms and maps it through every
    mode, so the modes differ only in where the satellites may appear.
    Trials whose geometry is singular are skipped.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    vals = {m: [] for m in modes}
    for _ in range(trials):
        uni = draw_sky(count, rng)
        for m in modes:
            el, az = sky_angles(uni, m, boresight_azimuth, spec)
            sats = place_satellites(origin, el, az, spec)
            try:
                d = dop_report(sats, origin)
            except SingularGeometryError:
                continue
            vals[m].append((d.hdop, d.vdop, d.pdop))
    out = {}
    for m, v in vals.items():
        a = np.array(v, dtype=float).reshape(-1, 3)
        out[m] = DopSummary(m, a[:, 0], a[:, 1], a[:, 2])
    return out
