"""Concrete scenes drawn from a ScenarioConfig.

The surface normal is horizontal and points from the transmission side
(receivers served in mode E) to the reflection side (mode R). Every
receiver shares one set of sky uniforms per trial; each mode maps them to
its own azimuth sector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .astars import AstarsArray, Mode, incidence_angles
from .channel import LinkBudget
from .config import ConfigError, ScenarioConfig
from .constants import SPEED_OF_LIGHT
from .constellation import SkySpec, azimuth_mode_for, draw_sky, horizontal_azimuth, place_satellites, sky_angles
from .error_budget import dop_report
from .geo import EcefVector, SatelliteState, enu_basis, positions_array
from .observation import TimeSyncModel, timesync_gamma
from .solver import SingularGeometryError


@dataclass(frozen=True)
class SceneGeometry:
    centroid: np.ndarray
    normal: np.ndarray
    boresight_azimuth: float
    array: AstarsArray
    sky: SkySpec


@dataclass(frozen=True)
class ReceiverScene:
    name: str
    mode: Mode
    position: np.ndarray
    sats: tuple
    sat_positions: np.ndarray = field(repr=False)
    r_Ru: float
    aoa: np.ndarray = field(repr=False)
    aod: np.ndarray = field(repr=False)
    pdop: float = math.inf

    @property
    def elos_time(self) -> float:
        return self.r_Ru / SPEED_OF_LIGHT


@dataclass(frozen=True)
class Scene:
    gamma: float
    initial_point: np.ndarray
    receivers: tuple


def _horizontal(v: np.ndarray, up: np.ndarray) -> np.ndarray:
    return v - (v @ up) * up


def scene_geometry(cfg: ScenarioConfig) -> SceneGeometry:
    """Surface placement, normal and sky model for a config."""
    C = np.asarray(cfg.astars.centroid, dtype=float)
    _, _, up = enu_basis(C)
    refl = [np.asarray(r.position, float) for r in cfg.receivers if Mode.parse(r.mode) is Mode.REFLECTION]
    trans = [np.asarray(r.position, float) for r in cfg.receivers if Mode.parse(r.mode) is Mode.TRANSMISSION]
    front = np.mean(refl, axis=0) if refl else C
    back = np.mean(trans, axis=0) if trans else C
    n = _horizontal(front - back, up)
    if np.linalg.norm(n) < 1e-9:
        raise ConfigError("receivers do not fix a horizontal surface normal")
    n = n / np.linalg.norm(n)
    a = cfg.astars
    array = AstarsArray(elements_per_row=a.elements_per_row, rows=a.rows,
                        element_spacing=a.element_spacing, amplification=a.amplification,
                        centroid=EcefVector(*C), boresight=tuple(n))
    c = cfg.constellation
    sky = SkySpec(c.elevation_min_deg, c.elevation_max_deg, c.arc_reflection_deg,
                  c.arc_transmission_deg, c.orbit_radius)
    return SceneGeometry(C, n, horizontal_azimuth(C, n), array, sky)


def link_budget(cfg: ScenarioConfig) -> LinkBudget:
    k = cfg.link
    return LinkBudget(k.tx_power, k.pathloss_exp_sat, k.pathloss_exp_rx, k.noise_power,
                      k.rician_k, cfg.astars.wavelength)


def timesync_model(cfg: ScenarioConfig) -> TimeSyncModel:
    t = cfg.timesync
    return TimeSyncModel(t.max_delay_variation, t.meas_std, t.meas_rate)


def _pdop(S: np.ndarray, C: np.ndarray) -> float:
    try:
        return dop_report(S, C).pdop
    except SingularGeometryError:
        return math.inf


def generate_scenario(cfg: ScenarioConfig, rng, geometry: SceneGeometry | None = None) -> Scene:
    """Draw satellites, the synchronisation error and the stage-1 seed.

    The sky is drawn from its own stream keyed off `rng`, so scenes with
    more satellites extend, rather than reshuffle, those with fewer.
    """
    g = geometry or scene_geometry(cfg)
    N = cfg.constellation.count
    sky_rng = np.random.default_rng(int(rng.integers(0, 2 ** 63)))
    uni = draw_sky(N, sky_rng)
    sign = {"positive": 1.0, "negative": -1.0}.get(cfg.clocks.gamma_sign)
    flip = rng.uniform()
    if sign is None:
        sign = 1.0 if flip < 0.5 else -1.0
    gamma = sign * timesync_gamma(timesync_model(cfg))
    off = rng.normal(size=3)
    nrm = np.linalg.norm(off)
    x0 = g.centroid + (cfg.solver.initial_offset_m * off / nrm if nrm > 0 else 0.0)
    clock_std = cfg.clocks.sat_clock_std
    clocks = rng.normal(0.0, clock_std, N) if clock_std > 0 else np.zeros(N)

    receivers = []
    for r in cfg.receivers:
        mode = Mode.parse(r.mode)
        el, az = sky_angles(uni, azimuth_mode_for(mode), g.boresight_azimuth, g.sky)
        sats = place_satellites(g.centroid, el, az, g.sky)
        sats = tuple(SatelliteState(s.id, s.position, float(clocks[k])) for k, s in enumerate(sats))
        S = positions_array(sats)
        R = np.asarray(r.position, dtype=float)
        to_rx = R - g.centroid
        aoa = np.empty(N)
        aod = np.empty(N)
        for k in range(N):
            aoa[k], aod[k] = incidence_angles(mode, g.normal, S[k] - g.centroid, to_rx)
        receivers.append(ReceiverScene(r.name, mode, R, sats, S, float(np.linalg.norm(to_rx)),
                                       aoa, aod, _pdop(S, g.centroid)))
    return Scene(gamma=gamma, initial_point=x0, receivers=tuple(receivers))
