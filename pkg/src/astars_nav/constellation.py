"""Sky sampling for the surface: which satellites each mode can serve.

Reflection serves satellites from a full circle of azimuths around the
surface; transmission passes signals only from a fan centred on the
boresight, on the far side from the indoor receiver. Draws are made as unit uniforms first and mapped to angles
per mode, so the same uniforms give matched constellations across modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .astars import Mode
from .constants import GPS_ORBIT_RADIUS
from .geo import EcefVector, SatelliteState, direction_from_angles, enu_basis, range_to_sphere

AZIMUTH_MODES = ("reflection", "transmission", "full")


@dataclass(frozen=True)
class SkySpec:
    elevation_min_deg: float = 15.0
    elevation_max_deg: float = 85.0
    arc_reflection_deg: float = 360.0
    arc_transmission_deg: float = 270.0
    orbit_radius: float = GPS_ORBIT_RADIUS

    def __post_init__(self):
        if not 0.0 <= self.elevation_min_deg < self.elevation_max_deg <= 90.0:
            raise ValueError("elevation range must satisfy 0 <= min < max <= 90 degrees")
        for a in (self.arc_reflection_deg, self.arc_transmission_deg):
            if not 0.0 < a <= 360.0:
                raise ValueError("azimuth arcs must lie in (0, 360] degrees")

    def arc(self, azimuth_mode: str) -> float:
        if azimuth_mode == "reflection":
            return self.arc_reflection_deg
        if azimuth_mode == "transmission":
            return self.arc_transmission_deg
        if azimuth_mode == "full":
            return 360.0
        raise ValueError(f"unknown azimuth mode {azimuth_mode!r}")


def azimuth_mode_for(mode) -> str:
    return "transmission" if Mode.parse(mode) is Mode.TRANSMISSION else "reflection"


def horizontal_azimuth(origin, vector) -> float:
    east, north, _ = enu_basis(origin)
    v = np.asarray(vector, dtype=float)
    return math.atan2(float(v @ east), float(v @ north)) % (2 * math.pi)


def draw_sky(count: int, rng) -> np.ndarray:
    """(count, 2) unit uniforms for elevation and azimuth."""
    return rng.uniform(0.0, 1.0, size=(count, 2))


def sky_angles(uniforms: np.ndarray, azimuth_mode: str, boresight_azimuth: float,
               spec: SkySpec) -> tuple[np.ndarray, np.ndarray]:
    """Map unit uniforms to (elevation, azimuth) radians for a mode."""
    lo, hi = math.radians(spec.elevation_min_deg), math.radians(spec.elevation_max_deg)
    el = lo + (hi - lo) * uniforms[:, 0]
    arc = math.radians(spec.arc(azimuth_mode))
    az = (boresight_azimuth + (uniforms[:, 1] - 0.5) * arc) % (2 * math.pi)
    return el, az


def place_satellites(origin, elevations, azimuths, spec: SkySpec, rng=None,
                     clock_std: float = 0.0, first_id: int = 1) -> list[SatelliteState]:
    out = []
    for k, (el, az) in enumerate(zip(elevations, azimuths)):
        d = direction_from_angles(origin, float(el), float(az))
        rho = range_to_sphere(origin, d, spec.orbit_radius)
        pos = np.asarray(EcefVector.from_array(origin).as_array() if isinstance(origin, EcefVector)
                         else origin, dtype=float) + rho * d
        bias = float(rng.normal(0.0, clock_std)) if (rng is not None and clock_std > 0) else 0.0
        out.append(SatelliteState(first_id + k, EcefVector.from_array(pos), bias))
    return out


def sample_constellation(origin, count: int, rng, azimuth_mode: str, boresight_azimuth: float,
                         spec: SkySpec = SkySpec()) -> list[SatelliteState]:
    """Draw `count` satellites visible to the surface under `azimuth_mode`."""
    if count < 1:
        raise ValueError("count must be >= 1")
    el, az = sky_angles(draw_sky(count, rng), azimuth_mode, boresight_azimuth, spec)
    return place_satellites(origin, el, az, spec)
