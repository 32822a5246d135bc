"""Cartesian frame helpers: distances, local ENU basis and look angles.

The local frame is spherical-Earth ENU: "up" is the geocentric radial
direction at the origin. At the scale of the simulated errors the
difference to a geodetic frame does not matter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import EARTH_SURFACE_MIN


class DegenerateFrameError(ValueError):
    """Raised when a local frame or angle is undefined."""


@dataclass(frozen=True)
class EcefVector:
    """Position in metres in an Earth-centred, Earth-fixed frame."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise ValueError(f"non-finite EcefVector {self.x, self.y, self.z}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @classmethod
    def from_array(cls, arr) -> "EcefVector":
        x, y, z = (float(v) for v in np.asarray(arr, dtype=float).reshape(3))
        return cls(x, y, z)

    def __add__(self, other):
        return EcefVector.from_array(self.as_array() + as_array(other))

    def __sub__(self, other):
        return EcefVector.from_array(self.as_array() - as_array(other))


@dataclass(frozen=True)
class SatelliteState:
    """Satellite id, position and clock bias (seconds)."""

    id: int
    position: EcefVector
    clock_bias: float = 0.0

    def __post_init__(self):
        if np.linalg.norm(self.position.as_array()) <= EARTH_SURFACE_MIN:
            raise ValueError(f"satellite {self.id} is below the Earth surface")


@dataclass(frozen=True)
class LocalAngles:
    """Elevation in [0, pi/2] and azimuth in [0, 2 pi), radians."""

    elevation: float
    azimuth: float


def as_array(v) -> np.ndarray:
    """Return a float array of shape (3,) for an EcefVector or array-like."""
    if isinstance(v, EcefVector):
        return v.as_array()
    if isinstance(v, SatelliteState):
        return v.position.as_array()
    return np.asarray(v, dtype=float).reshape(3)


def positions_array(sats) -> np.ndarray:
    """Stack satellite positions into an (n, 3) array."""
    if isinstance(sats, np.ndarray):
        return np.asarray(sats, dtype=float).reshape(-1, 3)
    return np.array([as_array(s) for s in sats], dtype=float).reshape(-1, 3)


def distance(a, b) -> float:
    """Euclidean distance between two points in metres."""
    return float(np.linalg.norm(as_array(a) - as_array(b)))


def enu_basis(origin) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Local east, north and up unit vectors at `origin`.

    Parameters
    ----------
    origin : EcefVector or array_like
        Point at which the frame is attached. Must not be the Earth centre.

    Returns
    -------
    east, north, up : ndarray
        Right-handed orthonormal triple, each of shape (3,).
    """
    o = as_array(origin)
    r = np.linalg.norm(o)
    if r == 0.0:
        raise DegenerateFrameError("local frame undefined at the coordinate origin")
    lat = math.asin(o[2] / r)
    lon = math.atan2(o[1], o[0])
    sl, cl = math.sin(lat), math.cos(lat)
    so, co = math.sin(lon), math.cos(lon)
    east = np.array([-so, co, 0.0])
    north = np.array([-sl * co, -sl * so, cl])
    up = np.array([cl * co, cl * so, sl])
    return east, north, up


def enu_rotation(origin) -> np.ndarray:
    """3x3 matrix whose rows are east, north, up at `origin`."""
    return np.vstack(enu_basis(origin))


def elevation_azimuth(target, origin) -> LocalAngles:
    """Look angles of `target` seen from `origin`.

    Azimuth is clockwise from local north. A target at the zenith
    returns azimuth 0 by convention.
    """
    d = as_array(target) - as_array(origin)
    rng = np.linalg.norm(d)
    if rng == 0.0:
        raise DegenerateFrameError("look angles undefined for coincident points")
    east, north, up = enu_basis(origin)
    de, dn, du = d @ east, d @ north, d @ up
    horiz = math.hypot(de, dn)
    el = math.atan2(du, horiz)
    if horiz <= 1e-15 * rng:
        az = 0.0
    else:
        az = math.atan2(de, dn) % (2.0 * math.pi)
    # azimuth within [0, 2pi) also after the modulo rounding edge
    if az >= 2.0 * math.pi:
        az = 0.0
    return LocalAngles(elevation=el, azimuth=az)


def direction_from_angles(origin, elevation: float, azimuth: float) -> np.ndarray:
    """Unit vector pointing at (elevation, azimuth) in the local frame at `origin`."""
    east, north, up = enu_basis(origin)
    ce = math.cos(elevation)
    return ce * math.sin(azimuth) * east + ce * math.cos(azimuth) * north + math.sin(elevation) * up


def place_target(origin, elevation: float, azimuth: float, range_m: float) -> np.ndarray:
    """Point at the given look angles and range from `origin`."""
    return as_array(origin) + range_m * direction_from_angles(origin, elevation, azimuth)


def range_to_sphere(origin, direction, radius: float) -> float:
    """Distance along `direction` from `origin` to the sphere of `radius`.

    Used to put a satellite at orbital radius along a sampled line of sight.
    """
    o = as_array(origin)
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    b = float(o @ d)
    disc = b * b - (float(o @ o) - radius * radius)
    if disc < 0.0:
        raise ValueError("line of sight does not reach the requested radius")
    return -b + math.sqrt(disc)
