"""Transmit/reflect surface model: coefficients, beam and ELoS angle geometry."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .constants import ASTARS_POSITION
from .geo import EcefVector, as_array

TWO_PI = 2.0 * math.pi


class Mode(str, enum.Enum):
    TRANSMISSION = "E"
    REFLECTION = "R"

    @classmethod
    def parse(cls, value) -> "Mode":
        if isinstance(value, Mode):
            return value
        key = str(value).strip().lower()
        aliases = {"e": cls.TRANSMISSION, "transmission": cls.TRANSMISSION,
                   "r": cls.REFLECTION, "reflection": cls.REFLECTION}
        if key not in aliases:
            raise ValueError(f"unknown surface mode {value!r}")
        return aliases[key]


class EnergyConstraintError(ValueError):
    """An element's transmission plus reflection power exceeds the amplification."""


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class AstarsArray:
    """Planar array of `elements_per_row` x `rows` elements.

    `boresight` is the outward surface normal (unit vector). The array
    position used everywhere is its centroid.
    """

    elements_per_row: int = 40
    rows: int = 40
    element_spacing: float = 0.125
    amplification: float = 4.0
    centroid: EcefVector = field(default_factory=lambda: EcefVector(*ASTARS_POSITION))
    boresight: tuple[float, float, float] = (1.0, 0.0, 0.0)

    def __post_init__(self):
        if self.elements_per_row < 2:
            raise ValueError("elements_per_row must be >= 2")
        if self.rows < 1:
            raise ValueError("rows must be >= 1")
        if not self.element_spacing > 0:
            raise ValueError("element_spacing must be positive")
        if not self.amplification >= 1.0:
            raise ValueError("amplification factor must be >= 1")
        n = np.linalg.norm(self.boresight)
        if not n > 0:
            raise ValueError("boresight must be a nonzero vector")
        object.__setattr__(self, "boresight", tuple(float(v) / n for v in self.boresight))

    @property
    def element_count(self) -> int:
        return self.elements_per_row * self.rows

    @property
    def normal(self) -> np.ndarray:
        return np.array(self.boresight)


@dataclass(frozen=True)
class ElementCoefficient:
    mode: Mode
    amplitude_sq: float
    phase: float

    @property
    def complex(self) -> complex:
        return math.sqrt(self.amplitude_sq) * complex(math.cos(self.phase), math.sin(self.phase))


@dataclass(frozen=True)
class PhaseShiftModel:
    """Hardware, amplifier and noise phase contributions, radians."""

    hardware: float = 0.6
    amplifier: float = 0.4
    noise_std: float = 0.05

    def __post_init__(self):
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")


@dataclass(frozen=True)
class ElosGeometry:
    mode: Mode
    aoa: float
    aod: float
    alpha: float
    chi: float


def element_coefficient(array: AstarsArray, beta_E: float, beta_R: float,
                        phase_E: float, phase_R: float, index: int | None = None):
    """Build the transmission and reflection coefficients of one element.

    Raises
    ------
    EnergyConstraintError
        If ``beta_E + beta_R`` exceeds the array amplification factor.
    """
    if beta_E < 0 or beta_R < 0:
        raise ValueError("amplitude coefficients must be non-negative")
    if beta_E + beta_R > array.amplification * (1.0 + 1e-12):
        name = "element" if index is None else f"element {index}"
        raise EnergyConstraintError(
            f"{name}: beta_E + beta_R = {beta_E + beta_R:g} exceeds H = {array.amplification:g}")
    return (ElementCoefficient(Mode.TRANSMISSION, float(beta_E), phase_E % TWO_PI),
            ElementCoefficient(Mode.REFLECTION, float(beta_R), phase_R % TWO_PI))


def uniform_coefficients(array: AstarsArray, mode, split: float = 0.5, phases=None):
    """Same power on every element, divided between modes by `split`.

    `split` is the fraction of ``H`` given to transmission. Returns the
    list of coefficients for the requested mode.
    """
    mode = Mode.parse(mode)
    if not 0.0 <= split <= 1.0:
        raise ValueError("split must lie in [0, 1]")
    K = array.element_count
    phases = np.zeros((K, 2)) if phases is None else np.broadcast_to(np.asarray(phases, float), (K, 2))
    beta_E = array.amplification * split
    beta_R = array.amplification * (1.0 - split)
    out = []
    for k in range(K):
        e, r = element_coefficient(array, beta_E, beta_R, phases[k, 0], phases[k, 1], index=k)
        out.append(e if mode is Mode.TRANSMISSION else r)
    return out


def beamwidth_theta(array: AstarsArray, wavelength: float) -> float:
    """Half-power beamwidth ``2 lambda / (e L)`` in radians."""
    if not wavelength > 0:
        raise ValueError("wavelength must be positive")
    return 2.0 * wavelength / (array.elements_per_row * array.element_spacing)


def beam_uncertainty(r_Ru, array: AstarsArray, wavelength: float):
    """Lateral position uncertainty inside the beam and its expectation.

    Parameters
    ----------
    r_Ru : float or ndarray
        ELoS distance from the surface to the receiver, metres.
    array : AstarsArray
    wavelength : float

    Returns
    -------
    delta_p, expected
        ``r_Ru * tan(lambda / (e L))`` and half of it (uniform position
        within the beam).
    """
    half = 0.5 * beamwidth_theta(array, wavelength)
    if half >= math.pi / 2:
        raise GeometryError("beam half-width reaches 90 degrees")
    r = np.asarray(r_Ru, dtype=float)
    if np.any(r < 0):
        raise ValueError("r_Ru must be >= 0")
    delta_p = r * math.tan(half)
    expected = delta_p / 2.0
    if delta_p.ndim == 0:
        return float(delta_p), float(expected)
    return delta_p, expected


def wrapped_phase(model: PhaseShiftModel, noise=0.0):
    return (model.hardware + model.amplifier + noise) % TWO_PI


def phase_shift_range_error(model: PhaseShiftModel, wavelength: float, rng, size=None):
    """Range error in metres from the surface phase shift.

    Whole cycles are left to the integer ambiguity, so the result lies in
    ``[0, wavelength)``.
    """
    if not wavelength > 0:
        raise ValueError("wavelength must be positive")
    noise = rng.normal(0.0, model.noise_std, size=size) if model.noise_std > 0 else (
        0.0 if size is None else np.zeros(size))
    err = wrapped_phase(model, noise) * wavelength / TWO_PI
    return float(err) if size is None else err


def elos_angle(mode, aoa: float, aod: float) -> ElosGeometry:
    """Vertex angle at the surface and its cosine from AoA/AoD."""
    mode = Mode.parse(mode)
    if mode is Mode.REFLECTION:
        alpha = aoa + aod
    else:
        alpha = math.pi - aoa + aod
    return ElosGeometry(mode, aoa, aod, alpha, math.cos(alpha))


def _signed_angle(ref: np.ndarray, v: np.ndarray, axis: np.ndarray) -> float:
    return math.atan2(float(axis @ np.cross(ref, v)), float(ref @ v))


def incidence_angles(mode, normal, to_sat, to_rx) -> tuple[float, float]:
    """AoA and AoD consistent with :func:`elos_angle` for a 3-D geometry.

    Both angles are measured in the plane holding the incoming direction
    (surface towards satellite) and the outgoing direction (surface towards
    receiver): AoA from the in-plane boresight, AoD from the boresight for
    reflection or from the back normal for transmission. With these
    conventions the vertex angle at the surface is reproduced exactly.
    """
    mode = Mode.parse(mode)
    s = np.asarray(to_sat, dtype=float)
    s = s / np.linalg.norm(s)
    u = np.asarray(to_rx, dtype=float)
    u = u / np.linalg.norm(u)
    n = np.asarray(normal, dtype=float)
    axis = np.cross(u, s)
    an = np.linalg.norm(axis)
    if an < 1e-14:
        # collinear rays: any plane containing them will do
        helper = np.array([1.0, 0.0, 0.0]) if abs(s[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        axis = np.cross(s, helper)
        an = np.linalg.norm(axis)
    axis = axis / an
    n_p = n - (n @ axis) * axis
    if np.linalg.norm(n_p) < 1e-12:
        n_p = s
    n_p = n_p / np.linalg.norm(n_p)
    aoa = _signed_angle(n_p, s, axis)
    if mode is Mode.REFLECTION:
        aod = -_signed_angle(n_p, u, axis)
    else:
        aod = _signed_angle(-n_p, u, axis)
    return aoa, aod


def vertex_cosine(centroid, sat_pos, rx_pos) -> float:
    """Cosine of the satellite-surface-receiver angle from positions."""
    c = as_array(centroid)
    a = as_array(sat_pos) - c
    b = as_array(rx_pos) - c
    return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))


def corrected_range(r_iRs, r_Ru, chi):
    """Satellite-to-receiver distance from the triangle through the surface.

    Cosine rule ``sqrt(r_iRs^2 + r_Ru^2 - 2 r_iRs r_Ru chi)``, written in a
    form that keeps precision when the two legs differ by orders of
    magnitude. Works element-wise on arrays.
    """
    a = np.asarray(r_iRs, dtype=float)
    b = np.asarray(r_Ru, dtype=float)
    x = np.asarray(chi, dtype=float)
    if np.any(a <= 0):
        raise ValueError("r_iRs must be positive")
    if np.any(b < 0):
        raise ValueError("r_Ru must be >= 0")
    if np.any(np.abs(x) > 1.0 + 1e-12) or np.any(~np.isfinite(x)):
        raise ValueError("chi must lie in [-1, 1]")
    x = np.clip(x, -1.0, 1.0)
    out = np.sqrt((a - b) ** 2 + 2.0 * a * b * (1.0 - x))
    return float(out) if out.ndim == 0 else out
