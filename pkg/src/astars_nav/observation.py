"""Carrier-phase observation synthesis with separable error terms.

Every synthesized observation keeps the additive terms it was built from
(metres, keyed by name), so any single error source can be inspected or
removed. The observation value is the correctly rounded sum of its terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .astars import AstarsArray
from .constants import SPEED_OF_LIGHT
from .geo import SatelliteState, as_array, distance

DIRECT = "direct"
ELOS = "elos"

# sign with which each compensable quantity enters the observation, per path
_TERM_SIGNS = {
    DIRECT: {"sat_clock": +1.0, "ambiguity": -1.0, "iono": -1.0, "tropo": -1.0},
    ELOS: {"ambiguity": +1.0},
}


class MissingCorrectionError(KeyError):
    pass


@dataclass(frozen=True)
class CarrierPhaseObs:
    sat_id: int
    value_m: float
    wavelength: float
    epoch: float = 0.0
    path: str = DIRECT
    terms: Mapping[str, float] = field(default_factory=dict)
    compensated: frozenset = frozenset()

    def __post_init__(self):
        if not self.wavelength > 0:
            raise ValueError("wavelength must be positive")
        if not math.isfinite(self.value_m):
            raise ValueError("observation must be finite")
        object.__setattr__(self, "terms", MappingProxyType(dict(self.terms)))

    @property
    def phase(self) -> float:
        """Observation in carrier cycles."""
        return self.value_m / self.wavelength

    def reconstruct(self) -> float:
        return math.fsum(self.terms.values())


@dataclass(frozen=True)
class ObsErrorConfig:
    """Error sources of one observation batch.

    Ambiguities are integer cycles keyed by satellite id; iono/tropo
    residuals are metres, either one value for all satellites or a mapping.
    """

    meas_noise_std: float = 0.003
    multipath_std: float = 0.01
    iono_residual: float | Mapping[int, float] = 0.0
    tropo_residual: float | Mapping[int, float] = 0.0
    ambiguities: Mapping[int, int] = field(default_factory=dict)
    quantization_step: float = 0.0
    astars_error: float = 0.0

    def __post_init__(self):
        if self.meas_noise_std < 0 or self.multipath_std < 0 or self.quantization_step < 0:
            raise ValueError("standard deviations and steps must be >= 0")
        for k, v in self.ambiguities.items():
            if int(v) != v:
                raise ValueError(f"ambiguity for satellite {k} is not an integer")

    @property
    def noise_std(self) -> float:
        return math.hypot(self.meas_noise_std, self.multipath_std)

    def per_sat(self, name: str, sat_id: int) -> float:
        v = getattr(self, name)
        if isinstance(v, Mapping):
            return float(v.get(sat_id, 0.0))
        return float(v)


@dataclass(frozen=True)
class ClockModel:
    receiver_bias: float = 0.0
    sat_biases: Mapping[int, float] = field(default_factory=dict)
    elos_time: float = 0.0

    def __post_init__(self):
        if self.elos_time < 0:
            raise ValueError("elos_time must be >= 0")

    def sat_bias(self, sat: SatelliteState) -> float:
        return float(self.sat_biases.get(sat.id, sat.clock_bias))


@dataclass(frozen=True)
class TimeSyncModel:
    """Network time synchronisation: delay variation bound, measurement std, rate."""

    max_delay_variation: float = 10e-9
    meas_std: float = 1e-4
    meas_rate: float = 500.0

    def __post_init__(self):
        if not self.meas_rate > 0:
            raise ValueError("meas_rate must be positive")
        if self.meas_std < 0:
            raise ValueError("meas_std must be >= 0")


@dataclass(frozen=True)
class InjectedErrors:
    noise_m: float
    quantization_rad: float
    aoa_rad: float


def _noise(err: ObsErrorConfig, rng) -> float:
    s = err.noise_std
    return float(rng.normal(0.0, s)) if s > 0 else 0.0


def _build(sat_id, terms, wavelength, epoch, path) -> CarrierPhaseObs:
    return CarrierPhaseObs(sat_id=sat_id, value_m=math.fsum(terms.values()),
                           wavelength=wavelength, epoch=epoch, path=path, terms=terms)


def synthesize_direct_obs(sat: SatelliteState, receiver, clocks: ClockModel,
                          err: ObsErrorConfig, rng, wavelength: float, epoch: float = 0.0,
                          noise: float | None = None) -> CarrierPhaseObs:
    """Line-of-sight carrier phase between a satellite and a receiver.

    ``phi*lambda = r - c T_u + c T^i - N lambda - V_ion - V_trop + eps``.
    Pass `noise` to inject a pre-drawn ``eps`` instead of sampling it.
    """
    N = int(err.ambiguities.get(sat.id, 0))
    terms = {
        "geometry": distance(sat.position, receiver),
        "receiver_clock": -SPEED_OF_LIGHT * clocks.receiver_bias,
        "sat_clock": SPEED_OF_LIGHT * clocks.sat_bias(sat),
        "ambiguity": -N * wavelength,
        "iono": -err.per_sat("iono_residual", sat.id),
        "tropo": -err.per_sat("tropo_residual", sat.id),
        "noise": _noise(err, rng) if noise is None else float(noise),
    }
    return _build(sat.id, terms, wavelength, epoch, DIRECT)


def synthesize_elos_obs(sat: SatelliteState, astars: AstarsArray, clocks: ClockModel,
                        err: ObsErrorConfig, omega: float, rng, wavelength: float,
                        epoch: float = 0.0, noise: float | None = None) -> CarrierPhaseObs:
    """Carrier phase received over the surface-assisted path.

    ``phi*lambda = r_iRs - c (T_u - T_R) + N lambda + eps + omega`` with
    ``r_iRs`` the satellite-to-centroid distance.
    """
    N = int(err.ambiguities.get(sat.id, 0))
    terms = {
        "geometry": distance(sat.position, astars.centroid),
        "clock": -SPEED_OF_LIGHT * (clocks.receiver_bias - clocks.elos_time),
        "ambiguity": N * wavelength,
        "noise": _noise(err, rng) if noise is None else float(noise),
        "astars": float(omega),
    }
    return _build(sat.id, terms, wavelength, epoch, ELOS)


def synthesize_code_obs(sat: SatelliteState, receiver, clock_m: float, std: float, rng,
                        extra_m: float = 0.0) -> float:
    """Pseudorange in metres: geometry + clock term + extra path + noise."""
    noise = float(rng.normal(0.0, std)) if std > 0 else 0.0
    return math.fsum([distance(sat.position, receiver), clock_m, extra_m, noise])


def compensate_obs(obs: CarrierPhaseObs, corrections: Mapping[str, Mapping[int, float]]) -> CarrierPhaseObs:
    """Remove modelled terms from an observation.

    Parameters
    ----------
    obs : CarrierPhaseObs
    corrections : mapping
        Keys among ``sat_clock`` (seconds), ``ambiguity`` (cycles), ``iono``
        and ``tropo`` (metres); each maps satellite id to the value.

    Raises
    ------
    MissingCorrectionError
        If a listed correction has no entry for the observation's satellite.
    ValueError
        If a term is compensated twice, or is not part of the path model.
    """
    signs = _TERM_SIGNS[obs.path]
    terms = dict(obs.terms)
    removed = []
    for name, table in corrections.items():
        if name not in signs:
            raise ValueError(f"{name!r} is not modelled on the {obs.path} path")
        if name in obs.compensated:
            raise ValueError(f"{name!r} already compensated for satellite {obs.sat_id}")
        if obs.sat_id not in table:
            raise MissingCorrectionError(f"no {name} correction for satellite {obs.sat_id}")
        v = float(table[obs.sat_id])
        if name == "sat_clock":
            amount = signs[name] * SPEED_OF_LIGHT * v
        elif name == "ambiguity":
            amount = signs[name] * v * obs.wavelength
        else:
            amount = signs[name] * v
        removed.append(amount)
        left = terms.get(name, 0.0) - amount
        if left == 0.0:
            terms.pop(name, None)
        else:
            terms[name] = left
    if obs.terms:
        value = math.fsum(terms.values())
    else:
        value = math.fsum([obs.value_m, *(-a for a in removed)])
    return replace(obs, value_m=value, terms=terms,
                   compensated=obs.compensated | frozenset(corrections))


def timesync_gamma(model: TimeSyncModel) -> float:
    """Synchronisation error bound ``Max(delta) + upsilon^2 / f``, seconds."""
    return model.max_delay_variation + model.meas_std ** 2 / model.meas_rate


def inject_errors(truth, err: ObsErrorConfig, rng, aoa_std: float | Mapping[int, float] = 0.0):
    """Draw the per-satellite error record.

    Parameters
    ----------
    truth : iterable of int or SatelliteState
        Satellites to draw for.
    err : ObsErrorConfig
    rng : numpy Generator
    aoa_std : float or mapping
        AoA estimate standard deviation (radians), global or per satellite.

    Returns
    -------
    dict
        Satellite id -> :class:`InjectedErrors`.
    """
    out = {}
    step = err.quantization_step
    for t in truth:
        sid = t.id if isinstance(t, SatelliteState) else int(t)
        s = float(aoa_std.get(sid, 0.0)) if isinstance(aoa_std, Mapping) else float(aoa_std)
        out[sid] = InjectedErrors(
            noise_m=_noise(err, rng),
            quantization_rad=float(rng.uniform(-step / 2, step / 2)) if step > 0 else 0.0,
            aoa_rad=float(rng.normal(0.0, s)) if s > 0 else 0.0,
        )
    return out
