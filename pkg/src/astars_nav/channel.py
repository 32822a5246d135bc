"""Link model through the surface: fading draws, composite SNR, AoA error law."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import L1_WAVELENGTH


@dataclass(frozen=True)
class LinkBudget:
    """Scalar link parameters.

    Defaults give a per-element satellite-link SNR of roughly -17.6 dB at
    GPS range (received power near -128.5 dBm against kTB noise over
    2.046 MHz). `tx_power` is an effective figure with antenna gains folded
    in.
    """

    tx_power: float = 0.0575
    pathloss_exp_sat: float = 2.0
    pathloss_exp_rx: float = 2.0
    noise_power: float = 8.19e-15
    rician_k: float = 10.0
    carrier_wavelength: float = L1_WAVELENGTH

    def __post_init__(self):
        for name in ("tx_power", "noise_power", "rician_k", "carrier_wavelength"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("pathloss_exp_sat", "pathloss_exp_rx"):
            if not 1.5 <= getattr(self, name) <= 5.0:
                raise ValueError(f"{name} must lie in [1.5, 5]")


@dataclass(frozen=True)
class FadingDraw:
    sat_gains: np.ndarray
    rx_gains: np.ndarray


@dataclass(frozen=True)
class AoaErrorModel:
    snr_linear: float
    snapshots: int
    element_count: int

    def __post_init__(self):
        if not (self.snr_linear > 0 and self.snapshots > 0):
            raise ValueError("snr and snapshot count must be positive")
        if self.element_count < 2:
            raise ValueError("AoA error law needs at least two elements")


def _complex_normal(rng, size):
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / math.sqrt(2.0)


def draw_fading(array_size: int, budget: LinkBudget, rng) -> FadingDraw:
    """Rician satellite-side and Rayleigh receiver-side gains, unit mean power.

    An infinite K-factor yields a pure line-of-sight satellite link with
    unit-magnitude gains.
    """
    if array_size < 1:
        raise ValueError("array_size must be >= 1")
    K = budget.rician_k
    los = np.exp(1j * rng.uniform(0.0, 2.0 * math.pi, array_size))
    if math.isinf(K):
        sat = los
    else:
        sat = math.sqrt(K / (K + 1.0)) * los + math.sqrt(1.0 / (K + 1.0)) * _complex_normal(rng, array_size)
    rx = _complex_normal(rng, array_size)
    return FadingDraw(sat_gains=sat, rx_gains=rx)


def composite_gain_snr(draw: FadingDraw, coeffs, r_iRs: float, r_Ru: float,
                       budget: LinkBudget) -> float:
    """Linear SNR at the receiver for one satellite relayed by the surface.

    Parameters
    ----------
    draw : FadingDraw
    coeffs : sequence of ElementCoefficient, or complex ndarray
        Per-element coefficients ``sqrt(beta_k) exp(j theta_k)``.
    r_iRs, r_Ru : float
        Satellite-to-surface and surface-to-receiver distances, metres.
    budget : LinkBudget
    """
    if r_iRs <= 0 or r_Ru <= 0:
        raise ValueError("link distances must be positive")
    w = np.asarray([c.complex for c in coeffs] if not isinstance(coeffs, np.ndarray) else coeffs,
                   dtype=complex)
    if not (w.shape == draw.sat_gains.shape == draw.rx_gains.shape):
        raise ValueError("coefficient and gain vectors must have equal length")
    amp = np.sum(draw.rx_gains * w * draw.sat_gains)
    power = (abs(amp) ** 2 * r_iRs ** (-budget.pathloss_exp_sat)
             * r_Ru ** (-budget.pathloss_exp_rx) * budget.tx_power)
    return float(power / budget.noise_power)


def element_snr(budget: LinkBudget, r_iRs: float) -> float:
    """Mean per-element SNR of the satellite-to-surface link (unit fading power)."""
    return budget.tx_power * r_iRs ** (-budget.pathloss_exp_sat) / budget.noise_power


def aoa_error_std(model: AoaErrorModel) -> float:
    """Standard deviation of the MUSIC angle estimate, radians."""
    K = model.element_count
    return math.sqrt(6.0 / (model.snr_linear * model.snapshots * K * (K * K - 1)))
