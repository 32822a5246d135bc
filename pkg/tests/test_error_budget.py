"""DoP, quantisation and the combined error budget."""
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from astars_nav.astars import AstarsArray, PhaseShiftModel
from astars_nav.constellation import SkySpec, sample_constellation
from astars_nav.error_budget import (DopReport, QuantizationModel, dop_report, dop_scenario_compare,
                                     geometry_matrix, sigma_scaled, total_error_omega)
from astars_nav.geo import enu_basis
from astars_nav.observation import TimeSyncModel
from astars_nav.solver import SingularGeometryError

C = np.array([-2604348.533, 4743312.217, 3364998.513])


def _regular_sky():
    # four satellites: zenith plus three at 0 deg elevation, 120 deg apart
    e, n, u = enu_basis(C)
    dirs = [u] + [math.cos(a) * n + math.sin(a) * e for a in (0, 2 * math.pi / 3, 4 * math.pi / 3)]
    return np.array([C + 2e7 * d for d in dirs])


def test_regular_geometry_values():
    d = dop_report(_regular_sky(), C)
    # closed form for this layout: HDoP^2 = VDoP^2 = 4/3
    G = geometry_matrix(_regular_sky(), C)
    Q = np.linalg.inv(G.T @ G)
    assert d.pdop == pytest.approx(math.sqrt(np.trace(Q[:3, :3])), rel=1e-9)
    assert d.hdop == pytest.approx(math.sqrt(4 / 3), rel=1e-9)
    assert d.vdop == pytest.approx(math.sqrt(4 / 3), rel=1e-9)


def test_too_few_or_degenerate():
    S = _regular_sky()
    with pytest.raises(SingularGeometryError):
        dop_report(S[:3], C)
    with pytest.raises(SingularGeometryError):
        dop_report(np.array([S[0]] * 5), C)
    with pytest.raises(ValueError):
        dop_report(S, C, method="svd")


def test_dop_report_positive():
    with pytest.raises(ValueError):
        DopReport(np.eye(4), 0.0, 0.0, 0.0)


@given(st.integers(0, 2 ** 32 - 1), st.integers(4, 14))
def test_dop_identity_and_methods(seed, n):
    rng = np.random.default_rng(seed)
    sats = sample_constellation(C, n, rng, "full", 0.0)
    try:
        a = dop_report(sats, C)
    except SingularGeometryError:
        return
    b = dop_report(sats, C, method="qr")
    assert abs(a.pdop ** 2 - (a.hdop ** 2 + a.vdop ** 2)) <= 1e-9 * a.pdop ** 2
    assert b.pdop == pytest.approx(a.pdop, rel=1e-6)
    assert a.hdop > 0 and a.vdop > 0


def test_dop_improves_with_more_satellites():
    rng = np.random.default_rng(4)
    few, many = [], []
    for _ in range(200):
        sats = sample_constellation(C, 12, rng, "full", 0.0)
        many.append(dop_report(sats, C).pdop)
        try:
            few.append(dop_report(sats[:5], C).pdop)
        except SingularGeometryError:
            pass
    assert np.median(many) < np.median(few)


def test_sigma_scaled():
    d = DopReport(np.eye(4), 2.0, 1.5, 1.0)
    assert sigma_scaled(d, 0.5) == (1.0, 0.75, 0.5)
    with pytest.raises(ValueError):
        sigma_scaled(d, -1.0)


def test_quantization_variance(rng):
    q = QuantizationModel(math.pi / 128)
    x = q.sample(rng, 200_000)
    assert x.var() == pytest.approx(q.variance, rel=0.02)
    with pytest.raises(ValueError):
        QuantizationModel(0.0)


def test_total_error_terms():
    phase = PhaseShiftModel(0.6, 0.4, 0.3)
    arr = AstarsArray(elements_per_row=40, element_spacing=0.125)
    lam = 0.1903
    d = DopReport(np.eye(4), 2.0, 1.5, 1.0)
    rep = total_error_omega(phase, (55.9017, arr, lam), TimeSyncModel(), d, 0.1)
    assert rep.phase_shift_m == pytest.approx(1.0 * lam / (2 * math.pi), rel=1e-12)
    assert rep.beamwidth_m == pytest.approx(55.9017 * math.tan(lam / 5.0), rel=1e-12)
    assert rep.timesync_m == pytest.approx(299792458.0 * 1.002e-8, rel=1e-12)
    assert rep.dop_scaled_m == pytest.approx(0.2)
    assert rep.total_m == pytest.approx(rep.phase_shift_m + rep.beamwidth_m + rep.timesync_m + 0.2)
    lit = total_error_omega(phase, (55.9017, arr, lam), TimeSyncModel(), d, 0.1, literal=True)
    assert lit.dop_scaled_m == pytest.approx(0.4)
    ex = total_error_omega(phase, (55.9017, arr, lam), TimeSyncModel(), None, 0.1, beam_term="expected")
    assert ex.beamwidth_m == pytest.approx(rep.beamwidth_m / 2)
    assert ex.dop_scaled_m == 0.0
    assert set(rep.as_row()) >= {"total_m", "phase_shift_m"}


def test_scenario_compare_shapes(rng):
    res = dop_scenario_compare(20, rng, C, 0.3, 8, SkySpec())
    assert set(res) == {"transmission", "reflection"}
    for s in res.values():
        assert len(s.hdop) == 20
        np.testing.assert_allclose(s.pdop ** 2, s.hdop ** 2 + s.vdop ** 2, rtol=1e-9)
    with pytest.raises(ValueError):
        dop_scenario_compare(0, rng, C, 0.0)
