"""Double differences, float solution and integer fixing."""
import numpy as np
import pytest
from hypothesis import given, strategies as st

from astars_nav.ambiguity import (AmbiguityRejectedError, DoubleDiffSet, FixedSolution, InsufficientObservationsError,
                                  brute_force_integers, decorrelate, fix_integers, fixed_baseline_and_recover,
                                  float_solve, form_double_differences, integer_search, select_reference)
from astars_nav.constants import L1_WAVELENGTH as LAM
from astars_nav.constellation import sample_constellation
from astars_nav.geo import EcefVector, positions_array
from astars_nav.observation import CarrierPhaseObs
from astars_nav.solver import SingularGeometryError

C = np.array([-2604348.533, 4743312.217, 3364998.513])
BASE = C + np.array([100.0, 50.0, -20.0])


def _spd(rng, n):
    A = rng.normal(size=(n, n))
    return A @ A.T + 0.05 * np.eye(n)


def make_instance(rng, nsat=8, phase_cyc=0.01, code_m=0.05, epochs=5):
    sats = sample_constellation(C, nsat, rng, "full", 0.0)
    NU = {s.id: int(rng.integers(-50, 50)) for s in sats}
    NB = {s.id: int(rng.integers(-50, 50)) for s in sats}
    rclk, bclk = 5.0, -7.0
    sets = []
    for ep in range(epochs):
        def n(std):
            return rng.normal(0, std) if std > 0 else 0.0
        ro = [CarrierPhaseObs(s.id, np.linalg.norm(s.position.as_array() - C) - NU[s.id] * LAM
                              + n(phase_cyc * LAM) + rclk, LAM, epoch=ep) for s in sats]
        bo = [CarrierPhaseObs(s.id, np.linalg.norm(s.position.as_array() - BASE) - NB[s.id] * LAM
                              + n(phase_cyc * LAM) + bclk, LAM, epoch=ep) for s in sats]
        rc = {s.id: np.linalg.norm(s.position.as_array() - C) + rclk + n(code_m) for s in sats}
        bc = {s.id: np.linalg.norm(s.position.as_array() - BASE) + bclk + n(code_m) for s in sats}
        sets.append(form_double_differences(ro, bo, sats, BASE, C + rng.normal(0, 2, 3), rover_code=rc,
                                            base_code=bc, phase_std=max(phase_cyc, 0.01),
                                            code_std=max(code_m, 0.05)))
    return sets, NU, NB


def dd_truth(NU, NB, ref, pairs):
    # direct-path integers enter with a minus sign
    return np.array([-(NU[k] - NU[ref] - NB[k] + NB[ref]) for k in pairs])


def test_reference_is_highest():
    up = C / np.linalg.norm(C)
    east = np.cross([0, 0, 1.0], up)
    east /= np.linalg.norm(east)
    pos = {1: C + 2e7 * (up + east), 2: C + 2e7 * up, 3: C + 2e7 * (0.2 * up + east)}
    assert select_reference(pos, C) == 2


def test_too_few_pairs(rng):
    sats = sample_constellation(C, 3, rng, "full", 0.0)
    obs = {s.id: 1.0 for s in sats}
    with pytest.raises(InsufficientObservationsError):
        form_double_differences(obs, obs, sats, BASE, wavelength=LAM)
    with pytest.raises(InsufficientObservationsError):
        DoubleDiffSet(1, {2: 0.0, 3: 0.0}, {}, LAM)


def test_mixed_wavelength_rejected(rng):
    sats = sample_constellation(C, 5, rng, "full", 0.0)
    ro = [CarrierPhaseObs(s.id, 1.0, LAM) for s in sats]
    bo = [CarrierPhaseObs(s.id, 1.0, 0.25) for s in sats]
    with pytest.raises(ValueError):
        form_double_differences(ro, bo, sats, BASE)


def test_phase_only_single_epoch_rank_deficient(rng):
    sets, NU, NB = make_instance(rng, epochs=1)
    d = sets[0]
    no_code = DoubleDiffSet(**{**d.__dict__, "dd_code": None})
    with pytest.raises(SingularGeometryError):
        float_solve(no_code)


def test_zero_noise_float_is_integer_and_baseline_exact(rng):
    sets, NU, NB = make_instance(rng, phase_cyc=0.0, code_m=0.0, epochs=1)
    f = float_solve(sets)
    truth = dd_truth(NU, NB, f.reference_sat, f.pairs)
    assert np.max(np.abs(f.ambiguities_float - truth)) < 1e-6
    np.testing.assert_allclose(f.baseline_float, C - BASE, atol=1e-6)


@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 6))
def test_decorrelation_is_unimodular(seed, n):
    rng = np.random.default_rng(seed)
    Q = _spd(rng, n)
    Z, L, d = decorrelate(Q)
    assert np.allclose(Z, np.round(Z))
    assert abs(abs(np.linalg.det(Z)) - 1.0) < 1e-9
    Qz = Z.T @ Q @ Z
    np.testing.assert_allclose(L.T @ np.diag(d) @ L, Qz, rtol=1e-9, atol=1e-9)
    assert np.all(d > 0)


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 5))
def test_search_matches_brute_force(seed, n):
    rng = np.random.default_rng(seed)
    Q = _spd(rng, n) * 0.1
    a = rng.normal(size=n) * 20
    ints, s = integer_search(a, Q, 2)
    best, q = brute_force_integers(a, Q, 3)
    assert s[0] <= s[1]
    assert s[0] == pytest.approx(q, rel=1e-9, abs=1e-12)
    r = ints[0] - a
    assert s[0] == pytest.approx(r @ np.linalg.solve(Q, r), rel=1e-9, abs=1e-12)
    if not np.array_equal(ints[0], best):
        # equal-distance ties are the only admissible disagreement
        rb = best - a
        assert q == pytest.approx(rb @ np.linalg.solve(Q, rb), rel=1e-9)


@pytest.mark.parametrize("a_hat", [np.array([3.0, -2.0, 7.0]), np.array([0.0, 0.0, 0.0])])
def test_exact_integer_float_gives_infinite_ratio(a_hat):
    Q = np.diag([0.01, 0.02, 0.03])
    ints, s = integer_search(a_hat, Q)
    np.testing.assert_array_equal(ints[0], a_hat)
    assert s[0] == pytest.approx(0.0, abs=1e-18)


def test_fix_recover_and_ratio(rng):
    sets, NU, NB = make_instance(rng)
    f = float_solve(sets)
    fx = fix_integers(f)
    ref = f.reference_sat
    np.testing.assert_array_equal(fx.integers, dd_truth(NU, NB, ref, f.pairs))
    assert fx.accepted and fx.ratio >= 3.0
    b, rec = fixed_baseline_and_recover(f, fx, NB, NU[ref] - NB[ref])
    assert rec == NU
    assert np.linalg.norm(b - (C - BASE)) < 0.01


def test_rejected_fix_raises(rng):
    sets, NU, NB = make_instance(rng)
    f = float_solve(sets)
    fx = fix_integers(f)
    rej = FixedSolution(fx.integers, fx.baseline_fixed, 1.2, False, fx.candidates, fx.distances)
    with pytest.raises(AmbiguityRejectedError):
        fixed_baseline_and_recover(f, rej, NB, 0)


def test_noisy_code_only_lowers_ratio(rng):
    sets, *_ = make_instance(rng, phase_cyc=0.2, code_m=2.0, epochs=1)
    fx = fix_integers(float_solve(sets), ratio_threshold=1e9)
    assert not fx.accepted
