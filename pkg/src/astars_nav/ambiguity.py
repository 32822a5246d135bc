"""Double-difference integer ambiguity resolution.

Ambiguities are carried as *additive cycles*: the integer amount, with its
path sign, that appears in the phase observation. A direct observation
holds ``-N`` and a surface-assisted one ``+N``, so the DD model is always

    dd_phase = dd_range(b) / lambda + n

with ``n`` the double difference of additive cycles. Pseudorange double
differences make the joint (baseline, ambiguity) system solvable from a
single epoch; extra epochs with fresh noise tighten it further.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .geo import SatelliteState, as_array
from .observation import DIRECT, ELOS, CarrierPhaseObs
from .solver import SingularGeometryError

_PATH_SIGN = {DIRECT: -1, ELOS: +1}


class InsufficientObservationsError(ValueError):
    pass


class NoCandidateError(RuntimeError):
    pass


class AmbiguityRejectedError(RuntimeError):
    pass


@dataclass(frozen=True)
class DoubleDiffSet:
    """One epoch of double differences against `reference_sat`.

    `dd_obs` is in cycles, `dd_code` in metres. `dd_geometry` holds the
    differenced unit vectors at `rover_approx`, oriented so that
    ``dd_range ~ e . (b - b_approx)``.
    """

    reference_sat: int
    dd_obs: Mapping[int, float]
    dd_geometry: Mapping[int, np.ndarray]
    wavelength: float
    sat_positions: Mapping[int, np.ndarray] = field(repr=False, default_factory=dict)
    base_position: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(3))
    rover_approx: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(3))
    dd_code: Mapping[int, float] | None = None
    phase_std: float = 0.01  # cycles, undifferenced
    code_std: float = 0.3  # m, undifferenced
    rover_sign: int = -1
    base_sign: int = -1

    def __post_init__(self):
        if self.reference_sat in self.dd_obs:
            raise ValueError("reference satellite cannot appear among the DD pairs")
        if len(self.dd_obs) < 3:
            raise InsufficientObservationsError("a 3-D baseline needs at least 3 DD pairs")

    @property
    def pairs(self) -> list[int]:
        return sorted(self.dd_obs)


@dataclass(frozen=True)
class FloatSolution:
    baseline_float: np.ndarray
    ambiguities_float: np.ndarray
    covariance: np.ndarray
    pairs: tuple
    reference_sat: int
    base_position: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(3))
    # whitened design and residuals of the final linearisation
    design: np.ndarray = field(repr=False, default_factory=lambda: np.zeros((0, 0)))
    residuals: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0))
    rover_sign: int = -1
    base_sign: int = -1

    @property
    def q_bb(self) -> np.ndarray:
        return self.covariance[:3, :3]

    @property
    def q_bn(self) -> np.ndarray:
        return self.covariance[:3, 3:]

    @property
    def q_nn(self) -> np.ndarray:
        return self.covariance[3:, 3:]


@dataclass(frozen=True)
class FixedSolution:
    integers: np.ndarray
    baseline_fixed: np.ndarray
    ratio: float
    accepted: bool
    candidates: np.ndarray = field(repr=False, default_factory=lambda: np.zeros((0, 0)))
    distances: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0))


def _positions(sats) -> dict:
    if isinstance(sats, Mapping):
        return {int(k): as_array(v) for k, v in sats.items()}
    return {s.id: s.position.as_array() for s in sats}


def _by_sat(obs) -> dict:
    if isinstance(obs, Mapping):
        return dict(obs)
    return {o.sat_id: o for o in obs}


def _value_m(o):
    # extended precision so exact inputs survive 2e7 m ranges
    if isinstance(o, CarrierPhaseObs):
        return np.longdouble(o.value_m)
    return np.longdouble(o)


def _unit(S: np.ndarray, x: np.ndarray) -> np.ndarray:
    d = S - x
    return d / np.linalg.norm(d, axis=-1, keepdims=True)


def select_reference(sat_positions: Mapping[int, np.ndarray], origin) -> int:
    """Highest-elevation satellite as seen from `origin`."""
    x = as_array(origin)
    up = x / np.linalg.norm(x)
    best = max(sat_positions, key=lambda k: (float(_unit(sat_positions[k], x) @ up), -k))
    return int(best)


def form_double_differences(rover_obs, base_obs, sats, base_position, rover_approx=None,
                            reference_sat: int | None = None, rover_code=None, base_code=None,
                            phase_std: float = 0.01, code_std: float = 0.3,
                            wavelength: float | None = None, rover_sign: int = -1,
                            base_sign: int = -1) -> DoubleDiffSet:
    """Single then double differences of rover and base carrier phase.

    Parameters
    ----------
    rover_obs, base_obs : sequence of CarrierPhaseObs or mapping id -> metres
    sats : sequence of SatelliteState or mapping id -> position
    base_position : array_like
        Known base antenna position.
    rover_approx : array_like, optional
        Linearisation point for the rover; defaults to the base position.
    reference_sat : int, optional
        Defaults to the highest satellite seen from the base.
    rover_code, base_code : mapping id -> metres, optional
        Pseudoranges, differenced the same way.
    wavelength : float, optional
        Required when observations are plain metres.
    rover_sign, base_sign : int
        Path sign of the ambiguity for plain-metre observations; taken from
        the path of CarrierPhaseObs inputs.

    Raises
    ------
    InsufficientObservationsError
        Fewer than four satellites common to rover, base and `sats`.
    """
    ro, bo = _by_sat(rover_obs), _by_sat(base_obs)
    pos = _positions(sats)
    common = sorted(set(ro) & set(bo) & set(pos))
    if rover_code is not None and base_code is not None:
        common = [k for k in common if k in rover_code and k in base_code]
    if len(common) < 4:
        raise InsufficientObservationsError(f"{len(common)} common satellites, need at least 4")
    wl = [o.wavelength for o in list(ro.values()) + list(bo.values()) if isinstance(o, CarrierPhaseObs)]
    if wavelength is not None:
        wl.append(float(wavelength))
    if not wl:
        raise ValueError("wavelength unknown: pass CarrierPhaseObs or `wavelength`")
    lam = wl[0]
    if any(abs(w - lam) > 1e-15 for w in wl):
        raise ValueError("mixed wavelengths")
    base = as_array(base_position)
    rover0 = base.copy() if rover_approx is None else as_array(rover_approx)
    ref = select_reference({k: pos[k] for k in common}, base) if reference_sat is None else int(reference_sat)
    if ref not in common:
        raise InsufficientObservationsError(f"reference satellite {ref} not observed by both receivers")

    def sign(o, default):
        return _PATH_SIGN[o.path] if isinstance(o, CarrierPhaseObs) else default

    def sd(k):
        return (_value_m(ro[k]) - _value_m(bo[k])) / np.longdouble(lam)

    u_ref = _unit(pos[ref], rover0)
    dd, geom, code = {}, {}, {}
    for k in common:
        if k == ref:
            continue
        dd[k] = sd(k) - sd(ref)
        geom[k] = -(_unit(pos[k], rover0) - u_ref)
        if rover_code is not None and base_code is not None:
            code[k] = ((np.longdouble(rover_code[k]) - np.longdouble(base_code[k]))
                       - (np.longdouble(rover_code[ref]) - np.longdouble(base_code[ref])))
    any_r, any_b = next(iter(ro.values())), next(iter(bo.values()))
    return DoubleDiffSet(
        reference_sat=ref, dd_obs=dd, dd_geometry=geom, wavelength=lam,
        sat_positions={k: pos[k] for k in common}, base_position=base, rover_approx=rover0,
        dd_code=code or None, phase_std=phase_std, code_std=code_std,
        rover_sign=sign(any_r, rover_sign), base_sign=sign(any_b, base_sign),
    )


def _norm_ld(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.longdouble)
    return np.sqrt(np.sum(v * v, axis=-1))


def _dd_range(S, s_ref, rover, base) -> np.ndarray:
    """Double-differenced geometric range in extended precision."""
    S, s_ref = np.asarray(S, np.longdouble), np.asarray(s_ref, np.longdouble)
    rover, base = np.asarray(rover, np.longdouble), np.asarray(base, np.longdouble)
    r = _norm_ld(S - rover) - _norm_ld(S - base)
    r1 = _norm_ld(s_ref - rover) - _norm_ld(s_ref - base)
    return r - r1


def _dd_cov(m: int, std: float) -> np.ndarray:
    # pairs share the reference satellite and both receivers
    return 2.0 * std ** 2 * (np.eye(m) + np.ones((m, m)))


def float_solve(dd: DoubleDiffSet | Sequence[DoubleDiffSet], max_iterations: int = 10,
                tolerance: float = 1e-10, max_condition: float = 1e14) -> FloatSolution:
    """Joint weighted LS for baseline and DD ambiguities.

    Several epochs may be passed; they share the baseline and the
    ambiguities. The correlation that a common reference introduces between
    DD pairs is included in the weights, and the geometry is re-linearised
    until the baseline update falls below `tolerance` metres.

    Raises
    ------
    SingularGeometryError
        If the stacked system cannot determine all unknowns, for instance
        phase only without pseudoranges.
    """
    epochs = [dd] if isinstance(dd, DoubleDiffSet) else list(dd)
    if not epochs:
        raise ValueError("no epochs")
    first = epochs[0]
    pairs = first.pairs
    for e in epochs:
        if e.pairs != pairs or e.reference_sat != first.reference_sat:
            raise ValueError("all epochs must share the reference and the DD pairs")
    m = len(pairs)
    lam = first.wavelength
    base = first.base_position
    rover = np.asarray(first.rover_approx, dtype=np.longdouble).copy()

    blocks = []
    for e in epochs:
        S = np.array([e.sat_positions[k] for k in pairs])
        s_ref = e.sat_positions[e.reference_sat]
        phi = np.array([e.dd_obs[k] for k in pairs], dtype=np.longdouble)
        W = np.linalg.cholesky(np.linalg.inv(_dd_cov(m, e.phase_std)))
        blocks.append(("phase", S, s_ref, phi, W.T))
        if e.dd_code is not None:
            P = np.array([e.dd_code[k] for k in pairs], dtype=np.longdouble)
            Wc = np.linalg.cholesky(np.linalg.inv(_dd_cov(m, e.code_std)))
            blocks.append(("code", S, s_ref, P, Wc.T))

    n_hat = np.zeros(m)
    for _ in range(max_iterations):
        rows, res = [], []
        for kind, S, s_ref, y, Wt in blocks:
            x = rover.astype(float)
            G = -(_unit(S, x) - _unit(s_ref, x))
            pred = _dd_range(S, s_ref, rover, base)
            if kind == "phase":
                A = np.hstack([G / lam, np.eye(m)])
                v = (y - pred / np.longdouble(lam)).astype(float)
            else:
                A = np.hstack([G, np.zeros((m, m))])
                v = (y - pred).astype(float)
            rows.append(Wt @ A)
            res.append(Wt @ v)
        A = np.vstack(rows)
        v = np.concatenate(res)
        scale = np.linalg.norm(A, axis=0)
        if A.shape[0] < A.shape[1] or np.any(scale == 0):
            raise SingularGeometryError("DD system is rank deficient")
        sv = np.linalg.svd(A / scale, compute_uv=False)
        if sv[-1] <= 0 or (sv[0] / sv[-1]) ** 2 > max_condition:
            raise SingularGeometryError("DD system is rank deficient or ill-conditioned")
        x, *_ = np.linalg.lstsq(A, v, rcond=None)
        rover = rover + x[:3]
        # ambiguities enter linearly; the last solve carries the full value
        n_hat = x[3:]
        if np.linalg.norm(x[:3]) < tolerance:
            break
    resid = v - A @ x
    cov = np.linalg.inv(A.T @ A)
    cov = 0.5 * (cov + cov.T)
    return FloatSolution(
        baseline_float=(rover - np.asarray(base, np.longdouble)).astype(float), ambiguities_float=n_hat, covariance=cov,
        pairs=tuple(pairs), reference_sat=first.reference_sat, base_position=base,
        design=A, residuals=resid, rover_sign=first.rover_sign, base_sign=first.base_sign,
    )


# --- integer least squares ------------------------------------------------

def _ltdl(Q: np.ndarray):
    """Factor ``Q = L^T diag(d) L`` with unit lower-triangular L."""
    n = Q.shape[0]
    A = Q.astype(float).copy()
    L = np.zeros((n, n))
    d = np.zeros(n)
    for i in range(n - 1, -1, -1):
        d[i] = A[i, i]
        if d[i] <= 0.0:
            raise np.linalg.LinAlgError("ambiguity covariance is not positive definite")
        L[i, :i + 1] = A[i, :i + 1] / math.sqrt(d[i])
        for j in range(i):
            A[j, :j + 1] -= L[i, :j + 1] * L[i, j]
        L[i, :i + 1] /= L[i, i]
    return L, d


def _gauss(L, Z, i, j):
    mu = round(L[i, j])
    if mu != 0:
        L[i:, j] -= mu * L[i:, i]
        Z[:, j] -= mu * Z[:, i]


def _permute(L, d, j, delta, Z):
    eta = d[j] / delta
    lam = d[j + 1] * L[j + 1, j] / delta
    d[j] = eta * d[j + 1]
    d[j + 1] = delta
    a0 = L[j, :j].copy()
    a1 = L[j + 1, :j].copy()
    L[j, :j] = -L[j + 1, j] * a0 + a1
    L[j + 1, :j] = eta * a0 + lam * a1
    L[j + 1, j] = lam
    L[j + 2:, [j, j + 1]] = L[j + 2:, [j + 1, j]]
    Z[:, [j, j + 1]] = Z[:, [j + 1, j]]


def decorrelate(Q: np.ndarray):
    """Integer Gauss transforms and permutations.

    Returns ``(Z, L, d)`` with Z unimodular and ``Z^T Q Z = L^T diag(d) L``.
    """
    L, d = _ltdl(np.asarray(Q, dtype=float))
    n = len(d)
    Z = np.eye(n)
    j, k = n - 2, n - 2
    while j >= 0:
        if j <= k:
            for i in range(j + 1, n):
                _gauss(L, Z, i, j)
        delta = d[j] + L[j + 1, j] ** 2 * d[j + 1]
        if delta + 1e-6 < d[j + 1]:
            _permute(L, d, j, delta, Z)
            k = j
            j = n - 2
        else:
            j -= 1
    return Z, L, d


def _sgn(x: float) -> float:
    return -1.0 if x <= 0.0 else 1.0


def _search(L, d, zs, m: int = 2, max_loops: int = 1_000_000):
    """Shrinking-ellipsoid enumeration of the `m` best integer vectors."""
    n = len(d)
    S = np.zeros((n, n))
    dist = np.zeros(n)
    zb = np.zeros(n)
    z = np.zeros(n)
    step = np.zeros(n)
    cand = np.zeros((m, n))
    s = np.full(m, np.inf)
    nn, imax = 0, 0
    maxdist = np.inf
    k = n - 1
    zb[k] = zs[k]
    z[k] = round(zb[k])
    y = zb[k] - z[k]
    step[k] = _sgn(y)
    for _ in range(max_loops):
        newdist = dist[k] + y * y / d[k]
        if newdist < maxdist:
            if k != 0:
                k -= 1
                dist[k] = newdist
                S[k, :k + 1] = S[k + 1, :k + 1] + (z[k + 1] - zb[k + 1]) * L[k + 1, :k + 1]
                zb[k] = zs[k] + S[k, k]
                z[k] = round(zb[k])
                y = zb[k] - z[k]
                step[k] = _sgn(y)
            else:
                if nn < m:
                    if nn == 0 or newdist > s[imax]:
                        imax = nn
                    cand[nn] = z
                    s[nn] = newdist
                    nn += 1
                else:
                    if newdist < s[imax]:
                        cand[imax] = z
                        s[imax] = newdist
                        imax = int(np.argmax(s))
                    maxdist = s[imax]
                z[0] += step[0]
                y = zb[0] - z[0]
                step[0] = -step[0] - _sgn(step[0])
        else:
            if k == n - 1:
                break
            k += 1
            z[k] += step[k]
            y = zb[k] - z[k]
            step[k] = -step[k] - _sgn(step[k])
    else:
        raise NoCandidateError("integer search did not terminate")
    if nn < m:
        raise NoCandidateError(f"search found {nn} of {m} candidates")
    order = np.argsort(s, kind="stable")
    return cand[order], s[order]


def integer_search(a_hat: np.ndarray, Q: np.ndarray, candidates: int = 2):
    """Best integer vectors for ``(a - a_hat)^T Q^-1 (a - a_hat)``.

    Returns
    -------
    ints : ndarray, shape (candidates, n)
    dists : ndarray
        Squared norms, ascending.
    """
    a_hat = np.asarray(a_hat, dtype=float)
    Z, L, d = decorrelate(Q)
    # shift by the rounded float to keep the search near the origin
    shift = np.round(a_hat)
    zs = Z.T @ (a_hat - shift)
    cand, s = _search(L, d, zs, candidates)
    ints = np.rint(np.linalg.solve(Z.T, cand.T).T) + shift
    return ints, s


def fix_integers(flt: FloatSolution, ratio_threshold: float = 3.0) -> FixedSolution:
    """Decorrelate, search and ratio-test the float ambiguities."""
    ints, s = integer_search(flt.ambiguities_float, flt.q_nn, 2)
    best = ints[0]
    ratio = float(s[1] / s[0]) if s[0] > 0 else math.inf
    b = _baseline_update(flt, best)
    return FixedSolution(integers=best.astype(np.int64), baseline_fixed=b, ratio=ratio,
                         accepted=bool(ratio >= ratio_threshold), candidates=ints, distances=s)


def _baseline_update(flt: FloatSolution, n_fixed: np.ndarray) -> np.ndarray:
    dn = flt.ambiguities_float - np.asarray(n_fixed, dtype=float)
    return flt.baseline_float - flt.q_bn @ np.linalg.solve(flt.q_nn, dn)


def fixed_baseline_and_recover(flt: FloatSolution, fixed: FixedSolution, base_integers: Mapping[int, int],
                               ref_sd_integer: int):
    """Fixed baseline and undifferenced rover integers.

    Parameters
    ----------
    base_integers : mapping
        Base station integers ``N^B`` per satellite, as defined on the
        base's own path.
    ref_sd_integer : int
        ``N_1^U - N_1^B`` for the reference satellite, each integer on its
        own receiver's path.

    Returns
    -------
    baseline : ndarray
    rover_integers : dict
        ``N^U`` per satellite, including the reference.

    Raises
    ------
    AmbiguityRejectedError
        If the fixed solution failed the ratio test.
    """
    if not fixed.accepted:
        raise AmbiguityRejectedError(f"ratio {fixed.ratio:.3g} below threshold")
    sb, sr = flt.base_sign, flt.rover_sign
    ref = flt.reference_sat
    a_base = {k: sb * int(v) for k, v in base_integers.items()}
    a_ref_rover = sr * (int(ref_sd_integer) + int(base_integers[ref]))
    rover = {ref: sr * a_ref_rover}
    for k, n in zip(flt.pairs, fixed.integers):
        a_u = int(n) + (a_ref_rover - a_base[ref]) + a_base[k]
        rover[k] = sr * a_u
    return _baseline_update(flt, fixed.integers), rover


def brute_force_integers(a_hat: np.ndarray, Q: np.ndarray, half_width: int = 3):
    """Exhaustive minimiser over a box around the rounded float (test oracle)."""
    a_hat = np.asarray(a_hat, dtype=float)
    n = len(a_hat)
    W = np.linalg.inv(Q)
    c = np.round(a_hat)
    offs = np.arange(-half_width, half_width + 1, dtype=float)
    best, best_q = None, np.inf
    head = n - min(n, 4)
    tail = np.array(list(itertools.product(offs, repeat=n - head)))
    for h in itertools.product(offs, repeat=head):
        grid = np.hstack([np.tile(h, (len(tail), 1)), tail]) if head else tail
        r = grid + c - a_hat
        q = np.einsum("ij,jk,ik->i", r, W, r)
        i = int(np.argmin(q))
        if q[i] < best_q:
            best_q, best = float(q[i]), grid[i] + c
    return best, best_q
