"""Periodic points of the isospectral torus.

A period-``p`` Jacobi matrix is given by ``a_1..a_p > 0`` and ``b_1..b_p``,
extended periodically. Its spectrum is ``{x : |Delta(x)| <= 2}`` where
``Delta`` is the trace of the one-period transfer matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .bandset import BandSet, make_band_set
from .errors import NotABandEdgeError

DEFAULT_ROOT_TOL = 1e-12
PARABOLIC_TOL = 1e-9
# closed gaps: Floquet eigenvalues are accurate to ~eps*||H||
_MERGE_TOL = 1e-10


@dataclass(frozen=True)
class PeriodicJacobi:
    a: tuple
    b: tuple

    def __post_init__(self):
        a = tuple(float(v) for v in self.a)
        b = tuple(float(v) for v in self.b)
        if len(a) == 0 or len(a) != len(b):
            raise ValueError("a and b must be non-empty and of equal length")
        if not all(v > 0 for v in a):
            raise ValueError("off-diagonal coefficients must be positive")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def p(self) -> int:
        return len(self.a)

    @classmethod
    def free(cls) -> "PeriodicJacobi":
        return cls((1.0,), (0.0,))

    def coefficients(self, n):
        """Periodically extended ``(a_n, b_n)`` for integer ``n`` (any sign)."""
        n = np.asarray(n, dtype=np.int64)
        idx = (n - 1) % self.p
        return np.asarray(self.a)[idx], np.asarray(self.b)[idx]


def transfer_matrix(J: PeriodicJacobi, x, n: int) -> np.ndarray:
    """One-step matrix mapping ``(w_n, a_{n-1} w_{n-1})`` to ``(w_{n+1}, a_n w_n)``."""
    an, bn = J.coefficients(n)
    an, bn = float(an), float(bn)
    return np.array([[x - bn, -1.0], [an * an, 0.0]], dtype=complex) / an


def monodromy(J: PeriodicJacobi, x) -> np.ndarray:
    M = np.eye(2, dtype=complex)
    for n in range(1, J.p + 1):
        M = transfer_matrix(J, x, n) @ M
    return M


def discriminant(J: PeriodicJacobi, x):
    """Trace of the one-period transfer matrix; ``x`` for the free matrix."""
    t = np.trace(monodromy(J, x))
    return t.real if np.isreal(x) else t


def _floquet_matrix(J: PeriodicJacobi, sign: float) -> np.ndarray:
    p = J.p
    H = np.diag(np.asarray(J.b, dtype=float))
    for j in range(p - 1):
        H[j, j + 1] += J.a[j]
        H[j + 1, j] += J.a[j]
    H[p - 1, 0] += sign * J.a[p - 1]
    H[0, p - 1] += sign * J.a[p - 1]
    return H


def _refine_edge(J, guess, target, root_tol):
    def f(x):
        return discriminant(J, x) - target

    h = max(root_tol, 1e-14 * max(1.0, abs(guess)))
    for _ in range(60):
        lo, hi = guess - h, guess + h
        flo, fhi = f(lo), f(hi)
        if flo == 0.0:
            return lo
        if fhi == 0.0:
            return hi
        if flo * fhi < 0:
            # root_tol is the guaranteed bracket; bisect on to adjacent floats anyway
            while True:
                mid = 0.5 * (lo + hi)
                if not lo < mid < hi:
                    break
                fm = f(mid)
                if fm == 0.0:
                    return mid
                if flo * fm < 0:
                    hi = mid
                else:
                    lo, flo = mid, fm
            return 0.5 * (lo + hi)
        h *= 2.0
        if h > 1e-6 * max(1.0, abs(guess)):
            break
    return None


@dataclass(frozen=True)
class PeriodicSpectrum:
    band_set: BandSet
    floquet_bands_per_band: tuple


def periodic_spectrum(J: PeriodicJacobi, root_tol: float = DEFAULT_ROOT_TOL) -> PeriodicSpectrum:
    """Band edges from the periodic/antiperiodic Floquet problems, refined by bisection.

    Bands whose separating gap is closed are merged; the number of merged
    Floquet bands is kept for the harmonic measures.
    """
    if not root_tol > 0:
        raise ValueError("root_tol must be positive")
    per = np.linalg.eigvalsh(_floquet_matrix(J, 1.0))
    anti = np.linalg.eigvalsh(_floquet_matrix(J, -1.0))
    tagged = sorted([(v, 2.0) for v in per] + [(v, -2.0) for v in anti])
    edges = [v for v, _ in tagged]
    raw = [(edges[2 * j], edges[2 * j + 1]) for j in range(J.p)]

    # a closed gap shows up as a (near) double root with no sign change
    closed = [raw[j][1] >= raw[j + 1][0] - _MERGE_TOL for j in range(J.p - 1)]
    refined = []
    for idx, (v, target) in enumerate(tagged):
        j_band, side = divmod(idx, 2)
        touching = (side == 1 and j_band < J.p - 1 and closed[j_band]) or (
            side == 0 and j_band > 0 and closed[j_band - 1])
        if touching:
            refined.append(v)
            continue
        r = _refine_edge(J, v, target, root_tol)
        if r is None:
            raise RuntimeError(f"could not bracket band edge near {v}; degenerate coefficients?")
        refined.append(r)

    merged, counts = [], []
    lo, hi, cnt = refined[0], refined[1], 1
    for j in range(1, J.p):
        a, b = refined[2 * j], refined[2 * j + 1]
        if closed[j - 1]:
            hi, cnt = max(hi, b), cnt + 1
        else:
            merged.append((lo, hi))
            counts.append(cnt)
            lo, hi, cnt = a, b, 1
    merged.append((lo, hi))
    counts.append(cnt)
    return PeriodicSpectrum(make_band_set(merged), tuple(counts))


def bands_of_periodic(J: PeriodicJacobi, root_tol: float = DEFAULT_ROOT_TOL) -> BandSet:
    """Essential spectrum of the periodic matrix as a :class:`BandSet`."""
    return periodic_spectrum(J, root_tol).band_set


def periodic_harmonic_measures(J: PeriodicJacobi, root_tol: float = DEFAULT_ROOT_TOL) -> list:
    """Harmonic measures ``m_j / p`` as exact fractions, one per gap."""
    spec = periodic_spectrum(J, root_tol)
    out, acc = [], 0
    for c in spec.floquet_bands_per_band[:-1]:
        acc += c
        out.append(Fraction(acc, J.p))
    return out


@dataclass(frozen=True)
class BandEdgeSolutions:
    """Bounded positive ``u`` and linearly growing ``v = kappa n u + s`` at a band edge.

    ``u(n)``, ``v(n)``, ``s(n)`` accept integer arrays (any sign). ``c1``,
    ``c2`` bound ``u`` and ``c3`` (alias ``s_bound``) bounds ``|s|``.
    """

    J: PeriodicJacobi
    E: float
    kappa: float
    u_period: tuple
    s_period: tuple
    wronskian: float

    @property
    def c1(self) -> float:
        return min(self.u_period)

    @property
    def c2(self) -> float:
        return max(self.u_period)

    @property
    def s_bound(self) -> float:
        return max(abs(v) for v in self.s_period)

    c3 = s_bound

    def u(self, n):
        n = np.asarray(n, dtype=np.int64)
        return np.asarray(self.u_period)[(n - 1) % self.J.p]

    def s(self, n):
        n = np.asarray(n, dtype=np.int64)
        return np.asarray(self.s_period)[(n - 1) % self.J.p]

    def v(self, n):
        n = np.asarray(n, dtype=np.int64)
        return self.kappa * n * self.u(n) + self.s(n)


def band_edge_solutions(J: PeriodicJacobi, E: float) -> BandEdgeSolutions:
    """Floquet solutions of ``a_n w_{n+1} + (b_n - E) w_n + a_{n-1} w_{n-1} = 0`` at an edge.

    The monodromy at a band edge is parabolic, ``M = I + N`` with ``N^2 = 0``,
    so one period shifts the second solution by a multiple of the first; that
    multiple gives ``kappa`` exactly and ``s = v - kappa n u`` is periodic.
    ``v`` is normalised to unit Wronskian and shifted by a multiple of ``u``
    to centre ``s / u``.

    Raises
    ------
    NotABandEdgeError
        If ``Delta(E)`` is not ``+-2`` within 1e-9, or the periodic solution
        changes sign.
    """
    E = float(E)
    delta = float(np.real(discriminant(J, E)))
    if abs(abs(delta) - 2.0) > PARABOLIC_TOL:
        raise NotABandEdgeError(f"Delta({E}) = {delta}; not a band edge")
    sigma = 1.0 if delta > 0 else -1.0
    M = np.real(monodromy(J, E))
    Nmat = M - sigma * np.eye(2)
    # kernel of N: the Floquet state (u_1, a_0 u_0)
    if abs(Nmat[0, 1]) >= abs(Nmat[1, 0]) and abs(Nmat[0, 1]) > 0:
        U0 = np.array([Nmat[0, 1], -Nmat[0, 0]])
    elif abs(Nmat[1, 0]) > 0:
        U0 = np.array([-Nmat[1, 1], Nmat[1, 0]])
    else:
        U0 = np.array([1.0, 0.0])
    U0 = U0 / np.max(np.abs(U0))

    def run(state):
        vals = []
        s = state.astype(float)
        for n in range(1, J.p + 1):
            vals.append(s[0])
            s = np.real(transfer_matrix(J, E, n)) @ s
        return np.array(vals), s

    u, end = run(U0)
    if np.all(u < 0):
        u, U0, end = -u, -U0, -end
    if sigma < 0 or np.any(u <= 0):
        raise NotABandEdgeError(f"Floquet solution at {E} is not sign-definite")
    scale = 1.0 / u.min()
    u, U0 = u * scale, U0 * scale

    # second solution with unit Wronskian a_0 (u_0 v_1 - u_1 v_0) = 1
    a0 = J.a[-1]
    u0 = U0[1] / a0
    u1 = U0[0]
    V0 = _unit_wronskian_partner(u0, u1, a0)
    v, Vend = run(V0)
    # after one period: V -> V + c U, so v_{n+p} = v_n + c u_n
    c = float((Vend - V0) @ U0 / (U0 @ U0))
    kappa = c / J.p
    wron = 1.0
    if kappa < 0:
        v, kappa, wron = -v, -kappa, -1.0
    n = np.arange(1, J.p + 1)
    s = v - kappa * n * u
    ratio = s / u
    t = 0.5 * (ratio.max() + ratio.min())
    s = s - t * u
    return BandEdgeSolutions(J, E, float(kappa), tuple(map(float, u)), tuple(map(float, s)), float(wron))


def _unit_wronskian_partner(u0, u1, a0):
    """State ``(v_1, a_0 v_0)`` with ``a_0 (u_0 v_1 - u_1 v_0) = 1``, orthogonal to u's data."""
    # choose (v_0, v_1) = t * (-u_1, u_0): Wronskian a0 * t * (u0^2 + u1^2)
    t = 1.0 / (a0 * (u0 * u0 + u1 * u1))
    v0, v1 = -t * u1, t * u0
    return np.array([v1, a0 * v0])
