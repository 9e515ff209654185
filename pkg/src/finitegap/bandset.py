"""Finite-gap sets and their potential theory.

A finite-gap set is a union of ``ell + 1`` disjoint closed intervals. Its
equilibrium measure has density ``|P(x)| / (pi * sqrt|R(x)|)`` on the bands,
where ``R(x) = prod (x - alpha_j)(x - beta_j)`` and ``P`` is the monic
polynomial of degree ``ell`` whose integral against ``1/sqrt|R|`` vanishes
over every gap.

All integrals with inverse square-root endpoint behaviour are computed with
the substitution ``t = mid + half * cos(theta)``, which turns them into
integrals of smooth periodic functions (Gauss-Chebyshev); the order is
doubled until two successive orders agree.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import BandSetError, QuadratureError

DEFAULT_QUAD_TOL = 1e-10
RESONANCE_TOL = 1e-12
_MIN_ORDER = 32
_MAX_ORDER = 2**16


@dataclass(frozen=True)
class BandSet:
    """Ordered disjoint closed intervals ``[(alpha_1, beta_1), ...]``."""

    bands: tuple

    @property
    def ell(self) -> int:
        return len(self.bands) - 1

    @property
    def alphas(self) -> np.ndarray:
        return np.array([a for a, _ in self.bands])

    @property
    def betas(self) -> np.ndarray:
        return np.array([b for _, b in self.bands])

    @property
    def endpoints(self) -> np.ndarray:
        return np.array([v for band in self.bands for v in band])

    @property
    def gaps(self) -> list:
        return [(self.bands[j][1], self.bands[j + 1][0]) for j in range(self.ell)]

    @property
    def hull(self) -> tuple:
        return self.bands[0][0], self.bands[-1][1]

    def contains(self, x: float) -> bool:
        return any(a <= x <= b for a, b in self.bands)

    def shifted(self, c: float) -> "BandSet":
        return BandSet(tuple((a + c, b + c) for a, b in self.bands))

    def scaled(self, lam: float) -> "BandSet":
        return BandSet(tuple((a * lam, b * lam) for a, b in self.bands))


def make_band_set(intervals) -> BandSet:
    """Validate and sort a list of ``(alpha, beta)`` pairs.

    Raises
    ------
    BandSetError
        For an empty list, a reversed or degenerate pair, or overlapping or
        touching intervals. ``err.index`` is the position of the offending
        pair in the input list.
    """
    pairs = list(intervals)
    if not pairs:
        raise BandSetError("a band set needs at least one interval")
    cleaned = []
    for i, pair in enumerate(pairs):
        try:
            a, b = (float(v) for v in pair)
        except (TypeError, ValueError):
            raise BandSetError(f"interval {i} is not a pair of reals", index=i) from None
        if not (math.isfinite(a) and math.isfinite(b)):
            raise BandSetError(f"interval {i} has a non-finite endpoint", index=i)
        if not a < b:
            raise BandSetError(f"interval {i} = ({a}, {b}) has reversed endpoints", index=i)
        cleaned.append((a, b, i))
    cleaned.sort()
    for (a0, b0, i0), (a1, b1, i1) in zip(cleaned, cleaned[1:]):
        if not b0 < a1:
            kind = "touching" if b0 == a1 else "overlapping"
            raise BandSetError(
                f"intervals {i0} and {i1} are {kind}: ({a0}, {b0}) and ({a1}, {b1})",
                index=i1,
            )
    return BandSet(tuple((a, b) for a, b, _ in cleaned))


def dist_to_bands(x: float, e: BandSet) -> float:
    """Euclidean distance from ``x`` to the union of bands (0 inside)."""
    best = math.inf
    for a, b in e.bands:
        if a <= x <= b:
            return 0.0
        best = min(best, a - x if x < a else x - b)
    return best


def _rest_sqrt(t, endpoints, skip):
    """sqrt of prod |t - c| over endpoints c not in ``skip``."""
    keep = [c for i, c in enumerate(endpoints) if i not in skip]
    if not keep:
        return np.ones_like(t)
    diffs = np.abs(t[:, None] - np.asarray(keep)[None, :])
    return np.sqrt(np.prod(diffs, axis=1))


def _chebyshev_rule(e: BandSet, i_lo: int, i_hi: int, order: int):
    """Nodes/weights with sum w g(t) ~ int_{c_lo}^{c_hi} g / sqrt|R|.

    ``i_lo`` and ``i_hi`` index consecutive endpoints (a band or a gap).
    """
    ends = e.endpoints
    lo, hi = ends[i_lo], ends[i_hi]
    theta = (2.0 * np.arange(1, order + 1) - 1.0) * math.pi / (2.0 * order)
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    t = mid + half * np.cos(theta)
    w = (math.pi / order) / _rest_sqrt(t, ends, {i_lo, i_hi})
    return t, w


def _converged(fn, tol, what):
    """Evaluate ``fn(order)`` with doubling orders until two agree to tol."""
    order = _MIN_ORDER
    prev = np.asarray(fn(order))
    while order < _MAX_ORDER:
        order *= 2
        cur = np.asarray(fn(order))
        if np.all(np.abs(cur - prev) <= tol * np.maximum(1.0, np.abs(cur))):
            return cur
        prev = cur
    raise QuadratureError(f"{what}: quadrature did not converge to {tol} by order {order}")


@dataclass(frozen=True)
class EquilibriumMeasure:
    """Equilibrium measure of a band set.

    ``gap_roots`` are the zeros of the monic polynomial ``P`` (one per gap),
    ``harmonic_measures[j-1]`` is the mass of the first ``j`` bands.
    """

    band_set: BandSet
    gap_roots: tuple
    capacity: float
    harmonic_measures: tuple
    quad_tol: float
    band_masses: tuple = field(default=())
    gap_residuals: tuple = field(default=())

    @property
    def mass(self) -> float:
        return math.fsum(self.band_masses)

    @property
    def omega(self) -> np.ndarray:
        return np.array(self.harmonic_measures, dtype=float)

    def P(self, x):
        x = np.asarray(x, dtype=float)
        out = np.ones_like(x)
        for r in self.gap_roots:
            out = out * (x - r)
        return out

    def density(self, x):
        """Density of the measure; zero off the bands."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        e = self.band_set
        R = np.ones_like(x)
        for c in e.endpoints:
            R = R * (x - c)
        inside = np.array([e.contains(v) for v in x])
        out = np.zeros_like(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            out[inside] = np.abs(self.P(x[inside])) / (math.pi * np.sqrt(np.abs(R[inside])))
        return out

    def potential(self, x: float) -> float:
        """Logarithmic potential ``int log|x - t| d rho(t)`` for x off the bands."""
        if self.band_set.contains(x):
            raise ValueError(f"x = {x} lies in a band")
        e = self.band_set

        def total(order):
            acc = 0.0
            for j in range(e.ell + 1):
                t, w = _chebyshev_rule(e, 2 * j, 2 * j + 1, order)
                acc += np.sum(w * np.abs(self.P(t)) * np.log(np.abs(x - t))) / math.pi
            return acc

        return float(_converged(total, self.quad_tol, "potential"))


def _solve_gap_polynomial(e: BandSet, quad_tol: float):
    """Monic P of degree ell with vanishing gap integrals; returns its roots."""
    ell = e.ell
    if ell == 0:
        return ()
    lo, hi = e.hull
    c, h = 0.5 * (lo + hi), 0.5 * (hi - lo)

    def moments(order):
        G = np.empty((ell, ell + 1))
        for j in range(ell):
            t, w = _chebyshev_rule(e, 2 * j + 1, 2 * j + 2, order)
            s = (t - c) / h
            for i in range(ell + 1):
                G[j, i] = np.sum(w * s**i)
        return G

    G = _converged(moments, quad_tol, "gap moments")
    try:
        coef = np.linalg.solve(G[:, :ell], -G[:, ell])
    except np.linalg.LinAlgError as exc:
        raise RuntimeError("gap-moment system is singular") from exc

    def Q(s):
        return s**ell + sum(coef[i] * s**i for i in range(ell))

    roots = []
    for beta, alpha in e.gaps:
        s0, s1 = (beta - c) / h, (alpha - c) / h
        f0, f1 = Q(s0), Q(s1)
        if f0 * f1 > 0:
            raise RuntimeError(f"no sign change of P in gap ({beta}, {alpha})")
        s_root = brentq(Q, s0, s1, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=500)
        roots.append(c + h * s_root)
    return tuple(roots)


def equilibrium_measure(e: BandSet, quad_tol: float = DEFAULT_QUAD_TOL) -> EquilibriumMeasure:
    """Compute the equilibrium measure, harmonic measures and capacity.

    Parameters
    ----------
    e : BandSet
    quad_tol : float
        Agreement required between successive quadrature orders.

    Returns
    -------
    EquilibriumMeasure
    """
    if not quad_tol > 0:
        raise ValueError("quad_tol must be positive")
    roots = _solve_gap_polynomial(e, quad_tol)

    def P(t):
        out = np.ones_like(t)
        for r in roots:
            out = out * (t - r)
        return out

    def masses(order):
        return [np.sum(w * np.abs(P(t))) / math.pi
                for t, w in (_chebyshev_rule(e, 2 * j, 2 * j + 1, order) for j in range(e.ell + 1))]

    def residuals(order):
        return [np.sum(w * P(t))
                for t, w in (_chebyshev_rule(e, 2 * j + 1, 2 * j + 2, order) for j in range(e.ell))]

    band_masses = tuple(float(v) for v in _converged(masses, quad_tol, "band masses"))
    gap_res = tuple(float(v) for v in _converged(residuals, quad_tol, "gap residuals")) if e.ell else ()
    omegas = tuple(math.fsum(band_masses[: j + 1]) for j in range(e.ell))

    provisional = EquilibriumMeasure(e, roots, 1.0, omegas, quad_tol, band_masses, gap_res)
    lo, hi = e.hull
    x_ref = hi + (hi - lo)
    log_cap = provisional.potential(x_ref) - _green_from_derivative(provisional, x_ref)
    return EquilibriumMeasure(e, roots, math.exp(log_cap), omegas, quad_tol, band_masses, gap_res)


def _green_from_derivative(m: EquilibriumMeasure, x: float) -> float:
    """Integrate ``P / sqrt|R|`` from the nearest band edge out to ``x``."""
    e = m.band_set
    ends = e.endpoints
    lo, hi = e.hull
    if x > hi:
        i0 = len(ends) - 1
    elif x < lo:
        i0 = 0
    else:
        for j, (beta, alpha) in enumerate(e.gaps):
            if beta < x < alpha:
                i0 = 2 * j + 1 if x - beta <= alpha - x else 2 * j + 2
                break
        else:
            raise ValueError(f"x = {x} lies in a band")
    e0 = ends[i0]
    span = x - e0

    def integral(order):
        sig, wts = np.polynomial.legendre.leggauss(order)
        sig = 0.5 * (sig + 1.0)
        wts = 0.5 * wts
        t = e0 + span * sig**2
        f = m.P(t) / _rest_sqrt(t, ends, {i0})
        return 2.0 * math.sqrt(abs(span)) * np.sum(wts * f)

    val = _converged(integral, m.quad_tol, "green function")
    return abs(float(val))


def green_function(m: EquilibriumMeasure, x: float) -> float:
    """Green's function of the complement of the band set with pole at infinity.

    Evaluated on the real line off the bands by integrating its derivative
    ``P(t) / sqrt|R(t)|`` from the closest band edge; equals
    ``potential(x) - log(capacity)``.
    """
    if m.band_set.contains(x):
        raise ValueError(f"x = {x} lies in a band; the Green's function vanishes there")
    return _green_from_derivative(m, float(x))


def frequency_of(k, m: EquilibriumMeasure) -> float:
    """``(k . omega) mod 1`` as a number in ``[0, 1)``."""
    k = np.atleast_1d(np.asarray(k, dtype=np.int64)) if len(k) else np.zeros(0, dtype=np.int64)
    if k.shape[0] != m.band_set.ell:
        raise ValueError(f"frequency vector has length {k.shape[0]}, expected {m.band_set.ell}")
    return _frac(math.fsum(int(kj) * w for kj, w in zip(k, m.harmonic_measures)))


def _frac(x: float) -> float:
    f = x - math.floor(x)
    return 0.0 if f >= 1.0 else f


@dataclass(frozen=True)
class DiophantineQuality:
    C: float
    k: tuple
    sign: int
    resonant: bool


def diophantine_quality(m: EquilibriumMeasure, omega0: float, K: int, s: int) -> DiophantineQuality:
    """Best constant in ``{+-omega0 + k.omega} >= C (1 + |k|)^-s`` over ``|k|_1 <= K``.

    Returns the minimising ``k`` and sign. An exact resonance (the bracket
    within 1e-12 of an integer) gives ``C = 0`` and ``resonant=True``.
    """
    if K < 0 or s < 0:
        raise ValueError("K and s must be non-negative")
    ell = m.band_set.ell
    best = (math.inf, (), 1)
    rng = range(-K, K + 1)
    box = [k for k in itertools.product(rng, repeat=ell) if sum(abs(v) for v in k) <= K]
    # smallest |k| first, so a reported resonance has the shortest witness
    for k in sorted(box, key=lambda k: sum(abs(v) for v in k)):
        size = sum(abs(v) for v in k)
        base = math.fsum(kj * w for kj, w in zip(k, m.harmonic_measures))
        for sign in (1, -1):
            f = _frac(sign * omega0 + base)
            if f < RESONANCE_TOL or f > 1.0 - RESONANCE_TOL:
                return DiophantineQuality(0.0, tuple(k), sign, True)
            val = f * (1 + size) ** s
            if val < best[0]:
                best = (val, tuple(k), sign)
    return DiophantineQuality(best[0], best[1], best[2], False)
