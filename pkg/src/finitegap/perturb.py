"""Decaying perturbations and numerical checks of their summability conditions.

Sums are twisted by a frequency ``x``:
``S_N(x) = sum_{n <= N} exp(2 pi i x n) delta_n``. Convergence is judged by the
Cauchy test ``|S_{2N} - S_N| < tail_tol`` at the largest checkpoint.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels
from .bandset import EquilibriumMeasure, RESONANCE_TOL, frequency_of
from .errors import HypothesisError, ParameterRangeError

DEFAULT_CHECKPOINTS = (10**3, 10**4, 10**5, 10**6)
DEFAULT_TAIL_TOL = 5e-3
BOUNDED_GROWTH = 0.05
FAMILIES = ("zero", "example1", "example2", "l1_decay", "custom")


def _zero(n):
    return np.zeros(np.shape(n))


@dataclass(frozen=True)
class Perturbation:
    """Sequences ``delta a_n`` and ``delta b_n`` for ``n >= 1``.

    Providers take an integer array and return a float array of the same
    shape.
    """

    family: str
    alpha: float | None = None
    omega: float | None = None
    da: Callable = field(default=_zero, repr=False, compare=False)
    db: Callable = field(default=_zero, repr=False, compare=False)
    a_is_zero: bool = True

    def values(self, component: str, N: int) -> np.ndarray:
        """``delta_c`` for ``n = 1..N`` as a float array (index ``n - 1``)."""
        if component not in ("a", "b"):
            raise ValueError("component must be 'a' or 'b'")
        if component == "a" and self.a_is_zero:
            return np.zeros(N)
        if component == "b" and self.family == "zero":
            return np.zeros(N)
        n = np.arange(1, N + 1, dtype=np.int64)
        fn = self.da if component == "a" else self.db
        return np.ascontiguousarray(np.broadcast_to(np.asarray(fn(n), dtype=float), (N,)))

    def at(self, component: str, n) -> np.ndarray:
        """``delta_c`` at arbitrary indices ``n >= 1``."""
        n = np.asarray(n, dtype=np.int64)
        if self.is_zero(component):
            return np.zeros(n.shape)
        fn = self.da if component == "a" else self.db
        return np.broadcast_to(np.asarray(fn(n), dtype=float), n.shape).copy()

    def is_zero(self, component: str) -> bool:
        return self.family == "zero" or (component == "a" and self.a_is_zero)

    def __add__(self, other: "Perturbation") -> "Perturbation":
        s, o = self, other
        return Perturbation("custom", da=lambda n: s.da(n) + o.da(n), db=lambda n: s.db(n) + o.db(n),
                            a_is_zero=s.a_is_zero and o.a_is_zero)


def _frac(x):
    return x - np.floor(x)


def make_perturbation(family: str, alpha: float | None = None, omega: float | None = None,
                      da: Callable | None = None, db: Callable | None = None) -> Perturbation:
    """Build one of the supported families.

    ``example1``: ``delta b_n = n^-alpha cos(2 pi omega n)``, alpha in (1/2, 1),
    omega in (0, 1). ``example2``: ``delta b_n = n^-alpha cos(2 pi sqrt n)``,
    alpha in (3/4, 1). ``l1_decay``: ``delta b_n = n^-alpha``, alpha > 1.
    ``custom`` takes the providers ``da`` / ``db`` directly.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; choose from {FAMILIES}")
    if family == "zero":
        return Perturbation("zero")
    if family == "custom":
        return Perturbation("custom", alpha, omega, da or _zero, db or _zero, da is None)
    if alpha is None:
        raise ParameterRangeError(f"{family} needs alpha")
    alpha = float(alpha)
    if family == "example1":
        if not 0.5 < alpha < 1.0:
            raise ParameterRangeError(f"alpha={alpha} outside (1/2, 1) for example1")
        if omega is None or not 0.0 < omega < 1.0:
            raise ParameterRangeError(f"omega={omega} outside (0, 1) for example1")
        w = float(omega)
        # exact phase reduction keeps cos(2 pi omega n) accurate for large n
        return Perturbation(family, alpha, w,
                            db=lambda n: n ** -alpha * np.cos(2 * np.pi * _frac(w * n)))
    if family == "example2":
        if not 0.75 < alpha < 1.0:
            raise ParameterRangeError(f"alpha={alpha} outside (3/4, 1) for example2")
        return Perturbation(family, alpha,
                            db=lambda n: n ** -alpha * np.cos(2 * np.pi * _frac(np.sqrt(n))))
    if not alpha > 1.0:
        raise ParameterRangeError(f"alpha={alpha} must exceed 1 for l1_decay")
    return Perturbation(family, alpha, db=lambda n: n ** -alpha)


@dataclass(frozen=True)
class SequenceNorms:
    l2: float
    l1: float
    l1_slope: float
    l2_slope: float


def _loglog_slope(N, S):
    N, S = np.asarray(N, float), np.asarray(S, float)
    ok = S > 0
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(N[ok]), np.log(S[ok]), 1)[0])


def sequence_norms(p: Perturbation, N: int) -> SequenceNorms:
    """ℓ² and ℓ¹ sums up to ``N`` with log-log slopes over the last decade.

    The slopes are fitted on ``[N/10, N]``; zero sequences give NaN slopes.
    """
    if N < 10:
        raise ValueError("N must be at least 10")
    da, db = p.values("a", N), p.values("b", N)
    sq = np.cumsum(da * da + db * db)
    ab = np.cumsum(np.abs(da) + np.abs(db))
    pts = np.unique(np.geomspace(max(N // 10, 1), N, 11).astype(np.int64))
    return SequenceNorms(float(math.fsum(da * da) + math.fsum(db * db)),
                         float(math.fsum(np.abs(da)) + math.fsum(np.abs(db))),
                         _loglog_slope(pts, ab[pts - 1]), _loglog_slope(pts, sq[pts - 1]))


@dataclass(frozen=True)
class PartialSumSeries:
    x: float
    component: str
    N: np.ndarray
    S: np.ndarray
    sup: np.ndarray


def _checkpoints(checkpoints) -> np.ndarray:
    c = np.asarray(checkpoints, dtype=np.int64)
    if c.ndim != 1 or c.size == 0 or np.any(c < 1) or np.any(np.diff(c) <= 0):
        raise ValueError("checkpoints must be a non-empty increasing list of positive integers")
    return c


def _twisted(values, x, cps):
    return _kernels.twisted_partial_sums(values, float(x % 1.0), cps)


def weighted_partial_sums(p: Perturbation, component: str, x: float, checkpoints) -> PartialSumSeries:
    """Compensated twisted partial sums at each checkpoint."""
    cps = _checkpoints(checkpoints)
    vals = p.values(component, int(cps[-1]))
    S, sup = _twisted(vals, x, cps)
    return PartialSumSeries(float(x), component, cps, S, sup)


def _cauchy(values, x, N):
    # S_N and S_2N in one pass
    S, _ = _twisted(values, x, np.array([N, 2 * N], dtype=np.int64))
    return complex(S[0]), complex(S[1]), float(abs(S[1] - S[0]))


def _box(ell: int, kmax: int):
    return list(itertools.product(range(-kmax, kmax + 1), repeat=ell))


def _circle_dist(x: float) -> float:
    f = x % 1.0
    return min(f, 1.0 - f)


def _resonant(p: Perturbation, x: float) -> bool:
    # example1 carries e^{+-2 pi i omega n}; it resonates when x = -+omega mod 1
    if p.family != "example1":
        return False
    return min(_circle_dist(x + p.omega), _circle_dist(x - p.omega)) < RESONANCE_TOL


@dataclass(frozen=True)
class KVerdict:
    k: tuple
    x: float
    S: complex
    S_double: complex
    tail: float
    resonant: bool
    converged: bool


@dataclass(frozen=True)
class ConditionBReport:
    verdicts: dict
    tail_tol: float
    N: int

    @property
    def all_converged(self) -> bool:
        return all(v.converged for v in self.verdicts.values())

    @property
    def flagged(self) -> list:
        return [k for k, v in self.verdicts.items() if not v.converged]


def check_condition_b(p: Perturbation, m: EquilibriumMeasure, kmax: int,
                      checkpoints=DEFAULT_CHECKPOINTS, tail_tol: float = DEFAULT_TAIL_TOL) -> ConditionBReport:
    """Cauchy verdicts for the twisted sums of both components over ``|k|_inf <= kmax``.

    The sums run to twice the largest checkpoint. A ``k`` passes when both
    the ``a`` and ``b`` tails are below ``tail_tol`` and no resonance with an
    example1 carrier is detected.
    """
    if kmax < 0:
        raise ValueError("kmax must be non-negative")
    N = int(_checkpoints(checkpoints)[-1])
    comps = {c: p.values(c, 2 * N) for c in ("a", "b") if not p.is_zero(c)}
    out = {}
    for k in _box(m.band_set.ell, kmax):
        x = frequency_of(k, m)
        S, S2, tail = 0j, 0j, 0.0
        for c, vals in comps.items():
            s1, s2, t = _cauchy(vals, x, N)
            if c == "b":
                S, S2 = s1, s2
            tail = max(tail, t)
        res = _resonant(p, x)
        kk = tuple(int(v) for v in k)
        out[kk] = KVerdict(kk, x, S, S2, float(tail), res, bool(tail < tail_tol and not res))
    return ConditionBReport(out, tail_tol, N)


@dataclass(frozen=True)
class ConditionCReport:
    ks: list
    norms: np.ndarray
    sups: np.ndarray
    growth: np.ndarray
    slope: float
    slope_stderr: float
    N: int

    @property
    def max_growth(self) -> float:
        return float(np.max(self.growth)) if len(self.growth) else 0.0

    @property
    def bounded(self) -> bool:
        return self.max_growth <= BOUNDED_GROWTH

    def table(self) -> list:
        return [(k, float(s)) for k, s in zip(self.ks, self.sups)]


def check_condition_c(p: Perturbation, m: EquilibriumMeasure, kmax: int, N: int,
                      component: str = "b") -> ConditionCReport:
    """Running sups of ``|S_M|``, ``M <= N``, over the box ``|k|_inf <= kmax``.

    ``growth`` is the log-log slope of the running sup over ``[N/100, N]``
    per ``k``; values near 0 mean the sums stay bounded. ``slope`` fits
    ``log max sup`` against ``|k|`` (ℓ¹ norm) with its standard error.
    """
    if kmax < 1:
        raise ValueError("kmax must be at least 1")
    vals = p.values(component, N)
    cps = np.unique(np.geomspace(max(N // 100, 1), N, 9).astype(np.int64))
    ks = [tuple(int(v) for v in k) for k in _box(m.band_set.ell, kmax)]
    sups, growth = [], []
    for k in ks:
        _, sup = _twisted(vals, frequency_of(k, m), cps)
        sups.append(sup[-1])
        g = _loglog_slope(cps, sup)
        growth.append(0.0 if math.isnan(g) else g)
    sups = np.array(sups)
    norms = np.array([sum(abs(v) for v in k) for k in ks])
    levels = np.unique(norms)
    best = np.array([sups[norms == r].max() for r in levels])
    slope, err = 0.0, 0.0
    if np.all(best > 0) and len(levels) >= 3:
        coef, cov = np.polyfit(levels, np.log(best), 1, cov=True)
        slope, err = float(coef[0]), float(math.sqrt(max(cov[0, 0], 0.0)))
    elif np.all(best > 0) and len(levels) == 2:
        slope = float(np.polyfit(levels, np.log(best), 1)[0])
    return ConditionCReport(ks, norms, sups, np.array(growth), slope, err, N)


@dataclass(frozen=True)
class BlockSums:
    period: int
    N: np.ndarray
    sums_a: np.ndarray
    sums_b: np.ndarray
    tails: np.ndarray
    converged: np.ndarray
    tail_tol: float

    def dft(self, mfreq: int, component: str = "b") -> np.ndarray:
        """``sum_j exp(2 pi i m j / p) B_j`` at each checkpoint; equals the
        twisted sum at ``x = m/p`` over ``n <= N p``."""
        B = self.sums_b if component == "b" else self.sums_a
        j = np.arange(1, self.period + 1)
        return B @ np.exp(2j * np.pi * mfreq * j / self.period)


def periodic_block_sums(p: Perturbation, period: int, checkpoints=DEFAULT_CHECKPOINTS,
                        tail_tol: float = DEFAULT_TAIL_TOL) -> BlockSums:
    """Per-residue sums ``B_j(N) = sum_{n < N} delta_{n p + j}``, ``j = 1..p``.

    ``N`` counts blocks, so ``B_j(N)`` uses indices up to ``N p``. Cauchy
    verdicts compare ``2N`` with ``N`` blocks at the largest checkpoint.
    ``sums_a``/``sums_b`` have shape ``(len(checkpoints), period)``.
    """
    if period < 1:
        raise ValueError("period must be at least 1")
    cps = _checkpoints(checkpoints)
    Nmax = int(cps[-1])
    allcp = np.concatenate([cps, [2 * Nmax]]).astype(np.int64)
    res = {}
    for c in ("a", "b"):
        vals = p.values(c, 2 * Nmax * period).reshape(2 * Nmax, period)
        S = np.empty((len(allcp), period))
        for j in range(period):
            col = np.ascontiguousarray(vals[:, j])
            S[:, j] = _kernels.compensated_partial_sums(col.astype(complex), allcp).real
        res[c] = S
    tails = np.maximum(np.abs(res["a"][-1] - res["a"][-2]), np.abs(res["b"][-1] - res["b"][-2]))
    return BlockSums(period, cps, res["a"][:-1], res["b"][:-1], tails, tails < tail_tol, tail_tol)


@dataclass(frozen=True)
class WeightedSumResult:
    N: np.ndarray
    S: np.ndarray
    tail: float
    converged: bool
    terms_used: int


def almost_periodic_weighted_sum(coeffs: dict, C: float, D: float, p: Perturbation,
                                 m: EquilibriumMeasure, N: int, tail_tol: float = DEFAULT_TAIL_TOL,
                                 checkpoints=None) -> WeightedSumResult:
    """Partial sums of ``f_n delta b_n`` for ``f_n = sum_k c_k exp(2 pi i (k . omega) n)``.

    ``coeffs`` maps integer tuples ``k`` (length ell) to complex ``c_k``. Every
    coefficient must obey ``|c_k| <= C exp(-D |k|)``. Terms with
    ``|k|`` beyond the point where the declared bound makes the lattice tail
    smaller than 1e-14 are dropped. The sum is formed by linearity from
    twisted sums, and is judged by the Cauchy test at ``N`` versus ``2N``.

    Raises
    ------
    HypothesisError
        If a coefficient violates the declared bound.
    """
    if not (C > 0 and D > 0):
        raise ValueError("C and D must be positive")
    ell = m.band_set.ell
    for k, c in coeffs.items():
        if len(k) != ell:
            raise ValueError(f"k={k} has wrong length; expected {ell}")
        r = sum(abs(int(v)) for v in k)
        if abs(c) > C * math.exp(-D * r) * (1 + 1e-12):
            raise HypothesisError(f"|c_{k}| = {abs(c):.3g} exceeds C exp(-D|k|) = {C * math.exp(-D * r):.3g}")
    # lattice shell |k|_1 = r has at most (2r+1)^ell points
    cutoff = 0
    while sum((2 * r + 1) ** ell * C * math.exp(-D * r) for r in range(cutoff + 1, cutoff + 2000)) >= 1e-14:
        cutoff += 1
    cps = _checkpoints(checkpoints if checkpoints is not None else [N])
    if cps[-1] != N:
        cps = np.concatenate([cps[cps < N], [N]])
    allcp = np.concatenate([cps, [2 * N]]).astype(np.int64)
    vals = p.values("b", 2 * N)
    total = np.zeros(len(allcp), dtype=complex)
    used = 0
    for k, c in coeffs.items():
        if sum(abs(int(v)) for v in k) > cutoff or c == 0:
            continue
        S, _ = _twisted(vals, frequency_of(k, m), allcp)
        total += c * S
        used += 1
    tail = float(abs(total[-1] - total[-2]))
    return WeightedSumResult(cps, total[:-1], tail, tail < tail_tol, used)
