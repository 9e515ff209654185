"""Orthonormal polynomials of a perturbed periodic Jacobi matrix.

Runs ``a_n p_n = (x - b_n) p_{n-1} - a_{n-1} p_{n-2}`` with ``p_0 = 1``,
``p_{-1} = 0`` and power-of-two rescaling, forms the ratio ``p_n / p~_n``
against the unperturbed polynomials, and judges whether that ratio settles.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .bandset import dist_to_bands
from .perturb import Perturbation, make_perturbation
from .torus import PeriodicJacobi, bands_of_periodic

DEFAULT_THRESHOLD = _kernels.DEFAULT_THRESHOLD
DEFAULT_SZEGO_TOL = 1e-2
DEFAULT_WINDOWS = 3
ROUNDING_FLOOR = 1e-13


@dataclass(frozen=True)
class JacobiParams:
    """``a_n = a~_n + delta a_n``, ``b_n = b~_n + delta b_n`` for ``n >= 1``."""

    base: PeriodicJacobi
    perturbation: Perturbation = None

    def __post_init__(self):
        if self.perturbation is None:
            object.__setattr__(self, "perturbation", make_perturbation("zero"))

    @classmethod
    def free(cls, perturbation: Perturbation | None = None) -> "JacobiParams":
        return cls(PeriodicJacobi.free(), perturbation)

    def coefficients(self, N: int):
        """Arrays ``a``, ``b`` with ``a[n-1] = a_n`` for ``n = 1..N``."""
        n = np.arange(1, N + 1, dtype=np.int64)
        a0, b0 = self.base.coefficients(n)
        a = a0 + self.perturbation.values("a", N)
        b = b0 + self.perturbation.values("b", N)
        return np.ascontiguousarray(a, dtype=float), np.ascontiguousarray(b, dtype=float)

    def coefficients_at(self, n):
        """``(a_n, b_n)`` at arbitrary indices ``n >= 1``."""
        n = np.asarray(n, dtype=np.int64)
        a0, b0 = self.base.coefficients(n)
        return a0 + self.perturbation.at("a", n), b0 + self.perturbation.at("b", n)

    def unperturbed(self) -> "JacobiParams":
        return JacobiParams(self.base)


@dataclass(frozen=True)
class PolyPair:
    """Scaled ``(p_{N-1}, p_N)``; true values are these times ``exp(log_scale)``."""

    N: int
    p_prev: complex
    p_cur: complex
    log_scale: float

    @property
    def value(self) -> complex:
        return self.p_cur * math.exp(self.log_scale)

    @property
    def log_abs(self) -> float:
        return math.log(abs(self.p_cur)) + self.log_scale


def _check_coefficients(a):
    bad = np.flatnonzero(~(a > 0))
    if bad.size:
        raise ValueError(f"a_{bad[0] + 1} = {a[bad[0]]} is not positive")


def evaluate_polynomials(params: JacobiParams, x, N: int, threshold: float = DEFAULT_THRESHOLD) -> PolyPair:
    """Evaluate ``(p_{N-1}(x), p_N(x))`` up to a common power-of-two scale.

    Raises
    ------
    ValueError
        If some ``a_n <= 0``.
    FloatingPointError
        On NaN.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    if not cmath.isfinite(complex(x)):
        raise ValueError("x must be finite")
    a, b = params.coefficients(N)
    _check_coefficients(a)
    pp, pc, ls, _, _ = _kernels.three_term(a, b, complex(x), threshold, False)
    return PolyPair(N, complex(pp), complex(pc), float(ls))


def polynomial_values(params: JacobiParams, x, N: int, threshold: float = DEFAULT_THRESHOLD):
    """Scaled ``p_0..p_N`` with the per-index log scale (true ``p_n = values[n] exp(logs[n])``)."""
    a, b = params.coefficients(N)
    _check_coefficients(a)
    _, _, _, vals, logs = _kernels.three_term(a, b, complex(x), threshold, True)
    return vals, logs


def _z_outer(x: complex) -> complex:
    r = cmath.sqrt(x * x - 4)
    z = (x + r) / 2
    return z if abs(z) >= 1 else (x - r) / 2


def free_closed_form(x, n: int) -> complex:
    """``(z^{n+1} - z^{-n-1}) / (z - 1/z)`` with ``z + 1/z = x``, ``|z| >= 1``.

    At ``x = +-2`` returns the confluent value ``(+-1)^n (n + 1)``.
    """
    x = complex(x)
    if x == 2:
        return complex(n + 1)
    if x == -2:
        return complex((-1) ** n * (n + 1))
    z = _z_outer(x)
    # z^{-n-1} underflows harmlessly once |z|^n is huge
    return (z ** (n + 1) - z ** (-n - 1)) / (z - 1 / z)


@dataclass(frozen=True)
class RatioTrace:
    x: complex
    n: np.ndarray
    r: np.ndarray
    log_scale: np.ndarray

    @property
    def samples(self) -> list:
        return list(zip(self.n.tolist(), self.r.tolist()))

    @property
    def N(self) -> int:
        return int(self.n[-1]) if len(self.n) else 0


def ratio_trace(base: JacobiParams, pert: JacobiParams, x, N: int, stride: int = 1,
                threshold: float = DEFAULT_THRESHOLD) -> RatioTrace:
    """Sample ``r_n = p_n(x) / p~_n(x)`` every ``stride`` steps up to ``N``.

    Both recurrences share one rescaling schedule so each ratio is formed
    from same-scale numbers.
    """
    x = complex(x)
    if x.imag == 0:
        raise ValueError("x must be off the real axis")
    if base.base != pert.base:
        raise ValueError("base and perturbed parameters must share the periodic background")
    if base.perturbation.family != "zero":
        raise ValueError("base parameters must carry the zero perturbation")
    if N < 1 or stride < 1:
        raise ValueError("N and stride must be positive")
    a0, b0 = base.coefficients(N)
    a1, b1 = pert.coefficients(N)
    _check_coefficients(a1)
    ns, rs, logs = _kernels.ratio_recurrence(a0, b0, a1, b1, x, int(stride), threshold)
    return RatioTrace(x, ns, rs, logs)


def window_oscillation(trace: RatioTrace, lo: int, hi: int) -> float:
    """Spread of ``r_n`` over ``lo < n <= hi``: max of the ranges of ``|r|`` and ``arg r``.

    The argument is measured relative to the last sample of the window, so
    it never crosses the branch cut when the trace is settling.
    """
    sel = (trace.n > lo) & (trace.n <= hi)
    r = trace.r[sel]
    if r.size == 0:
        raise ValueError(f"no samples in ({lo}, {hi}]")
    mod = np.abs(r)
    ang = np.angle(r / r[-1]) if r[-1] != 0 else np.angle(r)
    return float(max(np.ptp(mod), np.ptp(ang)))


@dataclass(frozen=True)
class SzegoVerdict:
    status: str
    limit: complex | None
    windows: list
    oscillation: np.ndarray
    decay_exponent: float
    tol: float

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def detect_szego_limit(trace: RatioTrace, window: int = DEFAULT_WINDOWS, tol: float = DEFAULT_SZEGO_TOL) -> SzegoVerdict:
    """Judge whether ``r_n`` has a non-zero limit.

    Uses ``window`` dyadic windows ``(N/2, N]``, ``(N/4, N/2]``, ... and
    their oscillations (earliest first). ``converged`` needs the last
    oscillation to be below the first (or at rounding level), below ``tol``, and a limit
    estimate with ``|L| > tol``. ``not_converged`` means no decay and the
    last oscillation is at least ``tol``. Anything else is ``inconclusive``.
    ``decay_exponent`` is the slope of ``log osc`` against the log window centre.
    """
    if window < 3:
        raise ValueError("need at least 3 windows")
    N = trace.N
    bounds = [(N >> (j + 1), N >> j) for j in range(window)][::-1]
    if bounds[0][0] < 1 or any(not np.any((trace.n > lo) & (trace.n <= hi)) for lo, hi in bounds):
        raise ValueError("trace too short for the requested number of windows")
    osc = np.array([window_oscillation(trace, lo, hi) for lo, hi in bounds])
    centres = np.array([0.5 * (lo + hi) for lo, hi in bounds])
    if np.all(osc > 0):
        decay = float(np.polyfit(np.log(centres), np.log(osc), 1)[0])
    elif np.all(osc == 0):
        decay = float("-inf")
    else:
        decay = float("nan")
    limit = complex(trace.r[-1])
    # oscillation at rounding level counts as settled
    settled = osc[-1] <= ROUNDING_FLOOR * max(1.0, abs(limit))
    decaying = osc[-1] < osc[0] or settled
    if decaying and osc[-1] < tol and abs(limit) > tol:
        status = "converged"
    elif not decaying and osc[-1] >= tol:
        status = "not_converged"
    else:
        status = "inconclusive"
    return SzegoVerdict(status, limit if status == "converged" else None, bounds, osc, decay, tol)


def root_asymptotics_exponent(params: JacobiParams, x: float, N: int) -> float:
    """``log |(p_{N-1}(x), p_N(x))| / N`` for real ``x`` off the spectrum.

    Using the pair norm avoids the occasional near-zero of a single ``p_N``.
    """
    x = float(x)
    e = bands_of_periodic(params.base)
    if dist_to_bands(x, e) == 0.0:
        raise ValueError(f"x={x} lies in the essential spectrum")
    pair = evaluate_polynomials(params, x, N)
    return (math.log(math.hypot(abs(pair.p_prev), abs(pair.p_cur))) + pair.log_scale) / N
