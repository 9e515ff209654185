"""Eigenvalues of truncated Jacobi matrices outside the essential spectrum.

Eigenvalues come from Sturm-count bisection on the ``N x N`` truncation.
Only the windows outside the bands are bisected when looking for gap
eigenvalues, which keeps the cost proportional to their number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .bandset import BandSet, dist_to_bands
from .oprl import JacobiParams
from .perturb import Perturbation
from .torus import PeriodicJacobi, band_edge_solutions, bands_of_periodic

DEFAULT_EIG_TOL = 1e-12
DEFAULT_MARGIN = 1e-4
WEYL_TAIL = 0.05


def truncation(params: JacobiParams, N: int):
    """Diagonal ``b_1..b_N`` and off-diagonal ``a_1..a_{N-1}``."""
    if N < 1:
        raise ValueError("N must be at least 1")
    a, b = params.coefficients(N)
    return b, a[: N - 1].copy()


def _pivmin(off):
    return np.finfo(float).tiny * max(1.0, float(np.max(off * off)) if off.size else 1.0)


def _gershgorin(diag, off):
    r = np.zeros(diag.size)
    r[:-1] += np.abs(off)
    r[1:] += np.abs(off)
    return float(np.min(diag - r)), float(np.max(diag + r))


def sturm_count(diag, off, t) -> np.ndarray:
    """Number of eigenvalues strictly below each shift in ``t``."""
    off = np.asarray(off, dtype=float)
    return _kernels.sturm_counts(np.asarray(diag, float), off * off, np.atleast_1d(np.asarray(t, float)), _pivmin(off))


def eigenvalues_in(diag, off, lo: float, hi: float, eig_tol: float = DEFAULT_EIG_TOL) -> np.ndarray:
    """Eigenvalues in ``[lo, hi)`` of the tridiagonal matrix, sorted."""
    off = np.asarray(off, dtype=float)
    return _kernels.bisect_eigenvalues(np.asarray(diag, float), off * off, float(lo), float(hi), eig_tol, _pivmin(off))


def eigenvalues_truncation(params: JacobiParams, N: int, eig_tol: float = DEFAULT_EIG_TOL) -> np.ndarray:
    """All ``N`` eigenvalues of the truncation, by bisection to ``eig_tol``."""
    diag, off = truncation(params, N)
    lo, hi = _gershgorin(diag, off)
    pad = max(eig_tol, 1e-12 * max(1.0, abs(lo), abs(hi)))
    return eigenvalues_in(diag, off, lo - pad, hi + pad, eig_tol)


def eigenvector(diag, off, lam: float) -> np.ndarray:
    """Eigenvector at a converged eigenvalue, unit Euclidean norm."""
    off = np.asarray(off, dtype=float)
    x = _kernels.twisted_eigenvector(np.asarray(diag, float), off, float(lam), _pivmin(off))
    return x / np.linalg.norm(x)


def weyl_artifact(vec: np.ndarray, tail: float = WEYL_TAIL) -> bool:
    """True when more than half of the eigenvector mass sits in the last ``tail`` of indices."""
    w = vec * vec
    cut = int(math.floor((1.0 - tail) * w.size))
    return float(np.sum(w[cut:])) > 0.5 * float(np.sum(w))


@dataclass(frozen=True)
class EigenReport:
    N: int
    band_set: BandSet
    margin: float
    outside_eigs: np.ndarray
    dists: np.ndarray
    discarded: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def count(self) -> int:
        return int(self.outside_eigs.size)

    def q_sums(self, qs=(0.5, 0.25)) -> dict:
        return {q: q_sum(self, self.band_set, q) for q in qs}


def gap_eigenvalues(eigs, e: BandSet, margin: float = DEFAULT_MARGIN, truncated=None,
                    tail: float = WEYL_TAIL, N: int | None = None) -> EigenReport:
    """Keep the eigenvalues with ``dist(x, e) > margin``.

    When ``truncated = (diag, off)`` is given, eigenvalues whose eigenvector
    concentrates at the cut end (see :func:`weyl_artifact`) are set aside in
    ``discarded``.
    """
    if not margin > 0:
        raise ValueError("margin must be positive")
    eigs = np.asarray(eigs, dtype=float)
    d = np.array([dist_to_bands(x, e) for x in eigs])
    keep = d > margin
    cand, dist = eigs[keep], d[keep]
    dropped = np.zeros(0)
    if truncated is not None and cand.size:
        diag, off = truncated
        bad = np.array([weyl_artifact(eigenvector(diag, off, x), tail) for x in cand])
        dropped, cand, dist = cand[bad], cand[~bad], dist[~bad]
    n = N if N is not None else (len(truncated[0]) if truncated is not None else eigs.size)
    return EigenReport(int(n), e, float(margin), cand, dist, dropped)


def outside_spectrum(params: JacobiParams, N: int, e: BandSet | None = None, margin: float = DEFAULT_MARGIN,
                     eig_tol: float = DEFAULT_EIG_TOL, weyl_filter: bool = True) -> EigenReport:
    """Gap and outer eigenvalues of the ``N x N`` truncation, filtered.

    Only the windows at distance more than ``margin`` from ``e`` (default:
    the bands of the periodic background) are bisected.
    """
    if margin <= eig_tol:
        raise ValueError("margin must exceed eig_tol")
    e = e if e is not None else bands_of_periodic(params.base)
    diag, off = truncation(params, N)
    glo, ghi = _gershgorin(diag, off)
    windows = [(glo - 1.0, e.bands[0][0] - margin)]
    windows += [(lo + margin, hi - margin) for lo, hi in e.gaps]
    windows.append((e.bands[-1][1] + margin, ghi + 1.0))
    found = [eigenvalues_in(diag, off, lo, hi, eig_tol) for lo, hi in windows if hi > lo]
    eigs = np.sort(np.concatenate(found)) if found else np.zeros(0)
    return gap_eigenvalues(eigs, e, margin, (diag, off) if weyl_filter else None, N=N)


def q_sum(report: EigenReport, e: BandSet, q: float) -> float:
    """``sum_k dist(x_k, e)^q`` over the reported eigenvalues."""
    if not q > 0:
        raise ValueError("q must be positive")
    d = np.array([dist_to_bands(x, e) for x in report.outside_eigs])
    return float(math.fsum(d ** q)) if d.size else 0.0


@dataclass(frozen=True)
class VariationalBound:
    """Rayleigh quotient of the trial vector on ``B_m`` and its two parts.

    ``quotient = unperturbed_term + perturbation_term``, each divided by
    ``norm2 = ||phi||^2``.
    """

    m: int
    E: float
    support: tuple
    phi: np.ndarray
    norm2: float
    quotient: float
    perturbation_term: float
    unperturbed_term: float


def trial_vector(base: PeriodicJacobi, m: int, E: float | None = None):
    """Trial vector on ``B_m = [(8m)^2 - m, (8m)^2 + m]`` built from the band-edge solutions.

    Left half: ``v_n - kappa mu_- u_n + (c3/c1) u_n``; right half:
    ``-(v_n - kappa mu_+ u_n) + (c3/c1) u_n``; each rescaled to 1 at the
    centre ``(8m)^2``. Returns ``(n, phi_n, E)``.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    top = bands_of_periodic(base).bands[-1][1]
    if E is None:
        E = top
    elif abs(E - top) > 1e-9:
        raise ValueError(f"E={E} is not the top band edge {top}")
    sol = band_edge_solutions(base, E)
    centre = (8 * m) ** 2
    mu_minus, mu_plus = centre - m, centre + m
    n = np.arange(mu_minus, mu_plus + 1, dtype=np.int64)
    u, v = sol.u(n), sol.v(n)
    shift = sol.c3 / sol.c1
    plus = v - sol.kappa * mu_minus * u + shift * u
    minus = -(v - sol.kappa * mu_plus * u) + shift * u
    k = m  # centre position within n
    plus, minus = plus / plus[k], minus / minus[k]
    phi = np.where(n <= centre, plus, minus)
    return n, phi, float(E)


def quadratic_form(a, b, phi, E):
    """``<phi, (J - E) phi>`` for phi supported on a window with ``a``/``b`` on the same window.

    ``a[i]`` couples ``phi[i]`` and ``phi[i+1]``; ``a`` has one fewer entry than ``phi``.
    """
    return float(math.fsum((b - E) * phi * phi) + 2.0 * math.fsum(a * phi[:-1] * phi[1:]))


def variational_bound(base: PeriodicJacobi, pert: Perturbation, m: int, E: float | None = None) -> VariationalBound:
    """Rayleigh quotient ``<phi, (J - E) phi> / ||phi||^2`` for the trial vector on ``B_m``.

    ``J`` is the perturbed matrix and ``E`` the top band edge of ``base``.
    A positive value places an eigenvalue of ``J`` above ``E`` at distance
    at least that value.
    """
    n, phi, E = trial_vector(base, m, E)
    a, b = JacobiParams(base, pert).coefficients_at(n)
    a0, b0 = base.coefficients(n)
    norm2 = float(math.fsum(phi * phi))
    full = quadratic_form(a[:-1], b, phi, E)
    free = quadratic_form(a0[:-1], b0, phi, E)
    return VariationalBound(int(m), E, (int(n[0]), int(n[-1])), phi, norm2, full / norm2,
                            (full - free) / norm2, free / norm2)
