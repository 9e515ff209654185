"""Asymptotic integration of ``y_{n+1} = (Lambda + A_n) y_n`` with square-summable ``A_n``.

``Lambda`` is diagonal with entries ``lambda_j``. Component indices ``j`` are
1-based throughout, matching the usual ``lambda_1, ..., lambda_d`` labelling.
The second half of the module builds the explicit 2x2 system for the
free background, where the solution recovers ``p_n / p~_n``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import solve_banded

from . import _kernels
from .errors import HypothesisError, SingularStepError
from .perturb import DEFAULT_TAIL_TOL, Perturbation

CHUNK = 1 << 16
DEFAULT_THRESHOLD = _kernels.DEFAULT_THRESHOLD


@dataclass(frozen=True)
class CoffmanSystem:
    """Diagonal ``lam`` and a vectorised provider ``A(n) -> (len(n), d, d)``."""

    lam: tuple
    A: Callable

    def __post_init__(self):
        lam = tuple(complex(v) for v in self.lam)
        if not lam or any(v == 0 for v in lam):
            raise ValueError("lambda entries must be nonzero")
        object.__setattr__(self, "lam", lam)

    @property
    def d(self) -> int:
        return len(self.lam)

    def matrices(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=np.int64)
        A = np.asarray(self.A(n), dtype=complex)
        return np.ascontiguousarray(np.broadcast_to(A, (n.size, self.d, self.d)))

    def ordered(self) -> bool:
        mods = np.abs(self.lam)
        return bool(np.all(np.diff(mods) < 0))


def _check_steps(sys: CoffmanSystem, A: np.ndarray, ns: np.ndarray):
    M = A + np.diag(sys.lam)
    det = np.linalg.det(M)
    bad = np.flatnonzero(np.abs(det) <= 1e-300)
    if bad.size:
        n = int(ns[bad[0]])
        raise SingularStepError(f"Lambda + A_{n} is singular", index=n)


@dataclass(frozen=True)
class Trajectory:
    """``y_n`` at the recorded ``n``; true values are ``y * 2**exp2``."""

    n: np.ndarray
    y: np.ndarray
    exp2: np.ndarray

    @property
    def log_scale(self) -> np.ndarray:
        return self.exp2 * _kernels.LOG2

    def values(self) -> np.ndarray:
        with np.errstate(over="ignore", under="ignore"):
            return np.ldexp(1.0, self.exp2)[:, None] * self.y

    def component_times_power(self, k: int, base: complex, sign: int = 1) -> np.ndarray:
        """``y_{n,k} * base**(sign * n)`` without forming the power itself (``k`` 0-based)."""
        return _times_power(self.y[:, k], self.exp2, self.n, complex(base), sign)


def _unit_power(u: complex, n: np.ndarray) -> np.ndarray:
    # binary powering keeps the phase error at O(log n) roundings
    n = np.asarray(n, dtype=np.int64).copy()
    out = np.ones(n.size, dtype=complex)
    b = u / abs(u)
    while np.any(n):
        out = np.where(n & 1, out * b, out)
        b = b * b
        b /= abs(b)
        n >>= 1
    return out


def _times_power(y, exp2, n, base, sign):
    """``y * 2**exp2 * base**(sign*n)`` with the modulus combined in log form."""
    u = base if sign > 0 else 1 / base
    phase = _unit_power(u, n)
    with np.errstate(divide="ignore", over="ignore", under="ignore"):
        logmag = exp2 * _kernels.LOG2 + sign * n * math.log(abs(base)) + np.log(np.abs(y))
        return np.exp(logmag) * np.exp(1j * np.angle(y)) * phase


def evolve(sys: CoffmanSystem, y1, N: int, checkpoints=None, chunk: int = CHUNK,
           threshold: float = DEFAULT_THRESHOLD) -> Trajectory:
    """Forward evolution from ``y_1`` with one shared power-of-two scale.

    ``checkpoints`` lists the ``n`` in ``[1, N]`` at which ``y_n`` is kept
    (default: only ``N``).

    Raises
    ------
    SingularStepError
        If some ``Lambda + A_n`` is singular.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    y = np.array(y1, dtype=complex).reshape(-1).copy()
    if y.size != sys.d or not np.all(np.isfinite(y)):
        raise ValueError(f"y1 must be a finite vector of length {sys.d}")
    cps = np.unique(np.asarray([N] if checkpoints is None else checkpoints, dtype=np.int64))
    if cps[0] < 1 or cps[-1] > N:
        raise ValueError("checkpoints must lie in [1, N]")
    lam = np.array(sys.lam)
    rec_y = np.empty((cps.size, sys.d), dtype=complex)
    rec_exp = np.zeros(cps.size, dtype=np.int64)
    pos = 0
    if cps[0] == 1:
        rec_y[0], pos = y, 1
    scale_exp = 0
    n = 1
    while n < N:
        m = min(n + chunk, N)
        ns = np.arange(n, m, dtype=np.int64)
        A = sys.matrices(ns)
        _check_steps(sys, A, ns)
        # chunk position i produces y_{ns[i] + 1}
        target = cps[(cps > n) & (cps <= m)]
        idx = (target - 1 - n).astype(np.int64)
        y, scale_exp, pos = _kernels.evolve_chunk(lam, A, y, scale_exp, threshold, idx, rec_y, rec_exp, pos)
        n = m
    return Trajectory(cps, rec_y, rec_exp)


@dataclass(frozen=True)
class GammaValue:
    log_abs: float
    phase: float

    @property
    def value(self) -> complex:
        return cmath.rect(math.exp(self.log_abs), self.phase)


def _diag_factors(sys: CoffmanSystem, j: int, ns: np.ndarray) -> np.ndarray:
    f = sys.lam[j - 1] + sys.matrices(ns)[:, j - 1, j - 1]
    bad = np.flatnonzero(f == 0)
    if bad.size:
        k = int(ns[bad[0]])
        raise SingularStepError(f"lambda_{j} + (A_{k})_jj vanishes; raise n0 above {k}", index=k)
    return f


def gamma_product(sys: CoffmanSystem, j: int, n: int, n0: int = 1, chunk: int = CHUNK) -> GammaValue:
    """``prod_{k=n0}^{n-1} (lambda_j + (A_k)_jj)`` as log-modulus and phase.

    Raises
    ------
    SingularStepError
        With ``index`` set to the first ``k`` whose factor vanishes.
    """
    _check_index(sys, j)
    log_abs, phase = 0.0, 0.0
    for start in range(n0, n, chunk):
        ns = np.arange(start, min(start + chunk, n), dtype=np.int64)
        f = _diag_factors(sys, j, ns)
        log_abs += math.fsum(np.log(np.abs(f)))
        phase = math.remainder(phase + math.fsum(np.angle(f)), 2 * math.pi)
    return GammaValue(log_abs, phase)


def _check_index(sys, j):
    if not 1 <= j <= sys.d:
        raise ValueError(f"component index j={j} outside 1..{sys.d}")


@dataclass(frozen=True)
class ProfileSolution:
    """Solution whose normalised profile ``w_n = y_n / gamma_j(n)`` tends to ``e_j``.

    ``w`` holds ``w_1..w_H`` (row ``n - 1``); ``deviation`` and
    ``off_diagonal`` are ``|w_{n,j} - 1|`` and ``max_{k != j} |w_{n,k}|`` at
    the checkpoints ``n``.
    """

    j: int
    y1: np.ndarray
    horizon: int
    w: np.ndarray
    n: np.ndarray
    deviation: np.ndarray
    off_diagonal: np.ndarray

    def residual(self) -> np.ndarray:
        return np.maximum(self.deviation, self.off_diagonal)


def find_profile_solution(sys: CoffmanSystem, j: int, N_horizon: int, checkpoints=None) -> ProfileSolution:
    """Initial vector of the solution asymptotic to ``gamma_j(n) e_j``.

    Solves the two-point problem for ``w_n`` on ``1 <= n <= N_horizon``:
    components slower than ``lambda_j`` are pinned to 0 at ``n = 1``; at
    ``n = N_horizon`` component ``j`` is pinned to 1 and faster ones to 0.
    Plain backward shooting amplifies round-off in the slower components
    by ``|lambda_j / lambda_k|^n``, which the banded global solve avoids.

    Raises
    ------
    HypothesisError
        If ``|lambda_k| = |lambda_j|`` for some ``k != j``, or if the
        residual grows over the checkpoints (default ``H/64, H/16, H/4``).
    SingularStepError
        If ``lambda_j + (A_n)_jj`` vanishes.
    """
    _check_index(sys, j)
    d, H = sys.d, int(N_horizon)
    if H < 4:
        raise ValueError("N_horizon must be at least 4")
    mods = np.abs(sys.lam)
    jj = j - 1
    if any(k != jj and math.isclose(mods[k], mods[jj], rel_tol=1e-14) for k in range(d)):
        raise HypothesisError(f"|lambda_{j}| is not separated from the other moduli")
    slow = [k for k in range(d) if mods[k] < mods[jj]]
    fast = [k for k in range(d) if mods[k] > mods[jj]]
    s = len(slow)

    rows, cols, vals = [], [], []
    for i, k in enumerate(slow):
        rows.append(np.array([i])), cols.append(np.array([k])), vals.append(np.array([1.0 + 0j]))
    for start in range(1, H, CHUNK):
        ns = np.arange(start, min(start + CHUNK, H), dtype=np.int64)
        A = sys.matrices(ns)
        f = _diag_factors(sys, j, ns)
        M = (A + np.diag(sys.lam)) / f[:, None, None]
        base = s + (ns - 1)[:, None, None] * d
        p = np.arange(d)[None, :, None]
        q = np.arange(d)[None, None, :]
        r = np.broadcast_to(base + p, M.shape)
        rows.append(r.ravel()), cols.append(np.broadcast_to((ns - 1)[:, None, None] * d + q, M.shape).ravel())
        vals.append(-M.ravel())
        r1 = (base[:, :, 0] + np.arange(d)[None, :]).ravel()
        rows.append(r1), cols.append(np.repeat(ns * d, d) + np.tile(np.arange(d), ns.size))
        vals.append(np.ones(r1.size, dtype=complex))
    end = s + (H - 1) * d
    rhs = np.zeros(H * d, dtype=complex)
    for t, k in enumerate([jj] + fast):
        rows.append(np.array([end + t])), cols.append(np.array([(H - 1) * d + k])), vals.append(np.array([1.0 + 0j]))
    rhs[end] = 1.0
    rows, cols, vals = (np.concatenate(v) for v in (rows, cols, vals))
    lower, upper = int(np.max(rows - cols)), int(np.max(cols - rows))
    ab = np.zeros((lower + upper + 1, H * d), dtype=complex)
    np.add.at(ab, (upper + rows - cols, cols), vals)
    w = solve_banded((max(lower, 0), max(upper, 0)), ab, rhs).reshape(H, d)

    cps = np.unique(np.asarray(checkpoints if checkpoints is not None else [H // 64, H // 16, H // 4], dtype=np.int64))
    cps = cps[(cps >= 1) & (cps <= H)]
    wc = w[cps - 1]
    dev = np.abs(wc[:, jj] - 1.0)
    others = np.delete(wc, jj, axis=1)
    off = np.max(np.abs(others), axis=1) if d > 1 else np.zeros(cps.size)
    res = np.maximum(dev, off)
    if res.size >= 2 and res[-1] > res[0] and res[-1] > 1e-10:
        raise HypothesisError(f"profile residual grows from {res[0]:.3g} to {res[-1]:.3g}")
    return ProfileSolution(j, w[0].copy(), H, w, cps, dev, off)


@dataclass(frozen=True)
class Classification:
    j: int
    c: complex
    others: np.ndarray
    window: tuple
    diag_tails: np.ndarray
    l2_tail: float


def _cauchy_tails(sys: CoffmanSystem, C: int, chunk: int = CHUNK):
    """``|sum_{C < n <= 2C} (A_n)_jj|`` per j and the same for ``||A_n||_F^2``."""
    d = sys.d
    diag = np.zeros(d, dtype=complex)
    sq = []
    for start in range(C + 1, 2 * C + 1, chunk):
        ns = np.arange(start, min(start + chunk, 2 * C + 1), dtype=np.int64)
        A = sys.matrices(ns)
        diag += np.einsum("nii->i", A)
        sq.append(np.sum(np.abs(A) ** 2))
    return np.abs(diag), float(math.fsum(sq))


def classify_solution(sys: CoffmanSystem, y1, N: int, diag_sum_checkpoints=None,
                      tail_tol: float = DEFAULT_TAIL_TOL) -> Classification:
    """Dominant index ``j`` and ``c_j = lim y_{n,j} / lambda_j^n``.

    ``j`` is the component of largest modulus at ``n = N`` and ``c_j`` is the
    mean of ``y_{n,j} / lambda_j^n`` over ``N/2 <= n <= N``. Before
    classifying, the diagonal sums ``sum (A_n)_jj`` and ``sum ||A_n||^2`` must
    pass the Cauchy test between ``C`` and ``2C`` for the largest checkpoint
    ``C`` (default ``N // 2``).

    Raises
    ------
    HypothesisError
        If the moduli are not strictly decreasing or a Cauchy test fails.
    """
    if not sys.ordered():
        raise HypothesisError("|lambda_1| > ... > |lambda_d| is required")
    cps = [N // 2] if diag_sum_checkpoints is None else list(diag_sum_checkpoints)
    C = int(max(cps))
    diag_tails, l2_tail = _cauchy_tails(sys, C)
    if np.any(diag_tails >= tail_tol) or l2_tail >= tail_tol:
        raise HypothesisError(
            f"Cauchy test failed at N={C}: diagonal tails {np.round(diag_tails, 6).tolist()}, "
            f"square-sum tail {l2_tail:.3g} (tail_tol {tail_tol})")
    lo = max(N // 2, 1)
    tr = evolve(sys, y1, N, checkpoints=np.arange(lo, N + 1))
    last = tr.y[-1]
    if not np.any(last):
        raise ValueError("trajectory vanishes identically")
    j = int(np.argmax(np.abs(last))) + 1
    lj = sys.lam[j - 1]
    c = complex(np.mean(tr.component_times_power(j - 1, lj, -1)))
    L = tr.log_scale[-1] - N * math.log(abs(lj))
    others = np.array([abs(last[k]) * math.exp(L) for k in range(sys.d) if k != j - 1])
    return Classification(j, c, others, (lo, N), diag_tails, l2_tail)


@dataclass(frozen=True)
class FreeCaseAssembly:
    """Explicit 2x2 system for the free background at ``x = z + 1/z``.

    ``B = z``, ``u~_n = z^n`` and ``Lambda = diag(1/z, z)``. The state is
    ``y_n = (phi_{n-1}, psi_{n-1})`` with ``y_1 = (1, 0)``.
    """

    pert: Perturbation
    z: complex
    N: int
    det_deviation: float

    @property
    def x(self) -> complex:
        return self.z + 1 / self.z

    def _powers(self, n):
        # z^{2n} underflows to 0 for large n, which is the correct limit
        n = np.asarray(n, dtype=np.int64)
        return _times_power(np.ones(n.size, dtype=complex), np.zeros(n.size, dtype=np.int64), 2 * n, self.z, 1)

    def R(self, n) -> np.ndarray:
        """``R_n`` for ``n >= 0``; columns are ``B^n (p~_n, p~_{n-1})`` and
        ``B^{-n} (u~_{n+1}, u~_n)``."""
        n = np.atleast_1d(np.asarray(n, dtype=np.int64))
        z = self.z
        z2n = self._powers(n)
        out = np.empty((n.size, 2, 2), dtype=complex)
        out[:, 0, 0] = (1 - z2n * z * z) / (1 - z * z)
        out[:, 0, 1] = z
        out[:, 1, 0] = z * (1 - z2n) / (1 - z * z)
        out[:, 1, 1] = 1.0
        return out

    def R_inv(self, n) -> np.ndarray:
        R = self.R(n)
        det = R[:, 0, 0] * R[:, 1, 1] - R[:, 0, 1] * R[:, 1, 0]
        out = np.empty_like(R)
        out[:, 0, 0], out[:, 1, 1] = R[:, 1, 1], R[:, 0, 0]
        out[:, 0, 1], out[:, 1, 0] = -R[:, 0, 1], -R[:, 1, 0]
        return out / det[:, None, None]

    def coefficients(self, n):
        n = np.atleast_1d(np.asarray(n, dtype=np.int64))
        return 1.0 + self.pert.at("a", n), self.pert.at("b", n)

    def Q(self, n) -> np.ndarray:
        """``Q_n`` from the product of the free inverse step and the perturbed step, minus I."""
        n = np.atleast_1d(np.asarray(n, dtype=np.int64))
        a, b = self.coefficients(n)
        x = self.x
        inv_free = np.zeros((n.size, 2, 2), dtype=complex)
        inv_free[:, 0, 1] = 1.0
        inv_free[:, 1, 0] = -1.0
        inv_free[:, 1, 1] = x
        step = np.zeros((n.size, 2, 2), dtype=complex)
        step[:, 0, 0] = x - b
        step[:, 0, 1] = -1.0
        step[:, 1, 0] = a * a
        return inv_free @ step / a[:, None, None] - np.eye(2)

    def Q_closed(self, n) -> np.ndarray:
        """Entrywise closed form of ``Q_n`` (free background: ``a~ = 1``, ``b~ = 0``)."""
        n = np.atleast_1d(np.asarray(n, dtype=np.int64))
        a, b = self.coefficients(n)
        da, db = a - 1.0, b
        out = np.zeros((n.size, 2, 2), dtype=complex)
        out[:, 0, 0] = a * da
        out[:, 1, 0] = (a + 1.0) * self.x * da + db
        out[:, 1, 1] = -da
        return out / a[:, None, None]

    def A(self, n) -> np.ndarray:
        n = np.atleast_1d(np.asarray(n, dtype=np.int64))
        R = self.R(n - 1)
        M = self.R_inv(n - 1) @ self.Q(n) @ R
        M[:, 0, :] /= self.z
        M[:, 1, :] *= self.z
        return M

    def system(self) -> CoffmanSystem:
        return CoffmanSystem((1 / self.z, self.z), self.A)

    def square_norm_tail(self, N: int) -> tuple:
        """``(sum_{n <= N} ||A_n||_F^2, sum_{N < n <= 2N} ||A_n||_F^2)``."""
        head, tail = [], []
        for start in range(1, 2 * N + 1, CHUNK):
            ns = np.arange(start, min(start + CHUNK, 2 * N + 1), dtype=np.int64)
            sq = np.sum(np.abs(self.A(ns)) ** 2, axis=(1, 2))
            head.append(sq[ns <= N])
            tail.append(sq[ns > N])
        return math.fsum(np.concatenate(head)), math.fsum(np.concatenate(tail))


def assemble_free_case(pert: Perturbation, z: complex, N: int) -> FreeCaseAssembly:
    """Build the free-background system at ``z`` and check ``det R_n`` for ``n <= N``.

    Raises
    ------
    ValueError
        If ``|z|`` is not in ``(0, 1)`` or ``z`` is real (then ``z + 1/z`` is real).
    """
    z = complex(z)
    if not 0 < abs(z) < 1:
        raise ValueError("need 0 < |z| < 1")
    if z.imag == 0:
        raise ValueError("z + 1/z must be off the real axis")
    asm = FreeCaseAssembly(pert, z, int(N), 0.0)
    dev = 0.0
    for start in range(0, N + 1, CHUNK):
        R = asm.R(np.arange(start, min(start + CHUNK, N + 1)))
        det = R[:, 0, 0] * R[:, 1, 1] - R[:, 0, 1] * R[:, 1, 0]
        dev = max(dev, float(np.max(np.abs(det - 1.0))))
    return FreeCaseAssembly(pert, z, int(N), dev)


@dataclass(frozen=True)
class DiagonalSumReport:
    N: np.ndarray
    sums: np.ndarray
    tails: np.ndarray
    converged: bool
    identity_residual: float


def diagonal_sum_check(asm: FreeCaseAssembly, checkpoints=(10**3, 10**4, 10**5, 10**6),
                       tail_tol: float = DEFAULT_TAIL_TOL) -> DiagonalSumReport:
    """Partial sums of ``(A_n)_11`` and ``(A_n)_22`` with Cauchy tails at the last checkpoint.

    Also checks the per-``n`` identity
    ``(A_n)_22 / z = (delta a_n)^2 / a_n - z (A_n)_11`` and reports its
    largest residual. ``sums`` has shape ``(len(checkpoints), 2)``.
    """
    cps = np.asarray(checkpoints, dtype=np.int64)
    Nmax = int(cps[-1])
    allcp = np.concatenate([cps, [2 * Nmax]])
    vals = np.empty((2 * Nmax, 2), dtype=complex)
    ident = 0.0
    z = asm.z
    for start in range(1, 2 * Nmax + 1, CHUNK):
        ns = np.arange(start, min(start + CHUNK, 2 * Nmax + 1), dtype=np.int64)
        A = asm.A(ns)
        vals[ns - 1, 0] = A[:, 0, 0]
        vals[ns - 1, 1] = A[:, 1, 1]
        a, _ = asm.coefficients(ns)
        lhs = A[:, 1, 1] / z
        rhs = (a - 1.0) ** 2 / a - z * A[:, 0, 0]
        ident = max(ident, float(np.max(np.abs(lhs - rhs))))
    sums = np.stack([_kernels.compensated_partial_sums(np.ascontiguousarray(vals[:, c]), allcp)
                     for c in range(2)], axis=1)
    tails = np.abs(sums[-1] - sums[-2])
    return DiagonalSumReport(cps, sums[:-1], tails, bool(np.all(tails < tail_tol)), ident)


@dataclass(frozen=True)
class PhiPsiReport:
    N: int
    c1: complex
    c1_window_mean: complex
    n: np.ndarray
    B_phi: np.ndarray
    B_psi: np.ndarray
    ratio: np.ndarray
    ratio_direct: np.ndarray | None
    ratio_mismatch: float | None


def phi_psi_limit_check(asm: FreeCaseAssembly, pert: Perturbation | None = None, N: int | None = None,
                        samples: int = 64, cross_check: bool = True) -> PhiPsiReport:
    """Evolve ``(phi_n, psi_n)`` and check ``z^n (phi_n, psi_n) -> (c_1, 0)``.

    ``c1`` is ``z^N phi_N``; ``c1_window_mean`` averages over ``N/2..N``.
    ``ratio`` rebuilds ``p_n / p~_n`` from ``(phi_n, psi_n)`` at geometric
    sample points, and with ``cross_check`` it is compared to the direct
    recurrence (relative mismatch reported).

    Raises
    ------
    RuntimeError
        If ``z^N phi_N`` collapses while the solution survives, i.e. the
        run looks like the excluded alternative where ``p_n`` would decay.
    """
    N = int(N if N is not None else asm.N)
    pert = pert if pert is not None else asm.pert
    z = asm.z
    lo = max(N // 2, 1)
    geo = np.unique(np.geomspace(1, N, samples).astype(np.int64))
    ns = np.unique(np.concatenate([geo, np.arange(lo, N + 1)]))
    tr = evolve(asm.system(), (1.0, 0.0), N + 1, checkpoints=ns + 1)
    # row i of the trajectory is y_{n+1} = (phi_n, psi_n)
    Bphi = _times_power(tr.y[:, 0], tr.exp2, ns, z, 1)
    Bpsi = _times_power(tr.y[:, 1], tr.exp2, ns, z, 1)
    c1 = complex(Bphi[-1])
    scale = max(abs(c1), float(np.max(np.abs(Bpsi[-8:]))))
    if abs(c1) < 1e-8 * max(scale, 1e-300) or abs(c1) == 0:
        raise RuntimeError("z^n phi_n collapses: solution follows the decaying alternative")
    z2 = asm._powers(ns + 1)
    ratio = Bphi + z * (1 - z * z) / (1 - z2) * Bpsi
    sel = np.isin(ns, geo)
    direct, mismatch = None, None
    if cross_check:
        from .oprl import JacobiParams, ratio_trace

        tr2 = ratio_trace(JacobiParams.free(), JacobiParams.free(pert), asm.x, N, 1)
        direct = tr2.r[ns[sel] - 1]
        mismatch = float(np.max(np.abs(ratio[sel] / direct - 1)))
    win = ns >= lo
    return PhiPsiReport(N, c1, complex(np.mean(Bphi[win])), ns[sel], Bphi[sel], Bpsi[sel], ratio[sel],
                        direct, mismatch)


def random_decaying_system(rng: np.random.Generator, d: int | None = None, decay: float = 1.2,
                           min_gap: float = 0.2) -> CoffmanSystem:
    """Random system with strictly separated moduli and ``||A_n||_F <= n^-decay``.

    ``A_n = (-1)^n n^-decay C`` for a fixed complex ``C`` with ``||C||_F = 1``.
    Moduli lie in ``[0.3, 3]`` with consecutive gaps of at least ``min_gap``;
    ``d`` defaults to a random choice in ``{2, 3}``.
    """
    d = int(rng.integers(2, 4)) if d is None else int(d)
    while True:
        mods = np.sort(rng.uniform(0.3, 3.0, d))[::-1]
        if d == 1 or np.min(-np.diff(mods)) >= min_gap:
            break
    lam = mods * np.exp(2j * np.pi * rng.uniform(size=d))
    C = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    C /= np.linalg.norm(C)

    def A(n):
        n = np.asarray(n)
        s = np.where(n % 2 == 0, 1.0, -1.0) * n.astype(float) ** -decay
        return s[:, None, None] * C[None, :, :]

    return CoffmanSystem(tuple(complex(v) for v in lam), A)
