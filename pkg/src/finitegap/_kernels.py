"""Compiled inner loops.

Everything here works on plain numpy arrays so the public modules can stay
readable. Rescaling always multiplies by an exact power of two, which keeps
ratios of jointly rescaled quantities bit-identical to the unscaled ones.
"""

import math

import numpy as np
from numba import njit

LOG2 = math.log(2.0)
DEFAULT_THRESHOLD = 2.0**512


@njit(cache=True)
def _pow2_exponent(m):
    # exponent e with m = f * 2**e, 0.5 <= f < 1
    return math.frexp(m)[1]


@njit(cache=True)
def three_term(a, b, x, threshold, record):
    """Run a_n p_n = (x - b_n) p_{n-1} - a_{n-1} p_{n-2} for n = 1..N.

    ``a[n-1]``, ``b[n-1]`` hold a_n, b_n; a_0 is taken as 1 (it multiplies
    p_{-1} = 0). Returns ``(p_{N-1}, p_N, log_scale, values, logs)`` where the
    true values are the scaled ones times ``exp(log_scale)``. When ``record``
    is true, ``values[n]``/``logs[n]`` hold the scaled p_n and its log scale
    for n = 0..N; otherwise they are empty.
    """
    N = a.shape[0]
    p_prev = 0.0 + 0.0j
    p_cur = 1.0 + 0.0j
    a_prev = 1.0
    scale_exp = 0
    lo = 1.0 / threshold
    if record:
        values = np.empty(N + 1, dtype=np.complex128)
        logs = np.empty(N + 1)
        values[0] = p_cur
        logs[0] = 0.0
    else:
        values = np.empty(0, dtype=np.complex128)
        logs = np.empty(0)
    for i in range(N):
        an = a[i]
        if not an > 0.0:
            raise ValueError("non-positive off-diagonal coefficient")
        p_next = ((x - b[i]) * p_cur - a_prev * p_prev) / an
        p_prev = p_cur
        p_cur = p_next
        a_prev = an
        m = max(abs(p_prev), abs(p_cur))
        if m != m:
            raise FloatingPointError("NaN in three-term recurrence")
        if m > threshold or (m < lo and m > 0.0):
            e = _pow2_exponent(m)
            f = math.ldexp(1.0, -e)
            p_prev *= f
            p_cur *= f
            scale_exp += e
        if record:
            values[i + 1] = p_cur
            logs[i + 1] = scale_exp * LOG2
    return p_prev, p_cur, scale_exp * LOG2, values, logs


@njit(cache=True)
def ratio_recurrence(a0, b0, a1, b1, x, stride, threshold):
    """Joint evolution of the base (0) and perturbed (1) recurrences.

    Both pairs share one power-of-two scale. Samples r_n = p_n / p~_n at
    n = stride, 2*stride, ... <= N. Returns (ns, r, log_abs_base).
    """
    N = a0.shape[0]
    count = N // stride
    ns = np.empty(count, dtype=np.int64)
    rs = np.empty(count, dtype=np.complex128)
    logs = np.empty(count)
    q_prev = 0.0 + 0.0j
    q_cur = 1.0 + 0.0j
    p_prev = 0.0 + 0.0j
    p_cur = 1.0 + 0.0j
    a0_prev = 1.0
    a1_prev = 1.0
    scale_exp = 0
    lo = 1.0 / threshold
    k = 0
    for i in range(N):
        if not a1[i] > 0.0 or not a0[i] > 0.0:
            raise ValueError("non-positive off-diagonal coefficient")
        q_next = ((x - b0[i]) * q_cur - a0_prev * q_prev) / a0[i]
        p_next = ((x - b1[i]) * p_cur - a1_prev * p_prev) / a1[i]
        q_prev = q_cur
        q_cur = q_next
        p_prev = p_cur
        p_cur = p_next
        a0_prev = a0[i]
        a1_prev = a1[i]
        m = max(max(abs(q_prev), abs(q_cur)), max(abs(p_prev), abs(p_cur)))
        if m != m:
            raise FloatingPointError("NaN in ratio recurrence")
        if m > threshold or (m < lo and m > 0.0):
            e = _pow2_exponent(m)
            f = math.ldexp(1.0, -e)
            q_prev *= f
            q_cur *= f
            p_prev *= f
            p_cur *= f
            scale_exp += e
        n = i + 1
        if n % stride == 0 and k < count:
            if q_cur == 0.0:
                raise ZeroDivisionError("base polynomial vanished")
            ns[k] = n
            rs[k] = p_cur / q_cur
            logs[k] = scale_exp * LOG2 + math.log(abs(q_cur))
            k += 1
    return ns, rs, logs


@njit(cache=True)
def _neumaier_add(s, c, v):
    t = s + v
    if abs(s) >= abs(v):
        c += (s - t) + v
    else:
        c += (v - t) + s
    return t, c


@njit(cache=True)
def twisted_partial_sums(delta, x, checkpoints):
    """Compensated partial sums of exp(2 pi i x n) delta_n, n = 1..N.

    ``delta[n-1]`` holds delta_n. For each checkpoint N_k returns S_{N_k} and
    sup_{M <= N_k} |S_M|.
    """
    K = checkpoints.shape[0]
    sums = np.empty(K, dtype=np.complex128)
    sups = np.empty(K)
    sr = 0.0
    cr = 0.0
    si = 0.0
    ci = 0.0
    sup = 0.0
    k = 0
    N = checkpoints[K - 1]
    for i in range(N):
        n = i + 1
        d = delta[i]
        if x == 0.0:
            vr = d
            vi = 0.0
        else:
            t = x * n
            t -= math.floor(t)
            ang = 2.0 * math.pi * t
            vr = d * math.cos(ang)
            vi = d * math.sin(ang)
        sr, cr = _neumaier_add(sr, cr, vr)
        si, ci = _neumaier_add(si, ci, vi)
        mag = math.hypot(sr + cr, si + ci)
        if mag > sup:
            sup = mag
        while k < K and checkpoints[k] == n:
            sums[k] = complex(sr + cr, si + ci)
            sups[k] = sup
            k += 1
    return sums, sups


@njit(cache=True)
def compensated_partial_sums(values, checkpoints):
    """Neumaier partial sums of a complex sequence at the given counts."""
    K = checkpoints.shape[0]
    out = np.empty(K, dtype=np.complex128)
    sr = 0.0
    cr = 0.0
    si = 0.0
    ci = 0.0
    k = 0
    N = checkpoints[K - 1]
    for i in range(N):
        v = values[i]
        sr, cr = _neumaier_add(sr, cr, v.real)
        si, ci = _neumaier_add(si, ci, v.imag)
        while k < K and checkpoints[k] == i + 1:
            out[k] = complex(sr + cr, si + ci)
            k += 1
    return out


@njit(cache=True)
def evolve_chunk(lam, A, y, scale_exp, threshold, record_idx, rec_y, rec_exp, rec_pos):
    """Apply y <- (diag(lam) + A[i]) y for each step of a chunk.

    ``record_idx`` lists chunk positions *after* which y is stored into
    ``rec_y[rec_pos]``. The scale is kept as an integer power of two so it
    never picks up rounding. Returns the updated (y, scale_exp, rec_pos).
    """
    d = lam.shape[0]
    steps = A.shape[0]
    tmp = np.empty(d, dtype=np.complex128)
    lo = 1.0 / threshold
    r = 0
    R = record_idx.shape[0]
    for i in range(steps):
        for p in range(d):
            acc = lam[p] * y[p]
            for q in range(d):
                acc += A[i, p, q] * y[q]
            tmp[p] = acc
        m = 0.0
        for p in range(d):
            y[p] = tmp[p]
            v = abs(tmp[p])
            if v > m:
                m = v
        if m != m:
            raise FloatingPointError("NaN in evolution")
        if m > threshold or (m < lo and m > 0.0):
            e = _pow2_exponent(m)
            f = math.ldexp(1.0, -e)
            for p in range(d):
                y[p] *= f
            scale_exp += e
        while r < R and record_idx[r] == i:
            for p in range(d):
                rec_y[rec_pos, p] = y[p]
            rec_exp[rec_pos] = scale_exp
            rec_pos += 1
            r += 1
    return y, scale_exp, rec_pos


@njit(cache=True)
def sturm_counts(diag, off2, shifts, pivmin):
    """Number of eigenvalues strictly below each shift (LDL^T inertia)."""
    S = shifts.shape[0]
    N = diag.shape[0]
    q = np.empty(S)
    counts = np.zeros(S, dtype=np.int64)
    for s in range(S):
        v = diag[0] - shifts[s]
        if abs(v) < pivmin:
            v = -pivmin
        q[s] = v
        if v < 0.0:
            counts[s] += 1
    for i in range(1, N):
        di = diag[i]
        ei = off2[i - 1]
        for s in range(S):
            v = di - shifts[s] - ei / q[s]
            if abs(v) < pivmin:
                v = -pivmin
            q[s] = v
            if v < 0.0:
                counts[s] += 1
    return counts


@njit(cache=True)
def bisect_eigenvalues(diag, off2, lo, hi, tol, pivmin):
    """All eigenvalues in [lo, hi) by level-synchronous Sturm bisection.

    Every level bisects all live intervals at once so one sweep over the
    matrix serves many shifts.
    """
    bounds = np.array([lo, hi])
    c = sturm_counts(diag, off2, bounds, pivmin)
    total = c[1] - c[0]
    out = np.empty(max(total, 0))
    if total <= 0:
        return out
    L = np.array([lo])
    U = np.array([hi])
    cL = np.array([c[0]])
    cU = np.array([c[1]])
    found = 0
    while L.shape[0] > 0:
        n_live = L.shape[0]
        mids = 0.5 * (L + U)
        cm = sturm_counts(diag, off2, mids, pivmin)
        nL = np.empty(2 * n_live)
        nU = np.empty(2 * n_live)
        ncL = np.empty(2 * n_live, dtype=np.int64)
        ncU = np.empty(2 * n_live, dtype=np.int64)
        k = 0
        for j in range(n_live):
            for side in range(2):
                if side == 0:
                    a, b, ca, cb = L[j], mids[j], cL[j], cm[j]
                else:
                    a, b, ca, cb = mids[j], U[j], cm[j], cU[j]
                if cb <= ca:
                    continue
                if b - a <= tol:
                    for _ in range(cb - ca):
                        out[found] = 0.5 * (a + b)
                        found += 1
                    continue
                nL[k] = a
                nU[k] = b
                ncL[k] = ca
                ncU[k] = cb
                k += 1
        L = nL[:k].copy()
        U = nU[:k].copy()
        cL = ncL[:k].copy()
        cU = ncU[:k].copy()
    return np.sort(out[:found])


@njit(cache=True)
def twisted_eigenvector(diag, off, lam, pivmin):
    """Eigenvector of a symmetric tridiagonal at a converged eigenvalue.

    Uses forward and backward LDL^T sweeps and the twist index where the
    diagonal of the inverse is largest; the result has unit max-entry.
    """
    N = diag.shape[0]
    dp = np.empty(N)
    dm = np.empty(N)
    v = diag[0] - lam
    if abs(v) < pivmin:
        v = pivmin
    dp[0] = v
    for i in range(1, N):
        v = diag[i] - lam - off[i - 1] * off[i - 1] / dp[i - 1]
        if abs(v) < pivmin:
            v = pivmin
        dp[i] = v
    v = diag[N - 1] - lam
    if abs(v) < pivmin:
        v = pivmin
    dm[N - 1] = v
    for i in range(N - 2, -1, -1):
        v = diag[i] - lam - off[i] * off[i] / dm[i + 1]
        if abs(v) < pivmin:
            v = pivmin
        dm[i] = v
    r = 0
    best = np.inf
    for i in range(N):
        g = abs(dp[i] + dm[i] - (diag[i] - lam))
        if g < best:
            best = g
            r = i
    x = np.zeros(N)
    x[r] = 1.0
    for i in range(r - 1, -1, -1):
        x[i] = -off[i] * x[i + 1] / dp[i]
        if x[i] == 0.0:
            break
    for i in range(r + 1, N):
        x[i] = -off[i - 1] * x[i - 1] / dm[i]
        if x[i] == 0.0:
            break
    return x
