"""Acceptance criteria, one test each, at the stated tolerances.

Each test prints a single ``PASS``/``FAIL`` line before asserting. Run with
``pytest -s tests/test_acceptance.py`` to see them.
"""

import math
import time

import numpy as np

from finitegap import _kernels
from finitegap.bandset import equilibrium_measure, make_band_set
from finitegap.coffman import (CoffmanSystem, assemble_free_case, classify_solution, diagonal_sum_check, evolve,
                               find_profile_solution, gamma_product, phi_psi_limit_check, random_decaying_system)
from finitegap.eigens import outside_spectrum, q_sum, variational_bound
from finitegap.oprl import (JacobiParams, detect_szego_limit, free_closed_form, polynomial_values, ratio_trace,
                            window_oscillation)
from finitegap.perturb import check_condition_b, check_condition_c, make_perturbation, sequence_norms
from finitegap.torus import PeriodicJacobi, bands_of_periodic, periodic_harmonic_measures

P2 = PeriodicJacobi((1.0, 2.0), (0.0, 0.0))
P3 = PeriodicJacobi((1.0, 1.5, 0.7), (0.3, -0.5, 1.0))
FREE = PeriodicJacobi.free()
OMEGA = math.sqrt(2) - 1


def verdict(k, ok, detail):
    print(f"\n{'PASS' if ok else 'FAIL'} criterion {k}: {detail}")
    assert ok, detail


def test_criterion_1_free_closed_form():
    t0 = time.perf_counter()
    worst = 0.0
    for x in (2.5, 1j, 1 + 1j, 0.3 - 2j):
        vals, logs = polynomial_values(JacobiParams.free(), x, 100)
        ref = np.array([free_closed_form(x, n) for n in range(101)])
        worst = max(worst, float(np.max(np.abs(vals * np.exp(logs) / ref - 1))))
    dt = time.perf_counter() - t0
    verdict(1, worst < 1e-9 and dt < 1, f"max rel dev {worst:.2e}, {dt:.2f}s")


def test_criterion_2_potential_theory():
    t0 = time.perf_counter()
    e = bands_of_periodic(P2)
    band_err = float(np.max(np.abs(np.array(e.bands) - [[-3, -1], [1, 3]])))
    m = equilibrium_measure(e)
    hm_err = abs(m.harmonic_measures[0] - 0.5)
    rule = periodic_harmonic_measures(P2) == [0.5]
    mass_err = abs(m.mass - 1)
    res = max(abs(r) for r in m.gap_residuals)
    free = equilibrium_measure(make_band_set([(-2, 2)]))
    x = np.linspace(-2, 2, 2001)[1:-1]
    arcsine = 1 / (np.pi * np.sqrt(4 - x * x))
    dens_err = float(np.max(np.abs(free.density(x) - arcsine)))
    dt = time.perf_counter() - t0
    ok = band_err <= 1e-10 and hm_err <= 1e-8 and rule and mass_err <= 1e-10 and res <= 1e-10
    ok = ok and dens_err <= 1e-8 and dt < 5
    verdict(2, ok, f"bands {band_err:.1e}, omega {hm_err:.1e}, mass {mass_err:.1e}, gap residual {res:.1e}, "
                   f"arcsine {dens_err:.1e}, {dt:.2f}s")


def test_criterion_3_szego_limits():
    cells = [("example1/period-2", P2, make_perturbation("example1", 0.8, OMEGA)),
             ("example2/free", FREE, make_perturbation("example2", 0.8)),
             ("example2/period-2", P2, make_perturbation("example2", 0.8))]
    ok, lines = True, []
    for name, base, p in cells:
        for x in (1j, 1 + 1j):
            t0 = time.perf_counter()
            tr = ratio_trace(JacobiParams(base), JacobiParams(base, p), x, 10**6, 1)
            v = detect_szego_limit(tr)
            dt = time.perf_counter() - t0
            shrink = window_oscillation(tr, 5000, 10**4) / window_oscillation(tr, 5 * 10**5, 10**6)
            # the fitted exponent is the slope of log(oscillation) against log(n); decay means negative
            good = v.converged and shrink >= 3 and -v.decay_exponent > 0.2 and dt < 60
            ok = ok and good
            lines.append(f"{name} x={x}: {v.status}, shrink {shrink:.1f}x, decay {-v.decay_exponent:.2f}, {dt:.1f}s")
    verdict(3, ok, "; ".join(lines))


def test_criterion_4_hypothesis_checks():
    t0 = time.perf_counter()
    p = make_perturbation("example2", 0.8)
    s5, s6 = sequence_norms(p, 10**5), sequence_norms(p, 10**6)
    l2_ok = abs(s6.l2 - s5.l2) < 1e-3 * s6.l2
    slope_ok = abs(s6.l1_slope - 0.2) <= 0.05
    parts = [f"l2 step {abs(s6.l2 - s5.l2) / s6.l2:.1e}", f"l1 slope {s6.l1_slope:.3f}"]
    ok = l2_ok and slope_ok
    for name, base in (("period-2", P2), ("period-3", P3)):
        m = equilibrium_measure(bands_of_periodic(base))
        b = check_condition_b(p, m, 3, tail_tol=5e-3)
        c = check_condition_c(p, m, 3, 10**6)
        ok = ok and b.all_converged and c.bounded
        parts.append(f"{name}: {len(b.verdicts)} sums converged={b.all_converged} "
                     f"(max tail {max(v.tail for v in b.verdicts.values()):.1e}), bounded={c.bounded}")
    dt = time.perf_counter() - t0
    verdict(4, ok and dt < 120, ", ".join(parts) + f", {dt:.1f}s")


def _normalized(sys, j, y, exp2, n):
    g = gamma_product(sys, j, n)
    return y * np.exp(exp2 * _kernels.LOG2 - g.log_abs - 1j * g.phase)


def _backward(sys, yH, H, n):
    """Solve the recurrence backwards from ``H`` to ``n``, rescaling by powers of two."""
    y, e = np.array(yH, dtype=complex), 0
    inv = np.linalg.inv(np.diag(sys.lam) + sys.matrices(np.arange(n, H)))
    for i in range(H - 1 - n, -1, -1):
        y = inv[i] @ y
        if i % 32 == 0:
            k = int(math.floor(math.log2(np.max(np.abs(y)))))
            y, e = y * 2.0**-k, e + k
    return y, e


def _product_limits(sys, M=10**6):
    """``lim prod_{k<n} (1 + A_k[j,j] / lam_j)`` for every ``j``, averaged over ``[M, 2M]``."""
    diag = np.diagonal(sys.matrices(np.arange(1, 2 * M + 1)), axis1=1, axis2=2)
    P = np.exp(np.cumsum(np.log1p(diag / np.asarray(sys.lam)), axis=0))
    return np.mean(P[M - 1:], axis=0)


def test_criterion_5_coffman_machinery():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240611)
    n0, H = 10**4, 4 * 10**4
    worst_profile = worst_c = 0.0
    j_ok = True
    for _ in range(20):
        sys = random_decaying_system(rng)
        d = sys.d
        for j in range(1, d + 1):
            w = find_profile_solution(sys, j, H, checkpoints=[n0]).w[n0 - 1]
            if j == 1:
                tr = evolve(sys, np.eye(d)[0], H, checkpoints=[n0, H])
                ref = _normalized(sys, 1, tr.y[0], tr.exp2[0], n0)
                ref = ref / _normalized(sys, 1, tr.y[1], tr.exp2[1], H)[0]
            elif j == d:
                y, e = _backward(sys, np.eye(d)[d - 1], H, n0)
                gn, gH = gamma_product(sys, d, n0), gamma_product(sys, d, H)
                ref = y * np.exp(e * _kernels.LOG2 + gH.log_abs - gn.log_abs + 1j * (gH.phase - gn.phase))
            else:
                # no brute-force direction isolates a middle index; compare against a 4x longer horizon
                ref = find_profile_solution(sys, j, 4 * H, checkpoints=[n0]).w[n0 - 1]
            worst_profile = max(worst_profile, float(np.max(np.abs(w - ref))))
        y1 = find_profile_solution(sys, 1, 4 * H, checkpoints=[n0]).y1
        cl = classify_solution(sys, y1, H)
        limits = _product_limits(sys)
        oracle = limits[0] / sys.lam[0]
        j_ok = j_ok and cl.j == 1
        worst_c = max(worst_c, abs(cl.c - oracle) / abs(oracle))
        # lower-triangular perturbation keeps span(e_j, ..., e_d) invariant, so e_j has index j exactly;
        # its diagonal is that of sys, so the same product limits apply
        tri = CoffmanSystem(sys.lam, lambda n, s=sys: np.tril(s.matrices(n)))
        j = int(rng.integers(1, d + 1))
        cl = classify_solution(tri, np.eye(d)[j - 1], H)
        oracle = limits[j - 1] / sys.lam[j - 1]
        j_ok = j_ok and cl.j == j
        worst_c = max(worst_c, abs(cl.c - oracle) / abs(oracle))
    dt = time.perf_counter() - t0
    ok = worst_profile < 1e-6 and worst_c < 1e-6 and j_ok and dt < 30
    verdict(5, ok, f"profile residual {worst_profile:.1e}, c relative error {worst_c:.1e}, "
                   f"indices recovered {j_ok}, {dt:.1f}s")


def test_criterion_6_free_case_cross_validation():
    t0 = time.perf_counter()
    N = 10**6
    p = make_perturbation("example2", 0.8)
    asm = assemble_free_case(p, 0.5j, N)
    head, tail = asm.square_norm_tail(N // 2)
    d = diagonal_sum_check(asm, [N // 2], tail_tol=5e-3)
    r = phi_psi_limit_check(asm, N=N, cross_check=False)
    v = detect_szego_limit(ratio_trace(JacobiParams.free(), JacobiParams.free(p), asm.x, N, 10))
    gap = abs(r.c1 - v.limit) if v.limit is not None else math.inf
    dt = time.perf_counter() - t0
    ok = tail < 5e-3 * head and d.converged and asm.det_deviation < 1e-10 and gap < 1e-3 and dt < 120
    verdict(6, ok, f"square-norm tail {tail:.1e} of {head:.3f}, diagonal tails {np.max(d.tails):.1e}, "
                   f"det {asm.det_deviation:.1e}, limit gap {gap:.1e}, {dt:.1f}s")


def test_criterion_7_non_szego_trend():
    t0 = time.perf_counter()
    Ns = (8000, 32000, 128000, 512000)
    out = {}
    for fam, a in (("example2", 0.8), ("l1_decay", 2.0)):
        p = make_perturbation(fam, a)
        qs = []
        for N in Ns:
            # margin 1e-8 rather than the 1e-4 default: the divergent mass sits closer than 1e-4
            r = outside_spectrum(JacobiParams.free(p), N, margin=1e-8)
            qs.append(q_sum(r, r.band_set, 0.5))
        out[fam] = qs
    dt = time.perf_counter() - t0
    ex, ctl = out["example2"], out["l1_decay"]
    mono = all(b >= a for a, b in zip(ex, ex[1:]))
    factor = ex[-1] / ex[0]
    drift = abs(ctl[-1] - ctl[-2]) / ctl[-1]
    ok = mono and factor >= 2 and drift <= 0.05 and dt < 600
    verdict(7, ok, f"example2 q-sums {[round(q, 4) for q in ex]} (x{factor:.2f}), "
                   f"control drift {drift:.1e}, {dt:.0f}s")


def test_criterion_8_variational_bound():
    t0 = time.perf_counter()
    ms = np.arange(4, 33)
    p = make_perturbation("example2", 0.8)
    q = np.array([variational_bound(FREE, p, int(m)).quotient for m in ms])
    dt = time.perf_counter() - t0
    tail_pos = [m for i, m in enumerate(ms) if np.all(q[i:] > 0)]
    m0 = int(tail_pos[0]) if tail_pos else None
    pos = q > 0
    slope = float(np.polyfit(np.log(ms[pos]), np.log(q[pos]), 1)[0]) if pos.sum() > 1 else math.nan
    ok = m0 is not None and m0 <= 8 and abs(slope + 1.6) <= 0.3 and dt < 60
    verdict(8, ok, f"first m with positive bound from there on: {m0}, slope {slope:.2f}, "
                   f"quotient at m=4: {q[0]:.3e}, at m=32: {q[-1]:.3e}, {dt:.1f}s")
