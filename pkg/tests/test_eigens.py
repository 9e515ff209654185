import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import eigvalsh_tridiagonal

from finitegap.bandset import dist_to_bands, make_band_set
from finitegap.eigens import (EigenReport, eigenvalues_in, eigenvalues_truncation, eigenvector, gap_eigenvalues,
                              outside_spectrum, q_sum, quadratic_form, sturm_count, trial_vector, truncation,
                              variational_bound, weyl_artifact)
from finitegap.oprl import JacobiParams
from finitegap.perturb import make_perturbation
from finitegap.torus import PeriodicJacobi, bands_of_periodic

FREE = PeriodicJacobi.free()
P2 = PeriodicJacobi((1.0, 2.0), (0.0, 0.0))
E0 = make_band_set([(-2, 2)])
ZERO = make_perturbation("zero")
EX2 = make_perturbation("example2", 0.8)


def _report(eigs, e=E0, margin=1e-6):
    return gap_eigenvalues(np.asarray(eigs, dtype=float), e, margin)


def test_free_small_truncations():
    np.testing.assert_allclose(eigenvalues_truncation(JacobiParams.free(), 2), [-1, 1], atol=1e-12)
    np.testing.assert_allclose(eigenvalues_truncation(JacobiParams.free(), 3), [-math.sqrt(2), 0, math.sqrt(2)],
                               atol=1e-12)
    ref = np.sort(2 * np.cos(np.arange(1, 11) * np.pi / 11))
    np.testing.assert_allclose(eigenvalues_truncation(JacobiParams.free(), 10), ref, atol=1e-12)


def test_single_entry():
    J = JacobiParams.free(make_perturbation("custom", db=lambda n: 0.7 * np.ones(len(n))))
    np.testing.assert_allclose(eigenvalues_truncation(J, 1), [0.7], atol=1e-12)
    with pytest.raises(ValueError):
        truncation(J, 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 60))
def test_bisection_against_lapack(seed, N):
    rng = np.random.default_rng(seed)
    diag = rng.uniform(-3, 3, N)
    off = rng.uniform(0.05, 2, N - 1)
    ref = eigvalsh_tridiagonal(diag, off)
    got = eigenvalues_in(diag, off, -20.0, 20.0)
    np.testing.assert_allclose(got, ref, atol=1e-10)
    t = rng.uniform(-6, 6, 25)
    # exact integer count of eigenvalues below each probe
    np.testing.assert_array_equal(sturm_count(diag, off, t), np.searchsorted(ref, t))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 80))
def test_interlacing(seed, N):
    rng = np.random.default_rng(seed)
    diag = rng.uniform(-3, 3, N + 1)
    off = rng.uniform(0.05, 2, N)
    small = eigenvalues_in(diag[:N], off[: N - 1], -20.0, 20.0)
    big = eigenvalues_in(diag, off, -20.0, 20.0)
    assert np.all(big[:-1] <= small + 1e-11)
    assert np.all(small <= big[1:] + 1e-11)


def _eps(J, N):
    e = bands_of_periodic(J)
    return max(dist_to_bands(x, e) for x in eigenvalues_truncation(JacobiParams(J), N))


def test_unperturbed_periodic_eigs_stay_in_bands():
    # strong bond first: no state at either end of the cut
    J = PeriodicJacobi((2.0, 1.0), (0.0, 0.0))
    eps = [_eps(J, N) for N in (100, 1000, 10000)]
    assert eps[0] >= eps[1] >= eps[2]
    assert eps[2] < 1e-12


def test_periodic_bound_state_is_not_an_artifact():
    # a = (1, 2), b = 0 solves J u = 0 with u_{2k+1} = (-1/2)^k: a genuine gap eigenvalue at 0
    for N in (100, 1000, 10000):
        rep = outside_spectrum(JacobiParams(P2), N, margin=1e-6)
        assert rep.count >= 1
        np.testing.assert_allclose(rep.outside_eigs, 0.0, atol=1e-11)


def test_cut_end_state_is_filtered():
    J = PeriodicJacobi((1.0, 1.5, 0.7), (0.3, -0.5, 1.0))
    for N in (1000, 10000):
        rep = outside_spectrum(JacobiParams(J), N, margin=1e-6)
        assert rep.count == 0 and rep.discarded.size == 1


def test_free_unperturbed_has_nothing_outside():
    eigs = eigenvalues_truncation(JacobiParams.free(), 500)
    assert _report(eigs).count == 0
    assert outside_spectrum(JacobiParams.free(), 2000, margin=1e-6).count == 0


def test_rank_one_secular_root():
    # b_1 = beta > 1 on the free matrix: the bound state is beta + 1/beta
    J = JacobiParams.free(make_perturbation("custom", db=lambda n: np.where(n == 1, 3.0, 0.0)))
    rep = outside_spectrum(J, 4000, margin=1e-6)
    assert rep.count == 1
    assert rep.outside_eigs[0] == pytest.approx(3 + 1 / 3, abs=1e-11)
    assert rep.dists[0] == pytest.approx(4 / 3, abs=1e-11)


def test_margin_filters():
    rep = _report([-2.5, -2.0000001, 0.0, 2.00005, 3.0], margin=1e-4)
    np.testing.assert_array_equal(rep.outside_eigs, [-2.5, 3.0])
    assert np.all(rep.dists > rep.margin)
    with pytest.raises(ValueError):
        gap_eigenvalues([3.0], E0, margin=0.0)
    with pytest.raises(ValueError):
        outside_spectrum(JacobiParams.free(), 10, margin=1e-13)


def test_q_sum_examples():
    assert q_sum(_report([3.0]), E0, 0.5) == pytest.approx(1.0)
    assert q_sum(_report([3.0, -2.5]), E0, 0.5) == pytest.approx(1 + math.sqrt(0.5), abs=1e-12)
    assert q_sum(_report([]), E0, 0.5) == 0.0
    with pytest.raises(ValueError):
        q_sum(_report([3.0]), E0, 0.0)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-10, 10), max_size=20), st.floats(0.1, 1.0), st.floats(0.1, 1.0))
def test_q_sum_termwise_monotone(xs, q1, q2):
    lo, hi = sorted((q1, q2))
    rep = _report(xs)
    small = [x for x, d in zip(rep.outside_eigs, rep.dists) if d < 1]
    large = [x for x, d in zip(rep.outside_eigs, rep.dists) if d > 1]
    for part, sign in ((small, 1), (large, -1)):
        r = _report(part)
        assert sign * (q_sum(r, E0, lo) - q_sum(r, E0, hi)) >= -1e-12
    assert np.all(rep.dists > rep.margin)


def test_weyl_filter():
    N = 400
    tail = np.zeros(N)
    tail[-3:] = 1.0
    assert weyl_artifact(tail)
    assert not weyl_artifact(np.ones(N))
    # a large entry at the cut end makes a localized eigenvector there
    diag = np.zeros(N)
    diag[-1] = 5.0
    off = np.ones(N - 1)
    eigs = eigenvalues_in(diag, off, -10, 10)
    rep = gap_eigenvalues(eigs, E0, 1e-4, truncated=(diag, off))
    assert rep.count == 0 and rep.discarded.size == 1
    assert rep.discarded[0] == pytest.approx(5.2, abs=1e-12)


def test_eigenvector_solves_system():
    rng = np.random.default_rng(3)
    diag, off = rng.uniform(-1, 1, 50), rng.uniform(0.5, 1.5, 49)
    lam = eigenvalues_in(diag, off, -10, 10)[-1]
    x = eigenvector(diag, off, lam)
    Jx = diag * x
    Jx[:-1] += off * x[1:]
    Jx[1:] += off * x[:-1]
    assert np.linalg.norm(Jx - lam * x) < 1e-10


def test_trial_vector_shape():
    n, phi, E = trial_vector(FREE, 5)
    assert (n[0], n[-1]) == (1595, 1605)
    assert E == 2.0 and phi[5] == 1.0
    with pytest.raises(ValueError):
        trial_vector(FREE, 5, E=1.0)
    with pytest.raises(ValueError):
        trial_vector(FREE, 0)


def _dense_quotient(base, pert, m):
    n, phi, E = trial_vector(base, m)
    N = int(n[-1]) + 1
    diag, off = truncation(JacobiParams(base, pert), N)
    H = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1) - E * np.eye(N)
    full = np.zeros(N)
    full[n - 1] = phi
    return full @ H @ full / (full @ full), H


def test_variational_against_dense_oracle():
    vb = variational_bound(FREE, EX2, 5)
    ref, H = _dense_quotient(FREE, EX2, 5)
    assert vb.quotient == pytest.approx(ref, rel=1e-12)
    assert vb.quotient == pytest.approx(vb.perturbation_term + vb.unperturbed_term, rel=1e-12)
    # Rayleigh principle against the truncation containing the window
    lam_max = eigvalsh_tridiagonal(np.diag(H), np.diag(H, 1))[-1]
    assert vb.quotient <= lam_max + 1e-12


def test_variational_against_dense_oracle_periodic():
    vb = variational_bound(P2, EX2, 4)
    ref, _ = _dense_quotient(P2, EX2, 4)
    assert vb.quotient == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("base", [FREE, P2])
def test_zero_perturbation_pushes_nothing_out(base):
    for m in (4, 8, 16, 32):
        vb = variational_bound(base, ZERO, m)
        assert vb.perturbation_term == 0.0
        assert -1.0 / m <= vb.quotient <= 0.0


def test_norm_grows_linearly():
    norms = [variational_bound(FREE, EX2, m).norm2 for m in (8, 16, 32)]
    assert norms[1] / norms[0] == pytest.approx(2, rel=0.1)
    assert norms[2] / norms[1] == pytest.approx(2, rel=0.1)


def test_perturbation_term_decay():
    ms = np.arange(4, 33)
    pt = np.array([variational_bound(FREE, EX2, int(m)).perturbation_term for m in ms])
    assert np.all(pt > 0)
    slope = np.polyfit(np.log(ms), np.log(pt), 1)[0]
    assert slope == pytest.approx(-1.6, abs=0.3)


def test_variational_positive_far_out():
    # the unperturbed part is about -3/m^2, so the bound turns positive only for large m
    for m in (100000, 200000):
        assert variational_bound(FREE, EX2, m).quotient > 0


def test_quadratic_form_matches_dense():
    rng = np.random.default_rng(0)
    phi, a, b = rng.standard_normal(7), rng.uniform(0.5, 1.5, 6), rng.standard_normal(7)
    H = np.diag(b - 0.3) + np.diag(a, 1) + np.diag(a, -1)
    assert quadratic_form(a, b, phi, 0.3) == pytest.approx(phi @ H @ phi, rel=1e-13)


def test_report_q_sums_map():
    rep = EigenReport(10, E0, 1e-6, np.array([3.0, 6.0]), np.array([1.0, 4.0]))
    assert rep.q_sums() == {0.5: pytest.approx(3.0), 0.25: pytest.approx(1 + math.sqrt(2))}
