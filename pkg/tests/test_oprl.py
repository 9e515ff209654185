import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from finitegap.bandset import equilibrium_measure, green_function
from finitegap.oprl import (JacobiParams, RatioTrace, detect_szego_limit, evaluate_polynomials,
                            free_closed_form, polynomial_values, ratio_trace, root_asymptotics_exponent,
                            window_oscillation)
from finitegap.perturb import make_perturbation
from finitegap.torus import PeriodicJacobi, bands_of_periodic

P2 = PeriodicJacobi((1.0, 2.0), (0.0, 0.0))
FREE = JacobiParams.free()


def _custom(da=None, db=None):
    return make_perturbation("custom", da=da, db=db)


def test_first_steps():
    assert evaluate_polynomials(FREE, 2.5, 2).value == pytest.approx(5.25, abs=1e-14)
    for x in (0.3, 1 + 2j, -7.0):
        assert evaluate_polynomials(FREE, x, 1).value == pytest.approx(x, abs=1e-14)


def test_closed_form_examples():
    assert free_closed_form(2.5, 0) == pytest.approx(1.0)
    assert free_closed_form(2.5, 2) == pytest.approx(5.25)
    assert free_closed_form(2, 3) == 4
    assert free_closed_form(-2, 3) == -4


@pytest.mark.parametrize("x", [2.5, 1j, 1 + 1j, 0.3 - 2j])
def test_recurrence_matches_closed_form(x):
    vals, logs = polynomial_values(FREE, x, 100)
    ref = np.array([free_closed_form(x, n) for n in range(101)])
    np.testing.assert_allclose(vals * np.exp(logs), ref, rtol=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.floats(-4, 4), st.floats(0.05, 4), st.booleans())
def test_closed_form_property(re, im, lower):
    x = complex(re, -im if lower else im)
    vals, logs = polynomial_values(FREE, x, 100)
    ref = np.array([free_closed_form(x, n) for n in range(101)])
    np.testing.assert_allclose(vals * np.exp(logs), ref, rtol=1e-9)


def test_zero_perturbation_matches_background():
    p = JacobiParams(P2)
    q = JacobiParams(P2, make_perturbation("zero"))
    a = evaluate_polynomials(p, 0.7 + 0.2j, 500)
    b = evaluate_polynomials(q, 0.7 + 0.2j, 500)
    assert (a.p_prev, a.p_cur, a.log_scale) == (b.p_prev, b.p_cur, b.log_scale)


def test_large_n_does_not_overflow():
    pair = evaluate_polynomials(FREE, 3.0, 10**6)
    # log|p_N| = (N + 1) log z - log(z - 1/z) + o(1)
    z = (3 + math.sqrt(5)) / 2
    assert pair.log_abs == pytest.approx((10**6 + 1) * math.log(z) - math.log(z - 1 / z), rel=1e-12)


def test_nonpositive_a_rejected():
    bad = _custom(da=lambda n: np.where(n == 3, -2.0, 0.0))
    with pytest.raises(ValueError, match="a_3"):
        evaluate_polynomials(JacobiParams.free(bad), 1j, 10)


def test_ratio_trace_zero_perturbation():
    tr = ratio_trace(FREE, FREE, 0.5 + 1j, 1000)
    np.testing.assert_allclose(tr.r, 1.0, rtol=1e-15)


def test_ratio_trace_validation():
    with pytest.raises(ValueError):
        ratio_trace(FREE, FREE, 1.0, 10)
    with pytest.raises(ValueError):
        ratio_trace(FREE, JacobiParams(P2), 1j, 10)
    pert = JacobiParams.free(make_perturbation("example2", 0.8))
    with pytest.raises(ValueError):
        ratio_trace(pert, pert, 1j, 10)


def test_finite_rank_ratio():
    pert = JacobiParams.free(_custom(db=lambda n: np.where(n == 1, 1.0, 0.0)))
    tr = ratio_trace(FREE, pert, 1j, 4000)
    assert tr.r[0] == pytest.approx(1 + 1j, abs=1e-15)
    # beyond the support the ratio settles geometrically
    assert abs(tr.r[-1] - tr.r[-2]) < 1e-14
    v = detect_szego_limit(tr)
    assert v.converged


def test_stride_subsamples():
    pert = JacobiParams.free(make_perturbation("example2", 0.8))
    full = ratio_trace(FREE, pert, 1 + 1j, 5000)
    every = ratio_trace(FREE, pert, 1 + 1j, 5000, stride=7)
    np.testing.assert_array_equal(every.n, full.n[6::7])
    np.testing.assert_allclose(every.r, full.r[6::7], rtol=1e-15)


def test_rescaling_does_not_change_ratios():
    pert = JacobiParams(P2, make_perturbation("example1", 0.8, math.sqrt(2) - 1))
    base = JacobiParams(P2)
    often = ratio_trace(base, pert, 0.3 + 1j, 300, threshold=2.0)
    never = ratio_trace(base, pert, 0.3 + 1j, 300, threshold=1e300)
    np.testing.assert_array_equal(often.r, never.r)
    np.testing.assert_allclose(often.log_scale, never.log_scale, rtol=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(0.1, 3))
def test_conjugate_symmetry(re, im):
    pert = JacobiParams(P2, make_perturbation("example2", 0.8))
    x = complex(re, im)
    up = ratio_trace(JacobiParams(P2), pert, x, 500)
    down = ratio_trace(JacobiParams(P2), pert, x.conjugate(), 500)
    np.testing.assert_allclose(down.r, np.conj(up.r), rtol=1e-13)


def _trace(values):
    n = np.arange(1, len(values) + 1)
    return RatioTrace(1j, n, np.asarray(values, dtype=complex), np.zeros(len(values)))


def test_detect_constant_trace():
    v = detect_szego_limit(_trace(np.ones(4096)))
    assert v.converged and v.limit == 1


def test_detect_alternating_trace():
    v = detect_szego_limit(_trace((-1.0) ** np.arange(1, 4097)))
    assert v.status == "not_converged" and v.limit is None


def test_detect_vanishing_trace_is_not_converged():
    v = detect_szego_limit(_trace(1.0 / np.arange(1, 4097)))
    assert not v.converged


def test_detect_needs_three_windows():
    with pytest.raises(ValueError):
        detect_szego_limit(_trace(np.ones(100)), window=2)
    with pytest.raises(ValueError):
        detect_szego_limit(_trace(np.ones(4)), window=5)


def test_window_oscillation_uses_relative_argument():
    # a trace sitting on the negative real axis must not see the branch cut
    r = -1.0 + 1e-3 * (-1.0) ** np.arange(1, 101) * 1j
    assert window_oscillation(_trace(r), 0, 100) < 3e-3


@pytest.mark.parametrize("x", [0.3 + 0.5j, 1j, -2 + 0.1j, 5 + 2j])
def test_zero_perturbation_converges_to_one(x):
    v = detect_szego_limit(ratio_trace(FREE, FREE, x, 4096))
    assert v.converged and v.limit == pytest.approx(1, abs=1e-15)


def test_example1_free_base_converges():
    pert = JacobiParams.free(make_perturbation("example1", 0.8, math.sqrt(2) - 1))
    v = detect_szego_limit(ratio_trace(FREE, pert, 1j, 10**6, stride=10))
    assert v.converged


def test_example2_converges():
    pert = JacobiParams.free(make_perturbation("example2", 0.8))
    v = detect_szego_limit(ratio_trace(FREE, pert, 1 + 1j, 10**6, stride=10))
    assert v.converged
    assert v.decay_exponent < 0


def test_root_asymptotics_free():
    assert root_asymptotics_exponent(FREE, 2.5, 10**5) == pytest.approx(math.log(2), abs=1e-3)


def test_root_asymptotics_matches_green_function():
    m = equilibrium_measure(bands_of_periodic(P2))
    got = root_asymptotics_exponent(JacobiParams(P2), 4.0, 10**5)
    assert got == pytest.approx(green_function(m, 4.0), abs=1e-3)


def test_root_asymptotics_rejects_spectrum():
    with pytest.raises(ValueError):
        root_asymptotics_exponent(FREE, 0.0, 100)
