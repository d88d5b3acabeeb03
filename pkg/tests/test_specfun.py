import math
import time

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from hdsphere.errors import DegeneracyError, DomainError
from hdsphere.specfun import (GAP_TABLE_KAPPA, GAP_TABLE_P, GAP_TABLE_PUBLISHED, LogValue,
                              log_bessel_i, log_complex_bingham_constant,
                              log_complex_sphere_area, log_complex_watson_constant,
                              log_cwatson_gaussian_constant, log_gamma, log_hyp0f1,
                              log_hyp1f1, log_sphere_area, log_vmf_constant,
                              log_watson_constant, gap_table_entry)

mpmath.mp.dps = 40


def mp_log_hyp1f1(a, b, x):
    return float(mpmath.log(mpmath.hyp1f1(a, b, x)))


def beta_expectation(f, a, b):
    """E f(U) for U ~ Beta(a, b), by quadrature."""
    logB = special.betaln(a, b)
    val, _ = integrate.quad(
        lambda u: f(u) * math.exp((a - 1) * math.log(u) + (b - 1) * math.log1p(-u) - logB),
        0, 1, limit=200, epsabs=0, epsrel=1e-12)
    return val


# --- LogValue ---------------------------------------------------------------


def test_logvalue_arithmetic():
    a = LogValue.from_float(3.0)
    b = LogValue.from_float(-5.0)
    assert float(a + b) == pytest.approx(-2.0, rel=1e-15)
    assert float(a * b) == pytest.approx(-15.0, rel=1e-15)
    assert float(a / b) == pytest.approx(-0.6, rel=1e-15)
    assert float(a - a) == 0.0
    assert (a - a).sign == 0


def test_logvalue_huge_magnitudes_do_not_overflow():
    big = LogValue(5000.0)
    s = big + big
    assert s.log_magnitude == pytest.approx(5000.0 + math.log(2.0), abs=1e-12)
    with pytest.raises(OverflowError):
        float(big)


def test_logvalue_rejects_inconsistent_zero():
    with pytest.raises(ValueError):
        LogValue(0.0, 0)
    with pytest.raises(DomainError):
        LogValue.zero().log()


# --- elementary pieces ------------------------------------------------------


def test_log_gamma_matches_math():
    for x in (0.5, 1.0, 3.7, 150.0, 1e5):
        assert log_gamma(x) == pytest.approx(math.lgamma(x), rel=1e-14)


def test_sphere_areas():
    assert log_sphere_area(3) == pytest.approx(math.log(4 * math.pi), rel=1e-15)
    assert log_sphere_area(2) == pytest.approx(math.log(2 * math.pi), rel=1e-15)
    # complex sphere in C^1 is the unit circle; in C^2 it is S^3 with area 2 pi^2
    assert log_complex_sphere_area(1) == pytest.approx(math.log(2 * math.pi), rel=1e-15)
    assert log_complex_sphere_area(2) == pytest.approx(math.log(2 * math.pi ** 2), rel=1e-15)


# --- hypergeometric functions ---------------------------------------------


@pytest.mark.parametrize("a,b,x", [
    (0.5, 1.5, 2.0), (0.5, 50.0, 30.0), (1.0, 2.0, 0.3), (1.0, 100.0, 98.0),
    (1.5, 5000.0, 4990.0), (0.5, 0.5 * 10000, 0.9 * 10000), (2.0, 3.0, -4.0),
    (0.5, 10.0, -200.0), (1.0, 1e5, 0.998e5), (0.5, 1.5, 800.0),
])
def test_hyp1f1_against_mpmath(a, b, x):
    assert log_hyp1f1(a, b, x) == pytest.approx(mp_log_hyp1f1(a, b, x), rel=1e-11, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(a=st.floats(0.1, 5.0), b=st.floats(0.5, 300.0), x=st.floats(-50.0, 400.0))
def test_hyp1f1_property_against_mpmath(a, b, x):
    ref = mpmath.hyp1f1(a, b, x)
    if ref <= 0:
        return
    assert log_hyp1f1(a, b, x) == pytest.approx(float(mpmath.log(ref)), rel=1e-10, abs=1e-11)


def test_hyp1f1_trivial_arguments():
    assert log_hyp1f1(0.5, 2.0, 0.0) == 0.0
    assert log_hyp1f1(0.0, 2.0, 7.0) == 0.0
    with pytest.raises(DomainError):
        log_hyp1f1(1.0, -1.0, 1.0)


def test_hyp0f1_against_mpmath():
    for b, z in [(0.5, 1.0), (2.5, 100.0), (5000.0, 1e4), (1.5, 9000.0)]:
        ref = float(mpmath.log(mpmath.hyp0f1(b, z)))
        assert log_hyp0f1(b, z) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("order,x", [(0.0, 1.0), (0.5, 3.0), (10.0, 0.5), (49999.0, 316.0),
                                     (4999.0, 7000.0), (1.5, 700.0)])
def test_bessel_against_mpmath(order, x):
    ref = float(mpmath.log(mpmath.besseli(order, x)))
    assert log_bessel_i(order, x) == pytest.approx(ref, rel=1e-11)


def test_bessel_half_order_closed_form():
    # I_{1/2}(x) = sqrt(2/(pi x)) sinh x
    for x in (0.1, 2.0, 50.0):
        ref = 0.5 * math.log(2 / (math.pi * x)) + math.log(math.sinh(x))
        assert log_bessel_i(0.5, x) == pytest.approx(ref, rel=1e-13)


# --- normalizing constants ------------------------------------------------


@pytest.mark.parametrize("p", [2, 3, 7, 100, 100000])
def test_zero_concentration_is_exactly_zero(p):
    assert log_vmf_constant(p, 0.0) == 0.0
    assert log_watson_constant(p, 0.0) == 0.0
    assert log_watson_constant(p, 0.0, h=min(3, p)) == 0.0


def test_vmf_constant_three_dimensions_closed_form():
    # E exp(s x'nu) = sinh(s)/s on S^2
    for kappa in (0.1, 1.0, 4.0):
        s = math.sqrt(3) * kappa
        assert log_vmf_constant(3, kappa) == pytest.approx(math.log(math.sinh(s) / s), rel=1e-13)


@pytest.mark.parametrize("p,kappa", [(4, 0.7), (10, 2.0), (50, 3.0)])
def test_vmf_constant_against_quadrature(p, kappa):
    # x'nu = 2U - 1 with U ~ Beta((p-1)/2, (p-1)/2)
    s = math.sqrt(p) * kappa
    ref = beta_expectation(lambda u: math.exp(s * (2 * u - 1)), (p - 1) / 2, (p - 1) / 2)
    assert log_vmf_constant(p, kappa) == pytest.approx(math.log(ref), rel=1e-10)


def test_vmf_constant_large_p_no_overflow():
    v = log_vmf_constant(100000, 2.0)
    # Gaussian limit: E exp(s z / sqrt(p)) -> exp(kappa^2 / 2)
    assert math.isfinite(v)
    assert v == pytest.approx(2.0, rel=1e-3)


@pytest.mark.parametrize("p,kappa,h", [(3, 0.3, 1), (6, -0.4, 1), (20, 0.45, 3), (8, 0.2, 8)])
def test_watson_constant_against_quadrature(p, kappa, h):
    if h == p:
        assert log_watson_constant(p, kappa, h) == pytest.approx(p * kappa, rel=1e-15)
        return
    ref = beta_expectation(lambda u: math.exp(p * kappa * u), h / 2, (p - h) / 2)
    assert log_watson_constant(p, kappa, h) == pytest.approx(math.log(ref), rel=1e-10)


@pytest.mark.parametrize("p,kappa", [(2, 0.5), (5, 0.9), (30, 0.3)])
def test_complex_watson_constant_against_quadrature(p, kappa):
    # |mu* z|^2 ~ Beta(1, p - 1) under the uniform law on the complex sphere
    ref = beta_expectation(lambda u: math.exp(-p + p * kappa * u), 1.0, p - 1.0)
    expected = log_complex_sphere_area(p) + math.log(ref)
    assert log_complex_watson_constant(p, kappa) == pytest.approx(expected, rel=1e-10)


def test_complex_bingham_two_dimensional_closed_form():
    t1, t2 = 1.7, -0.4
    ref = math.log(2 * math.pi ** 2 * (math.exp(t1) - math.exp(t2)) / (t1 - t2))
    assert log_complex_bingham_constant([t1, t2]) == pytest.approx(ref, rel=1e-14)


def test_complex_bingham_against_mpmath_divided_difference():
    taus = [3.0, 1.0, 0.2, -2.0]
    with mpmath.workdps(50):
        t = [mpmath.mpf(x) for x in taus]
        s = mpmath.mpf(0)
        for j in range(4):
            den = mpmath.mpf(1)
            for i in range(4):
                if i != j:
                    den *= t[j] - t[i]
            s += mpmath.exp(t[j]) / den
        ref = float(mpmath.log(2 * mpmath.pi ** 4 * s))
    assert log_complex_bingham_constant(taus) == pytest.approx(ref, rel=1e-13)


def test_complex_bingham_cancellation_branch():
    # tightly clustered eigenvalues make the alternating sum cancel badly
    taus = np.array([0.0, 1e-3, 2e-3, 3e-3, 4e-3, 5e-3]) + 100.0
    with mpmath.workdps(80):
        t = [mpmath.mpf(float(x)) for x in taus]
        s = mpmath.mpf(0)
        for j in range(len(t)):
            den = mpmath.mpf(1)
            for i in range(len(t)):
                if i != j:
                    den *= t[j] - t[i]
            s += mpmath.exp(t[j]) / den
        ref = float(mpmath.log(2 * mpmath.pi ** len(t) * s))
    assert log_complex_bingham_constant(taus) == pytest.approx(ref, rel=1e-12)


def test_complex_bingham_degenerate_raises():
    with pytest.raises(DegeneracyError):
        log_complex_bingham_constant([1.0, 1.0, 0.0])


def test_complex_watson_domain():
    with pytest.raises(DomainError):
        log_complex_watson_constant(5, 1.0)
    with pytest.raises(DomainError):
        log_cwatson_gaussian_constant(5, 1.2)


# --- published table --------------------------------------------------------


def test_gap_table_all_entries():
    start = time.perf_counter()
    worst = 0.0
    for i, p in enumerate(GAP_TABLE_P):
        for j, k in enumerate(GAP_TABLE_KAPPA):
            worst = max(worst, abs(gap_table_entry(p, k) - GAP_TABLE_PUBLISHED[i][j]))
    assert worst <= 5e-5
    assert time.perf_counter() - start < 5.0


def test_gap_table_signed_gap_is_negative():
    for p in (2, 100, 100000):
        for k in (0.02, 0.9, 0.998):
            assert log_complex_watson_constant(p, k) < log_cwatson_gaussian_constant(p, k)


def test_gap_table_gap_vanishes_with_p():
    gaps = [gap_table_entry(p, 0.6) for p in GAP_TABLE_P]
    assert all(g2 < g1 for g1, g2 in zip(gaps, gaps[1:]))
