import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from hdsphere.distributions import (BinghamParams, ComplexBinghamParams, ComplexWatsonParams,
                                    FisherBinghamParams, UniformParams, VmfParams,
                                    WatsonParams, draw, exponent, gaussian_approx,
                                    log_constant, logpdf, mc_log_constant, params_from_dict,
                                    params_to_dict, projection_law, sample)
from hdsphere.distributions import sampling
from hdsphere.errors import DomainError, PracticalityError, ValidationError
from hdsphere.spectral import ProjectionBasis, SpectrumModel, make_spike_spectrum

N = 20000


def e(p, i=0, complex_=False):
    v = np.zeros(p, dtype=complex if complex_ else float)
    v[i] = 1.0
    return v


def ks_against_density(x, log_dens, lo, hi):
    """KS p-value of ``x`` against the density ``exp(log_dens)`` on ``[lo, hi]``."""
    grid = np.linspace(lo, hi, 4001)
    ld = log_dens(grid)
    w = np.exp(ld - ld.max())
    cdf = integrate.cumulative_trapezoid(w, grid, initial=0.0)
    cdf /= cdf[-1]
    return stats.kstest(x, lambda t: np.interp(t, grid, cdf)).pvalue


# --- parameter validation ---------------------------------------------------


def test_watson_kappa_must_be_below_half():
    with pytest.raises(DomainError):
        WatsonParams(ProjectionBasis.axes(5, 1), 0.5)


def test_complex_watson_kappa_must_be_below_one():
    with pytest.raises(DomainError):
        ComplexWatsonParams(e(4, complex_=True), 1.0)


def test_bingham_needs_unit_smallest_eigenvalue():
    spec = SpectrumModel(p=5, values=[3.0], vectors=e(5)[:, None], bulk=2.0)
    with pytest.raises(ValidationError):
        BinghamParams(spec)


def test_vmf_mode_must_be_unit():
    with pytest.raises(ValidationError):
        VmfParams(np.ones(3), 1.0)


@pytest.mark.parametrize("params", [
    UniformParams(7, True),
    VmfParams(e(6, 2), 1.5),
    WatsonParams(ProjectionBasis.axes(6, 2), 0.2),
    BinghamParams(make_spike_spectrum(6, [3.0, 2.0])),
    FisherBinghamParams(make_spike_spectrum(6, [3.0, 2.0]), 0.8),
    ComplexBinghamParams(make_spike_spectrum(6, [3.0, 2.0], hermitian=True)),
    ComplexWatsonParams(e(6, 1, True), 0.4),
])
def test_params_dict_round_trip(params):
    back = params_from_dict(params_to_dict(params))
    assert params_to_dict(back) == params_to_dict(params)


def test_params_from_dict_generators():
    p = params_from_dict({"family": "bingham", "p": 100,
                          "spectrum": {"values": [4, 2], "vectors": {"generator": "cosine"}}})
    assert p.spectrum.vectors.shape == (100, 2)
    with pytest.raises(ValidationError):
        params_from_dict({"family": "nope", "p": 3})


# --- exact samplers at small p ------------------------------------------------


def test_uniform_coordinate_is_uniform_on_s2():
    X = sample(UniformParams(3), N, seed=1).data
    assert stats.kstest(X[0], stats.uniform(-1, 2).cdf).pvalue > 1e-3


def test_vmf_inner_product_law():
    kappa = 1.2
    s = math.sqrt(3) * kappa
    X = sample(VmfParams(e(3), kappa), N, seed=2).data
    assert ks_against_density(X[0], lambda t: s * t, -1, 1) > 1e-3


def test_vmf_large_kappa_mean_resultant():
    p, kappa = 50, 30.0
    X = sample(VmfParams(e(p), kappa), 4000, seed=3).data
    # E x'nu = I_{p/2}(s) / I_{p/2-1}(s) for s = sqrt(p) kappa
    from scipy.special import ive
    s = math.sqrt(p) * kappa
    assert X[0].mean() == pytest.approx(ive(p / 2, s) / ive(p / 2 - 1, s), abs=4 * X[0].std() / 63)


@pytest.mark.parametrize("kappa", [0.3, -1.0])
def test_watson_axis_law(kappa):
    p = 3
    X = sample(WatsonParams(ProjectionBasis.axes(p, 1), kappa), N, seed=4).data
    assert ks_against_density(X[0], lambda t: p * kappa * t * t, -1, 1) > 1e-3


def test_bingham_marginal_in_three_dimensions():
    # x1 marginal of Bingham on S^2 with Sigma = diag(4, 1, 1): density of t = x1
    # is proportional to exp(-(3/2)(t^2/4 + 1 - t^2)) on [-1, 1]
    p = 3
    X = sample(BinghamParams(make_spike_spectrum(p, [4.0])), N, seed=5).data
    assert ks_against_density(X[0], lambda t: -1.5 * (t * t / 4 + 1 - t * t), -1, 1) > 1e-3


def test_fisher_bingham_marginal_in_three_dimensions():
    p, kappa = 3, 1.0
    params = FisherBinghamParams(make_spike_spectrum(p, [2.0]), kappa)
    X = sample(params, N, seed=6).data
    nu_axis = int(np.argmax(np.abs(params.mode)))
    assert nu_axis == 0

    def ld(t):
        return math.sqrt(p) * kappa * t - 1.5 * (t * t / 2 + 1 - t * t)

    assert ks_against_density(X[0], ld, -1, 1) > 1e-3


def test_fisher_bingham_large_p_uses_envelope():
    params = FisherBinghamParams(make_spike_spectrum(10000, [4.0, 2.0]), 1.0)
    fs = draw(params, 500, seed=7)
    assert fs.info["acceptance_rate"] > 0.2


def test_complex_bingham_two_dimensional_law():
    # |z_1|^2 = u is uniform under the uniform law on CS^1; density ~ exp(tau_1 u + tau_2 (1-u))
    spec = make_spike_spectrum(2, [3.0], hermitian=True)
    params = ComplexBinghamParams(spec)
    taus = params.taus()
    X = sample(params, N, seed=8).data
    u = np.abs(X[0]) ** 2
    assert ks_against_density(u, lambda t: taus[0] * t + taus[1] * (1 - t), 0, 1) > 1e-3


def test_complex_watson_law():
    p, kappa = 4, 0.6
    X = sample(ComplexWatsonParams(e(p, complex_=True), kappa), N, seed=9).data
    u = np.abs(X[0]) ** 2
    assert ks_against_density(u, lambda t: p * kappa * t + (p - 2) * np.log(np.maximum(1 - t, 1e-300)),
                              0, 1) > 1e-3


def test_complex_draws_are_phase_invariant():
    params = ComplexWatsonParams(e(5, complex_=True), 0.5)
    X = sample(params, N, seed=10).data
    phase = np.angle(X[0])
    assert stats.kstest(phase, stats.uniform(-math.pi, 2 * math.pi).cdf).pvalue > 1e-3


# --- framed samples -----------------------------------------------------------


def test_materialized_samples_are_unit_and_projections_agree():
    params = BinghamParams(make_spike_spectrum(40, [5.0, 2.0]))
    B = ProjectionBasis.orthonormalize(np.random.default_rng(0).standard_normal((40, 2)))
    fs = draw(params, 300, seed=11, extra=B)
    X = fs.materialize()
    np.testing.assert_allclose(np.linalg.norm(X.data, axis=0), 1.0, atol=1e-12)
    np.testing.assert_allclose(fs.project(B), B.columns.T @ X.data, atol=1e-12)
    np.testing.assert_allclose(fs.squared_norms(), 1.0, atol=1e-12)


def test_projection_outside_frame_is_rejected():
    fs = draw(UniformParams(30), 10, seed=12)
    with pytest.raises(ValidationError):
        fs.project(ProjectionBasis.axes(30, 2))


@settings(max_examples=8, deadline=None)
@given(seed=st.integers(0, 10 ** 6), workers=st.integers(2, 4))
def test_draws_independent_of_worker_count(seed, workers):
    params = VmfParams(e(20), 2.0)
    a = draw(params, 5000, seed, workers=1).materialize().data
    b = draw(params, 5000, seed, workers=workers).materialize(workers=workers).data
    np.testing.assert_array_equal(a, b)


def test_seed_is_required():
    with pytest.raises(ValidationError):
        draw(UniformParams(5), 3, seed=None)


def test_sampling_cost_is_linear_in_p():
    import time
    params = BinghamParams(make_spike_spectrum(100000, [4.0, 2.0]))
    t = time.perf_counter()
    fs = draw(params, 5000, seed=13)
    assert time.perf_counter() - t < 5.0
    assert fs.p == 100000


def test_practicality_guard():
    acc = sampling._Acceptance("toy")
    with pytest.raises(PracticalityError):
        acc.update(2_000_000, 1)
    acc = sampling._Acceptance("toy")
    acc.update(2_000_000, 100)
    assert acc.rate == pytest.approx(5e-5)


# --- densities ----------------------------------------------------------------


def test_exponent_framed_equals_dense():
    params = FisherBinghamParams(make_spike_spectrum(25, [3.0, 2.0]), 0.7)
    fs = draw(params, 200, seed=14)
    np.testing.assert_allclose(exponent(params, fs), exponent(params, fs.materialize()),
                               atol=1e-10)


def test_bingham_exponent_zero_at_unit_eigendirection():
    params = BinghamParams(make_spike_spectrum(10, [4.0]))
    assert exponent(params, e(10, 3)) == pytest.approx(0.0, abs=1e-14)
    assert exponent(params, e(10, 0)) == pytest.approx(0.5 * 10 * (1 - 1 / 4))


def test_logpdf_flags_missing_constants():
    ld = logpdf(BinghamParams(make_spike_spectrum(6, [3.0])), e(6))
    assert ld.value is None and ld.oracle_required
    assert "mc_log_constant" in ld.note
    ld2 = logpdf(VmfParams(e(6), 1.0), e(6))
    assert ld2.value == pytest.approx(math.sqrt(6) - log_constant(VmfParams(e(6), 1.0)))


def test_logpdf_rejects_off_sphere_points():
    with pytest.raises(ValidationError):
        logpdf(VmfParams(e(4), 1.0), np.ones(4))


def test_logpdf_accepts_override_constant():
    params = BinghamParams(make_spike_spectrum(5, [3.0]))
    est = mc_log_constant(params, 200000, seed=15)
    ld = logpdf(params, e(5), log_const=est.estimate)
    assert not ld.oracle_required


def test_mc_log_constant_matches_exact_vmf():
    params = VmfParams(e(5), 1.0)
    est = mc_log_constant(params, 200000, seed=16)
    assert abs(est.estimate - log_constant(params)) < 4 * est.std_error


def test_uniform_complex_constant_is_sphere_area():
    from hdsphere.specfun import log_complex_sphere_area
    assert log_constant(UniformParams(4, True)) == log_complex_sphere_area(4)
    assert log_constant(UniformParams(4)) == 0.0


def test_degenerate_complex_bingham_has_no_closed_form():
    params = ComplexBinghamParams(SpectrumModel.identity(4, hermitian=True))
    assert log_constant(params) is None


# --- Gaussian approximations ----------------------------------------------------


def test_squared_norm_moments_against_sampling():
    ga = gaussian_approx(BinghamParams(make_spike_spectrum(500, [6.0, 3.0])))
    m, v = ga.squared_norm_moments()
    q = ga.sample_squared_norms(40000, seed=17)
    assert abs(q.mean() - m) < 4 * math.sqrt(v / 40000)
    assert q.var() == pytest.approx(v, rel=0.05)


def test_dense_gaussian_covariance():
    params = BinghamParams(make_spike_spectrum(6, [4.0, 2.0]))
    ga = gaussian_approx(params)
    X = ga.sample(60000, seed=18)
    np.testing.assert_allclose(np.cov(X), ga.covariance(), atol=0.01)


def test_vmf_gaussian_mean():
    ga = gaussian_approx(VmfParams(e(100), 2.0))
    assert ga.mean[0] == pytest.approx(0.2)


def test_projection_law_requires_invariant_span():
    params = BinghamParams(make_spike_spectrum(10, [4.0, 2.0]))
    tilted = ProjectionBasis.orthonormalize(e(10, 0)[:, None] + e(10, 5)[:, None])
    with pytest.raises(ValidationError):
        projection_law(params, tilted)


def test_projection_law_transform_is_inverse_sqrt():
    params = BinghamParams(make_spike_spectrum(10, [4.0, 2.0]))
    law = projection_law(params, ProjectionBasis.axes(10, 3))
    np.testing.assert_allclose(np.diag(law.transform), [0.5, 1 / math.sqrt(2), 1.0])


def test_fisher_bingham_mean_options_differ_off_unit_eigenvalue():
    params = FisherBinghamParams(make_spike_spectrum(10, [4.0, 2.0]), 1.0)
    basis = ProjectionBasis.axes(10, 3)
    d = projection_law(params, basis, fb_mean="derived").mean
    s = projection_law(params, basis, fb_mean="sigma").mean
    np.testing.assert_allclose(d, [2.0, 0, 0])
    np.testing.assert_allclose(s, [4.0, 0, 0])
    with pytest.raises(ValidationError):
        projection_law(params, ProjectionBasis.axes(10, 2, start=1))


def test_complex_quadratic_form_law():
    params = ComplexWatsonParams(e(8, complex_=True), 0.5)
    law = projection_law(params, ProjectionBasis.axes(8, 2))
    assert law.quadratic_form_law() == (4, 0.0, 2.0)
