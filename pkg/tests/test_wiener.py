import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hdsphere.distributions import BinghamParams, UniformParams, draw
from hdsphere.errors import DomainError, ValidationError
from hdsphere.spectral import SpectrumModel, cosine_basis, make_spike_spectrum
from hdsphere.wiener import (GaussianMeasureSpec, PathPolyline, build_path, build_paths,
                             cameron_martin_density, covariance_R, grid_function,
                             indicator_vector, path_to_csv, rn_density,
                             rn_density_from_coefficients, simulate_limit_path,
                             wiener_coefficients, wiener_integral)


def test_build_path_knots_are_partial_sums():
    x = np.array([0.5, -0.25, 1.0, 0.0])
    pl = build_path(x)
    np.testing.assert_array_equal(pl.values, [0, 0.5, 0.25, 1.25, 1.25])
    assert pl(0.125) == pytest.approx(0.25)
    np.testing.assert_array_equal(build_paths(np.column_stack([x, -x]))[1], -pl.values)


def test_path_must_start_at_zero():
    with pytest.raises(ValidationError):
        PathPolyline(np.array([1.0, 2.0]))


def test_indicator_vector_reproduces_path_value():
    rng = np.random.default_rng(1)
    x = rng.standard_normal(40)
    pl = build_path(x)
    for t in (0.0, 0.25, 0.5, 1.0):
        assert indicator_vector(40, t) @ x == pytest.approx(pl(t))
    with pytest.raises(ValidationError):
        indicator_vector(40, 0.3333)


def test_wiener_integral_of_constant_is_endpoint():
    x = np.random.default_rng(2).standard_normal(30)
    assert wiener_integral(build_path(x), 1.0) == pytest.approx(x.sum())
    assert wiener_integral(build_path(x), lambda s: s < 0.5) == pytest.approx(x[:15].sum())


def test_grid_function_shapes():
    assert grid_function(2.0, 3).tolist() == [2.0, 2.0, 2.0]
    np.testing.assert_array_equal(grid_function(np.arange(4.0), 3), [0, 1, 2])
    with pytest.raises(ValidationError):
        grid_function(np.ones(7), 3)


def test_spec_requires_a_below_one():
    with pytest.raises(DomainError):
        GaussianMeasureSpec.from_functions(50, [1.0])
    with pytest.raises(DomainError):
        GaussianMeasureSpec.from_functions(50, [0.5, 1.2])


def test_spec_reorthonormalizes_nonorthogonal_functions():
    spec = GaussianMeasureSpec.from_functions(
        200, [0.3, 0.2], [lambda s: np.ones_like(s), lambda s: s])
    assert spec.reorthonormalized
    gram = spec.gamma @ spec.gamma.T / spec.p
    np.testing.assert_allclose(gram, np.eye(2), atol=1e-12)


def test_spec_appends_out_of_span_drift():
    spec = GaussianMeasureSpec.from_functions(100, [0.5], "cosine", eta=np.ones(100))
    assert spec.J == 2 and spec.a[-1] == 0.0
    # the drift is fully represented by the eigenfunctions
    eta_back = spec.eta_coeffs @ spec.gamma
    np.testing.assert_allclose(eta_back, spec.eta, atol=1e-12)


def test_from_spectrum_truncation_tail():
    spec = make_spike_spectrum(50, [4.0, 3.0, 2.0], cosine_basis(50, 3))
    g = GaussianMeasureSpec.from_spectrum(spec, truncation=2)
    np.testing.assert_allclose(g.a, [-3.0, -2.0])
    assert g.tail_sq == pytest.approx(1.0)
    with pytest.raises(ValidationError):
        GaussianMeasureSpec.from_spectrum(
            SpectrumModel(p=5, values=[3.0], vectors=np.eye(5)[:, :1], bulk=2.0))


def test_rn_density_identity_is_zero():
    spec = GaussianMeasureSpec.from_spectrum(SpectrumModel.identity(64))
    x = np.random.default_rng(3).standard_normal(64) / 8
    assert rn_density(build_path(x), spec) == 0.0


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10 ** 6), scale=st.floats(-2.0, 2.0))
def test_cameron_martin_is_rn_density_with_zero_a(seed, scale):
    p = 128
    rng = np.random.default_rng(seed)
    eta = scale * np.cos(np.linspace(0, 3, p)) + rng.standard_normal(p) * 0.1
    x = rng.standard_normal(p) / math.sqrt(p)
    pl = build_path(x)
    spec = GaussianMeasureSpec(a=np.zeros(0), gamma=np.zeros((0, p)), eta=eta)
    assert rn_density(pl, spec) == pytest.approx(cameron_martin_density(pl, eta), abs=1e-10)


def test_rn_density_matches_gaussian_likelihood_ratio():
    # on the grid, increments are N(0, C/p) with C = I - sum a_j g_j g_j'; the
    # RN density equals the ratio of that Gaussian density to N(0, I/p)
    p = 40
    spec = GaussianMeasureSpec.from_functions(p, [0.6, -1.5], "cosine")
    g = spec.gamma / math.sqrt(p)
    C = np.eye(p) - (g.T * spec.a) @ g
    dY = np.random.default_rng(4).standard_normal(p) / math.sqrt(p)
    Cp = C / p
    _, logdet = np.linalg.slogdet(Cp)
    lr = (-0.5 * logdet - 0.5 * dY @ np.linalg.solve(Cp, dY)
          + 0.5 * p * math.log(1 / p) + 0.5 * p * dY @ dY)
    pl = PathPolyline(np.concatenate([[0.0], np.cumsum(dY)]))
    assert rn_density(pl, spec) == pytest.approx(lr, rel=1e-10)


def test_coefficients_and_density_are_consistent():
    spec = GaussianMeasureSpec.from_functions(64, [0.4, 0.1], "cosine", eta=np.linspace(0, 1, 64))
    Y = simulate_limit_path(spec, 5, seed=5)
    Yj = wiener_coefficients(Y, spec)
    np.testing.assert_allclose(rn_density(Y, spec), rn_density_from_coefficients(Yj, spec))


def test_covariance_R_uniform_and_symmetry():
    spec = GaussianMeasureSpec.from_functions(100, [0.5, -1.0], "cosine")
    s = np.array([0.1, 0.4, 0.9])
    R = covariance_R(spec, s[:, None], s[None, :])
    np.testing.assert_allclose(R, R.T, atol=1e-15)
    assert np.all(np.linalg.eigvalsh(R) > 0)
    ident = GaussianMeasureSpec(a=np.zeros(0), gamma=np.zeros((0, 100)))
    np.testing.assert_allclose(covariance_R(ident, s[:, None], s[None, :]),
                               np.minimum.outer(s, s))


def test_covariance_R_cosine_closed_form():
    # G_j(t) = sqrt(2) sin(j pi t) / (j pi) for gamma_j = sqrt(2) cos(j pi s)
    p = 4000
    a = np.array([0.5, -2.0])
    spec = GaussianMeasureSpec.from_functions(p, a, "cosine")
    s, t = 0.3, 0.7
    G = lambda u: np.sqrt(2) * np.sin(np.arange(1, 3) * np.pi * u) / (np.arange(1, 3) * np.pi)
    ref = min(s, t) - np.sum(a * G(s) * G(t))
    assert covariance_R(spec, s, t) == pytest.approx(ref, abs=1e-6)


def test_simulated_increment_covariance_is_exact():
    p = 30
    spec = GaussianMeasureSpec.from_functions(p, [0.7, -0.5], "cosine")
    Y = simulate_limit_path(spec, 60000, seed=6)
    dY = np.diff(Y, axis=1)
    g = spec.gamma / math.sqrt(p)
    C = (np.eye(p) - (g.T * spec.a) @ g) / p
    np.testing.assert_allclose(np.cov(dY.T), C, atol=4 * math.sqrt(2.0 / 60000) / p)


def test_simulated_mean_path():
    spec = GaussianMeasureSpec.from_functions(50, [0.3], "cosine", eta=2.0)
    Y = simulate_limit_path(spec, 20000, seed=7)
    np.testing.assert_allclose(Y.mean(axis=0), spec.mean_path(), atol=0.05)


def test_simulate_knots_subset_and_determinism():
    spec = GaussianMeasureSpec.from_functions(40, [0.3], "cosine")
    full = simulate_limit_path(spec, 1000, seed=8)
    sub = simulate_limit_path(spec, 1000, seed=8, knots=[10, 40])
    np.testing.assert_array_equal(full[:, [10, 40]], sub)


def test_sphere_paths_approach_wiener():
    # Q_p(x, t) for uniform x has variance t exactly
    p = 1000
    fs = draw(UniformParams(p), 20000, seed=9, extra=indicator_vector(p, 0.3)[:, None] / math.sqrt(300))
    q = fs.project(indicator_vector(p, 0.3)[:, None] / math.sqrt(300))[0] * math.sqrt(300)
    assert q.var() == pytest.approx(0.3, rel=0.03)


def test_spec_dict_round_trip():
    spec = GaussianMeasureSpec.from_functions(32, [0.2, -0.4], "cosine", eta=np.ones(32))
    back = GaussianMeasureSpec.from_dict(spec.to_dict())
    np.testing.assert_allclose(back.gamma, spec.gamma)
    np.testing.assert_allclose(back.a, spec.a)
    cos = GaussianMeasureSpec.from_dict({"p": 32, "a": [0.2, -0.4], "basis": {"kind": "cosine"}})
    np.testing.assert_allclose(cos.gamma, GaussianMeasureSpec.from_functions(32, [0.2, -0.4]).gamma)


def test_path_to_csv():
    text = path_to_csv(build_path(np.array([1.0, 2.0])))
    assert text.splitlines() == ["t,value", "0,0", "0.5,1", "1,3"]


def test_bingham_paths_have_limit_covariance():
    p = 2000
    spec = make_spike_spectrum(p, [3.0], cosine_basis(p, 1))
    g = GaussianMeasureSpec.from_spectrum(spec)
    ind = indicator_vector(p, 0.5)[:, None] / math.sqrt(1000)
    fs = draw(BinghamParams(spec), 20000, seed=10, extra=ind)
    q = fs.project(ind)[0] * math.sqrt(1000)
    target = covariance_R(g, 0.5, 0.5)
    assert q.var() == pytest.approx(target, abs=4 * target * math.sqrt(2 / 20000) + 0.01)
