import math


def spiked_cosine(lam, gamma):
    """Limiting |cos| between sample and population spike eigenvectors (gamma = p/n)."""
    a = lam - 1.0
    return math.sqrt((1 - gamma / a ** 2) / (1 + gamma / a))


def bingham_effective_spikes(p, spikes):
    """Spikes of the Gaussian that matches Bingham(Sigma) on the sphere.

    Bingham is N(0, (p Sigma^{-1} + s)^{-1}) conditioned on the unit sphere,
    with the tilt s fixed by a unit expected squared norm.
    """
    spikes = np.asarray(spikes, dtype=float)
    k = spikes.size

    def excess(s):
        return (p - k) / (p + s) + np.sum(1 / (p / spikes + s)) - 1

    s = optimize.brentq(excess, -min(p / spikes) + 1e-9, 10.0 * p)
    return (p + s) / (p / spikes + s)

import numpy as np
import pytest
from scipy import optimize, stats

from hdsphere.distributions import (BinghamParams, ComplexWatsonParams, VmfParams, draw,
                                    sample)
from hdsphere.errors import ValidationError
from hdsphere.inference import (complex_watson_kappa, concentration_test, eigen_clt,
                                fit_bingham, fit_complex, fit_vmf_projected)
from hdsphere.spectral import ProjectionBasis, make_spike_spectrum


def test_fit_bingham_recovers_spikes_at_large_p():
    p = 2000
    spec = make_spike_spectrum(p, [40.0, 10.0])
    X = sample(BinghamParams(spec), 400, seed=1)
    fit = fit_bingham(X)
    assert fit.omega_hat.sum() == pytest.approx(1.0, abs=1e-12)
    # alignment with the spike axes follows the spiked-covariance limit, using
    # the finite-p effective spikes (about 24.8 and 8.8 here, not 40 and 10)
    eff = bingham_effective_spikes(p, [40.0, 10.0])
    assert abs(fit.mode[0]) == pytest.approx(spiked_cosine(eff[0], p / 400), abs=0.04)
    assert abs(fit.sigma_hat.vectors[1, 1]) == pytest.approx(spiked_cosine(eff[1], p / 400),
                                                             abs=0.04)
    np.testing.assert_allclose(fit.lambda_hat, p * fit.omega_hat)


def test_fit_bingham_small_n_uses_dual_and_large_n_direct():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((10, 40))
    X /= np.linalg.norm(X, axis=0)
    fit = fit_bingham(X)
    S = X @ X.T / 40
    np.testing.assert_allclose(fit.omega_hat, np.sort(np.linalg.eigvalsh(S))[::-1], atol=1e-12)
    Y = X[:, :5]
    fit2 = fit_bingham(Y)
    assert fit2.sigma_hat.rank == 5


def test_fit_rejects_non_unit_columns():
    with pytest.raises(ValidationError, match="column 1"):
        fit_bingham(np.array([[1.0, 2.0], [0.0, 0.0]]))
    with pytest.raises(ValidationError):
        fit_bingham(np.array([[1.0], [0.0]]))


def test_fit_vmf_projected_noncentral_mean():
    p, h, n, kappa = 5000, 3, 300, 1.5
    basis = ProjectionBasis.axes(p, h)
    fs = draw(VmfParams(np.eye(p)[0], kappa), n, seed=3, extra=basis)
    V = math.sqrt(p) * fs.project(basis) / math.sqrt(h)
    fit = fit_vmf_projected(V)
    assert fit.direction_defined
    assert fit.direction_hat[0] > 0.9
    # E[n kappa_hat^2] = h + n kappa^2
    assert n * fit.kappa_hat ** 2 == pytest.approx(h + n * kappa ** 2, rel=0.25)


def test_fit_vmf_zero_resultant():
    fit = fit_vmf_projected(np.array([[1.0, -1.0], [2.0, -2.0]]))
    assert fit.kappa_hat == 0.0 and not fit.direction_defined and fit.direction_hat is None


def test_eigen_clt_standard_errors():
    lam = np.array([4.0, 2.0, 1.0])
    rep = eigen_clt(lam, np.eye(3), 100)
    np.testing.assert_allclose(rep.std_errors, math.sqrt(2 / 100) * lam)
    assert not rep.degenerate
    # V_1 = sum_{k != 1} lam_1 lam_k / (lam_k - lam_1)^2 gamma_k gamma_k'
    np.testing.assert_allclose(np.diag(rep.V[0]), [0, 8 / 4, 4 / 9])
    ci = rep.intervals(0.95)
    assert np.all(ci[:, 0] < lam) and np.all(lam < ci[:, 1])


def test_eigen_clt_eigenvector_covariance_by_simulation():
    lam = np.array([5.0, 2.0, 1.0])
    n, R = 400, 3000
    rng = np.random.default_rng(4)
    g1 = []
    for _ in range(R):
        Z = rng.standard_normal((3, n)) * np.sqrt(lam)[:, None]
        w, V = np.linalg.eigh(Z @ Z.T / n)
        v = V[:, -1] * np.sign(V[0, -1])
        g1.append(math.sqrt(n) * (v - np.eye(3)[0]))
    emp = np.var(np.array(g1), axis=0)
    theory = np.diag(eigen_clt(lam, np.eye(3), n).V[0])
    np.testing.assert_allclose(emp[1:], theory[1:], rtol=0.1)


def test_eigen_clt_flags_coincident_eigenvalues():
    rep = eigen_clt([2.0, 2.0000001, 1.0], np.eye(3), 50)
    assert rep.degenerate and rep.V is None and rep.notes


def test_concentration_test_degenerate_and_clamped():
    res = concentration_test([1.0], 2.0, [1.0], 10)
    assert res["degenerate"] and res["statistic"] == 0.0
    d = np.array([1.0, 1e-17, 0.0])
    res = concentration_test(d, 1.0, [1.0, 0.0, 0.0], 10)
    assert res["rho"] == pytest.approx(0.0, abs=1e-8)
    res = concentration_test([0.0, 1.0], 1.0, [1.0, 0.0], 10)
    assert res["rho"] == pytest.approx(math.pi / 2)
    assert res["p_value"] == pytest.approx(stats.chi2.sf(10 * (math.pi / 2) ** 2, 1))


def test_complex_watson_kappa_inverts_moment_map():
    p, kappa = 200, 0.7
    lam = 1 / (1 - kappa)
    omega1 = lam / (lam + p - 1)
    assert complex_watson_kappa(omega1, p) == pytest.approx(kappa, rel=1e-12)
    with pytest.raises(ValidationError):
        complex_watson_kappa(0.0, p)


def test_fit_complex_watson():
    p = 400
    mode = np.zeros(p, dtype=complex)
    mode[0] = np.exp(0.3j)
    X = sample(ComplexWatsonParams(mode, 0.9), 3000, seed=5)
    fit = fit_complex(X, "cwatson")
    assert abs(fit.mode[0]) == pytest.approx(spiked_cosine(10.0, p / 3000), abs=0.01)
    assert fit.mode[0].imag == pytest.approx(0.0, abs=1e-12)
    assert fit.kappa_hat == pytest.approx(0.9, abs=0.03)
    assert fit.to_dict()["approximate_eigenvalues"]
