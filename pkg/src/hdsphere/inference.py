"""Large-p fitting and asymptotic inference for Bingham-type and vMF models.

Bingham eigenvectors are the exact maximum-likelihood estimates; the
eigenvalues use the Gaussian (large-p) approximation ``lambda_j ~ p omega_j``.
The exact eigenvalue MLE needs the Bingham normalizing constant and is not
attempted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import ValidationError
from .spectral import EigenReport, SampleMatrix, dual_pca, sym_eigen

__all__ = [
    "BinghamFit",
    "VmfFit",
    "EigenCltReport",
    "ComplexFit",
    "fit_bingham",
    "fit_vmf_projected",
    "eigen_clt",
    "concentration_test",
    "fit_complex",
    "complex_watson_kappa",
    "GAP_TOL",
]

GAP_TOL = 1e-3
UNIT_TOL = 1e-6


def _unit_data(X, complex_ok=False):
    data = X.data if isinstance(X, SampleMatrix) else np.asarray(X)
    if data.ndim != 2:
        raise ValidationError("expected a p x n matrix of observations")
    if np.iscomplexobj(data) and not complex_ok:
        raise ValidationError("complex data; use fit_complex")
    p, n = data.shape
    if n < 2:
        raise ValidationError(f"need at least 2 observations, got {n}")
    norms = np.linalg.norm(data, axis=0)
    bad = np.flatnonzero(np.abs(norms - 1.0) > UNIT_TOL)
    if bad.size:
        raise ValidationError(f"column {bad[0]} has norm {norms[bad[0]]:.9g}, expected 1")
    return data / norms


def _spectral_fit(data):
    p, n = data.shape
    if n < p:
        return dual_pca(data)
    rep = sym_eigen(data @ data.conj().T / n)
    keep = rep.values > 1e-12 * rep.values[0]
    return EigenReport(values=rep.values, vectors=rep.vectors, rank=int(keep.sum()))


@dataclass(frozen=True)
class BinghamFit:
    """Approximate MLE of a real Bingham model.

    ``omega_hat`` are the eigenvalues of ``S = X X' / n``; ``sigma_hat``
    holds the eigenpairs of ``(p/n) sum x x'`` (``lambda_hat = p omega_hat``).
    Only the ``rank`` numerically nonzero pairs are stored when ``n < p``.
    """

    sigma_hat: EigenReport
    omega_hat: np.ndarray
    p: int
    n: int
    approximate: bool = True

    @property
    def mode(self):
        return self.sigma_hat.vectors[:, 0]

    @property
    def concentration(self):
        return float(self.omega_hat[0])

    @property
    def lambda_hat(self):
        return self.sigma_hat.values

    def to_dict(self, include_vectors=True):
        out = {
            "family": "bingham",
            "p": self.p,
            "n": self.n,
            "approximate_eigenvalues": self.approximate,
            "omega_hat": self.omega_hat.tolist(),
            "lambda_hat": self.lambda_hat.tolist(),
            "concentration": self.concentration,
        }
        if include_vectors:
            out["mode"] = _encode(self.mode)
        return out


def _encode(v):
    v = np.asarray(v)
    if np.iscomplexobj(v):
        return {"re": v.real.tolist(), "im": v.imag.tolist()}
    return v.tolist()


def fit_bingham(X):
    """Eigen-fit of ``(p/n) sum x_i x_i'`` for unit columns ``x_i``.

    Uses dual PCA when ``n < p``. The ``omega_hat`` sum to 1 (the trace of S).
    """
    data = _unit_data(X)
    p, n = data.shape
    rep = _spectral_fit(data)
    omega = rep.values
    sigma = EigenReport(values=p * omega, vectors=rep.vectors, rank=rep.rank,
                        delta=rep.delta, scores_norm=rep.scores_norm)
    return BinghamFit(sigma_hat=sigma, omega_hat=omega, p=p, n=n)


@dataclass(frozen=True)
class VmfFit:
    """``kappa_hat = ||sqrt(h) mean(v_i)||`` and the unit direction estimate."""

    kappa_hat: float
    direction_hat: np.ndarray | None
    h: int
    n: int
    direction_defined: bool = True

    def to_dict(self):
        return {
            "family": "vmf",
            "kappa_hat": self.kappa_hat,
            "direction_hat": None if self.direction_hat is None else self.direction_hat.tolist(),
            "direction_defined": self.direction_defined,
            "h": self.h,
            "n": self.n,
        }


def fit_vmf_projected(V):
    """Fit from ``v_i = sqrt(p) P_h' x_i / sqrt(h)`` stacked as an ``h x n`` array."""
    V = np.asarray(V, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    h, n = V.shape
    if n < 1:
        raise ValidationError("need at least one observation")
    resultant = math.sqrt(h) * V.mean(axis=1)
    kappa = float(np.linalg.norm(resultant))
    if kappa == 0.0:
        return VmfFit(kappa_hat=0.0, direction_hat=None, h=h, n=n, direction_defined=False)
    return VmfFit(kappa_hat=kappa, direction_hat=resultant / kappa, h=h, n=n)


@dataclass(frozen=True)
class EigenCltReport:
    """Asymptotic standard errors of sample eigenvalues and eigenvectors.

    ``std_errors[j] = sqrt(2/n) lambda_j``. ``V[j]`` is the limiting
    covariance of ``sqrt(n)(gamma_hat_j - gamma_j)``. When two eigenvalues
    are within a relative gap of ``GAP_TOL``, ``degenerate`` is set and the
    eigenvector covariances are not computed.
    """

    values: np.ndarray
    std_errors: np.ndarray
    V: np.ndarray | None
    n: int
    degenerate: bool = False
    notes: list = field(default_factory=list)

    def intervals(self, level=0.95):
        """Normal-theory intervals ``lambda_j -/+ z sd_j``, shape ``(h, 2)``."""
        if not 0 < level < 1:
            raise ValidationError("level must be in (0, 1)")
        z = stats.norm.ppf(0.5 + level / 2.0)
        return np.column_stack([self.values - z * self.std_errors,
                                self.values + z * self.std_errors])

    def to_dict(self):
        return {
            "values": self.values.tolist(),
            "std_errors": self.std_errors.tolist(),
            "n": self.n,
            "degenerate": self.degenerate,
            "notes": list(self.notes),
        }


def eigen_clt(values, vectors, n, gap_tol=GAP_TOL):
    """Eigenvalue and eigenvector CLT quantities.

    Parameters
    ----------
    values : (h,) array
        Eigenvalues (estimates or truth), any order.
    vectors : (m, h) array
        Matching orthonormal eigenvectors (``m >= h``).
    n : int
        Sample size.
    """
    lam = np.asarray(values, dtype=float).ravel()
    G = np.asarray(vectors)
    if G.ndim == 1:
        G = G[:, None]
    if G.shape[1] != lam.size:
        raise ValidationError("need one eigenvector per eigenvalue")
    if int(n) < 1:
        raise ValidationError("n must be positive")
    se = math.sqrt(2.0 / n) * np.abs(lam)
    notes = []
    diff = np.abs(lam[:, None] - lam[None, :])
    scale = np.maximum(np.abs(lam[:, None]), np.abs(lam[None, :]))
    np.fill_diagonal(diff, np.inf)
    rel = diff / np.where(scale > 0, scale, 1.0)
    if lam.size > 1 and np.min(rel) < gap_tol:
        i, j = np.unravel_index(np.argmin(rel), rel.shape)
        notes.append(
            f"eigenvalues {i} and {j} coincide within relative gap {gap_tol:g}; "
            "eigenvector covariances need distinct eigenvalues and were not computed"
        )
        return EigenCltReport(values=lam, std_errors=se, V=None, n=int(n),
                              degenerate=True, notes=notes)
    h = lam.size
    V = np.zeros((h, G.shape[0], G.shape[0]), dtype=G.dtype)
    for j in range(h):
        w = np.array([0.0 if k == j else lam[j] * lam[k] / (lam[k] - lam[j]) ** 2
                      for k in range(h)])
        V[j] = (G * w) @ G.conj().T
    return EigenCltReport(values=lam, std_errors=se, V=V, n=int(n), notes=notes)


def concentration_test(direction_hat, kappa_hat, true_direction, n, h=None):
    """Statistic ``n kappa_hat^2 rho^2`` against ``chi2_{h-1}``.

    ``rho`` is the angle between the unit directions (inner product clamped
    to ``[-1, 1]``). For ``h = 1`` the statistic is identically 0 and the
    result is flagged degenerate.
    """
    d = np.asarray(direction_hat, dtype=float).ravel()
    t = np.asarray(true_direction, dtype=float).ravel()
    if d.shape != t.shape:
        raise ValidationError("direction vectors differ in length")
    h = d.size if h is None else int(h)
    if not kappa_hat > 0:
        raise ValidationError("kappa_hat must be positive")
    cos = float(np.clip(d @ t / (np.linalg.norm(d) * np.linalg.norm(t)), -1.0, 1.0))
    rho = math.acos(cos)
    stat = n * kappa_hat ** 2 * rho ** 2
    if h == 1:
        return {"statistic": 0.0, "p_value": 1.0, "rho": rho, "df": 0, "degenerate": True}
    return {"statistic": stat, "p_value": float(stats.chi2.sf(stat, h - 1)),
            "rho": rho, "df": h - 1, "degenerate": False}


def complex_watson_kappa(omega1, p):
    """Moment-matching ``kappa_hat`` from the top eigenvalue share ``omega1``.

    Under ``CN(0, Sigma/p)`` with ``Sigma = I + (1/(1-kappa) - 1) mu mu^*``
    the top share is ``lambda / (lambda + p - 1)``; inverting gives
    ``kappa = 1 - (1 - omega1) / (omega1 (p - 1))``.
    """
    if not 0 < omega1 <= 1:
        raise ValidationError("omega1 must be in (0, 1]")
    if omega1 == 1.0:
        return 1.0
    return 1.0 - (1.0 - omega1) / (omega1 * (p - 1))


@dataclass(frozen=True)
class ComplexFit:
    family: str
    spectral: EigenReport
    omega_hat: np.ndarray
    p: int
    n: int
    kappa_hat: float | None = None

    @property
    def mode(self):
        return self.spectral.vectors[:, 0]

    def to_dict(self, include_vectors=True):
        out = {
            "family": self.family,
            "p": self.p,
            "n": self.n,
            "omega_hat": self.omega_hat.tolist(),
            "kappa_hat": self.kappa_hat,
            "approximate_eigenvalues": True,
        }
        if include_vectors:
            out["mode"] = _encode(self.mode)
        return out


def fit_complex(X, family="cbingham"):
    """Hermitian eigen-fit of ``(p/n) sum z z^*``; complex Watson adds ``kappa_hat``.

    The mode is the top eigenvector, phase-fixed so that its largest entry is
    real and positive.
    """
    if family not in ("cbingham", "cwatson"):
        raise ValidationError("family must be 'cbingham' or 'cwatson'")
    data = _unit_data(X, complex_ok=True).astype(complex)
    p, n = data.shape
    rep = _spectral_fit(data)
    omega = rep.values
    kappa = complex_watson_kappa(float(omega[0]), p) if family == "cwatson" else None
    return ComplexFit(family=family, spectral=rep, omega_hat=omega, p=p, n=n,
                      kappa_hat=kappa)

