"""Large-p Gaussian approximations and the laws of low-dimensional projections.

For large p each family is close to a Gaussian in ``R^p`` (or ``C^p``):

=================  ===============================================
uniform            ``N(0, I/p)``
Bingham            ``N(0, Sigma/p)``
vMF                ``N(kappa nu / sqrt(p), I/p)``
Watson             ``N(0, Sigma/p)``, ``Sigma = (I - 2 kappa P P')^{-1}``
Fisher-Bingham     ``N(kappa Sigma nu / sqrt(p), Sigma/p)``
complex Bingham    ``CN(0, Sigma/p)``, ``Sigma = (I - B)^{-1}``
complex Watson     ``CN(0, Sigma/p)``, ``Sigma^{-1} = I - kappa mu mu^*``
=================  ===============================================

Projected onto an ``h``-dimensional basis ``P`` whose span is invariant
under ``Sigma``, ``y = P^* Sigma^{-1/2} P P^* sqrt(p) x`` tends to
``N(phi, I_h)`` (complex: ``CN(phi, I_h)``, real and imaginary parts each
with variance 1/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from ..spectral import ProjectionBasis, SpectrumModel
from .framed import STREAM_DRAW, block_rngs, run_blocks
from .params import FisherBinghamParams, UniformParams, VmfParams

__all__ = ["GaussianApprox", "ProjectionLaw", "gaussian_approx", "projection_law"]


@dataclass(frozen=True)
class GaussianApprox:
    """``N(mean, cov.dense() / scale)``, complex-circular when ``cov.hermitian``.

    ``cov`` is kept in spectral form so ``p = 10**5`` costs nothing until
    sampling.
    """

    mean: np.ndarray
    cov: SpectrumModel
    scale: float

    @property
    def p(self):
        return self.cov.p

    @property
    def is_complex(self):
        return self.cov.hermitian

    def covariance(self):
        return self.cov.dense() / self.scale

    def sample(self, n, seed, renormalize=False, workers=1):
        """Dense ``p x n`` draws; ``renormalize`` projects them onto the sphere."""
        p, complex_ = self.p, self.is_complex

        def block(rng, m):
            z = rng.standard_normal((p, m))
            if complex_:
                z = (z + 1j * rng.standard_normal((p, m))) / math.sqrt(2.0)
            x = self.cov.apply(z, 0.5) / math.sqrt(self.scale) + self.mean[:, None]
            if renormalize:
                x = x / np.linalg.norm(x, axis=0)
            return x

        return np.hstack(run_blocks(block, block_rngs(seed, STREAM_DRAW, int(n)), workers))

    def squared_norm_moments(self):
        """Exact mean and variance of ``||v||^2`` for ``v`` from this Gaussian."""
        c = self.cov
        m = self.mean
        tr = c.trace() / self.scale
        tr2 = c.trace_sq() / self.scale ** 2
        mSm = float(np.real(np.vdot(m, c.apply(m)))) / self.scale
        mm = float(np.real(np.vdot(m, m)))
        if self.is_complex:
            return tr + mm, tr2 + 2.0 * mSm
        return tr + mm, 2.0 * tr2 + 4.0 * mSm

    def sample_squared_norms(self, n, seed):
        """Exact draws of ``||v||^2`` in ``O(n k)``, using the spectral form.

        The mean must lie in the span of the explicit eigenvectors or be zero.
        """
        c = self.cov
        V = c.vectors
        m = np.asarray(self.mean)
        coef = V.conj().T @ m if c.k else np.zeros(0)
        if np.linalg.norm(m - V @ coef) > 1e-10 * max(1.0, np.linalg.norm(m)):
            raise ValidationError("mean must lie in the span of the explicit eigenvectors")
        rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(2,)))
        n = int(n)
        sd = np.sqrt(c.values / self.scale)
        if self.is_complex:
            z = (rng.standard_normal((c.k, n)) + 1j * rng.standard_normal((c.k, n))) / math.sqrt(2)
            bulk_df = 2 * (c.p - c.k)
            bulk = rng.chisquare(bulk_df, n) / 2.0 if bulk_df else np.zeros(n)
        else:
            z = rng.standard_normal((c.k, n))
            bulk_df = c.p - c.k
            bulk = rng.chisquare(bulk_df, n) if bulk_df else np.zeros(n)
        spikes = np.sum(np.abs(sd[:, None] * z + coef[:, None]) ** 2, axis=0)
        return spikes + bulk * c.bulk / self.scale


@dataclass(frozen=True)
class ProjectionLaw:
    """Limit law of ``y = transform @ (sqrt(p) P^* x)``: ``N(mean, I_h)``.

    For complex families ``y`` is ``CN(mean, I_h)``; ``sqrt(2) Re y`` and
    ``sqrt(2) Im y`` are then standard normal after centring.
    """

    basis: ProjectionBasis
    transform: np.ndarray
    mean: np.ndarray
    is_complex: bool

    @property
    def h(self):
        return self.basis.h

    @property
    def p(self):
        return self.basis.p

    def standardize(self, coords):
        """Map ``P^* x`` (shape ``(h, n)``) to ``y``."""
        return self.transform @ (math.sqrt(self.p) * np.asarray(coords))

    def real_components(self, y):
        """Centred ``y`` as real coordinates that are N(0, 1) in the limit."""
        d = np.asarray(y) - self.mean[:, None]
        if self.is_complex:
            return math.sqrt(2.0) * np.vstack([d.real, d.imag])
        return d.real

    def quadratic_form_law(self):
        """``(df, noncentrality, scale)`` such that ``scale * ||y||^2 ~ chi2(df, nc)``."""
        nc = float(np.sum(np.abs(self.mean) ** 2))
        if self.is_complex:
            return 2 * self.h, 2.0 * nc, 2.0
        return self.h, nc, 1.0

    def gaussian(self):
        dtype = complex if self.is_complex else float
        ident = SpectrumModel(p=self.h, values=np.zeros(0),
                              vectors=np.zeros((self.h, 0), dtype=dtype), bulk=1.0,
                              hermitian=self.is_complex)
        return GaussianApprox(mean=np.asarray(self.mean, dtype=dtype), cov=ident, scale=1.0)


def gaussian_approx(params):
    """The matching Gaussian in ``R^p`` or ``C^p`` (see the module table)."""
    sigma = params.sigma_model()
    p = params.p
    dtype = complex if params.is_complex else float
    mean = np.zeros(p, dtype=dtype)
    if isinstance(params, VmfParams):
        mean = params.kappa * params.mode / math.sqrt(p)
    elif isinstance(params, FisherBinghamParams):
        mean = params.kappa * sigma.apply(params.mode) / math.sqrt(p)
    return GaussianApprox(mean=mean, cov=sigma, scale=float(p))


def _inv_sqrt_on_span(sigma, P):
    """``P^* Sigma^{-1/2} P`` after checking that span(P) is Sigma-invariant."""
    if not sigma.invariant_span(P):
        raise ValidationError(
            "the projection span must be invariant under Sigma (spanned by "
            "eigenvectors of Sigma, or by directions inside one eigenspace)"
        )
    return P.conj().T @ sigma.apply(P, -0.5)


def projection_law(params, basis, fb_mean="derived"):
    """Limit law of the standardized projection onto ``basis``.

    Parameters
    ----------
    params : family parameters
    basis : ProjectionBasis
        For Sigma-based families its span must be invariant under Sigma. For
        Fisher-Bingham it must also contain ``nu``.
    fb_mean : {"derived", "sigma"}
        Fisher-Bingham limit mean. ``"derived"`` is
        ``kappa P' Sigma^{1/2} P P' nu``, which follows from
        ``x ~ N(kappa Sigma nu / sqrt(p), Sigma / p)``. ``"sigma"`` is
        ``kappa P' Sigma P P' nu``; it agrees only when ``nu`` has Sigma
        eigenvalue 1 and is kept so that the difference can be tested.
    """
    if not isinstance(basis, ProjectionBasis):
        basis = ProjectionBasis(basis)
    if basis.p != params.p:
        raise ValidationError(f"basis has p={basis.p}, parameters have p={params.p}")
    P = basis.columns
    if params.is_complex:
        P = P.astype(complex)
    elif np.iscomplexobj(P):
        raise ValidationError("complex basis for a real family")
    h = basis.h
    dtype = complex if params.is_complex else float
    sigma = params.sigma_model()
    if isinstance(params, (UniformParams, VmfParams)):
        T = np.eye(h, dtype=dtype)
    else:
        T = _inv_sqrt_on_span(sigma, P)
    mean = np.zeros(h, dtype=dtype)
    if isinstance(params, VmfParams):
        mean = params.kappa * (P.T @ params.mode)
    elif isinstance(params, FisherBinghamParams):
        nu = params.mode
        coef = P.T @ nu
        if abs(np.linalg.norm(coef) - 1.0) > 1e-8:
            raise ValidationError("Fisher-Bingham projection basis must contain nu")
        if fb_mean == "derived":
            mean = params.kappa * (P.T @ sigma.apply(P @ coef, 0.5))
        elif fb_mean == "sigma":
            mean = params.kappa * (P.T @ sigma.apply(P @ coef))
        else:
            raise ValidationError(f"fb_mean must be 'derived' or 'sigma', got {fb_mean!r}")
    return ProjectionLaw(basis=basis, transform=T, mean=mean, is_complex=params.is_complex)
