"""Log densities and normalizing constants.

Every family's exponent depends on ``x`` only through ``V^* x`` for a few
"key" vectors ``V`` (plus ``||x|| = 1``), so exponents can be evaluated on
dense vectors and on framed samples alike.

Reference measures: real families are normalized against the uniform
probability measure on ``S^{p-1}``; complex families against surface
measure on ``CS^{p-1}`` (total mass ``2 pi^p / (p-1)!``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .. import specfun
from ..errors import DegeneracyError, ValidationError
from ..spectral import SampleMatrix
from .framed import FramedSample
from .params import (BinghamParams, ComplexBinghamParams, ComplexWatsonParams,
                     FisherBinghamParams, UniformParams, VmfParams,
                     WatsonParams)
from .sampling import draw

__all__ = [
    "LogDensity",
    "MCEstimate",
    "key_vectors",
    "exponent",
    "log_constant",
    "logpdf",
    "mc_log_constant",
    "reference_measure",
]

NORM_TOL = 1e-6


def reference_measure(params):
    return "surface" if params.is_complex else "uniform"


def key_vectors(params):
    """Orthonormal ``p x k`` vectors through which the exponent sees ``x``."""
    if isinstance(params, UniformParams):
        return np.zeros((params.p, 0), dtype=complex if params.complex_ else float)
    if isinstance(params, (VmfParams, ComplexWatsonParams)):
        return params.mode[:, None]
    if isinstance(params, WatsonParams):
        return params.basis.columns
    if isinstance(params, FisherBinghamParams):
        return params.structure()[0]
    return params.spectrum.vectors


def _exponent_from_proj(params, proj):
    """Exponent from ``proj = key_vectors(params)^* x`` (shape ``(k, n)``)."""
    p = params.p
    sq = np.abs(proj) ** 2
    if isinstance(params, UniformParams):
        return np.zeros(proj.shape[1])
    if isinstance(params, VmfParams):
        return math.sqrt(p) * params.kappa * proj[0].real
    if isinstance(params, WatsonParams):
        return p * params.kappa * np.sum(sq, axis=0)
    if isinstance(params, ComplexWatsonParams):
        return -p + p * params.kappa * sq[0]
    if isinstance(params, BinghamParams):
        s = params.spectrum
        # -(p/2) x' Sigma^{-1} x + p/2, written with the deviations of Sigma^{-1}
        dev = 1.0 / s.values - 1.0 / s.bulk
        quad = 1.0 / s.bulk + dev @ sq
        return 0.5 * p - 0.5 * p * quad
    if isinstance(params, ComplexBinghamParams):
        s = params.spectrum
        beta = 1.0 - 1.0 / s.values
        beta_bulk = 1.0 - 1.0 / s.bulk
        return p * (beta_bulk + (beta - beta_bulk) @ sq)
    if isinstance(params, FisherBinghamParams):
        V, lam, inu = params.structure()
        beta = 0.5 * (1.0 - 1.0 / lam)
        beta_bulk = 0.5 * (1.0 - 1.0 / params.spectrum.bulk)
        lin = math.sqrt(p) * params.kappa * proj[inu].real
        return lin + p * (beta_bulk + (beta - beta_bulk) @ sq)
    raise ValidationError(f"unknown family {type(params).__name__}")


def _unit_columns(params, x):
    if isinstance(x, SampleMatrix):
        x = x.data
    X = np.asarray(x)
    single = X.ndim == 1
    if single:
        X = X[:, None]
    if X.shape[0] != params.p:
        raise ValidationError(f"x has dimension {X.shape[0]}, expected p={params.p}")
    if np.iscomplexobj(X) and not params.is_complex:
        raise ValidationError("complex x for a real family")
    norms = np.linalg.norm(X, axis=0)
    bad = np.flatnonzero(np.abs(norms - 1.0) > NORM_TOL)
    if bad.size:
        raise ValidationError(
            f"column {bad[0]} has norm {norms[bad[0]]:.9g}; points must lie on the "
            f"unit sphere within {NORM_TOL:g}"
        )
    return X / norms, single


def exponent(params, x):
    """Unnormalized log density at unit vectors ``x`` (vector, p x n array,
    :class:`SampleMatrix` or :class:`FramedSample`)."""
    V = key_vectors(params)
    if isinstance(x, FramedSample):
        proj = x.project(V) if V.shape[1] else np.zeros((0, x.n))
        return _exponent_from_proj(params, proj)
    X, single = _unit_columns(params, x)
    out = _exponent_from_proj(params, V.conj().T @ X)
    return float(out[0]) if single else out


def log_constant(params):
    """Exact log normalizing constant, or ``None`` when only Monte Carlo is available.

    Exact: uniform, vMF, Watson, complex Watson and complex Bingham with
    distinct eigenvalues. Bingham and Fisher-Bingham need
    :func:`mc_log_constant`.
    """
    p = params.p
    if isinstance(params, UniformParams):
        return specfun.log_complex_sphere_area(p) if params.complex_ else 0.0
    if isinstance(params, VmfParams):
        return specfun.log_vmf_constant(p, params.kappa)
    if isinstance(params, WatsonParams):
        return specfun.log_watson_constant(p, params.kappa, h=params.h)
    if isinstance(params, ComplexWatsonParams):
        return specfun.log_complex_watson_constant(p, params.kappa)
    if isinstance(params, ComplexBinghamParams):
        try:
            return specfun.log_complex_bingham_constant(params.taus())
        except DegeneracyError:
            return None
    return None


@dataclass(frozen=True)
class LogDensity:
    """Result of :func:`logpdf`.

    ``value`` is ``exponent - log_constant`` when the constant is known, else
    ``None`` with ``oracle_required`` set; ``exponent`` is always filled.
    """

    exponent: np.ndarray | float
    log_constant: float | None
    reference: str
    oracle_required: bool
    note: str = ""

    @property
    def value(self):
        if self.log_constant is None:
            return None
        return self.exponent - self.log_constant


def logpdf(params, x, log_const=None):
    """Log density of ``x`` with respect to :func:`reference_measure`.

    ``log_const`` overrides the constant (e.g. an MC estimate for Bingham).
    Points must have unit norm within ``1e-6``; they are renormalized first.
    """
    e = exponent(params, x)
    note = ""
    if log_const is None:
        log_const = log_constant(params)
        if log_const is None:
            note = ("normalizing constant has no closed form here; supply one from "
                    "mc_log_constant")
    return LogDensity(exponent=e, log_constant=log_const,
                      reference=reference_measure(params),
                      oracle_required=log_const is None, note=note)


@dataclass(frozen=True)
class MCEstimate:
    """Monte Carlo log constant with a delta-method standard error."""

    estimate: float
    std_error: float
    n_draws: int
    seed: int

    def to_dict(self):
        return {"estimate": self.estimate, "std_error": self.std_error,
                "n_draws": self.n_draws, "seed": self.seed}


def mc_log_constant(params, n_draws, seed, workers=1):
    """``log E_U[exp(exponent(x))]`` under the uniform law, plus the reference-measure mass.

    The standard error of the log estimate is ``sd(w) / (mean(w) sqrt(n))``
    with ``w`` the importance weights.
    """
    n_draws = int(n_draws)
    if n_draws < 2:
        raise ValidationError("need at least two draws")
    V = key_vectors(params)
    u = UniformParams(params.p, params.is_complex)
    fs = draw(u, n_draws, seed, extra=V if V.shape[1] else None, workers=workers)
    e = np.asarray(exponent(params, fs), dtype=float)
    lse = float(logsumexp(e)) - math.log(n_draws)
    w = np.exp(e - e.max())
    se = float(np.std(w, ddof=1) / (np.mean(w) * math.sqrt(n_draws)))
    if params.is_complex:
        lse += specfun.log_complex_sphere_area(params.p)
    return MCEstimate(estimate=lse, std_error=se, n_draws=n_draws, seed=int(seed))
