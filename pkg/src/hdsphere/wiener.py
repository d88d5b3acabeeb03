"""Random-walk paths of sphere points and their Gaussian-measure limits.

A point ``x`` in ``R^p`` becomes the polyline ``Q_p(x, k/p) = x_1 + ... + x_k``
on ``[0, 1]``. Uniform ``x`` gives Wiener paths as ``p`` grows; ``x`` with
covariance ``Sigma/p`` gives the Gaussian measure with covariance
``R(s, t) = min(s, t) - sum_j a_j G_j(s) G_j(t)``, ``G_j(s) = int_0^s gamma_j``,
where ``gamma_j`` are the grid eigenfunctions and ``a_j = 1 - lambda_j``.

Conventions
-----------
Grid functions are length-``p`` arrays: entry ``k`` is the value on the
cell ``((k-1)/p, k/p]``. The grid inner product is
``<f, g> = (1/p) sum_k f_k g_k``. A length ``p + 1`` array is read as
knot values and its left endpoints are used; a callable is evaluated at the
left endpoints ``(k-1)/p``.

Wiener integrals are left-endpoint sums ``sum_k f_k (Y(k/p) - Y((k-1)/p))``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ValidationError
from .spectral import cosine_basis

__all__ = [
    "PathPolyline",
    "GaussianMeasureSpec",
    "build_path",
    "build_paths",
    "grid_function",
    "wiener_integral",
    "wiener_coefficients",
    "rn_density",
    "rn_density_from_coefficients",
    "cameron_martin_density",
    "covariance_R",
    "simulate_limit_path",
    "path_to_csv",
    "indicator_vector",
    "DEFAULT_TRUNCATION",
]

DEFAULT_TRUNCATION = 64
ORTHO_TOL = 1e-8


@dataclass(frozen=True)
class PathPolyline:
    """Knot values ``Y(k/p)``, ``k = 0..p``, with ``Y(0) = 0``; linear in between."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise ValidationError("path needs at least two knots")
        if v[0] != 0.0:
            raise ValidationError("paths start at 0")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def p(self):
        return self.values.size - 1

    @property
    def knots(self):
        return np.arange(self.p + 1) / self.p

    @property
    def increments(self):
        return np.diff(self.values)

    def __call__(self, t):
        return np.interp(t, self.knots, self.values)


def build_path(x):
    """Polyline of the partial sums of ``x`` (length p)."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size < 1:
        raise ValidationError("need p >= 1")
    return PathPolyline(np.concatenate([[0.0], np.cumsum(x)]))


def build_paths(X):
    """Knot values for every column of a ``p x n`` array: shape ``(n, p + 1)``."""
    X = np.asarray(getattr(X, "data", X), dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    out = np.zeros((X.shape[1], X.shape[0] + 1))
    np.cumsum(X.T, axis=1, out=out[:, 1:])
    return out


def _increments(path):
    """``(n, p)`` increments from a PathPolyline, 1-D knots or ``(n, p+1)`` knots."""
    if isinstance(path, PathPolyline):
        return path.increments[None, :], True
    Y = np.asarray(path, dtype=float)
    single = Y.ndim == 1
    if single:
        Y = Y[None, :]
    return np.diff(Y, axis=1), single


def grid_function(f, p):
    """Interval values of ``f`` on a ``p``-cell grid (see module conventions)."""
    if callable(f):
        return np.asarray(f(np.arange(p) / p), dtype=float) * np.ones(p)
    f = np.asarray(f, dtype=float)
    if f.ndim == 0:
        return np.full(p, float(f))
    if f.shape[-1] == p:
        return f
    if f.shape[-1] == p + 1:
        return f[..., :-1]
    raise ValidationError(f"grid function has {f.shape[-1]} values, grid has {p} cells")


def wiener_integral(path, f):
    """Left-endpoint sum ``sum_k f_k dY_k`` (one value per path)."""
    dY, single = _increments(path)
    fk = grid_function(f, dY.shape[1])
    out = dY @ fk
    return float(out[0]) if single else out


def indicator_vector(p, t):
    """``1_t`` in ``R^p`` with ``1_t' x = Q_p(x, t)`` at knots ``t = k/p``."""
    k = int(round(t * p))
    if abs(k - t * p) > 1e-9 * p:
        raise ValidationError(f"t = {t} is not a knot of the {p}-cell grid")
    v = np.zeros(p)
    v[:k] = 1.0
    return v


@dataclass(frozen=True)
class GaussianMeasureSpec:
    """Gaussian measure on paths equivalent to Wiener measure.

    Parameters
    ----------
    a : (J,) array
        Eigenvalues of K; every ``a_j < 1``.
    gamma : (J, p) array
        Grid eigenfunctions, orthonormal under the grid inner product.
    eta : (p,) array, optional
        Drift; the mean path is ``m(t) = int_0^t eta``.
    tail_sq : float
        ``sum a_j^2`` over eigenvalues dropped by truncation (0 when none).

    If ``eta`` has a component outside ``span(gamma)``, that component is
    appended as an extra eigenfunction with ``a = 0`` so that the truncated
    density accounts for the whole drift.
    """

    a: np.ndarray
    gamma: np.ndarray
    eta: np.ndarray | None = None
    tail_sq: float = 0.0
    reorthonormalized: bool = field(default=False, compare=False)

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        G = np.atleast_2d(np.asarray(self.gamma, dtype=float))
        if a.size == 0:
            G = np.zeros((0, G.shape[-1]))
        if G.shape[0] != a.size:
            raise ValidationError(f"{a.size} eigenvalues but {G.shape[0]} eigenfunctions")
        if np.any(~np.isfinite(a)) or np.any(a >= 1.0):
            bad = a[~(a < 1.0)]
            raise DomainError(
                f"every a_j must be < 1 for equivalence with Wiener measure; got {bad.tolist()}"
            )
        p = G.shape[1]
        reortho = self.reorthonormalized
        if a.size:
            gram = G @ G.T / p
            if np.max(np.abs(gram - np.eye(a.size))) > ORTHO_TOL:
                Q, R = np.linalg.qr(G.T)
                sgn = np.sign(np.where(np.diag(R) == 0, 1.0, np.diag(R)))
                G = (Q * sgn).T * math.sqrt(p)
                reortho = True
        eta = None if self.eta is None else grid_function(self.eta, p).astype(float)
        if eta is not None and np.any(eta != 0):
            coef = G @ eta / p
            resid = eta - coef @ G
            rn = math.sqrt(float(resid @ resid) / p)
            if rn > 1e-12 * max(1.0, math.sqrt(float(eta @ eta) / p)):
                G = np.vstack([G, resid / rn])
                a = np.append(a, 0.0)
        for arr in (a, G):
            arr.setflags(write=False)
        if eta is not None:
            eta.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "gamma", G)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "reorthonormalized", reortho)

    @property
    def p(self):
        return self.gamma.shape[1]

    @property
    def J(self):
        return self.a.size

    @property
    def sum_a_sq(self):
        return float(np.sum(self.a ** 2))

    @property
    def m_coeffs(self):
        """Eigenvalues ``1 - sqrt(1 - a_j)`` of the kernel M."""
        return 1.0 - np.sqrt(1.0 - self.a)

    @property
    def eta_coeffs(self):
        """``eta_j = int eta gamma_j``."""
        if self.eta is None:
            return np.zeros(self.J)
        return self.gamma @ self.eta / self.p

    def G(self, t):
        """``int_0^t gamma_j`` for each j, exact for piecewise-constant gamma."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any((t < 0) | (t > 1)):
            raise ValidationError("times must lie in [0, 1]")
        cum = np.concatenate([np.zeros((self.J, 1)), np.cumsum(self.gamma, axis=1) / self.p], axis=1)
        knots = np.arange(self.p + 1) / self.p
        return np.vstack([np.interp(t, knots, row) for row in cum]) if self.J else np.zeros((0, t.size))

    def mean_path(self):
        if self.eta is None:
            return np.zeros(self.p + 1)
        return np.concatenate([[0.0], np.cumsum(self.eta) / self.p])

    @classmethod
    def from_functions(cls, p, a, funcs="cosine", eta=None):
        """Eigenfunctions given as callables on [0, 1] (sampled at cell midpoints)
        or ``"cosine"`` for ``sqrt(2) cos(j pi s)``, ``j = 1..J``."""
        a = np.atleast_1d(np.asarray(a, dtype=float))
        mid = (np.arange(p) + 0.5) / p
        if isinstance(funcs, str):
            if funcs != "cosine":
                raise ValidationError(f"unknown basis {funcs!r}")
            G = cosine_basis(p, a.size).T * math.sqrt(p)
        else:
            G = np.vstack([np.asarray(f(mid), dtype=float) for f in funcs])
        if eta is not None and callable(eta):
            eta = np.asarray(eta(mid), dtype=float) * np.ones(p)
        return cls(a=a, gamma=G, eta=eta)

    @classmethod
    def from_spectrum(cls, spectrum, truncation=DEFAULT_TRUNCATION, eta=None):
        """Spec of the paths of ``x ~ (Sigma/p)``: ``a_j = 1 - lambda_j``,
        ``gamma_j = sqrt(p) v_j``. Needs bulk eigenvalue 1.

        Keeps the ``truncation`` largest ``|a_j|``; the rest go into ``tail_sq``.
        """
        if spectrum.hermitian:
            raise ValidationError("paths are defined for real spectra")
        if spectrum.has_bulk and spectrum.bulk != 1.0:
            raise ValidationError("the bulk eigenvalue must be 1 (K has finite rank)")
        a = 1.0 - spectrum.values
        G = spectrum.vectors.T * math.sqrt(spectrum.p)
        order = np.argsort(-np.abs(a), kind="stable")
        keep, drop = order[:truncation], order[truncation:]
        return cls(a=a[keep], gamma=G[keep], eta=eta, tail_sq=float(np.sum(a[drop] ** 2)))

    def to_dict(self, explicit=True):
        out = {"p": self.p, "a": self.a.tolist(), "sum_a_sq": self.sum_a_sq,
               "tail_sq": self.tail_sq}
        if explicit:
            out["gamma"] = self.gamma.tolist()
            out["eta"] = None if self.eta is None else self.eta.tolist()
        return out

    @classmethod
    def from_dict(cls, d):
        """``basis`` may be ``{"kind": "cosine"}`` or explicit rows in ``gamma``;
        ``eta`` may be a list, a number (constant drift) or null."""
        p = int(d["p"])
        a = np.asarray(d.get("a", []), dtype=float)
        eta = d.get("eta")
        if eta is not None:
            eta = grid_function(eta, p)
        if "gamma" in d:
            return cls(a=a, gamma=np.asarray(d["gamma"], dtype=float).reshape(a.size, p), eta=eta)
        kind = d.get("basis", {"kind": "cosine"}).get("kind")
        if kind != "cosine":
            raise ValidationError(f"unknown basis kind {kind!r}")
        return cls(a=a, gamma=cosine_basis(p, a.size).T * math.sqrt(p), eta=eta)


def wiener_coefficients(path, spec):
    """``Y_j = int gamma_j dY`` for every eigenfunction, shape ``(n, J)``."""
    dY, single = _increments(path)
    if dY.shape[1] != spec.p:
        raise ValidationError(f"path has {dY.shape[1]} cells, spec has {spec.p}")
    Yj = dY @ spec.gamma.T
    return Yj[0] if single else Yj


def rn_density_from_coefficients(Yj, spec):
    """Log Radon-Nikodym derivative from the Wiener coefficients ``Y_j``.

    ``sum_j [-log(1 - a_j)/2 - (Y_j - eta_j)^2 / (2 (1 - a_j)) + Y_j^2 / 2]``.
    """
    Yj = np.asarray(Yj, dtype=float)
    a = spec.a
    d = Yj - spec.eta_coeffs
    one_m = 1.0 - a
    terms = -0.5 * np.log(one_m) - d * d / (2.0 * one_m) + 0.5 * Yj * Yj
    return terms.sum(axis=-1)


def rn_density(path, spec):
    """Log density of the Gaussian path measure with respect to Wiener measure."""
    Yj = wiener_coefficients(path, spec)
    out = rn_density_from_coefficients(Yj, spec)
    return float(out) if np.ndim(out) == 0 else out


def cameron_martin_density(path, eta):
    """``int eta dY - (1/2) int eta^2``: log density of Wiener measure shifted by ``int eta``."""
    dY, single = _increments(path)
    p = dY.shape[1]
    e = grid_function(eta, p)
    out = dY @ e - 0.5 * float(e @ e) / p
    return float(out[0]) if single else out


def covariance_R(spec, s, t):
    """``R(s, t) = min(s, t) - sum_j a_j G_j(s) G_j(t)``; broadcasts over s and t."""
    s_arr = np.asarray(s, dtype=float)
    t_arr = np.asarray(t, dtype=float)
    S, T = np.broadcast_arrays(s_arr, t_arr)
    Gs = spec.G(S.ravel())
    Gt = spec.G(T.ravel())
    R = np.minimum(S.ravel(), T.ravel()) - np.sum(spec.a[:, None] * Gs * Gt, axis=0)
    R = R.reshape(S.shape)
    return float(R) if R.ndim == 0 else R


def simulate_limit_path(spec, n, seed, knots=None, block=512):
    """Discretized draws of ``Y(t) = W(t) - int_0^t I(s) ds + m(t)``.

    ``I(s) = int_0^1 M(s, u) dW(u)`` with M having eigenvalues
    ``1 - sqrt(1 - a_j)``, so ``int_0^t I = sum_j m_j W_j G_j(t)`` with
    ``W_j = int gamma_j dW``. The integral in I runs over the whole interval, so
    Y is not adapted to the filtration of W; only its law is used. On the grid the
    increments have covariance exactly ``(I - sum_j a_j g_j g_j') / p`` with
    ``g_j = gamma_j / sqrt(p)``.

    Returns knot values, shape ``(n, p + 1)``, or only the columns in
    ``knots`` (integer knot indices) when given.
    """
    p, n = spec.p, int(n)
    mj = spec.m_coeffs
    G = spec.gamma
    drift = np.zeros(p) if spec.eta is None else spec.eta / p
    idx = None if knots is None else np.asarray(knots, dtype=int)
    parts = []
    for b, start in enumerate(range(0, n, block)):
        m = min(block, n - start)
        rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(3, b)))
        dW = rng.standard_normal((m, p)) / math.sqrt(p)
        Wj = dW @ G.T
        dY = dW - (Wj * mj) @ G / p + drift
        Y = np.zeros((m, p + 1))
        np.cumsum(dY, axis=1, out=Y[:, 1:])
        parts.append(Y if idx is None else Y[:, idx])
    return np.vstack(parts)


def path_to_csv(path, out=None):
    """``t,value`` rows for external plotting; returns the text if ``out`` is None."""
    pl = path if isinstance(path, PathPolyline) else PathPolyline(path)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "value"])
    for t, v in zip(pl.knots, pl.values):
        w.writerow([f"{t:.17g}", f"{v:.17g}"])
    text = buf.getvalue()
    if out is None:
        return text
    with open(out, "w") as fh:
        fh.write(text)
    return None
