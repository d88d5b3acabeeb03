"""Spectral decompositions, spiked spectra and dual PCA for p >> n.

Covariance-type parameters are stored as a :class:`SpectrumModel`: ``k``
explicit eigenpairs plus one "bulk" eigenvalue shared by the whole
orthogonal complement. That is how spiked spectra look, and it lets
``p = 10**5`` models be applied to vectors without ever building a p x p
matrix.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, ValidationError

__all__ = [
    "SpectrumModel",
    "ProjectionBasis",
    "SampleMatrix",
    "EigenReport",
    "sym_eigen",
    "dual_pca",
    "make_spike_spectrum",
    "sigma_to_b",
    "b_to_sigma",
    "check_sequence_conditions",
    "project",
    "cosine_basis",
    "fix_signs",
    "read_sample_csv",
    "write_sample_csv",
    "read_sample_binary",
    "write_sample_binary",
    "BINARY_MAGIC_REAL",
    "BINARY_MAGIC_COMPLEX",
]

ORTHO_TOL = 1e-10
UNIT_TOL = 1e-9


def _orthonormality_error(V):
    if V.shape[1] == 0:
        return 0.0
    G = V.conj().T @ V
    return float(np.max(np.abs(G - np.eye(G.shape[0]))))


def fix_signs(vectors):
    """Make the largest-magnitude entry of every column real and positive.

    Ties are broken by the first index, and ``v`` and ``-v`` (or ``e^{i t} v``)
    have the same magnitudes, so the result does not depend on the sign a
    solver happened to return.
    """
    V = np.array(vectors, copy=True)
    if V.ndim == 1:
        return fix_signs(V[:, None])[:, 0]
    if V.shape[1] == 0:
        return V
    idx = np.argmax(np.abs(V), axis=0)
    pivots = V[idx, np.arange(V.shape[1])]
    mags = np.abs(pivots)
    phase = np.where(mags > 0, np.conj(pivots) / np.where(mags > 0, mags, 1.0), 1.0)
    V = V * phase[None, :]
    if not np.iscomplexobj(vectors):
        V = V.real
    return V


# ---------------------------------------------------------------------------
# parameter containers


@dataclass(frozen=True)
class SpectrumModel:
    """Eigen-structure of a p x p symmetric (or Hermitian) matrix.

    Parameters
    ----------
    p : int
        Ambient dimension.
    values : array of shape (k,)
        Eigenvalues attached to the explicit ``vectors``.
    vectors : array of shape (p, k)
        Orthonormal eigenvectors (complex when ``hermitian``).
    bulk : float
        Eigenvalue on the orthogonal complement of ``vectors`` (ignored when
        ``k == p``).
    hermitian : bool
        Complex-sphere model. This changes the Sigma <-> B map.
    identifiable : bool
        Require the smallest eigenvalue to be exactly 1.
    kind : {"sigma", "b"}
        ``"sigma"`` models must be positive definite; ``"b"`` models hold the
        eigenvalues of ``B_p`` and may be of any sign.
    """

    p: int
    values: np.ndarray
    vectors: np.ndarray
    bulk: float = 1.0
    hermitian: bool = False
    identifiable: bool = False
    kind: str = "sigma"

    def __post_init__(self):
        p = int(self.p)
        values = np.asarray(self.values, dtype=float).ravel()
        dtype = complex if self.hermitian else float
        vectors = np.asarray(self.vectors)
        if vectors.ndim == 1:
            vectors = vectors[:, None]
        if not self.hermitian and np.iscomplexobj(vectors):
            if np.max(np.abs(vectors.imag), initial=0.0) > 0:
                raise ValidationError("complex eigenvectors need hermitian=True")
        vectors = vectors.astype(dtype)
        if vectors.shape != (p, values.size):
            raise ValidationError(
                f"vectors must be ({p}, {values.size}), got {vectors.shape}"
            )
        if values.size > p:
            raise ValidationError("more eigenvalues than dimensions")
        err = _orthonormality_error(vectors)
        if err > ORTHO_TOL:
            raise ValidationError(f"eigenvectors not orthonormal (Gram error {err:.2e})")
        if self.kind not in ("sigma", "b"):
            raise ValidationError(f"kind must be 'sigma' or 'b', got {self.kind!r}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "bulk", float(self.bulk))
        values.setflags(write=False)
        vectors.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "vectors", vectors)
        if self.kind == "sigma":
            if np.any(self.eigenvalues <= 0):
                raise ValidationError("Sigma eigenvalues must be strictly positive")
            if self.identifiable and self.eigenvalues[-1] != 1.0:
                raise ValidationError(
                    "identifiability needs the smallest eigenvalue equal to 1, "
                    f"got {self.eigenvalues[-1]}"
                )

    @property
    def k(self):
        return self.values.size

    @property
    def has_bulk(self):
        return self.k < self.p

    @property
    def eigenvalues(self):
        """All p eigenvalues, descending."""
        full = np.concatenate([self.values, np.full(self.p - self.k, self.bulk)])
        return np.sort(full)[::-1]

    def trace(self):
        return float(np.sum(self.values) + self.bulk * (self.p - self.k))

    def trace_sq(self):
        return float(np.sum(self.values ** 2) + self.bulk ** 2 * (self.p - self.k))

    def apply(self, x, power=1.0):
        """Compute ``M**power @ x`` without forming M."""
        x = np.asarray(x)
        V = self.vectors
        if self.has_bulk:
            if self.bulk <= 0 and power != int(power):
                raise DomainError("fractional power of a non-positive bulk eigenvalue")
            base = self.bulk ** power
            coef = V.conj().T @ x
            scale = self.values ** power - base
            scale = scale[:, None] if coef.ndim == 2 else scale
            return base * x + V @ (scale * coef)
        coef = V.conj().T @ x
        scale = self.values ** power
        scale = scale[:, None] if coef.ndim == 2 else scale
        return V @ (scale * coef)

    def dense(self, power=1.0):
        """The full p x p matrix (small p only)."""
        eye = np.eye(self.p, dtype=complex if self.hermitian else float)
        return self.apply(eye, power)

    def complete_basis(self):
        """Orthonormal p x p basis: explicit vectors, then a complement basis."""
        V = self.vectors
        if not self.has_bulk:
            return np.array(V), np.array(self.values)
        rng = np.random.default_rng(0)
        dtype = complex if self.hermitian else float
        extra = rng.standard_normal((self.p, self.p - self.k)).astype(dtype)
        extra -= V @ (V.conj().T @ extra)
        Q, _ = np.linalg.qr(extra)
        Q -= V @ (V.conj().T @ Q)
        Q, _ = np.linalg.qr(Q)
        return np.hstack([V, Q]), np.concatenate(
            [self.values, np.full(self.p - self.k, self.bulk)]
        )

    def with_values(self, values, bulk=None, kind=None, identifiable=None):
        return SpectrumModel(
            p=self.p,
            values=values,
            vectors=self.vectors,
            bulk=self.bulk if bulk is None else bulk,
            hermitian=self.hermitian,
            identifiable=self.identifiable if identifiable is None else identifiable,
            kind=self.kind if kind is None else kind,
        )

    def invariant_span(self, basis, tol=1e-8):
        """True if span(basis) is an invariant subspace of the matrix."""
        P = basis.columns if isinstance(basis, ProjectionBasis) else np.asarray(basis)
        MP = self.apply(P)
        resid = MP - P @ (P.conj().T @ MP)
        scale = max(1.0, abs(self.bulk), float(np.max(np.abs(self.values), initial=0.0)))
        return float(np.max(np.abs(resid), initial=0.0)) <= tol * scale

    @classmethod
    def identity(cls, p, hermitian=False):
        dtype = complex if hermitian else float
        return cls(p=p, values=np.zeros(0), vectors=np.zeros((p, 0), dtype=dtype),
                   bulk=1.0, hermitian=hermitian, identifiable=True)


@dataclass(frozen=True)
class ProjectionBasis:
    """``h`` orthonormal columns in ``R^p`` (or ``C^p``)."""

    columns: np.ndarray

    def __post_init__(self):
        P = np.array(self.columns)
        if P.ndim == 1:
            P = P[:, None]
        if P.ndim != 2 or P.shape[1] > P.shape[0]:
            raise ValidationError(f"basis must be p x h with h <= p, got {P.shape}")
        err = _orthonormality_error(P)
        if err > ORTHO_TOL:
            raise ValidationError(f"basis columns not orthonormal (Gram error {err:.2e})")
        P.setflags(write=False)
        object.__setattr__(self, "columns", P)

    @property
    def p(self):
        return self.columns.shape[0]

    @property
    def h(self):
        return self.columns.shape[1]

    @classmethod
    def axes(cls, p, h, start=0):
        P = np.zeros((p, h))
        P[np.arange(start, start + h), np.arange(h)] = 1.0
        return cls(P)

    @classmethod
    def cosine(cls, p, h):
        return cls(cosine_basis(p, h))

    @classmethod
    def orthonormalize(cls, vectors):
        Q, R = np.linalg.qr(np.asarray(vectors))
        Q = Q * np.sign(np.where(np.diag(R).real == 0, 1.0, np.diag(R).real))[None, :]
        return cls(Q)


def cosine_basis(p, h, start=1):
    """Orthonormal smooth columns ``sqrt(2/p) cos(pi j (t + 1/2) / p)``.

    Column ``j`` (``j = start, ..., start + h - 1``) samples the ``L^2[0,1]``
    function ``sqrt(2) cos(j pi s)`` at the cell midpoints, scaled to unit
    Euclidean norm.
    """
    t = np.arange(p) + 0.5
    j = np.arange(start, start + h)
    return np.sqrt(2.0 / p) * np.cos(np.pi * np.outer(t, j) / p)


@dataclass(frozen=True)
class SampleMatrix:
    """``n`` observations stacked as the columns of a ``p x n`` array."""

    data: np.ndarray
    unit: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        X = np.array(self.data)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2:
            raise ValidationError(f"sample matrix must be 2-D, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ValidationError("sample matrix has non-finite entries")
        if self.unit:
            norms = np.linalg.norm(X, axis=0)
            bad = np.flatnonzero(np.abs(norms - 1.0) > UNIT_TOL)
            if bad.size:
                raise ValidationError(
                    f"column {bad[0]} has norm {norms[bad[0]]:.12g}, expected 1"
                )
        X.setflags(write=False)
        object.__setattr__(self, "data", X)

    @property
    def p(self):
        return self.data.shape[0]

    @property
    def n(self):
        return self.data.shape[1]

    @property
    def is_complex(self):
        return np.iscomplexobj(self.data)

    def column(self, i):
        return self.data[:, i]


def _as_array(X):
    return X.data if isinstance(X, SampleMatrix) else np.asarray(X)


# ---------------------------------------------------------------------------
# sample-matrix file formats

BINARY_MAGIC_REAL = b"HDSPHR1R"
BINARY_MAGIC_COMPLEX = b"HDSPHR1C"
_HEADER = struct.Struct("<8sqq")


def _format_value(v):
    if isinstance(v, complex) or np.iscomplexobj(v):
        return f"{v.real:.17g}{v.imag:+.17g}j"
    return f"{float(v):.17g}"


def write_sample_csv(path_or_file, X):
    """One observation per row, ``p`` comma-separated values, no header.

    Reals are written with 17 significant digits (round-trip exact); complex
    entries as ``a+bj``.
    """
    data = _as_array(X)
    lines = [",".join(_format_value(v) for v in col) for col in data.T]
    text = "\n".join(lines) + "\n"
    if isinstance(path_or_file, (str, Path)):
        Path(path_or_file).write_text(text)
    else:
        path_or_file.write(text)


def read_sample_csv(path_or_file, unit=False):
    """Inverse of :func:`write_sample_csv`; errors name the 1-based row.

    Lines starting with ``#`` are comments (the CLI writes its run header
    there).
    """
    if isinstance(path_or_file, (str, Path)):
        text = Path(path_or_file).read_text()
    else:
        text = path_or_file.read()
    rows = []
    p = None
    body = [ln for ln in text.splitlines() if not ln.lstrip().startswith("#")]
    is_complex = any("j" in ln for ln in body)
    conv = complex if is_complex else float
    for lineno, line in enumerate(io.StringIO(text), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split(",")
        try:
            row = [conv(f.strip()) for f in fields]
        except ValueError as exc:
            raise ValidationError(f"row {lineno}: unparseable value ({exc})") from None
        if p is None:
            p = len(row)
        elif len(row) != p:
            raise ValidationError(f"row {lineno}: expected {p} values, got {len(row)}")
        rows.append(row)
    if not rows:
        raise ValidationError("no observations found")
    return SampleMatrix(np.array(rows).T, unit=unit)


def write_sample_binary(path, X):
    """Packed little-endian layout.

    ``magic`` (8 bytes, ``HDSPHR1R`` real / ``HDSPHR1C`` complex), ``p`` and
    ``n`` as signed 64-bit integers, then the ``p * n`` entries in
    column-major order as float64 (complex: interleaved real/imag float64).
    """
    data = _as_array(X)
    magic = BINARY_MAGIC_COMPLEX if np.iscomplexobj(data) else BINARY_MAGIC_REAL
    dtype = "<c16" if np.iscomplexobj(data) else "<f8"
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(magic, data.shape[0], data.shape[1]))
        fh.write(np.asarray(data, dtype=dtype).tobytes(order="F"))


def read_sample_binary(path, unit=False):
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValidationError("binary sample file shorter than its header")
    magic, p, n = _HEADER.unpack_from(raw)
    if magic not in (BINARY_MAGIC_REAL, BINARY_MAGIC_COMPLEX):
        raise ValidationError(f"bad magic {magic!r}")
    if p < 1 or n < 1:
        raise ValidationError(f"bad dimensions p={p}, n={n}")
    dtype = np.dtype("<c16" if magic == BINARY_MAGIC_COMPLEX else "<f8")
    expected = _HEADER.size + p * n * dtype.itemsize
    if len(raw) != expected:
        raise ValidationError(f"binary sample file has {len(raw)} bytes, expected {expected}")
    data = np.frombuffer(raw, dtype=dtype, offset=_HEADER.size).reshape((p, n), order="F")
    return SampleMatrix(data.astype(dtype.newbyteorder("=")), unit=unit)


# ---------------------------------------------------------------------------
# eigen-decompositions


@dataclass(frozen=True)
class EigenReport:
    """Eigenpairs in descending order.

    ``values[j]`` pairs with column ``vectors[:, j]``. ``rank`` counts the
    retained (numerically nonzero) pairs. Dual PCA also fills ``delta``
    (eigenvalues of the n x n Gram matrix) and ``scores_norm`` (``||X q_j||``).
    """

    values: np.ndarray
    vectors: np.ndarray
    rank: int
    delta: np.ndarray | None = None
    scores_norm: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    def reconstruct(self):
        V = self.vectors[:, : self.rank]
        return (V * self.values[: self.rank]) @ V.conj().T

    def residual(self, S):
        """Relative Frobenius residual of ``S - sum_j values_j v_j v_j^*``."""
        S = np.asarray(S)
        return float(np.linalg.norm(S - self.reconstruct()) / max(np.linalg.norm(S), 1e-300))


def _check_hermitian(M, tol=1e-10):
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValidationError(f"need a square matrix, got shape {M.shape}")
    scale = max(1.0, float(np.max(np.abs(M), initial=0.0)))
    asym = float(np.max(np.abs(M - M.conj().T), initial=0.0))
    if asym > tol * scale:
        raise ValidationError(f"matrix is not symmetric/Hermitian (max asymmetry {asym:.2e})")


def sym_eigen(matrix):
    """Full eigendecomposition of a symmetric or Hermitian matrix.

    Eigenvalues are returned descending and eigenvectors follow
    :func:`fix_signs`.
    """
    M = np.asarray(matrix)
    _check_hermitian(M)
    M = 0.5 * (M + M.conj().T)
    w, V = np.linalg.eigh(M)
    order = np.argsort(w)[::-1]
    w, V = w[order], fix_signs(V[:, order])
    return EigenReport(values=w, vectors=V, rank=w.size)


def dual_pca(X, rel_cutoff=1e-12):
    """Eigenpairs of ``S = X X^* / n`` through the n x n matrix ``A = X^* X / n``.

    With ``A = sum_j delta_j q_j q_j^*`` the sample eigenvectors are
    ``X q_j / ||X q_j||`` and the eigenvalues ``||X q_j|| sqrt(delta_j / n)``
    (equal to ``delta_j``). ``S`` itself is never formed, so the cost is
    ``O(n^3 + p n^2)``. Pairs with ``delta_j < rel_cutoff * delta_1`` are
    dropped and ``rank`` is reduced accordingly.
    """
    data = _as_array(X)
    if data.ndim != 2:
        raise ValidationError("X must be p x n")
    p, n = data.shape
    if n > p:
        raise ValidationError(f"dual PCA needs n <= p, got p={p}, n={n}")
    norms = np.linalg.norm(data, axis=0)
    if np.any(norms == 0):
        raise ValidationError(f"column {int(np.flatnonzero(norms == 0)[0])} is zero")
    A = (data.conj().T @ data) / n
    A = 0.5 * (A + A.conj().T)
    delta, Q = np.linalg.eigh(A)
    order = np.argsort(delta)[::-1]
    delta, Q = delta[order], Q[:, order]
    keep = delta > rel_cutoff * delta[0]
    delta, Q = delta[keep], Q[:, keep]
    XQ = data @ Q
    score_norms = np.linalg.norm(XQ, axis=0)
    gamma = fix_signs(XQ / score_norms)
    omega = score_norms * np.sqrt(delta / n)
    return EigenReport(values=omega, vectors=gamma, rank=int(delta.size),
                       delta=delta, scores_norm=score_norms)


# ---------------------------------------------------------------------------
# spectrum constructors and maps


def make_spike_spectrum(p, spike_values, spike_vectors=None, identifiable=True,
                        hermitian=False):
    """Spiked spectrum: the given leading eigenvalues, all others equal to 1.

    ``spike_vectors`` defaults to the first ``h`` standard basis vectors.
    """
    spikes = np.asarray(spike_values, dtype=float).ravel()
    h = spikes.size
    if not 1 <= h < p:
        raise ValidationError(f"need 1 <= h < p, got h={h}, p={p}")
    if np.any(np.diff(spikes) > 0):
        raise ValidationError("spike values must be descending")
    if identifiable and np.any(spikes < 1):
        raise ValidationError("spike values must be >= 1 when the smallest eigenvalue is fixed at 1")
    if spike_vectors is None:
        V = np.zeros((p, h), dtype=complex if hermitian else float)
        V[np.arange(h), np.arange(h)] = 1.0
    else:
        V = np.asarray(spike_vectors)
        if V.ndim == 1:
            V = V[:, None]
    return SpectrumModel(p=p, values=spikes, vectors=V, bulk=1.0,
                         hermitian=hermitian, identifiable=identifiable)


def _sigma_to_b_values(lam, hermitian):
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise DomainError("Sigma eigenvalues must be positive")
    return 1.0 - 1.0 / lam if hermitian else 0.5 * (1.0 - 1.0 / lam)


def _b_to_sigma_values(beta, hermitian):
    beta = np.asarray(beta, dtype=float)
    limit = 1.0 if hermitian else 0.5
    if np.any(beta >= limit):
        raise DomainError(
            f"B eigenvalues must be < {limit:g} for a positive definite Sigma"
        )
    return 1.0 / (1.0 - beta) if hermitian else 1.0 / (1.0 - 2.0 * beta)


def sigma_to_b(spec):
    """``B_p = (I - Sigma^{-1}) / 2`` (real) or ``I - Sigma^{-1}`` (complex)."""
    if spec.kind != "sigma":
        raise ValidationError("expected a Sigma spectrum")
    return SpectrumModel(
        p=spec.p,
        values=_sigma_to_b_values(spec.values, spec.hermitian),
        vectors=spec.vectors,
        bulk=float(_sigma_to_b_values(spec.bulk, spec.hermitian)),
        hermitian=spec.hermitian,
        kind="b",
    )


def b_to_sigma(spec, identifiable=False):
    """Inverse of :func:`sigma_to_b`; rejects eigenvalues of B that are too large."""
    if spec.kind != "b":
        raise ValidationError("expected a B spectrum")
    return SpectrumModel(
        p=spec.p,
        values=_b_to_sigma_values(spec.values, spec.hermitian),
        vectors=spec.vectors,
        bulk=float(_b_to_sigma_values(spec.bulk, spec.hermitian)),
        hermitian=spec.hermitian,
        identifiable=identifiable,
        kind="sigma",
    )


def check_sequence_conditions(spec):
    """Gaps ``sum(lambda) - p`` and ``sum(lambda^2) - p``, and the smallest eigenvalue.

    Both gaps must stay bounded as ``p`` grows; they are computed from the
    deviations ``lambda - 1`` so they do not cancel at large ``p``.
    """
    m = spec.p - spec.k
    dev = spec.values - 1.0
    bulk_dev = spec.bulk - 1.0
    trace_gap = float(np.sum(dev) + m * bulk_dev)
    # lambda^2 - 1 = (lambda - 1)(lambda + 1)
    trace_sq_gap = float(np.sum(dev * (spec.values + 1.0)) + m * bulk_dev * (spec.bulk + 1.0))
    return {
        "trace_gap": trace_gap,
        "trace_sq_gap": trace_sq_gap,
        "min_eig": float(spec.eigenvalues[-1]),
    }


def project(x, basis, embed=False):
    """Coefficients ``P^* x``; with ``embed`` also ``x_v = P P^* x``.

    ``x`` may be one vector or a p x n stack of columns.
    """
    P = basis.columns if isinstance(basis, ProjectionBasis) else np.asarray(basis)
    x = _as_array(x)
    if x.shape[0] != P.shape[0]:
        raise ValidationError(f"dimension mismatch: x has {x.shape[0]} rows, basis {P.shape[0]}")
    coef = P.conj().T @ x
    if embed:
        return coef, P @ coef
    return coef
