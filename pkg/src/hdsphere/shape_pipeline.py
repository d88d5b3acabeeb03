"""Ray-length shape analysis: ingestion, scale removal, dual PCA and PC extremes.

Each subject is a vector of ``p`` positive ray lengths measured along fixed
directions. Dividing by the norm removes scale; the unit vectors are then
summarized by the eigen-decomposition of ``S = X X' / n``. The top
eigenvector is the mode (the Bingham MLE) and the remaining eigenvectors are
the principal components of shape variability.

Real scan data are not shipped; :func:`synth_rays` generates subjects around
a smooth baseline on a hemisphere grid with planted principal components.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .spectral import (SampleMatrix, SpectrumModel, dual_pca, fix_signs,
                       read_sample_binary, read_sample_csv, write_sample_binary,
                       write_sample_csv)

__all__ = [
    "RayDataset",
    "PcaSummary",
    "ingest_rays",
    "write_rays",
    "normalize",
    "analyze",
    "pc_extremes",
    "hemisphere_directions",
    "baseline_mode",
    "planted_spectrum",
    "synth_rays",
]


@dataclass(frozen=True)
class RayDataset:
    """Ray lengths stored ``p x n`` (one column per subject).

    ``directions`` (``p x 3`` unit vectors) are optional and shared by all
    subjects. ``truth`` holds the generating parameters of synthetic data.
    """

    lengths: np.ndarray
    directions: np.ndarray | None = None
    truth: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        L = np.array(self.lengths, dtype=float)
        if L.ndim != 2:
            raise ValidationError("ray lengths must be a p x n array")
        if not np.all(np.isfinite(L)):
            bad = np.argwhere(~np.isfinite(L))[0]
            raise ValidationError(f"row {bad[1] + 1}: non-finite ray length at ray {bad[0] + 1}")
        nonpos = np.argwhere(L <= 0)
        if nonpos.size:
            ray, subj = nonpos[0]
            raise ValidationError(
                f"row {subj + 1}: ray {ray + 1} has nonpositive length {L[ray, subj]:g}"
            )
        L.setflags(write=False)
        object.__setattr__(self, "lengths", L)
        if self.directions is not None:
            D = np.asarray(self.directions, dtype=float)
            if D.shape != (L.shape[0], 3):
                raise ValidationError(f"directions must be ({L.shape[0]}, 3), got {D.shape}")
            object.__setattr__(self, "directions", D)

    @property
    def p(self):
        return self.lengths.shape[0]

    @property
    def n(self):
        return self.lengths.shape[1]


def ingest_rays(source, fmt=None):
    """Read ray lengths: CSV (one subject per row) or the packed binary format.

    The format is taken from the suffix (``.csv`` or anything else for
    binary) unless ``fmt`` is given. Errors name the 1-based row (subject).
    """
    path = Path(source)
    fmt = fmt or ("csv" if path.suffix.lower() == ".csv" else "binary")
    if fmt == "csv":
        X = read_sample_csv(path)
    elif fmt == "binary":
        X = read_sample_binary(path)
    else:
        raise ValidationError(f"unknown ray format {fmt!r}")
    if X.is_complex:
        raise ValidationError("ray lengths must be real")
    return RayDataset(X.data)


def write_rays(dataset, dest, fmt=None):
    path = Path(dest)
    fmt = fmt or ("csv" if path.suffix.lower() == ".csv" else "binary")
    if fmt == "csv":
        write_sample_csv(path, dataset.lengths)
    else:
        write_sample_binary(path, dataset.lengths)


def normalize(dataset):
    """Unit-norm columns ``r_i / ||r_i||``; the norms are kept in ``meta['scales']``."""
    L = dataset.lengths
    scales = np.linalg.norm(L, axis=0)
    return SampleMatrix(L / scales, unit=True, meta={"scales": scales})


@dataclass(frozen=True)
class PcaSummary:
    """Mode, concentration and principal components of unit shape vectors.

    ``percents[j]`` is ``100 omega_{j+2} / sum_{i >= 2} omega_i`` for the
    principal component in column ``j`` of ``pcs``.
    ``mean_mode_gap`` is ``||x_bar - omega_1^{1/2} gamma_1||``: the sample
    mean and the scaled mode nearly coincide for highly concentrated data.
    """

    mode: np.ndarray
    omega1: float
    pcs: np.ndarray
    pc_variances: np.ndarray
    percents: np.ndarray
    p: int
    n: int
    mean_mode_gap: float

    def to_dict(self, include_vectors=False):
        out = {
            "p": self.p,
            "n": self.n,
            "omega1": self.omega1,
            "pc_variances": self.pc_variances.tolist(),
            "percents": self.percents.tolist(),
            "mean_mode_gap": self.mean_mode_gap,
        }
        if include_vectors:
            out["mode"] = self.mode.tolist()
            out["pcs"] = self.pcs.T.tolist()
        return out


def analyze(X):
    """Dual-PCA summary of unit columns (``O(n^3 + p n^2)``).

    The mode is the top eigenvector of ``S = X X' / n`` with its largest
    entry positive (rays are positive, so the mode has positive entries).
    """
    data = X.data if isinstance(X, SampleMatrix) else np.asarray(X, dtype=float)
    if data.ndim != 2:
        raise ValidationError("expected a p x n array")
    p, n = data.shape
    if n < 2:
        raise ValidationError(f"need at least 2 subjects, got {n}")
    if n > p:
        raise ValidationError(f"expected n <= p, got p={p}, n={n}")
    norms = np.linalg.norm(data, axis=0)
    if np.any(np.abs(norms - 1.0) > 1e-9):
        raise ValidationError("columns must have unit norm; call normalize first")
    rep = dual_pca(data)
    omega1 = float(rep.values[0])
    mode = rep.vectors[:, 0]
    # Second pass on the mode-deflated data: the remaining eigenvalues are
    # ~1e-3 of omega_1, so resolving them from the full Gram matrix would
    # lose about three digits of eigenvector accuracy.
    R = data - mode[:, None] * (mode @ data)[None, :]
    A = R.T @ R / n
    delta, Q = np.linalg.eigh(0.5 * (A + A.T))
    order = np.argsort(delta)[::-1][: n - 1]
    delta, Q = delta[order], Q[:, order]
    keep = delta > 1e-12 * omega1
    delta, Q = delta[keep], Q[:, keep]
    RQ = R @ Q
    score_norms = np.linalg.norm(RQ, axis=0)
    pcs = fix_signs(RQ / score_norms) if delta.size else np.zeros((p, 0))
    rest = score_norms * np.sqrt(delta / n)
    total = float(np.sum(rest))
    percents = 100.0 * rest / total if total > 0 else np.zeros(0)
    xbar = data.mean(axis=1)
    scaled = math.sqrt(omega1) * mode
    gap = min(np.linalg.norm(xbar - scaled), np.linalg.norm(xbar + scaled))
    return PcaSummary(mode=mode, omega1=omega1, pcs=pcs,
                      pc_variances=rest, percents=percents, p=p, n=n,
                      mean_mode_gap=float(gap))


def pc_extremes(summary, j, c=3.0):
    """``omega_1^{1/2} gamma_1 +/- c omega_j^{1/2} gamma_j`` for PC index ``j >= 2``."""
    m = summary.pc_variances.size
    if not isinstance(j, (int, np.integer)) or not 2 <= j <= m + 1:
        raise ValidationError(f"PC index must be an integer in 2..{m + 1}, got {j}")
    if summary.pc_variances[j - 2] <= 0:
        raise ValidationError(f"PC {j} has zero variance")
    centre = math.sqrt(summary.omega1) * summary.mode
    dev = c * math.sqrt(summary.pc_variances[j - 2]) * summary.pcs[:, j - 2]
    return centre + dev, centre - dev


# ---------------------------------------------------------------------------
# synthetic data


def hemisphere_directions(p):
    """``p`` near-uniform unit vectors on the upper hemisphere (Fibonacci lattice)."""
    k = np.arange(p) + 0.5
    z = 1.0 - k / p
    r = np.sqrt(1.0 - z * z)
    phi = math.pi * (3.0 - math.sqrt(5.0)) * k
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def _smooth_profile(D, coeffs):
    x, y, z = D.T
    feats = np.column_stack([np.ones_like(z), z, x, y, x * y, x * x - y * y, z * z,
                             x * z, y * z])
    return feats[:, : len(coeffs)] @ np.asarray(coeffs, dtype=float)


def baseline_mode(p, directions=None):
    """Smooth positive unit-norm baseline (an elongated dome)."""
    D = hemisphere_directions(p) if directions is None else directions
    r = _smooth_profile(D, [1.0, 0.25, 0.12, -0.05, 0.03, 0.15])
    return r / np.linalg.norm(r)


_PC_PATTERNS = [
    [0.0, 0.0, 1.0],
    [0.0, 0.0, 0.0, 1.0],
    [0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
    [0.0, 1.0],
    [0.0, 0.0, 0.0, 0.0, 1.0],
]


def planted_spectrum(p, sds, noise=1e-4, directions=None):
    """Smooth planted principal components with relative standard deviations ``sds``.

    The returned spectrum has the PC directions (orthonormal and orthogonal
    to :func:`baseline_mode`) as vectors, ``sds**2`` as values, and
    ``noise`` as the bulk: the total expected squared norm of the isotropic
    noise added to each unit baseline.
    """
    sds = np.asarray(sds, dtype=float).ravel()
    if sds.size > len(_PC_PATTERNS):
        raise ValidationError(f"at most {len(_PC_PATTERNS)} planted components")
    if np.any(np.diff(sds) > 0) or np.any(sds <= 0):
        raise ValidationError("planted sds must be positive and non-increasing")
    D = hemisphere_directions(p) if directions is None else directions
    mu = baseline_mode(p, D)
    V = np.zeros((p, sds.size))
    for j in range(sds.size):
        v = _smooth_profile(D, _PC_PATTERNS[j])
        v -= mu * (mu @ v)
        v -= V[:, :j] @ (V[:, :j].T @ v)
        V[:, j] = v / np.linalg.norm(v)
    return SpectrumModel(p=p, values=sds ** 2, vectors=fix_signs(V) if sds.size else V,
                         bulk=float(noise))


def synth_rays(p, n, planted, seed, scale=(60.0, 0.1)):
    """Subjects ``r_i = s_i sqrt(p) (mu + delta_i)`` around the baseline ``mu``.

    ``delta_i`` is Gaussian with covariance ``sum_j values_j v_j v_j' +
    (bulk/p) (I - V V')``, where ``planted`` supplies ``v_j`` (must be
    orthogonal to the baseline), ``values`` and ``bulk``. ``s_i`` is
    log-normal with median ``scale[0]`` and log-sd ``scale[1]``.

    Raises
    ------
    ValidationError
        If the draw produces a nonpositive ray (deviations too large).
    """
    p, n = int(p), int(n)
    if planted.p != p:
        raise ValidationError(f"planted spectrum has p={planted.p}, expected {p}")
    D = hemisphere_directions(p)
    mu = baseline_mode(p, D)
    V = planted.vectors
    if V.shape[1] and np.max(np.abs(V.T @ mu)) > 1e-8:
        raise ValidationError("planted components must be orthogonal to the baseline mode")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(6,)))
    Z = rng.standard_normal((V.shape[1], n)) * np.sqrt(planted.values)[:, None]
    E = rng.standard_normal((p, n)) * math.sqrt(planted.bulk / p)
    if V.shape[1]:
        E -= V @ (V.T @ E)
    X = mu[:, None] + V @ Z + E
    s = scale[0] * np.exp(scale[1] * rng.standard_normal(n))
    L = X * (s * math.sqrt(p))[None, :]
    if np.any(L <= 0):
        ray, subj = np.argwhere(L <= 0)[0]
        raise ValidationError(
            f"synthetic subject {subj + 1} has a nonpositive ray ({ray + 1}); reduce the "
            "planted deviations"
        )
    truth = {"mode": mu, "pcs": np.array(V), "pc_sds": np.sqrt(planted.values),
             "noise": planted.bulk, "scales": s, "seed": int(seed)}
    return RayDataset(L, directions=D, truth=truth)
