"""Exact low-dimensional representation of sphere samples.

Every sampler here draws ``x = F c + r u`` where ``F`` is a ``p x d``
orthonormal frame, ``c`` are exact frame coordinates, ``r = sqrt(1 - |c|^2)``
and ``u`` is uniform on the unit sphere of the orthogonal complement of
``span(F)``. For all the families handled here the complement direction is
exactly uniform given ``c`` (the density depends on ``x`` only through
``F^* x``), so storing ``(c, r)`` loses nothing: projections onto any
subspace of ``span(F)`` are exact, and :meth:`FramedSample.materialize`
draws the missing direction to give full ``p``-vectors on demand.

Randomness is split into fixed-size blocks seeded by
``SeedSequence(seed, spawn_key=(stream, block))``, so results do not depend on
the number of worker threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError
from ..spectral import ProjectionBasis, SampleMatrix

__all__ = ["FramedSample", "build_frame", "block_rngs", "run_blocks", "BLOCK_SIZE"]

BLOCK_SIZE = 2048
STREAM_DRAW = 0
STREAM_MATERIALIZE = 1


def block_rngs(seed, stream, n, block_size=BLOCK_SIZE):
    """``(rng, size)`` pairs covering ``n`` draws in fixed blocks."""
    if seed is None:
        raise ValidationError("an explicit integer seed is required")
    seed = int(seed)
    if seed < 0:
        raise ValidationError("seed must be non-negative")
    out = []
    for i, start in enumerate(range(0, n, block_size)):
        ss = np.random.SeedSequence(seed, spawn_key=(stream, i))
        out.append((np.random.Generator(np.random.PCG64(ss)), min(block_size, n - start)))
    return out


def run_blocks(fn, blocks, workers=1):
    """Apply ``fn(rng, size)`` to every block, keeping block order."""
    workers = max(1, int(workers or 1))
    if workers == 1 or len(blocks) == 1:
        return [fn(rng, m) for rng, m in blocks]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(lambda b: fn(*b), blocks))


def _as_columns(extra):
    if extra is None:
        return None
    if isinstance(extra, ProjectionBasis):
        return extra.columns
    if isinstance(extra, (list, tuple)):
        cols = [_as_columns(e) for e in extra if e is not None]
        return np.hstack(cols) if cols else None
    E = np.asarray(extra)
    return E[:, None] if E.ndim == 1 else E


def build_frame(p, key, extra=None, complex_=False, tol=1e-10):
    """Frame ``[key, E]`` with ``E`` an orthonormal basis of ``extra`` minus ``span(key)``.

    ``key`` must already be orthonormal; it keeps its column order so that
    samplers can address its coordinates directly.
    """
    dtype = complex if complex_ else float
    K = np.zeros((p, 0), dtype=dtype) if key is None else np.asarray(key, dtype=dtype)
    E = _as_columns(extra)
    if E is None or E.shape[1] == 0:
        return K
    if E.shape[0] != p:
        raise ValidationError(f"extra basis has {E.shape[0]} rows, expected {p}")
    if np.iscomplexobj(E) and not complex_:
        raise ValidationError("complex extra basis for a real family")
    E = E.astype(dtype)
    E = E - K @ (K.conj().T @ E)
    if E.shape[1] == 0:
        return K
    U, s, _ = np.linalg.svd(E, full_matrices=False)
    keep = s > tol * max(1.0, s[0]) if s.size else s.astype(bool)
    U = U[:, keep]
    U = U - K @ (K.conj().T @ U)
    U, _ = np.linalg.qr(U)
    return np.hstack([K, U])


@dataclass(frozen=True)
class FramedSample:
    """``n`` unit vectors stored as frame coordinates plus a complement norm.

    Attributes
    ----------
    frame : (p, d) array
        Orthonormal columns.
    coords : (d, n) array
        ``F^* x`` for each draw.
    resid : (n,) array
        ``||x - F F^* x||``.
    seed : int
        Seed of the draw; :meth:`materialize` uses an independent stream of it.
    info : dict
        Sampler diagnostics (acceptance rate, proposals).
    """

    frame: np.ndarray
    coords: np.ndarray
    resid: np.ndarray
    seed: int
    info: dict = field(default_factory=dict, compare=False)

    @property
    def p(self):
        return self.frame.shape[0]

    @property
    def d(self):
        return self.frame.shape[1]

    @property
    def n(self):
        return self.coords.shape[1]

    @property
    def is_complex(self):
        return np.iscomplexobj(self.frame)

    def project(self, basis, tol=1e-8):
        """Exact ``P^* x`` for a basis lying inside ``span(frame)``."""
        P = basis.columns if isinstance(basis, ProjectionBasis) else np.asarray(basis)
        if P.ndim == 1:
            P = P[:, None]
        if P.shape[0] != self.p:
            raise ValidationError(f"basis has {P.shape[0]} rows, sample has p={self.p}")
        G = self.frame.conj().T @ P
        leak = P - self.frame @ G
        if np.max(np.abs(leak), initial=0.0) > tol:
            raise ValidationError(
                "basis is not contained in the sample frame; pass it to the sampler "
                "through `extra`"
            )
        return G.conj().T @ self.coords

    def squared_norms(self):
        return np.sum(np.abs(self.coords) ** 2, axis=0) + self.resid ** 2

    def materialize(self, workers=1):
        """Full ``p x n`` unit vectors (``O(p n)`` memory)."""
        F, p, d = self.frame, self.p, self.d
        complex_ = self.is_complex
        offsets = list(range(0, self.n, BLOCK_SIZE))

        def fill(rng, m, start):
            g = rng.standard_normal((p, m))
            if complex_:
                g = g + 1j * rng.standard_normal((p, m))
            if d:
                g -= F @ (F.conj().T @ g)
            g /= np.linalg.norm(g, axis=0)
            c = self.coords[:, start:start + m]
            return (F @ c if d else 0.0) + g * self.resid[start:start + m]

        blocks = block_rngs(self.seed, STREAM_MATERIALIZE, self.n)
        jobs = [(rng, m, s) for (rng, m), s in zip(blocks, offsets)]
        workers = max(1, int(workers or 1))
        if workers == 1:
            parts = [fill(*j) for j in jobs]
        else:
            with ThreadPoolExecutor(max_workers=workers) as ex:
                parts = list(ex.map(lambda j: fill(*j), jobs))
        X = np.hstack(parts) if parts else np.zeros((p, 0))
        return SampleMatrix(X, unit=True, meta=dict(self.info))
