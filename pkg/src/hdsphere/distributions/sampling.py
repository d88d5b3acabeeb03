"""Exact samplers for the uniform, vMF, Bingham, Watson, Fisher-Bingham and
complex Bingham / Watson distributions.

All samplers return a :class:`~hdsphere.distributions.framed.FramedSample`
from :func:`draw`; :func:`sample` materializes it to a ``p x n`` matrix.

Methods
-------
uniform
    Normalized Gaussian vectors.
vMF
    Wood's rejection scheme for ``w = x' nu`` plus a uniform tangent direction.
Bingham, Watson, complex Bingham, complex Watson
    Angular central Gaussian envelope (Kent, Ganeiber and Mardia). The complex
    families are sampled as real Bingham distributions on ``S^{2p-1}``.
Fisher-Bingham
    Exact rejection sampling of the low-dimensional marginal ``V' x`` on the
    unit ball, under a Gaussian envelope, followed by a uniform complement
    direction. When the envelope is not available (tiny ``p`` or a strongly
    concentrated Bingham part) it falls back to a Bingham proposal accepted
    with probability ``exp(sqrt(p) kappa (x' nu - 1))``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

from ..errors import PracticalityError, ValidationError
from .framed import (STREAM_DRAW, FramedSample, block_rngs, build_frame,
                     run_blocks)
from .params import (BinghamParams, ComplexBinghamParams, ComplexWatsonParams,
                     FisherBinghamParams, UniformParams, VmfParams,
                     WatsonParams)

__all__ = [
    "draw",
    "sample",
    "sample_uniform",
    "sample_vmf",
    "sample_bingham",
    "sample_watson",
    "sample_fisher_bingham",
    "sample_complex_bingham",
    "sample_complex_watson",
    "MIN_ACCEPTANCE",
]

MIN_ACCEPTANCE = 1e-6
_MIN_PROPOSALS_FOR_VERDICT = 1_000_000


class _Acceptance:
    """Per-block proposal bookkeeping with a practicality guard."""

    def __init__(self, name):
        self.name = name
        self.proposals = 0
        self.accepted = 0

    def update(self, proposed, accepted):
        self.proposals += int(proposed)
        self.accepted += int(accepted)
        if (self.proposals >= _MIN_PROPOSALS_FOR_VERDICT
                and self.accepted < MIN_ACCEPTANCE * self.proposals):
            raise PracticalityError(
                f"{self.name} sampler acceptance rate {self.rate:.2e} is below "
                f"{MIN_ACCEPTANCE:g} after {self.proposals} proposals"
            )

    @property
    def rate(self):
        return self.accepted / self.proposals if self.proposals else float("nan")

    def batch(self, need):
        if self.proposals == 0:
            rate = 0.5
        elif self.accepted == 0:
            rate = 0.5 / self.proposals
        else:
            rate = self.rate
        return int(min(max(64, math.ceil(1.2 * need / max(rate, 1e-12))), 200_000))


def _normals(rng, shape, complex_):
    g = rng.standard_normal(shape)
    if complex_:
        g = g + 1j * rng.standard_normal(shape)
    return g


def _complement(rng, e, m_bulk, size, complex_):
    """Uniform direction on the complement of the key vectors.

    Returns frame coordinates on the ``e`` extra frame columns and the norm
    left for the ``m_bulk`` unseen dimensions.
    """
    g = _normals(rng, (e, size), complex_)
    df = (2 if complex_ else 1) * m_bulk
    chi = rng.chisquare(df, size) if df > 0 else np.zeros(size)
    nrm = np.sqrt(np.sum(np.abs(g) ** 2, axis=0) + chi)
    return g / nrm, np.sqrt(chi) / nrm


def _assemble(core_coords, tail_scale, g, r):
    coords = np.vstack([core_coords, g * tail_scale]) if g.shape[0] else core_coords
    return coords, r * tail_scale


# ---------------------------------------------------------------------------
# cores: each exposes ``frame`` and ``block(rng, m) -> (coords, resid, acc)``


class _UniformCore:
    name = "uniform"

    def __init__(self, p, extra, complex_):
        self.p, self.complex_ = p, complex_
        self.frame = build_frame(p, None, extra, complex_)

    def block(self, rng, m):
        e = self.frame.shape[1]
        g, r = _complement(rng, e, self.p - e, m, self.complex_)
        return g, r, None


class _VmfCore:
    name = "vmf"

    def __init__(self, params, extra):
        p = params.p
        self.p = p
        self.frame = build_frame(p, params.mode[:, None], extra)
        self.k = math.sqrt(p) * params.kappa
        q = p - 1.0
        # b written to avoid cancellation at large kappa
        self.b = q / (2.0 * self.k + math.sqrt(4.0 * self.k ** 2 + q ** 2))
        self.x0 = (1.0 - self.b) / (1.0 + self.b)
        self.c = self.k * self.x0 + q * math.log1p(-self.x0 ** 2)
        self.q = q

    def _w(self, rng, m, acc):
        out = np.empty(m)
        filled = 0
        while filled < m:
            size = acc.batch(m - filled)
            z = rng.beta(self.q / 2.0, self.q / 2.0, size)
            w = (1.0 - (1.0 + self.b) * z) / (1.0 - (1.0 - self.b) * z)
            u = rng.random(size)
            ok = (self.k * w + self.q * np.log1p(-self.x0 * w) - self.c
                  >= np.log(u))
            got = w[ok][: m - filled]
            out[filled:filled + got.size] = got
            filled += got.size
            acc.update(size, ok.sum())
        return out

    def block(self, rng, m):
        acc = _Acceptance(self.name)
        w = self._w(rng, m, acc)
        e = self.frame.shape[1] - 1
        g, r = _complement(rng, e, self.p - e - 1, m, False)
        s = np.sqrt(np.clip(1.0 - w * w, 0.0, None))
        coords, resid = _assemble(w[None, :], s, g, r)
        return coords, resid, acc


class _ACGCore:
    """Density ``exp(-x^* A x)`` with ``A`` diagonal in the frame, ``min A = 0``.

    ``a_key`` holds A on the key columns; every other direction has ``a_bulk``.
    ``tilt`` (optional) maps frame coordinates to an extra log-acceptance
    weight ``<= 0`` (used for the Fisher-Bingham fallback).
    """

    def __init__(self, p, key, a_key, a_bulk, extra, complex_, name, tilt=None):
        self.p, self.complex_, self.name, self.tilt = p, complex_, name, tilt
        self.frame = build_frame(p, key, extra, complex_)
        d = self.frame.shape[1]
        k = np.asarray(a_key).size
        a = np.concatenate([np.asarray(a_key, float), np.full(d - k, a_bulk)])
        self.m_bulk = p - d
        mult = 2 if complex_ else 1
        self.q = mult * p
        if np.min(a, initial=a_bulk) < -1e-12 or (self.m_bulk and a_bulk < -1e-12):
            raise ValidationError("ACG core needs a non-negative A")
        a = np.clip(a, 0.0, None)
        a_bulk = max(a_bulk, 0.0)

        def f(b):
            tot = mult * np.sum(1.0 / (b + 2.0 * a))
            if self.m_bulk:
                tot += mult * self.m_bulk / (b + 2.0 * a_bulk)
            return tot - 1.0

        if np.all(a == 0) and (self.m_bulk == 0 or a_bulk == 0):
            b = float(self.q)
        else:
            b = brentq(f, 1e-12, float(self.q), xtol=1e-14, rtol=1e-15, maxiter=500)
        self.b = b
        self.omega = 1.0 + 2.0 * a / b
        self.omega_bulk = 1.0 + 2.0 * a_bulk / b
        q = self.q
        self.log_m = (q - b) / 2.0 - (q / 2.0) * math.log(q / b)

    def block(self, rng, m):
        acc = _Acceptance(self.name)
        d = self.frame.shape[1]
        mult = 2 if self.complex_ else 1
        coords = np.empty((d, m), dtype=complex if self.complex_ else float)
        resid = np.empty(m)
        filled = 0
        while filled < m:
            size = acc.batch(m - filled)
            z = _normals(rng, (d, size), self.complex_)
            y = z / np.sqrt(self.omega)[:, None]
            chi = (rng.chisquare(mult * self.m_bulk, size) if self.m_bulk
                   else np.zeros(size))
            yb2 = chi / self.omega_bulk
            ny2 = np.sum(np.abs(y) ** 2, axis=0) + yb2
            s = (np.sum(np.abs(z) ** 2, axis=0) + chi) / ny2
            log_ratio = (-self.b * (s - 1.0) / 2.0 + (self.q / 2.0) * np.log(s)
                         + self.log_m)
            nrm = np.sqrt(ny2)
            c = y / nrm
            if self.tilt is not None:
                log_ratio = log_ratio + self.tilt(c)
            ok = np.log(rng.random(size)) < log_ratio
            idx = np.flatnonzero(ok)[: m - filled]
            coords[:, filled:filled + idx.size] = c[:, idx]
            resid[filled:filled + idx.size] = np.sqrt(yb2[idx]) / nrm[idx]
            filled += idx.size
            acc.update(size, ok.sum())
        return coords, resid, acc


def _bingham_core(spectrum, extra, name, tilt=None):
    """ACG core for ``exp(-c x^* Sigma^{-1} x)`` (c = p/2 real, p complex)."""
    p = spectrum.p
    c = p if spectrum.hermitian else p / 2.0
    inv = c / spectrum.values
    inv_bulk = c / spectrum.bulk
    shift = min(np.min(inv, initial=np.inf), inv_bulk if spectrum.has_bulk else np.inf)
    return _ACGCore(p, spectrum.vectors, inv - shift, inv_bulk - shift, extra,
                    spectrum.hermitian, name, tilt)


class _FisherBinghamCore:
    name = "fisher_bingham"

    def __init__(self, params, extra):
        p = params.p
        V, lam, inu = params.structure()
        self.p, self.inu = p, inu
        self.k_lin = math.sqrt(p) * params.kappa
        self.frame = build_frame(p, V, extra)
        self.kdim = V.shape[1]
        beta = 0.5 * (1.0 - 1.0 / lam)
        beta_bulk = 0.5 * (1.0 - 1.0 / params.spectrum.bulk)
        self.mexp = (p - self.kdim) / 2.0 - 1.0
        self.method = "ball_marginal"
        env = self._envelope(p * (beta - beta_bulk))
        if env is None:
            self.method = "bingham_tilt"
            spec = params.spectrum.__class__(
                p=p, values=lam, vectors=V, bulk=params.spectrum.bulk)
            k_lin = self.k_lin

            def tilt(c):
                return k_lin * (c[inu].real - 1.0)

            self._fallback = _bingham_core(spec, extra, self.name, tilt)
            self.frame = self._fallback.frame
            return
        self.u0, self.mu, self.sd = env

    def _envelope(self, d):
        """Gaussian envelope from the tangent of ``m log(1 - u)`` at ``u0``.

        ``m log(1-u) <= m log(1-u0) - m (u - u0) / (1 - u0)``, so the
        proposal has precision ``2 (m / (1 - u0) - d_i)`` per coordinate.
        ``u0`` is moved to the envelope's own mean of ``||y||^2``.
        """
        m = self.mexp
        if m < 0:
            return None
        if m == 0:
            if np.any(d >= 0):
                return None
            prec = -2.0 * d
            mu = np.zeros_like(d)
            mu[self.inu] = self.k_lin / prec[self.inu]
            return 0.0, mu, 1.0 / np.sqrt(prec)
        floor = max(0.0, 1.0 - m / float(np.max(d))) if np.max(d) > 0 else 0.0
        if floor >= 1.0:
            return None

        def moments(u0):
            prec = 2.0 * (m / (1.0 - u0) - d)
            mu = np.zeros_like(d)
            mu[self.inu] = self.k_lin / prec[self.inu]
            return prec, mu

        u0 = floor + 0.5 * (1.0 - floor) if floor > 0 else 0.0
        for _ in range(200):
            prec, mu = moments(u0)
            target = float(np.sum(mu * mu + 1.0 / prec))
            target = min(max(target, floor + 1e-6 * (1.0 - floor)), 1.0 - 1e-9)
            if abs(target - u0) < 1e-12:
                break
            u0 = 0.5 * (u0 + target)
        prec, mu = moments(u0)
        if np.any(prec <= 0) or not u0 < 1.0:
            return None
        return u0, mu, 1.0 / np.sqrt(prec)

    def block(self, rng, m):
        if self.method != "ball_marginal":
            return self._fallback.block(rng, m)
        acc = _Acceptance(self.name)
        k = self.kdim
        ys = np.empty((k, m))
        filled = 0
        while filled < m:
            size = acc.batch(m - filled)
            y = self.mu[:, None] + self.sd[:, None] * rng.standard_normal((k, size))
            u2 = np.sum(y * y, axis=0)
            inside = u2 < 1.0
            log_ratio = np.full(size, -np.inf)
            if self.mexp > 0:
                ui = u2[inside]
                log_ratio[inside] = self.mexp * (
                    np.log1p(-ui) - math.log1p(-self.u0) + (ui - self.u0) / (1.0 - self.u0))
            else:
                log_ratio[inside] = 0.0
            ok = np.log(rng.random(size)) < log_ratio
            idx = np.flatnonzero(ok)[: m - filled]
            ys[:, filled:filled + idx.size] = y[:, idx]
            filled += idx.size
            acc.update(size, ok.sum())
        e = self.frame.shape[1] - k
        g, r = _complement(rng, e, self.p - k - e, m, False)
        s = np.sqrt(np.clip(1.0 - np.sum(ys * ys, axis=0), 0.0, None))
        coords, resid = _assemble(ys, s, g, r)
        return coords, resid, acc


def _core(params, extra):
    if isinstance(params, UniformParams):
        return _UniformCore(params.p, extra, params.complex_)
    if isinstance(params, VmfParams):
        return _VmfCore(params, extra)
    if isinstance(params, FisherBinghamParams):
        return _FisherBinghamCore(params, extra)
    if isinstance(params, (BinghamParams, WatsonParams, ComplexBinghamParams,
                           ComplexWatsonParams)):
        return _bingham_core(params.sigma_model(), extra, params.family)
    raise ValidationError(f"no sampler for {type(params).__name__}")


def draw(params, n, seed, extra=None, workers=1):
    """Draw ``n`` exact samples in framed form.

    Parameters
    ----------
    params : family parameters
    n : int
    seed : int
        Required; identical ``(params, n, seed)`` give identical draws for any
        ``workers``.
    extra : ProjectionBasis, array or list of them, optional
        Directions that must be exactly projectable afterwards.
    workers : int
        Thread count over fixed-size blocks.
    """
    n = int(n)
    if n < 1:
        raise ValidationError("n must be >= 1")
    core = _core(params, extra)
    blocks = block_rngs(seed, STREAM_DRAW, n)
    parts = run_blocks(core.block, blocks, workers)
    coords = np.hstack([c for c, _, _ in parts])
    resid = np.concatenate([r for _, r, _ in parts])
    accs = [a for _, _, a in parts if a is not None]
    info = {"family": params.family, "method": getattr(core, "method", "exact")}
    if accs:
        prop = sum(a.proposals for a in accs)
        info.update(proposals=prop, acceptance_rate=sum(a.accepted for a in accs) / prop)
    else:
        info.update(proposals=n, acceptance_rate=1.0)
    return FramedSample(core.frame, coords, resid, int(seed), info)


def sample(params, n, seed, workers=1):
    """``p x n`` :class:`~hdsphere.spectral.SampleMatrix` of exact draws."""
    return draw(params, n, seed, workers=workers).materialize(workers=workers)


def sample_uniform(p, n, seed, complex_=False, workers=1):
    return sample(UniformParams(p, complex_), n, seed, workers)


def sample_vmf(mode, kappa, n, seed, workers=1):
    return sample(VmfParams(mode, kappa), n, seed, workers)


def sample_bingham(spectrum, n, seed, workers=1):
    return sample(BinghamParams(spectrum), n, seed, workers)


def sample_watson(basis, kappa, n, seed, workers=1):
    return sample(WatsonParams(basis, kappa), n, seed, workers)


def sample_fisher_bingham(spectrum, kappa, n, seed, mode_index=0, workers=1):
    return sample(FisherBinghamParams(spectrum, kappa, mode_index), n, seed, workers)


def sample_complex_bingham(spectrum, n, seed, workers=1):
    return sample(ComplexBinghamParams(spectrum), n, seed, workers)


def sample_complex_watson(mode, kappa, n, seed, workers=1):
    return sample(ComplexWatsonParams(mode, kappa), n, seed, workers)
