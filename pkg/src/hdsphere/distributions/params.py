"""Parameter containers for the seven sphere families and their JSON form."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, ValidationError
from ..spectral import ProjectionBasis, SpectrumModel, cosine_basis

__all__ = [
    "UniformParams",
    "BinghamParams",
    "VmfParams",
    "WatsonParams",
    "FisherBinghamParams",
    "ComplexBinghamParams",
    "ComplexWatsonParams",
    "FAMILIES",
    "unit_vector",
    "params_to_dict",
    "params_from_dict",
]

NORM_TOL = 1e-6


def unit_vector(x, tol=NORM_TOL, complex_=None):
    """Validate ``||x|| = 1`` within ``tol`` and return the renormalized copy."""
    x = np.array(x, dtype=complex if complex_ or np.iscomplexobj(x) else float)
    if x.ndim != 1:
        raise ValidationError(f"expected a vector, got shape {x.shape}")
    nrm = float(np.linalg.norm(x))
    if abs(nrm - 1.0) > tol:
        raise ValidationError(f"vector norm {nrm:.9g} is not 1 within {tol:g}")
    return x / nrm


class _Family:
    family = ""
    is_complex = False

    def sigma_model(self):
        """Sigma_p of the matching Gaussian approximation (Bingham types)."""
        raise NotImplementedError


@dataclass(frozen=True)
class UniformParams(_Family):
    p: int
    complex_: bool = False
    family = "uniform"

    def __post_init__(self):
        if int(self.p) < 2:
            raise ValidationError("p must be >= 2")

    @property
    def is_complex(self):
        return self.complex_

    def sigma_model(self):
        return SpectrumModel.identity(self.p, hermitian=self.complex_)


@dataclass(frozen=True)
class BinghamParams(_Family):
    """Real Bingham with density ``exp(-(p/2) x' Sigma^{-1} x)`` up to a constant.

    The smallest eigenvalue of Sigma is fixed at 1 for identifiability.
    """

    spectrum: SpectrumModel
    family = "bingham"

    def __post_init__(self):
        s = self.spectrum
        if s.hermitian or s.kind != "sigma":
            raise ValidationError("Bingham needs a real Sigma spectrum")
        if abs(s.eigenvalues[-1] - 1.0) > 1e-12:
            raise ValidationError(
                f"smallest Sigma eigenvalue must be 1, got {s.eigenvalues[-1]}"
            )

    @property
    def p(self):
        return self.spectrum.p

    def sigma_model(self):
        return self.spectrum


@dataclass(frozen=True)
class VmfParams(_Family):
    """von Mises-Fisher with density ``exp(sqrt(p) kappa x' mode)`` up to a constant."""

    mode: np.ndarray
    kappa: float
    family = "vmf"

    def __post_init__(self):
        mode = unit_vector(self.mode)
        if np.iscomplexobj(mode):
            raise ValidationError("vMF mode must be real")
        if not float(self.kappa) >= 0:
            raise DomainError(f"kappa must be >= 0, got {self.kappa}")
        mode.setflags(write=False)
        object.__setattr__(self, "mode", mode)
        object.__setattr__(self, "kappa", float(self.kappa))

    @property
    def p(self):
        return self.mode.size

    def sigma_model(self):
        return SpectrumModel.identity(self.p)


@dataclass(frozen=True)
class WatsonParams(_Family):
    """Watson with density ``exp(p kappa ||P_h' x||^2)`` up to a constant; ``kappa < 1/2``."""

    basis: ProjectionBasis
    kappa: float
    family = "watson"

    def __post_init__(self):
        if not isinstance(self.basis, ProjectionBasis):
            object.__setattr__(self, "basis", ProjectionBasis(self.basis))
        if np.iscomplexobj(self.basis.columns):
            raise ValidationError("Watson axes must be real")
        if not float(self.kappa) < 0.5:
            raise DomainError(f"Watson needs kappa < 1/2, got {self.kappa}")
        object.__setattr__(self, "kappa", float(self.kappa))

    @property
    def p(self):
        return self.basis.p

    @property
    def h(self):
        return self.basis.h

    def sigma_model(self):
        lam = 1.0 / (1.0 - 2.0 * self.kappa)
        return SpectrumModel(p=self.p, values=np.full(self.h, lam),
                             vectors=self.basis.columns, bulk=1.0)


@dataclass(frozen=True)
class FisherBinghamParams(_Family):
    """Fisher-Bingham ``exp(sqrt(p) kappa x' nu + p x' B x)`` with ``nu`` an eigenvector of B.

    ``nu`` is column ``mode_index`` of ``spectrum.vectors`` unless an explicit
    ``mode`` is given; an explicit mode must be an eigenvector of Sigma.
    """

    spectrum: SpectrumModel
    kappa: float
    mode_index: int = 0
    mode: np.ndarray | None = None
    family = "fisher_bingham"

    def __post_init__(self):
        s = self.spectrum
        if s.hermitian or s.kind != "sigma":
            raise ValidationError("Fisher-Bingham needs a real Sigma spectrum")
        if not float(self.kappa) >= 0:
            raise DomainError(f"kappa must be >= 0, got {self.kappa}")
        object.__setattr__(self, "kappa", float(self.kappa))
        if self.mode is None:
            if not 0 <= self.mode_index < s.k:
                raise ValidationError(
                    f"mode_index {self.mode_index} outside the {s.k} explicit eigenvectors"
                )
            nu = np.array(s.vectors[:, self.mode_index])
        else:
            nu = unit_vector(self.mode)
            Snu = s.apply(nu)
            lam = float(nu @ Snu)
            if np.max(np.abs(Snu - lam * nu)) > 1e-8 * max(1.0, abs(lam)):
                raise ValidationError("Fisher-Bingham mode must be an eigenvector of Sigma")
        nu.setflags(write=False)
        object.__setattr__(self, "mode", nu)

    @property
    def p(self):
        return self.spectrum.p

    def sigma_model(self):
        return self.spectrum

    def structure(self):
        """Explicit eigen-frame containing ``nu``: (vectors, Sigma values, index of nu)."""
        s = self.spectrum
        V = np.array(s.vectors)
        vals = np.array(s.values)
        coef = V.T @ self.mode if s.k else np.zeros(0)
        if s.k and np.max(np.abs(coef)) > 1 - 1e-10:
            return V, vals, int(np.argmax(np.abs(coef)))
        resid = self.mode - V @ coef
        resid /= np.linalg.norm(resid)
        V = np.column_stack([V, resid]) if s.k else resid[:, None]
        vals = np.append(vals, s.bulk)
        return V, vals, V.shape[1] - 1


@dataclass(frozen=True)
class ComplexBinghamParams(_Family):
    """Complex Bingham ``exp(p z^* B z)`` with ``Sigma = (I - B)^{-1}`` Hermitian."""

    spectrum: SpectrumModel
    family = "complex_bingham"
    is_complex = True

    def __post_init__(self):
        s = self.spectrum
        if not s.hermitian or s.kind != "sigma":
            raise ValidationError("complex Bingham needs a Hermitian Sigma spectrum")

    @property
    def p(self):
        return self.spectrum.p

    def sigma_model(self):
        return self.spectrum

    def taus(self):
        """Eigenvalues of ``p B_p`` (length p, descending)."""
        return self.p * (1.0 - 1.0 / self.spectrum.eigenvalues)


@dataclass(frozen=True)
class ComplexWatsonParams(_Family):
    """Complex Watson ``exp(-p z^* (I - kappa mu mu^*) z)``; ``kappa < 1``."""

    mode: np.ndarray
    kappa: float
    family = "complex_watson"
    is_complex = True

    def __post_init__(self):
        mu = unit_vector(self.mode, complex_=True)
        if not float(self.kappa) < 1.0:
            raise DomainError(f"complex Watson needs kappa < 1, got {self.kappa}")
        mu.setflags(write=False)
        object.__setattr__(self, "mode", mu)
        object.__setattr__(self, "kappa", float(self.kappa))

    @property
    def p(self):
        return self.mode.size

    def sigma_model(self):
        return SpectrumModel(p=self.p, values=[1.0 / (1.0 - self.kappa)],
                             vectors=self.mode[:, None], bulk=1.0, hermitian=True)


FAMILIES = {
    cls.family: cls
    for cls in (UniformParams, BinghamParams, VmfParams, WatsonParams,
                FisherBinghamParams, ComplexBinghamParams, ComplexWatsonParams)
}


# ---------------------------------------------------------------------------
# JSON


def _encode_vectors(V):
    V = np.asarray(V)
    if np.iscomplexobj(V):
        return {"re": V.real.tolist(), "im": V.imag.tolist()}
    return V.tolist()


def _decode_vectors(obj, p, k, complex_=False):
    """Explicit nested lists, or a generator description."""
    if isinstance(obj, dict) and "generator" in obj:
        gen = obj["generator"]
        start = int(obj.get("start", 0 if gen == "axes" else 1))
        if gen == "axes":
            V = np.zeros((p, k))
            V[np.arange(start, start + k), np.arange(k)] = 1.0
        elif gen == "cosine":
            V = cosine_basis(p, k, start=start)
        else:
            raise ValidationError(f"unknown vector generator {gen!r}")
        return V.astype(complex) if complex_ else V
    if isinstance(obj, dict):
        V = np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj["im"], dtype=float)
    else:
        V = np.asarray(obj, dtype=complex if complex_ else float)
    if V.ndim == 1:
        V = V[:, None]
    return V


def _spectrum_to_dict(s):
    return {
        "p": s.p,
        "values": s.values.tolist(),
        "vectors": _encode_vectors(s.vectors),
        "bulk": s.bulk,
        "hermitian": s.hermitian,
    }


def _spectrum_from_dict(d, p=None, hermitian=False):
    p = int(d.get("p", p))
    values = np.asarray(d.get("values", []), dtype=float)
    hermitian = bool(d.get("hermitian", hermitian))
    V = _decode_vectors(d.get("vectors", {"generator": "axes"}), p, values.size, hermitian)
    return SpectrumModel(p=p, values=values, vectors=V, bulk=float(d.get("bulk", 1.0)),
                         hermitian=hermitian)


def params_to_dict(params):
    """JSON-ready description: a ``family`` tag plus that family's fields."""
    fam = params.family
    out = {"family": fam, "p": params.p}
    if fam == "uniform":
        out["complex"] = params.complex_
    elif fam in ("bingham", "complex_bingham"):
        out["spectrum"] = _spectrum_to_dict(params.spectrum)
    elif fam in ("vmf", "complex_watson"):
        out["kappa"] = params.kappa
        out["mode"] = _encode_vectors(params.mode)
    elif fam == "watson":
        out["kappa"] = params.kappa
        out["basis"] = _encode_vectors(params.basis.columns)
    elif fam == "fisher_bingham":
        out["kappa"] = params.kappa
        out["spectrum"] = _spectrum_to_dict(params.spectrum)
        out["mode"] = params.mode.tolist()
    return out


def params_from_dict(d):
    """Inverse of :func:`params_to_dict`.

    Vectors may be explicit lists (complex as ``{"re": ..., "im": ...}``) or
    generator descriptions ``{"generator": "axes" | "cosine", "start": i}``.
    A vector-valued ``mode`` may also be written as an axis index
    ``{"axis": i}``.
    """
    fam = d.get("family")
    if fam not in FAMILIES:
        raise ValidationError(f"unknown family {fam!r}; choose from {sorted(FAMILIES)}")
    p = d.get("p")

    def mode_vector(obj, complex_=False):
        if isinstance(obj, dict) and "axis" in obj:
            v = np.zeros(int(p), dtype=complex if complex_ else float)
            v[int(obj["axis"])] = 1.0
            return v
        return _decode_vectors(obj, int(p), 1, complex_)[:, 0]

    if fam == "uniform":
        return UniformParams(p=int(p), complex_=bool(d.get("complex", False)))
    if fam == "bingham":
        return BinghamParams(_spectrum_from_dict(d["spectrum"], p))
    if fam == "complex_bingham":
        return ComplexBinghamParams(_spectrum_from_dict(d["spectrum"], p, hermitian=True))
    if fam == "vmf":
        return VmfParams(mode_vector(d.get("mode", {"axis": 0})), d["kappa"])
    if fam == "complex_watson":
        return ComplexWatsonParams(mode_vector(d.get("mode", {"axis": 0}), True), d["kappa"])
    if fam == "watson":
        h = int(d.get("h", 1))
        B = _decode_vectors(d.get("basis", {"generator": "axes"}), int(p), h)
        return WatsonParams(ProjectionBasis(B), d["kappa"])
    spec = _spectrum_from_dict(d["spectrum"], p)
    mode = d.get("mode")
    return FisherBinghamParams(spec, d["kappa"], mode_index=int(d.get("mode_index", 0)),
                               mode=None if mode is None else mode_vector(mode))
