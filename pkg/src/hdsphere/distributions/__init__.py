"""Sphere distributions: parameters, exact samplers, densities and Gaussian limits."""

from .approx import GaussianApprox, ProjectionLaw, gaussian_approx, projection_law
from .density import (LogDensity, MCEstimate, exponent, key_vectors, log_constant,
                      logpdf, mc_log_constant, reference_measure)
from .framed import FramedSample, build_frame
from .params import (FAMILIES, BinghamParams, ComplexBinghamParams,
                     ComplexWatsonParams, FisherBinghamParams, UniformParams,
                     VmfParams, WatsonParams, params_from_dict, params_to_dict,
                     unit_vector)
from .sampling import (draw, sample, sample_bingham, sample_complex_bingham,
                       sample_complex_watson, sample_fisher_bingham,
                       sample_uniform, sample_vmf, sample_watson)

__all__ = [
    "GaussianApprox", "ProjectionLaw", "gaussian_approx", "projection_law",
    "LogDensity", "MCEstimate", "exponent", "key_vectors", "log_constant", "logpdf",
    "mc_log_constant", "reference_measure", "FramedSample", "build_frame",
    "FAMILIES", "BinghamParams", "ComplexBinghamParams", "ComplexWatsonParams",
    "FisherBinghamParams", "UniformParams", "VmfParams", "WatsonParams",
    "params_from_dict", "params_to_dict", "unit_vector", "draw", "sample",
    "sample_bingham", "sample_complex_bingham", "sample_complex_watson",
    "sample_fisher_bingham", "sample_uniform", "sample_vmf", "sample_watson",
]
