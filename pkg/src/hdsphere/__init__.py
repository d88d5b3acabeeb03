"""Distributions on high-dimensional real and complex spheres.

Normalizing constants, exact samplers, large-p Gaussian approximations,
inference for Bingham-type models, Wiener-process limits of projections,
and a Monte Carlo verification harness.
"""

__version__ = "0.1.0"
