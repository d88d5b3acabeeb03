"""Uniform points on a big sphere, read as paths, look like Brownian motion.

Builds the partial-sum polylines of a few uniform draws, writes them as CSV
for plotting, and checks the likelihood ratio of a spiked Gaussian path
measure against Wiener measure: its mean under uniform paths should be 1.
"""

import math
from pathlib import Path

import numpy as np

from hdsphere.distributions import UniformParams, draw
from hdsphere.spectral import cosine_basis
from hdsphere.wiener import (GaussianMeasureSpec, build_paths, covariance_R,
                             rn_density_from_coefficients)

p = 10_000
out = Path(__file__).with_name("wiener_paths.csv")

X = draw(UniformParams(p), 5, seed=3).materialize().data
Y = build_paths(X)
t = np.arange(p + 1) / p
np.savetxt(out, np.column_stack([t, Y.T])[::10], delimiter=",",
           header="t," + ",".join(f"path{i + 1}" for i in range(5)), comments="")
print(f"wrote {out.name}: 5 paths, every 10th knot")

spec = GaussianMeasureSpec.from_functions(p, [0.5, -0.4], "cosine")
V = cosine_basis(p, 2)
fs = draw(UniformParams(p), 100_000, seed=4, extra=V)
w = np.exp(rn_density_from_coefficients(math.sqrt(p) * fs.project(V).T, spec))
print(f"E[dmu/dW] under uniform paths: {w.mean():.4f} +- {w.std() / math.sqrt(w.size):.4f}")

s = np.array([0.25, 0.5, 1.0])
print("limit covariance R(s, t) on", s.tolist())
print(np.round(covariance_R(spec, s[:, None], s[None, :]), 4))
