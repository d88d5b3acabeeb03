"""Monte Carlo checks of the large-p limit theorems.

Each ``run_*`` function samples a model, applies the relevant
standardization and tests the result against its limit law. Reports are
plain dataclasses with a ``to_dict`` method; the dicts contain no timestamps
and are reproducible from ``(config, seed)`` for any worker count.

Test battery for projections (Bonferroni across all tests of one report):

* per-component Kolmogorov-Smirnov against N(0, 1),
* per-component variance (two-sided chi-square on ``(n-1) s^2``),
* the mean: ``n ||y_bar - phi||^2`` against chi-square,
* the quadratic form ``||y||^2`` against (noncentral) chi-square, by KS,
* Mardia's multivariate kurtosis.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from . import __version__
from .distributions import (BinghamParams, ComplexBinghamParams,
                            ComplexWatsonParams, FisherBinghamParams,
                            UniformParams, VmfParams, WatsonParams, draw,
                            params_from_dict, projection_law)
from .distributions.approx import GaussianApprox, ProjectionLaw
from .errors import ValidationError
from .inference import concentration_test, eigen_clt, fit_vmf_projected
from .spectral import ProjectionBasis, SpectrumModel, cosine_basis, make_spike_spectrum

__all__ = [
    "LimitTestReport",
    "limit_battery",
    "run_projection_test",
    "uncorrected_watson_law",
    "run_norm_concentration",
    "run_path_convergence",
    "run_estimator_laws",
    "energy_test",
    "run_suite",
    "DEFAULT_CONFIG",
]


def _f(x):
    return float(x)


@dataclass(frozen=True)
class LimitTestReport:
    family: str
    p: int
    h: int
    n_draws: int
    seed: int
    alpha: float
    ks: list
    variance: list
    mean_test: dict
    quadratic_form: dict
    mardia_kurtosis: dict
    mean_error: float
    covariance_error_frobenius: float
    variance_ratio: list
    bonferroni_level: float
    passed: bool
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def limit_battery(y, law, alpha=0.01):
    """Run the projection battery on standardized draws ``y`` (shape ``(h, n)``).

    Returns a dict of test results and the overall pass flag.
    """
    y = np.asarray(y)
    comps = law.real_components(y)
    H, n = comps.shape
    ks = []
    for i, c in enumerate(comps):
        r = stats.kstest(c, "norm")
        ks.append({"component": i, "statistic": _f(r.statistic), "p_value": _f(r.pvalue)})
    var = []
    for i, c in enumerate(comps):
        s2 = float(np.var(c, ddof=1))
        q = (n - 1) * s2
        cdf = stats.chi2.cdf(q, n - 1)
        pv = min(1.0, 2.0 * min(cdf, 1.0 - cdf))
        var.append({"component": i, "variance": s2, "p_value": _f(pv)})
    mbar = comps.mean(axis=1)
    mstat = n * float(mbar @ mbar)
    mean_test = {"statistic": mstat, "df": H, "p_value": _f(stats.chi2.sf(mstat, H))}
    df, nc, scale = law.quadratic_form_law()
    qf = scale * np.sum(np.abs(y) ** 2, axis=0)
    dist = stats.ncx2(df, nc) if nc > 0 else stats.chi2(df)
    r = stats.kstest(qf, dist.cdf)
    quad = {"df": df, "noncentrality": nc, "statistic": _f(r.statistic), "p_value": _f(r.pvalue)}
    # Mardia kurtosis about the known centre and covariance: d2 ~ chi2_H, so
    # E d2^2 = H(H+2) and var d2^2 = H(H+2)[(H+4)(H+6) - H(H+2)]
    d2 = np.sum(comps * comps, axis=0)
    b2 = float(np.mean(d2 * d2))
    var_b2 = H * (H + 2) * ((H + 4) * (H + 6) - H * (H + 2)) / n
    z = (b2 - H * (H + 2)) / math.sqrt(var_b2)
    mardia = {"statistic": b2, "z": z, "p_value": _f(2.0 * stats.norm.sf(abs(z)))}
    m_tests = 2 * H + 3
    level = alpha / m_tests
    pvals = ([t["p_value"] for t in ks] + [t["p_value"] for t in var]
             + [mean_test["p_value"], quad["p_value"], mardia["p_value"]])
    cov = np.cov(comps)
    cov = np.atleast_2d(cov)
    return {
        "ks": ks,
        "variance": var,
        "mean_test": mean_test,
        "quadratic_form": quad,
        "mardia_kurtosis": mardia,
        "mean_error": float(np.linalg.norm(mbar)),
        "covariance_error_frobenius": float(np.linalg.norm(cov - np.eye(H))),
        "variance_ratio": [t["variance"] for t in var],
        "bonferroni_level": level,
        "passed": bool(min(pvals) >= level),
    }


def uncorrected_watson_law(params, basis):
    """Watson projection law with the ``(1 - 2 kappa)^{1/2}`` factor left out.

    Kept to demonstrate that the scaling is needed: the resulting
    components have variance ``1/(1 - 2 kappa)`` instead of 1.
    """
    if not isinstance(params, WatsonParams):
        raise ValidationError("only defined for Watson parameters")
    law = projection_law(params, basis)
    return ProjectionLaw(basis=law.basis, transform=np.eye(law.h), mean=law.mean,
                         is_complex=False)


def run_projection_test(params, basis, n_draws=5000, seed=0, alpha=0.01, workers=1,
                        law=None, fb_mean="derived"):
    """Sample ``params`` exactly, standardize the projection onto ``basis`` and
    test it against :func:`~hdsphere.distributions.projection_law`."""
    if not isinstance(basis, ProjectionBasis):
        basis = ProjectionBasis(basis)
    if params.is_complex and not np.iscomplexobj(basis.columns):
        basis = ProjectionBasis(basis.columns.astype(complex))
    if law is None:
        law = projection_law(params, basis, fb_mean=fb_mean)
    fs = draw(params, n_draws, seed, extra=basis.columns, workers=workers)
    y = law.standardize(fs.project(basis))
    res = limit_battery(y, law, alpha)
    return LimitTestReport(
        family=params.family, p=params.p, h=basis.h, n_draws=int(n_draws), seed=int(seed),
        alpha=float(alpha), extra={"acceptance_rate": fs.info.get("acceptance_rate"),
                                   "method": fs.info.get("method"),
                                   "phi": np.real_if_close(law.mean).tolist()
                                   if not law.is_complex else
                                   {"re": law.mean.real.tolist(), "im": law.mean.imag.tolist()}},
        **res)


# ---------------------------------------------------------------------------
# norm concentration


def _norm_stats(q, mean_t, var_t, n):
    m = float(q.mean())
    v = float(q.var(ddof=1))
    se_m = math.sqrt(var_t / n)
    mu4 = float(np.mean((q - m) ** 4))
    se_v = math.sqrt(max(mu4 - v * v, 0.0) / n)
    return {
        "mean": m, "mean_theory": mean_t, "mean_se": se_m,
        "mean_ok": abs(m - mean_t) <= 3 * se_m,
        "variance": v, "variance_theory": var_t, "variance_se": se_v,
        "variance_ok": abs(v - var_t) <= 3 * se_v,
    }


def run_norm_concentration(spikes=(), p_list=(1000, 10000), n_draws=20000, seed=0,
                           spread_band=(0.8, 1.25)):
    """Moments of ``||v||^2`` for ``v ~ N(0, Sigma/p)`` and the p-stability of
    ``sqrt(p) (||v||^2 - E)``.

    ``spikes`` lists the leading eigenvalues (bulk 1). A
    :class:`SpectrumModel` may be passed instead, for a single ``p``.
    """
    if isinstance(spikes, SpectrumModel):
        specs = [spikes]
        label = spikes.values.tolist()
    else:
        label = [float(s) for s in spikes]
        specs = [make_spike_spectrum(p, label) if label else SpectrumModel.identity(p)
                 for p in p_list]
    rows = []
    for i, spec in enumerate(specs):
        ga = GaussianApprox(mean=np.zeros(spec.p), cov=spec, scale=float(spec.p))
        mean_t = spec.trace() / spec.p
        var_t = 2.0 * spec.trace_sq() / spec.p ** 2
        q = ga.sample_squared_norms(n_draws, seed + i)
        row = {"p": spec.p, **_norm_stats(q, mean_t, var_t, n_draws),
               "scaled_spread": float(np.std(math.sqrt(spec.p) * (q - mean_t), ddof=1))}
        rows.append(row)
    spreads = [r["scaled_spread"] for r in rows]
    ratios = [spreads[i + 1] / spreads[i] for i in range(len(spreads) - 1)]
    stable = all(spread_band[0] <= r <= spread_band[1] for r in ratios)
    passed = all(r["mean_ok"] and r["variance_ok"] for r in rows) and stable
    return {"kind": "norm_concentration", "spikes": label, "n_draws": int(n_draws),
            "seed": int(seed), "rows": rows, "spread_ratios": ratios,
            "spread_band": list(spread_band), "spread_stable": stable, "passed": bool(passed)}


# ---------------------------------------------------------------------------
# path convergence


def _limit_G(j_list, t):
    """``int_0^t sqrt(2) cos(j pi s) ds`` for the smooth spike directions."""
    j = np.asarray(j_list, dtype=float)[:, None]
    return math.sqrt(2.0) * np.sin(j * math.pi * np.asarray(t)[None, :]) / (j * math.pi)


def run_path_convergence(spikes=(), p_list=(100, 10000), n_draws=5000,
                         grid=(0.2, 0.4, 0.6, 0.8, 1.0), seed=0, repeats=1, workers=1):
    """Empirical mean and covariance of ``Q_p(x, t)`` for Bingham draws ``x``.

    Spike directions are the smooth cosine vectors, so the limit covariance
    ``min(s, t) - sum_j a_j G_j(s) G_j(t)`` (``a_j = 1 - lambda_j``) does not
    depend on ``p``. Grid times must be knots of every ``p`` in ``p_list``.
    For each ``p`` the report gives the maximum absolute covariance deviation
    (averaged over ``repeats``), whether every covariance entry and every
    mean lies within 3 SE, and the trend across ``p``.
    """
    spikes = tuple(float(s) for s in spikes)
    grid = np.asarray(grid, dtype=float)
    a = 1.0 - np.asarray(spikes)
    Gt = _limit_G(np.arange(1, len(spikes) + 1), grid)
    R = np.minimum.outer(grid, grid) - (Gt.T * a) @ Gt
    rows = []
    for ip, p in enumerate(p_list):
        if spikes:
            spec = make_spike_spectrum(p, spikes, cosine_basis(p, len(spikes)))
        else:
            spec = SpectrumModel.identity(p)
        params = BinghamParams(spec)
        knots = np.rint(grid * p).astype(int)
        if np.any(np.abs(knots - grid * p) > 1e-9 * p):
            raise ValidationError(f"grid times are not knots of p = {p}")
        ind = np.zeros((p, grid.size))
        for c, k in enumerate(knots):
            ind[:k, c] = 1.0 / math.sqrt(k)
        devs = []
        for r in range(repeats):
            fs = draw(params, n_draws, seed + 1000 * ip + r, extra=ind, workers=workers)
            Y = (fs.project(ind).T * np.sqrt(knots)).T
            prod = Y[:, None, :] * Y[None, :, :]
            C = prod.mean(axis=2)
            se = prod.std(axis=2, ddof=1) / math.sqrt(n_draws)
            mean = Y.mean(axis=1)
            mean_se = Y.std(axis=1, ddof=1) / math.sqrt(n_draws)
            devs.append(float(np.max(np.abs(C - R))))
            if r == 0:
                first = {
                    "covariance": C.tolist(),
                    "covariance_within_3se": bool(np.all(np.abs(C - R) <= 3 * se)),
                    "max_cov_z": float(np.max(np.abs(C - R) / se)),
                    "mean_within_3se": bool(np.all(np.abs(mean) <= 3 * mean_se)),
                    "max_mean_z": float(np.max(np.abs(mean) / mean_se)),
                }
        rows.append({"p": int(p), "max_deviation": float(np.mean(devs)), **first})
    dev = [r["max_deviation"] for r in rows]
    decreasing = all(dev[i + 1] < dev[i] for i in range(len(dev) - 1))
    return {"kind": "path_convergence", "spikes": list(spikes), "grid": grid.tolist(),
            "limit_covariance": R.tolist(), "n_draws": int(n_draws), "repeats": int(repeats),
            "seed": int(seed), "rows": rows, "deviation_decreasing": decreasing}


# ---------------------------------------------------------------------------
# estimator laws


def _vmf_projection_draws(p, h, kappa, n, seed, replicates, workers=1):
    """``v_i = sqrt(p) P' x_i / sqrt(h)`` for exact vMF draws, replicate-major."""
    mode = np.zeros(p)
    mode[0] = 1.0
    basis = ProjectionBasis.axes(p, h)
    fs = draw(VmfParams(mode, kappa), n * replicates, seed, extra=basis.columns,
              workers=workers)
    V = math.sqrt(p) * fs.project(basis) / math.sqrt(h)
    return V.reshape(h, replicates, n)


def run_estimator_laws(config=None, workers=1):
    """Goodness of fit of the vMF and eigenvalue estimator laws.

    ``config`` keys (defaults in brackets): ``p`` [10000], ``replicates``
    [2000], ``alpha`` [0.01], ``seed`` [0], ``kappa_n`` [200],
    ``eigen_values`` [[4, 2, 1]], ``eigen_n`` [2000], ``coverage_replicates``
    [500].
    """
    cfg = {"p": 10000, "replicates": 2000, "alpha": 0.01, "seed": 0, "kappa_n": 200,
           "eigen_values": [4.0, 2.0, 1.0], "eigen_n": 2000, "coverage_replicates": 500}
    cfg.update(config or {})
    p, R, alpha, seed = int(cfg["p"]), int(cfg["replicates"]), float(cfg["alpha"]), int(cfg["seed"])
    if R < 500:
        raise ValidationError("estimator-law checks need at least 500 replicates")
    n = int(cfg["kappa_n"])
    out = {"kind": "estimator_laws", "config": cfg}

    # central case: n kappa_hat^2 ~ chi2_h
    h = 3
    V = _vmf_projection_draws(p, h, 0.0, n, seed, R, workers)
    k2 = np.array([fit_vmf_projected(V[:, r]).kappa_hat ** 2 for r in range(R)])
    ks = stats.kstest(n * k2, stats.chi2(h).cdf)
    out["kappa_central"] = {"h": h, "n": n, "ks_statistic": _f(ks.statistic),
                            "p_value": _f(ks.pvalue), "passed": bool(ks.pvalue > alpha)}

    # noncentral mean: E[n kappa_hat^2] = h + n kappa^2
    kappa = 1.0
    V = _vmf_projection_draws(p, h, kappa, n, seed + 1, R, workers)
    fits = [fit_vmf_projected(V[:, r]) for r in range(R)]
    stat = n * np.array([f.kappa_hat ** 2 for f in fits])
    target = h + n * kappa ** 2
    se = float(stat.std(ddof=1) / math.sqrt(R))
    out["kappa_noncentral"] = {"h": h, "n": n, "kappa": kappa, "mean": float(stat.mean()),
                               "target": target, "se": se,
                               "passed": bool(abs(stat.mean() - target) <= 3 * se)}

    # n kappa_hat^2 rho^2 ~ chi2_{h-1}
    h4 = 4
    V = _vmf_projection_draws(p, h4, kappa, n, seed + 2, R, workers)
    truth = np.eye(h4)[0]
    cstat = np.array([
        concentration_test(f.direction_hat, f.kappa_hat, truth, n, h4)["statistic"]
        for f in (fit_vmf_projected(V[:, r]) for r in range(R))
    ])
    ks = stats.kstest(cstat, stats.chi2(h4 - 1).cdf)
    out["concentration"] = {"h": h4, "n": n, "kappa": kappa, "ks_statistic": _f(ks.statistic),
                            "p_value": _f(ks.pvalue), "passed": bool(ks.pvalue > alpha)}

    # eigenvalue CLT on Gaussian h-dimensional samples
    lam = np.asarray(cfg["eigen_values"], dtype=float)
    ne = int(cfg["eigen_n"])
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(4,)))
    lam_hat_all = []
    for r in range(R):
        Z = rng.standard_normal((lam.size, ne)) * np.sqrt(lam)[:, None]
        w = np.linalg.eigvalsh(Z @ Z.T / ne)[::-1]
        lam_hat_all.append(w)
    lam_hat_all = np.array(lam_hat_all)
    sd_l1 = float(lam_hat_all[:, 0].std(ddof=1))
    ratio = sd_l1 * math.sqrt(ne) / lam[0]
    out["eigen_sd"] = {"n": ne, "lambda": lam.tolist(), "sd_scaled": ratio,
                       "target": math.sqrt(2.0),
                       "passed": bool(math.sqrt(2) * 0.95 <= ratio <= math.sqrt(2) * 1.05)}
    Rc = int(cfg["coverage_replicates"])
    cover = np.zeros(lam.size)
    for r in range(Rc):
        w = lam_hat_all[r]
        ci = eigen_clt(w, np.eye(lam.size), ne).intervals(0.95)
        cover += (ci[:, 0] <= lam) & (lam <= ci[:, 1])
    cover /= Rc
    out["eigen_coverage"] = {"n": ne, "replicates": Rc, "coverage": cover.tolist(),
                             "passed": bool(np.all(cover >= 0.90))}
    out["passed"] = all(v["passed"] for k, v in out.items() if isinstance(v, dict) and "passed" in v)
    return out


# ---------------------------------------------------------------------------
# two-sample energy test


def energy_test(X, Y, n_perm=199, seed=0):
    """Permutation test of equal distributions from the energy distance.

    ``X`` and ``Y`` are ``(n_x, d)`` and ``(n_y, d)`` arrays of observations.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if Y.ndim == 1:
        Y = Y[:, None]
    Z = np.vstack([X, Y])
    nx, N = X.shape[0], Z.shape[0]
    sq = np.sum(Z * Z, axis=1)
    D = np.sqrt(np.maximum(sq[:, None] + sq[None, :] - 2.0 * Z @ Z.T, 0.0))
    rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(5,)))
    labels = np.zeros((N, n_perm + 1))
    labels[:nx, 0] = 1.0
    for b in range(1, n_perm + 1):
        labels[rng.permutation(N)[:nx], b] = 1.0
    ny = N - nx
    DL = D @ labels
    total = D.sum()
    within_x = np.sum(labels * DL, axis=0)
    row = D.sum(axis=1)
    cross = row @ labels - within_x
    within_y = total - 2 * cross - within_x
    e = 2 * cross / (nx * ny) - within_x / nx ** 2 - within_y / ny ** 2
    stat = e[0] * nx * ny / N
    pval = (1 + np.sum(e[1:] >= e[0])) / (n_perm + 1)
    return {"statistic": float(stat), "p_value": float(pval), "n_perm": int(n_perm)}


# ---------------------------------------------------------------------------
# suite


DEFAULT_CONFIG = {
    "alpha": 0.01,
    "seed": 20050101,
    "p": 10000,
    "n_draws": 5000,
    "projection_tests": [
        {"family": "uniform", "h": 3},
        {"family": "vmf", "h": 3, "kappa": 1.0},
        {"family": "watson", "h": 1, "kappa": 0.3},
        {"family": "bingham", "h": 3, "spikes": [4.0, 2.0]},
        {"family": "fisher_bingham", "h": 3, "spikes": [4.0, 2.0], "kappa": 1.0},
        {"family": "complex_bingham", "h": 3, "spikes": [4.0, 2.0]},
        {"family": "complex_watson", "h": 3, "kappa": 0.5},
    ],
    "watson_power": {"kappa": 0.3, "h": 1, "replicates": 40},
    "norm_concentration": [
        {"spikes": [], "p_list": [1000, 10000, 100000], "n_draws": 20000},
        {"spikes": [4.0, 2.0], "p_list": [1000, 10000, 100000], "n_draws": 20000},
    ],
    "path_convergence": {"spikes": [], "p_list": [10000], "n_draws": 5000,
                         "grid": [0.2, 0.4, 0.6, 0.8, 1.0]},
    "estimator_laws": {"replicates": 2000},
}


def _family_params(entry, p):
    fam = entry["family"]
    if "params" in entry:
        params = params_from_dict(entry["params"])
        return params, ProjectionBasis.axes(params.p, int(entry.get("h", 1)))
    h = int(entry.get("h", 1))
    kappa = float(entry.get("kappa", 0.0))
    spikes = entry.get("spikes", [])
    e0 = np.zeros(p)
    e0[0] = 1.0
    axes = ProjectionBasis.axes(p, h)
    if fam == "uniform":
        return UniformParams(p), axes
    if fam == "vmf":
        return VmfParams(e0, kappa), axes
    if fam == "watson":
        return WatsonParams(ProjectionBasis.axes(p, h), kappa), axes
    if fam == "bingham":
        return BinghamParams(make_spike_spectrum(p, spikes)), axes
    if fam == "fisher_bingham":
        return FisherBinghamParams(make_spike_spectrum(p, spikes), kappa), axes
    if fam == "complex_bingham":
        return ComplexBinghamParams(make_spike_spectrum(p, spikes, hermitian=True)), axes
    if fam == "complex_watson":
        mu = e0.astype(complex)
        return ComplexWatsonParams(mu, kappa), axes
    raise ValidationError(f"unknown family {fam!r} in config")


def run_suite(config=None, workers=1):
    """Run every check listed in ``config`` (defaults: :data:`DEFAULT_CONFIG`).

    Returns a JSON-ready dict with one entry per check and ``all_passed``.
    """
    cfg = dict(DEFAULT_CONFIG)
    cfg.update(config or {})
    alpha, seed = float(cfg["alpha"]), int(cfg["seed"])
    p, n = int(cfg["p"]), int(cfg["n_draws"])
    results = []
    for i, entry in enumerate(cfg.get("projection_tests", [])):
        params, basis = _family_params(entry, int(entry.get("p", p)))
        rep = run_projection_test(params, basis, int(entry.get("n_draws", n)),
                                  seed + i, alpha, workers=workers)
        results.append({"name": f"projection:{entry['family']}", "passed": rep.passed,
                        "report": rep.to_dict()})
    wp = cfg.get("watson_power")
    if wp:
        params = WatsonParams(ProjectionBasis.axes(p, wp["h"]), wp["kappa"])
        basis = ProjectionBasis.axes(p, wp["h"])
        law = uncorrected_watson_law(params, basis)
        reps = int(wp["replicates"])
        rejected = [not run_projection_test(params, basis, n, seed + 500 + r, alpha,
                                            workers=workers, law=law).passed
                    for r in range(reps)]
        power = float(np.mean(rejected))
        results.append({"name": "watson_uncorrected_power", "passed": power >= 0.95,
                        "report": {"power": power, "replicates": reps,
                                   "variance_ratio_expected": 1.0 / (1.0 - 2.0 * wp["kappa"])}})
    for j, nc in enumerate(cfg.get("norm_concentration", [])):
        rep = run_norm_concentration(nc.get("spikes", []), nc.get("p_list", [1000, 10000]),
                                     nc.get("n_draws", 20000), seed + 700 + 10 * j)
        results.append({"name": f"norm_concentration:{j}", "passed": rep["passed"], "report": rep})
    pc = cfg.get("path_convergence")
    if pc:
        rep = run_path_convergence(pc.get("spikes", []), pc.get("p_list", [10000]),
                                   pc.get("n_draws", 5000), pc.get("grid", [0.2, 0.4, 0.6, 0.8, 1.0]),
                                   seed + 800, workers=workers)
        ok = all(r["covariance_within_3se"] and r["mean_within_3se"] for r in rep["rows"])
        results.append({"name": "path_convergence", "passed": ok, "report": rep})
    el = cfg.get("estimator_laws")
    if el:
        rep = run_estimator_laws({"seed": seed + 900, "alpha": alpha, "p": p, **el}, workers)
        results.append({"name": "estimator_laws", "passed": rep["passed"], "report": rep})
    return {"version": __version__, "config": cfg, "results": results,
            "all_passed": all(r["passed"] for r in results)}
