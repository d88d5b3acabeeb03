"""Command-line interface.

Subcommands: ``fit``, ``sample``, ``logpdf``, ``constants-table``,
``mc-verify``, ``pca``, ``paths`` and ``synth``. Every report embeds the
resolved configuration and the package version; JSON keys are sorted so
identical runs produce identical bytes. The worker count never changes
results and is left out of the embedded configuration.

Exit codes: 0 success, 1 validation or usage error, 2 numeric failure,
3 ``mc-verify`` ran but some check failed.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .distributions import (FAMILIES, draw, logpdf, params_from_dict, params_to_dict)
from .errors import NumericError, PracticalityError, ValidationError
from .inference import fit_bingham, fit_complex, fit_vmf_projected
from .mc_harness import run_suite
from .shape_pipeline import (analyze, ingest_rays, normalize, pc_extremes, planted_spectrum,
                             synth_rays, write_rays)
from .specfun import GAP_TABLE_KAPPA, GAP_TABLE_P, gap_table_entry
from .spectral import (read_sample_binary, read_sample_csv, write_sample_binary,
                       write_sample_csv)
from .wiener import GaussianMeasureSpec, build_paths, rn_density, simulate_limit_path

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC, EXIT_FAILED = 0, 1, 2, 3
_NOT_CONFIG = {"workers", "out", "format", "func", "command"}


class UsageError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _floats(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


# ---------------------------------------------------------------------------
# output helpers


def _config(args):
    return {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_CONFIG}


def _header(args):
    return {"command": args.command, "config": _config(args), "version": __version__}


def _json_text(obj):
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _write_text(args, text):
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _csv_header(args):
    return "# hdsphere " + json.dumps(_header(args), sort_keys=True) + "\n"


def _table(rows, headers):
    cells = [headers] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    return "\n".join(lines) + "\n"


def _emit(args, payload, rows=None, headers=None):
    """Write ``payload`` as JSON, or ``rows`` as CSV / an aligned table."""
    fmt = args.format
    if fmt == "json" or rows is None:
        _write_text(args, _json_text({**_header(args), **payload}))
        return
    if fmt == "csv":
        buf = io.StringIO()
        buf.write(_csv_header(args))
        buf.write(",".join(headers) + "\n")
        for r in rows:
            buf.write(",".join(str(c) for c in r) + "\n")
        _write_text(args, buf.getvalue())
    else:
        _write_text(args, _table(rows, headers))


def _read_samples(path):
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return read_sample_csv(path)
    return read_sample_binary(path)


# ---------------------------------------------------------------------------
# family parameters from flags


def _add_family_flags(sp):
    sp.add_argument("--family", choices=sorted(FAMILIES))
    sp.add_argument("--params", help="JSON parameter file (overrides the family flags)")
    sp.add_argument("--p", type=int)
    sp.add_argument("--kappa", type=float)
    sp.add_argument("--h", type=int, default=1, help="Watson axis count")
    sp.add_argument("--spikes", type=_floats, default=[],
                    help="leading Sigma eigenvalues, comma-separated")
    sp.add_argument("--basis", choices=["axes", "cosine"], default="axes")
    sp.add_argument("--mode-axis", type=int, default=0)
    sp.add_argument("--complex", action="store_true", help="uniform on the complex sphere")


def _params_from_args(args):
    if args.params:
        return params_from_dict(json.loads(Path(args.params).read_text()))
    if args.family is None or args.p is None:
        raise UsageError("give --params FILE or both --family and --p")
    fam, d = args.family, {"family": args.family, "p": args.p}
    needs_kappa = fam in ("vmf", "watson", "fisher_bingham", "complex_watson")
    if needs_kappa and args.kappa is None:
        raise UsageError(f"--kappa is required for {fam}")
    if fam == "uniform":
        d["complex"] = args.complex
    elif fam in ("vmf", "complex_watson"):
        d.update(kappa=args.kappa, mode={"axis": args.mode_axis})
    elif fam == "watson":
        d.update(kappa=args.kappa, h=args.h, basis={"generator": args.basis})
    else:
        if not args.spikes:
            raise UsageError(f"--spikes is required for {fam}")
        d["spectrum"] = {"values": args.spikes, "vectors": {"generator": args.basis}}
        if fam == "fisher_bingham":
            d["kappa"] = args.kappa
    return params_from_dict(d)


# ---------------------------------------------------------------------------
# subcommands


def cmd_constants_table(args):
    p_list = args.p_list or list(GAP_TABLE_P)
    k_list = args.kappa_list or list(GAP_TABLE_KAPPA)
    grid = [[gap_table_entry(p, k) for k in k_list] for p in p_list]
    rows = [[p] + [f"{v:.5f}" for v in row] for p, row in zip(p_list, grid)]
    payload = {"p_list": p_list, "kappa_list": k_list,
               "values": [[round(v, 5) for v in row] for row in grid],
               "quantity": "|log(c_CW(kappa) / c_N(kappa))|"}
    _emit(args, payload, rows, ["p"] + [f"{k:g}" for k in k_list])
    return EXIT_OK


def cmd_sample(args):
    params = _params_from_args(args)
    fs = draw(params, args.n, args.seed, workers=args.workers)
    X = fs.materialize(workers=args.workers)
    info = {k: v for k, v in sorted(fs.info.items()) if isinstance(v, (int, float, str))}
    meta = {**_header(args), "params": params_to_dict(params), "sampler": info}
    if args.out and Path(args.out).suffix.lower() not in (".csv", ".json"):
        write_sample_binary(args.out, X)
        Path(str(args.out) + ".json").write_text(_json_text(meta))
        return EXIT_OK
    if args.format == "json":
        data = X.data
        enc = ({"re": data.real.T.tolist(), "im": data.imag.T.tolist()}
               if np.iscomplexobj(data) else data.T.tolist())
        _write_text(args, _json_text({**meta, "samples": enc}))
        return EXIT_OK
    buf = io.StringIO()
    buf.write("# hdsphere " + json.dumps(meta, sort_keys=True) + "\n")
    write_sample_csv(buf, X)
    _write_text(args, buf.getvalue())
    return EXIT_OK


def cmd_logpdf(args):
    params = _params_from_args(args)
    X = _read_samples(args.input)
    const = logpdf(params, X)
    vals = np.atleast_1d(const.value if const.value is not None else const.exponent).tolist()
    payload = {"params": params_to_dict(params), "reference_measure": const.reference,
               "log_constant": const.log_constant, "oracle_required": const.oracle_required,
               "note": const.note,
               "quantity": "log density" if const.log_constant is not None
               else "exponent only (normalizing constant unavailable)",
               "values": vals}
    rows = [[i + 1, f"{v:.17g}"] for i, v in enumerate(vals)]
    _emit(args, payload, rows, ["row", "value"])
    return EXIT_OK


def cmd_fit(args):
    X = _read_samples(args.input)
    fam = args.family
    if fam == "bingham":
        out = fit_bingham(X).to_dict()
    elif fam in ("cbingham", "cwatson"):
        out = fit_complex(X, fam).to_dict()
    else:
        if args.h is None:
            raise UsageError("--h is required for vmf")
        data = X.data
        h = args.h
        if not 1 <= h <= X.p:
            raise UsageError(f"--h must be in 1..{X.p}")
        V = np.sqrt(X.p / h) * data[:h, :]
        out = fit_vmf_projected(V).to_dict()
    _emit(args, {"fit": out})
    return EXIT_OK


def _load_config(path):
    if path is None:
        text = resources.files("hdsphere").joinpath("data/default.json").read_text()
    else:
        text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config is not valid JSON: {exc}") from None


def cmd_mc_verify(args):
    cfg = _load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    report = run_suite(cfg, workers=args.workers)
    rows = [[r["name"], "PASS" if r["passed"] else "FAIL"] for r in report["results"]]
    _emit(args, {"report": report}, rows, ["check", "result"])
    return EXIT_OK if report["all_passed"] else EXIT_FAILED


def cmd_pca(args):
    ds = ingest_rays(args.input)
    X = normalize(ds)
    summary = analyze(X)
    payload = {"summary": summary.to_dict(),
               "scales": X.meta["scales"].tolist()}
    if args.out:
        out = Path(args.out)
        stem = out.with_suffix("")
        files = {"mode": f"{stem.name}_mode.csv"}
        _vector_csv(out.parent / files["mode"], summary.mode)
        npc = min(args.n_pcs, summary.pcs.shape[1])
        for j in range(npc):
            name = f"{stem.name}_pc{j + 2}.csv"
            _vector_csv(out.parent / name, summary.pcs[:, j])
            files[f"pc{j + 2}"] = name
        for j in args.extremes:
            plus, minus = pc_extremes(summary, j, args.c)
            name = f"{stem.name}_extremes_pc{j}.csv"
            _extremes_csv(out.parent / name, plus, minus, ds.directions)
            files[f"extremes_pc{j}"] = name
        payload["files"] = files
    elif args.extremes:
        raise UsageError("--extremes needs --out (point sets go to side files)")
    rows = [[j + 2, f"{v:.6g}", f"{pc:.4f}"] for j, (v, pc) in
            enumerate(zip(summary.pc_variances[:args.n_pcs], summary.percents[:args.n_pcs]))]
    _emit(args, payload, rows, ["pc", "omega", "percent"])
    return EXIT_OK


def _vector_csv(path, v):
    Path(path).write_text("value\n" + "".join(f"{x:.17g}\n" for x in v))


def _extremes_csv(path, plus, minus, directions):
    lines = []
    if directions is not None:
        lines.append("ray,dx,dy,dz,plus,minus,plus_x,plus_y,plus_z,minus_x,minus_y,minus_z")
        for i, (d, a, b) in enumerate(zip(directions, plus, minus)):
            pa, pb = a * d, b * d
            lines.append(",".join([str(i + 1)] + [f"{x:.17g}" for x in
                                                  (*d, a, b, *pa, *pb)]))
    else:
        lines.append("ray,plus,minus")
        lines += [f"{i + 1},{a:.17g},{b:.17g}" for i, (a, b) in enumerate(zip(plus, minus))]
    Path(path).write_text("\n".join(lines) + "\n")


def cmd_paths(args):
    spec = None
    if args.spec:
        spec = GaussianMeasureSpec.from_dict(json.loads(Path(args.spec).read_text()))
    if args.input:
        X = _read_samples(args.input)
        if X.is_complex:
            raise ValidationError("paths need real samples")
        Y = build_paths(X.data)
        payload = {"p": X.p, "n": X.n}
        if spec is not None:
            if spec.p != X.p:
                raise ValidationError(f"spec has p={spec.p}, samples have p={X.p}")
            rn = [rn_density(Y[i], spec) for i in range(X.n)]
            payload["rn_density"] = rn
    else:
        if spec is None:
            if args.p is None:
                raise UsageError("simulation needs --spec or --p")
            spec = GaussianMeasureSpec(a=np.zeros(0), gamma=np.zeros((0, args.p)))
        Y = simulate_limit_path(spec, args.n, args.seed)
        payload = {"p": spec.p, "n": int(args.n), "spec": spec.to_dict(explicit=False)}
    knots = np.arange(Y.shape[1]) / (Y.shape[1] - 1)
    if args.format == "json":
        payload["t"] = knots.tolist()
        payload["paths"] = Y.tolist()
        _emit(args, payload)
        return EXIT_OK
    buf = io.StringIO()
    buf.write(_csv_header(args))
    buf.write("t," + ",".join(f"path{i + 1}" for i in range(Y.shape[0])) + "\n")
    for k, t in enumerate(knots):
        buf.write(f"{t:.17g}," + ",".join(f"{v:.17g}" for v in Y[:, k]) + "\n")
    _write_text(args, buf.getvalue())
    return EXIT_OK


def cmd_synth(args):
    planted = planted_spectrum(args.p, args.pc_sds, noise=args.noise)
    ds = synth_rays(args.p, args.n, planted, args.seed)
    if not args.out:
        raise UsageError("synth needs --out (a .csv or binary ray file)")
    write_rays(ds, args.out)
    truth = {"pc_sds": list(args.pc_sds), "noise": args.noise,
             "scales": ds.truth["scales"].tolist()}
    Path(str(args.out) + ".json").write_text(_json_text({**_header(args), "truth": truth}))
    return EXIT_OK


# ---------------------------------------------------------------------------


def _common():
    # fresh per subcommand: argparse shares parent actions, so defaults set on
    # one subcommand would leak into the others
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--format", choices=["json", "csv", "table"], default="json")
    common.add_argument("--out")
    return common


def build_parser():
    parser = _Parser(prog="hdsphere", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"hdsphere {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    sp = sub.add_parser("constants-table", parents=[_common()],
                        help="log-gap between the complex Watson constant and its Gaussian approximation")
    sp.add_argument("--p-list", type=_ints)
    sp.add_argument("--kappa-list", type=_floats)
    sp.set_defaults(func=cmd_constants_table)

    sp = sub.add_parser("sample", parents=[_common()], help="draw unit vectors")
    _add_family_flags(sp)
    sp.add_argument("--n", type=int, required=True)
    sp.set_defaults(func=cmd_sample, format="csv")

    sp = sub.add_parser("logpdf", parents=[_common()], help="log density at points from a file")
    _add_family_flags(sp)
    sp.add_argument("--input", required=True)
    sp.set_defaults(func=cmd_logpdf)

    sp = sub.add_parser("fit", parents=[_common()], help="fit a model to unit vectors")
    sp.add_argument("--family", choices=["bingham", "cbingham", "cwatson", "vmf"],
                    required=True)
    sp.add_argument("--input", required=True)
    sp.add_argument("--h", type=int, help="projection dimension for vmf")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("mc-verify", parents=[_common()], help="Monte Carlo limit-law suite")
    sp.add_argument("--config", help="JSON config (default: the packaged default.json)")
    sp.set_defaults(func=cmd_mc_verify, seed=None)

    sp = sub.add_parser("pca", parents=[_common()], help="ray-length shape PCA")
    sp.add_argument("--input", required=True)
    sp.add_argument("--n-pcs", type=int, default=5)
    sp.add_argument("--extremes", type=_ints, default=[], help="PC indices (>= 2)")
    sp.add_argument("--c", type=float, default=3.0)
    sp.set_defaults(func=cmd_pca)

    sp = sub.add_parser("paths", parents=[_common()],
                        help="sample paths from unit vectors, or simulate limit paths")
    sp.add_argument("--input")
    sp.add_argument("--spec", help="JSON Gaussian-measure spec")
    sp.add_argument("--p", type=int)
    sp.add_argument("--n", type=int, default=1)
    sp.set_defaults(func=cmd_paths, format="csv")

    sp = sub.add_parser("synth", parents=[_common()], help="synthetic ray-length data")
    sp.add_argument("--p", type=int, default=62501)
    sp.add_argument("--n", type=int, default=74)
    sp.add_argument("--pc-sds", type=_floats, default=[0.05])
    sp.add_argument("--noise", type=float, default=1e-4)
    sp.set_defaults(func=cmd_synth)
    return parser


def run(argv=None):
    """Parse ``argv``, run the subcommand and return the exit code."""
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required (see --help)")
        if getattr(args, "workers", 1) < 1:
            raise UsageError("--workers must be >= 1")
        return args.func(args)
    except (ValidationError, OSError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericError, PracticalityError, ArithmeticError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main(argv=None):
    sys.exit(run(argv))
