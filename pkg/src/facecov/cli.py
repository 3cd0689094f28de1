"""Command-line interface: ``fit``, ``simulate``, and ``bench`` subcommands."""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .alternatives import UnivariateSmoother, raw_svd_fit, s_smooth_fit, ssvd_fit
from .basis import BasisSpec, factorize_smoother
from .campaign import CampaignConfig, run_campaign
from .errors import FacecovError, InputError
from .face import FaceFit, face_fit, scores_blup, scores_numeric
from .incomplete import MaskedData, face_fit_incomplete
from .matio import read_matrix, write_csv_matrix
from .structured import build_pair_designs, center_pair_blocks, face_fit_structured

_METHODS = ("face", "none", "ssvd", "ssmooth")


def _config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _base_report(config: dict) -> dict:
    return {
        "version": __version__,
        "config": config,
        "config_hash": _config_hash(config),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }


def _face_report(fit: FaceFit) -> dict:
    return {
        "n_grid": fit.eigvecs.shape[0],
        "n_subjects": fit.n_subjects,
        "lambda": fit.lambda_,
        "alpha": fit.alpha,
        "sigma2": fit.sigma2,
        "n_selected": fit.n_selected,
        "rank": fit.numerical_rank(),
        "eigenvalues_function": fit.eigvals_function.tolist(),
        "variance_explained": fit.variance_explained().tolist(),
        "warnings": list(fit.warnings),
        "timings": dict(fit.timings),
    }


def _scores_block(fit: FaceFit, which: str) -> dict:
    if which == "numeric":
        sc = scores_numeric(fit)
    else:
        sc = scores_blup(fit)
    return {"method": sc.method, "values": sc.xi.tolist()}


def _artifact_writer(output):
    """Return (write(tag, matrix) -> path-or-None, recorded paths dict)."""
    paths: dict = {}
    if not output:
        return (lambda tag, matrix: None), paths
    parent = os.path.dirname(output)
    if parent:
        os.makedirs(parent, exist_ok=True)
    base = output[:-5] if output.endswith(".json") else output

    def write(tag: str, matrix: np.ndarray):
        path = f"{base}.{tag}.csv"
        write_csv_matrix(path, np.atleast_2d(matrix))
        paths[tag] = path
        return path

    return write, paths


def _cmd_fit(args) -> int:
    center = args.center == "auto"
    y = read_matrix(args.input, fmt=args.format, skip_header=args.header)
    has_missing = bool(np.isnan(y).any())
    config = {
        "command": "fit", "input": os.path.basename(args.input),
        "format": args.format, "method": args.method, "knots": args.knots,
        "alpha": args.alpha, "center": args.center, "pairs": args.pairs,
        "scores": args.scores,
    }
    report = _base_report(config)
    write_artifact, artifact_paths = _artifact_writer(args.output)

    if args.pairs:
        if args.method != "face":
            raise InputError("--pairs requires --method face")
        if has_missing:
            raise InputError("--pairs does not support missing values")
        if y.shape[1] % 2:
            raise InputError(
                f"--pairs needs an even number of columns, got {y.shape[1]}")
        if args.scores != "none":
            raise InputError("--scores is not available with --pairs")
        n_pairs = y.shape[1] // 2
        spec = BasisSpec.regular(y.shape[0], num_interior_knots=args.knots)
        factor = factorize_smoother(spec)
        yc = center_pair_blocks(y) if center else y
        for design in build_pair_designs(n_pairs):
            fit = face_fit_structured(yc, design, factor, alpha=args.alpha)
            report[design.label] = _face_report(fit)
            write_artifact(f"{design.label}.eigvecs",
                           fit.eigvecs[:, :fit.n_selected])
            write_artifact(f"{design.label}.eigvals",
                           fit.eigvals_function[:, None])
    elif args.method == "face":
        spec = BasisSpec.regular(y.shape[0], num_interior_knots=args.knots)
        factor = factorize_smoother(spec)
        if has_missing:
            masked = MaskedData.from_matrix(y)
            fit, trace = face_fit_incomplete(masked, factor, alpha=args.alpha)
            report.update(_face_report(fit))
            report["missing"] = {
                "n_missing": masked.n_missing,
                "iterations": trace.iterations,
                "converged": trace.converged,
            }
        else:
            fit = face_fit(y, factor, alpha=args.alpha, center=center)
            report.update(_face_report(fit))
        write_artifact("eigvecs", fit.eigvecs[:, :fit.n_selected])
        write_artifact("eigvals", fit.eigvals_function[:, None])
        if args.scores != "none":
            report["scores"] = _scores_block(fit, args.scores)
            write_artifact("scores",
                           np.asarray(report["scores"]["values"], dtype=float))
    else:
        if has_missing:
            raise InputError(
                f"method {args.method!r} cannot handle missing values; "
                "use --method face")
        if args.scores != "none":
            raise InputError("--scores requires --method face")
        yc = y - y.mean(axis=1, keepdims=True) if center else y
        fitter = {"none": raw_svd_fit,
                  "ssvd": lambda m: ssvd_fit(m, sm=UnivariateSmoother()),
                  "ssmooth": lambda m: s_smooth_fit(m, sm=UnivariateSmoother()),
                  }[args.method]
        alt = fitter(yc)
        report.update({
            "n_grid": y.shape[0], "n_subjects": y.shape[1],
            "method": alt.method, "rank": alt.numerical_rank(),
            "eigenvalues_function": alt.eigvals_function.tolist(),
        })
        write_artifact("eigvecs", alt.eigvecs)
        write_artifact("eigvals", alt.eigvals_function[:, None])

    if artifact_paths:
        report["outputs"] = artifact_paths
    text = json.dumps(report, indent=2)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def _cmd_simulate(args) -> int:
    config = CampaignConfig.from_json(args.config)
    if args.seed is not None:
        config.seed = args.seed

    def progress(done, total):
        print(f"replicate {done}/{total}", file=sys.stderr)

    result = run_campaign(config, threads=args.threads,
                          progress=progress if args.verbose else None)
    if args.out:
        paths = result.write_csv(args.out)
        print(f"wrote {paths['results']}, {paths['timings']}, "
              f"{paths['summary']}")
    print(result.summary_text())
    return 0


def _cmd_bench(args) -> int:
    from .bench import run_bench

    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    if not sizes:
        raise InputError("--sizes must list at least one grid size")
    rows = run_bench(sizes, n_subjects=args.subjects, knots=args.knots,
                     seed=args.seed, naive_max=args.naive_max,
                     repeats=args.repeats, out_dir=args.out)
    for r in rows:
        print(f"J={r['J']:>6}  I={r['I']:>5}  {r['method']:<6} "
              f"{r['seconds']:.4f}s")
    return 0


def _default_threads() -> int:
    env = os.environ.get("FACE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="facecov",
        description="Fast covariance smoothing for densely observed curves")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit a covariance to a data matrix")
    p_fit.add_argument("input", help="J x I matrix, one curve per column")
    p_fit.add_argument("--format", choices=("auto", "csv", "packed"),
                       default="auto")
    p_fit.add_argument("--header", action="store_true",
                       help="skip a header row when reading csv")
    p_fit.add_argument("--method", choices=_METHODS, default="face")
    p_fit.add_argument("--knots", type=int, default=100,
                       help="interior knots for the spline basis")
    p_fit.add_argument("--alpha", type=float, default=1.0,
                       help="GCV inflation constant (>= 1)")
    p_fit.add_argument("--center", choices=("auto", "off"), default="auto",
                       help="subtract the cross-subject mean curve "
                            "(per block with --pairs)")
    p_fit.add_argument("--pairs", action="store_true",
                       help="columns are paired blocks; fit both "
                            "between- and within-pair covariances")
    p_fit.add_argument("--scores", choices=("none", "numeric", "blup"),
                       default="none")
    p_fit.add_argument("--output", "-o", help="write the JSON report here")
    p_fit.set_defaults(func=_cmd_fit)

    p_sim = sub.add_parser("simulate", help="run a simulation campaign")
    p_sim.add_argument("--config", required=True, help="campaign JSON file")
    p_sim.add_argument("--out", help="directory for results/timings/summary")
    p_sim.add_argument("--seed", type=int, default=None,
                       help="override the seed in the config")
    p_sim.add_argument("--threads", type=int, default=_default_threads(),
                       help="worker processes (default: FACE_THREADS or 1)")
    p_sim.add_argument("--verbose", action="store_true")
    p_sim.set_defaults(func=_cmd_simulate)

    p_bench = sub.add_parser("bench", help="timing benchmark vs. the "
                                           "explicit-matrix baseline")
    p_bench.add_argument("--sizes", default="500,1000,2000,3000",
                         help="comma-separated grid sizes")
    p_bench.add_argument("--subjects", type=int, default=100)
    p_bench.add_argument("--knots", type=int, default=100)
    p_bench.add_argument("--naive-max", type=int, default=3000,
                         help="largest J for the explicit baseline")
    p_bench.add_argument("--repeats", type=int, default=3)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--out", help="directory for bench.csv / bench.svg")
    p_bench.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FacecovError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
