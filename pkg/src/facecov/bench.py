"""Benchmarks: the fast fit against a literal sandwich-smoother baseline.

The baseline builds the J x J smoother matrix explicitly, smooths the
sample covariance from both sides, and eigendecomposes the result.  It is
the definitional computation the fast path must reproduce, and it is kept
deliberately naive so speed comparisons are against the textbook approach.
"""
from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .basis import BasisSpec, bspline_design, difference_penalty, factorize_smoother
from .errors import InputError
from .face import DEFAULT_SEARCH, face_fit
from .linalg import sym_eig
from .simulation import case_model, generate_sample

# Hard cap for the explicit-matrix baseline; beyond this the J x J
# intermediates stop fitting comfortably in memory.
NAIVE_MAX_GRID = 5000


def time_call(fn, *args, repeats: int = 3, **kwargs):
    """Run ``fn`` ``repeats`` times; return (last result, median seconds)."""
    times = []
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn(*args, **kwargs)
        times.append(time.perf_counter() - t0)
    return result, float(np.median(times))


@dataclass(eq=False)
class NaiveFit:
    """Output of the explicit sandwich baseline."""

    lambda_: float
    smoother: np.ndarray      # J x J
    covariance: np.ndarray    # J x J smoothed covariance
    eigvecs: np.ndarray
    eigvals_matrix: np.ndarray
    eigvals_function: np.ndarray


def naive_smoother_matrix(spec: BasisSpec, lam: float) -> np.ndarray:
    """Explicit J x J penalized-spline hat matrix B (B'B + lam P)^{-1} B'."""
    b = bspline_design(spec)
    p = difference_penalty(spec.n_basis, spec.penalty_diff_order)
    core = np.linalg.solve(b.T @ b + lam * p, b.T)
    return b @ core


def naive_sandwich_fit(y: np.ndarray, spec: BasisSpec, *, alpha: float = 1.0,
                       lam: float | None = None,
                       center: bool = True) -> NaiveFit:
    """Definitional fit: explicit smoother, explicit sandwich, dense eigh.

    When ``lam`` is omitted it is chosen by evaluating the pooled GCV score
    in its literal form over the standard grid of candidates.
    """
    y = np.asarray(y, dtype=float)
    n_grid, n_subjects = y.shape
    if n_grid > NAIVE_MAX_GRID:
        raise InputError(
            f"naive baseline refuses grids larger than {NAIVE_MAX_GRID} "
            f"points (got {n_grid}); use the fast fit instead")
    if center:
        y = y - y.mean(axis=1, keepdims=True)

    if lam is None:
        grid = np.logspace(DEFAULT_SEARCH.log10_min, DEFAULT_SEARCH.log10_max,
                           DEFAULT_SEARCH.grid_points)
        best, best_score = None, np.inf
        for cand in grid:
            smoother = naive_smoother_matrix(spec, cand)
            resid = y - smoother @ y
            base = 1.0 - alpha * np.trace(smoother) / n_grid
            if base <= 0.0:
                continue
            score = float(np.sum(resid ** 2)) / base ** 2
            if score < best_score:
                best, best_score = float(cand), score
        if best is None:
            raise InputError("pooled GCV was degenerate at every candidate")
        lam = best

    smoother = naive_smoother_matrix(spec, lam)
    sample_cov = (y @ y.T) / n_subjects
    smoothed = smoother @ sample_cov @ smoother.T
    smoothed = 0.5 * (smoothed + smoothed.T)
    eig = sym_eig(smoothed)
    vals = np.clip(eig.values, 0.0, None)
    return NaiveFit(lambda_=float(lam), smoother=smoother,
                    covariance=smoothed, eigvecs=eig.vectors,
                    eigvals_matrix=vals, eigvals_function=vals / n_grid)


def run_bench(sizes, n_subjects: int = 100, *, knots: int = 100,
              alpha: float = 1.0, case: int = 3, seed: int = 0,
              naive_max: int = 3000, repeats: int = 3,
              out_dir=None) -> list:
    """Time the fast fit (and the baseline where feasible) per grid size.

    Returns rows ``{"J", "I", "method", "seconds"}``; optionally writes
    ``bench.csv`` and a log-log timing plot ``bench.svg`` under ``out_dir``.
    """
    model = case_model(case)
    rows = []
    for n_grid in sizes:
        y = generate_sample(model, int(n_grid), n_subjects, seed)
        spec = BasisSpec.regular(int(n_grid), num_interior_knots=knots)

        def fast():
            factor = factorize_smoother(spec)
            return face_fit(y, factor, alpha=alpha)

        _, seconds = time_call(fast, repeats=repeats)
        rows.append({"J": int(n_grid), "I": n_subjects, "method": "face",
                     "seconds": seconds})
        if n_grid <= min(naive_max, NAIVE_MAX_GRID):
            _, seconds = time_call(naive_sandwich_fit, y, spec, alpha=alpha,
                                   repeats=repeats)
            rows.append({"J": int(n_grid), "I": n_subjects,
                         "method": "naive", "seconds": seconds})
    if out_dir is not None:
        write_bench_outputs(rows, out_dir)
    return rows


def write_bench_outputs(rows, out_dir) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {"csv": out_dir / "bench.csv", "plot": out_dir / "bench.svg"}
    with open(paths["csv"], "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["J", "I", "method", "seconds"])
        for r in rows:
            writer.writerow([r["J"], r["I"], r["method"], f"{r['seconds']:.6f}"])
    _plot_bench(rows, paths["plot"])
    return paths


def _plot_bench(rows, path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for method, style in (("face", "o-"), ("naive", "s--")):
        pts = sorted((r["J"], r["seconds"]) for r in rows
                     if r["method"] == method)
        if pts:
            ax.loglog([p[0] for p in pts], [p[1] for p in pts], style,
                      label=method)
    ax.set_xlabel("grid points J")
    ax.set_ylabel("seconds per fit")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
