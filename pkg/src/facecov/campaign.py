"""Simulation campaigns: run replicated fits across methods and summarize.

A campaign is described by a small JSON config; results are one row per
(replicate, method, metric), timings are kept separate so that the metric
files are byte-stable for a fixed config, and the summary mirrors the usual
reporting layout (MISE and AMSE scaled by 100).
"""
from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .alternatives import UnivariateSmoother, raw_svd_fit, s_smooth_fit, ssvd_fit
from .basis import BasisSpec, factorize_smoother
from .errors import ConfigError
from .face import face_fit
from .incomplete import MaskedData, face_fit_incomplete
from .simulation import (amse_eigenvalue, case_model, generate_sample,
                         mcar_mask, mise_covariance, mise_eigenfunction)

VALID_METHODS = ("none", "ssvd", "ssmooth", "face")
# Offset separating the mask RNG stream from the data stream per replicate.
MASK_SEED_OFFSET = 2 ** 31
N_EIG_REPORT = 3

SUMMARY_COLUMNS = (
    "cov_mise_x100",
    "eigfn1_mise_x100", "eigfn2_mise_x100", "eigfn3_mise_x100",
    "eigval1_amse_x100", "eigval2_amse_x100", "eigval3_amse_x100",
)


@dataclass
class CampaignConfig:
    """Settings of one simulation campaign (JSON-serializable)."""

    case: int
    J: int
    I: int
    replicates: int
    methods: list = field(default_factory=lambda: list(VALID_METHODS))
    knots: int = 100
    alpha: float = 1.0
    missing: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if self.case not in (1, 2, 3, 4, 5):
            raise ConfigError(f"case must be 1..5, got {self.case!r}")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        bad = [m for m in self.methods if m not in VALID_METHODS]
        if bad:
            raise ConfigError(
                f"unknown methods {bad}; valid methods are {list(VALID_METHODS)}"
            )
        if self.J < 2 or self.I < 2:
            raise ConfigError("need J >= 2 grid points and I >= 2 subjects")

    @classmethod
    def from_json(cls, path) -> "CampaignConfig":
        with open(path) as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        extra = set(raw) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}; "
                              f"expected a subset of {sorted(known)}")
        try:
            return cls(**raw)
        except TypeError:
            required = ("case", "J", "I", "replicates")
            absent = [k for k in required if k not in raw]
            raise ConfigError(
                f"{path}: missing required config keys {absent}") from None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


@dataclass
class SimResult:
    """Per-replicate metric and timing rows plus summary helpers."""

    config: CampaignConfig
    rows: list          # dicts: replicate, method, metric, value
    timing_rows: list   # dicts: replicate, method, seconds

    def values(self, method: str, metric: str) -> np.ndarray:
        out = [r["value"] for r in self.rows
               if r["method"] == method and r["metric"] == metric]
        return np.asarray(out, dtype=float)

    def mean(self, method: str, metric: str) -> float:
        vals = self.values(method, metric)
        return float(np.mean(vals)) if vals.size else float("nan")

    def summary(self) -> list:
        """One dict per method, metrics scaled by 100 (table convention)."""
        out = []
        for method in self.config.methods:
            row: dict = {"method": method}
            active = any(r["method"] == method for r in self.rows)
            for col in SUMMARY_COLUMNS:
                metric = col.replace("_amse_x100", "_sqrel")
                metric = metric.replace("_mise_x100", "_mise")
                value = self.mean(method, metric)
                row[col] = 100.0 * value if active else float("nan")
            out.append(row)
        return out

    def summary_text(self) -> str:
        lines = ["method".ljust(10) + "".join(c.rjust(20) for c in SUMMARY_COLUMNS)]
        for row in self.summary():
            cells = []
            for col in SUMMARY_COLUMNS:
                val = row[col]
                cells.append(("n/a" if np.isnan(val) else f"{val:.4f}").rjust(20))
            lines.append(row["method"].ljust(10) + "".join(cells))
        return "\n".join(lines)

    def write_csv(self, out_dir) -> dict:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = {
            "results": out_dir / "results.csv",
            "timings": out_dir / "timings.csv",
            "summary": out_dir / "summary.csv",
            "config": out_dir / "config.json",
        }
        with open(paths["results"], "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["replicate", "method", "metric", "value"])
            for r in self.rows:
                writer.writerow([r["replicate"], r["method"], r["metric"],
                                 repr(r["value"])])
        with open(paths["timings"], "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["replicate", "method", "seconds"])
            for r in self.timing_rows:
                writer.writerow([r["replicate"], r["method"],
                                 f"{r['seconds']:.6f}"])
        with open(paths["summary"], "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", *SUMMARY_COLUMNS])
            for row in self.summary():
                writer.writerow([row["method"]] +
                                [("n/a" if np.isnan(row[c]) else repr(row[c]))
                                 for c in SUMMARY_COLUMNS])
        paths["config"].write_text(self.config.to_json())
        return paths


def _metric_rows(rep: int, method: str, fit, model, grid,
                 true_eigvals: np.ndarray, extra: dict | None = None) -> list:
    rows = []

    def add(metric: str, value: float) -> None:
        rows.append({"replicate": rep, "method": method, "metric": metric,
                     "value": float(value)})

    add("cov_mise", mise_covariance(fit.eigvecs, fit.eigvals_function,
                                    model, grid))
    for k in range(1, N_EIG_REPORT + 1):
        if fit.eigvecs.shape[1] >= k:
            add(f"eigfn{k}_mise",
                mise_eigenfunction(fit.eigvecs[:, k - 1], model, k, grid))
            add(f"eigval{k}_sqrel",
                amse_eigenvalue(fit.eigvals_function[k - 1],
                                true_eigvals[k - 1]))
    add("rank", fit.numerical_rank())
    for key, value in (extra or {}).items():
        add(key, value)
    return rows


def _run_replicate(config: CampaignConfig, rep: int) -> tuple[list, list]:
    """All methods on one replicate; returns (metric rows, timing rows)."""
    model = case_model(config.case)
    grid = np.arange(1, config.J + 1, dtype=float) / config.J
    true_eigvals = model.eigenvalues(N_EIG_REPORT, config.J)
    y = generate_sample(model, config.J, config.I, config.seed + rep)

    spec = BasisSpec.regular(config.J, num_interior_knots=config.knots)
    sm = UnivariateSmoother()
    rows: list = []
    timing_rows: list = []

    if config.missing:
        mask = mcar_mask(config.J, config.I, config.seed + rep + MASK_SEED_OFFSET)
        if "face" in config.methods:
            masked = MaskedData(y=y, mask=mask)
            t0 = time.perf_counter()
            factor = factorize_smoother(spec)
            fit, trace = face_fit_incomplete(masked, factor, alpha=config.alpha)
            elapsed = time.perf_counter() - t0
            rows += _metric_rows(rep, "face", fit, model, grid, true_eigvals,
                                 extra={"iterations": trace.iterations,
                                        "lambda": fit.lambda_,
                                        "sigma2": fit.sigma2})
            timing_rows.append({"replicate": rep, "method": "face",
                                "seconds": elapsed})
        return rows, timing_rows  # other methods need complete curves

    yc = y - y.mean(axis=1, keepdims=True)
    for method in config.methods:
        t0 = time.perf_counter()
        extra: dict = {}
        if method == "none":
            fit = raw_svd_fit(yc)
        elif method == "ssvd":
            fit = ssvd_fit(yc, sm=sm)
        elif method == "ssmooth":
            fit = s_smooth_fit(yc, sm=sm)
        else:
            factor = factorize_smoother(spec)
            fit = face_fit(yc, factor, alpha=config.alpha, center=False)
            extra = {"lambda": fit.lambda_, "sigma2": fit.sigma2,
                     "n_selected": fit.n_selected}
        elapsed = time.perf_counter() - t0
        rows += _metric_rows(rep, method, fit, model, grid, true_eigvals,
                             extra=extra)
        timing_rows.append({"replicate": rep, "method": method,
                            "seconds": elapsed})
    return rows, timing_rows


def run_campaign(config: CampaignConfig, threads: int = 1,
                 progress=None) -> SimResult:
    """Run every replicate (optionally in parallel worker processes).

    Replicate r draws its data from seed ``config.seed + r``, so results are
    identical whether or not workers are used.
    """
    rows: list = []
    timing_rows: list = []
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_run_replicate, config, rep)
                       for rep in range(config.replicates)]
            for rep, fut in enumerate(futures):
                r, t = fut.result()
                rows += r
                timing_rows += t
                if progress:
                    progress(rep + 1, config.replicates)
    else:
        for rep in range(config.replicates):
            r, t = _run_replicate(config, rep)
            rows += r
            timing_rows += t
            if progress:
                progress(rep + 1, config.replicates)
    rows.sort(key=lambda r: (r["replicate"], r["method"], r["metric"]))
    timing_rows.sort(key=lambda r: (r["replicate"], r["method"]))
    return SimResult(config=config, rows=rows, timing_rows=timing_rows)
