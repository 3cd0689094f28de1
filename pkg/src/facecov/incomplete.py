"""Iterative covariance estimation when stretches of curves are missing.

Missing values are pre-filled curve by curve (penalized-spline smooth within
the observed range, mean of observed values outside it), then the complete-
data fit and a score-based imputation alternate until the imputed entries
stabilize.  Observed entries are never modified.
"""
from __future__ import annotations

import warnings as _warnings
from dataclasses import dataclass, field

import numpy as np

from .alternatives import UnivariateSmoother, smooth_scatter
from .basis import SmootherFactor
from .errors import FacecovWarning, InputError
from .face import DEFAULT_SEARCH, FaceFit, Scores, SearchSpec, face_fit

DEFAULT_MAX_ITER = 50
DEFAULT_TOL = 1e-4
MIN_OBSERVED = 10


@dataclass(eq=False)
class MaskedData:
    """Curve matrix plus observation mask (True = observed).

    Values at unobserved positions are ignored (NaN is fine).
    """

    y: np.ndarray
    mask: np.ndarray

    def __post_init__(self) -> None:
        self.y = np.asarray(self.y, dtype=float)
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.y.ndim != 2 or self.mask.shape != self.y.shape:
            raise InputError("y and mask must be 2-d arrays of equal shape")
        if not np.all(np.isfinite(self.y[self.mask])):
            raise InputError("observed entries contain non-finite values")
        obs_per_col = self.mask.sum(axis=0)
        short = np.nonzero(obs_per_col < MIN_OBSERVED)[0]
        if short.size:
            raise InputError(
                f"column {short[0]} has only {int(obs_per_col[short[0]])} "
                f"observed points; need at least {MIN_OBSERVED}"
            )
        if not np.all(self.mask.any(axis=1)):
            bad = int(np.argmin(self.mask.any(axis=1)))
            raise InputError(f"grid point {bad} is unobserved for every subject")

    @classmethod
    def from_matrix(cls, y) -> "MaskedData":
        """Build from a matrix whose missing entries are NaN."""
        y = np.asarray(y, dtype=float)
        return cls(y=y, mask=~np.isnan(y))

    @property
    def n_grid(self) -> int:
        return self.y.shape[0]

    @property
    def n_subjects(self) -> int:
        return self.y.shape[1]

    @property
    def n_missing(self) -> int:
        return int((~self.mask).sum())


@dataclass
class ImputeTrace:
    """Diagnostics of the impute/refit iteration."""

    iterations: int
    rel_changes: list
    converged: bool
    completed: np.ndarray = field(default=None, repr=False)  # final matrix


def _check_min_observed(d: MaskedData, spline_order: int) -> None:
    need = max(MIN_OBSERVED, 2 * spline_order)
    obs_per_col = d.mask.sum(axis=0)
    short = np.nonzero(obs_per_col < need)[0]
    if short.size:
        raise InputError(
            f"column {short[0]} has only {int(obs_per_col[short[0]])} "
            f"observed points; need at least {need} for order-"
            f"{spline_order} smoothing"
        )


def initialize_missing(d: MaskedData,
                       sm: UnivariateSmoother | None = None) -> np.ndarray:
    """Complete the matrix once, curve by curve.

    Inside a curve's observed range, missing values take the value of a
    GCV-smoothed spline through the observed points; outside that range they
    take the mean of the curve's observed values.
    """
    sm = sm or UnivariateSmoother()
    _check_min_observed(d, sm.spline_order)
    grid = np.arange(1, d.n_grid + 1, dtype=float) / d.n_grid
    out = d.y.copy()
    for i in range(d.n_subjects):
        obs = d.mask[:, i]
        if obs.all():
            continue
        idx = np.nonzero(obs)[0]
        lo, hi = idx[0], idx[-1]
        mis = np.nonzero(~obs)[0]
        inside = mis[(mis > lo) & (mis < hi)]
        outside = mis[(mis < lo) | (mis > hi)]
        if inside.size:
            out[inside, i] = smooth_scatter(
                grid[idx], d.y[idx, i], grid[inside],
                num_interior_knots=sm.num_interior_knots,
                spline_order=sm.spline_order,
                penalty_diff_order=sm.penalty_diff_order,
                alpha=sm.gcv_alpha,
            )
        if outside.size:
            out[outside, i] = d.y[idx, i].mean()
    return out


def impute_step(fit: FaceFit, d: MaskedData) -> tuple[list, Scores]:
    """Score each curve from its observed values and predict the missing ones.

    Per curve, the scores minimize
    ‖y_obs − √J·Ψ_obs·ξ‖²/(2σ̂²) + ξᵀΣ̂_N⁻¹ξ/2 and the missing stretch is
    predicted as √J·Ψ_mis·ξ̂ (plus the stored mean); with nothing missing
    this reproduces the BLUP scores exactly.
    """
    if fit.n_grid != d.n_grid:
        raise InputError("fit and data have different grid sizes")
    if fit.n_subjects != d.n_subjects:
        raise InputError("fit and data have different subject counts")
    n = fit.n_selected
    psi = fit.eigvecs[:, :n]
    lam_m = fit.eigvals_matrix[:n]
    pos = lam_m > 0.0
    sigma2 = fit.sigma2
    mean = fit.mean if fit.mean is not None else np.zeros(fit.n_grid)
    sqrt_j = np.sqrt(fit.n_grid)

    xi = np.zeros((d.n_subjects, n))
    filled: list = []
    for i in range(d.n_subjects):
        obs = d.mask[:, i]
        y_obs = d.y[obs, i] - mean[obs]
        psi_obs = psi[obs][:, pos]
        a = fit.n_grid * (psi_obs.T @ psi_obs)
        a[np.diag_indices_from(a)] += sigma2 / lam_m[pos]
        rhs = sqrt_j * (psi_obs.T @ y_obs)
        try:
            sol = np.linalg.solve(a, rhs)
            if not np.all(np.isfinite(sol)):
                raise np.linalg.LinAlgError
        except np.linalg.LinAlgError:
            _warnings.warn(
                f"score system for curve {i} is singular; adding 1e-10 ridge",
                FacecovWarning,
            )
            a[np.diag_indices_from(a)] += 1e-10
            sol = np.linalg.solve(a, rhs)
        xi[i, pos] = sol
        mis = ~obs
        filled.append(mean[mis] + sqrt_j * (psi[mis][:, pos] @ sol))
    return filled, Scores(xi=xi, method="blup")


def face_fit_incomplete(d: MaskedData, factor: SmootherFactor,
                        alpha: float = 1.0,
                        search: SearchSpec = DEFAULT_SEARCH,
                        max_iter: int = DEFAULT_MAX_ITER,
                        tol: float = DEFAULT_TOL,
                        init_smoother: UnivariateSmoother | None = None,
                        ) -> tuple[FaceFit, ImputeTrace]:
    """Alternate complete-data fits with imputation until stable.

    The mean curve, smoothing parameter, and component count are re-selected
    at every iteration.  Convergence is declared when the largest absolute
    change over imputed entries, relative to their largest magnitude, drops
    below ``tol``.  Returns the final fit plus a trace carrying the completed
    matrix (observed entries bit-identical to the input).
    """
    if d.n_grid != factor.n_grid:
        raise InputError("data and smoother factor have different grid sizes")
    _check_min_observed(d, factor.basis.spline_order)

    if d.n_missing == 0:
        fit = face_fit(d.y, factor, alpha=alpha, search=search)
        return fit, ImputeTrace(iterations=1, rel_changes=[0.0],
                                converged=True, completed=d.y.copy())

    missing = ~d.mask
    current = initialize_missing(d, init_smoother)
    rel_changes: list[float] = []
    converged = False
    fit: FaceFit | None = None
    for _ in range(max_iter):
        fit = face_fit(current, factor, alpha=alpha, search=search)
        filled, _ = impute_step(fit, d)
        previous = current[missing]
        for i, values in enumerate(filled):
            current[missing[:, i], i] = values
        scale = max(float(np.abs(previous).max()), 1e-12)
        rel = float(np.abs(current[missing] - previous).max()) / scale
        rel_changes.append(rel)
        if rel < tol:
            converged = True
            break
    return fit, ImputeTrace(iterations=len(rel_changes),
                            rel_changes=rel_changes, converged=converged,
                            completed=current)
