"""Baseline covariance estimators built on per-curve penalized-spline
smoothing: smoothed-SVD (smooth the singular vectors) and smooth-then-SVD
(smooth every curve, then decompose).

The univariate smoother emulates a smoothing spline with an equally spaced
penalized B-spline basis — min(J/4, 200) interior knots — and per-curve GCV.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import (BasisSpec, SmootherFactor, bspline_design_points,
                    difference_penalty, factorize_smoother)
from .errors import InputError
from .face import DEFAULT_SEARCH, SearchSpec, select_component_count, select_lambda
from .linalg import numerical_rank, thin_svd

MAX_UNIVARIATE_KNOTS = 200


def default_knot_count(n_points: int, cap: int = MAX_UNIVARIATE_KNOTS) -> int:
    return max(1, min(n_points // 4, cap))


@dataclass(eq=False)
class UnivariateSmoother:
    """Penalized-spline smoother for single curves on the regular grid.

    The orthogonalized factorization is cached per grid size, so smoothing
    many curves of equal length costs O(J·c) each.
    """

    num_interior_knots: int | None = None
    spline_order: int = 4
    penalty_diff_order: int = 2
    gcv_alpha: float = 1.0
    search: SearchSpec = DEFAULT_SEARCH
    _factors: dict = field(default_factory=dict, repr=False)

    def knots_for(self, n_points: int) -> int:
        if self.num_interior_knots is not None:
            return self.num_interior_knots
        return default_knot_count(n_points)

    def factor(self, n_grid: int) -> SmootherFactor:
        if n_grid not in self._factors:
            spec = BasisSpec.regular(
                n_grid,
                num_interior_knots=self.knots_for(n_grid),
                spline_order=self.spline_order,
                penalty_diff_order=self.penalty_diff_order,
            )
            self._factors[n_grid] = factorize_smoother(spec)
        return self._factors[n_grid]


def smooth_curve(y, sm: UnivariateSmoother | None = None) -> np.ndarray:
    """Smooth one curve with a per-curve GCV-selected penalty."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise InputError("smooth_curve expects a 1-d curve")
    if not np.all(np.isfinite(y)):
        raise InputError("curve contains non-finite entries")
    sm = sm or UnivariateSmoother()
    factor = sm.factor(y.size)
    ytilde = factor.a_s.T @ y
    lam = select_lambda(ytilde[:, None], float(y @ y), factor.s, y.size,
                        sm.gcv_alpha, sm.search)
    return factor.a_s @ (factor.shrink(lam) * ytilde)


def smooth_scatter(x, y, x_new, *, num_interior_knots: int | None = None,
                   spline_order: int = 4, penalty_diff_order: int = 2,
                   alpha: float = 1.0, log10_min: float = -6.0,
                   log10_max: float = 8.0, n_lambda: int = 21) -> np.ndarray:
    """GCV-smoothed penalized-spline fit of scattered points, evaluated at
    ``x_new``.

    Used to pre-fill missing stretches of individual curves, where the
    observation points are an irregular subset of [0, 1].  Solves the
    penalized normal equations directly per candidate λ (the basis is kept
    small, so this stays cheap) and falls back to a tiny ridge when a long
    gap leaves some basis functions unsupported.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x_new = np.asarray(x_new, dtype=float)
    if x.ndim != 1 or x.shape != y.shape:
        raise InputError("x and y must be 1-d arrays of equal length")
    n = x.size
    if num_interior_knots is None:
        num_interior_knots = max(1, min(n // 4, 35))
    num_interior_knots = min(num_interior_knots, n - spline_order - 1)
    if num_interior_knots < 0:
        raise InputError(f"too few points ({n}) for order-{spline_order} "
                         "spline smoothing")

    b = bspline_design_points(x, num_interior_knots, spline_order)
    penalty = difference_penalty(b.shape[1], penalty_diff_order)
    btb = b.T @ b
    bty = b.T @ y
    jitter = 1e-10 * max(1.0, float(np.trace(btb)))
    best: tuple[float, np.ndarray] | None = None
    for lam in np.logspace(log10_min, log10_max, n_lambda):
        a = btb + lam * penalty
        try:
            theta = np.linalg.solve(a, bty)
            edf = float(np.trace(np.linalg.solve(a, btb)))
        except np.linalg.LinAlgError:
            a = a + jitter * np.eye(a.shape[0])
            theta = np.linalg.solve(a, bty)
            edf = float(np.trace(np.linalg.solve(a, btb)))
        resid = y - b @ theta
        denom = 1.0 - alpha * edf / n
        if denom <= 0.0:
            continue
        score = float(resid @ resid) / denom ** 2
        if best is None or score < best[0]:
            best = (score, theta)
    if best is None:
        raise InputError("GCV denominator degenerate for every candidate "
                         "lambda; too few points for this basis")
    b_new = bspline_design_points(x_new, num_interior_knots, spline_order)
    return b_new @ best[1]


@dataclass(eq=False)
class AltFit:
    """Low-rank covariance estimate from a baseline method."""

    method: str                  # "none", "ssvd" or "ssmooth"
    eigvecs: np.ndarray          # (J, r)
    eigvals_matrix: np.ndarray   # (r,)
    eigvals_function: np.ndarray

    @property
    def n_grid(self) -> int:
        return self.eigvecs.shape[0]

    def numerical_rank(self, rel_tol: float = 1e-10) -> int:
        return numerical_rank(self.eigvals_matrix, rel_tol)


def _check_complete(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim != 2:
        raise InputError("data must be a J x I matrix")
    if not np.all(np.isfinite(y)):
        raise InputError("data contains non-finite entries; these estimators "
                         "require complete curves")
    return y


def raw_svd_fit(y, keep: int | None = None) -> AltFit:
    """Unsmoothed baseline: eigenpairs straight from the thin SVD."""
    y = _check_complete(y)
    n_grid, n_subj = y.shape
    dec = thin_svd(y)
    eigvals = dec.singular_values ** 2 / n_subj
    if keep is None:
        keep = select_component_count(eigvals)
    if not 1 <= keep <= min(n_grid, n_subj):
        raise InputError(f"keep must be in [1, {min(n_grid, n_subj)}]")
    return AltFit(method="none",
                  eigvecs=dec.left[:, :keep],
                  eigvals_matrix=eigvals[:keep],
                  eigvals_function=eigvals[:keep] / n_grid)


def ssvd_fit(y, keep: int | None = None,
             sm: UnivariateSmoother | None = None) -> AltFit:
    """Smoothed-SVD estimator: smooth the retained singular vectors.

    Eigenvalues come from the raw singular values (the smoothing step leaves
    them untouched); each smoothed vector is rescaled to unit norm but the
    set is deliberately not re-orthogonalized.
    """
    base = raw_svd_fit(y, keep)
    sm = sm or UnivariateSmoother()
    vecs = np.empty_like(base.eigvecs)
    for k in range(vecs.shape[1]):
        smoothed = smooth_curve(base.eigvecs[:, k], sm)
        norm = np.linalg.norm(smoothed)
        vecs[:, k] = smoothed / norm if norm > 0.0 else smoothed
    return AltFit(method="ssvd", eigvecs=vecs,
                  eigvals_matrix=base.eigvals_matrix,
                  eigvals_function=base.eigvals_function)


def s_smooth_fit(y, sm: UnivariateSmoother | None = None) -> AltFit:
    """Smooth every curve, then decompose the smoothed data matrix.

    The returned eigenvectors are exactly orthonormal (they are singular
    vectors of the smoothed matrix).
    """
    y = _check_complete(y)
    n_grid, n_subj = y.shape
    sm = sm or UnivariateSmoother()
    smoothed = np.empty_like(y)
    for i in range(n_subj):
        smoothed[:, i] = smooth_curve(y[:, i], sm)
    dec = thin_svd(smoothed)
    eigvals = dec.singular_values ** 2 / n_subj
    return AltFit(method="ssmooth", eigvecs=dec.left,
                  eigvals_matrix=eigvals,
                  eigvals_function=eigvals / n_grid)
