"""Fast covariance estimation for densely sampled functional data.

Curves are projected through the orthonormal smoother basis, the smoothing
parameter is selected by pooled generalized cross-validation, and the
smoothed covariance is eigendecomposed in the c-dimensional coefficient
space.  The implied J×J covariance estimate has rank at most min(c, I) and
is never materialized (except on explicit request for small J).
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .basis import SmootherFactor
from .errors import (ConfigError, DegenerateSmootherError, InputError)
from .linalg import numerical_rank, sym_eig

# Largest J for which the dense covariance estimate may be requested.
EXPLICIT_THRESHOLD = 2000

_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SearchSpec:
    """Smoothing-parameter search: 21-point grid scan on log10(λ) followed by
    golden-section refinement around the best grid cell.

    ``fixed`` short-circuits the search and uses the given λ as-is.
    """

    log10_min: float = -6.0
    log10_max: float = 8.0
    grid_points: int = 21
    tol_log10: float = 1e-4
    max_iter: int = 80
    fixed: float | None = None

    def __post_init__(self) -> None:
        if self.fixed is not None and self.fixed < 0.0:
            raise ConfigError("fixed lambda must be >= 0")
        if self.grid_points < 2:
            raise ConfigError("grid_points must be >= 2")
        if not self.log10_min < self.log10_max:
            raise ConfigError("log10_min must be below log10_max")


DEFAULT_SEARCH = SearchSpec()


@dataclass
class Scores:
    """Estimated principal component scores, one row per subject."""

    xi: np.ndarray  # (I, N)
    method: str     # "numeric_integration" or "blup"


@dataclass(eq=False)
class FaceFit:
    """Fitted low-rank covariance model.

    ``eigvecs`` (J×r) holds orthonormal eigenvectors of the implied
    covariance matrix; ``eigvals_matrix`` its eigenvalues and
    ``eigvals_function`` the same values divided by J (the quadrature weight),
    i.e. on the scale of the underlying covariance function.
    """

    lambda_: float
    alpha: float
    eigvecs: np.ndarray
    eigvals_matrix: np.ndarray
    eigvals_function: np.ndarray
    sigma2: float
    ytilde: np.ndarray          # (c, I) projected, centered curves
    n_selected: int             # components reaching 95% of total variance
    inner_vectors: np.ndarray   # (c, r) eigenvectors in coefficient space
    factor: SmootherFactor
    mean: np.ndarray | None     # per-grid-point mean removed before fitting
    divisor: float              # I for plain fits, 1 for structured fits
    n_subjects: int
    warnings: list
    timings: dict

    @property
    def n_grid(self) -> int:
        return self.eigvecs.shape[0]

    def variance_explained(self) -> np.ndarray:
        """Cumulative fraction of total estimated variance per component."""
        total = float(self.eigvals_matrix.sum())
        return np.cumsum(self.eigvals_matrix) / total

    def numerical_rank(self, rel_tol: float = 1e-10) -> int:
        return numerical_rank(self.eigvals_matrix, rel_tol)

    def covariance_matrix(self) -> np.ndarray:
        """Dense J×J covariance estimate, for debugging at small J only."""
        if self.n_grid > EXPLICIT_THRESHOLD:
            raise ConfigError(
                f"refusing to materialize a {self.n_grid}x{self.n_grid} "
                f"covariance matrix (limit {EXPLICIT_THRESHOLD}); use the "
                "low-rank form eigvecs/eigvals_matrix instead"
            )
        return (self.eigvecs * self.eigvals_matrix) @ self.eigvecs.T


def project_data(y, factor: SmootherFactor, center: bool = False) -> np.ndarray:
    """Project curves onto the orthonormal smoother basis: Ỹ = A_Sᵀ Y."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 2:
        raise InputError("data must be a J x I matrix")
    if y.shape[0] != factor.n_grid:
        raise InputError(
            f"data has {y.shape[0]} rows but the smoother grid has "
            f"{factor.n_grid} points"
        )
    if not np.all(np.isfinite(y)):
        raise InputError("data contains non-finite entries")
    if center:
        y = y - y.mean(axis=1, keepdims=True)
    return factor.a_s.T @ y


def pgcv(lam: float, diag_c, y_frob2: float, s, n_grid: int,
         alpha: float = 1.0) -> float:
    """Pooled GCV score of the smoother at penalty λ.

    Computed from the projected cross-products only:
    [Σₖ Cₖₖ(λsₖ)²/(1+λsₖ)² − ‖Ỹ‖²_F + ‖Y‖²_F] / [1 − α·J⁻¹Σₖ(1+λsₖ)⁻¹]²
    which equals Σᵢ‖Yᵢ − S_λYᵢ‖² / {1 − α·tr(S_λ)/J}² without forming S_λ.
    """
    if lam < 0.0 or not np.isfinite(lam):
        raise InputError("lambda must be finite and >= 0")
    if alpha < 1.0:
        raise InputError("alpha must be >= 1 (trace inflation factor)")
    diag_c = np.asarray(diag_c, dtype=float)
    s = np.asarray(s, dtype=float)
    t = lam * s
    shrink = 1.0 / (1.0 + t)
    numer = float(diag_c @ (t * shrink) ** 2) - float(diag_c.sum()) + y_frob2
    base = 1.0 - alpha * float(shrink.sum()) / n_grid
    if base <= 0.0:
        raise DegenerateSmootherError(
            f"effective dof alpha*tr(S)={alpha * shrink.sum():.3f} reaches "
            f"the number of grid points J={n_grid} at lambda={lam:.3e}"
        )
    return numer / base ** 2


def _golden_refine(fun, a: float, b: float, tol: float, max_iter: int):
    """Golden-section minimization on [a, b]; returns best probed (x, f(x))."""
    probes = [(a, fun(a)), (b, fun(b))]
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = fun(c), fun(d)
    probes += [(c, fc), (d, fd)]
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = fun(c)
            probes.append((c, fc))
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = fun(d)
            probes.append((d, fd))
    return min(probes, key=lambda p: p[1])


def select_lambda(ytilde, y_frob2: float, s, n_grid: int, alpha: float = 1.0,
                  search: SearchSpec = DEFAULT_SEARCH) -> float:
    """Minimize the pooled GCV score over λ.

    Deterministic: a fixed grid scan on log10(λ) seeds a golden-section
    refinement, and the best evaluated candidate is returned.  λ values whose
    GCV denominator degenerates are treated as infinitely bad; if every
    candidate degenerates, the error propagates.
    """
    if search.fixed is not None:
        return float(search.fixed)
    ytilde = np.asarray(ytilde, dtype=float)
    diag_c = np.einsum("ki,ki->k", ytilde, ytilde)

    last_error: Exception | None = None

    def score(u: float) -> float:
        nonlocal last_error
        try:
            return pgcv(10.0 ** u, diag_c, y_frob2, s, n_grid, alpha)
        except DegenerateSmootherError as exc:
            last_error = exc
            return np.inf

    us = np.linspace(search.log10_min, search.log10_max, search.grid_points)
    fs = np.array([score(u) for u in us])
    if not np.any(np.isfinite(fs)):
        raise last_error  # every candidate degenerated
    i_best = int(np.argmin(fs))
    lo = us[max(i_best - 1, 0)]
    hi = us[min(i_best + 1, len(us) - 1)]
    u_ref, f_ref = _golden_refine(score, lo, hi, search.tol_log10,
                                  search.max_iter)
    if f_ref < fs[i_best]:
        return float(10.0 ** u_ref)
    return float(10.0 ** us[i_best])


def select_component_count(values, fraction: float = 0.95) -> int:
    """Smallest N whose leading eigenvalues reach ``fraction`` of the total."""
    values = np.asarray(values, dtype=float)
    total = float(values.sum())
    if total <= 0.0:
        raise InputError("eigenvalues sum to zero; no components to select")
    cum = np.cumsum(values) / total
    return int(np.searchsorted(cum, fraction - 1e-12) + 1)


def _fit_projected(yc: np.ndarray, factor: SmootherFactor, alpha: float,
                   search: SearchSpec, divisor: float,
                   mean: np.ndarray | None) -> FaceFit:
    """Shared fitting core; ``yc`` must already be centered as intended."""
    timings: dict[str, float] = dict(factor.timings)
    warnings_: list[str] = []
    n_grid, n_cols = yc.shape

    t0 = time.perf_counter()
    ytilde = factor.a_s.T @ yc
    timings["project"] = time.perf_counter() - t0
    y_frob2 = float(np.einsum("ji,ji->", yc, yc))
    if not np.any(ytilde):
        raise InputError(
            "projected data is identically zero; curves are orthogonal to "
            "the spline space"
        )

    t0 = time.perf_counter()
    lam = select_lambda(ytilde, y_frob2, factor.s, n_grid, alpha, search)
    timings["select_lambda"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    shrink = factor.shrink(lam)
    timings["shrink_spectrum"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    cross = ytilde @ ytilde.T
    inner = (shrink[:, None] * cross * shrink[None, :]) / divisor
    dec = sym_eig((inner + inner.T) / 2.0)
    vals = np.clip(dec.values, 0.0, None)
    timings["inner_eig"] = time.perf_counter() - t0

    sigma2 = y_frob2 / (divisor * n_grid) - float(vals.sum()) / n_grid
    if sigma2 < 0.0:
        warnings_.append(f"noise variance estimate {sigma2:.3e} clamped to 0")
        sigma2 = 0.0

    rank = min(factor.n_basis, n_cols)
    t0 = time.perf_counter()
    inner_vectors = np.ascontiguousarray(dec.vectors[:, :rank])
    eigvecs = factor.a_s @ inner_vectors
    timings["map_eigenvectors"] = time.perf_counter() - t0

    eigvals_matrix = vals[:rank]
    n_selected = select_component_count(vals)

    return FaceFit(
        lambda_=lam,
        alpha=alpha,
        eigvecs=eigvecs,
        eigvals_matrix=eigvals_matrix,
        eigvals_function=eigvals_matrix / n_grid,
        sigma2=sigma2,
        ytilde=ytilde,
        n_selected=min(n_selected, rank),
        inner_vectors=inner_vectors,
        factor=factor,
        mean=mean,
        divisor=divisor,
        n_subjects=n_cols,
        warnings=warnings_,
        timings=timings,
    )


def face_fit(y, factor: SmootherFactor, alpha: float = 1.0,
             search: SearchSpec = DEFAULT_SEARCH,
             center: bool = True) -> FaceFit:
    """Fit the smoothed low-rank covariance model to complete curves.

    Parameters
    ----------
    y : array (J, I)
        One column per subject, observed on the factor's grid.
    factor : SmootherFactor
        Precomputed smoother factorization (reusable across fits).
    alpha : float
        GCV trace inflation factor, >= 1.
    search : SearchSpec
        Smoothing-parameter search strategy.
    center : bool
        Subtract the cross-subject mean curve (stored on the fit) first.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 2:
        raise InputError("data must be a J x I matrix")
    if y.shape[0] != factor.n_grid:
        raise InputError(
            f"data has {y.shape[0]} rows but the smoother grid has "
            f"{factor.n_grid} points"
        )
    if not np.all(np.isfinite(y)):
        raise InputError("data contains non-finite entries (complete-data "
                         "fit; see the incomplete-data interface)")
    if alpha < 1.0:
        raise InputError("alpha must be >= 1")
    mean = None
    yc = y
    if center:
        mean = y.mean(axis=1)
        yc = y - mean[:, None]
    if not np.any(yc):
        raise InputError("data is identically zero after centering; "
                         "covariance is undefined")
    return _fit_projected(yc, factor, alpha, search,
                          divisor=float(y.shape[1]), mean=mean)


def scores_numeric(fit: FaceFit) -> Scores:
    """Principal scores by numeric integration: ξᵢ = J^{-1/2} Â_Nᵀ Ỹᵢ."""
    n = fit.n_selected
    xi = (fit.inner_vectors[:, :n].T @ fit.ytilde) / np.sqrt(fit.n_grid)
    return Scores(xi=xi.T, method="numeric_integration")


def scores_blup(fit: FaceFit) -> Scores:
    """Best-linear-unbiased-predictor scores.

    Equals the numeric-integration scores shrunken per component by
    λₖ/(λₖ + σ²/J) (matrix-scale eigenvalues); components with zero
    eigenvalue get zero scores.
    """
    n = fit.n_selected
    lam_m = fit.eigvals_matrix[:n]
    ridge = fit.sigma2 / fit.n_grid
    with np.errstate(invalid="ignore", divide="ignore"):
        gain = np.where(lam_m > 0.0, lam_m / (lam_m + ridge), 0.0)
    base = scores_numeric(fit)
    return Scores(xi=base.xi * gain[None, :], method="blup")
