"""Equally spaced B-spline bases, difference penalties, and the orthonormal
factorization of the penalized smoother.

The penalized smoother S = B (BᵀB + λP)⁻¹ Bᵀ is re-expressed, once per
basis, as S = A_S diag(1/(1+λ s)) A_Sᵀ where A_S has orthonormal columns and
s is the spectrum of (BᵀB)^{-1/2} P (BᵀB)^{-1/2}.  After that, changing λ
costs O(c) and the smoother is never materialized as a J×J matrix.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import BSpline

from .errors import ConfigError, InputError
from .linalg import inv_sqrt_sym, sym_eig

DEFAULT_NUM_KNOTS = 100
DEFAULT_SPLINE_ORDER = 4        # cubic splines
DEFAULT_PENALTY_DIFF_ORDER = 2


def bspline_knots(num_interior_knots: int, spline_order: int) -> np.ndarray:
    """Full knot vector on [0, 1]: equally spaced interior knots, boundary
    knots replicated ``spline_order`` times."""
    if num_interior_knots < 0:
        raise ConfigError("num_interior_knots must be >= 0")
    if spline_order < 1:
        raise ConfigError("spline_order must be >= 1")
    interior = np.linspace(0.0, 1.0, num_interior_knots + 2)
    return np.concatenate([
        np.zeros(spline_order - 1),
        interior,
        np.ones(spline_order - 1),
    ])


def bspline_design_points(x, num_interior_knots: int, spline_order: int) -> np.ndarray:
    """B-spline design matrix at arbitrary points x in [0, 1].

    Returns a dense (len(x), num_interior_knots + spline_order) matrix.  This
    low-level helper does not require more points than basis functions; use
    :class:`BasisSpec` + :func:`bspline_design` for smoother construction.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise InputError("evaluation points must be a 1-d array")
    if not np.all(np.isfinite(x)):
        raise InputError("evaluation points contain non-finite values")
    if x.size and (x.min() < 0.0 or x.max() > 1.0):
        raise InputError("evaluation points must lie within [0, 1]")
    knots = bspline_knots(num_interior_knots, spline_order)
    degree = spline_order - 1
    design = BSpline.design_matrix(x, knots, degree, extrapolate=False)
    return np.asarray(design.todense())


@dataclass(eq=False)
class BasisSpec:
    """Configuration of the spline basis and its roughness penalty.

    ``grid`` holds the J sampling points (strictly increasing, within
    [0, 1]); the basis dimension is c = num_interior_knots + spline_order and
    must stay below J.
    """

    grid: np.ndarray
    num_interior_knots: int = DEFAULT_NUM_KNOTS
    spline_order: int = DEFAULT_SPLINE_ORDER
    penalty_diff_order: int = DEFAULT_PENALTY_DIFF_ORDER

    def __post_init__(self) -> None:
        self.grid = np.asarray(self.grid, dtype=float)
        if self.grid.ndim != 1 or self.grid.size < 2:
            raise ConfigError("grid must be a 1-d array with at least 2 points")
        if not np.all(np.isfinite(self.grid)):
            raise InputError("grid contains non-finite values")
        if np.any(np.diff(self.grid) <= 0.0):
            raise ConfigError("grid must be strictly increasing")
        if self.grid[0] < 0.0 or self.grid[-1] > 1.0:
            raise ConfigError("grid must lie within [0, 1]")
        if self.num_interior_knots < 0:
            raise ConfigError("num_interior_knots must be >= 0")
        if self.spline_order < 1:
            raise ConfigError("spline_order must be >= 1")
        if not 1 <= self.penalty_diff_order < self.n_basis:
            raise ConfigError(
                f"penalty_diff_order must be in [1, {self.n_basis - 1}]"
            )
        if self.n_basis >= self.n_grid:
            raise ConfigError(
                f"basis dimension c={self.n_basis} must be smaller than the "
                f"number of grid points J={self.n_grid}"
            )

    @classmethod
    def regular(cls, n_grid: int, **kwargs) -> "BasisSpec":
        """Spec on the regular grid {1/J, 2/J, ..., 1}."""
        grid = np.arange(1, n_grid + 1, dtype=float) / n_grid
        return cls(grid=grid, **kwargs)

    @property
    def n_grid(self) -> int:
        return int(self.grid.size)

    @property
    def n_basis(self) -> int:
        return self.num_interior_knots + self.spline_order


def bspline_design(spec: BasisSpec) -> np.ndarray:
    """Dense J×c design matrix of the configured B-spline basis at its grid."""
    return bspline_design_points(spec.grid, spec.num_interior_knots,
                                 spec.spline_order)


def difference_penalty(n_basis: int, diff_order: int) -> np.ndarray:
    """Penalty DᵀD built from the ``diff_order``-th order difference matrix."""
    if n_basis < 1:
        raise ConfigError("n_basis must be >= 1")
    if not 1 <= diff_order < n_basis:
        raise ConfigError(f"diff_order must be in [1, {n_basis - 1}]")
    d = np.diff(np.eye(n_basis), n=diff_order, axis=0)
    return d.T @ d


@dataclass(eq=False)
class SmootherFactor:
    """λ-independent factorization of the penalized spline smoother.

    ``a_s`` (J×c) has orthonormal columns and ``s`` is the nonnegative
    penalty spectrum, sorted descending; exactly ``penalty_diff_order``
    entries are zero (the penalty null space).  The smoother at penalty λ is
    A_S diag(1/(1+λs)) A_Sᵀ.
    """

    a_s: np.ndarray
    s: np.ndarray
    basis: BasisSpec
    transform: np.ndarray = field(repr=False, default=None)  # c×c map W @ U
    timings: dict = field(default_factory=dict, repr=False)

    @property
    def n_grid(self) -> int:
        return self.a_s.shape[0]

    @property
    def n_basis(self) -> int:
        return self.a_s.shape[1]

    def shrink(self, lam: float) -> np.ndarray:
        """Diagonal of Σ_S: the per-coordinate shrinkage 1/(1+λs)."""
        return 1.0 / (1.0 + lam * self.s)


def factorize_smoother(spec: BasisSpec) -> SmootherFactor:
    """Orthogonalize the penalized spline smoother for the given basis."""
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    b = bspline_design(spec)
    timings["design"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    btb = b.T @ b
    w = inv_sqrt_sym(btb)
    penalty = difference_penalty(spec.n_basis, spec.penalty_diff_order)
    mid = w @ penalty @ w
    dec = sym_eig((mid + mid.T) / 2.0)
    s = np.clip(dec.values, 0.0, None)  # clamp roundoff negatives
    if s.size and s[0] > 0.0:
        # whitened-penalty eigenvalues at roundoff scale are null directions;
        # snap them to exact zero so extreme λ cannot shrink them
        s[s < 1e-12 * s[0]] = 0.0
    timings["penalty_spectrum"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    transform = w @ dec.vectors
    a_s = b @ transform
    timings["orthonormal_basis"] = time.perf_counter() - t0

    return SmootherFactor(a_s=a_s, s=s, basis=spec, transform=transform,
                          timings=timings)
