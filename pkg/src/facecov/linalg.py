"""Symmetric eigendecomposition and thin SVD with fixed ordering conventions.

Thin wrappers around LAPACK (via numpy) that pin down the conventions the
rest of the package relies on: eigenvalues and singular values are sorted
descending, no sign convention is imposed on vectors, and failures surface
as the package's own exception types.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, InputError, SingularityError

# Relative cutoff below which an eigenvalue is treated as numerically zero.
RANK_TOL_FACTOR = 1e-12


@dataclass
class SymEig:
    """Eigendecomposition M = vectors @ diag(values) @ vectors.T."""

    vectors: np.ndarray  # orthonormal columns
    values: np.ndarray   # sorted descending


@dataclass
class ThinSvd:
    """Economy SVD M = left @ diag(singular_values) @ right.T."""

    left: np.ndarray
    singular_values: np.ndarray  # nonnegative, descending
    right: np.ndarray


def _as_finite_matrix(m, name: str = "matrix") -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise InputError(f"{name} must be 2-d, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise InputError(f"{name} contains non-finite entries")
    return m


def sym_eig(m) -> SymEig:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending."""
    m = _as_finite_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise InputError(f"expected a square matrix, got shape {m.shape}")
    scale = float(np.abs(m).max()) if m.size else 0.0
    if scale > 0.0 and float(np.abs(m - m.T).max()) > 1e-10 * scale:
        raise ContractError("matrix is not symmetric within 1e-10 relative")
    values, vectors = np.linalg.eigh(m)
    return SymEig(vectors=np.ascontiguousarray(vectors[:, ::-1]),
                  values=np.ascontiguousarray(values[::-1]))


def thin_svd(m) -> ThinSvd:
    """Economy SVD with singular values sorted descending (LAPACK order)."""
    m = _as_finite_matrix(m)
    left, sv, right_t = np.linalg.svd(m, full_matrices=False)
    return ThinSvd(left=left, singular_values=sv, right=right_t.T)


def inv_sqrt_sym(m) -> np.ndarray:
    """Symmetric inverse square root W of a positive definite matrix.

    W satisfies W @ m @ W = I.  Raises :class:`SingularityError` naming the
    first eigenvalue at or below ``RANK_TOL_FACTOR`` times the largest one.
    """
    dec = sym_eig(m)
    d = dec.values
    top = d[0] if d.size else 0.0
    tol = RANK_TOL_FACTOR * top
    if top <= 0.0 or d[-1] <= tol:
        bad = 0 if top <= 0.0 else int(np.argmax(d <= tol))
        raise SingularityError(
            f"matrix is numerically singular: eigenvalue {bad} is "
            f"{d[bad]:.6e} <= rank tolerance {tol:.6e}"
        )
    w = (dec.vectors / np.sqrt(d)) @ dec.vectors.T
    return (w + w.T) / 2.0


def numerical_rank(values, rel_tol: float = 1e-10) -> int:
    """Count of (descending, nonnegative) eigenvalues above rel_tol * largest."""
    values = np.asarray(values, dtype=float)
    if values.size == 0 or values[0] <= 0.0:
        return 0
    return int(np.count_nonzero(values > rel_tol * values[0]))
