"""Covariance estimation for structured repeated designs.

A symmetric subject-side weight matrix H defines a structured covariance
Y·H·Yᵀ.  Replacing H by its positive-semidefinite counterpart H₊ = H₁H₁ᵀ
turns the target into Z·Zᵀ with Z = Y·H₁, so the fast pipeline applies to Z
directly (with divisor 1 — the averaging lives inside H).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import SmootherFactor
from .errors import ContractError, InputError, SingularityError
from .face import DEFAULT_SEARCH, FaceFit, SearchSpec, _fit_projected
from .linalg import RANK_TOL_FACTOR, sym_eig


@dataclass(eq=False)
class StructuredDesign:
    """Symmetric subject-side weights defining the target Y·H·Yᵀ."""

    h: np.ndarray
    label: str = ""

    def __post_init__(self) -> None:
        self.h = np.asarray(self.h, dtype=float)
        if self.h.ndim != 2 or self.h.shape[0] != self.h.shape[1]:
            raise InputError("H must be square")
        scale = float(np.abs(self.h).max()) if self.h.size else 0.0
        if scale > 0.0 and float(np.abs(self.h - self.h.T).max()) > 1e-10 * scale:
            raise ContractError("H must be symmetric within 1e-10 relative")

    @property
    def n(self) -> int:
        return self.h.shape[0]


def psd_factor(design: StructuredDesign) -> np.ndarray:
    """Factor H₁ (n×r) of the positive counterpart of H: H₁H₁ᵀ = H₊.

    Eigenvalues at or below 1e-12 times the largest are dropped.
    """
    dec = sym_eig(design.h)
    top = dec.values[0] if dec.values.size else 0.0
    if top <= 0.0:
        raise SingularityError(
            f"design '{design.label}' has no positive eigenvalues; its "
            "positive counterpart is zero"
        )
    keep = dec.values > RANK_TOL_FACTOR * top
    return dec.vectors[:, keep] * np.sqrt(dec.values[keep])


def build_pair_designs(n_pairs: int) -> tuple[StructuredDesign, StructuredDesign]:
    """Weight matrices for paired curves stacked as [A-block | C-block].

    The first design targets the covariance of the shared (pair-level)
    process via the symmetrized cross-covariance; the second targets the
    covariance of the subject-specific deviation via paired differences.
    """
    if n_pairs < 1:
        raise InputError("need at least one pair")
    eye = np.eye(n_pairs)
    zero = np.zeros((n_pairs, n_pairs))
    h_x = np.block([[zero, eye], [eye, zero]]) / (2.0 * n_pairs)
    h_u = np.block([[eye, -eye], [-eye, eye]]) / (2.0 * n_pairs)
    return (StructuredDesign(h=h_x, label="K_X"),
            StructuredDesign(h=h_u, label="K_U"))


def center_pair_blocks(y) -> np.ndarray:
    """Subtract per-block mean curves from a [A-block | C-block] matrix."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 2 or y.shape[1] % 2 != 0:
        raise InputError("paired data must have an even number of columns")
    half = y.shape[1] // 2
    centered = y.copy()
    centered[:, :half] -= y[:, :half].mean(axis=1, keepdims=True)
    centered[:, half:] -= y[:, half:].mean(axis=1, keepdims=True)
    return centered


def face_fit_structured(y, design: StructuredDesign, factor: SmootherFactor,
                        alpha: float = 1.0,
                        search: SearchSpec = DEFAULT_SEARCH,
                        center: bool = False) -> FaceFit:
    """Fit the smoothed low-rank model for the structured target Y·H·Yᵀ.

    Equivalent to the plain fit applied to Z = Y·H₁ with divisor 1; with
    H = I/I this reproduces the plain fit exactly.  Data are assumed
    pre-centered appropriately for the design unless ``center`` is set
    (which removes the global cross-column mean).
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 2:
        raise InputError("data must be a J x I matrix")
    if not np.all(np.isfinite(y)):
        raise InputError("data contains non-finite entries")
    if y.shape[1] != design.n:
        raise InputError(
            f"data has {y.shape[1]} columns but the design expects {design.n}"
        )
    mean = None
    if center:
        mean = y.mean(axis=1)
        y = y - mean[:, None]
    z = y @ psd_factor(design)
    if not np.any(z):
        raise InputError("transformed data Y @ H1 is identically zero")
    return _fit_projected(z, factor, alpha, search, divisor=1.0, mean=mean)
