"""facecov: fast covariance smoothing for densely observed functional data.

The main entry points are :func:`factorize_smoother` (precompute the spline
smoother for a grid), :func:`face_fit` (smoothed covariance with low-rank
eigendecomposition), :func:`face_fit_structured` (paired designs),
:func:`face_fit_incomplete` (iterative fitting under missingness), and the
:func:`ssvd_fit` / :func:`s_smooth_fit` baselines.
"""
from .alternatives import (AltFit, UnivariateSmoother, raw_svd_fit,
                           s_smooth_fit, smooth_curve, smooth_scatter,
                           ssvd_fit)
from .basis import (BasisSpec, SmootherFactor, bspline_design,
                    difference_penalty, factorize_smoother)
from .errors import (ConfigError, ContractError, DegenerateSmootherError,
                     FacecovError, FacecovWarning, InputError,
                     SingularityError)
from .face import (FaceFit, Scores, SearchSpec, face_fit, pgcv, scores_blup,
                   scores_numeric, select_component_count, select_lambda)
from .incomplete import (ImputeTrace, MaskedData, face_fit_incomplete,
                         impute_step, initialize_missing)
from .simulation import (CovModel, amse_eigenvalue, case_model,
                         generate_sample, matern_cov, mcar_mask,
                         mise_covariance, mise_eigenfunction,
                         true_cov_matrix)
from .structured import (StructuredDesign, build_pair_designs,
                         center_pair_blocks, face_fit_structured, psd_factor)

__version__ = "0.1.0"

__all__ = [
    "AltFit", "BasisSpec", "ConfigError", "ContractError", "CovModel",
    "DegenerateSmootherError", "FaceFit", "FacecovError", "FacecovWarning",
    "ImputeTrace", "InputError", "MaskedData", "Scores", "SearchSpec",
    "SingularityError", "SmootherFactor", "StructuredDesign",
    "amse_eigenvalue", "bspline_design", "build_pair_designs", "case_model",
    "center_pair_blocks", "difference_penalty", "face_fit",
    "face_fit_incomplete", "face_fit_structured", "factorize_smoother",
    "generate_sample", "impute_step", "initialize_missing", "matern_cov",
    "mcar_mask", "mise_covariance", "mise_eigenfunction", "pgcv",
    "psd_factor", "raw_svd_fit", "s_smooth_fit", "scores_blup",
    "scores_numeric", "select_component_count", "select_lambda",
    "smooth_curve", "smooth_scatter", "ssvd_fit", "true_cov_matrix",
    "UnivariateSmoother", "__version__",
]
