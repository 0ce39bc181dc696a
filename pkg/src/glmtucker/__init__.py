"""Supervised Tucker decomposition of exponential-family data tensors."""

from .decompose import (
    FitConfig,
    FitResult,
    SupervisedProblem,
    block_design,
    fit,
    fit_from_init,
    objective,
    random_init,
    rank_is_admissible,
    spectral_init,
    validate_rank,
)
from .families import (
    BERNOULLI,
    GAUSSIAN,
    POISSON,
    ExponentialFamily,
    family_from_name,
    quasi_loglik,
)
from .glm import ExplicitDesign, GlmOptions, GlmResult, solve_glm
from .linalg import (
    QrResult,
    SvdResult,
    haar_orthonormal,
    hosvd,
    sin_theta,
    thin_qr,
    truncated_svd,
)
from .metrics import EvalReport, angle_errors, evaluation_report, mse, response_error
from .rank_select import BicEntry, BicTable, bic, candidate_ranks, effective_params, grid_search
from .simulate import SimInstance, SimSpec, SimTruth, generate, generate_noiseless
from .tensors import fold, fro_norm, inner, max_norm, multilinear, ttm, unfold, vec

__all__ = [
    "BERNOULLI",
    "BicEntry",
    "BicTable",
    "EvalReport",
    "ExplicitDesign",
    "ExponentialFamily",
    "FitConfig",
    "FitResult",
    "GAUSSIAN",
    "GlmOptions",
    "GlmResult",
    "POISSON",
    "QrResult",
    "SimInstance",
    "SimSpec",
    "SimTruth",
    "SupervisedProblem",
    "SvdResult",
    "angle_errors",
    "bic",
    "block_design",
    "candidate_ranks",
    "effective_params",
    "evaluation_report",
    "family_from_name",
    "fit",
    "fit_from_init",
    "fold",
    "fro_norm",
    "generate",
    "generate_noiseless",
    "grid_search",
    "haar_orthonormal",
    "hosvd",
    "inner",
    "max_norm",
    "mse",
    "multilinear",
    "objective",
    "quasi_loglik",
    "random_init",
    "rank_is_admissible",
    "response_error",
    "sin_theta",
    "solve_glm",
    "spectral_init",
    "thin_qr",
    "truncated_svd",
    "ttm",
    "unfold",
    "validate_rank",
    "vec",
]
