"""Time-uniform confidence sequences: uniform boundaries, estimators and simulations."""

__version__ = "0.1.0"

from ._errors import ConvergenceError, DomainError, UnsupportedConversionError, UnsupportedStrategyError
from .kernels import BACKEND
from .psi import PsiFamily, conversion_factor, convert_boundary, legendre, psi_eval
from .boundaries import (
    DiscreteMixtureParams,
    HalfNormalDensity,
    LILDensity,
    PolynomialH,
    ExponentialH,
    StitchParams,
    UniformBoundary,
    build_boundary,
    calibrate_inverted_stitching,
    discrete_mixture_boundary,
    inverted_stitching_boundary,
    inverted_stitching_prob,
    linear_boundary,
    mixture_boundary,
    stitched_boundary,
    tune_rho_for_time,
)
from .confseq import (
    CsInterval,
    StreamState,
    always_valid_p,
    running_intersection,
)
from .matrix import SymMatrix, covariance_cs, matrix_lil_boundary, max_eigenvalue
from .sim import Scenario, crossing_probability_mc, run_scenario

__all__ = [
    "BACKEND",
    "ConvergenceError",
    "CsInterval",
    "DiscreteMixtureParams",
    "DomainError",
    "ExponentialH",
    "HalfNormalDensity",
    "LILDensity",
    "PolynomialH",
    "PsiFamily",
    "Scenario",
    "StitchParams",
    "StreamState",
    "SymMatrix",
    "UniformBoundary",
    "UnsupportedConversionError",
    "UnsupportedStrategyError",
    "always_valid_p",
    "build_boundary",
    "calibrate_inverted_stitching",
    "conversion_factor",
    "convert_boundary",
    "covariance_cs",
    "crossing_probability_mc",
    "discrete_mixture_boundary",
    "inverted_stitching_boundary",
    "inverted_stitching_prob",
    "legendre",
    "linear_boundary",
    "matrix_lil_boundary",
    "max_eigenvalue",
    "mixture_boundary",
    "psi_eval",
    "run_scenario",
    "running_intersection",
    "stitched_boundary",
    "tune_rho_for_time",
]
