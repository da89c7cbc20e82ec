"""Numerical laboratory for curvature-dimension densities with variable or
integral curvature bounds: distortion coefficients, 1-D comparison,
volume comparison on radial spaces, p-eigenvalues and graph partitions."""
from __future__ import annotations

from .cd_density import (
    CdDensity,
    DegenerateCurvatureError,
    HypothesisError,
    SlackReport,
    check_comparison_1d,
    maximal_support_length,
    model_cd_density,
    synthesize_extremal,
    verify_differential,
    verify_sigma_inequality,
)
from .model_spaces import CurvatureProfile, ModelParams, SolverConfig, SolverError, sigma, tau
from .radial_space import RadialSpace, StarShapedTruncation, bg_constant, check_bishop_gromov

__version__ = "0.1.0"
