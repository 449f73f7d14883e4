"""Tangent space lasso: pick dictionary functions that parametrize a data manifold."""

from .diagnostics import DiagnosticsReport, cosine_matrix, sampled_conditions
from .estimator import TSLasso
from .exceptions import (
    ConfigError,
    DegenerateWeights,
    FormatError,
    GeometryError,
    NotConverged,
    RankDeficient,
    ShapeError,
    TSLassoError,
    UnreachableSupport,
    ZeroGradientFunction,
)
from .grouplasso import (
    CoefficientField,
    ProjectedDesign,
    kkt_check,
    lambda_zero,
    last_surviving,
    objective,
    path_search,
    solve,
)
from .pipeline import ReplicateSummary, RunConfig, RunResult, replicate, run
from .pointcloud import KernelSpec, PointCloud, load_matrix, radius_neighbors
from .tangent import TangentFrame, estimate_tangent_frames, tangent_space_basis

__version__ = "0.1.0"

__all__ = [
    "CoefficientField", "ConfigError", "DegenerateWeights", "DiagnosticsReport", "FormatError",
    "GeometryError", "KernelSpec", "NotConverged", "PointCloud", "ProjectedDesign", "RankDeficient",
    "ReplicateSummary", "RunConfig", "RunResult", "ShapeError", "TSLasso", "TSLassoError",
    "TangentFrame", "UnreachableSupport", "ZeroGradientFunction", "cosine_matrix",
    "estimate_tangent_frames", "kkt_check", "lambda_zero", "last_surviving", "load_matrix",
    "objective", "path_search", "radius_neighbors", "replicate", "run", "sampled_conditions",
    "solve", "tangent_space_basis",
]
