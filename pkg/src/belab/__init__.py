"""belab: explicit Berry-Esseen bounds for nonlinear statistics.

Core workflow: describe a statistic T = W + Delta from the model catalog,
estimate or evaluate the coupling moments the bounds consume, form the
bounds with their explicit constants, and certify measured Kolmogorov
distances against them under seeded Monte Carlo.
"""
from . import app_bounds, bound_core, cli, marginals, mc_engine, models
from .errors import (
    BelabError,
    CapacityError,
    ConfigError,
    DegenerateModelError,
    DomainError,
    InvalidModelError,
    NumericError,
    UnsupportedModelError,
)
from .types import (
    BoundComponents,
    BoundValue,
    DecompositionSample,
    KSResult,
    MomentEstimate,
    NonUniformInputs,
)

__version__ = "0.1.0"

__all__ = [
    "BelabError", "BoundComponents", "BoundValue", "CapacityError",
    "ConfigError", "DecompositionSample", "DegenerateModelError",
    "DomainError", "InvalidModelError", "KSResult", "MomentEstimate",
    "NonUniformInputs", "NumericError", "UnsupportedModelError",
    "__version__", "app_bounds", "bound_core", "cli", "marginals",
    "mc_engine", "models",
]
