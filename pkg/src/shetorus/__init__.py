"""Simulation and verification toolkit for the stochastic heat equation on the unit torus
with non-Lipschitz drift and diffusion near zero."""

__version__ = "0.1.0"

from .coefficients import CoefficientSpec, interpolate_alpha, regularize_eps, rescale, truncate_M
from .exceptions import (
    BlowupError,
    ConfigError,
    ConsistencyError,
    EstimationError,
    HypothesisError,
    InsufficientReplicasError,
    InvalidParameterError,
    PreconditionError,
)
from .solver import Ensemble, NoiseStream, PathTrajectory, TorusGrid, simulate, simulate_ensemble

__all__ = [
    "__version__", "CoefficientSpec", "regularize_eps", "interpolate_alpha", "truncate_M", "rescale",
    "TorusGrid", "NoiseStream", "PathTrajectory", "Ensemble", "simulate", "simulate_ensemble",
    "InvalidParameterError", "HypothesisError", "PreconditionError", "EstimationError", "BlowupError",
    "ConsistencyError", "InsufficientReplicasError", "ConfigError",
]
