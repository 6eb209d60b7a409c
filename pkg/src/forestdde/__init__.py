"""Simulation and verification tools for the n-species state-dependent-delay forest model."""

__version__ = "0.1.0"

from .errors import DomainError, NumericalError, UnsupportedError, ValidationError
from .model import (CompetitionFunction, DelayNormalization, InitialHistory, ModelConfig,
                    SpeciesParams, compute_normalization, equilibrium, eval_f,
                    growth_ratio_bound, weighted_total)
from .history import DenseTrajectory
from .integrator import IntegratorSettings, SolveResult, solve

__all__ = [
    "CompetitionFunction", "DelayNormalization", "DenseTrajectory", "DomainError",
    "InitialHistory", "IntegratorSettings", "ModelConfig", "NumericalError", "SolveResult",
    "SpeciesParams", "UnsupportedError", "ValidationError", "compute_normalization",
    "equilibrium", "eval_f", "growth_ratio_bound", "solve", "weighted_total",
]
