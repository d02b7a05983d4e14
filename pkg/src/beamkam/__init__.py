"""Quasi-periodic solutions of a forced nonlinear beam equation by a truncated KAM iteration."""

from .algebra import NormParams, PolyHamiltonian, lie_transform, poisson_bracket
from .beam import BeamParams, assemble_block_perturbation
from .config import ConfigError, RunConfig, load_config
from .driver import KAMSettings, build_schedule, compose_embedding, run_iteration
from .estimator import KAMTorusEstimator
from .exceptions import (DivergenceWarning, InvalidBlockError, InvalidInputError, InvalidParameterError,
                         OutOfClassError, RealityViolation, ResonantParameterError)
from .forcing import ForcingBlock, ForcingHierarchy
from .homological import NormalFormState, solve_homological
from .measure import MeasureConfig, mc_measure
from .verifier import pde_residual, verify_run

__version__ = "0.1.0"

__all__ = [
    "BeamParams", "ConfigError", "DivergenceWarning", "ForcingBlock", "ForcingHierarchy", "InvalidBlockError",
    "InvalidInputError", "InvalidParameterError", "KAMSettings", "KAMTorusEstimator", "MeasureConfig",
    "NormParams", "NormalFormState", "OutOfClassError", "PolyHamiltonian", "RealityViolation",
    "ResonantParameterError", "RunConfig", "assemble_block_perturbation", "build_schedule", "compose_embedding",
    "lie_transform", "load_config", "mc_measure", "pde_residual", "poisson_bracket", "run_iteration",
    "solve_homological", "verify_run",
]
