"""Exact solver for the trust region subproblem with a few linear inequality cuts."""
from etrs.errors import *  # noqa: F401,F403
from etrs.model import (
    ProblemInstance,
    SolutionReport,
    SolverConfig,
    SpectralData,
    objective_value,
    spectral_decompose,
    validate_instance,
)
from etrs.reduction import solve_extended

__version__ = "0.1.0"
