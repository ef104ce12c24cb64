"""Numerical laboratory for Hölder regularity of continuous solutions of scalar balance laws."""

from .decomposition import Decomposition, IllConditionedError, decompose_general, decompose_improved
from .flux import FluxModel, fit_alpha, nonlinearity_measure
from .kernels import BACKEND
from .kinetic import KineticBox, verify_transport_estimate
from .regularity import bootstrap_iterate, empirical_holder, h_r, oscillation_profile
from .solution import GridSolution
from .solver import SolverConfig, SolverError, solve

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Decomposition",
    "FluxModel",
    "GridSolution",
    "IllConditionedError",
    "KineticBox",
    "SolverConfig",
    "SolverError",
    "bootstrap_iterate",
    "decompose_general",
    "decompose_improved",
    "empirical_holder",
    "fit_alpha",
    "h_r",
    "nonlinearity_measure",
    "oscillation_profile",
    "solve",
    "verify_transport_estimate",
]
