"""Finite-difference laboratory for null control of the Burgers-alpha system.

``BACKEND`` names the kernel implementation in use: ``"cython"`` when the
compiled extension imports, ``"python"`` otherwise (or when the environment
variable ``BURGERS_ALPHA_PURE=1`` is set).
"""
from ._backend import BACKEND, COMPILED
from .control import (boundary_null_control, cutoff_control, decay_constant, decay_rate, large_alpha_control,
                      large_time_control, nonlinear_null_control)
from .core import ControlWindow, Grid1D, ScalarField, Trajectory, indicator, norm, spacetime_norm
from .dynamics import ForcingSpec, check_estimates, solve_burgers, solve_burgers_alpha, solve_linear, step_linear
from .errors import CFLError, DivergenceError, HypothesisError, SolverError
from .filter import AlphaParam, apply_filter, damping_factor
from .hum import LinearControlProblem, cost_study, hum_control, solve_adjoint

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "COMPILED",
    "Grid1D", "ScalarField", "Trajectory", "ControlWindow", "indicator", "norm", "spacetime_norm",
    "AlphaParam", "apply_filter", "damping_factor",
    "ForcingSpec", "step_linear", "solve_linear", "solve_burgers_alpha", "solve_burgers", "check_estimates",
    "LinearControlProblem", "hum_control", "solve_adjoint", "cost_study",
    "nonlinear_null_control", "cutoff_control", "large_time_control", "large_alpha_control",
    "boundary_null_control", "decay_rate", "decay_constant",
    "SolverError", "CFLError", "HypothesisError", "DivergenceError",
]
