"""Forward solvers: linear transport-diffusion, Burgers-alpha and Burgers.

Every solver uses the same IMEX Euler step: diffusion implicit, transport
and sources explicit at the old level,

    (I - dt D_xx) y[n+1] = y[n] + dt (S[n] - A[n] * Dx y[n]),

with centered ``Dx`` and homogeneous Dirichlet data. Sources and transport
coefficients are read at levels 0..nt-1; level nt of a forcing trajectory is
never used.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .core import ControlWindow, Grid1D, ScalarField, Trajectory, indicator
from .errors import CFLError, SolverError
from .filter import _as_alpha

__all__ = [
    "ForcingSpec",
    "EstimateReport",
    "cfl_limit",
    "check_cfl",
    "step_linear",
    "solve_linear",
    "solve_burgers_alpha",
    "solve_burgers",
    "check_estimates",
    "max_bound",
]


@dataclass(frozen=True)
class ForcingSpec:
    """Body force plus a control acting through the window indicator."""

    body_force: Trajectory | None = None
    control: Trajectory | None = None
    window: ControlWindow | None = None

    def __post_init__(self):
        if self.control is not None and self.window is None:
            raise ValueError("a control needs a window to act through")

    def source(self, grid: Grid1D) -> np.ndarray:
        """Total source at levels 0..nt-1, shape (nt, nx)."""
        S = np.zeros((grid.nt, grid.nx))
        if self.body_force is not None:
            S += self.body_force.values[:-1]
        if self.control is not None:
            S += self.control.values[:-1] * indicator(self.window, grid).values
        return S

    def sup(self, grid: Grid1D) -> float:
        S = self.source(grid)
        return float(np.max(np.abs(S))) if S.size else 0.0


@dataclass(frozen=True)
class EstimateReport:
    """Sup norm of the state against M(T) = ||y0||_inf + T ||f||_inf."""

    sup_state: float
    bound_M: float
    tolerance: float
    satisfied: bool
    margin: float


def max_bound(y0: ScalarField, forcing: ForcingSpec | None, grid: Grid1D, t: float | None = None) -> float:
    t = grid.T if t is None else t
    fsup = forcing.sup(grid) if forcing is not None else 0.0
    return float(np.max(np.abs(y0.values))) + t * fsup


def cfl_limit(grid: Grid1D, speed: float) -> float:
    """Largest admissible dt, dx / (2 * speed)."""
    return np.inf if speed <= 0 else grid.dx / (2.0 * speed)


def check_cfl(grid: Grid1D, speed: float) -> None:
    limit = cfl_limit(grid, speed)
    if grid.dt > limit * (1.0 + 1e-12):
        raise CFLError(
            f"dt = {grid.dt:.6g} exceeds the transport limit dx/(2*{speed:.6g}) = {limit:.6g}; "
            f"use nt >= {int(np.ceil(grid.T / limit))}"
        )


def _checked(Y: np.ndarray, what: str) -> np.ndarray:
    bad = ~np.all(np.isfinite(Y), axis=1)
    if bad.any():
        level = int(np.argmax(bad))
        raise SolverError(f"{what}: non-finite state at time level {level}", level)
    return Y


def step_linear(y_now: ScalarField, A_now: ScalarField, rhs_now: ScalarField, grid: Grid1D) -> ScalarField:
    """One IMEX Euler step of y_t - y_xx + A y_x = rhs."""
    Y = kernels.march_linear(
        np.ascontiguousarray(y_now.values),
        np.ascontiguousarray(A_now.values[None, :]),
        np.ascontiguousarray(rhs_now.values[None, :]),
        grid.dt,
        grid.dx,
    )
    return ScalarField(grid, _checked(Y, "step_linear")[1])


def _march_linear(y0, A, S, grid):
    return _checked(
        kernels.march_linear(
            np.ascontiguousarray(y0, dtype=float),
            np.ascontiguousarray(A, dtype=float),
            np.ascontiguousarray(S, dtype=float),
            grid.dt,
            grid.dx,
        ),
        "solve_linear",
    )


def solve_linear(y0: ScalarField, A: Trajectory, forcing: ForcingSpec | None, grid: Grid1D,
                 cfl: bool = True) -> Trajectory:
    """March y_t - y_xx + A y_x = f + v 1_window over all nt steps."""
    if cfl:
        check_cfl(grid, float(np.max(np.abs(A.values[:-1]))))
    S = forcing.source(grid) if forcing is not None else np.zeros((grid.nt, grid.nx))
    return Trajectory(grid, _march_linear(y0.values, A.values[:-1], S, grid))


def _march_burgers_alpha(y0, S, alpha, grid, nf=None):
    nf = grid.nx if nf is None else nf
    Y, Z = kernels.march_burgers_alpha(
        np.ascontiguousarray(y0, dtype=float),
        np.ascontiguousarray(S, dtype=float),
        grid.dt,
        grid.dx,
        float(alpha),
        int(nf),
    )
    return _checked(Y, "solve_burgers_alpha"), Z


def solve_burgers_alpha(y0: ScalarField, forcing: ForcingSpec | None, alpha, grid: Grid1D,
                        cfl: bool = True) -> tuple[Trajectory, Trajectory]:
    """Burgers-alpha system; z is the filtered state at every level.

    The filter is lagged: z[n] = filter(y[n]) drives the step n -> n+1.
    """
    a = _as_alpha(alpha)
    if cfl:
        check_cfl(grid, max_bound(y0, forcing, grid))
    S = forcing.source(grid) if forcing is not None else np.zeros((grid.nt, grid.nx))
    Y, Z = _march_burgers_alpha(y0.values, S, a, grid)
    return Trajectory(grid, Y), Trajectory(grid, Z)


def solve_burgers(y0: ScalarField, forcing: ForcingSpec | None, grid: Grid1D, cfl: bool = True) -> Trajectory:
    """Viscous Burgers; the alpha = 0 member of :func:`solve_burgers_alpha`."""
    return solve_burgers_alpha(y0, forcing, 0.0, grid, cfl=cfl)[0]


def check_estimates(y: Trajectory, z: Trajectory, y0: ScalarField, forcing: ForcingSpec | None,
                    rel_tol: float = 1e-6, allowance: float | None = None) -> EstimateReport:
    """Compare sup norms of y and z against M(T).

    ``allowance`` is an absolute slack for discretization error; by default
    it is (dx^2 + dt) * M(T).
    """
    g = y.grid
    M = max_bound(y0, forcing, g)
    if allowance is None:
        allowance = (g.dx ** 2 + g.dt) * M
    tol = rel_tol + (allowance / M if M > 0 else 0.0)
    sup_state = max(float(np.max(np.abs(y.values))), float(np.max(np.abs(z.values))))
    limit = M * (1.0 + tol)
    return EstimateReport(sup_state, M, tol, sup_state <= limit, limit - sup_state)
