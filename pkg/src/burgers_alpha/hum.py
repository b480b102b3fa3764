"""Minimal-norm null controls for y_t - y_xx + A y_x = v 1_window by penalized duality.

The adjoint is the exact transpose of the forward IMEX step, so for any
data the discrete identity

    <y[nt], p[nt]> - <y[0], p[0]> = dt * sum_n <S[n], q[n]>

holds to round-off, where ``q[n] = (I - dt D_xx)^{-1} p[n+1]`` is the
multiplier paired with the source consumed at level n. The control is
``v[n] = q[n] 1_window`` and the terminal datum p[nt] minimizes

    J(phi) = 1/2 |q 1_window|^2 + eps/2 |phi|^2 + <y_free(T), phi>

(discrete L2 inner products), i.e. solves (Lambda + eps I) phi = -y_free(T).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._backend import kernels
from .core import ControlWindow, Grid1D, ScalarField, Trajectory, indicator, l2, spacetime_norm
from .dynamics import ForcingSpec, _checked, _march_linear, check_cfl

__all__ = [
    "LinearControlProblem",
    "HUMSolution",
    "solve_adjoint",
    "adjoint_multipliers",
    "hum_functional",
    "hum_control",
    "CostRow",
    "cost_study",
    "fit_cost_exponent",
]


@dataclass(frozen=True, eq=False)
class LinearControlProblem:
    """Data of one linear null-control problem.

    ``source`` is an optional fixed body force (levels 0..nt-1 used); it is
    folded into the free terminal state. ``cg_max_iter`` defaults to 5*nx.
    """

    y0: ScalarField
    A: Trajectory
    window: ControlWindow
    grid: Grid1D
    epsilon: float = 1e-6
    cg_tol: float = 1e-10
    cg_max_iter: int | None = None
    source: Trajectory | None = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.cg_tol > 0:
            raise ValueError(f"cg_tol must be positive, got {self.cg_tol}")
        if self.cg_max_iter is None:
            object.__setattr__(self, "cg_max_iter", 5 * self.grid.nx)
        for name in ("A", "source"):
            tr = getattr(self, name)
            if tr is not None and tr.grid != self.grid:
                raise ValueError(f"{name} lives on a different grid")

    def source_array(self) -> np.ndarray:
        g = self.grid
        if self.source is None:
            return np.zeros((g.nt, g.nx))
        return np.ascontiguousarray(self.source.values[:-1])


@dataclass(frozen=True, eq=False)
class HUMSolution:
    control: Trajectory
    state: Trajectory
    terminal_L2: float
    control_L2: float
    control_sup: float
    cg_iters: int
    converged: bool
    phiT: ScalarField
    grad_norm: float = 0.0
    residual_history: list = field(default_factory=list)


def adjoint_multipliers(phiT: np.ndarray, A: np.ndarray, grid: Grid1D) -> tuple[np.ndarray, np.ndarray]:
    """Raw adjoint march: ``A`` has shape (nt, nx); returns (P, Q)."""
    P, Q = kernels.march_adjoint(
        np.ascontiguousarray(phiT, dtype=float), np.ascontiguousarray(A, dtype=float), grid.dt, grid.dx
    )
    _checked(P, "solve_adjoint")
    return P, Q


def solve_adjoint(phiT: ScalarField, A: Trajectory, grid: Grid1D) -> Trajectory:
    """Backward march of the transposed scheme from p[nt] = phiT."""
    P, _ = adjoint_multipliers(phiT.values, A.values[:-1], grid)
    return Trajectory(grid, P)


class _Gramian:
    """phi -> Lambda phi + eps phi, one adjoint and one forward march per call."""

    def __init__(self, A: np.ndarray, chi: np.ndarray, grid: Grid1D, eps: float):
        self.A, self.chi, self.grid, self.eps = A, chi, grid, eps
        self.zero = np.zeros(grid.nx)

    def controls(self, phi):
        _, Q = adjoint_multipliers(phi, self.A, self.grid)
        return Q * self.chi

    def __call__(self, phi):
        V = self.controls(phi)
        yT = _march_linear(self.zero, self.A, V, self.grid)[-1]
        return yT + self.eps * phi


def hum_functional(problem: LinearControlProblem, phiT: np.ndarray) -> float:
    """Value of the penalized dual functional at ``phiT``."""
    g = problem.grid
    A = np.ascontiguousarray(problem.A.values[:-1])
    chi = indicator(problem.window, g).values
    _, Q = adjoint_multipliers(phiT, A, g)
    yfree = _march_linear(problem.y0.values, A, problem.source_array(), g)[-1]
    qw = Q * chi
    return float(
        0.5 * g.dt * g.dx * np.sum(qw * qw)
        + 0.5 * problem.epsilon * g.dx * np.dot(phiT, phiT)
        + g.dx * np.dot(yfree, phiT)
    )


def hum_control(problem: LinearControlProblem, phi_guess: np.ndarray | None = None, cfl: bool = True) -> HUMSolution:
    """Conjugate gradients on the penalized dual problem.

    ``phi_guess`` warm-starts CG. Convergence means the gradient norm fell to
    ``cg_tol`` times its value at phi = 0 (the free terminal state).
    """
    g = problem.grid
    A = np.ascontiguousarray(problem.A.values[:-1])
    if cfl:
        check_cfl(g, float(np.max(np.abs(A))) if A.size else 0.0)
    chi = indicator(problem.window, g).values
    S = problem.source_array()
    yfree = _march_linear(problem.y0.values, A, S, g)[-1]
    op = _Gramian(A, chi, g, problem.epsilon)

    b = -yfree
    bnorm = float(np.linalg.norm(b))
    target = problem.cg_tol * bnorm
    phi = np.zeros(g.nx) if phi_guess is None else np.array(phi_guess, dtype=float)
    r = b - op(phi) if phi_guess is not None else b.copy()
    rr = float(r @ r)
    history = [math.sqrt(rr)]
    iters = 0
    if bnorm > 0 and math.sqrt(rr) > target:
        d = r.copy()
        while iters < problem.cg_max_iter:
            Ad = op(d)
            step = rr / float(d @ Ad)
            phi += step * d
            r -= step * Ad
            iters += 1
            rr_new = float(r @ r)
            history.append(math.sqrt(rr_new))
            if math.sqrt(rr_new) <= target:
                rr = rr_new
                break
            d = r + (rr_new / rr) * d
            rr = rr_new
    grad = math.sqrt(rr)
    converged = grad <= target or bnorm == 0.0

    V = np.zeros((g.nt + 1, g.nx))
    V[:-1] = op.controls(phi)
    Y = _march_linear(problem.y0.values, A, S + V[:-1], g)
    control = Trajectory(g, V)
    return HUMSolution(
        control=control,
        state=Trajectory(g, Y),
        terminal_L2=float(l2(Y[-1], g.dx)),
        control_L2=spacetime_norm(control, "L2_L2"),
        control_sup=float(np.max(np.abs(V))),
        cg_iters=iters,
        converged=converged,
        phiT=ScalarField(g, phi),
        grad_norm=grad,
        residual_history=history,
    )


@dataclass(frozen=True)
class CostRow:
    normA_inf: float
    T: float
    cost: float
    fitted_C1: float = float("nan")

    def as_dict(self):
        return {"normA_inf": self.normA_inf, "T": self.T, "cost": self.cost, "fitted_C1": self.fitted_C1}


def _cost_exponent(normA: float, T: float) -> float:
    return 1.0 + 1.0 / T + (1.0 + T) * normA ** 2


def fit_cost_exponent(rows: Sequence[CostRow]) -> tuple[float, float]:
    """Least-squares C1 in log(cost) = C1 (1 + 1/T + (1+T)||A||^2); returns (C1, rms residual)."""
    s = np.array([_cost_exponent(r.normA_inf, r.T) for r in rows])
    lc = np.log([r.cost for r in rows])
    c1 = float(np.dot(s, lc) / np.dot(s, s))
    res = float(np.sqrt(np.mean((lc - c1 * s) ** 2)))
    return c1, res


def cost_study(
    A_family: Sequence[Callable[[np.ndarray, np.ndarray], np.ndarray] | float],
    T_values: Sequence[float],
    window: ControlWindow,
    y0: Callable[[np.ndarray], np.ndarray],
    L: float = 1.0,
    nx: int = 31,
    steps_per_unit: int = 100,
    epsilon: float = 1e-6,
) -> tuple[list[CostRow], dict]:
    """Normalized control cost ||v||_2 / ||y0||_2 over (A, T) pairs.

    Entries of ``A_family`` are constants or callables ``A(x, t)``. Each T
    gets its own grid with ``steps_per_unit * T`` steps (at least 10).
    Returns the rows (with the common fitted C1 filled in) and a summary.
    """
    rows = []
    for T in T_values:
        g = Grid1D(L, T, nx, max(10, int(round(steps_per_unit * T))))
        y0f = ScalarField.from_function(g, y0)
        y0n = float(l2(y0f.values, g.dx))
        for Aspec in A_family:
            if callable(Aspec):
                At = Trajectory.from_function(g, Aspec)
            else:
                At = Trajectory(g, np.full((g.nt + 1, g.nx), float(Aspec)))
            sol = hum_control(LinearControlProblem(y0f, At, window, g, epsilon=epsilon))
            normA = float(np.max(np.abs(At.values[:-1])))
            rows.append(CostRow(normA, T, sol.control_L2 / y0n))
    if not rows:
        return [], {"fitted_C1": float("nan"), "residual": float("nan"), "C1_envelope": float("nan")}
    c1, res = fit_cost_exponent(rows)
    env = max(math.log(r.cost) / _cost_exponent(r.normA_inf, r.T) for r in rows)
    rows = [CostRow(r.normA_inf, r.T, r.cost, c1) for r in rows]
    return rows, {"fitted_C1": c1, "residual": res, "C1_envelope": env}
