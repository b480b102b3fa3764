"""Nonlinear null control of the Burgers-alpha system.

The fixed-point map freezes the transport coefficient at the filtered
previous iterate, null-controls the resulting linear system and returns the
controlled state. Iterates are compared in the space-time sup norm.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._backend import kernels
from .core import ControlWindow, Grid1D, ScalarField, Trajectory, h1, indicator, l2, spacetime_norm
from .dynamics import _checked, _march_burgers_alpha, _march_linear, check_cfl
from .errors import CFLError, DivergenceError, HypothesisError, SolverError
from .filter import _as_alpha, filter_values
from .hum import LinearControlProblem, hum_control

__all__ = [
    "IterationRecord",
    "FixedPointTrace",
    "NonlinearControlResult",
    "cutoff_control",
    "nonlinear_null_control",
    "largest_controllable_amplitude",
    "LargeTimeResult",
    "large_time_control",
    "decay_rate",
    "decay_constant",
    "LargeAlphaRow",
    "large_alpha_control",
    "BoundaryControlResult",
    "boundary_null_control",
    "max_jump",
]

MODES = ("direct_hum", "cutoff")


@dataclass(frozen=True)
class IterationRecord:
    residual_sup: float
    control_sup: float
    control_L2: float
    terminal_L2: float
    cg_iters: int = 0
    state_sup: float = 0.0


@dataclass
class FixedPointTrace:
    iterations: list[IterationRecord] = field(default_factory=list)
    converged: bool = False

    @property
    def iter_count(self) -> int:
        return len(self.iterations)

    @property
    def residuals(self) -> list[float]:
        return [r.residual_sup for r in self.iterations]

    @property
    def ball_radius(self) -> float:
        """Largest sup norm over all iterates: the radius R of a ball the map kept invariant."""
        return max((r.state_sup for r in self.iterations), default=0.0)

    def contraction_ratios(self) -> list[float]:
        res = self.residuals
        return [b / a for a, b in zip(res, res[1:]) if a > 0]


@dataclass(frozen=True, eq=False)
class NonlinearControlResult:
    """Control, replayed nonlinear state and fixed-point diagnostics.

    ``y`` and ``z`` come from marching the nonlinear system with ``v``;
    ``replay_gap`` is the sup distance between that replay and the last
    fixed-point iterate.
    """

    v: Trajectory
    y: Trajectory
    z: Trajectory
    trace: FixedPointTrace
    alpha: float
    window: ControlWindow
    mode: str
    epsilon: float
    terminal_L2: float
    terminal_tol: float
    replay_gap: float
    converged: bool

    @property
    def control_sup(self) -> float:
        return float(np.max(np.abs(self.v.values)))

    @property
    def control_L2(self) -> float:
        return spacetime_norm(self.v, "L2_L2")


def _transport(Ybar: np.ndarray, alpha: float, dx: float, nf: int) -> np.ndarray:
    """Filtered transport coefficient for every level of ``Ybar``."""
    nx = Ybar.shape[1]
    if nf == nx:
        return filter_values(Ybar, alpha, dx)
    A = np.zeros_like(Ybar)
    A[:, :nf] = filter_values(Ybar[:, :nf], alpha, dx, right_trace=Ybar[:, nf])
    A[:, nf] = Ybar[:, nf]
    return A


def _centered(Y: np.ndarray, dx: float) -> np.ndarray:
    P = np.pad(Y, [(0, 0)] * (Y.ndim - 1) + [(1, 1)])
    return (P[..., 2:] - P[..., :-2]) / (2.0 * dx)


def _second(Y: np.ndarray, dx: float) -> np.ndarray:
    P = np.pad(Y, [(0, 0)] * (Y.ndim - 1) + [(1, 1)])
    return (P[..., 2:] - 2.0 * P[..., 1:-1] + P[..., :-2]) / dx**2


def _check_eta_margin(eta: np.ndarray, grid: Grid1D, window: ControlWindow) -> None:
    # v at node i involves eta at i-1, i, i+1; all of them must vanish outside (a, b)
    near = np.maximum(eta, np.maximum(np.roll(eta, 1), np.roll(eta, -1)))
    near[0] = max(eta[0], eta[1])
    near[-1] = max(eta[-1], eta[-2])
    x = grid.x
    outside = (x <= window.a) | (x >= window.b)
    if np.any(near[outside] > 0):
        raise ValueError(
            f"grid too coarse for the cutoff ramps of window ({window.a}, {window.b}): "
            f"need dx <= {0.25 * min(window.a1 - window.a, window.b - window.b1):.4g}"
        )


def _cutoff(A: np.ndarray, y0: np.ndarray, window: ControlWindow, grid: Grid1D, epsilon: float,
            cg_tol: float, phi_guess=None):
    """Discrete cutoff construction; ``A`` has shape (nt, nx).

    Returns (V, Y, phiT, cg_iters) with V and Y of shape (nt+1, nx).
    """
    g = grid
    eta = window.eta(g.x)
    _check_eta_margin(eta, g, window)
    theta = window.theta(g.t, g.T)
    dtheta = np.diff(theta)[:, None]

    zeros = np.zeros((g.nt, g.nx))
    U = _march_linear(y0, A, zeros, g)
    # s = -L_h(theta * U): the exact discrete counterpart of -theta_t * u
    S = -(dtheta / g.dt) * (U[:-1] - g.dt * A * _centered(U[:-1], g.dx))

    inner = LinearControlProblem(
        ScalarField(g, np.zeros(g.nx)),
        Trajectory(g, np.vstack([A, A[-1:]])),
        window.inner,
        g,
        epsilon=epsilon,
        cg_tol=cg_tol,
        source=Trajectory(g, np.vstack([S, S[-1:]])),
    )
    sol = hum_control(inner, phi_guess=phi_guess, cfl=False)
    W = sol.state.values
    vhat = sol.control.values[:-1] * indicator(window.inner, g).values

    one_m_eta = 1.0 - eta
    Wc = one_m_eta * W
    comm = (
        -_second(Wc[1:], g.dx) + one_m_eta * _second(W[1:], g.dx)
        + A * (_centered(Wc[:-1], g.dx) - one_m_eta * _centered(W[:-1], g.dx))
    )
    V = np.zeros((g.nt + 1, g.nx))
    V[:-1] = -eta * S + one_m_eta * vhat + comm
    Y = theta[:, None] * U + Wc
    return V, Y, sol.phiT.values, sol.cg_iters


def cutoff_control(z: Trajectory, y0: ScalarField, window: ControlWindow, grid: Grid1D,
                   epsilon: float = 1e-6, cg_tol: float = 1e-10) -> tuple[Trajectory, Trajectory]:
    """Control supported strictly inside (a, b) built from a HUM control on (a2, b2).

    The state is split as theta(t) u + w with u uncontrolled; w is
    null-controlled from the inner window with source -theta_t u and then
    cut off by (1 - eta). The returned v makes the linear scheme with
    transport ``z`` reproduce y = theta u + (1 - eta) w exactly.
    """
    V, Y, _, _ = _cutoff(np.ascontiguousarray(z.values[:-1]), y0.values, window, grid, epsilon, cg_tol)
    return Trajectory(grid, V), Trajectory(grid, Y)


def nonlinear_null_control(
    y0: ScalarField,
    alpha,
    window: ControlWindow,
    grid: Grid1D,
    mode: str = "direct_hum",
    fp_tol: float = 1e-8,
    max_fp_iter: int = 50,
    epsilon: float = 1e-6,
    damping: float = 1.0,
    cg_tol: float = 1e-10,
    terminal_tol: float | None = None,
    cfl: bool = True,
    filter_nodes: int | None = None,
) -> NonlinearControlResult:
    """Picard iteration on the linearize-and-control map.

    Starts from the uncontrolled Burgers-alpha trajectory. ``damping`` in
    (0, 1] relaxes the update. ``filter_nodes`` restricts the filter to the
    first nodes (see :func:`boundary_null_control`). ``terminal_tol``
    defaults to 10 sqrt(eps) ||y0||_2.

    Raises
    ------
    DivergenceError
        Residual grew over 5 consecutive iterations.
    CFLError
        A transport iterate exceeded the step-size limit.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if not 0 < damping <= 1:
        raise ValueError(f"damping must lie in (0, 1], got {damping}")
    a = _as_alpha(alpha)
    g = grid
    nf = g.nx if filter_nodes is None else int(filter_nodes)
    if not 1 <= nf <= g.nx:
        raise ValueError(f"filter_nodes must be in [1, {g.nx}], got {nf}")
    y0v = y0.values
    if terminal_tol is None:
        terminal_tol = 10.0 * math.sqrt(epsilon) * float(l2(y0v, g.dx))

    chi = indicator(window, g).values
    Ybar, _ = _march_burgers_alpha(y0v, np.zeros((g.nt, g.nx)), a, g, nf)
    trace = FixedPointTrace()
    phi = None
    V = np.zeros((g.nt + 1, g.nx))
    Ynew = Ybar
    for _ in range(max_fp_iter):
        A = np.ascontiguousarray(_transport(Ybar, a, g.dx, nf)[:-1])
        if cfl:
            check_cfl(g, float(np.max(np.abs(A))))
        if mode == "direct_hum":
            prob = LinearControlProblem(y0, Trajectory(g, np.vstack([A, A[-1:]])), window, g,
                                        epsilon=epsilon, cg_tol=cg_tol)
            sol = hum_control(prob, phi_guess=phi, cfl=False)
            V, Ynew, phi, its = sol.control.values, sol.state.values, sol.phiT.values, sol.cg_iters
        else:
            V, Ynew, phi, its = _cutoff(A, y0v, window, g, epsilon, cg_tol, phi_guess=phi)
        if not np.all(np.isfinite(Ynew)):
            raise SolverError("fixed-point iterate is not finite")
        res = float(np.max(np.abs(Ynew - Ybar)))
        vw = V * chi
        trace.iterations.append(IterationRecord(
            residual_sup=res,
            control_sup=float(np.max(np.abs(vw))),
            control_L2=float(np.sqrt(g.dt * g.dx * np.sum(vw[:-1] ** 2))),
            terminal_L2=float(l2(Ynew[-1], g.dx)),
            cg_iters=its,
            state_sup=float(np.max(np.abs(Ynew))),
        ))
        if res <= fp_tol:
            trace.converged = True
            break
        rs = trace.residuals
        if len(rs) >= 6 and all(b > a_ for a_, b in zip(rs[-6:], rs[-5:])):
            raise DivergenceError(f"fixed-point residual grew for 5 consecutive iterations (last {res:.3e})", trace)
        Ybar = Ybar + damping * (Ynew - Ybar)

    Vc = V * chi
    Y, Z = _march_burgers_alpha(y0v, Vc[:-1], a, g, nf)
    if cfl:
        check_cfl(g, float(np.max(np.abs(Z[:-1]))))
    terminal = float(l2(Y[-1], g.dx))
    return NonlinearControlResult(
        v=Trajectory(g, Vc),
        y=Trajectory(g, Y),
        z=Trajectory(g, Z),
        trace=trace,
        alpha=a,
        window=window,
        mode=mode,
        epsilon=epsilon,
        terminal_L2=terminal,
        terminal_tol=terminal_tol,
        replay_gap=float(np.max(np.abs(Y - Ynew))),
        converged=trace.converged and terminal <= terminal_tol,
    )


def largest_controllable_amplitude(
    shape: ScalarField,
    alpha,
    window: ControlWindow,
    grid: Grid1D,
    lo: float = 0.0,
    hi: float = 10.0,
    rel_tol: float = 0.02,
    **control_kw,
) -> tuple[float, float]:
    """Bisect the amplitude c for which c * shape / ||shape||_inf is controlled.

    Assumes success at ``lo`` and returns (last success, first failure)
    once they are within ``rel_tol`` of each other; (hi, inf) if ``hi``
    itself succeeds. Any exception or non-converged result counts as failure.
    """
    peak = float(np.max(np.abs(shape.values)))
    if peak == 0:
        raise ValueError("shape must not vanish")
    unit = shape.values / peak

    def ok(c):
        try:
            return nonlinear_null_control(ScalarField(grid, c * unit), alpha, window, grid, **control_kw).converged
        except (RuntimeError, ValueError):
            return False

    if ok(hi):
        return hi, math.inf
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo, hi


def decay_rate(y0_sup: float, L: float) -> float:
    """Guaranteed uncontrolled decay rate 1/2 ((pi/L)^2 - ||y0||_inf^2)."""
    return 0.5 * ((math.pi / L) ** 2 - y0_sup**2)


def decay_constant(y0: ScalarField) -> float:
    """Prefactor C(y0) of the H^1 decay bound, from the energy estimates."""
    g = y0.grid
    s = float(np.max(np.abs(y0.values)))
    r = decay_rate(s, g.L)
    n2 = float(l2(y0.values, g.dx)) ** 2
    n1 = float(h1(y0.values, g.dx)) ** 2
    return math.sqrt((r + s * s) * (2.0 + s * s / r) * n2 + n1)


@dataclass(frozen=True, eq=False)
class LargeTimeResult:
    result: NonlinearControlResult
    coast_time: float
    coast_cap: float
    rate: float
    coast_t: np.ndarray
    coast_h1: np.ndarray
    control_t: np.ndarray
    control_values: np.ndarray

    @property
    def converged(self) -> bool:
        return self.result.converged


def large_time_control(
    y0: ScalarField,
    alpha,
    window: ControlWindow,
    grid_builder: Callable[[float], Grid1D] | None = None,
    delta_small: float = 0.05,
    epsilon: float = 1e-6,
    control_horizon: float = 1.0,
    steps_per_unit: int = 400,
    **control_kw,
) -> LargeTimeResult:
    """Coast with v = 0 until ||y||_H1 <= delta_small, then control on a unit horizon.

    The coast horizon is capped at 4 log(C/delta)/r with r the guaranteed
    decay rate. ``grid_builder(T)`` must keep the spatial grid of ``y0``.
    """
    g0 = y0.grid
    s = float(np.max(np.abs(y0.values)))
    if s >= math.pi / g0.L:
        raise HypothesisError(
            f"large-time control needs ||y0||_inf < pi/L = {math.pi / g0.L:.6g}; got {s:.6g}"
        )
    if grid_builder is None:
        def grid_builder(T):
            return Grid1D(g0.L, T, g0.nx, max(1, int(math.ceil(steps_per_unit * T))))
    r = decay_rate(s, g0.L)
    C = decay_constant(y0)
    cap = max(0.0, 4.0 * math.log(C / delta_small) / r)

    h0 = float(h1(y0.values, g0.dx))
    if h0 <= delta_small or cap == 0.0:
        t_star, y_start = 0.0, y0
        coast_t, coast_h = np.array([0.0]), np.array([h0])
    else:
        gc = grid_builder(cap)
        if gc.nx != g0.nx or gc.L != g0.L:
            raise ValueError("grid_builder must keep L and nx")
        Y, _ = _march_burgers_alpha(y0.values, np.zeros((gc.nt, gc.nx)), _as_alpha(alpha), gc)
        coast_h = h1(Y, gc.dx)
        below = np.nonzero(coast_h <= delta_small)[0]
        if below.size == 0:
            raise SolverError(
                f"H1 norm stayed above {delta_small} over the capped coast horizon {cap:.4g}"
            )
        k = int(below[0])
        t_star = float(gc.t[k])
        coast_t, coast_h = gc.t[: k + 1], coast_h[: k + 1]
        y_start = ScalarField(g0, Y[k])

    g2 = grid_builder(control_horizon)
    res = nonlinear_null_control(ScalarField(g2, y_start.values), alpha, window, g2, epsilon=epsilon, **control_kw)
    ct = np.concatenate([coast_t[:-1], t_star + g2.t])
    cv = np.vstack([np.zeros((coast_t.size - 1, g2.nx)), res.v.values])
    return LargeTimeResult(res, t_star, cap, r, coast_t, coast_h, ct, cv)


@dataclass(frozen=True)
class LargeAlphaRow:
    alpha: float
    converged: bool
    status: str
    fp_iters: int
    control_sup: float
    control_L2: float
    terminal_L2: float
    z_sup: float

    def as_dict(self):
        return dict(self.__dict__)


def large_alpha_control(
    y0: ScalarField,
    window: ControlWindow,
    grid: Grid1D,
    alpha_list: Sequence[float],
    epsilon: float = 1e-6,
    **control_kw,
) -> tuple[list[LargeAlphaRow], float]:
    """Run the nonlinear control for each alpha of a decreasing list.

    Failures are recorded, not raised. Returns the rows and the empirical
    alpha_0: the smallest alpha such that every listed alpha >= it
    succeeded (inf if the largest one already fails).
    """
    alphas = list(alpha_list)
    if any(b >= a for a, b in zip(alphas, alphas[1:])):
        raise ValueError("alpha_list must be strictly decreasing")
    rows = []
    for a in alphas:
        try:
            res = nonlinear_null_control(y0, a, window, grid, epsilon=epsilon, **control_kw)
        except DivergenceError as exc:
            last = exc.trace.iterations[-1] if exc.trace and exc.trace.iterations else None
            rows.append(LargeAlphaRow(a, False, "diverged", exc.trace.iter_count if exc.trace else 0,
                                      last.control_sup if last else math.nan,
                                      last.control_L2 if last else math.nan,
                                      last.terminal_L2 if last else math.nan, math.nan))
            continue
        except CFLError:
            rows.append(LargeAlphaRow(a, False, "cfl", 0, math.nan, math.nan, math.nan, math.nan))
            continue
        except SolverError:
            rows.append(LargeAlphaRow(a, False, "blowup", 0, math.nan, math.nan, math.nan, math.nan))
            continue
        if res.converged:
            status = "converged"
        elif not res.trace.converged:
            status = "max_iter"
        else:
            status = "terminal"
        rows.append(LargeAlphaRow(a, res.converged, status, res.trace.iter_count, res.control_sup,
                                  res.control_L2, res.terminal_L2, float(np.max(np.abs(res.z.values)))))
    alpha0 = math.inf
    for row in rows:
        if not row.converged:
            break
        alpha0 = row.alpha
    return rows, alpha0


@dataclass(frozen=True, eq=False)
class BoundaryControlResult:
    """Boundary control u(t) = y_ext(L, t) and the state restricted to (0, L)."""

    u: np.ndarray
    t: np.ndarray
    y: Trajectory
    z: Trajectory
    terminal_L2: float
    terminal_tol: float
    replay_residual: float
    extended: NonlinearControlResult

    @property
    def converged(self) -> bool:
        return self.extended.trace.converged and self.terminal_L2 <= self.terminal_tol


def max_jump(u: np.ndarray) -> float:
    """Largest difference between consecutive samples."""
    return float(np.max(np.abs(np.diff(u)))) if len(u) > 1 else 0.0


def replay_boundary_system(y0: np.ndarray, u: np.ndarray, alpha: float, grid: Grid1D) -> tuple[np.ndarray, np.ndarray]:
    """March the boundary-controlled system on (0, L) with y(L, t) = z(L, t) = u(t).

    Returns (Y, Z), each (nt+1, nx). Independent of the extended solver:
    one filter and one implicit solve per step, Dirichlet data folded
    into the right-hand sides.
    """
    g = grid
    nx, dx, dt = g.nx, g.dx, g.dt
    r = dt / dx**2
    off = np.full(nx - 1, -r)
    diag = np.full(nx, 1.0 + 2.0 * r)
    Y = np.empty((g.nt + 1, nx))
    Z = np.empty((g.nt + 1, nx))
    y = np.array(y0, dtype=float)
    Y[0] = y
    for n in range(g.nt + 1):
        Z[n] = filter_values(y, alpha, dx, right_trace=u[n]) if alpha > 0 else y
        if n == g.nt:
            break
        ypad = np.concatenate([[0.0], y, [u[n]]])
        dy = (ypad[2:] - ypad[:-2]) / (2.0 * dx)
        rhs = y - dt * Z[n] * dy
        rhs[-1] += r * u[n + 1]
        y = kernels.thomas(off, diag, off, rhs)
        Y[n + 1] = y
    return Y, Z


def boundary_null_control(
    y0: ScalarField,
    alpha,
    L: float | None = None,
    L_ext: float | None = None,
    window_ext: ControlWindow | None = None,
    grid: Grid1D | None = None,
    epsilon: float = 1e-6,
    **control_kw,
) -> BoundaryControlResult:
    """Boundary null control at x = L by extension to (0, L_ext).

    The distributed problem is solved on the extended grid (same dx) with
    the filter living on (0, L) and carrying the right trace z(L) = y(L);
    the transport coefficient vanishes beyond L. Defaults: L_ext = 1.5 L and
    window (1.1 L, 1.4 L).
    """
    grid = y0.grid if grid is None else grid
    L = grid.L if L is None else L
    if abs(L - grid.L) > 1e-12 * L:
        raise ValueError("L must match the grid")
    L_ext = 1.5 * L if L_ext is None else L_ext
    window_ext = ControlWindow(1.1 * L, 1.4 * L) if window_ext is None else window_ext
    if not L < window_ext.a < window_ext.b < L_ext:
        raise ValueError(f"need L < a < b < L_ext, got L={L}, window=({window_ext.a}, {window_ext.b}), L_ext={L_ext}")
    dx = grid.dx
    n_int = round(L_ext / dx)
    if abs(n_int * dx - L_ext) > 1e-9 * L_ext:
        raise ValueError(f"L_ext = {L_ext} is not a multiple of dx = {dx}")
    a = _as_alpha(alpha)
    gext = Grid1D(n_int * dx, grid.T, n_int - 1, grid.nt)
    yext = np.zeros(gext.nx)
    yext[: grid.nx] = y0.values
    eps_tol = control_kw.pop("terminal_tol", None)
    res = nonlinear_null_control(ScalarField(gext, yext), a, window_ext, gext, epsilon=epsilon,
                                 filter_nodes=grid.nx, terminal_tol=math.inf, **control_kw)
    Yext = res.y.values
    u = Yext[:, grid.nx].copy()
    Y = Yext[:, : grid.nx]
    Z = res.z.values[:, : grid.nx]
    Yr, Zr = replay_boundary_system(y0.values, u, a, grid)
    replay = max(float(np.max(np.abs(Yr - Y))), float(np.max(np.abs(Zr - Z))))
    terminal = float(l2(Y[-1], dx))
    tol = 10.0 * math.sqrt(epsilon) * float(l2(y0.values, dx)) if eps_tol is None else eps_tol
    return BoundaryControlResult(u, grid.t, Trajectory(grid, Y), Trajectory(grid, Z), terminal, tol, replay, res)
