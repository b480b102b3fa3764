"""Scripted studies: alpha -> 0 limits, decay-rate fits and report emission."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .control import decay_rate, nonlinear_null_control
from .core import ControlWindow, Grid1D, ScalarField, Trajectory, h1, l2, spacetime_norm
from .dynamics import ForcingSpec, _march_linear, solve_burgers_alpha
from .io import write_manifest, write_table

__all__ = [
    "FAMILIES",
    "initial_datum",
    "load_samples",
    "SweepSpec",
    "ConvergenceRow",
    "CONVERGENCE_COLUMNS",
    "DECAY_COLUMNS",
    "uncontrolled_limit_study",
    "controlled_limit_study",
    "DecayRow",
    "decay_study",
    "monotone_with_noise",
    "emit_report",
    "map_rows",
]

FAMILIES = ("sine", "bump", "sawtooth")
CONVERGENCE_COLUMNS = ("alpha", "err_y", "err_z", "control_sup", "control_L2", "terminal_L2")
DECAY_COLUMNS = ("y0_sup", "r_theory", "r_fitted", "C_fitted")


def _sawtooth(s: np.ndarray, terms: int = 16) -> np.ndarray:
    # Lanczos-smoothed Fourier sine series of the sawtooth s -> s on (0, 1)
    out = np.zeros_like(s)
    for k in range(1, terms + 1):
        sigma = np.sinc(k / (terms + 1))
        out += sigma * (-1) ** (k + 1) * np.sin(k * np.pi * s) / k
    return out


def initial_datum(kind: str, amplitude: float, grid: Grid1D, mode: int = 1) -> ScalarField:
    """Named initial data scaled so that the nodal sup norm equals ``amplitude``.

    ``sine`` is sin(mode pi x / L); ``bump`` is the C-infinity bump centred at
    L/2 with half-width L/4; ``sawtooth`` is a Lanczos-smoothed sawtooth.
    """
    s = grid.x / grid.L
    if kind == "sine":
        shape = np.sin(mode * np.pi * s)
    elif kind == "bump":
        u = (s - 0.5) / 0.25
        inside = np.abs(u) < 1
        shape = np.zeros_like(s)
        shape[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
    elif kind == "sawtooth":
        shape = _sawtooth(s)
    else:
        raise ValueError(f"unknown initial-datum family {kind!r}; choose from {FAMILIES}")
    peak = float(np.max(np.abs(shape)))
    if amplitude == 0 or peak == 0:
        return ScalarField.zeros(grid)
    return ScalarField(grid, amplitude * shape / peak)


def load_samples(path, grid: Grid1D) -> ScalarField:
    """Raw nodal values, one per line (or comma separated), ``nx`` of them."""
    vals = np.loadtxt(path, delimiter=",", ndmin=1).ravel()
    if vals.size != grid.nx:
        raise ValueError(f"{path}: expected {grid.nx} samples, found {vals.size}")
    return ScalarField(grid, vals)


@dataclass(frozen=True, eq=False)
class SweepSpec:
    """One alpha sweep.

    ``alphas`` must be strictly decreasing and positive, optionally ending
    with an exact 0 (the Burgers row).
    """

    alphas: tuple
    y0: ScalarField
    grid: Grid1D
    window: ControlWindow = field(default_factory=lambda: ControlWindow(0.3, 0.7))
    forcing: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    mode: str = "direct_hum"
    epsilon: float = 1e-6
    fp_tol: float = 1e-8
    max_fp_iter: int = 50
    output: str | None = None
    workers: int = 1

    def __post_init__(self):
        a = tuple(float(x) for x in self.alphas)
        object.__setattr__(self, "alphas", a)
        if not a:
            raise ValueError("alphas must not be empty")
        body = a[:-1] if a[-1] == 0.0 else a
        if any(x <= 0 for x in body):
            raise ValueError("alphas must be positive (a trailing 0 is allowed)")
        if any(b >= x for x, b in zip(a, a[1:])):
            raise ValueError("alphas must be strictly decreasing")
        if self.y0.grid != self.grid:
            raise ValueError("y0 lives on a different grid")

    def forcing_spec(self) -> ForcingSpec | None:
        if self.forcing is None:
            return None
        return ForcingSpec(body_force=Trajectory.from_function(self.grid, self.forcing))

    def manifest(self) -> dict:
        g = self.grid
        return {
            "L": g.L, "T": g.T, "nx": g.nx, "nt": g.nt,
            "alphas": " ".join(f"{a:.17g}" for a in self.alphas),
            "window": f"{self.window.a:.17g} {self.window.b:.17g}",
            "mode": self.mode, "epsilon": self.epsilon, "fp_tol": self.fp_tol,
            "max_fp_iter": self.max_fp_iter, "y0_sup": float(np.max(np.abs(self.y0.values))),
            "forcing": "none" if self.forcing is None else "custom",
        }


@dataclass(frozen=True)
class ConvergenceRow:
    """Errors against the alpha = 0 reference plus diagnostics.

    ``ineq_lhs``/``ineq_rhs`` are the two sides of
    ||(z - y_ref)_x||^2 <= ||(y - y_ref)_x||^2 + alpha^2 ||y_ref,xx||^2;
    ``gap_zy`` is ||z - y||_{L2(L2)}; ``v_diff_L2`` is ||v_alpha - v_0||.
    """

    alpha: float
    err_y: float
    err_z: float
    control_sup: float = 0.0
    control_L2: float = 0.0
    terminal_L2: float = 0.0
    ineq_lhs: float = math.nan
    ineq_rhs: float = math.nan
    yref_H2: float = math.nan
    gap_zy: float = math.nan
    v_diff_L2: float = math.nan
    converged: bool = True

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _second_l2h2(Y: np.ndarray, g: Grid1D) -> float:
    P = np.pad(Y[:-1], [(0, 0), (1, 1)])
    D2 = (P[:, 2:] - 2 * P[:, 1:-1] + P[:, :-2]) / g.dx**2
    return float(np.sqrt(g.dt * g.dx * np.sum(D2 * D2)))


def _row(alpha, Y, Z, Yref, g, **extra) -> ConvergenceRow:
    err_y = spacetime_norm(Trajectory(g, Y - Yref), "L2_H1")
    err_z = spacetime_norm(Trajectory(g, Z - Yref), "L2_H1")
    h2 = _second_l2h2(Yref, g)
    return ConvergenceRow(
        alpha=alpha,
        err_y=err_y,
        err_z=err_z,
        terminal_L2=float(l2(Y[-1], g.dx)),
        ineq_lhs=err_z**2,
        ineq_rhs=err_y**2 + alpha**2 * h2**2,
        yref_H2=h2,
        gap_zy=spacetime_norm(Trajectory(g, Z - Y), "L2_L2"),
        **extra,
    )


def map_rows(fn: Callable, items: Sequence, workers: int = 1) -> list:
    """Ordered map; ``workers > 1`` fans out over processes."""
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


class _Uncontrolled:
    def __init__(self, spec: SweepSpec):
        self.y0, self.grid, self.forcing = spec.y0, spec.grid, spec.forcing_spec()

    def __call__(self, alpha):
        y, z = solve_burgers_alpha(self.y0, self.forcing, alpha, self.grid)
        return y.values, z.values


def uncontrolled_limit_study(spec: SweepSpec) -> list[ConvergenceRow]:
    """Distance of (y_alpha, z_alpha) to the same-grid Burgers solution, per alpha."""
    g = spec.grid
    run = _Uncontrolled(spec)
    Yref, _ = run(0.0)
    out = map_rows(run, list(spec.alphas), spec.workers)
    return [_row(a, Y, Z, Yref, g) for a, (Y, Z) in zip(spec.alphas, out)]


class _Controlled:
    def __init__(self, spec: SweepSpec):
        self.spec = spec

    def __call__(self, alpha):
        s = self.spec
        try:
            return nonlinear_null_control(s.y0, alpha, s.window, s.grid, mode=s.mode, fp_tol=s.fp_tol,
                                          max_fp_iter=s.max_fp_iter, epsilon=s.epsilon)
        except (RuntimeError, ValueError) as exc:
            return exc


def controlled_limit_study(spec: SweepSpec) -> tuple[list[ConvergenceRow], dict]:
    """Null-control every alpha and compare with the controlled Burgers (alpha = 0) pair.

    Failed alphas are left out of the rows and listed in the report. The
    report carries the control sup-norm spread, monotonicity flags and the
    largest terminal norm; control differences are descriptive only.
    """
    g = spec.grid
    run = _Controlled(spec)
    ref = run(0.0)
    if isinstance(ref, Exception):
        raise ref
    alphas = [a for a in spec.alphas if a > 0]
    results = map_rows(run, alphas, spec.workers)
    rows, failed = [], []
    for a, res in zip(alphas, results):
        if isinstance(res, Exception):
            failed.append((a, f"{type(res).__name__}: {res}"))
            continue
        rows.append(_row(
            a, res.y.values, res.z.values, ref.y.values, g,
            control_sup=res.control_sup, control_L2=res.control_L2,
            v_diff_L2=spacetime_norm(Trajectory(g, res.v.values - ref.v.values), "L2_L2"),
            converged=res.converged,
        ))
    if spec.alphas[-1] == 0.0:
        rows.append(ConvergenceRow(
            0.0, 0.0, 0.0, ref.control_sup, ref.control_L2, ref.terminal_L2,
            ineq_lhs=0.0, ineq_rhs=0.0, gap_zy=0.0, v_diff_L2=0.0, converged=ref.converged,
        ))
    sups = [r.control_sup for r in rows if r.alpha > 0]
    y0n = float(l2(spec.y0.values, g.dx))
    report = {
        "control_sup_ratio": (max(sups) / min(sups)) if sups and min(sups) > 0 else (1.0 if sups and max(sups) == 0 else math.nan),
        "monotone_err_y": monotone_with_noise([r.err_y for r in rows]),
        "monotone_err_z": monotone_with_noise([r.err_z for r in rows]),
        "max_terminal_L2": max([r.terminal_L2 for r in rows], default=0.0),
        "terminal_tol": 10.0 * math.sqrt(spec.epsilon) * y0n,
        "all_converged": all(r.converged for r in rows) and not failed,
        "failed": failed,
        "reference_control_sup": ref.control_sup,
        "reference_terminal_L2": ref.terminal_L2,
    }
    return rows, report


def monotone_with_noise(values: Sequence[float], noise: float = 0.05, inversions: int = 1) -> bool:
    """True if the sequence is non-increasing up to ``inversions`` upticks of relative size <= ``noise``."""
    ups = 0
    for prev, cur in zip(values, values[1:]):
        if cur > prev:
            if prev == 0 or (cur - prev) / prev > noise:
                return False
            ups += 1
    return ups <= inversions


@dataclass(frozen=True)
class DecayRow:
    y0_sup: float
    r_theory: float
    r_fitted: float
    C_fitted: float
    flag: str = ""

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _fit_tail(t: np.ndarray, norms: np.ndarray) -> tuple[float, float]:
    half = t.size // 2
    tt, nn = t[half:], norms[half:]
    keep = nn > 0
    slope, icpt = np.polyfit(tt[keep], np.log(nn[keep]), 1)
    return float(-slope), float(math.exp(icpt))


def decay_study(y0_family: Iterable[ScalarField], alpha, grid: Grid1D, horizon: float | None = None,
                transport: bool = True) -> list[DecayRow]:
    """Fit the uncontrolled H1 decay rate over the tail half of the horizon.

    ``grid`` fixes L, nx and the step; ``horizon`` (default grid.T) sets the
    final time. ``transport=False`` switches the nonlinearity off (pure heat
    flow). Zero data are skipped; a non-positive fitted rate is flagged.
    """
    rows = []
    for y0 in y0_family:
        s = float(np.max(np.abs(y0.values)))
        if s == 0.0:
            continue
        if s >= math.pi / grid.L:
            raise ValueError(f"decay study needs ||y0||_inf < pi/L, got {s}")
        T = grid.T if horizon is None else horizon
        g = Grid1D(grid.L, T, grid.nx, max(1, int(round(T / grid.dt))))
        y0g = ScalarField(g, y0.values)
        if transport:
            Y, _ = solve_burgers_alpha(y0g, None, alpha, g)
            Y = Y.values
        else:
            Y = _march_linear(y0g.values, np.zeros((g.nt, g.nx)), np.zeros((g.nt, g.nx)), g)
        norms = h1(Y, g.dx)
        r_fit, c_fit = _fit_tail(g.t, norms)
        flag = "" if r_fit > 0 else "non-decaying"
        rows.append(DecayRow(s, decay_rate(s, g.L), r_fit, c_fit, flag))
    return rows


def _rows_as_dicts(rows) -> list[Mapping]:
    return [r if isinstance(r, Mapping) else r.as_dict() for r in rows]


def emit_report(rows, path, columns: Sequence[str] = CONVERGENCE_COLUMNS, manifest: Mapping | None = None,
                manifest_sections: Mapping[str, Mapping] | None = None) -> list[Path]:
    """Write ``rows`` as CSV at ``path`` and, if given, a sibling ``.manifest`` file."""
    path = Path(path)
    written = [write_table(path, columns, _rows_as_dicts(rows))]
    if manifest is not None:
        written.append(write_manifest(path.with_suffix(".manifest"), manifest, manifest_sections))
    return written
