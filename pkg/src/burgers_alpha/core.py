"""Grids, fields, discrete norms and control-window geometry."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "Grid1D",
    "ScalarField",
    "Trajectory",
    "ControlWindow",
    "smoothstep",
    "norm",
    "spacetime_norm",
    "indicator",
    "l2",
    "h1",
]


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid of ``nx`` interior nodes on (0, L) and ``nt`` steps on (0, T)."""

    L: float
    T: float
    nx: int
    nt: int

    def __post_init__(self):
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ValueError(f"L must be positive, got {self.L}")
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ValueError(f"T must be positive, got {self.T}")
        if int(self.nx) != self.nx or self.nx < 3:
            raise ValueError(f"nx must be an integer >= 3, got {self.nx}")
        if int(self.nt) != self.nt or self.nt < 1:
            raise ValueError(f"nt must be an integer >= 1, got {self.nt}")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "nt", int(self.nt))

    @property
    def dx(self) -> float:
        return self.L / (self.nx + 1)

    @property
    def dt(self) -> float:
        return self.T / self.nt

    @property
    def x(self) -> np.ndarray:
        """Interior node coordinates."""
        return self.dx * np.arange(1, self.nx + 1)

    @property
    def t(self) -> np.ndarray:
        """Time levels 0..nt."""
        return self.dt * np.arange(self.nt + 1)

    def with_time(self, T: float, nt: int) -> "Grid1D":
        return Grid1D(self.L, T, self.nx, nt)


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Values at the interior nodes of ``grid``; Dirichlet zeros are implicit."""

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        vals = _frozen(self.values)
        if vals.shape != (self.grid.nx,):
            raise ValueError(f"field needs {self.grid.nx} values, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grid: Grid1D, fn: Callable[[np.ndarray], np.ndarray]) -> "ScalarField":
        return cls(grid, np.broadcast_to(fn(grid.x), (grid.nx,)))

    @classmethod
    def zeros(cls, grid: Grid1D) -> "ScalarField":
        return cls(grid, np.zeros(grid.nx))

    def __mul__(self, c: float) -> "ScalarField":
        return ScalarField(self.grid, c * self.values)

    __rmul__ = __mul__

    def __add__(self, other: "ScalarField") -> "ScalarField":
        return ScalarField(self.grid, self.values + other.values)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        return ScalarField(self.grid, self.values - other.values)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Space-time array of shape (nt+1, nx); row n is time level n."""

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        vals = _frozen(self.values)
        shape = (self.grid.nt + 1, self.grid.nx)
        if vals.shape != shape:
            raise ValueError(f"trajectory needs shape {shape}, got {vals.shape}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, grid: Grid1D) -> "Trajectory":
        return cls(grid, np.zeros((grid.nt + 1, grid.nx)))

    @classmethod
    def constant(cls, field: ScalarField) -> "Trajectory":
        g = field.grid
        return cls(g, np.broadcast_to(field.values, (g.nt + 1, g.nx)))

    @classmethod
    def from_function(cls, grid: Grid1D, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> "Trajectory":
        X, Tt = np.meshgrid(grid.x, grid.t)
        return cls(grid, np.broadcast_to(fn(X, Tt), (grid.nt + 1, grid.nx)))

    def __len__(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, n: int) -> ScalarField:
        return ScalarField(self.grid, self.values[n])

    @property
    def snapshots(self) -> list[ScalarField]:
        return [self[n] for n in range(len(self))]

    @property
    def terminal(self) -> ScalarField:
        return self[-1]


def smoothstep(s):
    """C^2 quintic ramp: 0 for s <= 0, 1 for s >= 1, monotone in between."""
    s = np.clip(s, 0.0, 1.0)
    return s * s * s * (10.0 + s * (-15.0 + 6.0 * s))


def _dsmoothstep(s):
    inside = (s > 0.0) & (s < 1.0)
    s = np.clip(s, 0.0, 1.0)
    return np.where(inside, 30.0 * s * s * (1.0 - s) ** 2, 0.0)


@dataclass(frozen=True)
class ControlWindow:
    """Control interval (a, b) with nested refinements.

    ``a1, b1`` and ``a2, b2`` are the primed and double-primed endpoints:
    a < a1 < a2 < b2 < b1 < b. The spatial cutoff ``eta`` is 1 on a
    neighbourhood of [a1, b1] and vanishes outside [a + g, b - g] where
    ``g`` is a quarter of the outer gap.
    """

    a: float
    b: float
    a1: float | None = None
    b1: float | None = None
    a2: float | None = None
    b2: float | None = None

    def __post_init__(self):
        w = self.b - self.a
        if not (self.a >= 0 and w > 0):
            raise ValueError(f"need 0 <= a < b, got ({self.a}, {self.b})")
        for name, frac in (("a1", 0.2), ("a2", 0.3)):
            if getattr(self, name) is None:
                object.__setattr__(self, name, self.a + frac * w)
        for name, frac in (("b1", 0.2), ("b2", 0.3)):
            if getattr(self, name) is None:
                object.__setattr__(self, name, self.b - frac * w)
        if not (self.a < self.a1 < self.a2 < self.b2 < self.b1 < self.b):
            raise ValueError(
                "nested endpoints must satisfy a < a1 < a2 < b2 < b1 < b, got "
                f"{(self.a, self.a1, self.a2, self.b2, self.b1, self.b)}"
            )

    @property
    def inner(self) -> "ControlWindow":
        """The (a2, b2) sub-window as a plain window."""
        return ControlWindow(self.a2, self.b2)

    def _ramps(self):
        gl = 0.25 * (self.a1 - self.a)
        gr = 0.25 * (self.b - self.b1)
        return (self.a + gl, self.a1 - gl), (self.b1 + gr, self.b - gr)

    def eta(self, x):
        (l0, l1), (r0, r1) = self._ramps()
        x = np.asarray(x, dtype=float)
        return smoothstep((x - l0) / (l1 - l0)) * smoothstep((r1 - x) / (r1 - r0))

    @property
    def eta_support(self) -> tuple[float, float]:
        (l0, _), (_, r1) = self._ramps()
        return l0, r1

    def theta(self, t, T: float):
        """Time cutoff: 1 on [0, T/4], 0 on [3T/4, T]."""
        t = np.asarray(t, dtype=float)
        return 1.0 - smoothstep((t - 0.25 * T) / (0.5 * T))

    def dtheta(self, t, T: float):
        t = np.asarray(t, dtype=float)
        return -_dsmoothstep((t - 0.25 * T) / (0.5 * T)) / (0.5 * T)


def l2(v: np.ndarray, dx: float) -> np.ndarray:
    """Discrete L2 norm along the last axis."""
    return np.sqrt(dx * np.sum(np.square(v), axis=-1))


def h1(v: np.ndarray, dx: float) -> np.ndarray:
    """Discrete H^1_0 seminorm along the last axis (forward differences incl. both boundary gaps)."""
    pad = [(0, 0)] * (np.ndim(v) - 1) + [(1, 1)]
    d = np.diff(np.pad(v, pad), axis=-1) / dx
    return np.sqrt(dx * np.sum(np.square(d), axis=-1))


def norm(field: ScalarField, kind: str = "L2") -> float:
    """Discrete ``sup``, ``L2`` or ``H1`` norm of a field."""
    v, dx = field.values, field.grid.dx
    if kind == "sup":
        return float(np.max(np.abs(v)))
    if kind == "L2":
        return float(l2(v, dx))
    if kind == "H1":
        return float(h1(v, dx))
    raise ValueError(f"unknown norm kind {kind!r}")


def spacetime_norm(traj: Trajectory, kind: str = "L2_L2") -> float:
    """Time-composite norms.

    Time integrals use the left rectangle rule over levels 0..nt-1, the
    levels at which the scheme consumes sources; ``sup`` and ``Linf_L2``
    range over all nt+1 levels.
    """
    v, g = traj.values, traj.grid
    if kind == "sup":
        return float(np.max(np.abs(v)))
    if kind == "Linf_L2":
        return float(np.max(l2(v, g.dx)))
    if kind == "L2_L2":
        return float(np.sqrt(g.dt * np.sum(l2(v[:-1], g.dx) ** 2)))
    if kind == "L2_H1":
        return float(np.sqrt(g.dt * np.sum(h1(v[:-1], g.dx) ** 2)))
    raise ValueError(f"unknown space-time norm kind {kind!r}")


def indicator(window: ControlWindow, grid: Grid1D) -> ScalarField:
    """1 at nodes strictly inside (a, b), 0 elsewhere."""
    if window.b > grid.L:
        raise ValueError(f"window ({window.a}, {window.b}) leaves the domain (0, {grid.L})")
    x = grid.x
    return ScalarField(grid, ((x > window.a) & (x < window.b)).astype(float))
