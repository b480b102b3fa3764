"""Helmholtz filter z - alpha^2 z_xx = y with Dirichlet data."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .core import ScalarField, Trajectory

__all__ = [
    "AlphaParam",
    "apply_filter",
    "apply_filter_with_trace",
    "filter_trajectory",
    "filter_values",
    "damping_factor",
]


@dataclass(frozen=True)
class AlphaParam:
    """Filter length; ``alpha == 0`` is the unfiltered Burgers limit."""

    alpha: float

    def __post_init__(self):
        if not (self.alpha >= 0 and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be finite and >= 0, got {self.alpha}")

    def __float__(self):
        return float(self.alpha)


def _as_alpha(alpha) -> float:
    return float(AlphaParam(float(alpha)))


def filter_values(y: np.ndarray, alpha: float, dx: float, right_trace=0.0) -> np.ndarray:
    """Array-level filter along the last axis.

    ``y`` may be 1-D (one snapshot) or 2-D (rows are time levels). For 2-D
    input ``right_trace`` may be a per-row array.
    """
    y = np.asarray(y, dtype=float)
    if alpha == 0.0:
        return y.copy()
    n = y.shape[-1]
    r = (alpha / dx) ** 2
    off = np.full(n - 1, -r)
    diag = np.full(n, 1.0 + 2.0 * r)
    rhs = y.T.copy()
    rhs[-1] = rhs[-1] + r * np.asarray(right_trace, dtype=float)
    return np.ascontiguousarray(kernels.thomas(off, diag, off, rhs).T)


def damping_factor(k: int, alpha: float, L: float) -> float:
    """Continuous damping of the k-th Dirichlet sine mode."""
    return 1.0 / (1.0 + (alpha * k * math.pi / L) ** 2)


def apply_filter(y: ScalarField, alpha) -> ScalarField:
    """Solve z - alpha^2 z_xx = y with z = 0 at both ends."""
    a = _as_alpha(alpha)
    return ScalarField(y.grid, filter_values(y.values, a, y.grid.dx))


def apply_filter_with_trace(y: ScalarField, alpha, right_trace: float) -> ScalarField:
    """Same as :func:`apply_filter` but with z(L) = ``right_trace``."""
    a = _as_alpha(alpha)
    return ScalarField(y.grid, filter_values(y.values, a, y.grid.dx, right_trace))


def filter_trajectory(Y: Trajectory, alpha) -> Trajectory:
    """Snapshot-wise filter; there is no coupling in time."""
    a = _as_alpha(alpha)
    return Trajectory(Y.grid, filter_values(Y.values, a, Y.grid.dx))
