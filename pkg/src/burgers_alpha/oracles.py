"""Dense linear-algebra replicas of the discrete schemes.

These assemble the full matrices with numpy and never call the march
kernels; they exist to validate the fast paths on small grids.
"""
from __future__ import annotations

import numpy as np

from .core import Grid1D

__all__ = [
    "second_difference",
    "centered_difference",
    "dense_filter",
    "dense_forward",
    "dense_terminal_maps",
    "dense_hum",
]


def second_difference(n: int, dx: float) -> np.ndarray:
    D = (np.diag(np.full(n - 1, 1.0), -1) - 2.0 * np.eye(n) + np.diag(np.full(n - 1, 1.0), 1)) / dx**2
    return D


def centered_difference(n: int, dx: float) -> np.ndarray:
    return (np.diag(np.full(n - 1, 1.0), 1) - np.diag(np.full(n - 1, 1.0), -1)) / (2.0 * dx)


def dense_filter(y: np.ndarray, alpha: float, dx: float) -> np.ndarray:
    n = y.shape[-1]
    return np.linalg.solve(np.eye(n) - alpha**2 * second_difference(n, dx), y)


def _blocks(A: np.ndarray, grid: Grid1D):
    n = grid.nx
    M = np.eye(n) - grid.dt * second_difference(n, grid.dx)
    C = centered_difference(n, grid.dx)
    B = [np.eye(n) - grid.dt * np.diag(A[k]) @ C for k in range(grid.nt)]
    return M, B


def _system(A: np.ndarray, grid: Grid1D) -> np.ndarray:
    # unknowns y[1..nt]; block row k: M y[k+1] - B_k y[k] = rhs_k
    n, nt = grid.nx, grid.nt
    M, B = _blocks(A, grid)
    big = np.zeros((nt * n, nt * n))
    for k in range(nt):
        big[k * n:(k + 1) * n, k * n:(k + 1) * n] = M
        if k > 0:
            big[k * n:(k + 1) * n, (k - 1) * n:k * n] = -B[k]
    return big, B


def dense_forward(y0: np.ndarray, A: np.ndarray, S: np.ndarray, grid: Grid1D) -> np.ndarray:
    """Solve the whole space-time system at once; returns (nt+1, nx)."""
    n, nt = grid.nx, grid.nt
    big, B = _system(A, grid)
    rhs = grid.dt * np.asarray(S, dtype=float).reshape(nt * n).copy()
    rhs[:n] += B[0] @ y0
    Y = np.linalg.solve(big, rhs).reshape(nt, n)
    return np.vstack([y0, Y])


def dense_terminal_maps(A: np.ndarray, grid: Grid1D):
    """Matrices (E0, K) with y[nt] = E0 y0 + K vec(S)."""
    n, nt = grid.nx, grid.nt
    big, B = _system(A, grid)
    inv_last = np.linalg.solve(big.T, np.eye(nt * n)[:, (nt - 1) * n:]).T
    K = grid.dt * inv_last
    E0 = inv_last[:, :n] @ B[0]
    return E0, K


def dense_hum(y0: np.ndarray, A: np.ndarray, chi: np.ndarray, grid: Grid1D, eps: float, S=None):
    """Direct solve of (K K^T / dt + eps I) phi = -y_free(T).

    Returns ``(V, phi, yT)`` with ``V`` of shape (nt, nx).
    """
    n, nt = grid.nx, grid.nt
    E0, K = dense_terminal_maps(A, grid)
    S = np.zeros(nt * n) if S is None else np.asarray(S, dtype=float).reshape(nt * n)
    yfree = E0 @ y0 + K @ S
    mask = np.tile(chi, nt)
    Kw = K * mask
    lam = Kw @ Kw.T / grid.dt
    phi = np.linalg.solve(lam + eps * np.eye(n), -yfree)
    V = (Kw.T @ phi / grid.dt).reshape(nt, n)
    yT = yfree + Kw @ V.reshape(-1)
    return V, phi, yT
