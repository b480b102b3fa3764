"""Pure-Python (numpy + LAPACK) implementations of the hot kernels.

Every function here has a twin with the same signature in the compiled
``_kernels`` extension. Arrays are float64 and C-contiguous; time runs along
axis 0 and interior spatial nodes along axis 1.
"""
import numpy as np
from scipy.linalg import lapack

__all__ = [
    "thomas",
    "march_linear",
    "march_adjoint",
    "march_burgers_alpha",
]


def thomas(sub, diag, sup, rhs):
    """Solve a tridiagonal system by forward elimination and back substitution.

    Parameters
    ----------
    sub, sup : ndarray, shape (n-1,)
        Sub- and super-diagonal.
    diag : ndarray, shape (n,)
    rhs : ndarray, shape (n,) or (n, k)

    Returns
    -------
    ndarray with the shape of ``rhs``.
    """
    n = diag.shape[0]
    x = np.array(rhs, dtype=float, copy=True)
    cp = np.empty(n)
    denom = diag[0]
    cp[0] = sup[0] / denom if n > 1 else 0.0
    x[0] = x[0] / denom
    for i in range(1, n):
        denom = diag[i] - sub[i - 1] * cp[i - 1]
        if i < n - 1:
            cp[i] = sup[i] / denom
        x[i] = (x[i] - sub[i - 1] * x[i - 1]) / denom
    for i in range(n - 2, -1, -1):
        x[i] = x[i] - cp[i] * x[i + 1]
    return x


def _heat_factor(nx, dt, dx):
    # LU factors of I - dt*D_xx (Dirichlet), reused every step
    r = dt / (dx * dx)
    dl = np.full(nx - 1, -r)
    d = np.full(nx, 1.0 + 2.0 * r)
    du = np.full(nx - 1, -r)
    dl, d, du, du2, ipiv, info = lapack.dgttrf(dl, d, du)
    if info != 0:
        raise np.linalg.LinAlgError("implicit diffusion matrix is singular")
    return dl, d, du, du2, ipiv


def _heat_solve(fac, b):
    x, info = lapack.dgttrs(*fac, b)
    return x


def _centered(y, dx):
    d = np.empty_like(y)
    d[1:-1] = y[2:] - y[:-2]
    d[0] = y[1]
    d[-1] = -y[-2]
    return d / (2.0 * dx)


def march_linear(y0, A, S, dt, dx):
    """IMEX Euler march of y_t - y_xx + A y_x = S; returns (nt+1, nx)."""
    nt, nx = A.shape
    fac = _heat_factor(nx, dt, dx)
    Y = np.empty((nt + 1, nx))
    Y[0] = y0
    y = np.array(y0, dtype=float)
    for n in range(nt):
        rhs = y + dt * (S[n] - A[n] * _centered(y, dx))
        y = _heat_solve(fac, rhs)
        Y[n + 1] = y
    return Y


def march_adjoint(pT, A, dt, dx):
    """Transpose of :func:`march_linear` run backward from ``pT``.

    Returns ``(P, Q)`` with ``P`` of shape (nt+1, nx) and ``Q`` of shape
    (nt, nx); ``Q[n]`` is the multiplier paired with the source at level n.
    """
    nt, nx = A.shape
    fac = _heat_factor(nx, dt, dx)
    P = np.empty((nt + 1, nx))
    Q = np.empty((nt, nx))
    p = np.array(pT, dtype=float)
    P[nt] = p
    for n in range(nt - 1, -1, -1):
        q = _heat_solve(fac, p)
        Q[n] = q
        # centered Dx is skew, so (I - dt*diag(A)*Dx)^T q = q + dt*Dx(A*q)
        p = q + dt * _centered(A[n] * q, dx)
        P[n] = p
    return P, Q


def _filter_factor(nf, alpha, dx):
    r = (alpha / dx) ** 2
    dl = np.full(nf - 1, -r)
    d = np.full(nf, 1.0 + 2.0 * r)
    du = np.full(nf - 1, -r)
    dl, d, du, du2, ipiv, info = lapack.dgttrf(dl, d, du)
    return (dl, d, du, du2, ipiv), r


def march_burgers_alpha(y0, S, dt, dx, alpha, nf):
    """March the Burgers-alpha system with the filter lagged one level.

    ``nf`` is the number of leading nodes on which the filter lives. When
    ``nf == nx`` the filter is homogeneous Dirichlet on the whole grid;
    otherwise node ``nf`` carries the right trace z = y and the transport
    coefficient vanishes beyond it. ``alpha == 0`` makes z = y.

    Returns ``(Y, Z)``, both (nt+1, nx); ``Z`` is the transport coefficient.
    """
    nt, nx = S.shape
    fac = _heat_factor(nx, dt, dx)
    if alpha > 0.0:
        ffac, r = _filter_factor(nf, alpha, dx)
    Y = np.empty((nt + 1, nx))
    Z = np.zeros((nt + 1, nx))
    y = np.array(y0, dtype=float)
    Y[0] = y
    for n in range(nt + 1):
        z = Z[n]
        if alpha > 0.0:
            b = y[:nf].copy()
            if nf < nx:
                b[-1] += r * y[nf]
            z[:nf] = _heat_solve(ffac, b)
        else:
            z[:nf] = y[:nf]
        if nf < nx:
            z[nf] = y[nf]
        if n == nt:
            break
        rhs = y + dt * (S[n] - z * _centered(y, dx))
        y = _heat_solve(fac, rhs)
        if not np.all(np.isfinite(y)):
            Y[n + 1:] = np.nan
            Z[n + 1:] = np.nan
            break
        Y[n + 1] = y
    return Y, Z
