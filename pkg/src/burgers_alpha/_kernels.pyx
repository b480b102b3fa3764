# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; signatures mirror ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport isfinite, NAN

cnp.import_array()


cdef void _factor_const(Py_ssize_t n, double off, double dg,
                        double* cp, double* inv) noexcept nogil:
    # Thomas sweep coefficients for the constant matrix tridiag(off, dg, off)
    cdef Py_ssize_t i
    cdef double denom = dg
    inv[0] = 1.0 / denom
    cp[0] = off * inv[0]
    for i in range(1, n):
        denom = dg - off * cp[i - 1]
        inv[i] = 1.0 / denom
        cp[i] = off * inv[i]


cdef void _solve_const(Py_ssize_t n, double off, const double* cp,
                       const double* inv, double* x) noexcept nogil:
    cdef Py_ssize_t i
    x[0] = x[0] * inv[0]
    for i in range(1, n):
        x[i] = (x[i] - off * x[i - 1]) * inv[i]
    for i in range(n - 2, -1, -1):
        x[i] = x[i] - cp[i] * x[i + 1]


cdef inline double _cdiff(const double* y, Py_ssize_t i, Py_ssize_t n,
                          double h2) noexcept nogil:
    cdef double left = y[i - 1] if i > 0 else 0.0
    cdef double right = y[i + 1] if i < n - 1 else 0.0
    return (right - left) * h2


def thomas(const double[::1] sub, const double[::1] diag, const double[::1] sup, rhs):
    cdef cnp.ndarray[double, ndim=2] x
    was_1d = np.ndim(rhs) == 1
    x = np.array(rhs, dtype=np.float64, copy=True, order="C").reshape(diag.shape[0], -1)
    cdef Py_ssize_t n = diag.shape[0], k = x.shape[1], i, j
    cdef double[::1] cp = np.empty(n)
    cdef double[::1] inv = np.empty(n)
    cdef double[:, ::1] xv = x
    with nogil:
        inv[0] = 1.0 / diag[0]
        cp[0] = sup[0] * inv[0] if n > 1 else 0.0
        for i in range(1, n):
            inv[i] = 1.0 / (diag[i] - sub[i - 1] * cp[i - 1])
            if i < n - 1:
                cp[i] = sup[i] * inv[i]
        for j in range(k):
            xv[0, j] = xv[0, j] * inv[0]
        for i in range(1, n):
            for j in range(k):
                xv[i, j] = (xv[i, j] - sub[i - 1] * xv[i - 1, j]) * inv[i]
        for i in range(n - 2, -1, -1):
            for j in range(k):
                xv[i, j] = xv[i, j] - cp[i] * xv[i + 1, j]
    return x.ravel() if was_1d else x


def march_linear(const double[::1] y0, const double[:, ::1] A, const double[:, ::1] S,
                 double dt, double dx):
    cdef Py_ssize_t nt = A.shape[0], nx = A.shape[1], n, i
    cdef double r = dt / (dx * dx), h2 = 0.5 / dx
    out = np.empty((nt + 1, nx))
    cdef double[:, ::1] Y = out
    cdef double[::1] cp = np.empty(nx)
    cdef double[::1] inv = np.empty(nx)
    with nogil:
        _factor_const(nx, -r, 1.0 + 2.0 * r, &cp[0], &inv[0])
        for i in range(nx):
            Y[0, i] = y0[i]
        for n in range(nt):
            for i in range(nx):
                Y[n + 1, i] = Y[n, i] + dt * (S[n, i] - A[n, i] * _cdiff(&Y[n, 0], i, nx, h2))
            _solve_const(nx, -r, &cp[0], &inv[0], &Y[n + 1, 0])
    return out


def march_adjoint(const double[::1] pT, const double[:, ::1] A, double dt, double dx):
    cdef Py_ssize_t nt = A.shape[0], nx = A.shape[1], n, i
    cdef double r = dt / (dx * dx), h2 = 0.5 / dx
    pout = np.empty((nt + 1, nx))
    qout = np.empty((nt, nx))
    cdef double[:, ::1] P = pout
    cdef double[:, ::1] Q = qout
    cdef double[::1] cp = np.empty(nx)
    cdef double[::1] inv = np.empty(nx)
    cdef double[::1] aq = np.empty(nx)
    with nogil:
        _factor_const(nx, -r, 1.0 + 2.0 * r, &cp[0], &inv[0])
        for i in range(nx):
            P[nt, i] = pT[i]
        for n in range(nt - 1, -1, -1):
            for i in range(nx):
                Q[n, i] = P[n + 1, i]
            _solve_const(nx, -r, &cp[0], &inv[0], &Q[n, 0])
            for i in range(nx):
                aq[i] = A[n, i] * Q[n, i]
            for i in range(nx):
                P[n, i] = Q[n, i] + dt * _cdiff(&aq[0], i, nx, h2)
    return pout, qout


def march_burgers_alpha(const double[::1] y0, const double[:, ::1] S, double dt,
                        double dx, double alpha, Py_ssize_t nf):
    cdef Py_ssize_t nt = S.shape[0], nx = S.shape[1], n, i, m
    cdef double r = dt / (dx * dx), h2 = 0.5 / dx
    cdef double rf = (alpha / dx) ** 2
    cdef bint filt = alpha > 0.0
    yout = np.empty((nt + 1, nx))
    zout = np.zeros((nt + 1, nx))
    cdef double[:, ::1] Y = yout
    cdef double[:, ::1] Z = zout
    cdef double[::1] cp = np.empty(nx)
    cdef double[::1] inv = np.empty(nx)
    cdef double[::1] fcp = np.empty(nx)
    cdef double[::1] finv = np.empty(nx)
    cdef bint ok = True
    with nogil:
        _factor_const(nx, -r, 1.0 + 2.0 * r, &cp[0], &inv[0])
        if filt:
            _factor_const(nf, -rf, 1.0 + 2.0 * rf, &fcp[0], &finv[0])
        for i in range(nx):
            Y[0, i] = y0[i]
        for n in range(nt + 1):
            for i in range(nf):
                Z[n, i] = Y[n, i]
            if nf < nx:
                Z[n, nf] = Y[n, nf]
            if filt:
                if nf < nx:
                    Z[n, nf - 1] += rf * Y[n, nf]
                _solve_const(nf, -rf, &fcp[0], &finv[0], &Z[n, 0])
            if n == nt:
                break
            for i in range(nx):
                Y[n + 1, i] = Y[n, i] + dt * (S[n, i] - Z[n, i] * _cdiff(&Y[n, 0], i, nx, h2))
            _solve_const(nx, -r, &cp[0], &inv[0], &Y[n + 1, 0])
            for i in range(nx):
                if not isfinite(Y[n + 1, i]):
                    ok = False
            if not ok:
                for m in range(n + 1, nt + 1):
                    for i in range(nx):
                        Y[m, i] = NAN
                        Z[m, i] = NAN
                break
    return yout, zout
