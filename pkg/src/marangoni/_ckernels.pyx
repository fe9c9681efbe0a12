# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled stencil kernels; same contract as ``_pykernels``."""
import numpy as np
from libc.math cimport fabs

BACKEND = "cython"


# branch-free positive/negative parts; exact in floating point
cdef inline double pos(double a) nogil:
    return 0.5 * (a + fabs(a))


cdef inline double neg(double a) nogil:
    return 0.5 * (a - fabs(a))


def pad_dirichlet(double[:, ::1] f, double[::1] left, double[::1] right,
                  double[::1] bottom, double[::1] top):
    cdef Py_ssize_t nx = f.shape[0], ny = f.shape[1], i, j
    out = np.empty((nx + 2, ny + 2))
    cdef double[:, ::1] g = out
    for i in range(nx):
        for j in range(ny):
            g[i + 1, j + 1] = f[i, j]
    for j in range(ny):
        g[0, j + 1] = 2.0 * left[j] - f[0, j]
        g[nx + 1, j + 1] = 2.0 * right[j] - f[nx - 1, j]
    for i in range(nx):
        g[i + 1, 0] = 2.0 * bottom[i] - f[i, 0]
        g[i + 1, ny + 1] = 2.0 * top[i] - f[i, ny - 1]
    g[0, 0] = 0.5 * (g[0, 1] + g[1, 0])
    g[nx + 1, 0] = 0.5 * (g[nx + 1, 1] + g[nx, 0])
    g[0, ny + 1] = 0.5 * (g[0, ny] + g[1, ny + 1])
    g[nx + 1, ny + 1] = 0.5 * (g[nx + 1, ny] + g[nx, ny + 1])
    return out


def laplacian(double[:, ::1] f, double[::1] left, double[::1] right,
              double[::1] bottom, double[::1] top, double dx, double dy):
    cdef Py_ssize_t nx = f.shape[0], ny = f.shape[1], i, j
    cdef double idx2 = 1.0 / (dx * dx), idy2 = 1.0 / (dy * dy)
    cdef double c, w, e, s, n
    out = np.empty((nx, ny))
    cdef double[:, ::1] o = out
    for i in range(nx):
        for j in range(ny):
            c = f[i, j]
            w = f[i - 1, j] if i > 0 else 2.0 * left[j] - c
            e = f[i + 1, j] if i < nx - 1 else 2.0 * right[j] - c
            s = f[i, j - 1] if j > 0 else 2.0 * bottom[i] - c
            n = f[i, j + 1] if j < ny - 1 else 2.0 * top[i] - c
            o[i, j] = (e - 2.0 * c + w) * idx2 + (n - 2.0 * c + s) * idy2
    return out


def laplacian_neumann(double[:, ::1] f, double dx, double dy):
    cdef Py_ssize_t nx = f.shape[0], ny = f.shape[1], i, j
    cdef double idx2 = 1.0 / (dx * dx), idy2 = 1.0 / (dy * dy)
    cdef double c, w, e, s, n
    out = np.empty((nx, ny))
    cdef double[:, ::1] o = out
    for i in range(nx):
        for j in range(ny):
            c = f[i, j]
            w = f[i - 1, j] if i > 0 else c
            e = f[i + 1, j] if i < nx - 1 else c
            s = f[i, j - 1] if j > 0 else c
            n = f[i, j + 1] if j < ny - 1 else c
            o[i, j] = (e - 2.0 * c + w) * idx2 + (n - 2.0 * c + s) * idy2
    return out


def helmholtz_apply(double[:, ::1] x, double[:, ::1] diag, double coef,
                    double dx, double dy):
    cdef Py_ssize_t nx = x.shape[0], ny = x.shape[1], i, j
    cdef double idx2 = 1.0 / (dx * dx), idy2 = 1.0 / (dy * dy)
    cdef double c, w, e, s, n
    out = np.empty((nx, ny))
    cdef double[:, ::1] o = out
    for i in range(nx):
        for j in range(ny):
            c = x[i, j]
            w = x[i - 1, j] if i > 0 else -c
            e = x[i + 1, j] if i < nx - 1 else -c
            s = x[i, j - 1] if j > 0 else -c
            n = x[i, j + 1] if j < ny - 1 else -c
            o[i, j] = diag[i, j] * c - coef * ((e - 2.0 * c + w) * idx2
                                               + (n - 2.0 * c + s) * idy2)
    return out


def advect_upwind(double[:, ::1] f, double[:, ::1] u, double[:, ::1] v,
                  double dx, double dy):
    cdef Py_ssize_t nx = f.shape[0], ny = f.shape[1], i, j
    cdef double idx = 1.0 / dx, idy = 1.0 / dy, acc
    out = np.empty((nx, ny))
    cdef double[:, ::1] o = out
    for i in range(nx):
        for j in range(ny):
            # same summation order as the numpy kernel: right, left, top, bottom
            acc = 0.0
            if i < nx - 1:
                acc += neg(u[i + 1, j]) * ((f[i + 1, j] - f[i, j]) * idx)
            if i > 0:
                acc += pos(u[i, j]) * ((f[i, j] - f[i - 1, j]) * idx)
            if j < ny - 1:
                acc += neg(v[i, j + 1]) * ((f[i, j + 1] - f[i, j]) * idy)
            if j > 0:
                acc += pos(v[i, j]) * ((f[i, j] - f[i, j - 1]) * idy)
            o[i, j] = acc
    return out


def advect_centered(double[:, ::1] f, double[:, ::1] u, double[:, ::1] v,
                    double dx, double dy):
    cdef Py_ssize_t nx = f.shape[0], ny = f.shape[1], i, j
    cdef double hx = 0.5 / dx, hy = 0.5 / dy, acc
    out = np.empty((nx, ny))
    cdef double[:, ::1] o = out
    for i in range(nx):
        for j in range(ny):
            acc = 0.0
            if i < nx - 1:
                acc += u[i + 1, j] * (f[i + 1, j] - f[i, j]) * hx
            if i > 0:
                acc += u[i, j] * (f[i, j] - f[i - 1, j]) * hx
            if j < ny - 1:
                acc += v[i, j + 1] * (f[i, j + 1] - f[i, j]) * hy
            if j > 0:
                acc += v[i, j] * (f[i, j] - f[i, j - 1]) * hy
            o[i, j] = acc
    return out


def momentum_advection(double[:, ::1] u, double[:, ::1] v, double dx, double dy):
    cdef Py_ssize_t nx = v.shape[0], ny = u.shape[1], i, j
    cdef double a, b, c, up, um, idx = 1.0 / dx, idy = 1.0 / dy
    au_arr = np.zeros((nx + 1, ny))
    av_arr = np.zeros((nx, ny + 1))
    cdef double[:, ::1] au = au_arr
    cdef double[:, ::1] av = av_arr
    for i in range(1, nx):
        for j in range(ny):
            a = u[i, j]
            b = 0.25 * (v[i - 1, j] + v[i, j] + v[i - 1, j + 1] + v[i, j + 1])
            um = u[i, j - 1] if j > 0 else -u[i, 0]
            up = u[i, j + 1] if j < ny - 1 else -u[i, ny - 1]
            c = (pos(a) * (a - u[i - 1, j]) + neg(a) * (u[i + 1, j] - a)) * idx
            c += (pos(b) * (a - um) + neg(b) * (up - a)) * idy
            au[i, j] = c
    for i in range(nx):
        for j in range(1, ny):
            a = v[i, j]
            b = 0.25 * (u[i, j - 1] + u[i + 1, j - 1] + u[i, j] + u[i + 1, j])
            um = v[i - 1, j] if i > 0 else -v[0, j]
            up = v[i + 1, j] if i < nx - 1 else -v[nx - 1, j]
            c = (pos(a) * (a - v[i, j - 1]) + neg(a) * (v[i, j + 1] - a)) * idy
            c += (pos(b) * (a - um) + neg(b) * (up - a)) * idx
            av[i, j] = c
    return au_arr, av_arr


def corner_shear(double[:, ::1] u, double[:, ::1] v, double dx, double dy):
    cdef Py_ssize_t nx = v.shape[0], ny = u.shape[1], i, j
    cdef double uy, vx
    out = np.empty((nx + 1, ny + 1))
    cdef double[:, ::1] o = out
    for i in range(nx + 1):
        for j in range(ny + 1):
            if j == 0:
                uy = 2.0 * u[i, 0] / dy
            elif j == ny:
                uy = -2.0 * u[i, ny - 1] / dy
            else:
                uy = (u[i, j] - u[i, j - 1]) / dy
            if i == 0:
                vx = 2.0 * v[0, j] / dx
            elif i == nx:
                vx = -2.0 * v[nx - 1, j] / dx
            else:
                vx = (v[i, j] - v[i - 1, j]) / dx
            o[i, j] = uy + vx
    return out


def viscous_force(double[:, ::1] u, double[:, ::1] v, double[:, ::1] mu_c,
                  double[:, ::1] mu_k, double dx, double dy):
    cdef Py_ssize_t nx = v.shape[0], ny = u.shape[1], i, j
    s_arr = corner_shear(u, v, dx, dy)
    cdef double[:, ::1] s = s_arr
    fu_arr = np.zeros((nx + 1, ny))
    fv_arr = np.zeros((nx, ny + 1))
    cdef double[:, ::1] fu = fu_arr
    cdef double[:, ::1] fv = fv_arr
    cdef double txx_r, txx_l, tyy_t, tyy_b
    for i in range(1, nx):
        for j in range(ny):
            txx_r = 2.0 * mu_c[i, j] * (u[i + 1, j] - u[i, j]) / dx
            txx_l = 2.0 * mu_c[i - 1, j] * (u[i, j] - u[i - 1, j]) / dx
            fu[i, j] = ((txx_r - txx_l) / dx
                        + (mu_k[i, j + 1] * s[i, j + 1] - mu_k[i, j] * s[i, j]) / dy)
    for i in range(nx):
        for j in range(1, ny):
            tyy_t = 2.0 * mu_c[i, j] * (v[i, j + 1] - v[i, j]) / dy
            tyy_b = 2.0 * mu_c[i, j - 1] * (v[i, j] - v[i, j - 1]) / dy
            fv[i, j] = ((tyy_t - tyy_b) / dy
                        + (mu_k[i + 1, j] * s[i + 1, j] - mu_k[i, j] * s[i, j]) / dx)
    return fu_arr, fv_arr


def tensor_divergence(double[:, ::1] txx, double[:, ::1] tyy, double[:, ::1] txy,
                      double dx, double dy):
    cdef Py_ssize_t nx = txx.shape[0], ny = txx.shape[1], i, j
    fu_arr = np.zeros((nx + 1, ny))
    fv_arr = np.zeros((nx, ny + 1))
    cdef double[:, ::1] fu = fu_arr
    cdef double[:, ::1] fv = fv_arr
    for i in range(1, nx):
        for j in range(ny):
            fu[i, j] = (txx[i, j] - txx[i - 1, j]) / dx + (txy[i, j + 1] - txy[i, j]) / dy
    for i in range(nx):
        for j in range(1, ny):
            fv[i, j] = (tyy[i, j] - tyy[i, j - 1]) / dy + (txy[i + 1, j] - txy[i, j]) / dx
    return fu_arr, fv_arr
