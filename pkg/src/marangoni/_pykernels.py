"""Pure-numpy stencil kernels.

Reference implementation of the hot loops. ``_ckernels`` (Cython) mirrors every
function here with identical signatures and results up to round-off.

Array layout: cell fields are ``(nx, ny)`` indexed ``[i, j]`` with ``i`` along x.
``u`` lives on vertical faces ``(nx + 1, ny)``, ``v`` on horizontal faces
``(nx, ny + 1)`` and corner fields on ``(nx + 1, ny + 1)``.
"""
import numpy as np

BACKEND = "python"


def pad_dirichlet(f, left, right, bottom, top):
    """Return ``f`` with one layer of ghost cells, ghost = 2*boundary - interior."""
    nx, ny = f.shape
    g = np.empty((nx + 2, ny + 2))
    g[1:-1, 1:-1] = f
    g[0, 1:-1] = 2.0 * left - f[0, :]
    g[-1, 1:-1] = 2.0 * right - f[-1, :]
    g[1:-1, 0] = 2.0 * bottom - f[:, 0]
    g[1:-1, -1] = 2.0 * top - f[:, -1]
    # domain-corner ghosts are never read by a used stencil
    g[0, 0] = 0.5 * (g[0, 1] + g[1, 0])
    g[-1, 0] = 0.5 * (g[-1, 1] + g[-2, 0])
    g[0, -1] = 0.5 * (g[0, -2] + g[1, -1])
    g[-1, -1] = 0.5 * (g[-1, -2] + g[-2, -1])
    return g


def laplacian(f, left, right, bottom, top, dx, dy):
    g = pad_dirichlet(f, left, right, bottom, top)
    return ((g[2:, 1:-1] - 2.0 * f + g[:-2, 1:-1]) / (dx * dx)
            + (g[1:-1, 2:] - 2.0 * f + g[1:-1, :-2]) / (dy * dy))


def laplacian_neumann(f, dx, dy):
    g = np.pad(f, 1, mode="edge")
    return ((g[2:, 1:-1] - 2.0 * f + g[:-2, 1:-1]) / (dx * dx)
            + (g[1:-1, 2:] - 2.0 * f + g[1:-1, :-2]) / (dy * dy))


def helmholtz_apply(x, diag, coef, dx, dy):
    """``diag * x - coef * L0 x`` with L0 the homogeneous-Dirichlet Laplacian."""
    nx, ny = x.shape
    g = np.zeros((nx + 2, ny + 2))
    g[1:-1, 1:-1] = x
    g[0, 1:-1] = -x[0, :]
    g[-1, 1:-1] = -x[-1, :]
    g[1:-1, 0] = -x[:, 0]
    g[1:-1, -1] = -x[:, -1]
    lap = ((g[2:, 1:-1] - 2.0 * x + g[:-2, 1:-1]) / (dx * dx)
           + (g[1:-1, 2:] - 2.0 * x + g[1:-1, :-2]) / (dy * dy))
    return diag * x - coef * lap


def advect_upwind(f, u, v, dx, dy):
    """First-order upwind ``w . grad f`` in non-conservative face form.

    Only differences across faces with nonzero normal velocity are used, so
    no ghost values are needed when boundary faces carry zero velocity.
    """
    dfx = (f[1:, :] - f[:-1, :]) / dx  # interior vertical faces, (nx-1, ny)
    dfy = (f[:, 1:] - f[:, :-1]) / dy
    out = np.zeros_like(f)
    ui = u[1:-1, :]
    vi = v[:, 1:-1]
    # face to the right of cell i is face i+1; contributes min(u, 0) * df
    out[:-1, :] += np.minimum(ui, 0.0) * dfx
    out[1:, :] += np.maximum(ui, 0.0) * dfx
    out[:, :-1] += np.minimum(vi, 0.0) * dfy
    out[:, 1:] += np.maximum(vi, 0.0) * dfy
    return out


def advect_centered(f, u, v, dx, dy):
    dfx = (f[1:, :] - f[:-1, :]) / dx
    dfy = (f[:, 1:] - f[:, :-1]) / dy
    out = np.zeros_like(f)
    fx = 0.5 * u[1:-1, :] * dfx
    fy = 0.5 * v[:, 1:-1] * dfy
    out[:-1, :] += fx
    out[1:, :] += fx
    out[:, :-1] += fy
    out[:, 1:] += fy
    return out


def momentum_advection(u, v, dx, dy):
    """Upwind ``(w . grad) w`` on the interior faces of a no-slip MAC field."""
    nx = v.shape[0]
    ny = u.shape[1]
    au = np.zeros_like(u)
    av = np.zeros_like(v)

    # u-momentum at faces i = 1..nx-1
    uc = u[1:-1, :]
    vbar = 0.25 * (v[:-1, :-1] + v[1:, :-1] + v[:-1, 1:] + v[1:, 1:])
    dxm = (u[1:-1, :] - u[:-2, :]) / dx
    dxp = (u[2:, :] - u[1:-1, :]) / dx
    ug = np.empty((nx + 1, ny + 2))
    ug[:, 1:-1] = u
    ug[:, 0] = -u[:, 0]
    ug[:, -1] = -u[:, -1]
    dym = (ug[1:-1, 1:-1] - ug[1:-1, :-2]) / dy
    dyp = (ug[1:-1, 2:] - ug[1:-1, 1:-1]) / dy
    au[1:-1, :] = (np.maximum(uc, 0.0) * dxm + np.minimum(uc, 0.0) * dxp
                   + np.maximum(vbar, 0.0) * dym + np.minimum(vbar, 0.0) * dyp)

    # v-momentum at faces j = 1..ny-1
    vc = v[:, 1:-1]
    ubar = 0.25 * (u[:-1, :-1] + u[1:, :-1] + u[:-1, 1:] + u[1:, 1:])
    dym = (v[:, 1:-1] - v[:, :-2]) / dy
    dyp = (v[:, 2:] - v[:, 1:-1]) / dy
    vg = np.empty((nx + 2, ny + 1))
    vg[1:-1, :] = v
    vg[0, :] = -v[0, :]
    vg[-1, :] = -v[-1, :]
    dxm = (vg[1:-1, 1:-1] - vg[:-2, 1:-1]) / dx
    dxp = (vg[2:, 1:-1] - vg[1:-1, 1:-1]) / dx
    av[:, 1:-1] = (np.maximum(vc, 0.0) * dym + np.minimum(vc, 0.0) * dyp
                   + np.maximum(ubar, 0.0) * dxm + np.minimum(ubar, 0.0) * dxp)
    return au, av


def corner_shear(u, v, dx, dy):
    """``du/dy + dv/dx`` at cell corners, no-slip ghosts at the walls."""
    nx = v.shape[0]
    ny = u.shape[1]
    uy = np.empty((nx + 1, ny + 1))
    uy[:, 1:-1] = (u[:, 1:] - u[:, :-1]) / dy
    uy[:, 0] = 2.0 * u[:, 0] / dy
    uy[:, -1] = -2.0 * u[:, -1] / dy
    vx = np.empty((nx + 1, ny + 1))
    vx[1:-1, :] = (v[1:, :] - v[:-1, :]) / dx
    vx[0, :] = 2.0 * v[0, :] / dx
    vx[-1, :] = -2.0 * v[-1, :] / dx
    return uy + vx


def viscous_force(u, v, mu_c, mu_k, dx, dy):
    """``div(2 mu D(w))`` on interior faces; ``mu_c`` at cells, ``mu_k`` at corners."""
    ux = (u[1:, :] - u[:-1, :]) / dx
    vy = (v[:, 1:] - v[:, :-1]) / dy
    txx = 2.0 * mu_c * ux
    tyy = 2.0 * mu_c * vy
    txy = mu_k * corner_shear(u, v, dx, dy)
    fu = np.zeros_like(u)
    fv = np.zeros_like(v)
    fu[1:-1, :] = (txx[1:, :] - txx[:-1, :]) / dx + (txy[1:-1, 1:] - txy[1:-1, :-1]) / dy
    fv[:, 1:-1] = (tyy[:, 1:] - tyy[:, :-1]) / dy + (txy[1:, 1:-1] - txy[:-1, 1:-1]) / dx
    return fu, fv


def tensor_divergence(txx, tyy, txy, dx, dy):
    """Divergence of a symmetric tensor on interior faces (zero on walls)."""
    nx, ny = txx.shape
    fu = np.zeros((nx + 1, ny))
    fv = np.zeros((nx, ny + 1))
    fu[1:-1, :] = (txx[1:, :] - txx[:-1, :]) / dx + (txy[1:-1, 1:] - txy[1:-1, :-1]) / dy
    fv[:, 1:-1] = (tyy[:, 1:] - tyy[:, :-1]) / dy + (txy[1:, 1:-1] - txy[:-1, 1:-1]) / dx
    return fu, fv
