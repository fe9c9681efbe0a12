"""Conjugate-gradient driver and fast spectral preconditioners.

The constant-coefficient cell-centred operators are diagonalised exactly by
type-II sine (Dirichlet ghosts) and cosine (Neumann ghosts) transforms, which
makes them ideal preconditioners for CG.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy import fft

from .errors import SolverError
from .fields import Grid


@dataclass
class CGResult:
    x: np.ndarray
    iterations: int
    residual: float


def pcg(apply_a, b, x0=None, precond=None, atol=1e-12, maxiter=None, name="CG"):
    """Preconditioned conjugate gradients on 2D arrays.

    Stops when the max-norm of the residual drops to ``atol``.  Reductions use
    ``np.vdot`` on contiguous arrays so the summation order is fixed.
    """
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float, copy=True)
    if maxiter is None:
        maxiter = 10 * sum(b.shape)
    r = b - apply_a(x)
    res = float(np.max(np.abs(r)))
    if res <= atol:
        return CGResult(x, 0, res)
    z = precond(r) if precond is not None else r
    p = z.copy()
    rz = float(np.vdot(r, z))
    for it in range(1, maxiter + 1):
        ap = apply_a(p)
        pap = float(np.vdot(p, ap))
        if pap <= 0.0:
            raise SolverError(f"{name}: operator not positive definite (p.Ap = {pap:.3e})")
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        res = float(np.max(np.abs(r)))
        if res <= atol:
            return CGResult(x, it, res)
        z = precond(r) if precond is not None else r
        rz_new = float(np.vdot(r, z))
        p *= rz_new / rz
        p += z
        rz = rz_new
    raise SolverError(f"{name}: no convergence in {maxiter} iterations (residual {res:.3e}, target {atol:.3e})")


def _eig_1d(n: int, h: float, dirichlet: bool) -> np.ndarray:
    # eigenvalues of -d2/dx2 for the cell-centred 3-point stencil
    k = np.arange(1, n + 1) if dirichlet else np.arange(n)
    return (4.0 / (h * h)) * np.sin(np.pi * k / (2 * n)) ** 2


@lru_cache(maxsize=64)
def _dirichlet_eigs(grid: Grid) -> np.ndarray:
    return _eig_1d(grid.nx, grid.dx, True)[:, None] + _eig_1d(grid.ny, grid.dy, True)[None, :]


@lru_cache(maxsize=64)
def _neumann_eigs(grid: Grid) -> np.ndarray:
    return _eig_1d(grid.nx, grid.dx, False)[:, None] + _eig_1d(grid.ny, grid.dy, False)[None, :]


def dirichlet_helmholtz_solver(grid: Grid, shift: float, coef: float):
    """Exact inverse of ``shift * I - coef * L0`` (homogeneous Dirichlet L0)."""
    denom = shift + coef * _dirichlet_eigs(grid)
    if np.any(denom <= 0.0):
        raise ValueError("Helmholtz operator is not positive definite")
    inv = 1.0 / denom

    def solve(r):
        return fft.idstn(fft.dstn(r, type=2, norm="ortho") * inv, type=2, norm="ortho")

    return solve


def neumann_poisson_solver(grid: Grid):
    """Pseudo-inverse of ``-L_N`` on mean-zero arrays."""
    eig = _neumann_eigs(grid).copy()
    eig[0, 0] = 1.0
    inv = 1.0 / eig
    inv[0, 0] = 0.0

    def solve(r):
        return fft.idctn(fft.dctn(r, type=2, norm="ortho") * inv, type=2, norm="ortho")

    return solve


def dirichlet_laplacian_matrix(grid: Grid):
    """Sparse homogeneous-Dirichlet 5-point Laplacian, unknowns ordered ``i * ny + j``."""
    def lap1d(n, h):
        main = -2.0 * np.ones(n)
        main[[0, -1]] = -3.0
        off = np.ones(n - 1)
        return sp.diags([off, main, off], [-1, 0, 1]) / (h * h)

    ix = sp.identity(grid.nx)
    iy = sp.identity(grid.ny)
    return (sp.kron(lap1d(grid.nx, grid.dx), iy) + sp.kron(ix, lap1d(grid.ny, grid.dy))).tocsr()
