"""Stationary phase profiles: ``-Lap phi + W'(phi) = 0`` with Dirichlet data."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, minres

from . import _kernels as K
from .coefficients import PhysicalParams, double_well, double_well_second
from .errors import ConfigError, SolverError
from .fields import BoundaryData, Grid, ScalarField, cell_inner
from .linalg import dirichlet_helmholtz_solver, dirichlet_laplacian_matrix, pcg

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SteadySolveConfig:
    newton_tol: float = 1e-10
    max_newton: int = 50
    damping: float = 1.0
    min_damping: float = 1.0 / 64.0

    def __post_init__(self):
        if not self.newton_tol > 0:
            raise ConfigError("newton_tol must be positive")
        if self.max_newton < 1:
            raise ConfigError("max_newton must be >= 1")
        if not 0 < self.min_damping <= self.damping <= 1:
            raise ConfigError("need 0 < min_damping <= damping <= 1")


@dataclass
class SteadyResult:
    phi: ScalarField
    converged: bool
    residual: float
    iterations: int
    history: list = field(default_factory=list)

    @property
    def within_bounds(self) -> bool:
        return float(np.max(np.abs(self.phi.values))) <= 1.0 + 1e-6


def steady_residual(phi: ScalarField, params: PhysicalParams) -> np.ndarray:
    """``-Lap phi + W'(phi)`` at cell centres."""
    g = phi.grid
    _, wp = double_well(phi.values, params.eps)
    return -K.laplacian(phi.values, *phi.bc.arrays(), g.dx, g.dy) + wp


def _newton_direction(grid: Grid, w2: np.ndarray, rhs: np.ndarray, atol: float) -> np.ndarray:
    """Solve ``(-L0 + diag(w2)) d = rhs``."""
    if np.all(w2 >= 0.0):
        shift = float(np.mean(w2))
        res = pcg(
            lambda x: K.helmholtz_apply(x, w2, 1.0, grid.dx, grid.dy),
            rhs,
            precond=dirichlet_helmholtz_solver(grid, shift, 1.0),
            atol=atol,
            name="steady Newton CG",
        )
        return res.x
    # symmetric indefinite Jacobian
    n = grid.nx * grid.ny
    jac = (-dirichlet_laplacian_matrix(grid) + sp.diags(w2.ravel())).tocsr()
    lap_inv = dirichlet_helmholtz_solver(grid, 0.0, 1.0)
    prec = LinearOperator((n, n), matvec=lambda r: lap_inv(r.reshape(grid.shape)).ravel(), dtype=float)
    bnorm = float(np.linalg.norm(rhs))
    rtol = min(1e-6, max(1e-15, 0.1 * atol / bnorm)) if bnorm > 0 else 1e-15
    x, info = minres(jac, rhs.ravel(), M=prec, rtol=rtol, maxiter=20 * n)
    if info < 0:
        raise SolverError(f"steady Newton MINRES failed (info={info})")
    return x.reshape(grid.shape)


def solve_steady_phase(phi_b: BoundaryData, initial_guess: ScalarField, grid: Grid,
                       params: PhysicalParams, cfg: SteadySolveConfig = SteadySolveConfig()) -> SteadyResult:
    """Damped Newton for the stationary Allen-Cahn problem.

    The iteration is local: it converges to the steady state in whose basin
    ``initial_guess`` lies.  Non-convergence is reported through the result
    flag and the best iterate is returned.
    """
    phi_b.check_phase_admissible()
    if initial_guess.grid != grid:
        raise ValueError("initial guess lives on a different grid")
    if not initial_guess.is_finite():
        raise ValueError("initial guess has non-finite values")
    phi = ScalarField(grid, initial_guess.values.copy(), phi_b)
    f = steady_residual(phi, params)
    res = float(np.max(np.abs(f)))
    history = [res]
    it = 0
    while res > cfg.newton_tol and it < cfg.max_newton:
        it += 1
        w2 = double_well_second(phi.values, params.eps)
        direction = _newton_direction(grid, np.ascontiguousarray(w2), -f, atol=0.01 * cfg.newton_tol)
        step = cfg.damping
        while True:
            trial = phi.with_values(phi.values + step * direction)
            f_trial = steady_residual(trial, params)
            res_trial = float(np.max(np.abs(f_trial)))
            if res_trial < res:
                break
            step *= 0.5
            if step < cfg.min_damping:
                log.info("steady Newton stalled at residual %.3e after %d iterations", res, it)
                return SteadyResult(phi, False, res, it, history)
        phi, f, res = trial, f_trial, res_trial
        history.append(res)
    result = SteadyResult(phi, res <= cfg.newton_tol, res, it, history)
    if result.converged and not result.within_bounds:
        log.warning("steady phase leaves [-1, 1]: max |phi| = %.6g", np.max(np.abs(phi.values)))
    return result


def distance_to_steady(phi: ScalarField, phi_inf: ScalarField) -> float:
    """Discrete H2-type distance ``||phi - phi_inf|| + ||Lap phi - Lap phi_inf||``."""
    if phi.grid != phi_inf.grid:
        raise ValueError(f"grid mismatch: {phi.grid} vs {phi_inf.grid}")
    if phi.bc is None or phi_inf.bc is None or not phi.bc.same_as(phi_inf.bc):
        raise ValueError("fields carry different boundary data")
    g = phi.grid
    diff = phi.values - phi_inf.values
    zero = np.zeros(g.ny), np.zeros(g.ny), np.zeros(g.nx), np.zeros(g.nx)
    lap = K.laplacian(np.ascontiguousarray(diff), *zero, g.dx, g.dy)
    return math.sqrt(cell_inner(diff, diff, g)) + math.sqrt(cell_inner(lap, lap, g))
