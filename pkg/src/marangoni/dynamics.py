"""Operator-split time stepper for the coupled velocity / phase / temperature system.

One step advances the scalars with the old velocity, then the velocity with the
new scalars:

1. phase:        (phi' - phi)/dt + w.grad(phi) = gamma (Lap phi' - W'(phi))
2. temperature:  Kirchhoff variable vt = int_0^theta kappa, implicit
                 (vt' - vt)/dt + w.grad(vt) = kappa(theta) Lap vt'
3. momentum:     explicit advection, variable-viscosity diffusion, capillary
                 and buoyancy forcing, then an incremental pressure projection.

All linear systems are symmetric positive definite and solved by conjugate
gradients with a spectral preconditioner.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels as K
from .coefficients import (PhysicalParams, double_well, inverse_kirchhoff, kirchhoff,
                           surface_tension)
from .errors import CFLViolation, ConfigError, InvariantViolation
from .fields import (BoundaryData, Grid, ScalarField, VectorField, advect, corner_values,
                     divergence, face_grad_sq_cells, gradient)
from .linalg import dirichlet_helmholtz_solver, neumann_poisson_solver, pcg

log = logging.getLogger(__name__)

TOL_MP = 1e-8
ADVECTION_SCHEMES = ("upwind", "centered")
CAPILLARY_FORMS = ("potential", "stress")


@dataclass(frozen=True)
class StepConfig:
    dt: float
    cfl_safety: float = 1.0
    proj_tol: float = 1e-10
    helmholtz_tol: float = 1e-10
    advection: str = "upwind"
    capillary_form: str = "potential"

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if not 0 < self.cfl_safety <= 1:
            raise ConfigError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}")
        if not (self.proj_tol > 0 and self.helmholtz_tol > 0):
            raise ConfigError("solver tolerances must be positive")
        if self.advection not in ADVECTION_SCHEMES:
            raise ConfigError(f"advection must be one of {ADVECTION_SCHEMES}, got {self.advection!r}")
        if self.capillary_form not in CAPILLARY_FORMS:
            raise ConfigError(f"capillary_form must be one of {CAPILLARY_FORMS}, got {self.capillary_form!r}")


def stability_bounds(grid: Grid, params: PhysicalParams, theta_linf: float,
                     cfl_safety: float = 1.0) -> dict[str, float]:
    """Largest admissible dt for each explicit/semi-implicit sub-step.

    Coefficient extrema are taken over |s| <= theta_linf, the range the
    temperature maximum principle confines theta to.
    """
    h2 = min(grid.dx, grid.dy) ** 2
    kap_hi = params.kappa.extrema(-theta_linf, theta_linf)[1]
    mu_hi = params.mu.extrema(-theta_linf, theta_linf)[1]
    return {
        "thermal diffusion bound min(dx,dy)^2/(4*kappa_max)": cfl_safety * h2 / (4.0 * kap_hi),
        "momentum diffusion bound min(dx,dy)^2/(4*mu_max)": cfl_safety * h2 / (4.0 * mu_hi),
        "phase reaction bound eps^2/(2*gamma)": cfl_safety * params.eps ** 2 / (2.0 * params.gamma),
    }


def check_time_step(cfg: StepConfig, grid: Grid, params: PhysicalParams, theta_linf: float):
    for name, bound in stability_bounds(grid, params, theta_linf, cfg.cfl_safety).items():
        if cfg.dt > bound * (1.0 + 1e-12):
            raise ConfigError(f"dt = {cfg.dt:.6g} violates the {name} = {bound:.6g}")


@dataclass
class SimState:
    t: float
    u: VectorField
    p: ScalarField
    phi: ScalarField
    theta: ScalarField
    theta0: ScalarField
    step: int = 0

    @property
    def grid(self) -> Grid:
        return self.phi.grid

    @property
    def phi_b(self) -> BoundaryData:
        return self.phi.bc

    @classmethod
    def initial(cls, grid: Grid, phi0: np.ndarray, phi_b: BoundaryData,
                theta0: np.ndarray | None = None, u0: VectorField | None = None,
                t: float = 0.0, step: int = 0) -> "SimState":
        phi_b.check_phase_admissible()
        zero_bc = BoundaryData.zeros(grid)
        th0 = grid.zeros() if theta0 is None else np.array(theta0, dtype=float)
        return cls(
            t=t,
            u=VectorField.zeros(grid) if u0 is None else u0.copy().enforce_no_slip(),
            p=ScalarField(grid, grid.zeros(), None),
            phi=ScalarField(grid, phi0, phi_b),
            theta=ScalarField(grid, th0.copy(), zero_bc),
            theta0=ScalarField(grid, th0.copy(), zero_bc),
            step=step,
        )

    def theta0_linf(self) -> float:
        return float(np.max(np.abs(self.theta0.values)))


# ------------------------------------------------------------------ forces

def _corner_tangential(grid: Grid, phi: ScalarField, gx: np.ndarray, gy: np.ndarray):
    """Components of grad(phi) at grid corners; wall corners use the boundary trace."""
    nx, ny = grid.shape
    bc = phi.bc
    phix = np.zeros((nx + 1, ny + 1))
    phiy = np.zeros((nx + 1, ny + 1))
    phix[:, 1:-1] = 0.5 * (gx[:, 1:] + gx[:, :-1])
    phiy[1:-1, :] = 0.5 * (gy[1:, :] + gy[:-1, :])
    if bc is not None:
        phix[1:-1, 0] = (bc.bottom[1:] - bc.bottom[:-1]) / grid.dx
        phix[1:-1, -1] = (bc.top[1:] - bc.top[:-1]) / grid.dx
        phiy[0, 1:-1] = (bc.left[1:] - bc.left[:-1]) / grid.dy
        phiy[-1, 1:-1] = (bc.right[1:] - bc.right[:-1]) / grid.dy
    return phix, phiy


def capillary_stress(phi: ScalarField, theta: ScalarField, params: PhysicalParams):
    """Components of ``lambda(theta) grad(phi) (x) grad(phi)``: xx, yy at cells, xy at corners."""
    grid = phi.grid
    gr = gradient(phi)
    gx, gy = gr.u, gr.v
    phix_c = 0.5 * (gx[1:, :] + gx[:-1, :])
    phiy_c = 0.5 * (gy[:, 1:] + gy[:, :-1])
    lam_c = surface_tension(theta.values, params)
    lam_k = surface_tension(corner_values(theta), params)
    phix_k, phiy_k = _corner_tangential(grid, phi, gx, gy)
    return lam_c * phix_c ** 2, lam_c * phiy_c ** 2, lam_k * phix_k * phiy_k


def capillary_force(phi: ScalarField, theta: ScalarField, params: PhysicalParams) -> VectorField:
    """``-div(lambda(theta) grad(phi) (x) grad(phi))`` on the velocity faces.

    The isotropic part of the capillary stress is a gradient and is carried by
    the pressure, so it is not computed.
    """
    grid = phi.grid
    txx, tyy, txy = capillary_stress(phi, theta, params)
    fu, fv = K.tensor_divergence(txx, tyy, txy, grid.dx, grid.dy)
    return VectorField(grid, -fu, -fv)


def _cell_centered_gradient(f: ScalarField):
    p = f.padded()
    return ((p[2:, 1:-1] - p[:-2, 1:-1]) / (2.0 * f.grid.dx),
            (p[1:-1, 2:] - p[1:-1, :-2]) / (2.0 * f.grid.dy))


def capillary_force_potential(phi: ScalarField, theta: ScalarField, params: PhysicalParams) -> VectorField:
    """Capillary force in chemical-potential form.

    Differs from :func:`capillary_force` by a gradient only:
    ``lambda m grad(phi) + e grad(lambda) - (grad(lambda).grad(phi)) grad(phi)``
    with ``m = -Lap phi + W'(phi)`` and ``e = |grad phi|^2 / 2 + W(phi)``.
    It vanishes identically at a discrete steady phase with uniform
    temperature, so no spurious currents survive at equilibrium.
    """
    grid = phi.grid
    w, wp = double_well(phi.values, params.eps)
    m = -K.laplacian(phi.values, *phi.bc.arrays(), grid.dx, grid.dy) + wp
    lam = surface_tension(theta.values, params)
    gr = gradient(phi)
    out = VectorField.zeros(grid)
    lam_u = 0.5 * (lam[1:, :] + lam[:-1, :])
    lam_v = 0.5 * (lam[:, 1:] + lam[:, :-1])
    out.u[1:-1, :] = lam_u * 0.5 * (m[1:, :] + m[:-1, :]) * gr.u[1:-1, :]
    out.v[:, 1:-1] = lam_v * 0.5 * (m[:, 1:] + m[:, :-1]) * gr.v[:, 1:-1]
    if params.isothermal or not np.any(theta.values):
        return out
    lam_f = ScalarField(grid, lam, BoundaryData.constant(grid, surface_tension(0.0, params)))
    e = 0.5 * face_grad_sq_cells(phi) + w
    lx, ly = _cell_centered_gradient(lam_f)
    px, py = _cell_centered_gradient(phi)
    proj = lx * px + ly * py
    glam = gradient(lam_f)
    out.u[1:-1, :] += (0.5 * (e[1:, :] + e[:-1, :]) * glam.u[1:-1, :]
                       - 0.5 * (proj[1:, :] * px[1:, :] + proj[:-1, :] * px[:-1, :]))
    out.v[:, 1:-1] += (0.5 * (e[:, 1:] + e[:, :-1]) * glam.v[:, 1:-1]
                       - 0.5 * (proj[:, 1:] * py[:, 1:] + proj[:, :-1] * py[:, :-1]))
    return out


def buoyancy_force(theta: ScalarField, params: PhysicalParams) -> VectorField:
    """``Ra * g * theta`` along +y on interior horizontal faces."""
    grid = theta.grid
    w = VectorField.zeros(grid)
    th = theta.values
    w.v[:, 1:-1] = params.ra * params.g * 0.5 * (th[:, 1:] + th[:, :-1])
    return w


def viscous_force(w: VectorField, theta: ScalarField, params: PhysicalParams) -> VectorField:
    """``div(2 mu(theta) D w)`` with mu evaluated at cells and at corner-averaged theta."""
    grid = w.grid
    mu_c = np.ascontiguousarray(params.mu(theta.values))
    mu_k = np.ascontiguousarray(params.mu(corner_values(theta)))
    fu, fv = K.viscous_force(w.u, w.v, mu_c, mu_k, grid.dx, grid.dy)
    return VectorField(grid, fu, fv)


# -------------------------------------------------------------- sub-steps

def step_phase(state: SimState, cfg: StepConfig, params: PhysicalParams) -> ScalarField:
    phi = state.phi
    grid = phi.grid
    c = cfg.dt * params.gamma
    _, wp = double_well(phi.values, params.eps)
    adv = advect(phi, state.u, cfg.advection).values
    # boundary part of the Laplacian: Lap f = L0 f + boundary_term
    boundary_term = K.laplacian(np.zeros(grid.shape), *phi.bc.arrays(), grid.dx, grid.dy)
    rhs = phi.values - cfg.dt * adv - c * wp + c * boundary_term
    ones = np.ones(grid.shape)
    res = pcg(
        lambda x: K.helmholtz_apply(x, ones, c, grid.dx, grid.dy),
        rhs,
        x0=phi.values,
        precond=dirichlet_helmholtz_solver(grid, 1.0, c),
        atol=cfg.helmholtz_tol * max(1.0, float(np.max(np.abs(rhs)))),
        name="phase Helmholtz CG",
    )
    return phi.with_values(res.x)


def step_temperature(state: SimState, cfg: StepConfig, params: PhysicalParams) -> ScalarField:
    theta = state.theta
    grid = theta.grid
    kap = params.kappa
    vt = ScalarField(grid, kirchhoff(theta.values, kap), theta.bc)
    adv = advect(vt, state.u, cfg.advection).values
    inv_k = np.ascontiguousarray(1.0 / kap(theta.values))
    rhs = (vt.values - cfg.dt * adv) * inv_k
    res = pcg(
        lambda x: K.helmholtz_apply(x, inv_k, cfg.dt, grid.dx, grid.dy),
        rhs,
        x0=vt.values,
        precond=dirichlet_helmholtz_solver(grid, float(np.mean(inv_k)), cfg.dt),
        atol=cfg.helmholtz_tol * float(np.max(np.abs(rhs))),
        name="temperature Helmholtz CG",
    )
    return theta.with_values(inverse_kirchhoff(res.x, kap))


def project(u_star: VectorField, cfg: StepConfig):
    """Discrete Helmholtz-Leray projection.

    Returns the divergence-free velocity and the potential ``q`` (mean zero)
    with ``u = u_star - dt * grad(q)``.
    """
    grid = u_star.grid
    rhs = divergence(u_star).values / cfg.dt
    rhs -= np.mean(rhs)
    scale = u_star.max_abs() / (min(grid.dx, grid.dy) * cfg.dt)
    res = pcg(
        lambda x: -K.laplacian_neumann(x, grid.dx, grid.dy),
        -rhs,
        precond=neumann_poisson_solver(grid),
        atol=cfg.proj_tol * scale,
        name="pressure Poisson CG",
    )
    q = ScalarField(grid, res.x - np.mean(res.x), None)
    gq = gradient(q)
    u = VectorField(grid, u_star.u - cfg.dt * gq.u, u_star.v - cfg.dt * gq.v).enforce_no_slip()
    return u, q


def cfl_number(w: VectorField, dt: float) -> float:
    g = w.grid
    uc = np.maximum(np.abs(w.u[1:, :]), np.abs(w.u[:-1, :]))
    vc = np.maximum(np.abs(w.v[:, 1:]), np.abs(w.v[:, :-1]))
    return float(np.max(dt * (uc / g.dx + vc / g.dy)))


def step_momentum(state: SimState, phi_new: ScalarField, theta_new: ScalarField,
                  cfg: StepConfig, params: PhysicalParams):
    grid = state.grid
    w = state.u
    au, av = K.momentum_advection(w.u, w.v, grid.dx, grid.dy)
    visc = viscous_force(w, state.theta, params)
    if cfg.capillary_form == "potential":
        cap = capillary_force_potential(phi_new, theta_new, params)
    else:
        cap = capillary_force(phi_new, theta_new, params)
    buoy = buoyancy_force(theta_new, params)
    gp = gradient(state.p)
    dt = cfg.dt
    u_star = VectorField(
        grid,
        w.u + dt * (-au + visc.u + cap.u + buoy.u - gp.u),
        w.v + dt * (-av + visc.v + cap.v + buoy.v - gp.v),
    ).enforce_no_slip()
    u_new, q = project(u_star, cfg)
    p = state.p.values + q.values
    p_new = ScalarField(grid, p - np.mean(p), None)
    cfl = cfl_number(u_new, dt)
    if cfl > cfg.cfl_safety:
        raise CFLViolation(
            f"step {state.step + 1}: advective CFL number {cfl:.4g} exceeds cfl_safety "
            f"{cfg.cfl_safety:.4g} (max |u| = {u_new.max_abs():.4g})")
    return u_new, p_new


# ------------------------------------------------------------------ driver

@dataclass
class InvariantMargins:
    phi_margin: float
    theta_margin: float
    div_linf: float

    @property
    def ok(self) -> bool:
        return self.phi_margin >= -TOL_MP and self.theta_margin >= -TOL_MP


def invariant_margins(state: SimState) -> InvariantMargins:
    return InvariantMargins(
        phi_margin=1.0 - float(np.max(np.abs(state.phi.values))),
        theta_margin=state.theta0_linf() - float(np.max(np.abs(state.theta.values))),
        div_linf=float(np.max(np.abs(divergence(state.u).values))),
    )


def advance(state: SimState, cfg: StepConfig, params: PhysicalParams) -> SimState:
    """One full split step; aborts when an invariant is broken beyond 100 * TOL_MP."""
    phi_new = step_phase(state, cfg, params)
    if params.isothermal:
        theta_new = state.theta.with_values(np.zeros(state.grid.shape))
    else:
        theta_new = step_temperature(state, cfg, params)
    u_new, p_new = step_momentum(state, phi_new, theta_new, cfg, params)
    new = replace(state, t=state.t + cfg.dt, step=state.step + 1, u=u_new, p=p_new,
                  phi=phi_new, theta=theta_new)

    if not (phi_new.is_finite() and theta_new.is_finite() and u_new.is_finite()):
        raise InvariantViolation(f"step {new.step}: non-finite values in the solution")
    m = invariant_margins(new)
    for name, margin in (("|phi| <= 1", m.phi_margin), ("|theta| <= |theta0|_inf", m.theta_margin)):
        if margin < -100 * TOL_MP:
            raise InvariantViolation(f"step {new.step}: maximum principle {name} violated by {-margin:.3e}")
        if margin < -TOL_MP:
            log.warning("step %d: maximum principle %s violated by %.3e", new.step, name, -margin)
    return new
