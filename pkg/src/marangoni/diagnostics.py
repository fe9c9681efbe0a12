"""Energies, higher-order functionals, temperature thresholds and invariant monitors."""
from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .coefficients import PhysicalParams, double_well
from .dynamics import SimState, TOL_MP
from .errors import ConfigError, SolverError
from .fields import (Grid, ScalarField, VectorField, cell_inner, corner_weights, divergence,
                     face_grad_sq_cells, face_inner, laplacian, symmetric_gradient_norm_sq)


@dataclass(frozen=True)
class SobolevConstants:
    c1: float
    c2: float
    c3: float
    cp: float
    estimated: bool = True

    def __post_init__(self):
        for name in ("c1", "c2", "c3", "cp"):
            val = getattr(self, name)
            if not (val > 0 and math.isfinite(val)):
                raise ConfigError(f"Sobolev constant {name} must be positive, got {val}")


@dataclass(frozen=True)
class Thresholds:
    theta1: float
    theta2: float
    zeta: float
    omega: float
    mu_lo: float
    mu_hi: float
    kap_lo: float
    kap_hi: float
    constants: SobolevConstants


@dataclass
class DiagnosticsRecord:
    step: int
    t: float
    u_l2_sq: float
    grad_u_l2_sq: float
    visc_dissipation: float
    grad_phi_l2_sq: float
    w_integral: float
    mixing_energy: float
    total_energy: float
    H: float
    Y: float
    ac_residual_l2: float
    theta_l2_sq: float
    grad_theta_l2_sq: float
    lap_theta_l2_sq: float
    grad_theta_hat_l2_sq: float
    theta_linf: float
    phi_min: float
    phi_max: float
    theta_t_l2: float
    div_u_linf: float
    energy_law_residual: float = 0.0
    theta_t_valid: bool = True

    def is_finite(self) -> bool:
        return all(math.isfinite(float(getattr(self, f.name))) for f in dataclasses.fields(self))


RECORD_FIELDS = tuple(f.name for f in dataclasses.fields(DiagnosticsRecord))


# ------------------------------------------------------------- thresholds

def _bisect(f, lo, hi, maxiter=200):
    """Last point where the decreasing predicate ``f`` holds, to ulp resolution."""
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return lo, hi
        if f(mid):
            lo = mid
        else:
            hi = mid
    raise SolverError("threshold bisection did not converge")


def compute_thresholds(params: PhysicalParams, consts: SobolevConstants,
                       omega: float = 1.0) -> Thresholds:
    """Initial-temperature thresholds below which the energy law holds.

    The first threshold is the fixed point of
    ``l = sqrt(a gamma min_{|s|<=l} mu(s) / (2 lambda0)) / (2 c1 c2 |b|)``;
    the right-hand side is non-increasing in ``l``, so bisection on
    ``[0, rhs(0)]`` brackets it.  The second is the largest ``l <= theta1``
    with ``l max_{|s|<=l} |kappa'(s)| <= kappa_lo / (4 c3)``.
    Coefficient extrema are exact for the supported families.
    """
    if not omega > 0:
        raise ConfigError(f"omega must be positive, got {omega}")
    pre = 1.0 / (2.0 * consts.c1 * consts.c2 * abs(params.b))

    def rhs(l):
        return pre * math.sqrt(params.a * params.gamma * params.mu.extrema(-l, l)[0] / (2.0 * params.lambda0))

    hi = rhs(0.0)
    if rhs(hi) >= hi:
        theta1 = hi
    else:
        _, theta1 = _bisect(lambda l: rhs(l) >= l, 0.0, hi)

    mu_lo, mu_hi = params.mu.extrema(-theta1, theta1)
    kap_lo, kap_hi = params.kappa.extrema(-theta1, theta1)
    bound = kap_lo / (4.0 * consts.c3)

    def admissible(l):
        return l * params.kappa.max_abs_derivative(l) <= bound

    if admissible(theta1):
        theta2 = theta1
    else:
        theta2, _ = _bisect(admissible, 0.0, theta1)
    zeta = mu_lo * kap_lo / (4.0 * consts.c3 ** 2 * theta2 ** 2)
    return Thresholds(theta1, theta2, zeta, float(omega), mu_lo, mu_hi, kap_lo, kap_hi, consts)


def _sine_basis(n: int, length: float, kmax: int):
    x = (np.arange(n) + 0.5) * length / n
    k = np.arange(1, kmax + 1)[:, None] * (np.pi / length)
    return np.sin(k * x), k * np.cos(k * x), k


@lru_cache(maxsize=16)
def estimate_constants(grid: Grid, samples: int = 1000, seed: int = 0,
                       safety: float = 1.5) -> SobolevConstants:
    """Empirical interpolation and Poincare constants for the rectangle.

    Each sample is a random band-limited sine series (homogeneous Dirichlet)
    whose derivatives are evaluated analytically at cell centres; norms use the
    midpoint rule.  Returns the largest observed ratio times ``safety``.  The
    draws are sequential, so a larger sample count extends a smaller one.
    """
    if samples < 100:
        raise ValueError(f"need at least 100 samples, got {samples}")
    kmax = max(2, min(grid.nx, grid.ny) // 4)
    sx, cx, kx = _sine_basis(grid.nx, grid.lx, kmax)
    sy, cy, ky = _sine_basis(grid.ny, grid.ly, kmax)
    kx2 = (kx ** 2)
    ky2 = (ky ** 2).T
    area = grid.cell_area
    rng = np.random.default_rng(seed)
    best = np.zeros(4)
    for _ in range(samples):
        decay = rng.uniform(0.5, 3.0)
        keep = rng.uniform(0.05, 1.0)
        coef = rng.standard_normal((kmax, kmax))
        mask = rng.uniform(size=(kmax, kmax)) < keep
        mask[rng.integers(kmax), rng.integers(kmax)] = True
        a = coef * mask / (kx2 + ky2) ** (decay / 2.0)

        f = sx.T @ a @ sy
        fx = cx.T @ a @ sy
        fy = sx.T @ a @ cy
        fxx = -(sx.T @ (kx2 * a) @ sy)
        fyy = -(sx.T @ (a * ky2) @ sy)
        fxy = cx.T @ a @ cy

        l2 = math.sqrt(np.sum(f * f) * area)
        grad2 = np.sum(fx * fx + fy * fy) * area
        lap = math.sqrt(np.sum((fxx + fyy) ** 2) * area)
        hess2 = np.sum(fxx ** 2 + 2.0 * fxy ** 2 + fyy ** 2) * area
        h2 = math.sqrt(l2 * l2 + grad2 + hess2)
        linf = float(np.max(np.abs(f)))
        grad_l4_sq = math.sqrt(np.sum((fx * fx + fy * fy) ** 2) * area)

        ratios = (grad_l4_sq / (h2 * linf), h2 / (lap + l2),
                  grad_l4_sq / (lap * linf), l2 / math.sqrt(grad2))
        best = np.maximum(best, ratios)
    c1, c2, c3, cp = (safety * best).tolist()
    return SobolevConstants(c1, c2, c3, cp, estimated=True)


# ------------------------------------------------------------ functionals

def mixing_energy(phi: ScalarField, params: PhysicalParams) -> float:
    """Ginzburg-Landau energy ``int(|grad phi|^2 / 2 + W(phi))``."""
    w, _ = double_well(phi.values, params.eps)
    return float(np.sum(0.5 * face_grad_sq_cells(phi) + w)) * phi.grid.cell_area


def isothermal_energy(state: SimState, params: PhysicalParams) -> float:
    """``|u|^2 / 2 + lambda0 a E(phi)``, the Lyapunov functional when the surface tension is constant."""
    return 0.5 * face_inner(state.u, state.u) + params.capillary_scale * mixing_energy(state.phi, params)


def grad_velocity_l2_sq(w: VectorField) -> float:
    """Discrete ``||grad w||^2``: normal derivatives at cells, tangential ones at corners."""
    g = w.grid
    ux = (w.u[1:, :] - w.u[:-1, :]) / g.dx
    vy = (w.v[:, 1:] - w.v[:, :-1]) / g.dy
    uy = np.empty((g.nx + 1, g.ny + 1))
    uy[:, 1:-1] = (w.u[:, 1:] - w.u[:, :-1]) / g.dy
    uy[:, 0] = 2.0 * w.u[:, 0] / g.dy
    uy[:, -1] = -2.0 * w.u[:, -1] / g.dy
    vx = np.empty((g.nx + 1, g.ny + 1))
    vx[1:-1, :] = (w.v[1:, :] - w.v[:-1, :]) / g.dx
    vx[0, :] = 2.0 * w.v[0, :] / g.dx
    vx[-1, :] = -2.0 * w.v[-1, :] / g.dx
    cw = corner_weights(g)
    return (float(np.sum(ux * ux + vy * vy)) + float(np.sum(cw * (uy * uy + vx * vx)))) * g.cell_area


def viscous_dissipation(w: VectorField, theta: ScalarField, params: PhysicalParams) -> float:
    """``2 int mu(theta) |D w|^2``."""
    return 2.0 * cell_inner(params.mu(theta.values), symmetric_gradient_norm_sq(w).values, w.grid)


def allen_cahn_residual(phi: ScalarField, params: PhysicalParams) -> np.ndarray:
    """Chemical potential ``Lap phi - W'(phi)`` at cell centres."""
    _, wp = double_well(phi.values, params.eps)
    return laplacian(phi).values - wp


def total_energy(state: SimState, thr: Thresholds, params: PhysicalParams) -> float:
    g = state.grid
    al = params.capillary_scale
    w, _ = double_well(state.phi.values, params.eps)
    th = state.theta.values
    return (face_inner(state.u, state.u)
            + al * float(np.sum(face_grad_sq_cells(state.phi))) * g.cell_area
            + 2.0 * al * float(np.sum(w)) * g.cell_area
            + thr.zeta * float(np.sum(face_grad_sq_cells(state.theta))) * g.cell_area
            + thr.omega * cell_inner(th, th, g))


def energy_from_record(rec: DiagnosticsRecord, thr: Thresholds, params: PhysicalParams) -> float:
    al = params.capillary_scale
    return (rec.u_l2_sq + al * rec.grad_phi_l2_sq + 2.0 * al * rec.w_integral
            + thr.zeta * rec.grad_theta_l2_sq + thr.omega * rec.theta_l2_sq)


def energy_law_residual(prev: DiagnosticsRecord, nxt: DiagnosticsRecord, dt: float,
                        thr: Thresholds, params: PhysicalParams) -> float:
    """Discrete form of ``dE/dt + dissipation``; non-positive for the continuous flow."""
    return ((nxt.total_energy - prev.total_energy) / dt
            + 0.5 * thr.mu_lo * nxt.grad_u_l2_sq
            + params.capillary_scale * params.gamma * nxt.ac_residual_l2 ** 2
            + 0.5 * thr.zeta * thr.kap_lo * nxt.lap_theta_l2_sq)


def energy_law_tolerance(prev: DiagnosticsRecord, dt: float, dx: float) -> float:
    return max(10.0 * dt, 10.0 * dx * dx) * (1.0 + abs(prev.total_energy))


def _theta_t(state: SimState, prev_theta: Optional[ScalarField], dt: Optional[float]):
    if prev_theta is None or not dt:
        return np.zeros(state.grid.shape), False
    return (state.theta.values - prev_theta.values) / dt, True


def higher_order_functionals(state: SimState, prev_theta: Optional[ScalarField], dt: Optional[float],
                             params: PhysicalParams, eta: float = 1.0) -> tuple[float, float]:
    """Return ``(H, Y)``; with no previous temperature the time derivative is taken as zero."""
    rec = make_record(state, None, params, prev_theta, dt, eta)
    return rec.H, rec.Y


def make_record(state: SimState, thr: Optional[Thresholds], params: PhysicalParams,
                prev_theta: Optional[ScalarField] = None, dt: Optional[float] = None,
                eta: float = 1.0, prev: Optional[DiagnosticsRecord] = None) -> DiagnosticsRecord:
    """Evaluate every diagnostic for ``state``.

    ``thr`` may be omitted when only the threshold-free entries are needed;
    the total energy then carries no temperature terms.  ``prev`` (the record
    of the preceding step) enables the energy-law residual.
    """
    g = state.grid
    area = g.cell_area
    al = params.capillary_scale
    w, _ = double_well(state.phi.values, params.eps)
    th = state.theta.values
    theta_hat = ScalarField(g, th - state.theta0.values, state.theta.bc)
    tt, tt_valid = _theta_t(state, prev_theta, dt)

    u_l2_sq = face_inner(state.u, state.u)
    grad_u = grad_velocity_l2_sq(state.u)
    visc = viscous_dissipation(state.u, state.theta, params)
    grad_phi = float(np.sum(face_grad_sq_cells(state.phi))) * area
    w_int = float(np.sum(w)) * area
    ac = allen_cahn_residual(state.phi, params)
    ac_l2 = math.sqrt(cell_inner(ac, ac, g))
    theta_l2 = cell_inner(th, th, g)
    grad_theta = float(np.sum(face_grad_sq_cells(state.theta))) * area
    lap = laplacian(state.theta).values
    lap_theta = cell_inner(lap, lap, g)
    grad_hat = float(np.sum(face_grad_sq_cells(theta_hat))) * area
    tt_l2_sq = cell_inner(tt, tt, g)

    rec = DiagnosticsRecord(
        step=state.step,
        t=state.t,
        u_l2_sq=u_l2_sq,
        grad_u_l2_sq=grad_u,
        visc_dissipation=visc,
        grad_phi_l2_sq=grad_phi,
        w_integral=w_int,
        mixing_energy=0.5 * grad_phi + w_int,
        total_energy=0.0,
        H=(u_l2_sq + grad_u + visc + al * grad_phi + 2.0 * al * w_int
           + ac_l2 ** 2 + grad_hat + tt_l2_sq),
        Y=visc + ac_l2 ** 2 + eta * tt_l2_sq,
        ac_residual_l2=ac_l2,
        theta_l2_sq=theta_l2,
        grad_theta_l2_sq=grad_theta,
        lap_theta_l2_sq=lap_theta,
        grad_theta_hat_l2_sq=grad_hat,
        theta_linf=float(np.max(np.abs(th))),
        phi_min=float(np.min(state.phi.values)),
        phi_max=float(np.max(state.phi.values)),
        theta_t_l2=math.sqrt(tt_l2_sq),
        div_u_linf=float(np.max(np.abs(divergence(state.u).values))),
        theta_t_valid=tt_valid,
    )
    if thr is not None:
        rec.total_energy = energy_from_record(rec, thr, params)
        if prev is not None and dt:
            rec.energy_law_residual = energy_law_residual(prev, rec, dt, thr, params)
    else:
        rec.total_energy = u_l2_sq + al * grad_phi + 2.0 * al * w_int
    return rec


# --------------------------------------------------------------- monitors

@dataclass(frozen=True)
class MaxPrincipleReport:
    phi_margin: float
    theta_margin: float
    ok: bool

    def __iter__(self):
        return iter((self.phi_margin, self.theta_margin, self.ok))


def max_principle_report(state: SimState) -> MaxPrincipleReport:
    phi_margin = 1.0 - float(np.max(np.abs(state.phi.values)))
    theta_margin = state.theta0_linf() - float(np.max(np.abs(state.theta.values)))
    return MaxPrincipleReport(phi_margin, theta_margin, phi_margin >= -TOL_MP and theta_margin >= -TOL_MP)


def decay_quantity(rec: DiagnosticsRecord) -> float:
    return (rec.grad_u_l2_sq + rec.ac_residual_l2 ** 2
            + rec.theta_l2_sq + rec.grad_theta_l2_sq + rec.lap_theta_l2_sq)


def decay_monitor(series: Sequence[DiagnosticsRecord], window: int) -> str:
    """``"decaying"`` when the trailing-window mean of the dissipation proxy is
    at most 1% of the leading-window mean, else ``"not-yet"``."""
    if window < 1:
        raise ValueError("window must be >= 1")
    if len(series) < 2 * window:
        raise ValueError(f"need at least {2 * window} records, got {len(series)}")
    q = np.array([decay_quantity(r) for r in series])
    lead = float(np.mean(q[:window]))
    trail = float(np.mean(q[-window:]))
    return "decaying" if trail <= 0.01 * lead else "not-yet"


# --------------------------------------------------------------------- csv

def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def record_row(rec: DiagnosticsRecord) -> str:
    return ",".join(format_value(getattr(rec, name)) for name in RECORD_FIELDS)


def csv_header() -> str:
    return ",".join(RECORD_FIELDS)


def read_diagnostics_csv(path) -> list[DiagnosticsRecord]:
    """Parse a diagnostics CSV; raises ``ValueError`` naming the offending line."""
    types = {f.name: f.type for f in dataclasses.fields(DiagnosticsRecord)}
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty diagnostics file") from None
        if tuple(header) != RECORD_FIELDS:
            missing = set(RECORD_FIELDS) - set(header)
            raise ValueError(f"{path}: unexpected header (missing {sorted(missing)})")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} columns, got {len(row)}")
            vals = {}
            try:
                for name, text in zip(header, row):
                    if types[name] in ("int", int):
                        vals[name] = int(text)
                    elif types[name] in ("bool", bool):
                        vals[name] = text.strip() == "1"
                    else:
                        vals[name] = float(text)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric entry in column {name!r}") from None
            out.append(DiagnosticsRecord(**vals))
    return out
