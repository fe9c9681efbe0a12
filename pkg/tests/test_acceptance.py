"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``python3 tests/test_acceptance.py`` or ``pytest tests/test_acceptance.py -s``;
the lines are also collected into the pytest terminal summary.
"""
import math
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.sparse.linalg import eigsh

from marangoni.cli import ExitStatus, run, thresholds_for
from marangoni.coefficients import CoefficientFn, PhysicalParams, inverse_kirchhoff, kirchhoff, mollify
from marangoni.config import load_config, with_overrides
from marangoni.diagnostics import (SobolevConstants, compute_thresholds, energy_law_tolerance,
                                   estimate_constants, isothermal_energy)
from marangoni.dynamics import SimState, StepConfig, advance, project, stability_bounds, step_temperature
from marangoni.fields import (BoundaryData, Grid, ScalarField, VectorField, advect_upwind, divergence,
                              gradient, laplacian)
from marangoni.linalg import dirichlet_laplacian_matrix

from conftest import ACCEPTANCE_LINES, band_limited, dense_dirichlet_oracle

CANONICAL = Path(__file__).resolve().parent.parent / "configs" / "thermal_cavity.cfg"
PARAMS = PhysicalParams()


class Criterion:
    """Collects named checks and the wall time of one criterion."""

    def __init__(self, number: int, title: str, limit: float):
        self.number, self.title, self.limit = number, title, limit
        self.checks: list[tuple[str, bool, str]] = []
        self.start = time.perf_counter()

    def check(self, name: str, ok, detail: str = ""):
        self.checks.append((name, bool(ok), detail))

    def finish(self):
        elapsed = time.perf_counter() - self.start
        self.check("runtime", elapsed < self.limit, f"{elapsed:.2f} s < {self.limit:g} s")
        ok = all(c[1] for c in self.checks)
        parts = "; ".join(f"{n} {d}".strip() + ("" if good else " [failed]") for n, good, d in self.checks)
        line = f"{'PASS' if ok else 'FAIL'} [{self.number}] {self.title}: {parts}"
        print(line)
        ACCEPTANCE_LINES.append(line)
        assert ok, line


def tanh_trace(eps):
    return lambda x, y: np.tanh((x - 0.5) / (math.sqrt(2) * eps))


def gaussian(grid, amp, sigma=0.1):
    X, Y = grid.cell_centers()
    bump = np.exp(-((X - 0.5) ** 2 + (Y - 0.5) ** 2) / (2 * sigma ** 2))
    return amp * bump / bump.max()


def random_phase_state(theta0=None):
    g = Grid(32, 32)
    phi0 = np.random.default_rng(2024).uniform(-1.0, 1.0, g.shape)
    return SimState.initial(g, phi0, BoundaryData.from_function(g, tanh_trace(PARAMS.eps)), theta0)


# --------------------------------------------------------------- criteria

def test_criterion_01_phase_maximum_principle():
    c = Criterion(1, "phase maximum principle", 10)
    s = random_phase_state()
    dt = 0.9 * PARAMS.eps ** 2 / (2 * PARAMS.gamma)
    cfg = StepConfig(dt, advection="upwind")
    worst = 0.0
    for _ in range(2000):
        s = advance(s, cfg, PARAMS)
        worst = max(worst, float(np.max(np.abs(s.phi.values))))
    c.check("max|phi| <= 1 + 1e-8 over 2000 steps", worst <= 1 + 1e-8, f"(max {worst:.12f})")
    c.finish()


def test_criterion_02_temperature_maximum_principle():
    c = Criterion(2, "temperature maximum principle", 10)
    g = Grid(32, 32)
    s = random_phase_state(gaussian(g, 0.5))
    th0 = s.theta0_linf()
    cfg = StepConfig(0.9 * PARAMS.eps ** 2 / (2 * PARAMS.gamma), advection="upwind")
    norms = [th0]
    for _ in range(2000):
        s = advance(s, cfg, PARAMS)
        norms.append(float(np.max(np.abs(s.theta.values))))
    rises = np.diff(norms)
    c.check("||theta||_inf non-increasing", np.all(rises <= 0.0), f"(largest step change {rises.max():.3e})")
    c.check("final <= ||theta0||_inf + 1e-10", norms[-1] <= th0 + 1e-10, f"({norms[-1]:.3e} vs {th0:.3e})")
    c.finish()


def test_criterion_03_isothermal_energy_law():
    c = Criterion(3, "isothermal energy law", 10)
    p = PhysicalParams(isothermal=True, ra=0.0)
    g = Grid(32, 32)
    X, Y = g.cell_centers()
    # a wavy interface relaxes towards the planar kink but never disappears
    wavy = lambda x, y: np.tanh((x - 0.5 + 0.1 * np.sin(2 * np.pi * y)) / (math.sqrt(2) * p.eps))
    xc = np.arange(g.nx + 1) * g.dx
    yc = np.arange(g.ny + 1) * g.dy
    psi = 0.05 * np.outer(np.sin(np.pi * xc) ** 2, np.sin(np.pi * yc) ** 2)
    u0 = VectorField(g, np.diff(psi, axis=1) / g.dy, -np.diff(psi, axis=0) / g.dx)
    s = SimState.initial(g, wavy(X, Y), BoundaryData.from_function(g, wavy), None, u0)
    dt = 0.9 * min(stability_bounds(g, p, 0.0).values())
    cfg = StepConfig(dt)
    energies = [isothermal_energy(s, p)]
    for _ in range(500):
        s = advance(s, cfg, p)
        energies.append(isothermal_energy(s, p))
    jumps = np.diff(energies)
    c.check("E(n+1) - E(n) <= 10 dt^2 every step", np.all(jumps <= 10 * dt * dt),
            f"(max increase {jumps.max():.3e}, slack {10 * dt * dt:.3e})")
    c.check("energy dissipated", energies[-1] < energies[0], f"({energies[0]:.6f} -> {energies[-1]:.6f})")
    c.finish()


def _canonical(tmp_path, name, **overrides):
    cfg = with_overrides(load_config(CANONICAL), output_dir=str(tmp_path / name), **overrides)
    return cfg, run(cfg)


def test_criterion_04_dissipative_energy_law(tmp_path):
    c = Criterion(4, "dissipative energy law under theta2", 30)
    base = load_config(CANONICAL)
    thr = thresholds_for(base)
    dt = base.time_step(0.9 * thr.theta2)
    cfg, res = _canonical(tmp_path, "law", t_end=1000 * dt)
    recs = res.records
    c.check("run succeeded", res.status == ExitStatus.SUCCESS, f"({res.status.name.lower()})")
    c.check("theta0 = 0.9 theta2", math.isclose(res.summary["theta0_linf"], 0.9 * thr.theta2, rel_tol=1e-12),
            f"(theta2 = {thr.theta2:.6g}, estimated constants)")
    c.check("1000 steps", recs[-1].step == 1000)
    passed = sum(r.energy_law_residual <= energy_law_tolerance(q, r.t - q.t, cfg.grid.dx)
                 for q, r in zip(recs[:-1], recs[1:]))
    rate = passed / (len(recs) - 1)
    c.check("residual <= tol_E on >= 99% of steps", rate >= 0.99, f"({100 * rate:.2f}%)")
    c.check("E(T) <= E(0)", recs[-1].total_energy <= recs[0].total_energy,
            f"({recs[0].total_energy:.6f} -> {recs[-1].total_energy:.6f})")
    c.finish()


def test_criterion_05_decay_to_steady_state(tmp_path):
    c = Criterion(5, "decay and steady-state convergence", 120)
    cfg, res = _canonical(tmp_path, "long")
    c.check("run succeeded", res.status == ExitStatus.SUCCESS, f"({res.status.name.lower()}, T = {res.state.t:.4g})")
    c.check("T >= 50", res.state.t >= 50 - 1e-9)
    s = res.summary
    c.check("decay verdict", s["decay_verdict"] == "decaying", f"({s['decay_verdict']})")
    c.check("steady solve converged", s["steady_converged"])
    c.check("distance_to_steady < 1e-6", s["distance_to_steady"] < 1e-6, f"({s['distance_to_steady']:.3e})")
    first = next(r for r in res.records if r.u_l2_sq > 0)
    ratio = math.sqrt(res.records[-1].u_l2_sq / first.u_l2_sq)
    c.check("||u(T)|| <= 0.01 ||u(t1)||", ratio <= 0.01, f"(ratio {ratio:.3e}, t1 = {first.t:.4g})")
    c.finish()


def test_criterion_06_kirchhoff_transform(rng):
    c = Criterion(6, "Kirchhoff transform", 1)
    # constant diffusivity: the transformed step must equal a direct implicit heat step
    g = Grid(12, 12)
    kap = 0.7
    p = PhysicalParams(kappa=CoefficientFn.constant(kap))
    theta0 = band_limited(g, rng)
    xc = np.arange(g.nx + 1) * g.dx
    yc = np.arange(g.ny + 1) * g.dy
    psi = 0.5 * np.outer(np.sin(np.pi * xc) ** 2, np.sin(np.pi * yc) ** 2)
    u0 = VectorField(g, np.diff(psi, axis=1) / g.dy, -np.diff(psi, axis=0) / g.dx)
    s = SimState.initial(g, np.ones(g.shape), BoundaryData.constant(g, 1.0), theta0, u0)
    dt = 0.002
    got = step_temperature(s, StepConfig(dt), p).values
    M = np.eye(g.nx * g.ny) - dt * kap * dirichlet_laplacian_matrix(g).toarray()
    rhs = theta0 - dt * advect_upwind(s.theta, s.u).values
    direct = np.linalg.solve(M, rhs.ravel()).reshape(g.shape)
    err = np.max(np.abs(got - direct))
    c.check("constant-kappa bypass", err <= 1e-10, f"({err:.1e})")

    fams = [CoefficientFn.constant(0.5), CoefficientFn.quadratic(1.0, 3.0), CoefficientFn.exponential(1.0, 0.7),
            CoefficientFn.exponential(0.03, -0.2), CoefficientFn.quadratic(0.03, 0.05)]
    theta = np.linspace(-10, 10, 2001)
    rt = max(np.max(np.abs(inverse_kirchhoff(kirchhoff(theta, k), k) - theta)) for k in fams)
    c.check("round trip on [-10, 10]", rt <= 1e-10, f"({rt:.1e})")

    h = 1e-3
    worst = 0.0
    for k in fams[:3]:
        vt = kirchhoff(np.linspace(-3, 3, 61), k)
        chi = lambda x: inverse_kirchhoff(x, k)
        d = (-chi(vt + 2 * h) + 8 * chi(vt + h) - 8 * chi(vt - h) + chi(vt - 2 * h)) / (12 * h)
        worst = max(worst, np.max(np.abs(1.0 / d - k(chi(vt)))))
    c.check("chi' = 1/kappa", worst <= 1e-9, f"({worst:.1e})")
    c.finish()


def test_criterion_07_projection_and_operator_identities(rng):
    c = Criterion(7, "projection and operator identities", 1)
    g = Grid(16, 16)
    cfg = StepConfig(0.01)
    div_max = 0.0
    for _ in range(5):
        w = VectorField(g, rng.standard_normal((17, 16)), rng.standard_normal((16, 17))).enforce_no_slip()
        proj, _ = project(w, cfg)
        div_max = max(div_max, float(np.max(np.abs(divergence(proj).values))))
    c.check("post-projection max|div| <= 1e-9", div_max <= 1e-9, f"({div_max:.1e})")

    sbp = 0.0
    for _ in range(5):
        w = VectorField(g, rng.standard_normal((17, 16)), rng.standard_normal((16, 17))).enforce_no_slip()
        f = ScalarField(g, rng.standard_normal(g.shape), BoundaryData.zeros(g))
        gr = gradient(f)
        lhs = float(np.sum(divergence(w).values * f.values))
        rhs = -(float(np.sum(w.u * gr.u)) + float(np.sum(w.v * gr.v)))
        sbp = max(sbp, abs(lhs - rhs) / max(1.0, abs(lhs)))
        # div of a Dirichlet gradient is the Dirichlet Laplacian
        sbp = max(sbp, float(np.max(np.abs(divergence(gr).values - laplacian(f).values)))
                  / float(np.max(np.abs(laplacian(f).values))))
    c.check("summation by parts", sbp <= 1e-12, f"({sbp:.1e})")

    g8 = Grid(8, 8)
    bc = BoundaryData(*(rng.uniform(-1, 1, n) for n in (8, 8, 8, 8)))
    vals = band_limited(g8, rng) + 0.1 * rng.standard_normal(g8.shape)
    A, cvec = dense_dirichlet_oracle(g8, bc)
    expected = (A @ vals.ravel() + cvec).reshape(g8.shape)
    lap_err = np.max(np.abs(laplacian(ScalarField(g8, vals, bc)).values - expected)) / np.max(np.abs(expected))
    c.check("laplacian vs dense oracle (8x8)", lap_err <= 1e-12, f"({lap_err:.1e})")
    c.finish()


def test_criterion_08_threshold_closed_forms():
    c = Criterion(8, "threshold closed forms", 1)
    p = PhysicalParams(lambda0=1.0, a=2.0, b=1.0, gamma=1.0, mu=CoefficientFn.constant(1.0),
                       kappa=CoefficientFn.constant(1.0))
    thr = compute_thresholds(p, SobolevConstants(1.0, 1.0, 1.0, 1.0))
    c.check("theta1 = 0.5", abs(thr.theta1 - 0.5) <= 1e-12, f"({thr.theta1!r})")
    p2 = PhysicalParams(lambda0=0.3, a=1.5, b=-0.7, gamma=0.2, mu=CoefficientFn.constant(0.6),
                        kappa=CoefficientFn.constant(2.0))
    t2 = compute_thresholds(p2, SobolevConstants(1.3, 0.8, 1.0, 1.0))
    closed = math.sqrt(1.5 * 0.2 * 0.6 / (2 * 0.3)) / (2 * 1.3 * 0.8 * 0.7)
    c.check("theta1 closed form (generic)", abs(t2.theta1 - closed) <= 1e-12, f"({abs(t2.theta1 - closed):.1e})")
    c.check("constant kappa: theta2 = theta1", thr.theta2 == thr.theta1 and t2.theta2 == t2.theta1)
    c.check("zeta = 1.0", abs(thr.zeta - 1.0) <= 1e-12, f"({thr.zeta!r})")
    c.finish()


def test_criterion_09_mollification():
    c = Criterion(9, "mollification plateau", 1)
    worst_plateau, flat, bounded = 0.0, True, True
    for base in (PARAMS.mu, PARAMS.kappa, CoefficientFn.exponential(1.0, -0.7), CoefficientFn.quadratic(0.2, 4.0)):
        for linf in (0.05, 0.3, 1.2):
            m = mollify(base, linf)
            s = np.linspace(-linf, linf, 100)
            worst_plateau = max(worst_plateau, float(np.max(np.abs(m(s) - base(s)))))
            far = np.concatenate([np.linspace(5 * m.r, 50 * m.r, 200), -np.linspace(5 * m.r, 50 * m.r, 200)])
            flat &= bool(np.all(m(far) == m.lower))
            every = np.linspace(-60 * m.r, 60 * m.r, 20001)
            vals = m(every)
            bounded &= bool(np.all((vals >= m.lower) & (vals <= m.upper)))
    c.check("agrees on |s| <= ||theta0||", worst_plateau <= 1e-9, f"({worst_plateau:.1e})")
    c.check("constant lower value for |s| >= 5r", flat)
    c.check("lower <= value <= upper", bounded)
    c.finish()


def test_criterion_10_self_convergence():
    c = Criterion(10, "self-convergence", 60)
    p = PhysicalParams(eps=0.2, gamma=1.0, lambda0=0.01, mu=CoefficientFn.exponential(0.5, 0.2),
                       kappa=CoefficientFn.quadratic(0.5, 0.5))

    def state(n):
        g = Grid(n, n)
        X, Y = g.cell_centers()
        prof = lambda x, y: 0.8 * np.sin(np.pi * x) * np.cos(0.5 * np.pi * y)
        return SimState.initial(g, prof(X, Y), BoundaryData.from_function(g, prof),
                                0.3 * np.sin(np.pi * X) * np.sin(np.pi * Y))

    def evolve(n, dt, steps):
        s = state(n)
        cfg = StepConfig(dt)
        for _ in range(steps):
            s = advance(s, cfg, p)
        return s

    def coarsen(a):
        n0, n1 = a.shape
        return a.reshape(n0 // 2, 2, n1 // 2, 2).mean(axis=(1, 3))

    # space: a common dt small enough for the finest grid
    dt = 0.9 * min(stability_bounds(Grid(64, 64), p, 0.3).values())
    steps = round(0.1 / dt)
    runs = {n: evolve(n, dt, steps) for n in (16, 32, 64)}
    orders = []
    for name in ("phi", "theta"):
        a = {n: getattr(runs[n], name).values for n in runs}
        d1 = math.sqrt(np.mean((a[16] - coarsen(a[32])) ** 2))
        d2 = math.sqrt(np.mean((a[32] - coarsen(a[64])) ** 2))
        orders.append(math.log2(d1 / d2))
    c.check("spatial order >= 1.8", min(orders) >= 1.8, f"(phi {orders[0]:.3f}, theta {orders[1]:.3f})")

    # time: dt, dt/2, dt/4 at fixed resolution
    dtc = 0.9 * min(stability_bounds(Grid(32, 32), p, 0.3).values())
    n = round(0.1 / dtc)
    fin = [evolve(32, dtc / k, n * k) for k in (1, 2, 4)]

    def dist(a, b):
        return max(np.max(np.abs(a.phi.values - b.phi.values)), np.max(np.abs(a.theta.values - b.theta.values)),
                   np.max(np.abs(a.u.u - b.u.u)), np.max(np.abs(a.u.v - b.u.v)))

    ratio = dist(fin[0], fin[1]) / dist(fin[1], fin[2])
    c.check("Richardson ratio in [1.5, 2.5]", 1.5 <= ratio <= 2.5, f"({ratio:.3f})")
    c.finish()


def test_criterion_11_poincare_bracket():
    c = Criterion(11, "Poincare constant bracket", 10)
    estimate_constants.cache_clear()
    cp = estimate_constants(Grid(32, 32), samples=1000, seed=0).cp
    # independent reference: smallest eigenvalue of the fine-grid Dirichlet Laplacian
    lam = -eigsh(dirichlet_laplacian_matrix(Grid(128, 128)).tocsc(), k=1, sigma=0, which="LM")[0][0]
    c.check("discrete eigenvalue ~ 2 pi^2", abs(lam - 2 * math.pi ** 2) <= 1e-3 * 2 * math.pi ** 2, f"({lam:.5f})")
    exact = 1 / math.sqrt(2 * math.pi ** 2)
    c.check("c_P in [0.2251, 0.5]", 0.2251 <= cp <= 0.5, f"(c_P = {cp:.4f}, 1/sqrt(lambda1) = {1 / math.sqrt(lam):.4f})")
    c.check("raw estimate below the exact constant", cp / 1.5 <= exact * (1 + 1e-3), f"({cp / 1.5:.4f} vs {exact:.4f})")
    c.finish()


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
