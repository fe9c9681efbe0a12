"""Command-line driver: run a configured simulation, print thresholds, audit a finished run.

Usage::

    marangoni --config run.cfg [--output DIR] [--seed N]
    marangoni --config run.cfg --print-thresholds
    marangoni --audit DIR
"""
from __future__ import annotations

import argparse
import enum
import logging
import math
import re
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import _kernels
from .config import (RunConfig, build_phi0, build_phi_b, build_theta0, build_u0, load_config,
                     parse_config, serialize_config, with_overrides)
from .diagnostics import (DiagnosticsRecord, SobolevConstants, Thresholds, compute_thresholds,
                          csv_header, decay_monitor, energy_from_record, energy_law_residual,
                          energy_law_tolerance, estimate_constants, make_record,
                          max_principle_report, read_diagnostics_csv, record_row)
from .dynamics import SimState, TOL_MP, advance, check_time_step
from .errors import ConfigError, InvariantViolation, SolverError
from .fields import BoundaryData, ScalarField, VectorField, read_snapshot, write_snapshot
from .steady import SteadySolveConfig, distance_to_steady, solve_steady_phase

log = logging.getLogger("marangoni")

SNAPSHOT_FIELDS = ("u", "v", "p", "phi", "theta")
_SNAP_RE = re.compile(r"^snap_(\d+)_([a-z_]+)\.csv$")


class ExitStatus(enum.IntEnum):
    SUCCESS = 0
    CONFIG_ERROR = 1
    INVARIANT_ABORT = 2
    SOLVER_FAILURE = 3
    IO_FAILURE = 4


# ------------------------------------------------------------- thresholds

def sobolev_constants(cfg: RunConfig) -> SobolevConstants:
    over = cfg.sobolev_overrides()
    if len(over) == 4:
        return SobolevConstants(**over, estimated=False)
    est = estimate_constants(cfg.grid, cfg.sobolev_samples, cfg.seed)
    vals = {k: over.get(k, getattr(est, k)) for k in ("c1", "c2", "c3", "cp")}
    return SobolevConstants(**vals, estimated=True)


def thresholds_for(cfg: RunConfig) -> Thresholds:
    return compute_thresholds(cfg.params, sobolev_constants(cfg), cfg.omega)


def threshold_report(thr: Thresholds, theta0_linf: Optional[float] = None) -> dict:
    c = thr.constants
    out = {
        "theta1": thr.theta1, "theta2": thr.theta2, "zeta": thr.zeta, "omega": thr.omega,
        "mu_lo": thr.mu_lo, "mu_hi": thr.mu_hi, "kap_lo": thr.kap_lo, "kap_hi": thr.kap_hi,
        "c1": c.c1, "c2": c.c2, "c3": c.c3, "cp": c.cp,
        # estimated constants are empirical lower bounds on the true ones
        "constants_source": "estimated" if c.estimated else "config",
    }
    if theta0_linf is not None:
        out["theta0_linf"] = theta0_linf
        out["theta0_below_theta1"] = theta0_linf <= thr.theta1
        out["theta0_below_theta2"] = theta0_linf <= thr.theta2
    return out


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def write_kv(path: Path, items: dict):
    path.write_text("".join(f"{k}={_fmt(v)}\n" for k, v in items.items()))


def read_kv(path: Path) -> dict:
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


# -------------------------------------------------------------- snapshots

def snapshot_steps(run_dir: Path) -> dict[int, set]:
    found: dict[int, set] = {}
    for p in Path(run_dir).iterdir():
        m = _SNAP_RE.match(p.name)
        if m:
            found.setdefault(int(m.group(1)), set()).add(m.group(2))
    return found


def write_state(out: Path, state: SimState, prev_theta: Optional[ScalarField]):
    g = state.grid
    arrays = {"u": state.u.u, "v": state.u.v, "p": state.p.values,
              "phi": state.phi.values, "theta": state.theta.values}
    if prev_theta is not None:
        arrays["theta_prev"] = prev_theta.values
    for name, vals in arrays.items():
        write_snapshot(out / f"snap_{state.step}_{name}.csv", name, vals, state.t, g.dx, g.dy)


def load_state(run_dir: Path, step: int, cfg: RunConfig, phi_b: BoundaryData,
               theta0: np.ndarray) -> tuple[SimState, Optional[ScalarField]]:
    g = cfg.grid
    snaps = {}
    for name in SNAPSHOT_FIELDS + ("theta_prev",):
        path = Path(run_dir) / f"snap_{step}_{name}.csv"
        if name == "theta_prev" and not path.exists():
            continue
        snaps[name] = read_snapshot(path)
    for name, shape in (("u", (g.nx + 1, g.ny)), ("v", (g.nx, g.ny + 1)), ("p", g.shape),
                        ("phi", g.shape), ("theta", g.shape)):
        if snaps[name].values.shape != shape:
            raise ConfigError(f"snapshot {name} at step {step} has shape {snaps[name].values.shape}, "
                              f"expected {shape}")
    zero = BoundaryData.zeros(g)
    state = SimState(
        t=snaps["phi"].t,
        u=VectorField(g, snaps["u"].values, snaps["v"].values),
        p=ScalarField(g, snaps["p"].values, None),
        phi=ScalarField(g, snaps["phi"].values, phi_b),
        theta=ScalarField(g, snaps["theta"].values, zero),
        theta0=ScalarField(g, theta0, zero),
        step=step,
    )
    prev = ScalarField(g, snaps["theta_prev"].values, zero) if "theta_prev" in snaps else None
    return state, prev


# ---------------------------------------------------------------------- run

@dataclass
class RunResult:
    status: ExitStatus
    records: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    state: Optional[SimState] = None
    message: str = ""


def _initial_state(cfg: RunConfig, thr: Thresholds):
    grid, params = cfg.grid, cfg.params
    phi_b = build_phi_b(cfg, grid, params)
    if cfg.restart_from:
        src = Path(cfg.restart_from)
        theta0 = read_snapshot(src / "theta0.csv").values
        available = snapshot_steps(src)
        complete = sorted(s for s, names in available.items() if set(SNAPSHOT_FIELDS) <= names)
        if not complete:
            raise ConfigError(f"restart_from {src}: no complete snapshot set")
        step = cfg.restart_step if cfg.restart_step is not None else complete[-1]
        if step not in complete:
            raise ConfigError(f"restart_step {step} not available in {src} (have {complete})")
        state, prev_theta = load_state(src, step, cfg, phi_b, theta0)
        history = [r for r in read_diagnostics_csv(src / "diagnostics.csv") if r.step <= step]
        return state, prev_theta, history
    theta0 = build_theta0(cfg, grid, thr)
    if not np.all(np.isfinite(theta0)):
        raise ConfigError("ic_theta: could not evaluate the initial temperature")
    state = SimState.initial(grid, build_phi0(cfg, grid, params), phi_b, theta0, build_u0(cfg, grid))
    return state, None, []


def run(cfg: RunConfig) -> RunResult:
    """Step to ``t_end`` writing diagnostics, snapshots and a summary into ``cfg.output_dir``."""
    out = Path(cfg.output_dir)
    try:
        thr = thresholds_for(cfg)
        state, prev_theta, history = _initial_state(cfg, thr)
        params, grid = cfg.params, cfg.grid
        theta0_linf = state.theta0_linf()
        step_cfg = cfg.step_config(theta0_linf)
        check_time_step(step_cfg, grid, params, theta0_linf)
    except (ConfigError, ValueError) as exc:
        return RunResult(ExitStatus.CONFIG_ERROR, message=str(exc))

    dt = step_cfg.dt
    total_steps = max(1, math.ceil(cfg.t_end / dt - 1e-9))
    records: list[DiagnosticsRecord] = list(history)
    status, message = ExitStatus.SUCCESS, ""
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.txt").write_text(serialize_config(cfg))
        write_snapshot(out / "theta0.csv", "theta0", state.theta0.values, 0.0, grid.dx, grid.dy)
        with open(out / "diagnostics.csv", "w") as fh:
            fh.write(csv_header() + "\n")
            for rec in records:
                fh.write(record_row(rec) + "\n")
            if not records:
                rec = make_record(state, thr, params, None, None, cfg.eta)
                records.append(rec)
                fh.write(record_row(rec) + "\n")
                write_state(out, state, None)
            fh.flush()
            report_every = max(1, total_steps // 10)
            try:
                while state.step < total_steps:
                    prev_theta = state.theta
                    state = advance(state, step_cfg, params)
                    last = state.step == total_steps
                    if state.step % cfg.diagnostics_every == 0 or last:
                        prev_rec = records[-1]
                        rec = make_record(state, thr, params, prev_theta, dt, cfg.eta)
                        rec.energy_law_residual = energy_law_residual(
                            prev_rec, rec, state.t - prev_rec.t, thr, params)
                        if not rec.is_finite():
                            raise InvariantViolation(f"step {state.step}: non-finite diagnostics")
                        records.append(rec)
                        fh.write(record_row(rec) + "\n")
                        fh.flush()
                    if state.step % cfg.snapshot_every == 0 or last:
                        write_state(out, state, prev_theta)
                    if state.step % report_every == 0:
                        log.info("step %d/%d t=%.4g E=%.6g", state.step, total_steps, state.t,
                                 records[-1].total_energy)
            except InvariantViolation as exc:
                status, message = ExitStatus.INVARIANT_ABORT, str(exc)
                write_state(out, state, prev_theta)
            except SolverError as exc:
                status, message = ExitStatus.SOLVER_FAILURE, str(exc)
        summary = summarize(cfg, thr, state, records, dt, status, message)
        write_kv(out / "summary.txt", summary)
    except OSError as exc:
        return RunResult(ExitStatus.IO_FAILURE, records, state=state, message=str(exc))
    return RunResult(status, records, summary, state, message)


def energy_law_stats(records, dx):
    fails = []
    for prev, rec in zip(records[:-1], records[1:]):
        if rec.energy_law_residual > energy_law_tolerance(prev, rec.t - prev.t, dx):
            fails.append(rec.step)
    n = max(1, len(records) - 1)
    return 1.0 - len(fails) / n, fails


def _decay(records, window):
    w = window or max(1, len(records) // 10)
    if len(records) < 2 * w:
        return "n/a"
    return decay_monitor(records, w)


def summarize(cfg, thr, state, records, dt, status, message) -> dict:
    s = {"status": status.name.lower(), "message": message or "none",
         "backend": _kernels.BACKEND, "steps": state.step, "t_final": state.t, "dt": dt}
    s.update(threshold_report(thr, state.theta0_linf()))
    mp = max_principle_report(state)
    s.update(phi_margin=mp.phi_margin, theta_margin=mp.theta_margin, max_principle_ok=mp.ok)
    rate, fails = energy_law_stats(records, cfg.grid.dx)
    s["energy_law_pass_rate"] = rate
    s["energy_law_fail_steps"] = len(fails)
    if records:
        s["energy_initial"] = records[0].total_energy
        s["energy_final"] = records[-1].total_energy
        s["energy_nonincreasing"] = records[-1].total_energy <= records[0].total_energy
    s["decay_verdict"] = _decay(records, cfg.decay_window)
    if status == ExitStatus.SUCCESS:
        res = solve_steady_phase(state.phi_b, state.phi, state.grid, cfg.params,
                                 SteadySolveConfig(newton_tol=cfg.steady_tol))
        g = state.grid
        write_snapshot(Path(cfg.output_dir) / "phi_inf.csv", "phi_inf", res.phi.values, state.t, g.dx, g.dy)
        s.update(steady_converged=res.converged, steady_residual=res.residual,
                 distance_to_steady=distance_to_steady(state.phi, res.phi))
    return s


# -------------------------------------------------------------------- audit

@dataclass
class AuditCheck:
    name: str
    passed: bool
    detail: str = ""
    flagged: list = field(default_factory=list)


@dataclass
class AuditReport:
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def flagged_rows(self) -> list:
        return sorted({s for c in self.checks for s in c.flagged})

    def format(self) -> str:
        lines = []
        for c in self.checks:
            line = f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}"
            if c.flagged:
                line += f" (steps {c.flagged[:10]}{' ...' if len(c.flagged) > 10 else ''})"
            lines.append(line)
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def _close(a: float, b: float, tol: float = 1e-9) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def audit(run_dir, diagnostics_csv=None) -> AuditReport:
    """Re-verify a finished run from its files.

    Raises ``ValueError`` on malformed files.
    """
    run_dir = Path(run_dir)
    csv_path = Path(diagnostics_csv) if diagnostics_csv else run_dir / "diagnostics.csv"
    try:
        cfg = parse_config((run_dir / "config.txt").read_text())
    except ConfigError as exc:
        raise ValueError(f"{run_dir / 'config.txt'}: {exc}") from None
    records = read_diagnostics_csv(csv_path)
    if not records:
        raise ValueError(f"{csv_path}: no data rows")
    theta0 = read_snapshot(run_dir / "theta0.csv").values
    thr = thresholds_for(cfg)
    params, grid = cfg.params, cfg.grid
    theta0_linf = float(np.max(np.abs(theta0)))
    dt = cfg.time_step(theta0_linf)
    checks = []

    bad = [r.step for r in records if not r.is_finite()]
    checks.append(AuditCheck("finite_values", not bad, f"{len(records)} rows", bad))

    bad = [r.step for r in records if not _close(r.total_energy, energy_from_record(r, thr, params))]
    checks.append(AuditCheck("energy_consistency", not bad, "total energy vs. its components", bad))

    bad = []
    for prev, rec in zip(records[:-1], records[1:]):
        ep = energy_from_record(prev, thr, params)
        en = energy_from_record(rec, thr, params)
        redo = replace(rec, total_energy=en)
        r = energy_law_residual(replace(prev, total_energy=ep), redo, rec.t - prev.t, thr, params)
        if not _close(r, rec.energy_law_residual):
            bad.append(rec.step)
    checks.append(AuditCheck("energy_law_recompute", not bad, "residual vs. recomputed energies", bad))

    bad = [r.step for r in records
           if r.phi_max > 1 + TOL_MP or r.phi_min < -1 - TOL_MP or r.theta_linf > theta0_linf + TOL_MP]
    checks.append(AuditCheck("max_principle", not bad, f"|phi| <= 1, |theta| <= {theta0_linf:.6g}", bad))

    bad = []
    for prev, rec in zip(records[:-1], records[1:]):
        if rec.step <= prev.step or not _close(rec.t - prev.t, (rec.step - prev.step) * dt):
            bad.append(rec.step)
    if records[0].step != 0 or records[0].t != 0.0:
        bad.insert(0, records[0].step)
    checks.append(AuditCheck("time_continuity", not bad, f"dt = {dt:.6g}", bad))

    by_step = {r.step: r for r in records}
    phi_b = build_phi_b(cfg, grid, params)
    snaps = snapshot_steps(run_dir)
    bad, n_checked = [], 0
    for step in sorted(snaps):
        if not set(SNAPSHOT_FIELDS) <= snaps[step] or step not in by_step:
            continue
        state, prev_theta = load_state(run_dir, step, cfg, phi_b, theta0)
        rec = make_record(state, thr, params, prev_theta, dt if prev_theta is not None else None, cfg.eta)
        ref = by_step[step]
        n_checked += 1
        for f in fields(DiagnosticsRecord):
            if f.name in ("energy_law_residual", "step"):
                continue
            if not _close(float(getattr(rec, f.name)), float(getattr(ref, f.name))):
                bad.append(step)
                break
    checks.append(AuditCheck("snapshot_recompute", not bad, f"{n_checked} snapshots re-evaluated", bad))

    rate, fails = energy_law_stats(records, grid.dx)
    compliant = cfg.isothermal or theta0_linf <= thr.theta2
    checks.append(AuditCheck(
        "energy_law", rate >= 0.99 or not compliant,
        f"pass rate {rate:.4f}" + ("" if compliant else " (theta0 above theta2: informational)"),
        fails if compliant and rate < 0.99 else []))

    verdict = _decay(records, cfg.decay_window)
    summary_path = run_dir / "summary.txt"
    recorded = read_kv(summary_path).get("decay_verdict") if summary_path.exists() else None
    ok = recorded is None or recorded == verdict
    checks.append(AuditCheck("decay_verdict", ok, f"recomputed {verdict!r}, summary {recorded!r}"))
    return AuditReport(checks)


# --------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="marangoni",
                                description="Non-isothermal diffuse-interface two-phase flow simulator.")
    p.add_argument("--config", help="run configuration file (key = value)")
    p.add_argument("--output", help="output directory (overrides output_dir)")
    p.add_argument("--audit", metavar="DIR", help="re-verify a finished run directory and exit")
    p.add_argument("--print-thresholds", action="store_true",
                   help="evaluate the temperature thresholds for the config and exit")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("-q", "--quiet", action="store_true", help="only report errors")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s")
    if args.audit:
        try:
            report = audit(args.audit)
        except (OSError, ValueError) as exc:
            print(f"audit: {exc}", file=sys.stderr)
            return ExitStatus.IO_FAILURE
        print(report.format())
        return ExitStatus.SUCCESS if report.passed else ExitStatus.INVARIANT_ABORT
    if not args.config:
        print("error: --config is required unless --audit is given", file=sys.stderr)
        return ExitStatus.CONFIG_ERROR
    try:
        cfg = load_config(args.config)
        cfg = with_overrides(cfg, output_dir=args.output, seed=args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return ExitStatus.CONFIG_ERROR
    if args.print_thresholds:
        thr = thresholds_for(cfg)
        try:
            theta0 = build_theta0(cfg, cfg.grid, thr)
            linf = float(np.max(np.abs(theta0)))
        except (OSError, ValueError):
            linf = None
        for k, v in threshold_report(thr, linf).items():
            print(f"{k}={_fmt(v)}")
        return ExitStatus.SUCCESS
    result = run(cfg)
    if result.status != ExitStatus.SUCCESS:
        print(f"{result.status.name.lower()}: {result.message}", file=sys.stderr)
    else:
        s = result.summary
        print(f"done: {s['steps']} steps to t={s['t_final']:.6g}; energy-law pass rate "
              f"{s['energy_law_pass_rate']:.4f}; decay {s['decay_verdict']}; output in {cfg.output_dir}")
    return int(result.status)


if __name__ == "__main__":
    sys.exit(main())
