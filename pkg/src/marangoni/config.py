"""Flat ``key = value`` run configuration and initial-condition presets."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .coefficients import CoefficientFn, PhysicalParams
from .dynamics import ADVECTION_SCHEMES, CAPILLARY_FORMS, StepConfig, stability_bounds
from .errors import ConfigError
from .fields import BoundaryData, Grid, VectorField, read_snapshot

MODES = ("full", "isothermal")


@dataclass(frozen=True)
class RunConfig:
    nx: int
    ny: int
    t_end: float
    lx: float = 1.0
    ly: float = 1.0
    # physics
    lambda0: float = 0.01
    a: float = 1.0
    b: float = 0.5
    gamma: float = 0.25
    eps: float = 0.05
    ra: float = 1.0
    ga: float = 1.0
    g: float = 1.0
    mu: str = "exp:0.04,0.2"
    kappa: str = "quad:0.03,0.05"
    mode: str = "full"
    # stepping
    dt: str = "auto"
    cfl_safety: float = 1.0
    proj_tol: float = 1e-10
    helmholtz_tol: float = 1e-10
    advection: str = "upwind"
    capillary_form: str = "potential"
    # output
    snapshot_every: int = 100
    diagnostics_every: int = 1
    output_dir: str = "out"
    decay_window: int = 0
    # initial and boundary data
    ic_phi: str = "stripe"
    ic_theta: str = "zero"
    ic_u: str = "zero"
    phi_b: str = "tanh"
    # diagnostics
    omega: float = 1.0
    eta: float = 1.0
    seed: int = 0
    sobolev_samples: int = 1000
    c1: Optional[float] = None
    c2: Optional[float] = None
    c3: Optional[float] = None
    cp: Optional[float] = None
    steady_tol: float = 1e-10
    # restart
    restart_from: Optional[str] = None
    restart_step: Optional[int] = None

    # ---------------------------------------------------------- builders
    @property
    def grid(self) -> Grid:
        return Grid(self.nx, self.ny, self.lx, self.ly)

    @property
    def params(self) -> PhysicalParams:
        return PhysicalParams(
            lambda0=self.lambda0, a=self.a, b=self.b, gamma=self.gamma, eps=self.eps,
            ra=self.ra, ga=self.ga, g=self.g,
            mu=CoefficientFn.parse(self.mu), kappa=CoefficientFn.parse(self.kappa),
            isothermal=self.mode == "isothermal",
        )

    @property
    def isothermal(self) -> bool:
        return self.mode == "isothermal"

    def time_step(self, theta0_linf: float) -> float:
        if self.dt == "auto":
            return 0.9 * min(stability_bounds(self.grid, self.params, theta0_linf, self.cfl_safety).values())
        return float(self.dt)

    def step_config(self, theta0_linf: float) -> StepConfig:
        return StepConfig(self.time_step(theta0_linf), self.cfl_safety, self.proj_tol,
                          self.helmholtz_tol, self.advection, self.capillary_form)

    def sobolev_overrides(self) -> dict:
        return {k: getattr(self, k) for k in ("c1", "c2", "c3", "cp") if getattr(self, k) is not None}


REQUIRED = ("nx", "ny", "t_end")
_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}
_INT_KEYS = {"nx", "ny", "snapshot_every", "diagnostics_every", "decay_window", "seed",
             "sobolev_samples", "restart_step"}
_STR_KEYS = {"mu", "kappa", "mode", "dt", "advection", "capillary_form", "output_dir",
             "ic_phi", "ic_theta", "ic_u", "phi_b", "restart_from"}


def _convert(key: str, text: str):
    if key in _INT_KEYS:
        val = float(text)
        if val != int(val):
            raise ValueError(f"expected an integer, got {text!r}")
        return int(val)
    if key in _STR_KEYS:
        return text
    val = float(text)
    if not math.isfinite(val):
        raise ValueError(f"expected a finite number, got {text!r}")
    return val


def parse_config(text: str) -> RunConfig:
    """Parse and validate the flat config format.

    One ``key = value`` per line; ``#`` starts a comment.  Errors name the
    offending key and line number.
    """
    values: dict = {}
    lines: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} (first set on line {lines[key]})")
        if not val:
            raise ConfigError(f"line {lineno}: key {key!r} has no value")
        try:
            values[key] = _convert(key, val)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: key {key!r}: {exc}") from None
        lines[key] = lineno
    for key in REQUIRED:
        if key not in values:
            raise ConfigError(f"missing required key {key!r}")
    try:
        cfg = RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    validate(cfg, lines)
    return cfg


def _fail(key, lines, msg):
    where = f"line {lines[key]}: " if lines and key in lines else ""
    raise ConfigError(f"{where}key {key!r}: {msg}")


def validate(cfg: RunConfig, lines: Optional[dict] = None):
    lines = lines or {}
    try:
        grid = cfg.grid
    except ValueError as exc:
        _fail("nx", lines, str(exc))
    if not cfg.t_end > 0:
        _fail("t_end", lines, "must be positive")
    for key in ("snapshot_every", "diagnostics_every", "sobolev_samples"):
        if getattr(cfg, key) < 1:
            _fail(key, lines, "must be >= 1")
    if cfg.sobolev_samples < 100:
        _fail("sobolev_samples", lines, "must be >= 100")
    if cfg.decay_window < 0:
        _fail("decay_window", lines, "must be >= 0 (0 selects a tenth of the records)")
    if cfg.mode not in MODES:
        _fail("mode", lines, f"must be one of {MODES}")
    if cfg.advection not in ADVECTION_SCHEMES:
        _fail("advection", lines, f"must be one of {ADVECTION_SCHEMES}")
    if cfg.capillary_form not in CAPILLARY_FORMS:
        _fail("capillary_form", lines, f"must be one of {CAPILLARY_FORMS}")
    for key in ("mu", "kappa"):
        try:
            CoefficientFn.parse(getattr(cfg, key))
        except ValueError as exc:
            _fail(key, lines, str(exc))
    try:
        params = cfg.params
    except ConfigError as exc:
        key = str(exc).split()[0]
        _fail(key if key in _FIELD_TYPES else "mode", lines, str(exc))
    if cfg.dt != "auto":
        try:
            dt = float(cfg.dt)
        except ValueError:
            _fail("dt", lines, f"expected a number or 'auto', got {cfg.dt!r}")
        if not (dt > 0 and math.isfinite(dt)):
            _fail("dt", lines, "must be positive")
    if not 0 < cfg.cfl_safety <= 1:
        _fail("cfl_safety", lines, "must lie in (0, 1]")
    for key in ("proj_tol", "helmholtz_tol", "steady_tol", "omega", "eta"):
        if not getattr(cfg, key) > 0:
            _fail(key, lines, "must be positive")
    for key, val in cfg.sobolev_overrides().items():
        if not val > 0:
            _fail(key, lines, "must be positive")
    if cfg.restart_step is not None and cfg.restart_from is None:
        _fail("restart_step", lines, "requires restart_from")
    try:
        phi_b = build_phi_b(cfg, grid, params)
        phi_b.check_phase_admissible()
    except ValueError as exc:
        _fail("phi_b", lines, str(exc))
    for key, checker in (("ic_phi", _check_ic_phi), ("ic_theta", _check_ic_theta), ("ic_u", _check_ic_u)):
        try:
            checker(getattr(cfg, key))
        except ValueError as exc:
            _fail(key, lines, str(exc))


def serialize_config(cfg: RunConfig) -> str:
    """Normalised text form; ``parse_config(serialize_config(c)) == c``."""
    out = []
    for f in fields(RunConfig):
        val = getattr(cfg, f.name)
        if val is None:
            continue
        if isinstance(val, float):
            val = repr(val)
        out.append(f"{f.name} = {val}")
    return "\n".join(out) + "\n"


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


# ------------------------------------------------------- preset parsing

_CALL = re.compile(r"^\s*([a-z_]+)\s*(?:\((.*)\))?\s*$")


def _split_call(text: str):
    m = _CALL.match(text)
    if not m:
        raise ValueError(f"cannot parse {text!r}")
    args = [a.strip() for a in m.group(2).split(",")] if m.group(2) else []
    return m.group(1), args


def _check_ic_phi(text):
    if text.startswith("file:"):
        return
    name, args = _split_call(text)
    if name == "stripe" and len(args) <= 1:
        [float(a) for a in args]
    elif name == "bubble" and len(args) <= 1:
        if args and not float(args[0]) > 0:
            raise ValueError("bubble radius must be positive")
    elif name == "constant" and len(args) == 1:
        if not abs(float(args[0])) <= 1:
            raise ValueError("constant phase must lie in [-1, 1]")
    elif name == "random" and len(args) == 2:
        amp = float(args[0])
        int(args[1])
        if not 0 <= amp <= 1:
            raise ValueError("random amplitude must lie in [0, 1]")
    else:
        raise ValueError(f"unknown phase preset {text!r}; use stripe, bubble(r), constant(v), random(amp,seed) or file:<path>")


def _amplitude(token: str, thresholds=None) -> float:
    """``0.3`` or ``0.9*theta2`` / ``theta1``."""
    token = token.replace(" ", "")
    m = re.fullmatch(r"(?:([0-9.eE+-]+)\*)?(theta1|theta2)", token)
    if m:
        if thresholds is None:
            return float("nan")
        scale = float(m.group(1)) if m.group(1) else 1.0
        return scale * getattr(thresholds, m.group(2))
    return float(token)


def _check_ic_theta(text):
    if text.startswith("file:") or text == "zero":
        return
    name, args = _split_call(text)
    if name != "gaussian" or len(args) != 2:
        raise ValueError(f"unknown temperature preset {text!r}; use zero, gaussian(amp,sigma) or file:<path>")
    _amplitude(args[0])
    if not float(args[1]) > 0:
        raise ValueError("gaussian sigma must be positive")


def _check_ic_u(text):
    if text.startswith("file:") or text == "zero":
        if text.startswith("file:") and len(text[5:].split(",")) != 2:
            raise ValueError("ic_u = file:<u.csv>,<v.csv>")
        return
    name, args = _split_call(text)
    if name != "vortex" or len(args) != 1:
        raise ValueError(f"unknown velocity preset {text!r}; use zero, vortex(amp) or file:<u.csv>,<v.csv>")
    float(args[0])


def uses_thresholds(cfg: RunConfig) -> bool:
    return not cfg.ic_theta.startswith("file:") and "theta" in cfg.ic_theta


def _tanh_profile(x0, eps):
    return lambda x, y: np.tanh((x - x0) / (math.sqrt(2.0) * eps))


def build_phi_b(cfg: RunConfig, grid: Grid, params: PhysicalParams) -> BoundaryData:
    spec = cfg.phi_b.strip()
    if spec.startswith("constant:"):
        return BoundaryData.constant(grid, float(spec.split(":", 1)[1]))
    name, args = _split_call(spec)
    if name != "tanh" or len(args) > 1:
        raise ValueError(f"unknown phi_b {spec!r}; use tanh, tanh(x0) or constant:<v>")
    x0 = float(args[0]) if args else 0.5 * grid.lx
    return BoundaryData.from_function(grid, _tanh_profile(x0, params.eps))


def _load_field(path: str, grid: Grid, shape=None) -> np.ndarray:
    snap = read_snapshot(path)
    want = shape or grid.shape
    if snap.values.shape != want:
        raise ConfigError(f"{path}: field has shape {snap.values.shape}, expected {want}")
    return snap.values


def build_phi0(cfg: RunConfig, grid: Grid, params: PhysicalParams) -> np.ndarray:
    spec = cfg.ic_phi.strip()
    if spec.startswith("file:"):
        vals = _load_field(spec[5:], grid)
        if np.max(np.abs(vals)) > 1.0:
            raise ConfigError("initial phase from file leaves [-1, 1]")
        return vals
    name, args = _split_call(spec)
    X, Y = grid.cell_centers()
    s = math.sqrt(2.0) * params.eps
    if name == "stripe":
        x0 = float(args[0]) if args else 0.5 * grid.lx
        return np.tanh((X - x0) / s)
    if name == "bubble":
        r = float(args[0]) if args else 0.25 * min(grid.lx, grid.ly)
        dist = np.hypot(X - 0.5 * grid.lx, Y - 0.5 * grid.ly)
        return np.tanh((r - dist) / s)
    if name == "constant":
        return np.full(grid.shape, float(args[0]))
    amp, seed = float(args[0]), int(args[1])
    return amp * np.random.default_rng(seed).uniform(-1.0, 1.0, grid.shape)


def build_theta0(cfg: RunConfig, grid: Grid, thresholds=None) -> np.ndarray:
    spec = cfg.ic_theta.strip()
    if spec == "zero" or cfg.isothermal:
        return grid.zeros()
    if spec.startswith("file:"):
        return _load_field(spec[5:], grid)
    _, args = _split_call(spec)
    amp = _amplitude(args[0], thresholds)
    sigma = float(args[1])
    X, Y = grid.cell_centers()
    bump = np.exp(-((X - 0.5 * grid.lx) ** 2 + (Y - 0.5 * grid.ly) ** 2) / (2.0 * sigma ** 2))
    # discrete maximum equals the requested amplitude
    return amp * bump / np.max(bump)


def build_u0(cfg: RunConfig, grid: Grid) -> VectorField:
    spec = cfg.ic_u.strip()
    if spec == "zero":
        return VectorField.zeros(grid)
    if spec.startswith("file:"):
        pu, pv = spec[5:].split(",")
        return VectorField(grid, _load_field(pu, grid, (grid.nx + 1, grid.ny)),
                           _load_field(pv, grid, (grid.nx, grid.ny + 1))).enforce_no_slip()
    _, args = _split_call(spec)
    amp = float(args[0])
    # stream function psi = amp sin^2(pi x) sin^2(pi y) sampled at corners: exactly divergence free
    xc = np.arange(grid.nx + 1) * grid.dx / grid.lx
    yc = np.arange(grid.ny + 1) * grid.dy / grid.ly
    psi = amp * np.outer(np.sin(np.pi * xc) ** 2, np.sin(np.pi * yc) ** 2)
    u = (psi[:, 1:] - psi[:, :-1]) / grid.dy
    v = -(psi[1:, :] - psi[:-1, :]) / grid.dx
    return VectorField(grid, u, v).enforce_no_slip()


def with_overrides(cfg: RunConfig, **kw) -> RunConfig:
    new = replace(cfg, **{k: v for k, v in kw.items() if v is not None})
    validate(new)
    return new
