"""Constitutive laws: double-well potential, Eötvös surface tension,
temperature-dependent viscosity/diffusivity, their cut-off modification and the
Kirchhoff temperature transform.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .errors import ConfigError, SolverError

FAMILIES = ("constant", "exp", "quad")


@dataclass(frozen=True)
class CoefficientFn:
    """Positive C^2 coefficient law of one of three closed-form families.

    ``constant``  c0
    ``exp``       c0 * exp(c1 * s)
    ``quad``      c0 + c1 * s**2   (c1 >= 0)
    """

    family: str
    c0: float
    c1: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown coefficient family {self.family!r}")
        if not (self.c0 > 0 and math.isfinite(self.c0)):
            raise ValueError(f"{self.family} coefficient needs c0 > 0, got {self.c0}")
        if not math.isfinite(self.c1):
            raise ValueError("c1 must be finite")
        if self.family == "quad" and self.c1 < 0:
            raise ValueError(f"quad coefficient needs c1 >= 0 to stay positive, got {self.c1}")

    @classmethod
    def constant(cls, c):
        return cls("constant", float(c))

    @classmethod
    def exponential(cls, c0, c1):
        return cls("exp", float(c0), float(c1))

    @classmethod
    def quadratic(cls, c0, c1):
        return cls("quad", float(c0), float(c1))

    @classmethod
    def parse(cls, text: str) -> "CoefficientFn":
        """Parse ``constant:1.0``, ``exp:1.0,0.2`` or ``quad:1.0,0.5``."""
        try:
            fam, args = text.strip().split(":", 1)
            nums = [float(a) for a in args.split(",")]
        except ValueError:
            raise ValueError(f"cannot parse coefficient {text!r}; expected family:params") from None
        fam = fam.strip()
        expected = 1 if fam == "constant" else 2
        if len(nums) != expected:
            raise ValueError(f"{fam} takes {expected} parameter(s), got {len(nums)}")
        return cls(fam, *nums)

    def __str__(self):
        if self.family == "constant":
            return f"constant:{self.c0!r}"
        return f"{self.family}:{self.c0!r},{self.c1!r}"

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.family == "constant":
            return np.full_like(s, self.c0) if s.ndim else self.c0 + 0.0 * s
        if self.family == "exp":
            return self.c0 * np.exp(self.c1 * s)
        return self.c0 + self.c1 * s * s

    def derivative(self, s):
        s = np.asarray(s, dtype=float)
        if self.family == "constant":
            return np.zeros_like(s)
        if self.family == "exp":
            return self.c0 * self.c1 * np.exp(self.c1 * s)
        return 2.0 * self.c1 * s

    def second_derivative(self, s):
        s = np.asarray(s, dtype=float)
        if self.family == "constant":
            return np.zeros_like(s)
        if self.family == "exp":
            return self.c0 * self.c1 ** 2 * np.exp(self.c1 * s)
        return np.full_like(s, 2.0 * self.c1)

    def antiderivative(self, s):
        """Closed-form integral from 0 to ``s``."""
        s = np.asarray(s, dtype=float)
        if self.family == "constant":
            return self.c0 * s
        if self.family == "exp":
            # c0 * s * expm1(x) / x with x = c1 s; stays finite for tiny or subnormal c1
            x = self.c1 * s
            safe = np.where(x == 0.0, 1.0, x)
            return self.c0 * s * np.where(x == 0.0, 1.0, np.expm1(safe) / safe)
        return self.c0 * s + self.c1 * s ** 3 / 3.0

    def extrema(self, lo: float, hi: float) -> tuple[float, float]:
        """Exact (min, max) over [lo, hi]: every family is monotone or convex with vertex at 0."""
        a, b = float(self(lo)), float(self(hi))
        if self.family == "quad" and lo <= 0.0 <= hi:
            return self.c0, max(a, b)
        return min(a, b), max(a, b)

    def max_abs_derivative(self, radius: float) -> float:
        """max of |f'(s)| over |s| <= radius."""
        if self.family == "constant":
            return 0.0
        if self.family == "exp":
            return self.c0 * abs(self.c1) * math.exp(abs(self.c1) * radius)
        return 2.0 * self.c1 * radius


@dataclass(frozen=True)
class PhysicalParams:
    lambda0: float = 0.01
    a: float = 1.0
    b: float = 0.5
    gamma: float = 0.25
    eps: float = 0.05
    ra: float = 1.0
    ga: float = 1.0
    g: float = 1.0
    mu: CoefficientFn = CoefficientFn("exp", 0.04, 0.2)
    kappa: CoefficientFn = CoefficientFn("quad", 0.03, 0.05)
    isothermal: bool = False

    def __post_init__(self):
        for name in ("lambda0", "a", "gamma", "eps"):
            val = getattr(self, name)
            if not (val > 0 and math.isfinite(val)):
                raise ConfigError(f"{name} must be positive, got {val}")
        if self.b == 0 or not math.isfinite(self.b):
            raise ConfigError("b must be nonzero")
        for name in ("ra", "ga", "g"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")

    @property
    def capillary_scale(self) -> float:
        """Isothermal surface tension lambda0 * a."""
        return self.lambda0 * self.a


def double_well(phi, eps):
    """Return ``(W, W')`` with ``W = (phi^2 - 1)^2 / (4 eps^2)``."""
    phi = np.asarray(phi, dtype=float)
    e2 = eps * eps
    return (phi * phi - 1.0) ** 2 / (4.0 * e2), (phi ** 3 - phi) / e2


def double_well_second(phi, eps):
    phi = np.asarray(phi, dtype=float)
    return (3.0 * phi * phi - 1.0) / (eps * eps)


def surface_tension(theta, params: PhysicalParams):
    """Eötvös rule ``lambda0 * (a - b * theta)``; constant ``lambda0 * a`` in isothermal mode."""
    theta = np.asarray(theta, dtype=float)
    if params.isothermal:
        return params.capillary_scale + 0.0 * theta
    return params.lambda0 * (params.a - params.b * theta)


# ------------------------------------------------------------ cut-off h(s)

def _bump(z):
    return math.exp(1.0 / (z * z - 1.0)) if abs(z) < 1.0 else 0.0


@lru_cache(maxsize=1)
def _bump_mass() -> float:
    val, _ = integrate.quad(_bump, -1.0, 1.0, epsabs=1e-14, epsrel=1e-13)
    return val


def bump_cdf_exact(z: float) -> float:
    """Normalised integral of the standard bump from -1 to ``z`` by adaptive quadrature."""
    if z <= -1.0:
        return 0.0
    if z >= 1.0:
        return 1.0
    val, _ = integrate.quad(_bump, -1.0, z, epsabs=1e-13, epsrel=1e-12)
    return val / _bump_mass()


@lru_cache(maxsize=1)
def _bump_cdf_table() -> CubicSpline:
    z = np.linspace(-1.0, 1.0, 1024)
    vals = np.array([bump_cdf_exact(t) for t in z])
    # odd symmetry about z = 0 removes quadrature asymmetry
    vals = 0.5 * (vals + (1.0 - vals[::-1]))
    return CubicSpline(z, vals)


def bump_cdf(z):
    z = np.asarray(z, dtype=float)
    out = _bump_cdf_table()(np.clip(z, -1.0, 1.0))
    return np.clip(np.where(z <= -1.0, 0.0, np.where(z >= 1.0, 1.0, out)), 0.0, 1.0)


def cutoff(s, r: float):
    """Mollified indicator of [-4r, 4r]: 1 on |s| <= 3r, 0 on |s| >= 5r."""
    s = np.asarray(s, dtype=float)
    return bump_cdf((s + 4.0 * r) / r) - bump_cdf((s - 4.0 * r) / r)


def cutoff_exact(s: float, r: float) -> float:
    return bump_cdf_exact((s + 4.0 * r) / r) - bump_cdf_exact((s - 4.0 * r) / r)


@dataclass(frozen=True)
class MollifiedCoefficient:
    base: CoefficientFn
    r: float
    lower: float
    upper: float

    def __call__(self, s):
        h = cutoff(s, self.r)
        return (self.base(s) - self.lower) * h + self.lower


def mollify(base: CoefficientFn, theta0_linf: float) -> MollifiedCoefficient:
    """Cut-off modification that agrees with ``base`` on |s| <= theta0_linf
    and is constant outside (-5r, 5r), r = theta0_linf / 3."""
    if not theta0_linf > 0:
        raise ValueError("theta0_linf must be positive (zero initial temperature needs no cut-off)")
    r = theta0_linf / 3.0
    lo, hi = base.extrema(-5.0 * r, 5.0 * r)
    return MollifiedCoefficient(base, r, 0.5 * lo, 2.0 * hi)


# ------------------------------------------------------- Kirchhoff transform

def kirchhoff(theta, kappa: CoefficientFn):
    """``int_0^theta kappa(s) ds``."""
    return kappa.antiderivative(theta)


def kirchhoff_range(kappa: CoefficientFn) -> tuple[float, float]:
    """Open interval covered by ``kirchhoff(., kappa)`` over the real line."""
    if kappa.family == "exp" and kappa.c1 > 0:
        return -kappa.c0 / kappa.c1, math.inf
    if kappa.family == "exp" and kappa.c1 < 0:
        return -math.inf, -kappa.c0 / kappa.c1
    return -math.inf, math.inf


def inverse_kirchhoff(vartheta, kappa: CoefficientFn, tol: float = 1e-12, maxiter: int = 200):
    """Solve ``kirchhoff(theta) = vartheta`` elementwise by bracketed Newton.

    The forward map is strictly increasing with ``F(0) = 0``, so each root is
    unique and bracketed between 0 and a doubled initial guess.  For the
    exponential family the map is onto ``(-c0/c1, inf)`` (mirrored for
    ``c1 < 0``); values outside that range raise ``ValueError``.
    """
    target = np.asarray(vartheta, dtype=float)
    scalar = target.ndim == 0
    target = np.atleast_1d(target)
    lo_range, hi_range = kirchhoff_range(kappa)
    if np.any(target <= lo_range) or np.any(target >= hi_range):
        raise ValueError(f"value outside the range ({lo_range:.6g}, {hi_range:.6g}) of the "
                         f"Kirchhoff transform for {kappa}")

    def F(x):
        with np.errstate(over="ignore", invalid="ignore"):
            return kappa.antiderivative(x)

    guess = target / float(kappa(0.0))
    lo = np.where(target >= 0, 0.0, guess)
    hi = np.where(target >= 0, guess, 0.0)
    for _ in range(maxiter):
        grow_hi = F(hi) < target
        grow_lo = F(lo) > target
        if not (grow_hi.any() or grow_lo.any()):
            break
        hi = np.where(grow_hi, 2.0 * hi, hi)
        lo = np.where(grow_lo, 2.0 * lo, lo)
    else:
        raise SolverError("inverse Kirchhoff transform: could not bracket the root")

    theta = guess
    prev = np.abs(hi - lo)
    for _ in range(maxiter):
        with np.errstate(over="ignore", invalid="ignore"):
            f = F(theta) - target
            new = theta - f / kappa(theta)
        lo = np.where(f < 0, theta, lo)
        hi = np.where(f > 0, theta, hi)
        # bisect when Newton leaves the bracket or stalls (rtsafe rule)
        slow = np.abs(new - theta) > 0.5 * prev
        new = np.where(~np.isfinite(new) | (new < lo) | (new > hi) | slow, 0.5 * (lo + hi), new)
        new = np.where(f == 0, theta, new)
        delta = np.abs(new - theta)
        prev = np.maximum(delta, np.finfo(float).tiny)
        theta = new
        if np.all(delta <= tol * np.maximum(1.0, np.abs(theta))):
            break
    else:
        raise SolverError("inverse Kirchhoff transform did not converge in %d iterations" % maxiter)
    # Newton polish: a bisection may have produced the last iterate
    for _ in range(2):
        theta = np.clip(theta - (F(theta) - target) / kappa(theta), lo, hi)
    return float(theta[0]) if scalar else theta
