"""Uniform MAC grid, field containers and discrete differential operators.

Scalars live at cell centres, velocity components on the cell faces they are
normal to.  Dirichlet data enter the stencils through linear-extrapolation
ghost cells, ``ghost = 2 * boundary - interior``.  Corners of the rectangle
are not special-cased: boundary data should be continuous there, otherwise the
solution carries a (mild) corner singularity.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import _kernels as K


@dataclass(frozen=True)
class Grid:
    nx: int
    ny: int
    lx: float = 1.0
    ly: float = 1.0

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise ValueError("nx and ny must be integers")
        if self.nx < 4 or self.ny < 4:
            raise ValueError(f"grid needs at least 4x4 cells, got {self.nx}x{self.ny}")
        if not (self.lx > 0 and self.ly > 0):
            raise ValueError("domain lengths must be positive")

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dy(self) -> float:
        return self.ly / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrids ``(X, Y)`` of cell centres, indexed ``[i, j]``."""
        x = (np.arange(self.nx) + 0.5) * self.dx
        y = (np.arange(self.ny) + 0.5) * self.dy
        return np.meshgrid(x, y, indexing="ij")

    def u_faces(self):
        x = np.arange(self.nx + 1) * self.dx
        y = (np.arange(self.ny) + 0.5) * self.dy
        return np.meshgrid(x, y, indexing="ij")

    def v_faces(self):
        x = (np.arange(self.nx) + 0.5) * self.dx
        y = np.arange(self.ny + 1) * self.dy
        return np.meshgrid(x, y, indexing="ij")

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)


@dataclass(frozen=True, eq=False)
class BoundaryData:
    """Dirichlet values at the midpoints of the boundary faces.

    ``left``/``right`` have length ``ny``, ``bottom``/``top`` length ``nx``.
    """

    left: np.ndarray
    right: np.ndarray
    bottom: np.ndarray
    top: np.ndarray

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "BoundaryData":
        return cls(np.full(grid.ny, float(value)), np.full(grid.ny, float(value)),
                   np.full(grid.nx, float(value)), np.full(grid.nx, float(value)))

    @classmethod
    def zeros(cls, grid: Grid) -> "BoundaryData":
        return cls.constant(grid, 0.0)

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable) -> "BoundaryData":
        """Sample ``fn(x, y)`` (vectorised) at the boundary-face midpoints."""
        xc = (np.arange(grid.nx) + 0.5) * grid.dx
        yc = (np.arange(grid.ny) + 0.5) * grid.dy
        return cls(
            np.asarray(fn(np.zeros_like(yc), yc), dtype=float),
            np.asarray(fn(np.full_like(yc, grid.lx), yc), dtype=float),
            np.asarray(fn(xc, np.zeros_like(xc)), dtype=float),
            np.asarray(fn(xc, np.full_like(xc, grid.ly)), dtype=float),
        )

    def arrays(self):
        return self.left, self.right, self.bottom, self.top

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(a))) for a in self.arrays())

    def is_homogeneous(self) -> bool:
        return self.max_abs() == 0.0

    def check_phase_admissible(self, tol: float = 0.0):
        """Phase boundary data must lie in [-1, 1]."""
        if self.max_abs() > 1.0 + tol:
            raise ValueError(f"|phi_b| must be <= 1, got max {self.max_abs():.6g}")

    def same_as(self, other: "BoundaryData") -> bool:
        return all(np.array_equal(a, b) for a, b in zip(self.arrays(), other.arrays()))


@dataclass(eq=False)
class ScalarField:
    """Cell-centred field; ``bc=None`` means homogeneous Neumann (pressure)."""

    grid: Grid
    values: np.ndarray
    bc: Optional[BoundaryData] = None

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"field shape {self.values.shape} != grid {self.grid.shape}")

    def with_values(self, values: np.ndarray) -> "ScalarField":
        return ScalarField(self.grid, values, self.bc)

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy(), self.bc)

    def padded(self) -> np.ndarray:
        """Values with one ghost layer set by the boundary condition."""
        if self.bc is None:
            return np.pad(self.values, 1, mode="edge")
        return K.pad_dirichlet(self.values, *self.bc.arrays())

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))


@dataclass(eq=False)
class VectorField:
    """MAC-staggered velocity; the four walls are no-slip."""

    grid: Grid
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.u = np.ascontiguousarray(self.u, dtype=float)
        self.v = np.ascontiguousarray(self.v, dtype=float)
        if self.u.shape != (self.grid.nx + 1, self.grid.ny):
            raise ValueError(f"u has shape {self.u.shape}")
        if self.v.shape != (self.grid.nx, self.grid.ny + 1):
            raise ValueError(f"v has shape {self.v.shape}")

    @classmethod
    def zeros(cls, grid: Grid) -> "VectorField":
        return cls(grid, np.zeros((grid.nx + 1, grid.ny)), np.zeros((grid.nx, grid.ny + 1)))

    def copy(self) -> "VectorField":
        return VectorField(self.grid, self.u.copy(), self.v.copy())

    def enforce_no_slip(self) -> "VectorField":
        self.u[0, :] = 0.0
        self.u[-1, :] = 0.0
        self.v[:, 0] = 0.0
        self.v[:, -1] = 0.0
        return self

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(self.u))), float(np.max(np.abs(self.v))))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.v)))


# ---------------------------------------------------------------- operators

def laplacian(f: ScalarField) -> ScalarField:
    g = f.grid
    if f.bc is None:
        out = K.laplacian_neumann(f.values, g.dx, g.dy)
    else:
        out = K.laplacian(f.values, *f.bc.arrays(), g.dx, g.dy)
    return ScalarField(g, out, f.bc)


def gradient(f: ScalarField) -> VectorField:
    """Face-normal differences; boundary faces use the ghost value (zero for Neumann)."""
    g = f.grid
    p = f.padded()
    u = (p[1:, 1:-1] - p[:-1, 1:-1]) / g.dx
    v = (p[1:-1, 1:] - p[1:-1, :-1]) / g.dy
    return VectorField(g, u, v)


def divergence(w: VectorField) -> ScalarField:
    g = w.grid
    div = (w.u[1:, :] - w.u[:-1, :]) / g.dx + (w.v[:, 1:] - w.v[:, :-1]) / g.dy
    return ScalarField(g, div, None)


def advect_upwind(f: ScalarField, w: VectorField) -> ScalarField:
    return ScalarField(f.grid, K.advect_upwind(f.values, w.u, w.v, f.grid.dx, f.grid.dy), f.bc)


def advect_centered(f: ScalarField, w: VectorField) -> ScalarField:
    return ScalarField(f.grid, K.advect_centered(f.values, w.u, w.v, f.grid.dx, f.grid.dy), f.bc)


def advect(f: ScalarField, w: VectorField, scheme: str = "upwind") -> ScalarField:
    if scheme == "upwind":
        return advect_upwind(f, w)
    if scheme == "centered":
        return advect_centered(f, w)
    raise ValueError(f"unknown advection scheme {scheme!r}")


def corner_values(f: ScalarField) -> np.ndarray:
    """Average of the four cells around every grid corner (ghosts at walls)."""
    p = f.padded()
    return 0.25 * (p[:-1, :-1] + p[1:, :-1] + p[:-1, 1:] + p[1:, 1:])


def corner_weights(grid: Grid) -> np.ndarray:
    """Share of a cell area attributed to each corner: 1 inside, 1/2 on edges, 1/4 at corners."""
    wx = np.ones(grid.nx + 1)
    wx[[0, -1]] = 0.5
    wy = np.ones(grid.ny + 1)
    wy[[0, -1]] = 0.5
    return np.outer(wx, wy)


def symmetric_gradient_norm_sq(w: VectorField) -> ScalarField:
    """Cell-centred ``|D w|^2`` with ``D w = (grad w + grad w^T) / 2``.

    Diagonal entries are exact cell differences; the squared off-diagonal entry
    is averaged from the four corners of the cell.
    """
    g = w.grid
    ux = (w.u[1:, :] - w.u[:-1, :]) / g.dx
    vy = (w.v[:, 1:] - w.v[:, :-1]) / g.dy
    dxy2 = (0.5 * K.corner_shear(w.u, w.v, g.dx, g.dy)) ** 2
    avg = 0.25 * (dxy2[:-1, :-1] + dxy2[1:, :-1] + dxy2[:-1, 1:] + dxy2[1:, 1:])
    return ScalarField(g, ux * ux + vy * vy + 2.0 * avg, None)


# ----------------------------------------------------------- inner products

def cell_inner(a: np.ndarray, b: np.ndarray, grid: Grid) -> float:
    return float(np.sum(a * b)) * grid.cell_area


def face_inner(w1: VectorField, w2: VectorField) -> float:
    return (float(np.sum(w1.u * w2.u)) + float(np.sum(w1.v * w2.v))) * w1.grid.cell_area


def face_grad_sq_cells(f: ScalarField) -> np.ndarray:
    """Squared face gradients averaged to cells (boundary faces enter with half weight)."""
    gr = gradient(f)
    gu2 = gr.u * gr.u
    gv2 = gr.v * gr.v
    return 0.5 * (gu2[1:, :] + gu2[:-1, :]) + 0.5 * (gv2[:, 1:] + gv2[:, :-1])


# ---------------------------------------------------------------- snapshots

def write_snapshot(path, name: str, values: np.ndarray, t: float, dx: float, dy: float):
    """Write ``values`` (indexed ``[i, j]``) as rows of constant ``j``."""
    values = np.asarray(values, dtype=float)
    cols, rows = values.shape
    lines = [f"# field={name} nx={cols} ny={rows} t={t:.17g} dx={dx:.17g} dy={dy:.17g}"]
    for j in range(rows):
        lines.append(",".join(f"{x:.17g}" for x in values[:, j]))
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass
class Snapshot:
    name: str
    values: np.ndarray
    t: float
    dx: float
    dy: float
    meta: dict = field(default_factory=dict)


def read_snapshot(path) -> Snapshot:
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith("#"):
        raise ValueError(f"{path}: missing snapshot header")
    meta = {}
    for tok in text[0][1:].split():
        if "=" not in tok:
            raise ValueError(f"{path}: malformed header token {tok!r}")
        k, v = tok.split("=", 1)
        meta[k] = v
    try:
        cols, rows = int(meta["nx"]), int(meta["ny"])
        t, dx, dy = float(meta["t"]), float(meta["dx"]), float(meta["dy"])
        name = meta["field"]
    except KeyError as exc:
        raise ValueError(f"{path}: header lacks {exc}") from None
    body = [ln for ln in text[1:] if ln.strip()]
    if len(body) != rows:
        raise ValueError(f"{path}: expected {rows} rows, found {len(body)}")
    data = np.empty((cols, rows))
    for j, ln in enumerate(body):
        vals = ln.split(",")
        if len(vals) != cols:
            raise ValueError(f"{path}: row {j} has {len(vals)} values, expected {cols}")
        data[:, j] = [float(x) for x in vals]
    return Snapshot(name, data, t, dx, dy, meta)
