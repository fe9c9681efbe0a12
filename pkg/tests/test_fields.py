import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from marangoni import _kernels as K
from marangoni.fields import (BoundaryData, Grid, ScalarField, VectorField, advect_upwind, divergence,
                              face_inner, gradient, laplacian, read_snapshot,
                              symmetric_gradient_norm_sq, write_snapshot)
from marangoni.linalg import dirichlet_laplacian_matrix

from conftest import band_limited, dense_dirichlet_oracle


# ------------------------------------------------------------------ grid

def test_grid_spacing_and_validation():
    g = Grid(8, 5, 2.0, 1.0)
    assert g.dx == 0.25 and g.dy == 0.2
    assert g.shape == (8, 5)
    with pytest.raises(ValueError):
        Grid(3, 8)
    with pytest.raises(ValueError):
        Grid(8, 8, lx=0.0)


def test_field_shape_checks():
    g = Grid(6, 5)
    with pytest.raises(ValueError):
        ScalarField(g, np.zeros((5, 6)))
    with pytest.raises(ValueError):
        VectorField(g, np.zeros((6, 5)), np.zeros((6, 6)))


def test_boundary_data_admissibility():
    g = Grid(4, 4)
    BoundaryData.constant(g, 1.0).check_phase_admissible()
    with pytest.raises(ValueError):
        BoundaryData.constant(g, 1.5).check_phase_admissible()


# ------------------------------------------------------------- laplacian

def test_laplacian_of_constant_is_zero(backend):
    g = Grid(9, 7)
    f = ScalarField(g, np.full(g.shape, 0.3), BoundaryData.constant(g, 0.3))
    assert np.max(np.abs(laplacian(f).values)) < 1e-11


def test_laplacian_of_quadratic(backend):
    g = Grid(16, 16)
    fn = lambda x, y: x ** 2 + y ** 2
    X, Y = g.cell_centers()
    f = ScalarField(g, fn(X, Y), BoundaryData.from_function(g, fn))
    lap = laplacian(f).values
    # exact away from the ghost closure
    assert np.allclose(lap[1:-1, 1:-1], 4.0, atol=1e-9)
    # linear extrapolation misses f'' h^2 / 4 in each ghost, i.e. -f''/4 = -0.5 per wall
    assert np.allclose(lap[0, 1:-1], 3.5) and np.allclose(lap[1:-1, -1], 3.5)
    assert np.allclose(lap[[0, 0, -1, -1], [0, -1, 0, -1]], 3.0)


def test_laplacian_matches_dense_oracle(backend, rng):
    g = Grid(8, 8)
    bc = BoundaryData(*(rng.uniform(-1, 1, n) for n in (g.ny, g.ny, g.nx, g.nx)))
    vals = band_limited(g, rng) + 0.1 * rng.standard_normal(g.shape)
    A, c = dense_dirichlet_oracle(g, bc)
    expected = (A @ vals.ravel() + c).reshape(g.shape)
    got = laplacian(ScalarField(g, vals, bc)).values
    assert np.max(np.abs(got - expected)) <= 1e-12 * np.max(np.abs(expected))


def test_sparse_laplacian_matrix_matches_dense_oracle():
    g = Grid(6, 5, 1.0, 0.7)
    A, _ = dense_dirichlet_oracle(g, BoundaryData.zeros(g))
    assert np.allclose(dirichlet_laplacian_matrix(g).toarray(), A, rtol=0, atol=1e-10)


def test_neumann_laplacian_annihilates_constants(backend):
    g = Grid(7, 9)
    f = ScalarField(g, np.full(g.shape, 2.0), None)
    assert np.max(np.abs(laplacian(f).values)) < 1e-11


# -------------------------------------------------------------- gradient

def test_gradient_of_constant_is_zero():
    g = Grid(6, 6)
    gr = gradient(ScalarField(g, np.full(g.shape, -0.4), BoundaryData.constant(g, -0.4)))
    assert gr.max_abs() < 1e-14


def test_gradient_of_linear_field():
    g = Grid(10, 6)
    alpha = 1.7
    fn = lambda x, y: alpha * x + 0.0 * y
    X, _ = g.cell_centers()
    gr = gradient(ScalarField(g, fn(X, 0 * X), BoundaryData.from_function(g, fn)))
    assert np.allclose(gr.u, alpha, rtol=0, atol=1e-12)
    assert np.allclose(gr.v[:, 1:-1], 0.0, atol=1e-12)


def _random_no_slip(g, rng):
    return VectorField(g, rng.standard_normal((g.nx + 1, g.ny)),
                       rng.standard_normal((g.nx, g.ny + 1))).enforce_no_slip()


@settings(max_examples=25, deadline=None)
@given(nx=st.integers(4, 14), ny=st.integers(4, 14), seed=st.integers(0, 2 ** 31))
def test_summation_by_parts(nx, ny, seed):
    rng = np.random.default_rng(seed)
    g = Grid(nx, ny, 1.0, 0.8)
    f = ScalarField(g, rng.standard_normal(g.shape), BoundaryData.zeros(g))
    w = _random_no_slip(g, rng)
    lhs = face_inner(gradient(f), w)
    rhs = -float(np.sum(f.values * divergence(w).values)) * g.cell_area
    scale = math.sqrt(face_inner(gradient(f), gradient(f)) * face_inner(w, w))
    assert abs(lhs - rhs) <= 1e-12 * scale


@pytest.mark.parametrize("bc", ["dirichlet", "neumann"])
def test_divergence_of_gradient_is_laplacian(backend, rng, bc):
    g = Grid(11, 9)
    f = ScalarField(g, rng.standard_normal(g.shape), BoundaryData.zeros(g) if bc == "dirichlet" else None)
    a = divergence(gradient(f)).values
    b = laplacian(f).values
    assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(b))


def test_divergence_of_zero():
    g = Grid(5, 5)
    assert np.all(divergence(VectorField.zeros(g)).values == 0.0)


# ------------------------------------------------------------- advection

def test_advection_trivial_cases(backend, rng):
    g = Grid(8, 8)
    f = ScalarField(g, rng.standard_normal(g.shape), BoundaryData.zeros(g))
    assert np.all(advect_upwind(f, VectorField.zeros(g)).values == 0.0)
    const = ScalarField(g, np.full(g.shape, 0.7), BoundaryData.constant(g, 0.7))
    assert np.max(np.abs(advect_upwind(const, _random_no_slip(g, rng)).values)) < 1e-12


def test_upwind_step_profile_is_monotone(backend):
    g = Grid(20, 6)
    X, _ = g.cell_centers()
    vals = np.where(X < 0.5, 1.0, -1.0)
    f = ScalarField(g, vals, BoundaryData.from_function(g, lambda x, y: np.where(x < 0.5, 1.0, -1.0)))
    w = VectorField.zeros(g)
    w.u[1:-1, :] = 1.0
    dt = 0.5 * g.dx  # CFL 0.5
    new = vals - dt * advect_upwind(f, w).values
    assert new.min() >= vals.min() and new.max() <= vals.max()
    assert not np.array_equal(new, vals)


def _vortex(g, amp=1.0):
    xc = np.arange(g.nx + 1) * g.dx
    yc = np.arange(g.ny + 1) * g.dy
    psi = amp * np.outer(np.sin(np.pi * xc) ** 2, np.sin(np.pi * yc) ** 2)
    return VectorField(g, (psi[:, 1:] - psi[:, :-1]) / g.dy, -(psi[1:, :] - psi[:-1, :]) / g.dx)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 31), amp=st.floats(0.1, 3.0))
def test_upwind_preserves_extrema_in_divergence_free_flow(seed, amp):
    rng = np.random.default_rng(seed)
    g = Grid(12, 12)
    w = _vortex(g, amp)
    assert np.max(np.abs(divergence(w).values)) < 1e-10
    f = ScalarField(g, rng.uniform(-1, 1, g.shape), BoundaryData.zeros(g))
    uc = np.maximum(np.abs(w.u[1:, :]), np.abs(w.u[:-1, :]))
    vc = np.maximum(np.abs(w.v[:, 1:]), np.abs(w.v[:, :-1]))
    dt = 1.0 / np.max(uc / g.dx + vc / g.dy)
    new = f.values - dt * advect_upwind(f, w).values
    assert new.max() <= f.values.max() + 1e-12
    assert new.min() >= f.values.min() - 1e-12


# ---------------------------------------------------- symmetric gradient

def test_symmetric_gradient_zero_field(backend):
    g = Grid(6, 6)
    assert np.all(symmetric_gradient_norm_sq(VectorField.zeros(g)).values == 0.0)


def test_symmetric_gradient_rotation_and_shear(backend):
    g = Grid(16, 16)
    xu, yu = g.u_faces()
    xv, yv = g.v_faces()
    rot = VectorField(g, -(yu - 0.5), xv - 0.5)
    assert np.max(np.abs(symmetric_gradient_norm_sq(rot).values[1:-1, 1:-1])) < 1e-10
    shear = VectorField(g, yu, 0.0 * yv)
    assert np.allclose(symmetric_gradient_norm_sq(shear).values[1:-1, 1:-1], 0.5, atol=1e-10)


# ----------------------------------------------------- convergence orders

def _order(errors):
    return math.log2(errors[0] / errors[1]), math.log2(errors[1] / errors[2])


def test_operator_convergence_orders(backend):
    fn = lambda x, y: np.sin(np.pi * x) * np.sin(2 * np.pi * y) + 0.3 * x * y
    fx = lambda x, y: np.pi * np.cos(np.pi * x) * np.sin(2 * np.pi * y) + 0.3 * y
    fy = lambda x, y: 2 * np.pi * np.sin(np.pi * x) * np.cos(2 * np.pi * y) + 0.3 * x
    lap = lambda x, y: -5 * np.pi ** 2 * np.sin(np.pi * x) * np.sin(2 * np.pi * y)
    errs = {"laplacian": [], "gradient": [], "divergence": [], "upwind": []}
    for n in (16, 32, 64):
        g = Grid(n, n)
        X, Y = g.cell_centers()
        f = ScalarField(g, fn(X, Y), BoundaryData.from_function(g, fn))
        errs["laplacian"].append(np.max(np.abs(laplacian(f).values - lap(X, Y))))
        gr = gradient(f)
        xu, yu = g.u_faces()
        xv, yv = g.v_faces()
        errs["gradient"].append(max(np.max(np.abs(gr.u - fx(xu, yu))), np.max(np.abs(gr.v - fy(xv, yv)))))
        w = VectorField(g, fn(xu, yu), fy(xv, yv))
        div_exact = fx(X, Y) + (-4 * np.pi ** 2 * np.sin(np.pi * X) * np.sin(2 * np.pi * Y))
        errs["divergence"].append(np.max(np.abs(divergence(w).values - div_exact)))
        flow = VectorField.zeros(g)
        flow.u[1:-1, :] = 1.0
        adv = advect_upwind(f, flow).values
        errs["upwind"].append(np.max(np.abs(adv - fx(X, Y))[1:, :]))
    for name, expected in (("laplacian", 2), ("gradient", 2), ("divergence", 2), ("upwind", 1)):
        for p in _order(errs[name]):
            assert abs(p - expected) <= 0.3, (name, errs[name])


# --------------------------------------------------------------- backends

def test_backends_agree(rng):
    backends = K.available_backends()
    if len(backends) < 2:
        pytest.skip("compiled backend not built")
    n, m = 11, 9
    dx, dy = 0.1, 0.13
    f = rng.standard_normal((n, m))
    u = rng.standard_normal((n + 1, m))
    v = rng.standard_normal((n, m + 1))
    u[[0, -1]] = 0.0
    v[:, [0, -1]] = 0.0
    b = [rng.standard_normal(k) for k in (m, m, n, n)]
    mu_c = 1 + rng.uniform(size=(n, m))
    mu_k = 1 + rng.uniform(size=(n + 1, m + 1))
    txy = rng.standard_normal((n + 1, m + 1))
    calls = {
        "pad_dirichlet": (f, *b),
        "laplacian": (f, *b, dx, dy),
        "laplacian_neumann": (f, dx, dy),
        "helmholtz_apply": (f, mu_c, 0.3, dx, dy),
        "advect_upwind": (f, u, v, dx, dy),
        "advect_centered": (f, u, v, dx, dy),
        "momentum_advection": (u, v, dx, dy),
        "corner_shear": (u, v, dx, dy),
        "viscous_force": (u, v, mu_c, mu_k, dx, dy),
        "tensor_divergence": (f, f, txy, dx, dy),
    }
    assert set(calls) == set(K.KERNELS)
    results = {}
    for name in backends:
        K.use_backend(name)
        results[name] = {k: K.__dict__[k](*args) for k, args in calls.items()}
    K.use_backend(backends[0])
    as_tuple = lambda r: r if isinstance(r, tuple) else (r,)
    for k in calls:
        for x, y in zip(as_tuple(results["cython"][k]), as_tuple(results["python"][k])):
            assert x.shape == y.shape, k
            assert np.max(np.abs(x - y)) <= 1e-12 * max(1.0, np.max(np.abs(y))), k


def test_unknown_backend_rejected():
    with pytest.raises(ValueError):
        K.use_backend("fortran")


# -------------------------------------------------------------- snapshots

def test_snapshot_round_trip(tmp_path, rng):
    vals = rng.standard_normal((7, 5))
    path = tmp_path / "snap.csv"
    write_snapshot(path, "phi", vals, 0.125, 0.1, 0.2)
    text = path.read_text().splitlines()
    assert text[0] == "# field=phi nx=7 ny=5 t=0.125 dx=0.10000000000000001 dy=0.20000000000000001"
    assert len(text) == 6 and len(text[1].split(",")) == 7
    snap = read_snapshot(path)
    assert snap.name == "phi" and snap.t == 0.125
    assert np.array_equal(snap.values, vals)


@pytest.mark.parametrize("content, msg", [
    ("1,2\n", "missing snapshot header"),
    ("# field=phi nx=2 ny=2 t=0 dx=1\n1,2\n3,4\n", "lacks"),
    ("# field=phi nx=2 ny=2 t=0 dx=1 dy=1\n1,2\n", "expected 2 rows"),
    ("# field=phi nx=2 ny=2 t=0 dx=1 dy=1\n1,2\n3\n", "row 1"),
])
def test_snapshot_format_errors(tmp_path, content, msg):
    path = tmp_path / "bad.csv"
    path.write_text(content)
    with pytest.raises(ValueError, match=msg):
        read_snapshot(path)
