"""Compare the compiled and numpy stencil kernels, one by one and inside full time steps.

    python benchmarks/bench_kernels.py [--sizes 32 64 128] [--steps 200]
"""
import argparse
import time

import numpy as np

from marangoni import _kernels as K
from marangoni.coefficients import PhysicalParams
from marangoni.dynamics import SimState, StepConfig, advance, stability_bounds
from marangoni.fields import BoundaryData, Grid


def _best_of(fn, repeat=5, number=None):
    if number is None:
        t0 = time.perf_counter()
        fn()
        once = time.perf_counter() - t0
        number = max(1, int(0.05 / max(once, 1e-7)))
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(number):
            fn()
        best = min(best, (time.perf_counter() - t0) / number)
    return best


def kernel_cases(n, rng):
    dx = dy = 1.0 / n
    f = rng.standard_normal((n, n))
    u = rng.standard_normal((n + 1, n))
    v = rng.standard_normal((n, n + 1))
    u[[0, -1], :] = 0.0
    v[:, [0, -1]] = 0.0
    b = [rng.standard_normal(n) for _ in range(4)]
    mu_c = 1.0 + rng.uniform(size=(n, n))
    mu_k = 1.0 + rng.uniform(size=(n + 1, n + 1))
    txy = rng.standard_normal((n + 1, n + 1))
    diag = np.ones((n, n))
    return {
        "laplacian": lambda: K.laplacian(f, *b, dx, dy),
        "laplacian_neumann": lambda: K.laplacian_neumann(f, dx, dy),
        "helmholtz_apply": lambda: K.helmholtz_apply(f, diag, 0.1, dx, dy),
        "advect_upwind": lambda: K.advect_upwind(f, u, v, dx, dy),
        "momentum_advection": lambda: K.momentum_advection(u, v, dx, dy),
        "viscous_force": lambda: K.viscous_force(u, v, mu_c, mu_k, dx, dy),
        "tensor_divergence": lambda: K.tensor_divergence(f, f, txy, dx, dy),
    }


def step_time(n, steps):
    params = PhysicalParams()
    grid = Grid(n, n)
    X, Y = grid.cell_centers()
    profile = lambda x, y: np.tanh((x - 0.5) / (np.sqrt(2) * params.eps))
    theta0 = 0.2 * np.exp(-((X - 0.5) ** 2 + (Y - 0.5) ** 2) / 0.02)
    state = SimState.initial(grid, profile(X, Y), BoundaryData.from_function(grid, profile), theta0)
    cfg = StepConfig(0.9 * min(stability_bounds(grid, params, 0.2).values()))
    state = advance(state, cfg, params)
    t0 = time.perf_counter()
    for _ in range(steps):
        state = advance(state, cfg, params)
    return (time.perf_counter() - t0) / steps


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[32, 64, 128])
    ap.add_argument("--steps", type=int, default=200)
    args = ap.parse_args()
    backends = K.available_backends()
    if len(backends) < 2:
        print(f"only {backends} available; build the extension with `pip install -e .` to compare")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<20}{'n':>5}" + "".join(f"{b + ' [us]':>16}" for b in backends) + f"{'speedup':>10}")
    for n in args.sizes:
        names = list(kernel_cases(n, rng))
        for name in names:
            times = []
            for b in backends:
                K.use_backend(b)
                times.append(_best_of(kernel_cases(n, np.random.default_rng(1))[name]))
            speed = times[-1] / times[0] if len(times) == 2 else float("nan")
            print(f"{name:<20}{n:>5}" + "".join(f"{1e6 * t:>16.2f}" for t in times) + f"{speed:>10.2f}")
    print()
    print(f"{'full step':<20}{'n':>5}" + "".join(f"{b + ' [ms]':>16}" for b in backends) + f"{'speedup':>10}")
    for n in args.sizes:
        times = []
        for b in backends:
            K.use_backend(b)
            times.append(step_time(n, args.steps if n <= 64 else max(10, args.steps // 4)))
        speed = times[-1] / times[0] if len(times) == 2 else float("nan")
        print(f"{'advance':<20}{n:>5}" + "".join(f"{1e3 * t:>16.3f}" for t in times) + f"{speed:>10.2f}")


if __name__ == "__main__":
    main()
