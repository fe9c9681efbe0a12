"""Backend selection for the stencil kernels.

The compiled module is used when it was built; set ``MARANGONI_PURE_PYTHON=1``
to force the numpy fallback.  :func:`use_backend` switches at runtime.
"""
import os
from importlib import import_module

KERNELS = ("pad_dirichlet", "laplacian", "laplacian_neumann", "helmholtz_apply", "advect_upwind",
           "advect_centered", "momentum_advection", "corner_shear", "viscous_force",
           "tensor_divergence")

_MODULES = {"cython": "._ckernels", "python": "._pykernels"}


def available_backends():
    out = []
    for name, mod in _MODULES.items():
        try:
            import_module(mod, __package__)
        except ImportError:
            continue
        out.append(name)
    return out


def use_backend(name: str):
    """Rebind every kernel in this module to backend ``name`` ("cython" or "python")."""
    global BACKEND
    if name not in _MODULES:
        raise ValueError(f"unknown backend {name!r}")
    impl = import_module(_MODULES[name], __package__)
    g = globals()
    for k in KERNELS:
        g[k] = getattr(impl, k)
    BACKEND = impl.BACKEND


if os.environ.get("MARANGONI_PURE_PYTHON", "") not in ("", "0"):
    use_backend("python")
else:
    try:
        use_backend("cython")
    except ImportError:  # extension not built
        use_backend("python")
