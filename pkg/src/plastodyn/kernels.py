"""Backend selection for the time-step kernel.

The compiled Cython kernel is used when it was built; otherwise, or when
``PLASTODYN_PURE_PYTHON=1`` is set, the numpy reference implementation is
used.  Both write the same per-step quantities into ``out`` (layout in
:mod:`plastodyn._pykernels`).
"""

from __future__ import annotations

import os

import numpy as np

from . import _pykernels
from ._pykernels import DIRICHLET, IMPEDANCE, N_OUT, NEUMANN

__all__ = ["BACKEND", "BC_CODES", "N_OUT", "available_backends", "step"]

BC_CODES = {"impedance": IMPEDANCE, "dirichlet": DIRICHLET, "neumann": NEUMANN}

try:
    from . import _ckernels
except ImportError:  # pragma: no cover - depends on the build
    _ckernels = None

_FORCE_PURE = os.environ.get("PLASTODYN_PURE_PYTHON", "") not in ("", "0")
BACKEND = "python" if (_ckernels is None or _FORCE_PURE) else "cython"


def available_backends() -> list[str]:
    return ["python"] + ([] if _ckernels is None else ["cython"])


def _step_cython(u, v, sigma, p, f, g, dt, h, eps, lam, bc, out):
    has_f = f is not None
    if v.ndim == 1:
        ff = np.ascontiguousarray(f, dtype=float) if has_f else np.zeros(1)
        gg = np.zeros(2) if g is None else np.array([g[0][0], g[0][1]], dtype=float).ravel()
        _ckernels.step1d(u, v, sigma[0], p[0], ff, has_f, gg, dt, h, eps, lam, bc, out)
    else:
        nx, ny = v.shape
        ff = np.ascontiguousarray(f, dtype=float) if has_f else np.zeros((1, 1))
        if g is None:
            gxl = gxh = np.zeros(ny)
            gyl = gyh = np.zeros(nx)
        else:
            gxl, gxh = (np.ascontiguousarray(x, dtype=float) for x in g[0])
            gyl, gyh = (np.ascontiguousarray(x, dtype=float) for x in g[1])
        _ckernels.step2d(u, v, sigma[0], sigma[1], p[0], p[1], ff, has_f,
                         gxl, gxh, gyl, gyh, dt, h, eps, lam, bc, out)


def step(u, v, sigma, p, f, g, dt, h, eps, lam, bc, out, backend: str | None = None):
    """Advance one step in place with the selected backend.

    ``bc`` is an integer code from :data:`BC_CODES`; ``g`` is ``None`` or, per
    axis, a ``(low, high)`` pair of boundary-face arrays.
    """
    backend = backend or BACKEND
    if backend == "cython":
        if _ckernels is None:
            raise RuntimeError("compiled kernels are not available")
        _step_cython(u, v, sigma, p, f, g, dt, h, eps, lam, bc, out)
    elif backend == "python":
        _pykernels.step(u, v, sigma, p, f, g, dt, h, eps, lam, bc, out)
    else:
        raise ValueError(f"unknown backend {backend!r}")
