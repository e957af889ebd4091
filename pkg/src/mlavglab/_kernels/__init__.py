"""Kernel backend selection.

The compiled extension is used when it was built and the environment
variable ``MLAVGLAB_PURE_PYTHON`` is unset; otherwise every kernel runs on
the numpy reference implementation.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pykernels

try:
    if os.environ.get("MLAVGLAB_PURE_PYTHON"):
        raise ImportError("pure-Python kernels requested")
    from . import _ckernels
except ImportError:
    _ckernels = None

BACKEND = _ckernels.NAME if _ckernels is not None else _pykernels.NAME


def available() -> list[str]:
    return [_pykernels.NAME] + ([_ckernels.NAME] if _ckernels is not None else [])


def _module(backend: str | None):
    name = backend or BACKEND
    if name == _pykernels.NAME:
        return _pykernels
    if name == "cython" and _ckernels is not None:
        return _ckernels
    raise ValueError(f"kernel backend {name!r} is not available (have {available()})")


def gather_product(inputs: np.ndarray, shifts: np.ndarray, weights: np.ndarray, origin, wshape, order: int, backend: str | None = None) -> np.ndarray:
    """Window of sum_i w_i prod_j f_j(x - s_ij) with shifts in cell units.

    ``inputs`` has shape (m, N, ..., N); complex inputs and dimensions above
    three always use the numpy path.
    """
    mod = _module(backend)
    d = inputs.ndim - 1
    shifts = np.ascontiguousarray(shifts, dtype=np.float64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    origin = [int(o) for o in origin]
    wshape = [int(w) for w in wshape]
    if mod is _ckernels and not np.iscomplexobj(inputs) and d in (1, 2, 3):
        F = np.ascontiguousarray(inputs, dtype=np.float64)
        fn = (_ckernels.gather_product_1d, _ckernels.gather_product_2d, _ckernels.gather_product_3d)[d - 1]
        return fn(F, shifts, weights, *origin, *wshape, int(order))
    return _pykernels.gather_product(inputs, shifts, weights, origin, wshape, order)


def ft_points(nodes, weights, xi, backend: str | None = None) -> np.ndarray:
    mod = _module(backend)
    return mod.ft_points(
        np.ascontiguousarray(nodes, dtype=np.float64),
        np.ascontiguousarray(weights, dtype=np.float64),
        np.ascontiguousarray(xi, dtype=np.float64),
    )


def ft_rays(nodes, weights, dirs, starts, step: float, nsteps: int, backend: str | None = None) -> np.ndarray:
    mod = _module(backend)
    return mod.ft_rays(
        np.ascontiguousarray(nodes, dtype=np.float64),
        np.ascontiguousarray(weights, dtype=np.float64),
        np.ascontiguousarray(dirs, dtype=np.float64),
        np.ascontiguousarray(starts, dtype=np.float64),
        float(step),
        int(nsteps),
    )
