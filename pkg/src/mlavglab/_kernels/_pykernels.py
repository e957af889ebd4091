"""Reference numpy implementations of the hot kernels.

These define the semantics the compiled kernels must reproduce.  Shifts
are in cell units: slot j at node i reads f_j(x - s_ij).
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"

_FT_CHUNK_ELEMS = 1 << 22


def taps(t: float, order: int) -> tuple[int, np.ndarray]:
    """First tap offset and weights for fractional position t in [0, 1)."""
    if order == 3:
        w = np.array(
            [
                ((-0.5 * t + 1.0) * t - 0.5) * t,
                (1.5 * t - 2.5) * t * t + 1.0,
                ((-1.5 * t + 2.0) * t + 0.5) * t,
                (0.5 * t - 0.5) * t * t,
            ]
        )
        return -1, w
    if order == 1:
        return 0, np.array([1.0 - t, t])
    raise ValueError(f"unsupported interpolation order {order}")


def _interp_window(f: np.ndarray, shift: np.ndarray, origin, wshape, order: int) -> np.ndarray:
    out = f
    for ax in range(f.ndim):
        n = f.shape[ax]
        q = -float(shift[ax])
        fq = np.floor(q)
        off, w = taps(q - fq, order)
        base = origin[ax] + np.arange(wshape[ax]) + int(fq) + off
        acc = None
        for a, wa in enumerate(w):
            part = wa * np.take(out, (base + a) % n, axis=ax)
            acc = part if acc is None else acc + part
        out = acc
    return out


def gather_product(inputs: np.ndarray, shifts: np.ndarray, weights: np.ndarray, origin, wshape, order: int) -> np.ndarray:
    """sum_i w_i prod_j f_j(x - s_ij) on the window, Kahan-compensated over nodes in order."""
    m = inputs.shape[0]
    dtype = np.result_type(inputs.dtype, np.float64)
    total = np.zeros(tuple(wshape), dtype=dtype)
    comp = np.zeros_like(total)
    for i in range(shifts.shape[0]):
        prod = _interp_window(inputs[0], shifts[i, 0], origin, wshape, order)
        for j in range(1, m):
            prod = prod * _interp_window(inputs[j], shifts[i, j], origin, wshape, order)
        y = weights[i] * prod - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


def ft_points(nodes: np.ndarray, weights: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """sum_i w_i exp(-2 pi i xi.y_i) for each row of xi."""
    k = xi.shape[0]
    out = np.empty(k, dtype=np.complex128)
    step = max(1, _FT_CHUNK_ELEMS // max(1, nodes.shape[0]))
    for s in range(0, k, step):
        phase = xi[s : s + step] @ nodes.T
        out[s : s + step] = np.exp(-2j * np.pi * phase) @ weights
    return out


def ft_rays(nodes, weights, dirs, starts, step: float, nsteps: int) -> np.ndarray:
    """Transform at xi = (r + s*step) * dir for every direction, start r and s < nsteps."""
    t = np.asarray(starts)[:, None] + step * np.arange(nsteps)[None, :]
    xi = (t[None, :, :, None] * np.asarray(dirs)[:, None, None, :]).reshape(-1, nodes.shape[1])
    return ft_points(nodes, weights, xi).reshape(len(dirs), len(starts), nsteps)
