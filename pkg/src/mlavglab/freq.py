"""Littlewood-Paley projections and Fourier-side norms on the periodic grid.

Frequencies are xi = k/L with the transform f^(xi) = sum_x f(x) e^{-2 pi i x.xi} h^d.
The low-pass symbol is phi^(2^{1-l} xi), supported in |xi| < 2^l, and the
band symbol is psi^(2^{-l} xi) = phi^(2^{-l} xi) - phi^(2^{1-l} xi),
supported in 2^{l-1} < |xi| < 2^{l+1}.  With this pairing the finite sums
telescope: P_{<l} + P_l + ... + P_{l+n} = P_{<l+n+1}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from . import _runtime
from .grid import DomainBox, GridFunction, lp_norm

DEFAULT_ORDER = 4


def smoothstep(t: np.ndarray, order: int) -> np.ndarray:
    """Degree 2*order+1 smoothstep on [0, 1]; C^order at both ends."""
    t = np.clip(t, 0.0, 1.0)
    n = order
    acc = np.zeros_like(t)
    for k in range(n + 1):
        acc += math.comb(n + k, k) * math.comb(2 * n + 1, n - k) * (-t) ** k
    return t ** (n + 1) * acc


@dataclass(frozen=True)
class MollifierPair:
    """Radial profile phi^ (1 on |xi| <= 1, 0 on |xi| >= 2) and psi^(xi) = phi^(xi) - phi^(2 xi)."""

    order: int = DEFAULT_ORDER

    def phi(self, r) -> np.ndarray:
        r = np.abs(np.asarray(r, dtype=float))
        return np.where(r <= 1.0, 1.0, np.where(r >= 2.0, 0.0, smoothstep(2.0 - r, self.order)))

    def psi(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return self.phi(r) - self.phi(2.0 * r)


def build_mollifiers(order: int = DEFAULT_ORDER) -> MollifierPair:
    if not isinstance(order, (int, np.integer)) or order < 2:
        raise ValueError(f"smoothness order must be an integer >= 2, got {order!r}")
    return MollifierPair(int(order))


def fft(f: GridFunction) -> np.ndarray:
    """Unnormalized DFT (no h^d factor)."""
    return sfft.fftn(f.values, workers=_runtime.threads())


def ifft(box: DomainBox, coeffs: np.ndarray) -> GridFunction:
    return GridFunction(box, sfft.ifftn(coeffs, workers=_runtime.threads()))


@lru_cache(maxsize=256)
def _symbol(box: DomainBox, kind: str, level: int, order: int) -> np.ndarray:
    r = box.frequency_norm()
    mol = MollifierPair(order)
    if kind == "below":
        s = mol.phi(r * 2.0 ** (1 - level))
    elif kind == "band":
        s = mol.psi(r * 2.0 ** (-level))
    else:  # pragma: no cover
        raise ValueError(kind)
    s.flags.writeable = False
    return s


def below_symbol(box: DomainBox, level: int, order: int = DEFAULT_ORDER) -> np.ndarray:
    return _symbol(box, "below", int(level), int(order))


def band_symbol(box: DomainBox, level: int, order: int = DEFAULT_ORDER) -> np.ndarray:
    return _symbol(box, "band", int(level), int(order))


def band_in_range(box: DomainBox, level: int) -> bool:
    """True when the band's support reaches into the lattice."""
    return 2.0 ** (level - 1) < box.max_frequency()


def top_band(box: DomainBox) -> int:
    """Largest band index whose support meets the lattice."""
    lvl = math.floor(math.log2(box.max_frequency())) + 1
    while not band_in_range(box, lvl):
        lvl -= 1
    while band_in_range(box, lvl + 1):
        lvl += 1
    return lvl


def apply_symbol(f: GridFunction, symbol: np.ndarray) -> GridFunction:
    vals = sfft.ifftn(sfft.fftn(f.values, workers=_runtime.threads()) * symbol, workers=_runtime.threads())
    if f.is_real():
        vals = vals.real
    return GridFunction(f.box, vals)


def project_below(f: GridFunction, level: int, mollifier: MollifierPair | None = None, *, with_flag: bool = False):
    """P_{<l} f.  With ``with_flag`` also report whether the symbol is 1 on the whole lattice."""
    order = (mollifier or MollifierPair()).order
    sym = below_symbol(f.box, level, order)
    saturated = bool(np.all(sym == 1.0))
    g = f if saturated else apply_symbol(f, sym)
    return (g, saturated) if with_flag else g


def project_band(f: GridFunction, level: int, mollifier: MollifierPair | None = None) -> GridFunction:
    """P_l f for a band that meets the lattice."""
    if not band_in_range(f.box, level):
        raise ValueError(
            f"band {level} lies beyond the lattice corner |xi| = {f.box.max_frequency():.6g}; "
            f"highest representable band is {top_band(f.box)}"
        )
    order = (mollifier or MollifierPair()).order
    return apply_symbol(f, band_symbol(f.box, level, order))


@dataclass(frozen=True)
class BesovNorm:
    value: float
    top_band: int

    def __float__(self) -> float:
        return self.value


def besov_norm(f: GridFunction, s: float, p: float, q: float, mollifier: MollifierPair | None = None) -> BesovNorm:
    """||P_{<1} f||_p + (sum_{l>=1} 2^{lsq} ||P_l f||_p^q)^{1/q}, summed up to the top lattice band."""
    if not p > 0 or not q > 0:
        raise ValueError("Besov exponents must be positive")
    top = top_band(f.box)
    low = lp_norm(project_below(f, 1, mollifier), p)
    terms = [2.0 ** (lvl * s) * lp_norm(project_band(f, lvl, mollifier), p) for lvl in range(1, top + 1)]
    if not terms:
        high = 0.0
    elif q == math.inf:
        high = max(terms)
    else:
        t = np.asarray(terms)
        m = t.max()
        high = 0.0 if m == 0 else float(m * np.sum((t / m) ** q) ** (1.0 / q))
    return BesovNorm(low + high, top)


def sobolev_norm(f: GridFunction, s: float, p: float = 2) -> float:
    """Bessel-potential H^{s,2} norm: L^{d/2} (sum_k (1+|xi|^2)^s |c_k|^2)^{1/2} with Fourier-series coefficients c_k."""
    if p != 2:
        raise ValueError("only the p = 2 Bessel-potential norm is supported")
    box = f.box
    c = fft(f) / box.cells
    weight = (1.0 + box.frequency_norm() ** 2) ** s
    return float(math.sqrt(box.volume * float(np.sum(weight * np.abs(c) ** 2))))
