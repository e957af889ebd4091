"""Test-function families and their closed-form scaling exponents."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.ndimage import uniform_filter

from ..grid import DomainBox, GridFunction

FAMILIES = ("ball-indicators", "knapp-caps", "gaussian-bumps", "modes", "constant")


def _mollify(box: DomainBox, a: np.ndarray, cells: int) -> np.ndarray:
    if cells <= 0:
        return a
    return uniform_filter(a, size=2 * cells + 1, mode="wrap")


def _displacement(box: DomainBox, center: Sequence[float]) -> list[np.ndarray]:
    """Periodic displacement x - center on each axis, in [-L/2, L/2)."""
    L = box.L
    out = []
    for X, c in zip(box.mesh(), center):
        out.append((X - c + L / 2) % L - L / 2)
    return out


def ball_indicator(box: DomainBox, radius: float, center: Sequence[float] | None = None, mollify_cells: int = 1) -> GridFunction:
    """1_{|x - c| < r}, smoothed by a box filter of half-width ``mollify_cells``."""
    c = box.center() if center is None else np.asarray(center, float)
    D = _displacement(box, c)
    r2 = sum(x * x for x in D)
    return GridFunction(box, _mollify(box, (r2 < radius * radius).astype(float), mollify_cells))


def knapp_cap(box: DomainBox, r: float, normal: Sequence[float] | None = None, center: Sequence[float] | None = None, mollify_cells: int = 1) -> GridFunction:
    """Box of side r^2 along ``normal`` and r along the orthogonal directions."""
    d = box.d
    c = box.center() if center is None else np.asarray(center, float)
    nrm = np.zeros(d) if normal is None else np.asarray(normal, float)
    if normal is None:
        nrm[-1] = 1.0
    nrm = nrm / np.linalg.norm(nrm)
    D = _displacement(box, c)
    along = sum(x * n for x, n in zip(D, nrm))
    perp2 = sum(x * x for x in D) - along**2
    mask = (np.abs(along) < r * r / 2) & (perp2 < (r / 2) ** 2)
    return GridFunction(box, _mollify(box, mask.astype(float), mollify_cells))


def gaussian_bumps(box: DomainBox, rng: np.random.Generator, count: int = 3, width: float | None = None) -> GridFunction:
    """Sum of positive periodic Gaussians with random centers and amplitudes."""
    w = box.L / 16 if width is None else width
    total = np.zeros(box.shape)
    for _ in range(count):
        c = rng.uniform(0, box.L, box.d)
        D = _displacement(box, c)
        total += rng.uniform(0.5, 1.5) * np.exp(-sum(x * x for x in D) / (2 * w * w))
    return GridFunction(box, total)


def random_modes(box: DomainBox, rng: np.random.Generator, decay: float = 1.0) -> GridFunction:
    """Real random field with amplitudes (1 + |xi|)^{-decay}, unit RMS."""
    k = box.frequency_norm()
    c = (rng.standard_normal(box.shape) + 1j * rng.standard_normal(box.shape)) * (1.0 + k) ** (-decay)
    v = np.fft.ifftn(c).real
    return GridFunction(box, v / np.sqrt(np.mean(v * v)))


def single_mode(box: DomainBox, k: Sequence[int]) -> GridFunction:
    """cos(2 pi k.x / L)."""
    phase = sum(kk * X for kk, X in zip(k, box.mesh())) * (2 * np.pi / box.L)
    return GridFunction(box, np.cos(phase))


# scaling oracles --------------------------------------------------------------
#
# Origin placement, operator with dilates reaching below the family scale:
# near the center the maximal average is of size one on a set comparable to
# the support, so ratio ~ vol^{1/p - sum 1/p_j} = vol^{-D}.  With vol ~ r^a
# the log2-ratio grows like a*D per unit of -log2 r.
#
# Transversal placement (c_j = -t Theta_j y0) for a single dilate t: the
# average is ~ r^s on a ball of radius r, s the surface dimension, giving
# ratio ~ r^{s + d/p - d sum 1/p_j}, slope d*D - s.

def volume_exponent(family: str, d: int) -> int:
    if family == "ball-indicators":
        return d
    if family == "knapp-caps":
        return d + 1
    raise ValueError(f"no volume exponent for family {family!r}")


def predicted_slope(family: str, placement: str, d: int, defect: Fraction, surface_dim: int | None = None) -> Fraction:
    """Slope of log2(ratio) against -log2(r) for the indicator families."""
    defect = Fraction(defect)
    if placement == "origin":
        return volume_exponent(family, d) * defect
    if placement == "transversal":
        if family != "ball-indicators" or surface_dim is None:
            raise ValueError("transversal oracle covers ball indicators with a known surface dimension")
        return d * defect - surface_dim
    raise ValueError(f"unknown placement {placement!r}")
