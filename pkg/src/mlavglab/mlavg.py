"""Multilinear averages over surfaces, their lacunary maxima and band pieces.

Two scale conventions coexist.  ``avg_theta``/``avg_sigma``/``lacunary_max``
dilate by t = 2^l.  The frequency-localized pieces (``band_localized_avg``,
``band_max``, ``band_sum``, ``domination_check``) dilate by 2^{-l}, which is
the pairing under which band l + n is a relative frequency of 2^n.

Slot j at node y_i reads f_j(x - t v_ij) with v_ij = Theta_j y_i (theta
variant) or the j-th block of y_i (sigma variant).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.fft as sfft

from . import _kernels, _runtime
from .freq import MollifierPair, project_band, project_below
from .grid import DomainBox, GridFunction, all_cell_radii, hl_maximal
from .surface import RotationFamily, SurfaceQuadrature

METHODS = ("cubic", "linear", "spectral")
_ORDER = {"cubic": 3, "linear": 1}
_MARGIN = {"cubic": 3, "linear": 2}
CHUNK = 64


@dataclass(frozen=True, eq=False)
class AvgSpec:
    """Operator description.

    ``periodic`` lifts the box guard for inputs that are genuinely periodic;
    otherwise a dilate t needs t * diam <= L/4.
    """

    variant: str
    quadrature: SurfaceQuadrature
    rotations: RotationFamily | None = None
    levels: tuple[int, int] = (-6, 2)
    interpolation: str = "cubic"
    periodic: bool = False
    vectors: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        q = self.quadrature
        if self.variant == "theta":
            if self.rotations is None:
                raise ValueError("theta variant needs a rotation family")
            if q.ambient != self.rotations.d:
                raise ValueError(f"surface lives in R^{q.ambient} but rotations act on R^{self.rotations.d}")
            vec = np.stack([q.nodes @ np.asarray(T).T for T in self.rotations.matrices], axis=1)
        elif self.variant == "sigma":
            if q.blocks is None or len(set(q.blocks)) != 1:
                raise ValueError("sigma variant needs a quadrature split into equal blocks")
            vec = np.stack(q.block_nodes(), axis=1)
        else:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.interpolation not in METHODS:
            raise ValueError(f"interpolation must be one of {METHODS}")
        lo, hi = self.levels
        if lo > hi:
            raise ValueError("empty level range")
        vec = np.ascontiguousarray(vec)
        vec.flags.writeable = False
        object.__setattr__(self, "vectors", vec)

    @property
    def m(self) -> int:
        return self.vectors.shape[1]

    @property
    def d(self) -> int:
        return self.vectors.shape[2]

    @property
    def diameter(self) -> float:
        return 2.0 * float(np.max(np.linalg.norm(self.vectors, axis=2)))

    def with_(self, **changes) -> "AvgSpec":
        kw = dict(
            variant=self.variant,
            quadrature=self.quadrature,
            rotations=self.rotations,
            levels=self.levels,
            interpolation=self.interpolation,
            periodic=self.periodic,
        )
        kw.update(changes)
        return AvgSpec(**kw)

    def single_slot(self, j: int) -> "AvgSpec":
        """The one-function average along slot j's shifts."""
        if self.variant == "theta":
            rot = RotationFamily((self.rotations.matrices[j],))
            return self.with_(rotations=rot)
        q = self.quadrature
        sub = SurfaceQuadrature(self.vectors[:, j, :], q.weights, min(q.curvature_rank, self.d - 1) if self.d > 1 else 0, q.label, q.resolution, (self.d,))
        return self.with_(quadrature=sub)


def required_side(spec: AvgSpec, t: float) -> float:
    return 4.0 * t * spec.diameter


def check_dilation(spec: AvgSpec, box: DomainBox, t: float) -> None:
    if spec.periodic:
        return
    need = required_side(spec, t)
    if need > box.L * (1 + 1e-12):
        raise ValueError(f"dilate {t:g} with surface diameter {spec.diameter:g} needs a box side L >= {need:g}, have {box.L:g}")


def admissible_levels(spec: AvgSpec, box: DomainBox, levels: tuple[int, int] | None = None, sign: int = 1) -> list[int]:
    """Levels l in the range whose dilate 2^{sign*l} passes the box guard."""
    lo, hi = levels or spec.levels
    out = []
    for lvl in range(lo, hi + 1):
        try:
            check_dilation(spec, box, 2.0 ** (sign * lvl))
        except ValueError:
            continue
        out.append(lvl)
    return out


def _common_box(F: Sequence[GridFunction], spec: AvgSpec) -> DomainBox:
    if len(F) != spec.m:
        raise ValueError(f"operator takes {spec.m} functions, got {len(F)}")
    box = F[0].box
    if any(f.box != box for f in F):
        raise ValueError("all inputs must share one box")
    if box.d != spec.d:
        raise ValueError(f"inputs live in dimension {box.d}, operator in {spec.d}")
    return box


def _support_arc(occ: np.ndarray) -> tuple[int, int] | None:
    """Smallest periodic index arc (start, length) covering the True entries; None when all are set."""
    n = occ.size
    idx = np.flatnonzero(occ)
    if idx.size == n:
        return None
    if idx.size == 0:
        return (0, 0)
    gaps = np.diff(np.concatenate([idx, idx[:1] + n]))
    k = int(np.argmax(gaps))
    start = int(idx[(k + 1) % idx.size])
    end = int(idx[k])
    return start, (end - start) % n + 1


def _arcs(values: np.ndarray) -> list:
    d = values.ndim
    nz = values != 0
    out = []
    for ax in range(d):
        other = tuple(a for a in range(d) if a != ax)
        out.append(_support_arc(np.any(nz, axis=other) if other else nz))
    return out


def _node_windows(arcs_per_slot, shifts: np.ndarray, n: int, margin: int):
    """Per node and axis the interval [lo, hi] (cells) outside which the product vanishes.

    Returns (keep, lo, hi, full) where ``full[i, a]`` marks an unrestricted axis.
    """
    M, m, d = shifts.shape
    lo = np.zeros((M, d))
    hi = np.zeros((M, d))
    full = np.ones((M, d), dtype=bool)
    keep = np.ones(M, dtype=bool)
    for a in range(d):
        for j in range(m):
            arc = arcs_per_slot[j][a]
            if arc is None:
                continue
            start, length = arc
            if length == 0:
                keep[:] = False
                continue
            if length > n // 4:
                continue
            half = (length - 1) / 2.0 + margin
            c = start + (length - 1) / 2.0 + shifts[:, j, a]
            fresh = full[:, a]
            cc = np.where(fresh, c, 0.5 * (lo[:, a] + hi[:, a]))
            cu = cc + np.mod(c - cc + n / 2.0, n) - n / 2.0
            new_lo = np.where(fresh, cu - half, np.maximum(lo[:, a], cu - half))
            new_hi = np.where(fresh, cu + half, np.minimum(hi[:, a], cu + half))
            lo[:, a], hi[:, a] = new_lo, new_hi
            full[:, a] = False
        keep &= full[:, a] | (hi[:, a] >= lo[:, a])
    return keep, lo, hi, full


def _chunk_window(lo, hi, full, n: int):
    d = lo.shape[1]
    origin, wshape = [], []
    for a in range(d):
        if np.any(full[:, a]):
            origin.append(0)
            wshape.append(n)
            continue
        ref = 0.5 * (lo[0, a] + hi[0, a])
        c = 0.5 * (lo[:, a] + hi[:, a])
        off = np.mod(c - ref + n / 2.0, n) - n / 2.0 - (c - ref)
        a_lo = math.floor(float(np.min(lo[:, a] + off)))
        a_hi = math.floor(float(np.max(hi[:, a] + off)))
        if a_hi - a_lo + 1 >= n:
            origin.append(0)
            wshape.append(n)
        else:
            origin.append(a_lo % n)
            wshape.append(a_hi - a_lo + 1)
    return origin, wshape


def _accumulate(total, comp, res, origin, wshape, n):
    idx = np.ix_(*[(o + np.arange(w)) % n for o, w in zip(origin, wshape)])
    y = res - comp[idx]
    t = total[idx] + y
    comp[idx] = (t - total[idx]) - y
    total[idx] = t


def _gather_average(values: list[np.ndarray], box: DomainBox, shifts_phys: np.ndarray, weights: np.ndarray, method: str, backend: str | None) -> np.ndarray:
    n = box.N
    real = all(not np.iscomplexobj(v) for v in values)
    stack = np.stack(values)
    cells = shifts_phys / box.h
    arcs = [_arcs(v) for v in values]
    keep, lo, hi, full = _node_windows(arcs, cells, n, _MARGIN[method])
    total = np.zeros(box.shape, dtype=np.float64 if real else np.complex128)
    comp = np.zeros_like(total)
    order = _ORDER[method]
    kept = np.flatnonzero(keep)
    for s in range(0, kept.size, CHUNK):
        sel = kept[s : s + CHUNK]
        origin, wshape = _chunk_window(lo[sel], hi[sel], full[sel], n)
        res = _kernels.gather_product(stack, cells[sel], weights[sel], origin, wshape, order, backend)
        _accumulate(total, comp, res, origin, wshape, n)
    return total


def _spectral_average(values: list[np.ndarray], box: DomainBox, shifts_phys: np.ndarray, weights: np.ndarray) -> np.ndarray:
    real = all(not np.iscomplexobj(v) for v in values)
    workers = _runtime.threads()
    d = box.d
    axes = tuple(range(1, d + 1))
    # real inputs use the half spectrum; phase factors are separable per axis
    if real:
        hats = [sfft.rfftn(v, workers=workers) for v in values]
        freqs = [np.fft.fftfreq(box.N, d=box.h)] * (d - 1) + [np.fft.rfftfreq(box.N, d=box.h)]
    else:
        hats = [sfft.fftn(v, workers=workers) for v in values]
        freqs = [np.fft.fftfreq(box.N, d=box.h)] * d
    batch = max(1, (1 << 22) // box.cells)
    total = np.zeros(box.shape, dtype=np.float64 if real else np.complex128)
    comp = np.zeros_like(total)
    M = shifts_phys.shape[0]
    for s in range(0, M, batch):
        sh = shifts_phys[s : s + batch]
        prod = None
        for j, fh in enumerate(hats):
            spec = fh[None]
            for a in range(d):
                shape = [sh.shape[0]] + [1] * d
                shape[a + 1] = freqs[a].size
                spec = spec * np.exp(-2j * np.pi * np.multiply.outer(sh[:, j, a], freqs[a])).reshape(shape)
            if real:
                vals = sfft.irfftn(spec, s=box.shape, axes=axes, workers=workers)
            else:
                vals = sfft.ifftn(spec, axes=axes, workers=workers)
            prod = vals if prod is None else prod * vals
        for i in range(prod.shape[0]):
            y = weights[s + i] * prod[i] - comp
            t = total + y
            comp = (t - total) - y
            total = t
    return total


def average(F: Sequence[GridFunction], spec: AvgSpec, t: float, backend: str | None = None) -> GridFunction:
    """sum_i w_i prod_j f_j(x - t v_ij) for a dilate t > 0."""
    box = _common_box(F, spec)
    check_dilation(spec, box, t)
    values = [f.values.real if f.is_real() else f.values for f in F]
    shifts = t * spec.vectors
    w = spec.quadrature.weights
    if spec.interpolation == "spectral":
        out = _spectral_average(values, box, shifts, w)
    else:
        out = _gather_average(values, box, shifts, w, spec.interpolation, backend)
    return GridFunction(box, out)


def avg_theta(F: Sequence[GridFunction], spec: AvgSpec, level: int, backend: str | None = None) -> GridFunction:
    if spec.variant != "theta":
        raise ValueError("avg_theta needs a theta-variant spec")
    return average(F, spec, 2.0**level, backend)


def avg_sigma(F: Sequence[GridFunction], spec: AvgSpec, level: int, backend: str | None = None) -> GridFunction:
    if spec.variant != "sigma":
        raise ValueError("avg_sigma needs a sigma-variant spec")
    return average(F, spec, 2.0**level, backend)


def lacunary_max(F: Sequence[GridFunction], spec: AvgSpec, levels: tuple[int, int] | None = None, backend: str | None = None) -> GridFunction:
    """Pointwise max over l in the level range of |average at dilate 2^l|."""
    lo, hi = levels or spec.levels
    if lo > hi:
        raise ValueError("empty level range")
    out = None
    for lvl in range(lo, hi + 1):
        a = np.abs(average(F, spec, 2.0**lvl, backend).values)
        out = a if out is None else np.maximum(out, a)
    return GridFunction(F[0].box, out)


def _project(f: GridFunction, level: int, slot, mollifier: MollifierPair | None) -> GridFunction:
    if slot is None:
        return f
    if slot == "low":
        return project_below(f, level, mollifier)
    if isinstance(slot, (int, np.integer)) and not isinstance(slot, bool):
        return project_band(f, level + int(slot), mollifier)
    raise ValueError(f"slot pattern entries are None, 'low' or an integer offset; got {slot!r}")


def band_localized_avg(
    F: Sequence[GridFunction],
    spec: AvgSpec,
    level: int,
    pattern,
    mollifier: MollifierPair | None = None,
    backend: str | None = None,
) -> GridFunction:
    """Average at dilate 2^{-l} with slot j replaced by its projection.

    ``pattern`` holds one entry per slot: None (unchanged), 'low' (P_{<l})
    or an integer n (P_{l+n}).  An integer alpha is shorthand for
    ('low',)*alpha + (None,)*(m-alpha).
    """
    if isinstance(pattern, (int, np.integer)):
        pattern = ("low",) * int(pattern) + (None,) * (spec.m - int(pattern))
    pattern = tuple(pattern)
    if len(pattern) != spec.m:
        raise ValueError(f"pattern has {len(pattern)} entries for {spec.m} slots")
    G = [_project(f, level, p, mollifier) for f, p in zip(F, pattern)]
    return average(G, spec, 2.0 ** (-level), backend)


def _band_levels(spec: AvgSpec, levels):
    lo, hi = levels or spec.levels
    if lo > hi:
        raise ValueError("empty level range")
    return range(lo, hi + 1)


def band_max(F, spec: AvgSpec, n: Sequence[int], levels=None, mollifier=None, backend=None) -> GridFunction:
    """max over l of |A_l^n(F)|."""
    out = None
    for lvl in _band_levels(spec, levels):
        a = np.abs(band_localized_avg(F, spec, lvl, tuple(n), mollifier, backend).values)
        out = a if out is None else np.maximum(out, a)
    return GridFunction(F[0].box, out)


def band_sum(F, spec: AvgSpec, n: Sequence[int], levels=None, mollifier=None, backend=None) -> GridFunction:
    """sum over l of |A_l^n(F)|."""
    out = None
    for lvl in _band_levels(spec, levels):
        a = np.abs(band_localized_avg(F, spec, lvl, tuple(n), mollifier, backend).values)
        out = a if out is None else out + a
    return GridFunction(F[0].box, out)


def band_max_and_sum(F, spec: AvgSpec, n: Sequence[int], levels=None, mollifier=None, backend=None) -> tuple[GridFunction, GridFunction]:
    """Both folds from a single pass over the levels."""
    mx = sm = None
    for lvl in _band_levels(spec, levels):
        a = np.abs(band_localized_avg(F, spec, lvl, tuple(n), mollifier, backend).values)
        mx = a if mx is None else np.maximum(mx, a)
        sm = a if sm is None else sm + a
    box = F[0].box
    return GridFunction(box, mx), GridFunction(box, sm)


@dataclass(frozen=True)
class DominationReport:
    levels: tuple[int, ...]
    ratios: tuple[float, ...]
    max_ratio: float
    slope: float

    def as_dict(self) -> dict:
        return {
            "levels": list(self.levels),
            "ratios": list(self.ratios),
            "constant_needed": self.max_ratio,
            "log2_ratio_slope_vs_level": self.slope,
        }


def domination_check(
    f1: GridFunction,
    f2: GridFunction,
    spec: AvgSpec,
    levels: tuple[int, int] | None = None,
    radii: Sequence[float] | None = None,
    mollifier: MollifierPair | None = None,
    backend: str | None = None,
) -> DominationReport:
    """Compare |A_l^1(f1, f2)| with M_HL(f1) * M_S(f2) cell by cell.

    M_S(f2) is the lacunary maximum over the same levels of the single-slot
    average along slot 2; M_HL uses every discrete cube size up to L/2 unless
    ``radii`` is given.  The slope is the least-squares slope of log2 of the
    per-level ratio against l.
    """
    if spec.m != 2:
        raise ValueError("domination check is for bilinear operators")
    for f in (f1, f2):
        if not f.is_real() or np.any(f.values.real < 0):
            raise ValueError("domination check needs nonnegative real inputs")
    lvls = list(_band_levels(spec, levels))
    box = f1.box
    hl = hl_maximal(f1, radii or all_cell_radii(box)).values.real
    single = spec.single_slot(1)
    ms = None
    for lvl in lvls:
        a = np.abs(average([f2], single, 2.0 ** (-lvl), backend).values)
        ms = a if ms is None else np.maximum(ms, a)
    rhs = hl * ms
    eps = np.finfo(float).eps
    ratios = []
    for lvl in lvls:
        lhs = np.abs(band_localized_avg([f1, f2], spec, lvl, 1, mollifier, backend).values)
        ratios.append(float(np.max(lhs / (rhs + eps))))
    if len(lvls) >= 2:
        y = np.log2(np.maximum(ratios, np.finfo(float).tiny))
        slope = float(np.polyfit(np.asarray(lvls, float), y, 1)[0])
    else:
        slope = 0.0
    return DominationReport(tuple(lvls), tuple(ratios), max(ratios), slope)
