"""Dyadic Calderon-Zygmund decomposition and the bad-part bookkeeping.

Cubes of generation i have side L 2^{-i}; generation 0 is the whole box
and generation log2(N) is a single cell.  Means on selected cubes are kept
as exact fractions, so f = g + sum b_Q and the vanishing integral of each
b_Q hold exactly in rational arithmetic; the float views are rounded from
those exact values.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .freq import MollifierPair, band_in_range, project_band
from .grid import DomainBox, GridFunction, lp_norm


@dataclass(frozen=True, order=True)
class DyadicCube:
    generation: int
    corner: tuple[int, ...]

    def side(self, box: DomainBox) -> float:
        return box.L / 2**self.generation

    def cell_slices(self, box: DomainBox) -> tuple[slice, ...]:
        w = box.N >> self.generation
        return tuple(slice(c * w, (c + 1) * w) for c in self.corner)

    def measure(self, box: DomainBox) -> float:
        return self.side(box) ** box.d

    def bounds(self, box: DomainBox) -> list[tuple[float, float]]:
        s = self.side(box)
        return [(c * s, (c + 1) * s) for c in self.corner]


@dataclass(frozen=True, eq=False)
class BadAtom:
    cube: DyadicCube
    mean: Fraction
    values: np.ndarray  # float view of b_Q on the cube's cells
    exact: np.ndarray  # object array of Fractions

    def as_grid_function(self, box: DomainBox) -> GridFunction:
        full = np.zeros(box.shape)
        full[self.cube.cell_slices(box)] = self.values
        return GridFunction(box, full)


def _block_means(a: np.ndarray, generation: int, n: int) -> np.ndarray:
    d = a.ndim
    k = 2**generation
    w = n // k
    shp = []
    for _ in range(d):
        shp += [k, w]
    return a.reshape(shp).mean(axis=tuple(range(1, 2 * d, 2)))


@dataclass(frozen=True, eq=False)
class CZDecomposition:
    box: DomainBox
    alpha: float
    q: float
    good: GridFunction
    atoms: tuple[BadAtom, ...]
    root_selected: bool
    source: GridFunction

    @property
    def cubes(self) -> list[DyadicCube]:
        return [a.cube for a in self.atoms]

    def bad_measure(self) -> float:
        return math.fsum(c.measure(self.box) for c in self.cubes)

    def good_bound_constant(self) -> float:
        return 2.0 ** (self.box.d / self.q)

    def invariants(self) -> dict:
        """Every stated property, evaluated; booleans are exact checks."""
        box = self.box
        f = self.source.values.real
        exact_ok = True
        max_abs_integral = 0.0
        float_dev = 0.0
        per_cube_ok = True
        per_cube_ratio = 0.0
        C = 2.0**self.q * (1.0 + 2.0 ** (box.d * self.q))
        covered = np.zeros(box.shape, dtype=bool)
        disjoint = True
        for atom in self.atoms:
            sl = atom.cube.cell_slices(box)
            if covered[sl].any():
                disjoint = False
            covered[sl] = True
            fx = np.vectorize(Fraction, otypes=[object])(f[sl])
            if not np.all(atom.exact + atom.mean == fx):
                exact_ok = False
            integral = sum(atom.exact.reshape(-1), Fraction(0))
            if integral != 0:
                exact_ok = False
            max_abs_integral = max(max_abs_integral, abs(float(np.sum(atom.values))) * box.cell_volume)
            g = self.good.values.real[sl]
            float_dev = max(float_dev, float(np.max(np.abs(g + atom.values - f[sl]))))
            bq = float(np.sum(np.abs(atom.values) ** self.q)) * box.cell_volume
            lim = C * self.alpha**self.q * atom.cube.measure(box)
            if atom.cube.generation > 0:
                # the bound leans on the parent average; the root cube has none
                per_cube_ratio = max(per_cube_ratio, bq / lim)
                per_cube_ok &= bq <= lim
        off = ~covered
        off_exact = bool(np.all(self.good.values.real[off] == f[off]))
        gmax = float(np.max(np.abs(self.good.values))) if box.cells else 0.0
        total_q = lp_norm(self.source, self.q) ** self.q
        return {
            "reconstruction_exact": exact_ok and off_exact,
            "reconstruction_float_max_dev": float_dev,
            "cubes_disjoint": disjoint,
            "max_abs_atom_integral": max_abs_integral,
            "cancellation_ok": max_abs_integral <= 1e-12,
            "good_sup": gmax,
            "good_bound": self.good_bound_constant() * self.alpha,
            "good_bound_ok": self.root_selected or gmax <= self.good_bound_constant() * self.alpha * (1 + 1e-12),
            "bad_measure": self.bad_measure(),
            "bad_measure_bound": total_q / self.alpha**self.q,
            "bad_measure_ok": self.bad_measure() <= total_q / self.alpha**self.q * (1 + 1e-12),
            "per_cube_constant": C,
            "per_cube_max_ratio": per_cube_ratio,
            "per_cube_ok": per_cube_ok,
            "maximal_ok": self.check_maximal(),
            "root_selected": self.root_selected,
        }

    def check_maximal(self) -> bool:
        a = np.abs(self.source.values) ** self.q
        thr = self.alpha**self.q
        for atom in self.atoms:
            c = atom.cube
            if c.generation == 0:
                continue
            parent = DyadicCube(c.generation - 1, tuple(x // 2 for x in c.corner))
            if float(np.mean(a[parent.cell_slices(self.box)])) > thr:
                return False
        return True

    def to_json(self) -> dict:
        g = np.ascontiguousarray(self.good.values).astype("<c16").tobytes()
        return {
            "alpha": self.alpha,
            "q": self.q,
            "box": {"d": self.box.d, "N": self.box.N, "L": self.box.L},
            "root_selected": self.root_selected,
            "cubes": [{"generation": a.cube.generation, "corner": list(a.cube.corner), "mean": f"{a.mean.numerator}/{a.mean.denominator}"} for a in self.atoms],
            "good_part_sha256": hashlib.sha256(g).hexdigest(),
            "invariants": self.invariants(),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def cz_decompose(f: GridFunction, alpha: float, q: float) -> CZDecomposition:
    """Select maximal dyadic cubes whose mean of |f|^q exceeds alpha^q (strictly)."""
    if not alpha > 0:
        raise ValueError("height must be positive")
    if not q >= 1:
        raise ValueError("exponent must be at least 1")
    if not f.is_real():
        raise ValueError("decomposition is implemented for real-valued functions")
    box = f.box
    fr = f.values.real
    a = np.abs(fr) ** q
    thr = alpha**q
    top = int(round(math.log2(box.N)))
    covered = np.zeros((1,) * box.d, dtype=bool)
    selected: list[DyadicCube] = []
    for gen in range(top + 1):
        if gen > 0:
            covered = covered
            for ax in range(box.d):
                covered = np.repeat(covered, 2, axis=ax)
        means = _block_means(a, gen, box.N)
        hit = (means > thr) & ~covered
        for idx in zip(*np.nonzero(hit)):
            selected.append(DyadicCube(gen, tuple(int(i) for i in idx)))
        covered = covered | hit
    good = fr.copy()
    atoms = []
    to_frac = np.vectorize(Fraction, otypes=[object])
    for cube in selected:
        sl = cube.cell_slices(box)
        block = to_frac(fr[sl])
        mean = sum(block.reshape(-1), Fraction(0)) / block.size
        exact = block - mean
        values = np.vectorize(float, otypes=[float])(exact)
        good[sl] = float(mean)
        atoms.append(BadAtom(cube, mean, values, exact))
    root = any(c.generation == 0 for c in selected)
    return CZDecomposition(box, float(alpha), float(q), GridFunction(box, good), tuple(atoms), root, f)


@dataclass(frozen=True)
class ExceptionalSet:
    measure: float
    bound: float
    within_bound: bool


def exceptional_set(decomps: Sequence[CZDecomposition], dilation: float) -> ExceptionalSet:
    """Measure of the union of the dilated cubes clipped to the box, by coordinate compression."""
    if not dilation >= 1:
        raise ValueError("dilation must be at least 1")
    boxes = []
    total = Fraction(0)
    box = None
    for dec in decomps:
        box = dec.box
        for c in dec.cubes:
            s = c.side(box)
            total += Fraction(s) ** box.d
            lo_hi = []
            for lo, hi in c.bounds(box):
                mid, half = 0.5 * (lo + hi), 0.5 * dilation * s
                lo_hi.append((max(0.0, mid - half), min(box.L, mid + half)))
            boxes.append(lo_hi)
    bound = Fraction(dilation) ** (box.d if box else 1) * total
    if not boxes:
        return ExceptionalSet(0.0, 0.0, True)
    d = box.d
    coords = [np.unique([b[a][k] for b in boxes for k in (0, 1)]) for a in range(d)]
    diff = np.zeros(tuple(len(c) for c in coords), dtype=np.int64)
    for b in boxes:
        lo = [int(np.searchsorted(coords[a], b[a][0])) for a in range(d)]
        hi = [int(np.searchsorted(coords[a], b[a][1])) for a in range(d)]
        for corner in itertools.product((0, 1), repeat=d):
            idx = tuple(hi[a] if corner[a] else lo[a] for a in range(d))
            diff[idx] += (-1) ** sum(corner)
    cover = diff
    for a in range(d):
        cover = np.cumsum(cover, axis=a)
    widths = [np.diff(c) for c in coords]
    inside = cover[tuple(slice(0, -1) for _ in range(d))] > 0
    vol = widths[0]
    for w in widths[1:]:
        vol = np.multiply.outer(vol, w)
    meas = math.fsum(vol[inside].tolist())
    return ExceptionalSet(meas, float(bound), Fraction(meas) <= bound)


@dataclass(frozen=True)
class BandDecayReport:
    taus: tuple[int, ...]
    scale: tuple[float, ...]
    lhs: tuple[float, ...]
    rhs: tuple[float, ...]
    ratios: tuple[float, ...]
    exponent: float
    constant_below: float
    constant_above: float
    slope_below: float | None

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def decay_exponent(d: int, p: float) -> float:
    """1 + d/p' with 1/p' = 1 - 1/p."""
    return 1.0 + d * (1.0 - 1.0 / p)


def bad_band_decay_check(
    b: GridFunction,
    cube: DyadicCube,
    taus: Sequence[int],
    p: float,
    mollifier: MollifierPair | None = None,
    cancel_tol: float = 1e-12,
) -> BandDecayReport:
    """||P_tau b||_p against min(1, (2^tau s)^{1+d/p'}) ||b||_p over a sweep of bands.

    Constants needed are reported separately for 2^tau s < 1 and >= 1; the
    slope is the least-squares slope of log2(||P_tau b|| / ||b||) against
    tau over the bands below the cube scale.
    """
    if not p > 0:
        raise ValueError("exponent must be positive")
    box = b.box
    if abs(np.sum(b.values)) * box.cell_volume > cancel_tol * max(1.0, float(np.max(np.abs(b.values)))):
        raise ValueError("atom does not have vanishing integral")
    for t in taus:
        if not band_in_range(box, t):
            raise ValueError(f"band {t} is not representable on this grid")
    s = cube.side(box)
    e = decay_exponent(box.d, p)
    nb = lp_norm(b, p)
    lhs, rhs, ratios, scales = [], [], [], []
    for t in taus:
        x = 2.0**t * s
        val = lp_norm(project_band(b, t, mollifier), p)
        r = min(1.0, x**e) * nb
        lhs.append(val)
        rhs.append(r)
        scales.append(x)
        ratios.append(val / r if r > 0 else 0.0)
    below = [i for i, x in enumerate(scales) if x < 1]
    above = [i for i, x in enumerate(scales) if x >= 1]
    c_lo = max((ratios[i] for i in below), default=0.0)
    c_hi = max((ratios[i] for i in above), default=0.0)
    slope = None
    if len(below) >= 2 and nb > 0:
        xs = np.array([taus[i] for i in below], float)
        ys = np.log2(np.maximum([lhs[i] / nb for i in below], np.finfo(float).tiny))
        slope = float(np.polyfit(xs, ys, 1)[0])
    return BandDecayReport(tuple(int(t) for t in taus), tuple(scales), tuple(lhs), tuple(rhs), tuple(ratios), e, c_lo, c_hi, slope)


# min-sum lemma -------------------------------------------------------------

@dataclass(frozen=True)
class MinSum:
    lhs: float
    rhs: float
    ratio: float
    window: tuple[int, int]
    window_sum: float
    tail_sum: float


def _exponents(d: int, pprime: Sequence) -> list[Fraction]:
    out = []
    for pp in pprime:
        pp = Fraction(pp)
        if not pp > 1:
            raise ValueError("dual exponents must exceed 1")
        out.append(1 + Fraction(d) / pp)
    return out


def min_sum_bound(n: Sequence[int], i: Sequence[int], d: int, pprime: Sequence, combine: str = "min") -> MinSum:
    """sum over l in Z of min_j min(1, 2^{(n_j+l-i_j) e_j}, 2^{i_j-l}) with e_j = 1 + d/p'_j.

    Branches are chosen exactly on integer-scaled exponents.  The sum is
    exact on a window containing every breakpoint, plus closed-form
    geometric tails.  ``combine='product'`` replaces the min over j by the
    product over j (a diagnostic variant).  RHS is
    |n| prod_{j != j'} min(1, 2^{|n| - |i_j - i_j'|})^{1/(m(m-1))} with
    |n| = max_j n_j.
    """
    m = len(n)
    if len(i) != m or len(pprime) != m:
        raise ValueError("n, i and p' must have the same length")
    if any(nj < 1 for nj in n):
        raise ValueError("band offsets must be at least 1")
    e = _exponents(d, pprime)
    D = math.lcm(*(x.denominator for x in e))
    eD = [int(x * D) for x in e]
    nmax = max(n)
    # lines (slope, intercept) in units of 1/D for every branch of every slot
    lines = [(0, 0)]
    for j in range(m):
        lines.append((eD[j], eD[j] * (n[j] - i[j])))
        lines.append((-D, D * i[j]))
    bps = []
    for (a1, b1), (a2, b2) in itertools.combinations(lines, 2):
        if a1 != a2:
            bps.append(Fraction(b2 - b1, a1 - a2))
    lo = min(min(bps), min(i) - 2 * nmax) if bps else min(i) - 2 * nmax
    hi = max(max(bps), max(i) + 2 * nmax) if bps else max(i) + 2 * nmax
    lo, hi = math.floor(lo) - 1, math.ceil(hi) + 1
    ell = np.arange(lo, hi + 1, dtype=np.int64)

    def slot(j, x):
        return np.minimum(np.minimum(0, eD[j] * (x + n[j] - i[j])), D * (i[j] - x))

    if combine == "min":
        E = slot(0, ell)
        for j in range(1, m):
            E = np.minimum(E, slot(j, ell))
        lo_slope = max(eD)
        hi_const = D * min(i)
        lo_const = min(eD[j] * (n[j] - i[j]) for j in range(m) if eD[j] == lo_slope)
        hi_slope = -D
    elif combine == "product":
        E = sum(slot(j, ell) for j in range(m))
        lo_slope = sum(eD)
        lo_const = sum(eD[j] * (n[j] - i[j]) for j in range(m))
        hi_slope = -D * m
        hi_const = D * sum(i)
    else:
        raise ValueError("combine must be 'min' or 'product'")
    window = _sum_pow2(E, D)
    # tails: l < lo follows lo_slope*l + lo_const, l > hi follows hi_slope*l + hi_const
    r_lo = 2.0 ** (lo_slope / D)
    first_lo = 2.0 ** ((lo_slope * (lo - 1) + lo_const) / D)
    tail_lo = first_lo / (1.0 - 1.0 / r_lo)
    r_hi = 2.0 ** (hi_slope / D)
    first_hi = 2.0 ** ((hi_slope * (hi + 1) + hi_const) / D)
    tail_hi = first_hi / (1.0 - r_hi)
    lhs = window + tail_lo + tail_hi
    pair = [min(0, nmax - abs(i[a] - i[b])) for a in range(m) for b in range(m) if a != b]
    rhs = nmax * 2.0 ** (Fraction(sum(pair), m * (m - 1)))
    return MinSum(lhs, rhs, lhs / rhs, (int(lo), int(hi)), window, tail_lo + tail_hi)


def _sum_pow2(E: np.ndarray, D: int) -> float:
    """sum 2^{E/D} grouped by residue of E mod D; each group is a sum of exact powers of two."""
    q, r = np.divmod(E, D)
    total = []
    for res in range(D):
        sel = q[r == res]
        if sel.size:
            total.append(2.0 ** (res / D) * math.fsum(np.ldexp(1.0, sel.astype(int)).tolist()))
    return math.fsum(total)
