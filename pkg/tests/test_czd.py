import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mlavglab.czd import (
    DyadicCube,
    bad_band_decay_check,
    cz_decompose,
    decay_exponent,
    exceptional_set,
    min_sum_bound,
)
from mlavglab.grid import DomainBox, GridFunction

BOX = DomainBox(2, 1.0, 32)


def _all_ok(inv):
    keys = ["reconstruction_exact", "cubes_disjoint", "cancellation_ok", "maximal_ok", "bad_measure_ok", "per_cube_ok"]
    return all(inv[k] for k in keys) and inv["good_bound_ok"]


def test_below_height_no_cubes(rng):
    f = GridFunction(BOX, rng.uniform(-1, 1, BOX.shape))
    dec = cz_decompose(f, 1.0, 2)
    assert dec.atoms == () and np.array_equal(dec.good.values, f.values)


def test_single_cube_trace():
    box = DomainBox(1, 1.0, 64)
    alpha = 1.0
    v = np.zeros(64)
    cube = DyadicCube(3, (5,))
    sl = cube.cell_slices(box)[0]
    v[sl] = np.repeat([3 * alpha, alpha], 4)  # mean 2 alpha, parent mean alpha (tie, not selected)
    dec = cz_decompose(GridFunction(box, v), alpha, 1)
    assert dec.cubes == [cube]
    atom = dec.atoms[0]
    assert atom.mean == Fraction(2) and sum(atom.exact) == 0
    inv = dec.invariants()
    assert _all_ok(inv) and inv["max_abs_atom_integral"] == 0.0


def test_mass_conservation(rng):
    f = GridFunction(BOX, rng.standard_normal(BOX.shape) ** 3)
    dec = cz_decompose(f, 0.8, 1.5)
    assert dec.invariants()["reconstruction_exact"]
    assert math.fsum(dec.good.values.real.ravel()) == pytest.approx(math.fsum(f.values.real.ravel()), abs=1e-12)


def test_errors():
    f = GridFunction.constant(BOX, 1.0)
    for a, q in [(0, 2), (-1, 2), (1, 0.5)]:
        with pytest.raises(ValueError):
            cz_decompose(f, a, q)
    with pytest.raises(ValueError):
        exceptional_set([], 0.5)


def test_json_export(rng):
    f = GridFunction(BOX, rng.standard_normal(BOX.shape) * 3)
    dec = cz_decompose(f, 1.0, 2)
    doc = json.loads(dec.dumps())
    assert len(doc["cubes"]) == len(dec.atoms) > 0
    c = doc["cubes"][0]
    num, den = c["mean"].split("/")
    assert Fraction(int(num), int(den)) == dec.atoms[0].mean
    assert len(doc["good_part_sha256"]) == 64 and doc["invariants"]["reconstruction_exact"]


def test_exceptional_examples():
    box = DomainBox(2, 16.0, 64)
    empty = cz_decompose(GridFunction.zeros(box), 1.0, 1)
    assert exceptional_set([empty], 5).measure == 0
    v = np.zeros(box.shape)
    v[32:36, 32:36] = 10.0
    dec = cz_decompose(GridFunction(box, v), 1.0, 1)
    vol = dec.bad_measure()
    E = exceptional_set([dec], 5)
    assert vol < E.measure <= 25 * vol and E.within_bound


def test_exceptional_raster_oracle(rng):
    box = DomainBox(2, 8.0, 32)
    f = GridFunction(box, rng.standard_normal(box.shape) ** 4)
    g = GridFunction(box, np.roll(f.values, 5, axis=0))
    decs = [cz_decompose(f, 1.5, 1), cz_decompose(g, 1.5, 1)]
    C = 3  # odd dilation keeps dilated cubes on the cell grid
    raster = np.zeros(box.shape, dtype=bool)
    for dc in decs:
        for q in dc.cubes:
            w = box.N >> q.generation
            sl = tuple(slice(max(0, c * w - w), min(box.N, c * w + 2 * w)) for c in q.corner)
            raster[sl] = True
    E = exceptional_set(decs, C)
    assert E.measure == pytest.approx(raster.sum() * box.cell_volume, abs=1e-12)


def atom(box, gen):
    v = np.zeros(box.shape)
    w = box.N >> gen
    v[:w // 2] = 1.0
    v[w // 2:w] = -1.0
    return GridFunction(box, v), DyadicCube(gen, (0,))


def test_band_decay_examples():
    box = DomainBox(1, 1.0, 4096)
    b, cube = atom(box, 11)
    for p in (0.75, 1.0, 2.0):
        rep = bad_band_decay_check(b, cube, list(range(2, 12)), p)
        assert rep.constant_below / rep.constant_above < 4 and rep.constant_above / rep.constant_below < 4
        assert rep.exponent == decay_exponent(1, p)
    far = bad_band_decay_check(b, cube, [4, 5, 6, 7], 1.0)
    assert all(x <= 2.0**-6 + 1e-12 for x in far.scale[:1])
    assert far.slope_below >= far.exponent - 0.2
    zero = bad_band_decay_check(GridFunction.zeros(box), cube, [3, 4], 1.0)
    assert all(v == 0 for v in zero.lhs)


def test_band_decay_rejects():
    box = DomainBox(1, 1.0, 64)
    with pytest.raises(ValueError):
        bad_band_decay_check(GridFunction.constant(box, 1.0), DyadicCube(0, (0,)), [1], 1.0)
    b, cube = atom(box, 3)
    with pytest.raises(ValueError):
        bad_band_decay_check(b, cube, [40], 1.0)


def test_min_sum_closed_form():
    r = min_sum_bound((1, 1), (0, 0), 1, (2, 2))
    want = 2 + 1 + 2**-1.5 / (1 - 2**-1.5)
    assert r.lhs == pytest.approx(want, rel=1e-14)
    assert math.isfinite(r.ratio) and r.window_sum + r.tail_sum == pytest.approx(r.lhs, rel=1e-15)


def test_min_sum_matches_long_direct_sum():
    for n, i, d, pp in [((2, 3), (-1, 4), 2, (2, 4)), ((5, 1), (3, -6), 3, (4, 4))]:
        e = [1 + Fraction(d, q) for q in pp]
        direct = math.fsum(min(min(1.0, 2.0 ** float((nj + l - ij) * ej), 2.0 ** (ij - l)) for nj, ij, ej in zip(n, i, e)) for l in range(-400, 400))
        assert min_sum_bound(n, i, d, pp).lhs == pytest.approx(direct, rel=1e-13)


def test_min_sum_linear_in_n():
    ns = np.arange(1, 21)
    lhs = [min_sum_bound((n, n), (0, 0), 2, (2, 2)).lhs for n in ns]
    assert np.polyfit(ns, lhs, 1)[0] <= 1.05


def test_min_sum_bounded_as_gap_grows():
    # stated property: ratio stays bounded as i_2 - i_1 grows with n fixed
    ratios = [min_sum_bound((2, 2), (0, D), 2, (2, 2)).ratio for D in (8, 16, 32, 64)]
    assert max(ratios) <= 2 * ratios[0]


@given(st.integers(0, 2**32 - 1), st.floats(0.05, 3.0), st.sampled_from([1.0, 1.5, 2.0, 3.0]), st.sampled_from([1, 2]))
def test_invariants_hold(seed, alpha, q, d):
    box = DomainBox(d, 4.0, 64 if d == 1 else 16)
    f = GridFunction(box, np.random.default_rng(seed).standard_normal(box.shape) ** 3)
    dec = cz_decompose(f, alpha, q)
    assert _all_ok(dec.invariants())
    assert dec.check_maximal()
