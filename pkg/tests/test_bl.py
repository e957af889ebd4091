import itertools
import json
from fractions import Fraction as Fr

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import linprog

from mlavglab import bl
from mlavglab.rational import Subspace
from mlavglab.surface import RotationFamily, cyclic_family, quarter_pair

I3 = ((1, 0, 0), (0, 1, 0), (0, 0, 1))


def structured(d, k, m, theta=None):
    return bl.build_structured_datum(theta or (quarter_pair() if (d, m) == (2, 2) else cyclic_family(d, m)), d, k)


def degenerate():
    return bl.build_structured_datum(RotationFamily(([[1, 0], [0, 1]], [[1, 0], [0, 1]]), strict=False), 2, 1)


def test_scaling_examples():
    assert bl.scaling_check(bl.BLDatum(3, (I3,), (1,))).passed
    r = bl.scaling_check(structured(2, 1, 2))
    assert r.passed and r.detail["rhs"] == "3/1"


def test_necessary_examples():
    assert bl.necessary_check(bl.BLDatum(3, (I3,), (1,))).passed
    twin = bl.BLDatum(3, (I3, I3), (Fr(1, 4), Fr(1, 4)))
    r = bl.necessary_check(twin)
    assert not r.passed and r.detail["exponent_sum"] == "1/2"
    assert bl.necessary_check(structured(2, 1, 2)).passed


def test_transversality_examples():
    D = structured(2, 1, 2)
    assert bl.slack(D, Subspace.zero(3)) == 0
    assert bl.slack(D, D.seeds["K_pi"]) == 0
    bad = degenerate()
    fam = bl.generate_subspace_lattice(bad, 2)
    r = bl.transversality_check(bad, fam)
    assert not r.passed and Fr(r.detail["min_slack"]) < 0
    # the violating subspace is the common kernel direction of L1 = L2
    assert fam.subspaces[fam.names.index(r.detail["worst_subspace"])] == bad.kernel(0)


def test_lattice_examples():
    D = structured(2, 1, 2)
    fam = bl.generate_subspace_lattice(D, 1, random_count=0)
    for name in ("K_pi", "K_pi^perp", "K_1", "K_2"):
        assert D.seeds[name] in fam.subspaces
    assert Subspace.zero(3) in fam.subspaces and Subspace.full(3) in fam.subspaces
    sat = bl.close_family(fam, 10)
    again = bl.close_family(sat, 1)
    assert set(again.subspaces) == set(sat.subspaces)
    with pytest.raises(ValueError):
        bl.generate_subspace_lattice(D, 0)
    small = bl.generate_subspace_lattice(structured(3, 2, 3), 3, random_count=0, cap=20)
    assert small.truncated and len(small) == 20


def test_critical_split_examples():
    D = structured(2, 1, 2)
    r, q = bl.critical_split(D, D.seeds["K_pi"])
    assert (r.ambient, q.ambient) == (1, 2)
    assert bl.scaling_check(r).passed and bl.scaling_check(q).passed
    for sub in (r, q):
        assert bl.transversality_check(sub, bl.generate_subspace_lattice(sub, 2)).passed
    r, q = bl.critical_split(D, Subspace.full(3))
    assert q.ambient == 0 and r.ambient == 3 and bl.scaling_check(r).passed
    with pytest.raises(ValueError):
        bl.critical_split(D, D.seeds["K_1"])


@pytest.mark.parametrize("dkm", [(2, 1, 2), (3, 1, 3), (3, 2, 3)])
def test_structured_presets_pass(dkm):
    rep = bl.verify_datum(structured(*dkm))
    assert rep["passed"] and rep["slacks"]["K_pi"] == "0/1"
    assert all(s[p]["scaling"] and s[p]["transversality"] for s in rep["splits"] for p in ("restricted", "quotient"))


def test_undersized_m_fails():
    d, k, m = 3, 2, 2
    t = bl.ExponentTuple((Fr(1, m),) * m, Fr(d - k, d), d=d, k=k)
    assert not bl.region_predicates(t, "strong_type").inside
    assert not bl.verify_datum(structured(d, k, m))["passed"]


def test_degenerate_preset_fails():
    rep = bl.verify_datum(degenerate())
    assert not rep["passed"] and rep["checks"][2]["worst_subspace"] == "ker L1"


def test_region_examples():
    for m, k in [(2, 1), (3, 2), (4, 1)]:
        for v in bl.vertices(m, k):
            t = bl.ExponentTuple.holder_type(v, d=k + 1, k=k)
            r = bl.region_predicates(t, "conv_vk")
            assert r.inside and r.margin == 0
    for d in (2, 3, 5):
        k = d - 1
        v = bl.vertices(2, k)[0]
        assert sum(v) == Fr(2 * d, d + 1)


@given(st.integers(2, 6), st.integers(1, 8))
def test_ell_family_reduces_to_m_ge_d(d, m):
    t = bl.ExponentTuple((Fr(1, 2),) * m, Fr(1, 2), d=d, k=d - 1)
    assert bl.region_predicates(t, "ell_family").inside == (m >= d)


def test_holder_defect_examples():
    for m in (2, 3, 5):
        assert bl.holder_defect(bl.ExponentTuple.from_p([m] * m, m)) == Fr(m - 1, m)
        for d in (2, 3, 4):
            assert bl.holder_defect(bl.ExponentTuple.from_p([m] * m, d)) == Fr(d - 1, d)
            assert bl.holder_defect(bl.ExponentTuple.from_p([Fr(m * (d + 1), d)] * m, d + 1)) == Fr(d - 1, d + 1)
    assert bl.holder_defect(bl.ExponentTuple.from_p([Fr(7, 3)], Fr(7, 3))) == 0
    assert bl.ExponentTuple.from_p(["inf", 2], 2).inv == (0, Fr(1, 2))


def lp_member(z, k):
    V = np.array([[float(x) for x in v] for v in bl.vertices(len(z), k)])
    res = linprog(np.zeros(len(V)), A_eq=np.vstack([V.T, np.ones(len(V))]), b_eq=np.r_[[float(x) for x in z], 1.0], bounds=[(0, None)] * len(V), method="highs")
    return res.status == 0


fracs = st.fractions(0, 1, max_denominator=12)


@given(st.integers(3, 5).flatmap(lambda m: st.lists(fracs, min_size=m, max_size=m)), st.integers(1, 3))
def test_conv_vk_agrees_with_lp(z, k):
    # push half the samples onto the hull plane sum z = 2a
    a = bl.vertex_value(k)
    s = sum(z)
    if s > 0 and len(z) % 2:
        z = [x * 2 * a / s for x in z]
    assert (bl.conv_vk_margin(z, k) >= 0) == lp_member(z, k)


@given(st.lists(fracs.filter(lambda x: x > 0), min_size=2, max_size=5), st.randoms())
def test_holder_defect_permutation_invariant(inv, r):
    t = bl.ExponentTuple(tuple(inv), Fr(1, 3))
    order = list(range(len(inv)))
    r.shuffle(order)
    assert bl.holder_defect(t.permuted(order)) == bl.holder_defect(t)


@given(st.permutations(range(3)))
def test_permuted_maps_same_verdict(order):
    for D in (structured(2, 1, 2), degenerate()):
        base = bl.verify_datum(D, random_count=4)["passed"]
        assert bl.verify_datum(D.permuted(order), random_count=4)["passed"] == base


@given(st.lists(st.fractions(-5, 5, max_denominator=7).filter(lambda x: x != 0), min_size=3, max_size=3))
def test_rescaling_invariance(factors):
    D = structured(2, 1, 2)
    R = D.rescaled(factors)
    fam = bl.generate_subspace_lattice(D, 2, random_count=4)
    for V in fam:
        assert bl.slack(R, V) == bl.slack(D, V)
    assert bl.verify_datum(R, random_count=4)["passed"]


def test_json_roundtrip():
    D = structured(3, 1, 3)
    E = bl.BLDatum.from_json(D.dumps())
    assert E.maps == D.maps and E.exponents == D.exponents and E.labels == D.labels
    assert set(E.seeds) == set(D.seeds) and all(E.seeds[k] == D.seeds[k] for k in D.seeds)


@pytest.mark.parametrize(
    "doc,position",
    [
        ('{"ambient": 2, "maps": [[["1", "0"]]], "exponents": [1]}', "$.exponents[0]"),
        ('{"ambient": 2, "maps": [[["1", "x"]]], "exponents": ["1"]}', "$.maps[0][0][1]"),
        ('{"ambient": 2, "maps": [[["1", "0"]], [["1/0", "1"]]], "exponents": ["1", "1"]}', "$.maps[1][0][0]"),
        ('{"ambient": 2, "maps": [[["1"]]], "exponents": ["1"]}', "$.maps[0][0]"),
        ('{"ambient": 2, "exponents": ["1"]}', "$.maps"),
        ('{"ambient": 2,\n "maps": [}', "line 2 column 11"),
        ('{"ambient": 2, "maps": [[["0", "0"]]], "exponents": ["1"]}', "$"),
    ],
)
def test_malformed_datum_positions(doc, position):
    with pytest.raises(bl.DatumFormatError) as exc:
        bl.BLDatum.from_json(doc)
    assert exc.value.position == position
