import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mlavglab.freq import (
    band_symbol,
    below_symbol,
    besov_norm,
    build_mollifiers,
    project_band,
    project_below,
    sobolev_norm,
    top_band,
)
from mlavglab.grid import DomainBox, GridFunction, lp_norm

BOX = DomainBox(2, 1.0, 128)
SMALL = DomainBox(2, 1.0, 32)


def mode(box, k, complex_=False):
    ph = sum(kk * X for kk, X in zip(k, box.mesh())) * 2 * np.pi / box.L
    return GridFunction(box, np.exp(1j * ph) if complex_ else np.cos(ph))


def test_profile_examples():
    mol = build_mollifiers()
    assert mol.phi(0.5) == 1.0 and mol.phi(3.0) == 0.0 and mol.psi(1.0) == 1.0
    r = np.linspace(0, 3, 3001)
    assert np.all((mol.phi(r) >= 0) & (mol.phi(r) <= 1))
    assert np.all(mol.psi(r[(r <= 0.5) | (r >= 2)]) == 0)
    with pytest.raises(ValueError):
        build_mollifiers(1)


def test_profile_smoothness_order():
    # C^order: finite-difference derivatives up to order stay bounded at the seams
    mol = build_mollifiers(4)
    h = 1e-3
    r = np.arange(0.9, 2.1, h)
    v = mol.phi(r)
    for _ in range(3):
        v = np.diff(v) / h
    assert np.max(np.abs(v)) < 1e3


def test_below_examples():
    l = 3
    f = mode(BOX, (2 ** (l - 1), 0))
    assert np.allclose(project_below(f, l).values, f.values, atol=1e-12)
    g = mode(BOX, (2 ** (l + 2), 0))
    assert np.max(np.abs(project_below(g, l).values)) < 1e-12
    rng = np.random.default_rng(1)
    h = GridFunction(BOX, rng.standard_normal(BOX.shape))
    # oracle: frequency-space multiplication with the profile written out directly
    mol = build_mollifiers()
    kx = np.fft.fftfreq(128, d=BOX.h)
    K = np.sqrt(kx[:, None] ** 2 + kx[None, :] ** 2)
    want = np.fft.ifft2(np.fft.fft2(h.values) * mol.phi(K * 2.0 ** (1 - l))).real
    assert np.max(np.abs(project_below(h, l).values - want)) < 1e-10


def test_below_saturation_flag():
    f = mode(SMALL, (3, 1))
    g, flag = project_below(f, 20, with_flag=True)
    assert flag and g is f


def test_band_examples():
    l = 4
    f = mode(BOX, (0, 2**l))
    assert np.allclose(project_band(f, l).values, f.values, atol=1e-12)
    g = mode(BOX, (2 ** (l - 2), 0))
    assert np.max(np.abs(project_band(g, l).values)) < 1e-12
    with pytest.raises(ValueError):
        project_band(f, top_band(BOX) + 1)


def test_telescoping(rng):
    f = GridFunction(BOX, rng.standard_normal(BOX.shape))
    l, n = -1, 5
    total = project_below(f, l).values + sum(project_band(f, l + k).values for k in range(n + 1))
    assert np.max(np.abs(total - project_below(f, l + n + 1).values)) < 1e-10


def test_besov_examples(rng):
    l0 = 3
    f = GridFunction(BOX, mode(BOX, (2**l0, 0)).values + mode(BOX, (0, 2**l0)).values)
    for s, p, q in [(0.5, 2, 2), (1.0, 3, math.inf), (-0.5, 1, 1)]:
        assert besov_norm(f, s, p, q).value == pytest.approx(2 ** (l0 * s) * lp_norm(f, p), rel=1e-10)
    c = GridFunction.constant(DomainBox(2, 2.0, 32), 1.7)
    assert besov_norm(c, 0.7, 3, 2).value == pytest.approx(1.7 * 4 ** (1 / 3), rel=1e-12)
    assert besov_norm(c, 0, 2, 2).top_band == top_band(c.box)
    for _ in range(5):
        h = GridFunction(SMALL, rng.standard_normal(SMALL.shape))
        for p in (2, 4):
            assert besov_norm(h, 0, p, math.inf).value <= 2 * lp_norm(h, p)


def test_sobolev_examples(rng):
    f = GridFunction(SMALL, rng.standard_normal(SMALL.shape))
    assert sobolev_norm(f, 0) == pytest.approx(lp_norm(f, 2), rel=1e-12)
    box = DomainBox(2, 2.0, 32)
    k = (3, -2)
    g = mode(box, k, complex_=True)
    xi2 = (3 / 2.0) ** 2 + (2 / 2.0) ** 2
    assert sobolev_norm(g, 1.5) == pytest.approx((1 + xi2) ** 0.75 * box.volume**0.5, rel=1e-12)
    with pytest.raises(ValueError):
        sobolev_norm(g, 1, p=3)


def test_sobolev_spike_direct_sum():
    box = DomainBox(2, 1.0, 8)
    v = np.zeros((8, 8))
    v[2, 5] = 1.0
    f = GridFunction(box, v)
    # naive DFT coefficients c_k = N^-d sum f e^{-2 pi i k.n/N}
    total = 0.0
    for a in range(8):
        for b in range(8):
            ka = a if a < 4 else a - 8
            kb = b if b < 4 else b - 8
            c = sum(v[i, j] * np.exp(-2j * np.pi * (ka * i + kb * j) / 8) for i in range(8) for j in range(8)) / 64
            total += (1 + ka**2 + kb**2) ** -1 * abs(c) ** 2
    assert sobolev_norm(f, -1) == pytest.approx(math.sqrt(total * box.volume), rel=1e-12)


@given(st.integers(-3, 3), st.integers(0, 6))
def test_partition_identity(l, n):
    lhs = below_symbol(SMALL, l) + sum(band_symbol(SMALL, l + k) for k in range(n + 1))
    assert np.max(np.abs(lhs - below_symbol(SMALL, l + n + 1))) < 1e-14


@given(st.integers(0, 4), st.integers(0, 4), st.integers(0, 2**31))
def test_band_disjoint(a, b, seed):
    if abs(a - b) < 2:
        return
    f = GridFunction(SMALL, np.random.default_rng(seed).standard_normal(SMALL.shape))
    assert np.max(np.abs(project_band(project_band(f, a), b).values)) < 1e-12


@given(st.integers(0, 2**31), st.integers(-2, 4), st.integers(0, 31), st.integers(0, 31), st.floats(-3, 3))
def test_linear_and_translation_covariant(seed, l, sx, sy, c):
    rng = np.random.default_rng(seed)
    f = GridFunction(SMALL, rng.standard_normal(SMALL.shape))
    g = GridFunction(SMALL, rng.standard_normal(SMALL.shape))
    lhs = project_below(f * c + g, l).values
    rhs = c * project_below(f, l).values + project_below(g, l).values
    assert np.max(np.abs(lhs - rhs)) < 1e-10
    shifted = project_band(f.shifted((sx, sy)), 2).values
    assert np.max(np.abs(shifted - project_band(f, 2).shifted((sx, sy)).values)) < 1e-10
