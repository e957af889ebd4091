"""Acceptance criteria 1-9 at their stated tolerances and runtime budgets."""

import itertools
import math
import time
from fractions import Fraction as Fr

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from mlavglab import bl
from mlavglab.czd import cz_decompose, min_sum_bound
from mlavglab.freq import project_band, project_below
from mlavglab.grid import DomainBox, GridFunction
from mlavglab.lab.config import build_config
from mlavglab.lab.experiments import COMMANDS, rotation_preset
from mlavglab.mlavg import AvgSpec, average, avg_theta
from mlavglab.surface import decay_fit, quarter_pair, sphere_quadrature


def verdict(num, title, checks, start, budget):
    elapsed = time.perf_counter() - start
    checks = dict(checks)
    checks[f"runtime {elapsed:.1f}s < {budget}s"] = elapsed < budget
    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    line = f"criterion {num} {'PASS' if ok else 'FAIL'}: {title} ({elapsed:.1f}s)" + (f" failed: {'; '.join(failed)}" if failed else "")
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def run_command(kind, doc=None, seed=0):
    return COMMANDS[kind](build_config(kind, doc, seed))


def test_criterion_1_exactness():
    start = time.perf_counter()
    rng = np.random.default_rng(1)
    box = DomainBox(2, 8.0, 128)
    one = [GridFunction.constant(box, 1.0)] * 2
    spec = AvgSpec("theta", sphere_quadrature(2, 256), quarter_pair(), (-2, 0))
    const_dev = max(np.max(np.abs(avg_theta(one, spec.with_(interpolation=m), 0).values - 1)) for m in ("cubic", "linear", "spectral"))
    f = GridFunction(box, rng.standard_normal(box.shape) ** 3)
    inv = cz_decompose(f, 1.0, 1.5).invariants()
    g = GridFunction(box, rng.standard_normal(box.shape))
    lo, n = -2, 6
    tel = project_below(g, lo).values + sum(project_band(g, lo + k).values for k in range(n + 1))
    tel_dev = np.max(np.abs(tel - project_below(g, lo + n + 1).values))
    verdict(1, "exactness suite at 128^2", {
        f"constant avg dev {const_dev:.1e} <= 1e-12": const_dev <= 1e-12,
        "CZ reconstruction cell-exact": inv["reconstruction_exact"],
        f"cancellation {inv['max_abs_atom_integral']:.1e} <= 1e-12": inv["max_abs_atom_integral"] <= 1e-12,
        f"telescoping dev {tel_dev:.1e} <= 1e-10": tel_dev <= 1e-10,
    }, start, 10)


def test_criterion_2_fourier_decay():
    start = time.perf_counter()
    s1 = decay_fit(sphere_quadrature(2, 1024), (4.0, 64.0)).rho
    s2 = decay_fit(sphere_quadrature(3, 262144), (4.0, 64.0)).rho
    verdict(2, "surface measure Fourier decay", {
        f"S^1 rho {s1:.3f} in [0.35, 0.65]": 0.35 <= s1 <= 0.65,
        f"S^2 rho {s2:.3f} in [0.85, 1.15]": 0.85 <= s2 <= 1.15,
    }, start, 20)


def test_criterion_3_oracle_equivalence():
    start = time.perf_counter()
    rng = np.random.default_rng(3)
    box = DomainBox(2, 1.0, 64)
    spec = AvgSpec("theta", sphere_quadrature(2, 64), quarter_pair(), interpolation="spectral", periodic=True)
    X, Y = box.mesh()
    fns, grids = [], []
    for _ in range(2):
        ks = rng.integers(-4, 5, (6, 2))
        amp, ph = rng.standard_normal(6), rng.uniform(0, 2 * np.pi, 6)

        def fn(x, y, ks=ks, amp=amp, ph=ph):
            return sum(a * np.cos(2 * np.pi * (k[0] * x + k[1] * y) + p) for k, a, p in zip(ks, amp, ph))

        fns.append(fn)
        grids.append(GridFunction(box, fn(X, Y) + np.zeros(box.shape)))
    worst = 0.0
    for t in (0.05, 0.2, 0.37):
        got = average(grids, spec, t).values.real
        want = np.zeros(box.shape)
        for w, v in zip(spec.quadrature.weights, spec.vectors):
            want += w * fns[0](X - t * v[0, 0], Y - t * v[0, 1]) * fns[1](X - t * v[1, 0], Y - t * v[1, 1])
        worst = max(worst, np.max(np.abs(got - want)) / np.max(np.abs(want)))
    verdict(3, "spectral path vs dense oracle, m=2 d=2 64^2", {f"relative error {worst:.1e} <= 1e-6": worst <= 1e-6}, start, 30)


def _max_ratio(irange):
    worst, arg = 0.0, None
    for d in (1, 2, 3):
        for pp in itertools.product((2, 4), repeat=2):
            for n in itertools.product(range(1, 7), repeat=2):
                for i in itertools.product(irange, repeat=2):
                    r = min_sum_bound(n, i, d, pp).ratio
                    if not math.isfinite(r):
                        return math.inf, (n, i, d, pp)
                    if r > worst:
                        worst, arg = r, (n, i, d, pp)
    return worst, arg


def test_criterion_4_min_sum():
    start = time.perf_counter()
    base, arg8 = _max_ratio(range(-8, 9))
    ext, arg12 = _max_ratio(range(-12, 13))
    growth = ext / base - 1
    verdict(4, "min-sum lemma ratio stable under i-extension", {
        "ratios finite": math.isfinite(base) and math.isfinite(ext),
        f"max ratio {base:.4g} at {arg8} -> {ext:.4g} at {arg12}, growth {growth:.2%} < 1%": growth < 0.01,
    }, start, 60)


def test_criterion_5_brascamp_lieb():
    start = time.perf_counter()
    checks = {}
    for d, k, m in [(2, 1, 2), (3, 1, 3), (3, 2, 3)]:
        datum = bl.build_structured_datum(rotation_preset("quarter" if d == 2 else "cyclic", d, m), d, k)
        rep = bl.verify_datum(datum)
        names = [c["check"] for c in rep["checks"]]
        checks[f"({d},{k},{m}) {'/'.join(names)} pass"] = all(c["passed"] for c in rep["checks"])
        checks[f"({d},{k},{m}) scaling sum equals d+k"] = sum(Fr(c) * dj for c, dj in zip(datum.exponents, datum.target_dims())) == d + k
        checks[f"({d},{k},{m}) K_pi slack zero"] = rep["slacks"].get("K_pi") == "0/1"
    for d, k, m in [(2, 1, 2), (3, 1, 3)]:
        rep = bl.verify_datum(bl.build_structured_datum(rotation_preset("degenerate", d, m), d, k))
        tr = rep["checks"][2]
        checks[f"degenerate ({d},{k},{m}) fails with witness {tr.get('worst_subspace')}"] = not rep["passed"] and tr.get("worst_subspace") is not None
    verdict(5, "structured Brascamp-Lieb data", checks, start, 10)


def test_criterion_6_region_predicates():
    start = time.perf_counter()
    checks = {}
    for m in (2, 3, 4):
        for d in (2, 3, 4, 5):
            checks[f"D(m={m},d={d})"] = bl.holder_defect(bl.ExponentTuple.from_p([m] * m, d)) == Fr(d - 1, d)
            checks[f"D(m(d+1)/d, m={m}, d+1={d + 1})"] = bl.holder_defect(bl.ExponentTuple.from_p([Fr(m * (d + 1), d)] * m, d + 1)) == Fr(d - 1, d + 1)
    for m, k in [(2, 1), (2, 2), (3, 1), (3, 2), (4, 3)]:
        margins = {bl.region_predicates(bl.ExponentTuple.holder_type(v, d=k + 1, k=k), "conv_vk").margin for v in bl.vertices(m, k)}
        checks[f"V_k vertex margins m={m} k={k}"] = margins == {0}
    for d, grid in [(2, None), (3, ["0", "3/8", "3/4", "1"]), (4, ["0", "2/5", "4/5", "1"])]:
        doc = {"d": d, "k": d - 1, "empirical": {"enabled": False}}
        if grid:
            doc["inv_grid"] = grid
        out = run_command("region-scan", doc)
        thr = Fr(out.report["lacunary_threshold_inv_p"])
        seen = out.report["lacunary_threshold_observed"]
        checks[f"d={d} sphere threshold 1/p={thr} = 2d/(d+1), first blocked row at {seen}"] = thr == Fr(2 * d, d + 1) and seen is not None and Fr(seen) == thr and out.passed
    verdict(6, "region predicates", checks, start, 60)


def test_criterion_7_band_decay():
    start = time.perf_counter()
    out = run_command("decay-sweep", seed=7)
    r = out.report
    m = 2
    g = r["m_growth_loglog_slope"]
    verdict(7, "band decay and growth on the circle", {
        f"S slope {r['s_slope']:.3f} <= -0.2": r["s_slope"] <= -0.2,
        f"M weak growth slope {g:.3f} <= m + 0.5": g <= m + 0.5,
        "driver assertions": out.passed,
    }, start, 120)


def test_criterion_8_lacunary_uniformity():
    start = time.perf_counter()
    out = run_command("bilinear-sphere", seed=8)
    t_in, t_out = out.report["tuples"]
    verdict(8, "lacunary bilinear circle uniformity", {
        f"inside slope {t_in['slope']:.3f} within 0.1 of 0": abs(t_in["slope"]) <= 0.1,
        f"outside slope {t_out['slope']:.3f} vs predicted {t_out['predicted_slope']} within 0.15": abs(t_out["slope"] - float(Fr(t_out["predicted_slope"]))) <= 0.15,
        "driver assertions": out.passed,
    }, start, 120)


def test_criterion_9_cz_bookkeeping():
    start = time.perf_counter()
    out = run_command("cz-verify", seed=9)
    a = {x["name"]: x["passed"] for x in out.assertions}
    consts = out.report["measured_constants"]
    verdict(9, "CZ weak-type bookkeeping", {
        "constants finite": all(math.isfinite(v) for v in consts.values()),
        **{k: v for k, v in a.items()},
    }, start, 60)
