"""Compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 3]

Prints one line per kernel with the best wall time of each backend, the
speedup and the max abs difference between the two outputs.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from mlavglab import _kernels
from mlavglab.grid import DomainBox, GridFunction
from mlavglab.mlavg import AvgSpec, average
from mlavglab.surface import quarter_pair, sphere_quadrature


def _best(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases():
    rng = np.random.default_rng(0)
    box = DomainBox(2, 8.0, 256)
    F = [GridFunction(box, rng.standard_normal(box.shape)) for _ in range(2)]
    for method in ("linear", "cubic"):
        spec = AvgSpec("theta", sphere_quadrature(2, 256), quarter_pair(), interpolation=method)
        yield f"average 2d N=256 M=256 {method}", lambda b, spec=spec: average(F, spec, 0.5, backend=b).values
    q = sphere_quadrature(3, 4096)
    xi = rng.uniform(-20, 20, (4096, 3))
    yield "surface_ft 3d M=4096 P=4096", lambda b: _kernels.ft_points(q.nodes, q.weights, xi, b)
    dirs = rng.standard_normal((32, 3))
    starts = np.geomspace(4, 64, 9)
    yield "ft_rays 3d M=4096 32x9x16", lambda b: _kernels.ft_rays(q.nodes, q.weights, dirs, starts, 1 / 15, 16, b)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    backends = _kernels.available()
    if "cython" not in backends:
        print("compiled kernels not built; only the numpy fallback is available")
    print(f"{'kernel':40s} " + " ".join(f"{b:>10s}" for b in backends) + "   speedup  max|diff|")
    for name, fn in cases():
        times, outs = [], []
        for b in backends:
            t, out = _best(lambda: fn(b), args.repeat)
            times.append(t)
            outs.append(np.asarray(out))
        speed = times[0] / times[-1]
        diff = float(np.max(np.abs(outs[0] - outs[-1])))
        print(f"{name:40s} " + " ".join(f"{t:10.4f}" for t in times) + f"   {speed:7.2f}x  {diff:.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
