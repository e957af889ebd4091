"""Sampled functions on a periodic box.

A :class:`DomainBox` is the torus [0, L)^d cut into N^d cells of side
h = L/N.  Samples sit at cell midpoints, so cell sums are midpoint-rule
integrals.  :class:`GridFunction` pairs a box with an immutable complex
array of shape (N,)*d in row-major axis order.
"""

from __future__ import annotations

import csv
import io
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.ndimage import uniform_filter1d

_HEADER = struct.Struct("<IId")
CSV_MAX_CELLS = 1 << 16


@dataclass(frozen=True)
class DomainBox:
    d: int
    L: float
    N: int

    def __post_init__(self):
        if not isinstance(self.d, (int, np.integer)) or self.d < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.d!r}")
        if not (isinstance(self.L, (int, float, np.floating)) and math.isfinite(self.L) and self.L > 0):
            raise ValueError(f"side length must be positive and finite, got {self.L!r}")
        if not isinstance(self.N, (int, np.integer)) or self.N < 1 or (self.N & (self.N - 1)):
            raise ValueError(f"samples per axis must be a power of two, got {self.N!r}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "L", float(self.L))

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.d

    @property
    def cells(self) -> int:
        return self.N**self.d

    @property
    def volume(self) -> float:
        return self.L**self.d

    @property
    def cell_volume(self) -> float:
        return self.h**self.d

    def axis(self) -> np.ndarray:
        """Midpoint coordinates along one axis."""
        return (np.arange(self.N) + 0.5) * self.h

    def mesh(self) -> tuple[np.ndarray, ...]:
        """Broadcastable midpoint coordinates, one array per axis."""
        ax = self.axis()
        out = []
        for j in range(self.d):
            s = [1] * self.d
            s[j] = self.N
            out.append(ax.reshape(s))
        return tuple(out)

    def center(self) -> np.ndarray:
        return np.full(self.d, self.L / 2)

    def frequencies(self) -> tuple[np.ndarray, ...]:
        """Broadcastable lattice frequencies k/L for the unnormalized FFT."""
        f = np.fft.fftfreq(self.N, d=self.h)
        out = []
        for j in range(self.d):
            s = [1] * self.d
            s[j] = self.N
            out.append(f.reshape(s))
        return tuple(out)

    def frequency_norm(self) -> np.ndarray:
        """|xi| on the full frequency lattice."""
        return np.sqrt(sum(k * k for k in self.frequencies()))

    def max_frequency(self) -> float:
        """Largest |xi| on the lattice (the Nyquist corner)."""
        return math.sqrt(self.d) * self.N / (2 * self.L)


class GridFunction:
    """Immutable complex samples on a :class:`DomainBox`."""

    __slots__ = ("box", "_values")

    def __init__(self, box: DomainBox, values):
        arr = np.asarray(values)
        if arr.ndim == 1 and arr.size == box.cells and box.d > 1:
            arr = arr.reshape(box.shape)
        if arr.shape != box.shape:
            raise ValueError(f"values of shape {arr.shape} do not fit a box of shape {box.shape}")
        arr = np.array(arr, dtype=np.complex128, copy=True)
        if not np.all(np.isfinite(arr)):
            raise ValueError("grid function has non-finite samples")
        arr.flags.writeable = False
        self.box = box
        self._values = arr

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def flat_values(self) -> np.ndarray:
        return self._values.reshape(-1)

    @classmethod
    def from_callable(cls, box: DomainBox, fn: Callable[..., np.ndarray]) -> "GridFunction":
        """Sample ``fn(x_1, ..., x_d)`` at cell midpoints."""
        vals = np.broadcast_to(fn(*box.mesh()), box.shape)
        return cls(box, vals)

    @classmethod
    def constant(cls, box: DomainBox, c: complex = 1.0) -> "GridFunction":
        return cls(box, np.full(box.shape, c, dtype=np.complex128))

    @classmethod
    def zeros(cls, box: DomainBox) -> "GridFunction":
        return cls.constant(box, 0.0)

    def is_real(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self._values.imag) <= tol))

    def real_part(self) -> np.ndarray:
        return self._values.real

    def abs(self) -> "GridFunction":
        return GridFunction(self.box, np.abs(self._values))

    def shifted(self, cells: Sequence[int]) -> "GridFunction":
        """Translate by an integer cell vector: g(x) = f(x - v h)."""
        return GridFunction(self.box, np.roll(self._values, tuple(int(c) for c in cells), axis=tuple(range(self.box.d))))

    def _coerce(self, other) -> np.ndarray:
        if isinstance(other, GridFunction):
            if other.box != self.box:
                raise ValueError("grid functions live on different boxes")
            return other._values
        return other

    def __add__(self, other):
        return GridFunction(self.box, self._values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.box, self._values - self._coerce(other))

    def __mul__(self, other):
        return GridFunction(self.box, self._values * self._coerce(other))

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.box, -self._values)

    def __repr__(self):
        return f"GridFunction(box={self.box!r})"

    def to_bytes(self) -> bytes:
        header = _HEADER.pack(self.box.d, self.box.N, self.box.L)
        body = np.ascontiguousarray(self._values.reshape(-1)).astype("<c16").tobytes()
        return header + body

    @classmethod
    def from_bytes(cls, data: bytes) -> "GridFunction":
        if len(data) < _HEADER.size:
            raise ValueError("truncated grid function header")
        d, n, length = _HEADER.unpack_from(data)
        box = DomainBox(d, length, n)
        body = data[_HEADER.size:]
        if len(body) != 16 * box.cells:
            raise ValueError(f"expected {16 * box.cells} payload bytes, found {len(body)}")
        vals = np.frombuffer(body, dtype="<c16").reshape(box.shape)
        return cls(box, vals)

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> "GridFunction":
        return cls.from_bytes(Path(path).read_bytes())

    def to_csv(self) -> str:
        if self.box.cells > CSV_MAX_CELLS:
            raise ValueError(f"CSV export is limited to {CSV_MAX_CELLS} cells")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        d = self.box.d
        w.writerow([f"d={d}", f"N={self.box.N}", f"L={self.box.L!r}"])
        w.writerow([f"i{j}" for j in range(d)] + ["re", "im"])
        for idx in np.ndindex(*self.box.shape):
            v = self._values[idx]
            w.writerow(list(idx) + [repr(float(v.real)), repr(float(v.imag))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "GridFunction":
        rows = list(csv.reader(io.StringIO(text)))
        if len(rows) < 2:
            raise ValueError("CSV grid function is missing its header rows")
        try:
            meta = dict(item.split("=", 1) for item in rows[0])
            box = DomainBox(int(meta["d"]), float(meta["L"]), int(meta["N"]))
        except (KeyError, ValueError) as exc:
            raise ValueError(f"bad CSV metadata row {rows[0]!r}") from exc
        vals = np.zeros(box.shape, dtype=np.complex128)
        seen = np.zeros(box.shape, dtype=bool)
        for lineno, row in enumerate(rows[2:], start=3):
            if len(row) != box.d + 2:
                raise ValueError(f"line {lineno}: expected {box.d + 2} fields")
            idx = tuple(int(v) for v in row[: box.d])
            vals[idx] = complex(float(row[-2]), float(row[-1]))
            seen[idx] = True
        if not seen.all():
            raise ValueError("CSV grid function does not cover every cell")
        return cls(box, vals)


def _magnitudes(f: GridFunction) -> np.ndarray:
    return np.abs(f.values)


def lp_norm(f: GridFunction, p: float) -> float:
    """Midpoint-rule L^p norm; ``p = inf`` gives the max."""
    a = _magnitudes(f)
    if p == math.inf:
        return float(a.max())
    if not p > 0:
        raise ValueError(f"exponent must be positive, got {p!r}")
    top = float(a.max())
    if top == 0.0:
        return 0.0
    s = np.sum((a / top) ** p) * f.box.cell_volume
    return top * float(s) ** (1.0 / p)


def weak_lp_quasinorm(f: GridFunction, p: float) -> float:
    """sup_lambda lambda * meas{|f| > lambda}^(1/p), exact over the samples.

    With magnitudes sorted decreasingly as a_1 >= a_2 >= ..., the level set
    just below a_k holds at least k cells, so the supremum is
    max_k a_k (k h^d)^(1/p).
    """
    if not p > 0:
        raise ValueError(f"exponent must be positive, got {p!r}")
    a = np.sort(_magnitudes(f).reshape(-1))[::-1]
    k = np.arange(1, a.size + 1)
    return float(np.max(a * (k * f.box.cell_volume) ** (1.0 / p)))


def level_set_measure(f: GridFunction, lam: float) -> float:
    return float(np.count_nonzero(_magnitudes(f) > lam)) * f.box.cell_volume


def cube_halfwidth(box: DomainBox, r: float) -> int:
    """Cells on each side of the center inside the open cube of radius r."""
    return max(0, math.ceil(r / box.h - 1e-12) - 1)


def cube_average(f: GridFunction, r: float) -> np.ndarray:
    """Average of |f| over the periodic open cube of radius r around each cell."""
    box = f.box
    if not 0 < r <= box.L / 2:
        raise ValueError(f"radius {r!r} must lie in (0, L/2] = (0, {box.L / 2}]")
    w = cube_halfwidth(box, r)
    a = _magnitudes(f)
    for ax in range(box.d):
        a = uniform_filter1d(a, size=2 * w + 1, axis=ax, mode="wrap")
    return a


def hl_maximal(f: GridFunction, radii: Sequence[float]) -> GridFunction:
    """Hardy-Littlewood maximal function over the given cube radii."""
    radii = list(radii)
    if not radii:
        raise ValueError("at least one radius is required")
    out = None
    for r in radii:
        avg = cube_average(f, r)
        out = avg if out is None else np.maximum(out, avg)
    return GridFunction(f.box, out)


def all_cell_radii(box: DomainBox) -> list[float]:
    """Every distinct discrete cube size from one cell up to L/2."""
    return [box.h * (w + 1) for w in range(box.N // 2)]
