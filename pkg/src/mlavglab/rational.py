"""Exact linear algebra over the rationals.

Matrices are lists of rows of :class:`fractions.Fraction`.  Subspaces of
Q^n are stored by the nonzero rows of the reduced row echelon form of any
spanning set, which is canonical: two subspaces are equal exactly when
their stored rows are equal.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np

Matrix = list[list[Fraction]]

RATIONALIZE_TOL = 1e-12
_MAX_DENOMINATOR = 10**6


def to_fraction(x, tol: float = RATIONALIZE_TOL) -> Fraction:
    """Convert a number to a Fraction.

    Floats are snapped to a nearby fraction with a small denominator when
    one lies within ``tol``; otherwise the exact binary value is kept.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, Rational):
        return Fraction(x)
    if isinstance(x, str):
        return parse_fraction(x)
    xf = float(x)
    if not np.isfinite(xf):
        raise ValueError(f"cannot rationalize non-finite value {x!r}")
    exact = Fraction(xf)
    snapped = exact.limit_denominator(_MAX_DENOMINATOR)
    if abs(float(snapped) - xf) <= tol:
        return snapped
    return exact


def parse_fraction(text: str) -> Fraction:
    """Parse ``"num/den"``, an integer or a decimal literal exactly."""
    s = text.strip()
    if not s:
        raise ValueError("empty rational literal")
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"malformed rational literal {text!r}") from exc


def fraction_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def as_matrix(a) -> Matrix:
    """Convert a nested sequence or array to an exact rational matrix."""
    arr = a.tolist() if isinstance(a, np.ndarray) else a
    rows = [[to_fraction(v) for v in row] for row in arr]
    if rows and any(len(r) != len(rows[0]) for r in rows):
        raise ValueError("ragged matrix")
    return rows


def zeros(p: int, n: int) -> Matrix:
    return [[Fraction(0)] * n for _ in range(p)]


def identity(n: int) -> Matrix:
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def shape(a: Matrix, ncols: int | None = None) -> tuple[int, int]:
    if not a:
        return 0, (ncols or 0)
    return len(a), len(a[0])


def transpose(a: Matrix, ncols: int | None = None) -> Matrix:
    p, n = shape(a, ncols)
    return [[a[i][j] for i in range(p)] for j in range(n)]


def matmul(a: Matrix, b: Matrix) -> Matrix:
    if not a:
        return []
    inner = len(a[0])
    if len(b) != inner:
        raise ValueError("shape mismatch in matmul")
    ncols = len(b[0]) if b else 0
    out = []
    for row in a:
        out.append([sum((row[k] * b[k][j] for k in range(inner) if row[k]), Fraction(0)) for j in range(ncols)])
    return out


def matvec(a: Matrix, v: Sequence[Fraction]) -> list[Fraction]:
    return [sum((r[k] * v[k] for k in range(len(v)) if r[k]), Fraction(0)) for r in a]


def hstack(*blocks: Matrix) -> Matrix:
    rows = len(blocks[0])
    if any(len(b) != rows for b in blocks):
        raise ValueError("row mismatch in hstack")
    return [sum((list(b[i]) for b in blocks), []) for i in range(rows)]


def rref(a: Matrix, ncols: int | None = None) -> tuple[Matrix, list[int]]:
    """Reduced row echelon form and pivot columns."""
    m = [list(r) for r in a]
    p, n = shape(m, ncols)
    pivots: list[int] = []
    row = 0
    for col in range(n):
        if row >= p:
            break
        piv = next((i for i in range(row, p) if m[i][col] != 0), None)
        if piv is None:
            continue
        m[row], m[piv] = m[piv], m[row]
        inv = 1 / m[row][col]
        m[row] = [v * inv for v in m[row]]
        for i in range(p):
            if i != row and m[i][col] != 0:
                f = m[i][col]
                m[i] = [vi - f * vr for vi, vr in zip(m[i], m[row])]
        pivots.append(col)
        row += 1
    return m, pivots


def rank(a: Matrix) -> int:
    return len(rref(a)[1])


def nullspace(a: Matrix, ncols: int | None = None) -> list[list[Fraction]]:
    """Basis vectors of {x : a x = 0} as a list of length-n vectors."""
    p, n = shape(a, ncols)
    if p == 0:
        return [[Fraction(int(i == j)) for i in range(n)] for j in range(n)]
    r, pivots = rref(a, n)
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fcol in free:
        v = [Fraction(0)] * n
        v[fcol] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -r[i][fcol]
        basis.append(v)
    return basis


def solve(a: Matrix, b: Matrix) -> Matrix:
    """Solve ``a x = b`` exactly for a full-column-rank ``a`` (consistent system required)."""
    p, n = shape(a)
    k = len(b[0]) if b else 0
    aug, pivots = rref(hstack(a, b), n + k)
    if pivots != list(range(n)):
        if any(c >= n for c in pivots):
            raise ValueError("inconsistent linear system")
        raise ValueError("coefficient matrix is not of full column rank")
    return [row[n:] for row in aug[:n]]


@dataclass(frozen=True)
class Subspace:
    """A subspace of Q^n in canonical form."""

    ambient: int
    rows: tuple[tuple[Fraction, ...], ...]

    @classmethod
    def span(cls, vectors: Iterable[Sequence], ambient: int) -> "Subspace":
        vecs = [[to_fraction(v) for v in vec] for vec in vectors]
        if any(len(v) != ambient for v in vecs):
            raise ValueError("vector length does not match ambient dimension")
        if not vecs:
            return cls(ambient, ())
        r, piv = rref(vecs, ambient)
        return cls(ambient, tuple(tuple(r[i]) for i in range(len(piv))))

    @classmethod
    def zero(cls, ambient: int) -> "Subspace":
        return cls(ambient, ())

    @classmethod
    def full(cls, ambient: int) -> "Subspace":
        return cls.span(identity(ambient), ambient)

    @classmethod
    def from_columns(cls, basis: Matrix, ambient: int) -> "Subspace":
        return cls.span(transpose(basis, None) if basis else [], ambient)

    @property
    def dim(self) -> int:
        return len(self.rows)

    def basis(self) -> list[list[Fraction]]:
        return [list(r) for r in self.rows]

    def basis_columns(self) -> Matrix:
        """Basis vectors as the columns of an n x dim matrix."""
        if not self.rows:
            return [[] for _ in range(self.ambient)]
        return transpose([list(r) for r in self.rows])

    def perp(self) -> "Subspace":
        return Subspace.span(nullspace(self.basis(), self.ambient), self.ambient)

    def __add__(self, other: "Subspace") -> "Subspace":
        self._check(other)
        return Subspace.span(self.basis() + other.basis(), self.ambient)

    def __and__(self, other: "Subspace") -> "Subspace":
        self._check(other)
        return (self.perp() + other.perp()).perp()

    def contains(self, other: "Subspace") -> bool:
        return (self + other).dim == self.dim

    def image(self, a: Matrix) -> "Subspace":
        p = len(a)
        return Subspace.span([matvec(a, v) for v in self.rows], p)

    def _check(self, other: "Subspace") -> None:
        if self.ambient != other.ambient:
            raise ValueError("subspaces live in different ambient spaces")

    def to_json(self) -> list[list[str]]:
        return [[fraction_str(v) for v in r] for r in self.rows]


def kernel(a: Matrix, ncols: int) -> Subspace:
    return Subspace.span(nullspace(a, ncols), ncols)


def column_space(a: Matrix) -> Subspace:
    return Subspace.span(transpose(a), len(a))
