"""Quadratures for normalized surface measures and rotation families.

Every quadrature carries a ``resolution`` radius: the largest |xi| at which
its Fourier transform is trusted.  ``decay_fit`` refuses windows beyond it.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc, norm

from . import _kernels
from . import rational as rl

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


def _normalize_weights(w: np.ndarray) -> np.ndarray:
    """Scale to unit mass and push the rounding residue into the largest weight."""
    w = np.asarray(w, dtype=np.float64)
    w = w / math.fsum(w)
    i = int(np.argmax(w))
    w[i] += 1.0 - math.fsum(w)
    return w


@dataclass(frozen=True, eq=False)
class SurfaceQuadrature:
    """Weighted nodes y_i in R^n discretizing a unit-mass surface measure."""

    nodes: np.ndarray
    weights: np.ndarray
    curvature_rank: int
    label: str
    resolution: float = math.inf
    blocks: tuple[int, ...] | None = None

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=np.float64, ndmin=2)
        w = np.array(self.weights, dtype=np.float64).reshape(-1)
        if nodes.shape[0] != w.size:
            raise ValueError("node and weight counts differ")
        if not np.all(np.isfinite(nodes)) or not np.all(np.isfinite(w)):
            raise ValueError("quadrature has non-finite entries")
        if np.any(w <= 0):
            raise ValueError("quadrature weights must be positive")
        if abs(math.fsum(w) - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {math.fsum(w)!r}, not 1")
        n = nodes.shape[1]
        if not 0 <= self.curvature_rank <= n - 1:
            raise ValueError(f"curvature rank {self.curvature_rank} outside [0, {n - 1}]")
        if self.blocks is not None and sum(self.blocks) != n:
            raise ValueError("block split does not cover the ambient dimension")
        nodes.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", w)

    @property
    def ambient(self) -> int:
        return self.nodes.shape[1]

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    def radius(self) -> float:
        return float(np.max(np.linalg.norm(self.nodes, axis=1)))

    def block_nodes(self) -> list[np.ndarray]:
        """Nodes split into the blocks (y_1, ..., y_m)."""
        if self.blocks is None:
            raise ValueError("quadrature has no block split")
        cuts = np.cumsum((0,) + self.blocks)
        return [self.nodes[:, a:b] for a, b in zip(cuts[:-1], cuts[1:])]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        meta = [f"label={self.label}", f"k={self.curvature_rank}", f"resolution={self.resolution!r}"]
        if self.blocks is not None:
            meta.append("blocks=" + ":".join(str(b) for b in self.blocks))
        w.writerow(meta)
        w.writerow([f"y{j}" for j in range(self.ambient)] + ["weight"])
        for y, wt in zip(self.nodes, self.weights):
            w.writerow([repr(float(v)) for v in y] + [repr(float(wt))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SurfaceQuadrature":
        rows = list(csv.reader(io.StringIO(text)))
        if len(rows) < 3:
            raise ValueError("quadrature CSV needs a metadata row, a header row and nodes")
        meta = dict(item.split("=", 1) for item in rows[0])
        data = np.array([[float(v) for v in r] for r in rows[2:]])
        w = data[:, -1]
        if abs(math.fsum(w) - 1.0) > 1e-12:
            raise ValueError(f"imported weights sum to {math.fsum(w)!r}; a unit-mass quadrature is required")
        blocks = tuple(int(b) for b in meta["blocks"].split(":")) if "blocks" in meta else None
        return cls(
            data[:, :-1],
            _normalize_weights(w),
            int(meta["k"]),
            meta["label"],
            float(meta.get("resolution", "inf")),
            blocks,
        )


def _circle_nodes(M: int) -> np.ndarray:
    th = 2.0 * np.pi * np.arange(M) / M
    return np.stack([np.cos(th), np.sin(th)], axis=1)


def _fibonacci_nodes(M: int) -> np.ndarray:
    i = np.arange(M)
    z = 1.0 - (2.0 * i + 1.0) / M
    rho = np.sqrt(1.0 - z * z)
    phi = i * GOLDEN_ANGLE
    return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)


def _hopf_nodes(M: int) -> np.ndarray:
    # u = sin^2(eta) and both Hopf angles are uniform for the measure on S^3.
    nu = max(2, round((M / 4) ** (1 / 3)))
    na = 2 * nu
    u = (np.arange(nu) + 0.5) / nu
    a = 2.0 * np.pi * np.arange(na) / na
    b = 2.0 * np.pi * (np.arange(na) + 0.5) / na
    U, A, B = np.meshgrid(u, a, b, indexing="ij")
    c, s = np.sqrt(1.0 - U), np.sqrt(U)
    pts = np.stack([c * np.cos(A), c * np.sin(A), s * np.cos(B), s * np.sin(B)], axis=-1)
    return pts.reshape(-1, 4)


def _sphere_resolution(n: int, count: int) -> float:
    if n == 2:
        return count / (3.0 * math.pi)
    if n == 3:
        return 0.13 * math.sqrt(count)
    if n == 4:
        return 0.1 * count ** (1 / 3)
    return math.inf


def sphere_quadrature(d: int, M: int) -> SurfaceQuadrature:
    """Equal-weight nodes on S^{d-1} in R^d.

    d=2 uses uniform angles, d=3 a Fibonacci spiral and d=4 a Hopf-coordinate
    product grid (which rounds M to its own node count).
    """
    if M < 16:
        raise ValueError("at least 16 nodes are required")
    if d == 2:
        nodes = _circle_nodes(M)
    elif d == 3:
        nodes = _fibonacci_nodes(M)
    elif d == 4:
        nodes = _hopf_nodes(M)
    else:
        raise ValueError(f"sphere quadrature supports d in {{2, 3, 4}}, got {d}")
    count = nodes.shape[0]
    return SurfaceQuadrature(nodes, _normalize_weights(np.full(count, 1.0 / count)), d - 1, "sphere", _sphere_resolution(d, count))


def product_sphere_quadrature(m: int, d: int, M: int) -> SurfaceQuadrature:
    """S^{md-1} in R^{md} with nodes split into m blocks of size d."""
    n = m * d
    if n not in (2, 3, 4):
        raise ValueError(f"product sphere needs md in {{2, 3, 4}}, got {n}")
    q = sphere_quadrature(n, M)
    return SurfaceQuadrature(q.nodes, q.weights, n - 1, "product-sphere", q.resolution, (d,) * m)


def bump(y: np.ndarray) -> np.ndarray:
    """exp(-1/(1-|y|^2)) on the open unit ball, scaled to 1 at the origin."""
    r2 = np.sum(np.asarray(y) ** 2, axis=-1)
    out = np.zeros_like(r2)
    inside = r2 < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
    return out


@dataclass(frozen=True)
class GraphSurfaceSpec:
    """Graph {(y', Phi(y'))} over the parameter ball with a cutoff.

    ``phi`` maps an (P, k) array to (P, codim); ``hessian`` (optional) maps a
    point to a (codim, k, k) array.
    """

    param_dim: int
    codim: int
    phi: Callable[[np.ndarray], np.ndarray]
    curvature_rank: int
    cutoff: Callable[[np.ndarray], np.ndarray] = bump
    hessian: Callable[[np.ndarray], np.ndarray] | None = None
    max_slope: float = 1.0

    @property
    def ambient(self) -> int:
        return self.param_dim + self.codim


def paraboloid(k: int, rank: int | None = None, codim: int = 1) -> GraphSurfaceSpec:
    """Phi(y') = |y'_{<rank}|^2 / 2 in the first codimension coordinate."""
    rank = k if rank is None else rank
    if not 0 <= rank <= k:
        raise ValueError("rank must lie in [0, k]")

    def phi(y):
        out = np.zeros((y.shape[0], codim))
        out[:, 0] = 0.5 * np.sum(y[:, :rank] ** 2, axis=1)
        return out

    def hess(y0):
        h = np.zeros((codim, k, k))
        h[0, :rank, :rank] = np.eye(rank)
        return h

    return GraphSurfaceSpec(k, codim, phi, rank, bump, hess, 1.0 if rank else 0.0)


def flat_patch(k: int, codim: int = 1) -> GraphSurfaceSpec:
    return paraboloid(k, 0, codim)


def cylinder(k: int = 2) -> GraphSurfaceSpec:
    """Curved in one parameter direction, flat in the rest."""
    return paraboloid(k, 1, 1)


def graph_quadrature(spec: GraphSurfaceSpec, grid_size: int) -> SurfaceQuadrature:
    """Midpoint rule on [-1, 1]^k weighted by the cutoff, renormalized."""
    k = spec.param_dim
    step = 2.0 / grid_size
    ax = -1.0 + (np.arange(grid_size) + 0.5) * step
    pts = np.stack(np.meshgrid(*([ax] * k), indexing="ij"), axis=-1).reshape(-1, k)
    chi = spec.cutoff(pts)
    if not np.any(chi > 0):
        raise ValueError("cutoff vanishes on the whole parameter grid")
    center_line = np.zeros((grid_size, k))
    center_line[:, 0] = ax
    if np.count_nonzero(spec.cutoff(center_line) > 0) < 8:
        raise ValueError("parameter grid resolves the cutoff support with fewer than 8 cells per axis")
    w = chi * step**k
    # cutoff tails can underflow once multiplied by the cell volume
    keep = w > np.finfo(np.float64).tiny
    pts = pts[keep]
    w = w[keep]
    heights = np.asarray(spec.phi(pts)).reshape(pts.shape[0], spec.codim)
    nodes = np.concatenate([pts, heights], axis=1)
    resolution = 1.0 / (2.0 * step * (1.0 + spec.max_slope))
    return SurfaceQuadrature(nodes, _normalize_weights(w), spec.curvature_rank, "graph", resolution)


def hessian_rank_at_origin(spec: GraphSurfaceSpec, tol: float = 1e-8, h: float = 1e-4) -> int:
    """Rank of the stacked Hessians of Phi at 0 (finite differences when none is supplied)."""
    k = spec.param_dim
    if spec.hessian is not None:
        H = np.asarray(spec.hessian(np.zeros(k)))
    else:
        H = np.zeros((spec.codim, k, k))
        eye = np.eye(k) * h
        for a in range(k):
            for b in range(k):
                p = np.stack([eye[a] + eye[b], eye[a] - eye[b], -eye[a] + eye[b], -eye[a] - eye[b]])
                v = spec.phi(p)
                H[:, a, b] = (v[0] - v[1] - v[2] + v[3]) / (4 * h * h)
    stacked = H.reshape(-1, k)
    return int(np.linalg.matrix_rank(stacked, tol=tol)) if stacked.size else 0


def surface_ft(q: SurfaceQuadrature, xi) -> complex | np.ndarray:
    """sum_i w_i exp(-2 pi i xi.y_i); a 2-D ``xi`` evaluates row by row."""
    x = np.asarray(xi, dtype=np.float64)
    single = x.ndim == 1
    x = x.reshape(-1, q.ambient)
    out = _kernels.ft_points(q.nodes, q.weights, x)
    zero = ~np.any(x, axis=1)
    if np.any(zero):
        out[zero] = math.fsum(q.weights)
    return complex(out[0]) if single else out


def quasi_random_directions(n: int, count: int = 32) -> np.ndarray:
    """Deterministic unit vectors from a Halton sequence pushed through the normal quantile."""
    h = qmc.Halton(d=n, scramble=False).random(count + 1)[1:]
    g = norm.ppf(h)
    return g / np.linalg.norm(g, axis=1, keepdims=True)


@dataclass(frozen=True)
class DecayFit:
    rho: float
    residual: float
    radii: tuple[float, ...]
    envelope: tuple[float, ...]


def decay_fit(
    q: SurfaceQuadrature,
    radii: tuple[float, float] = (4.0, 64.0),
    directions: np.ndarray | int = 32,
    n_radii: int = 9,
    window: float = 1.0,
    window_samples: int = 16,
    backend: str | None = None,
) -> DecayFit:
    """Fit |sigma^(r theta)| ~ r^{-rho}.

    For each radius r the envelope is the max of |sigma^| over directions and
    over the radial window [r, r + window], which bridges the zeros of the
    oscillating transform.  The exponent is minus the least-squares slope of
    log envelope against log r over geometrically spaced radii.
    """
    r0, r1 = float(radii[0]), float(radii[1])
    if n_radii < 4:
        raise ValueError("a decay fit needs at least 4 radii")
    if not 0 < r0 < r1:
        raise ValueError("radii must satisfy 0 < r_min < r_max")
    if r1 + window > q.resolution:
        raise ValueError(f"radius {r1 + window:g} exceeds the quadrature resolution {q.resolution:.4g}; add nodes")
    dirs = quasi_random_directions(q.ambient, directions) if isinstance(directions, int) else np.asarray(directions, float)
    dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    rs = np.geomspace(r0, r1, n_radii)
    step = window / (window_samples - 1)
    vals = _kernels.ft_rays(q.nodes, q.weights, dirs, rs, step, window_samples, backend)
    env = np.abs(vals).max(axis=(0, 2))
    logs = np.log(np.maximum(env, np.finfo(float).tiny))
    A = np.stack([np.log(rs), np.ones_like(rs)], axis=1)
    coef, *_ = np.linalg.lstsq(A, logs, rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - logs) ** 2)))
    return DecayFit(float(-coef[0]), resid, tuple(float(r) for r in rs), tuple(float(e) for e in env))


def rotation_2d(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def rotation_taking(e_to: Sequence[float]) -> np.ndarray:
    """A proper rotation of R^d mapping e_1 to the unit vector ``e_to``."""
    u = np.asarray(e_to, dtype=float)
    u = u / np.linalg.norm(u)
    d = u.size
    e = np.zeros(d)
    e[0] = 1.0
    c = float(u @ e)
    if c > 1.0 - 1e-15:
        return np.eye(d)
    if c < -1.0 + 1e-15:
        R = -np.eye(d)
        if d % 2:
            R[1, 1] = 1.0
        return R
    v = u - c * e
    v /= np.linalg.norm(v)
    s = math.sqrt(max(0.0, 1.0 - c * c))
    # rotate in the plane spanned by e and v
    R = np.eye(d) + (c - 1.0) * (np.outer(e, e) + np.outer(v, v)) + s * (np.outer(v, e) - np.outer(e, v))
    return R


@dataclass(frozen=True, eq=False)
class RotationFamily:
    """Orthogonal matrices Theta_1..Theta_m of a common size.

    Linear independence in matrix space is enforced when ``strict``; the
    non-strict form admits degenerate families used as counterexamples.
    """

    matrices: tuple
    strict: bool = True
    exact: tuple = field(init=False, repr=False)

    def __post_init__(self):
        mats = tuple(np.array(m, dtype=float) for m in self.matrices)
        if not mats:
            raise ValueError("rotation family is empty")
        d = mats[0].shape[0]
        for j, m in enumerate(mats):
            if m.shape != (d, d):
                raise ValueError(f"Theta_{j + 1} has shape {m.shape}, expected {(d, d)}")
            if np.max(np.abs(m.T @ m - np.eye(d))) > 1e-12:
                raise ValueError(f"Theta_{j + 1} is not orthogonal to 1e-12")
            m.flags.writeable = False
        exact = tuple(rl.as_matrix(m) for m in self.matrices)
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "exact", exact)
        if self.strict and not self.is_independent():
            raise ValueError("rotation family is linearly dependent in matrix space")

    @property
    def m(self) -> int:
        return len(self.matrices)

    @property
    def d(self) -> int:
        return self.matrices[0].shape[0]

    def is_independent(self) -> bool:
        flat = [[v for row in M for v in row] for M in self.exact]
        return rl.rank(flat) == self.m

    def image_of_coordinates(self, j: int, k: int) -> rl.Subspace:
        """Theta_j (R^k x {0}) as an exact subspace."""
        cols = [[row[c] for row in self.exact[j]] for c in range(k)]
        return rl.Subspace.span(cols, self.d)

    def left_multiplied(self, R) -> "RotationFamily":
        return RotationFamily(tuple(np.asarray(R) @ m for m in self.matrices), self.strict)

    def permuted(self, order: Sequence[int]) -> "RotationFamily":
        return RotationFamily(tuple(self.matrices[i] for i in order), self.strict)


def quarter_pair() -> RotationFamily:
    """Theta_1 = I and Theta_2 = rotation by pi/2 in the plane."""
    return RotationFamily(([[1, 0], [0, 1]], [[0, -1], [1, 0]]))


def cyclic_family(d: int, m: int, strict: bool = True) -> RotationFamily:
    """Powers of the cyclic coordinate shift e_i -> e_{i+1}; exact rotations for odd d."""
    P = np.roll(np.eye(d, dtype=int), 1, axis=0)
    if round(np.linalg.det(P)) != 1:
        P[:, 0] *= -1
    mats = [np.linalg.matrix_power(P, j).astype(int).tolist() for j in range(m)]
    return RotationFamily(tuple(mats), strict)


@dataclass(frozen=True)
class SimplexResult:
    passed: bool
    witness: tuple[int, ...] | None
    dims: dict


def simplex_condition(theta: RotationFamily, k: int) -> SimplexResult:
    """Check dim of every intersection of l images Theta_j(R^k x 0) is at most k+1-l.

    Subsets of size 2..k+1 are tested exactly; the first failing subset
    (1-based indices, lexicographic order) is the witness.
    """
    m = theta.m
    if not 2 <= k + 1 <= m:
        raise ValueError(f"need 2 <= k+1 <= m, got k={k}, m={m}")
    if not 1 <= k < theta.d:
        raise ValueError(f"k must lie in [1, d-1], got {k}")
    images = [theta.image_of_coordinates(j, k) for j in range(m)]
    dims = {}
    for size in range(2, k + 2):
        for subset in itertools.combinations(range(m), size):
            inter = images[subset[0]]
            for j in subset[1:]:
                inter = inter & images[j]
            key = tuple(j + 1 for j in subset)
            dims[key] = inter.dim
            if inter.dim > k + 1 - size:
                return SimplexResult(False, key, dims)
    return SimplexResult(True, None, dims)
