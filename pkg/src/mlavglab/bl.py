"""Brascamp-Lieb data: exact finiteness checks, critical splitting and exponent regions.

All arithmetic is over the rationals.  "For all subspaces" is finitized by
a generated lattice plus seeded random rational subspaces, so a passing
transversality check means "no violation in the tested family".
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import rational as rl
from .rational import Subspace
from .surface import RotationFamily

DEFAULT_LATTICE_CAP = 400


# data -----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BLDatum:
    """Linear surjections L_j : Q^n -> Q^{d_j} with exponents c_j in [0, 1]."""

    ambient: int
    maps: tuple
    exponents: tuple
    labels: tuple = ()
    seeds: dict = field(default_factory=dict)  # named subspaces added to every lattice

    def __post_init__(self):
        if self.ambient < 0:
            raise ValueError("ambient dimension must be nonnegative")
        maps = tuple(tuple(tuple(rl.to_fraction(v) for v in row) for row in L) for L in self.maps)
        cs = tuple(rl.to_fraction(c) for c in self.exponents)
        if len(maps) != len(cs):
            raise ValueError(f"{len(maps)} maps but {len(cs)} exponents")
        for j, L in enumerate(maps):
            if any(len(row) != self.ambient for row in L):
                raise ValueError(f"map {j + 1} does not act on dimension {self.ambient}")
            if rl.rank([list(r) for r in L]) != len(L):
                raise ValueError(f"map {j + 1} is not surjective")
        for j, c in enumerate(cs):
            if not 0 <= c <= 1:
                raise ValueError(f"exponent {j + 1} = {c} is outside [0, 1]")
        labels = tuple(self.labels) or tuple(f"L{j + 1}" for j in range(len(maps)))
        if len(labels) != len(maps):
            raise ValueError("one label per map is required")
        object.__setattr__(self, "maps", maps)
        object.__setattr__(self, "exponents", cs)
        object.__setattr__(self, "labels", labels)
        for name, V in self.seeds.items():
            if V.ambient != self.ambient:
                raise ValueError(f"seed subspace {name!r} lives in the wrong ambient space")

    @property
    def J(self) -> int:
        return len(self.maps)

    def matrix(self, j: int) -> rl.Matrix:
        return [list(r) for r in self.maps[j]]

    def target_dims(self) -> list[int]:
        return [len(L) for L in self.maps]

    def kernel(self, j: int) -> Subspace:
        return rl.kernel(self.matrix(j), self.ambient)

    def image_dim(self, j: int, V: Subspace) -> int:
        if not self.maps[j]:
            return 0
        return V.image(self.matrix(j)).dim

    def permuted(self, order: Sequence[int]) -> "BLDatum":
        return BLDatum(self.ambient, tuple(self.maps[i] for i in order), tuple(self.exponents[i] for i in order), tuple(self.labels[i] for i in order), self.seeds)

    def rescaled(self, factors: Sequence) -> "BLDatum":
        """Multiply each map by a nonzero rational (ranks and images are unchanged)."""
        fs = [rl.to_fraction(f) for f in factors]
        if any(f == 0 for f in fs):
            raise ValueError("rescaling factors must be nonzero")
        return BLDatum(self.ambient, tuple(tuple(tuple(f * v for v in r) for r in L) for L, f in zip(self.maps, fs)), self.exponents, self.labels, self.seeds)

    def to_json(self) -> dict:
        return {
            "ambient": self.ambient,
            "labels": list(self.labels),
            "maps": [[[rl.fraction_str(v) for v in r] for r in L] for L in self.maps],
            "exponents": [rl.fraction_str(c) for c in self.exponents],
            "seeds": {k: V.to_json() for k, V in self.seeds.items()},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)

    @classmethod
    def from_json(cls, doc) -> "BLDatum":
        """Parse a datum document; errors name the offending JSON path."""
        if isinstance(doc, (str, bytes)):
            try:
                doc = json.loads(doc)
            except json.JSONDecodeError as exc:
                raise DatumFormatError(f"line {exc.lineno} column {exc.colno}", exc.msg) from None
        if not isinstance(doc, dict):
            raise DatumFormatError("$", "datum must be a JSON object")
        for key in ("ambient", "maps", "exponents"):
            if key not in doc:
                raise DatumFormatError(f"$.{key}", "missing field")
        n = doc["ambient"]
        if not isinstance(n, int) or isinstance(n, bool) or n < 0:
            raise DatumFormatError("$.ambient", "expected a nonnegative integer")
        maps_doc = doc["maps"]
        if not isinstance(maps_doc, list):
            raise DatumFormatError("$.maps", "expected a list of matrices")
        maps = []
        for j, L in enumerate(maps_doc):
            if not isinstance(L, list):
                raise DatumFormatError(f"$.maps[{j}]", "expected a list of rows")
            rows = []
            for r, row in enumerate(L):
                if not isinstance(row, list):
                    raise DatumFormatError(f"$.maps[{j}][{r}]", "expected a list of rationals")
                if len(row) != n:
                    raise DatumFormatError(f"$.maps[{j}][{r}]", f"row has {len(row)} entries, expected {n}")
                rows.append([_parse_rational(v, f"$.maps[{j}][{r}][{c}]") for c, v in enumerate(row)])
            maps.append(rows)
        exps = doc["exponents"]
        if not isinstance(exps, list):
            raise DatumFormatError("$.exponents", "expected a list of rationals")
        cs = [_parse_rational(v, f"$.exponents[{j}]") for j, v in enumerate(exps)]
        labels = doc.get("labels", [])
        if not isinstance(labels, list) or not all(isinstance(s, str) for s in labels):
            raise DatumFormatError("$.labels", "expected a list of strings")
        seeds_doc = doc.get("seeds", {})
        if not isinstance(seeds_doc, dict):
            raise DatumFormatError("$.seeds", "expected an object of named bases")
        seeds = {}
        for name, rows in seeds_doc.items():
            if not isinstance(rows, list) or not all(isinstance(r, list) and len(r) == n for r in rows):
                raise DatumFormatError(f"$.seeds.{name}", f"expected a list of length-{n} rows")
            seeds[name] = Subspace.span([[_parse_rational(v, f"$.seeds.{name}[{i}][{c}]") for c, v in enumerate(r)] for i, r in enumerate(rows)], n)
        try:
            return cls(n, tuple(maps), tuple(cs), tuple(labels), seeds)
        except ValueError as exc:
            raise DatumFormatError("$", str(exc)) from None


class DatumFormatError(ValueError):
    def __init__(self, position: str, message: str):
        super().__init__(f"{position}: {message}")
        self.position = position
        self.message = message


def _parse_rational(v, where: str) -> Fraction:
    if not isinstance(v, str):
        raise DatumFormatError(where, f"expected a \"num/den\" string, got {type(v).__name__}")
    s = v.strip()
    num, sep, den = s.partition("/")
    try:
        a = int(num)
        b = int(den) if sep else 1
    except ValueError:
        raise DatumFormatError(where, f"malformed rational {v!r}") from None
    if b == 0:
        raise DatumFormatError(where, "zero denominator")
    return Fraction(a, b)


@dataclass(frozen=True)
class SubspaceFamily:
    subspaces: tuple
    names: tuple = ()
    truncated: bool = False

    def __post_init__(self):
        names = tuple(self.names) or tuple(f"V{i}" for i in range(len(self.subspaces)))
        object.__setattr__(self, "names", names)

    def __len__(self) -> int:
        return len(self.subspaces)

    def __iter__(self):
        return iter(self.subspaces)

    def name_of(self, V: Subspace) -> str | None:
        for n, W in zip(self.names, self.subspaces):
            if W == V:
                return n
        return None


# checks -----------------------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"check": self.name, "passed": self.passed, **self.detail}


def scaling_check(datum: BLDatum) -> CheckResult:
    rhs = sum((c * dj for c, dj in zip(datum.exponents, datum.target_dims())), Fraction(0))
    return CheckResult("scaling", rhs == datum.ambient, {"lhs": str(datum.ambient), "rhs": rl.fraction_str(rhs)})


def necessary_check(datum: BLDatum) -> CheckResult:
    n = datum.ambient
    inter = Subspace.full(n)
    for j in range(datum.J):
        inter = inter & datum.kernel(j)
    total = sum(datum.exponents, Fraction(0))
    over = [datum.labels[j] for j, c in enumerate(datum.exponents) if c > 1]
    ok = inter.dim == 0 and total >= 1 and not over
    detail = {
        "kernel_intersection_dim": inter.dim,
        "kernel_intersection": inter.to_json(),
        "exponent_sum": rl.fraction_str(total),
        "exponents_above_one": over,
    }
    return CheckResult("necessary", ok, detail)


def slack(datum: BLDatum, V: Subspace) -> Fraction:
    """sum_j c_j dim(L_j V) - dim V."""
    return sum((c * datum.image_dim(j, V) for j, c in enumerate(datum.exponents)), Fraction(0)) - V.dim


def transversality_check(datum: BLDatum, family: SubspaceFamily) -> CheckResult:
    if len(family) == 0:
        raise ValueError("subspace family is empty")
    worst, worst_i = None, None
    critical = []
    for i, V in enumerate(family):
        s = slack(datum, V)
        if worst is None or s < worst:
            worst, worst_i = s, i
        if s == 0 and 0 < V.dim < datum.ambient:
            critical.append(family.names[i])
    W = family.subspaces[worst_i]
    detail = {
        "tested": len(family),
        "min_slack": rl.fraction_str(worst),
        "worst_subspace": family.names[worst_i],
        "worst_basis": W.to_json(),
        "worst_dim": W.dim,
        "critical_proper": critical,
        "family_truncated": family.truncated,
        "scope": "pass on tested family",
    }
    return CheckResult("transversality", worst >= 0, detail)


# lattice ----------------------------------------------------------------------

def _closure(seeds: dict, depth: int, cap: int) -> tuple[dict, bool, bool]:
    """Close {name: subspace} under + and & for ``depth`` rounds; returns (family, saturated, truncated)."""
    fam = dict(seeds)
    seen = {v: k for k, v in fam.items()}
    for _ in range(depth):
        items = list(seen.items())
        added = False
        for (a, na), (b, nb) in itertools.combinations(items, 2):
            for op, W in (("+", a + b), ("&", a & b)):
                if W not in seen:
                    if len(seen) >= cap:
                        return {n: v for v, n in seen.items()}, False, True
                    seen[W] = f"({na}{op}{nb})"
                    added = True
        if not added:
            return {n: v for v, n in seen.items()}, True, False
    return {n: v for v, n in seen.items()}, False, False


def lattice_seeds(datum: BLDatum, extra: dict | None = None) -> dict:
    n = datum.ambient
    seeds = {"0": Subspace.zero(n), "R^n": Subspace.full(n)}
    for j in range(datum.J):
        seeds[f"ker {datum.labels[j]}"] = datum.kernel(j)
    for name, V in {**datum.seeds, **(extra or {})}.items():
        seeds[name] = V
    # dedupe keeping the first name
    out, seen = {}, set()
    for k, v in seeds.items():
        if v not in seen:
            out[k] = v
            seen.add(v)
    return out


def random_subspaces(n: int, count: int, seed: int, max_entry: int = 3) -> dict:
    rng = random.Random(seed)
    out = {}
    for i in range(count):
        dim = rng.randint(1, max(1, n - 1)) if n > 1 else n
        vecs = [[Fraction(rng.randint(-max_entry, max_entry)) for _ in range(n)] for _ in range(dim)]
        out[f"rand{i}"] = Subspace.span(vecs, n)
    return out


def generate_subspace_lattice(
    datum: BLDatum,
    depth: int,
    extra: dict | None = None,
    random_count: int = 16,
    seed: int = 0,
    cap: int = DEFAULT_LATTICE_CAP,
) -> SubspaceFamily:
    """Kernels, caller-supplied seeds (e.g. the structured subspaces), closed under + and &,
    plus a seeded batch of random rational subspaces."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    fam, saturated, truncated = _closure(lattice_seeds(datum, extra), depth, cap)
    names, subs = list(fam), list(fam.values())
    present = set(subs)
    for name, V in random_subspaces(datum.ambient, random_count, seed).items():
        if V not in present:
            names.append(name)
            subs.append(V)
            present.add(V)
    return SubspaceFamily(tuple(subs), tuple(names), truncated)


def close_family(family: SubspaceFamily, depth: int, cap: int = DEFAULT_LATTICE_CAP) -> SubspaceFamily:
    fam, _, truncated = _closure(dict(zip(family.names, family.subspaces)), depth, cap)
    return SubspaceFamily(tuple(fam.values()), tuple(fam), truncated or family.truncated)


# splitting --------------------------------------------------------------------

def _coords(basis_cols: rl.Matrix, vectors_cols: rl.Matrix) -> rl.Matrix:
    """Coordinates of the columns of ``vectors_cols`` in the full-column-rank basis ``basis_cols``."""
    if not basis_cols or not basis_cols[0]:
        return []
    return rl.solve(basis_cols, vectors_cols)


def critical_split(datum: BLDatum, Vc: Subspace) -> tuple[BLDatum, BLDatum]:
    """Restricted datum on V_c and quotient datum on V_c^perp, in exact bases.

    The quotient target R^{d_j} / L_j V_c is identified with (L_j V_c)^perp
    through orthogonal projection.
    """
    if Vc.ambient != datum.ambient:
        raise ValueError("subspace lives in the wrong ambient space")
    s = slack(datum, Vc)
    if s != 0:
        raise ValueError(f"subspace is not critical (slack {s})")
    B = Vc.basis_columns()
    P = Vc.perp().basis_columns()
    restricted, quotient = [], []
    for j in range(datum.J):
        L = datum.matrix(j)
        dj = len(L)
        img = Vc.image(L) if dj else Subspace.zero(0)
        if Vc.dim:
            LB = rl.matmul(L, B) if dj else []
            C = img.basis_columns()
            restricted.append(tuple(tuple(r) for r in (_coords(C, LB) if img.dim else [])))
        else:
            restricted.append(())
        Q = img.perp().basis_columns() if dj else []
        qdim = dj - img.dim
        if qdim and Vc.perp().dim:
            LP = rl.matmul(L, P)
            Qt = rl.transpose(Q)
            gram = rl.matmul(Qt, Q)
            quotient.append(tuple(tuple(r) for r in rl.solve(gram, rl.matmul(Qt, LP))))
        elif qdim:
            quotient.append(tuple(() for _ in range(qdim)))
        else:
            quotient.append(())
    r = BLDatum(Vc.dim, tuple(restricted), datum.exponents, datum.labels)
    q = BLDatum(datum.ambient - Vc.dim, tuple(quotient), datum.exponents, datum.labels)
    return r, q


# structured data --------------------------------------------------------------

def structured_subspaces(theta: RotationFamily, d: int, k: int) -> dict:
    """K_pi = {(0, y')}, its complement {(x, 0)} and K_mu = {(Theta_mu^1 y', 0)}."""
    n = d + k
    e = lambda i: [Fraction(int(i == c)) for c in range(n)]
    out = {
        "K_pi": Subspace.span([e(d + i) for i in range(k)], n),
        "K_pi^perp": Subspace.span([e(i) for i in range(d)], n),
    }
    for mu in range(theta.m):
        cols = [[row[c] for row in theta.exact[mu]] for c in range(k)]
        out[f"K_{mu + 1}"] = Subspace.span([v + [Fraction(0)] * k for v in cols], n)
    return out


def build_structured_datum(theta: RotationFamily, d: int, k: int, exponents: Sequence | None = None) -> BLDatum:
    """Maps [I_d | Theta_j^1] for j = 1..m and the projection [I_d | 0] on Q^{d+k}."""
    if theta.d != d:
        raise ValueError(f"rotations act on R^{theta.d}, expected R^{d}")
    if not 1 <= k <= d - 1:
        raise ValueError(f"k must lie in [1, d-1], got {k}")
    m = theta.m
    n = d + k
    maps = []
    for mu in range(m):
        T = theta.exact[mu]
        maps.append(tuple(tuple([Fraction(int(r == c)) for c in range(d)] + [T[r][c] for c in range(k)]) for r in range(d)))
    maps.append(tuple(tuple([Fraction(int(r == c)) for c in range(d)] + [Fraction(0)] * k) for r in range(d)))
    if exponents is None:
        exponents = [Fraction(1, m)] * m + [Fraction(k, d)]
    if len(exponents) != m + 1:
        raise ValueError(f"expected {m + 1} exponents, got {len(exponents)}")
    labels = tuple(f"L{j + 1}" for j in range(m)) + ("pi",)
    return BLDatum(n, tuple(maps), tuple(exponents), labels, structured_subspaces(theta, d, k))


def verify_datum(datum: BLDatum, depth: int = 2, extra: dict | None = None, random_count: int = 16, seed: int = 0, split: bool = True) -> dict:
    """Scaling, necessary conditions, lattice transversality and splitting along lattice critical subspaces."""
    fam = generate_subspace_lattice(datum, depth, extra, random_count, seed)
    sc, nc, tr = scaling_check(datum), necessary_check(datum), transversality_check(datum, fam)
    report = {"checks": [sc.as_dict(), nc.as_dict(), tr.as_dict()], "slacks": {}}
    for name, V in {**datum.seeds, **(extra or {})}.items():
        report["slacks"][name] = rl.fraction_str(slack(datum, V))
    splits = []
    if split and tr.passed:
        for name in tr.detail["critical_proper"]:
            V = fam.subspaces[fam.names.index(name)]
            r, q = critical_split(datum, V)
            parts = {}
            for part, sub in (("restricted", r), ("quotient", q)):
                sfam = generate_subspace_lattice(sub, depth, None, random_count, seed)
                parts[part] = {
                    "ambient": sub.ambient,
                    "scaling": scaling_check(sub).passed,
                    "transversality": transversality_check(sub, sfam).passed,
                }
            splits.append({"subspace": name, **parts})
    report["splits"] = splits
    report["passed"] = sc.passed and nc.passed and tr.passed and all(
        s[p]["scaling"] and s[p]["transversality"] for s in splits for p in ("restricted", "quotient")
    )
    return report


# exponent tuples and regions --------------------------------------------------

@dataclass(frozen=True)
class ExponentTuple:
    """Exponents stored by reciprocals; infinity is reciprocal 0."""

    inv: tuple
    inv_p: Fraction
    d: int | None = None
    k: int | None = None
    holder: bool = False

    def __post_init__(self):
        inv = tuple(rl.to_fraction(x) for x in self.inv)
        ip = rl.to_fraction(self.inv_p)
        if not inv:
            raise ValueError("at least one input exponent is required")
        for j, x in enumerate(inv):
            if not 0 <= x <= 1:
                raise ValueError(f"p_{j + 1} must lie in [1, inf] (reciprocal {x})")
        if ip < 0:
            raise ValueError("1/p must be nonnegative")
        if self.holder and ip != sum(inv, Fraction(0)):
            raise ValueError("Hoelder relation 1/p = sum 1/p_j fails")
        object.__setattr__(self, "inv", inv)
        object.__setattr__(self, "inv_p", ip)

    @classmethod
    def from_p(cls, ps: Sequence, p, **kw) -> "ExponentTuple":
        return cls(tuple(_recip(x) for x in ps), _recip(p), **kw)

    @classmethod
    def holder_type(cls, inv: Sequence, **kw) -> "ExponentTuple":
        inv = tuple(rl.to_fraction(x) for x in inv)
        return cls(inv, sum(inv, Fraction(0)), holder=True, **kw)

    @property
    def m(self) -> int:
        return len(self.inv)

    def permuted(self, order: Sequence[int]) -> "ExponentTuple":
        return ExponentTuple(tuple(self.inv[i] for i in order), self.inv_p, self.d, self.k, self.holder)

    def to_json(self) -> dict:
        return {"inv_p_j": [rl.fraction_str(x) for x in self.inv], "inv_p": rl.fraction_str(self.inv_p), "d": self.d, "k": self.k}


def _recip(x) -> Fraction:
    if isinstance(x, str) and x.strip().lower() in ("inf", "infinity"):
        return Fraction(0)
    if isinstance(x, float) and x == float("inf"):
        return Fraction(0)
    v = rl.to_fraction(x)
    if v <= 0:
        raise ValueError("exponents must be positive")
    return 1 / v


def holder_defect(t: ExponentTuple) -> Fraction:
    return sum(t.inv, Fraction(0)) - t.inv_p


@dataclass(frozen=True)
class RegionVerdict:
    inside: bool
    margin: Fraction
    detail: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"inside": self.inside, "margin": rl.fraction_str(self.margin), **self.detail}


def vertex_value(k: int) -> Fraction:
    return Fraction(k + 1, k + 2)


def vertices(m: int, k: int) -> list[tuple[Fraction, ...]]:
    a = vertex_value(k)
    out = []
    for i, j in itertools.combinations(range(m), 2):
        z = [Fraction(0)] * m
        z[i] = z[j] = a
        out.append(tuple(z))
    return out


def conv_vk_margin(z: Sequence[Fraction], k: int) -> Fraction:
    """Signed margin for conv(V_k) = {0 <= z_i <= a, sum z = 2a}, a = (k+1)/(k+2).

    Positive in the relative interior, 0 on the relative boundary, negative
    outside (minus the largest violation, including the off-plane distance).
    """
    m = len(z)
    if m < 2:
        return Fraction(-1)
    a = vertex_value(k)
    ineq = min(min(z), min(a - x for x in z))
    off = abs(sum(z, Fraction(0)) - 2 * a)
    if off:
        return min(ineq, -off)
    if m == 2:
        # the hull is a single point
        return min(ineq, Fraction(0))
    return ineq


def _need_dk(t: ExponentTuple, d=None, k=None) -> tuple[int, int]:
    d = t.d if d is None else d
    k = t.k if k is None else k
    if d is None or k is None:
        raise ValueError("this predicate needs (d, k)")
    return int(d), int(k)


def region_predicates(t: ExponentTuple, which: str, d: int | None = None, k: int | None = None) -> RegionVerdict:
    """Exact membership with a signed margin (>= 0 inside, strict bounds need > 0)."""
    m = t.m
    S = sum(t.inv, Fraction(0))
    if which == "conv_vk":
        _, k = _need_dk(t, d if d is not None else 0, k)
        mg = conv_vk_margin(t.inv, k)
        return RegionVerdict(mg >= 0, mg, {"vertex_value": rl.fraction_str(vertex_value(k))})
    if which == "l1_improving":
        # L^1 bound on conv(V_k), and L^p when 1/p = sum 1/p_j
        _, k = _need_dk(t, d if d is not None else 0, k)
        mg = conv_vk_margin(t.inv, k)
        target_ok = t.inv_p == 1 or t.inv_p == S
        return RegionVerdict(mg >= 0 and target_ok, mg if target_ok else min(mg, -abs(t.inv_p - S)), {})
    if which == "sigma_improving":
        d, k = _need_dk(t, d, k)
        if not (d >= 2 and (m - 1) * d < k <= m * d - 1):
            return RegionVerdict(False, Fraction(-1), {"reason": "curvature hypothesis (m-1)d < k <= md-1 fails"})
        lo = Fraction(m + 1, 2)
        hi = Fraction(2 * d + k, 2 * d)
        margins = [S - lo, hi - S] + [x - Fraction(1, 2) for x in t.inv] + [1 - x for x in t.inv]
        target = t.inv_p == 1 or t.inv_p == S
        mg = min(margins)
        inside = mg >= 0 and hi - S > 0 and target
        return RegionVerdict(inside, mg, {"lower": rl.fraction_str(lo), "upper_strict": rl.fraction_str(hi)})
    if which == "strong_type":
        d, k = _need_dk(t, d, k)
        if not (d >= 2 and 1 <= k <= d - 1):
            return RegionVerdict(False, Fraction(-1), {"reason": "need d >= 2 and 1 <= k <= d-1"})
        mg = Fraction(m - 1, m) - Fraction((d - k) * k, d)
        at_point = all(x == Fraction(1, m) for x in t.inv) and t.inv_p == Fraction(d - k, d)
        return RegionVerdict(mg >= 0 and at_point, mg, {"tuple_is_strong_type_point": at_point})
    if which == "ell_family":
        d, k = _need_dk(t, d, k)
        per = {l: Fraction(m - l - 1, m) - Fraction(d - k, d) * (k - l) for l in range(k)}
        mg = min(per.values())
        return RegionVerdict(mg >= 0, mg, {"per_ell": {str(l): rl.fraction_str(v) for l, v in per.items()}})
    if which == "lacunary":
        # z = s w with w in conv(V_k), 0 <= s < 1 and the Hoelder relation
        _, k = _need_dk(t, d if d is not None else 0, k)
        a2 = 2 * vertex_value(k)
        if S == 0:
            return RegionVerdict(t.inv_p == 0, Fraction(0) if t.inv_p == 0 else -abs(t.inv_p), {})
        w = [x * a2 / S for x in t.inv]
        mg = min(conv_vk_margin(w, k), a2 - S)
        if t.inv_p != S:
            mg = min(mg, -abs(t.inv_p - S))
        inside = conv_vk_margin(w, k) >= 0 and a2 - S > 0 and t.inv_p == S
        return RegionVerdict(inside, mg, {"threshold_inv_p": rl.fraction_str(a2)})
    if which == "bilinear_sphere":
        if m != 2:
            return RegionVerdict(False, Fraction(-1), {"reason": "bilinear only"})
        mg = min(Fraction(2) - t.inv_p, *(1 - x for x in t.inv))
        inside = t.inv_p == S and all(x < 1 for x in t.inv) and t.inv_p < 2
        if t.inv_p != S:
            mg = min(mg, -abs(t.inv_p - S))
        return RegionVerdict(inside, mg, {"threshold_inv_p": "2/1"})
    if which == "holder":
        D = holder_defect(t)
        return RegionVerdict(D == 0, -abs(D), {"defect": rl.fraction_str(D)})
    raise ValueError(f"unknown predicate {which!r}")


PREDICATES = ("conv_vk", "l1_improving", "sigma_improving", "strong_type", "ell_family", "lacunary", "bilinear_sphere", "holder")
