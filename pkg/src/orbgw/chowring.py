"""Target geometries: graded basis, pairing, orbifold product table.

A :class:`TargetGeometry` is built from a plain ``dict`` (the JSON
GeometryConfig schema) and checked exhaustively before use: the pairing must
be symmetric and invertible, the product commutative, associative, graded by
Chen-Ruan degree and by sector, with the unit acting trivially, and the
pairing must agree with integration of products.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from itertools import product as cartesian
from pathlib import Path
from typing import Iterable, Sequence

from .arith import format_rational, parse_rational
from .errors import GeometryError
from .keys import CorrelatorKey

UNTWISTED = "untwisted"
TWISTED = "twisted"
SECTORS = (UNTWISTED, TWISTED)

KNOWN_RULES = ("deg0-twisted-pair", "deg0-twisted-divisor", "deg0-n4", "parity")


@dataclass(frozen=True)
class BasisClass:
    index: int
    name: str
    cr_degree: int
    sector: str = UNTWISTED


class ChowClass:
    """A coefficient vector over the basis of one target."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable):
        self.coeffs = tuple(Fraction(c) for c in coeffs)

    @classmethod
    def zero(cls, size: int) -> "ChowClass":
        return cls((0,) * size)

    @classmethod
    def unit_vector(cls, size: int, i: int) -> "ChowClass":
        return cls(1 if k == i else 0 for k in range(size))

    def __len__(self):
        return len(self.coeffs)

    def __getitem__(self, i):
        return self.coeffs[i]

    def __iter__(self):
        return iter(self.coeffs)

    def __add__(self, other: "ChowClass") -> "ChowClass":
        _same_length(self, other)
        return ChowClass(a + b for a, b in zip(self.coeffs, other.coeffs))

    def __sub__(self, other: "ChowClass") -> "ChowClass":
        _same_length(self, other)
        return ChowClass(a - b for a, b in zip(self.coeffs, other.coeffs))

    def __neg__(self) -> "ChowClass":
        return ChowClass(-a for a in self.coeffs)

    def __rmul__(self, scalar) -> "ChowClass":
        return ChowClass(scalar * a for a in self.coeffs)

    def __eq__(self, other):
        if not isinstance(other, ChowClass):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return f"ChowClass({[format_rational(c) for c in self.coeffs]})"

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def support(self) -> list[int]:
        return [i for i, c in enumerate(self.coeffs) if c]


def _same_length(a: ChowClass, b: ChowClass):
    if len(a) != len(b):
        raise ValueError(f"class lengths differ: {len(a)} vs {len(b)}")


@dataclass(frozen=True)
class TargetGeometry:
    name: str
    basis: tuple[BasisClass, ...]
    pairing: tuple[tuple[Fraction, ...], ...]
    products: dict  # (i, j) -> ChowClass, complete over all ordered pairs
    dim: int
    c1_per_step: Fraction
    degree_step: Fraction
    divisor_per_step: dict  # basis index -> integral over one degree step
    vanishing_rules: frozenset = frozenset()
    seeds: dict = field(default_factory=dict)  # CorrelatorKey -> Fraction
    relations: tuple = ()  # ((label, ((coeff, (i, j, ...)), ...)), ...)
    solve_max_degree_steps: int | None = None
    audit_defaults: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def size(self) -> int:
        return len(self.basis)

    def index_of(self, name: str) -> int:
        for b in self.basis:
            if b.name == name:
                return b.index
        raise KeyError(name)

    def names(self) -> list[str]:
        return [b.name for b in self.basis]

    def cls(self, name_or_index) -> ChowClass:
        i = name_or_index if isinstance(name_or_index, int) else self.index_of(name_or_index)
        return ChowClass.unit_vector(self.size, i)

    def point_index(self) -> int:
        """The untwisted class of top degree."""
        tops = [b.index for b in self.basis if b.sector == UNTWISTED and b.cr_degree == self.dim]
        if len(tops) != 1:
            raise GeometryError(f"{self.name}: no unique point class")
        return tops[0]

    def with_product(self, a: str, b: str, value: ChowClass) -> "TargetGeometry":
        """Copy of this target with one product entry overwritten, unvalidated.

        Only meant for fault injection against :func:`verify_presentation`.
        """
        i, j = self.index_of(a), self.index_of(b)
        products = dict(self.products)
        products[i, j] = value
        products[j, i] = value
        return replace(self, products=products, _cache={})


# -- linear algebra over Q ---------------------------------------------------

def invert_matrix(matrix: Sequence[Sequence]) -> list[list[Fraction]] | None:
    """Gauss-Jordan inverse over the rationals; ``None`` when singular."""
    n = len(matrix)
    a = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
         for i, row in enumerate(matrix)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            return None
        a[col], a[pivot] = a[pivot], a[col]
        inv = 1 / a[col][col]
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [row[n:] for row in a]


# -- ring operations ---------------------------------------------------------

def multiply(a: ChowClass, b: ChowClass, t: TargetGeometry) -> ChowClass:
    """Bilinear extension of the product table."""
    if len(a) != t.size or len(b) != t.size:
        raise ValueError("class length does not match target basis")
    out = [Fraction(0)] * t.size
    for i in a.support():
        for j in b.support():
            c = a[i] * b[j]
            for k, v in enumerate(t.products[i, j]):
                if v:
                    out[k] += c * v
    return ChowClass(out)


def pair(a: ChowClass, b: ChowClass, t: TargetGeometry) -> Fraction:
    total = Fraction(0)
    for i in a.support():
        row = t.pairing[i]
        for j in b.support():
            total += a[i] * b[j] * row[j]
    return total


def integrate(a: ChowClass, t: TargetGeometry) -> Fraction:
    """Integral of a class: its pairing with the unit."""
    return pair(t.cls(0), a, t)


def pairing_inverse(t: TargetGeometry) -> tuple[tuple[Fraction, ...], ...]:
    """Exact inverse of the pairing matrix, cached on the target."""
    inv = t._cache.get("pairing_inverse")
    if inv is None:
        m = invert_matrix(t.pairing)
        if m is None:
            raise GeometryError(f"{t.name}: pairing is degenerate")
        inv = tuple(tuple(row) for row in m)
        t._cache["pairing_inverse"] = inv
    return inv


def pairing_inverse_entries(t: TargetGeometry) -> tuple[tuple[int, int, Fraction], ...]:
    """Nonzero ``(mu, nu, g^{mu nu})`` triples, for contraction loops."""
    entries = t._cache.get("pairing_inverse_entries")
    if entries is None:
        inv = pairing_inverse(t)
        entries = tuple((m, n, inv[m][n]) for m in range(t.size) for n in range(t.size)
                        if inv[m][n])
        t._cache["pairing_inverse_entries"] = entries
    return entries


def monomial(indices: Iterable[int], t: TargetGeometry) -> ChowClass:
    out = t.cls(0)
    for i in indices:
        out = multiply(out, t.cls(i), t)
    return out


# -- verification ------------------------------------------------------------

@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""
    residual: ChowClass | None = None

    def to_dict(self, t: TargetGeometry) -> dict:
        d = {"check": self.name, "passed": self.passed, "detail": self.detail}
        if self.residual is not None:
            d["residual"] = render_class(self.residual, t)
        return d


@dataclass
class PresentationReport:
    target: str
    checks: list[Check]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self, t: TargetGeometry) -> dict:
        return {"target": self.target, "ok": self.ok,
                "checks": [c.to_dict(t) for c in self.checks]}


def render_class(a: ChowClass, t: TargetGeometry) -> str:
    parts = []
    for i in a.support():
        c = a[i]
        name = t.basis[i].name
        if c == 1:
            parts.append(name)
        elif c == -1:
            parts.append(f"-{name}")
        else:
            parts.append(f"({format_rational(c)}){name}")
    return " + ".join(parts).replace("+ -", "- ") if parts else "0"


def _structural_checks(t: TargetGeometry) -> list[Check]:
    n = t.size
    names = t.names()
    checks = []

    b0 = t.basis[0]
    ok = b0.cr_degree == 0 and b0.sector == UNTWISTED
    checks.append(Check("unit-class", ok, "" if ok else
                        f"basis[0] ({b0.name}) must be untwisted of degree 0"))

    bad = [(i, j) for i in range(n) for j in range(i + 1, n) if t.pairing[i][j] != t.pairing[j][i]]
    checks.append(Check("pairing-symmetric", not bad, "" if not bad else
                        "asymmetric at ({}, {})".format(names[bad[0][0]], names[bad[0][1]])))

    nondeg = invert_matrix(t.pairing) is not None
    checks.append(Check("pairing-nondegenerate", nondeg, "" if nondeg else "pairing matrix is singular"))

    bad = [(i, j) for i in range(n) for j in range(n) if t.products[i, j] != t.products[j, i]]
    checks.append(Check("commutative", not bad, "" if not bad else
                        "{0}*{1} != {1}*{0}".format(names[bad[0][0]], names[bad[0][1]])))

    bad = [i for i in range(n) if t.products[0, i] != t.cls(i)]
    checks.append(Check("unit-acts-trivially", not bad, "" if not bad else
                        f"1*{names[bad[0]]} != {names[bad[0]]}"))

    detail = ""
    for i, j in cartesian(range(n), repeat=2):
        target_deg = t.basis[i].cr_degree + t.basis[j].cr_degree
        twisted = (t.basis[i].sector == TWISTED) != (t.basis[j].sector == TWISTED)
        want_sector = TWISTED if twisted else UNTWISTED
        for k in t.products[i, j].support():
            if t.basis[k].cr_degree != target_deg:
                detail = f"{names[i]}*{names[j]} has a {names[k]} component of the wrong degree"
            elif t.basis[k].sector != want_sector:
                detail = f"{names[i]}*{names[j]} has a {names[k]} component in the wrong sector"
            if detail:
                break
        if detail:
            break
    checks.append(Check("graded", not detail, detail))

    detail = ""
    for i, j, k in cartesian(range(n), repeat=3):
        left = multiply(t.products[i, j], t.cls(k), t)
        right = multiply(t.cls(i), t.products[j, k], t)
        if left != right:
            detail = f"({names[i]}*{names[j]})*{names[k]} != {names[i]}*({names[j]}*{names[k]})"
            break
    checks.append(Check("associative", not detail, detail))

    bad = [(i, j) for i in range(n) for j in range(n)
           if t.pairing[i][j] != integrate(t.products[i, j], t)]
    checks.append(Check("pairing-is-integral-of-product", not bad, "" if not bad else
                        "pair({0}, {1}) != integral of {0}*{1}".format(names[bad[0][0]], names[bad[0][1]])))
    return checks


def _duality_check(t: TargetGeometry) -> Check:
    by_deg: dict[int, list[int]] = {}
    for b in t.basis:
        by_deg.setdefault(b.cr_degree, []).append(b.index)
    for i in range(t.size):
        for j in range(t.size):
            if t.pairing[i][j] and t.basis[i].cr_degree + t.basis[j].cr_degree != t.dim:
                return Check("poincare-duality", False,
                             f"pairing links {t.basis[i].name} and {t.basis[j].name} "
                             "of non-complementary degrees")
    for deg, rows in sorted(by_deg.items()):
        cols = by_deg.get(t.dim - deg, [])
        if len(rows) != len(cols):
            return Check("poincare-duality", False,
                         f"degree {deg} has {len(rows)} classes but degree {t.dim - deg} has {len(cols)}")
        block = [[t.pairing[r][c] for c in cols] for r in rows]
        if invert_matrix(block) is None:
            return Check("poincare-duality", False, f"pairing block between degrees {deg} and "
                         f"{t.dim - deg} is singular")
    return Check("poincare-duality", True)


def _relation_checks(t: TargetGeometry) -> list[Check]:
    checks = []
    for label, terms in t.relations:
        residual = ChowClass.zero(t.size)
        for coeff, indices in terms:
            residual = residual + coeff * monomial(indices, t)
        checks.append(Check(f"relation {label} = 0", residual.is_zero(),
                            "" if residual.is_zero() else f"residual {render_class(residual, t)}",
                            residual))
    return checks


def verify_presentation(t: TargetGeometry) -> PresentationReport:
    """Check ring axioms, configured relations and Poincare duality.

    Never raises on a bad table; failures are collected in the report.
    """
    checks = _structural_checks(t) + _relation_checks(t) + [_duality_check(t)]
    return PresentationReport(t.name, checks)


# -- config loading ----------------------------------------------------------

def _split_monomial(text: str) -> list[str]:
    for sep in ("·", "*"):
        if sep in text:
            return [s.strip() for s in text.split(sep)]
    return [text.strip()]


def _require(config: dict, key: str):
    if key not in config:
        raise GeometryError(f"config is missing {key!r}")
    return config[key]


def build_target(config: dict, validate: bool = True) -> TargetGeometry:
    """Build a target from a GeometryConfig mapping.

    With ``validate`` (the default) every structural check must pass, else a
    :class:`GeometryError` names the first offending entry.
    """
    if not isinstance(config, dict):
        raise GeometryError("geometry config must be a JSON object")
    try:
        return _build(config, validate)
    except GeometryError:
        raise
    except (KeyError, ValueError, TypeError, ZeroDivisionError) as exc:
        raise GeometryError(f"malformed geometry config: {exc}") from exc


def _build(config: dict, validate: bool) -> TargetGeometry:
    name = str(config.get("name", "unnamed"))
    dim = int(_require(config, "dim"))
    degree_step = parse_rational(_require(config, "degree_step"))
    c1_per_step = parse_rational(_require(config, "c1_per_step"))
    if degree_step <= 0:
        raise GeometryError("degree_step must be positive")

    basis = []
    for i, entry in enumerate(_require(config, "basis")):
        sector = entry.get("sector", UNTWISTED)
        if sector not in SECTORS:
            raise GeometryError(f"unknown sector {sector!r} for {entry.get('name')!r}")
        cr = int(entry["cr_degree"])
        if cr < 0:
            raise GeometryError(f"negative degree for {entry['name']!r}")
        basis.append(BasisClass(i, str(entry["name"]), cr, sector))
    if not basis:
        raise GeometryError("basis is empty")
    names = [b.name for b in basis]
    if len(set(names)) != len(names):
        raise GeometryError("duplicate basis class names")
    index = {b.name: b.index for b in basis}
    n = len(basis)

    def lookup(nm: str) -> int:
        if nm not in index:
            raise GeometryError(f"unknown basis class {nm!r}")
        return index[nm]

    raw = _require(config, "pairing")
    if len(raw) != n or any(len(row) != n for row in raw):
        raise GeometryError(f"pairing must be {n}x{n}")
    pairing = tuple(tuple(parse_rational(x) for x in row) for row in raw)

    products: dict = {}
    for mono, value in config.get("products", {}).items():
        factors = _split_monomial(mono)
        if len(factors) != 2:
            raise GeometryError(f"product key {mono!r} must name two classes")
        i, j = (lookup(f) for f in factors)
        vec = [Fraction(0)] * n
        for out_name, coeff in value.items():
            vec[lookup(out_name)] += parse_rational(coeff)
        cls = ChowClass(vec)
        for a, b in ((i, j), (j, i)):
            if (a, b) in products and products[a, b] != cls:
                raise GeometryError(f"conflicting entries for {names[a]}*{names[b]}")
            products[a, b] = cls
    for i in range(n):
        unit_i = ChowClass.unit_vector(n, i)
        for a, b in ((0, i), (i, 0)):
            products.setdefault((a, b), unit_i)
    for i in range(n):
        for j in range(n):
            products.setdefault((i, j), ChowClass.zero(n))

    divisors = {}
    for nm, value in config.get("divisor_per_step", {}).items():
        i = lookup(nm)
        if basis[i].cr_degree != 1 or basis[i].sector != UNTWISTED:
            raise GeometryError(f"divisor {nm!r} must be an untwisted class of degree 1")
        divisors[i] = parse_rational(value)

    rules = frozenset(config.get("vanishing_rules", []))
    unknown = rules - set(KNOWN_RULES)
    if unknown:
        raise GeometryError(f"unknown vanishing rules: {sorted(unknown)}")

    relations = []
    for rel in config.get("relations", []):
        terms = []
        for mono, coeff in rel.items():
            terms.append((parse_rational(coeff), tuple(lookup(f) for f in _split_monomial(mono))))
        label = " + ".join(f"({format_rational(c)}){'·'.join(names[i] for i in idx)}"
                           for c, idx in terms)
        relations.append((label, tuple(terms)))

    seeds = {}
    for s in config.get("seeds", []):
        key = CorrelatorKey.of((lookup(x) for x in s["insertions"]), int(s["degree_steps"]))
        value = parse_rational(s["value"])
        if key in seeds and seeds[key] != value:
            raise GeometryError(f"conflicting seeds for {s['insertions']}")
        seeds[key] = value

    max_steps = config.get("solve_max_degree_steps")
    t = TargetGeometry(
        name=name,
        basis=tuple(basis),
        pairing=pairing,
        products=products,
        dim=dim,
        c1_per_step=c1_per_step,
        degree_step=degree_step,
        divisor_per_step=divisors,
        vanishing_rules=rules,
        seeds=seeds,
        relations=tuple(relations),
        solve_max_degree_steps=None if max_steps is None else int(max_steps),
        audit_defaults=dict(config.get("audit", {})),
    )
    if validate:
        validate_target(t)
    return t


def validate_target(t: TargetGeometry) -> None:
    """Raise :class:`GeometryError` on the first failed check."""
    for check in verify_presentation(t).checks:
        if not check.passed:
            raise GeometryError(f"{t.name}: {check.name} failed: {check.detail}")
    # imported here: correlators depends on this module
    from .correlators import selection_pass
    from .correlators import format_key
    for key, value in t.seeds.items():
        if value and not selection_pass(key, t):
            raise GeometryError(f"{t.name}: seed {format_key(key, t)} violates the selection rule")


def load_geometry(path) -> TargetGeometry:
    try:
        config = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise GeometryError(f"cannot read geometry config {path}: {exc}") from exc
    return build_target(config)
