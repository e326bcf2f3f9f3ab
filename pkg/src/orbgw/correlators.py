"""Genus-zero correlators: selection rule, axioms, memo table.

:func:`normalize` applies, in a fixed order, the selection rule, the unit
axiom, the divisor axiom, degree-zero three-point evaluation through the ring,
and the target's configured vanishing rules. What survives is a coefficient
times an irreducible key, which :func:`lookup_or_solve` takes from the table
or hands to the WDVV solver.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import groupby
from typing import Iterable, NamedTuple

from .arith import format_rational, parse_rational, steps_to_degree
from .chowring import TWISTED, UNTWISTED, TargetGeometry
from .errors import CacheError
from .keys import CorrelatorKey

__all__ = [
    "CorrelatorKey", "InvariantTable", "Reduced", "selection_pass", "normalize",
    "degree_zero_eval", "lookup_or_solve", "evaluate", "evaluate_with_provenance",
    "format_key", "key_to_json", "key_from_json", "make_key",
]

SEED, AXIOM, WDVV, SELECTION = "seed", "axiom", "wdvv", "selection"
TABLE_TAGS = (SEED, AXIOM, WDVV)


class Reduced(NamedTuple):
    """Outcome of :func:`normalize`.

    ``key is None`` means the correlator evaluated to ``coeff`` outright;
    otherwise its value is ``coeff`` times that of the irreducible ``key``.
    ``rule`` names the last rule that fired, if any.
    """

    coeff: Fraction
    key: CorrelatorKey | None
    rule: str | None = None

    @property
    def is_value(self) -> bool:
        return self.key is None


ZERO = Fraction(0)
ONE = Fraction(1)


def selection_pass(key: CorrelatorKey, t: TargetGeometry) -> bool:
    """Total Chen-Ruan degree equals dim - 3 + c1(degree) + n."""
    total = sum(t.basis[i].cr_degree for i in key.insertions)
    return total == t.dim - 3 + key.steps * t.c1_per_step + len(key.insertions)


def degree_zero_eval(key: CorrelatorKey, t: TargetGeometry) -> Fraction:
    """Triple ring integral for a three-point degree-zero key."""
    if key.steps != 0 or len(key.insertions) != 3:
        raise ValueError("degree_zero_eval needs a three-point degree-zero key")
    i, j, k = key.insertions
    prod = t.products[i, j]
    return sum((prod[m] * t.pairing[m][k] for m in prod.support()), ZERO)


def _degree_zero_vanishing(ins: tuple[int, ...], t: TargetGeometry) -> str | None:
    rules = t.vanishing_rules
    twisted = [i for i in ins if t.basis[i].sector == TWISTED]
    others = [i for i in ins if t.basis[i].sector != TWISTED]
    if "deg0-twisted-pair" in rules and twisted and len(others) == 1:
        if not (len(twisted) == 2 and others[0] == 0):
            return "deg0-twisted-pair"
    if "deg0-twisted-divisor" in rules and twisted and any(
            t.basis[i].cr_degree == 1 and t.basis[i].sector == UNTWISTED for i in others):
        return "deg0-twisted-divisor"
    if "deg0-n4" in rules and len(ins) >= 4:
        return "deg0-n4"
    return None


def normalize(key: CorrelatorKey, t: TargetGeometry) -> Reduced:
    cache = t._cache.setdefault("normalize", {})
    r = cache.get(key)
    if r is None:
        r = cache[key] = _normalize(key, t)
    return r


def _normalize(key: CorrelatorKey, t: TargetGeometry) -> Reduced:
    if not selection_pass(key, t):
        return Reduced(ZERO, None, "selection")

    ins, steps = key.insertions, key.steps
    if 0 in ins:
        if len(ins) == 3 and steps == 0:
            a, b = ins[1], ins[2]
            return Reduced(t.pairing[a][b], None, "unit")
        return Reduced(ZERO, None, "unit")

    coeff = ONE
    rule = None
    if steps > 0 and t.divisor_per_step:
        kept = []
        for i in ins:
            if i in t.divisor_per_step:
                coeff *= steps * t.divisor_per_step[i]
            else:
                kept.append(i)
        if len(kept) != len(ins):
            rule = "divisor"
            if coeff == 0:
                return Reduced(ZERO, None, rule)
            ins = tuple(kept)
            key = CorrelatorKey(ins, steps)

    if steps == 0:
        if len(ins) < 3:
            return Reduced(ZERO, None, "unstable")
        if len(ins) == 3:
            return Reduced(degree_zero_eval(key, t), None, "degree0")
        tag = _degree_zero_vanishing(ins, t)
        if tag:
            return Reduced(ZERO, None, tag)

    if "parity" in t.vanishing_rules:
        twisted = sum(1 for i in ins if t.basis[i].sector == TWISTED)
        if twisted % 2 != steps % 2:
            return Reduced(ZERO, None, "parity")

    return Reduced(coeff, key, rule)


class InvariantTable:
    """Memoized correlator values with provenance.

    A key is recorded at most once. ``solves`` counts WDVV solves performed
    against this table.
    """

    def __init__(self):
        self.entries: dict[CorrelatorKey, Fraction] = {}
        self.provenance: dict[CorrelatorKey, str] = {}
        self.solves = 0
        self._active: set[CorrelatorKey] = set()

    @classmethod
    def for_target(cls, t: TargetGeometry) -> "InvariantTable":
        table = cls()
        for key, value in t.seeds.items():
            table.record(key, value, SEED)
        return table

    def record(self, key: CorrelatorKey, value, tag: str) -> None:
        if tag not in TABLE_TAGS:
            raise ValueError(f"unknown provenance tag {tag!r}")
        if key in self.entries:
            raise ValueError(f"{key} is already recorded ({self.provenance[key]})")
        self.entries[key] = Fraction(value)
        self.provenance[key] = tag

    def get(self, key: CorrelatorKey):
        return self.entries.get(key)

    def __contains__(self, key) -> bool:
        return key in self.entries

    def __getitem__(self, key) -> Fraction:
        return self.entries[key]

    def __len__(self) -> int:
        return len(self.entries)

    def keys(self) -> list[CorrelatorKey]:
        return sorted(self.entries, key=CorrelatorKey.rank)

    def same_as(self, other: "InvariantTable") -> bool:
        return self.entries == other.entries and self.provenance == other.provenance


def lookup_or_solve(key: CorrelatorKey, table: InvariantTable, t: TargetGeometry) -> Fraction:
    if key in table.entries:
        return table.entries[key]
    r = normalize(key, t)
    if r.key is None:
        return r.coeff
    if r.key in table.entries:
        return r.coeff * table.entries[r.key]
    from .wdvv import solve_correlator  # wdvv imports this module
    return r.coeff * solve_correlator(r.key, t, table)


def evaluate_with_provenance(key: CorrelatorKey, table: InvariantTable,
                             t: TargetGeometry) -> tuple[Fraction, str]:
    """Value plus a tag saying where it came from.

    Tags: ``seed`` and ``wdvv`` for table entries, ``selection`` for keys
    killed by the grading rule, ``axiom`` for anything else reduced by rule.
    """
    if key in table.entries:
        return table.entries[key], table.provenance[key]
    r = normalize(key, t)
    if r.key is None:
        return r.coeff, SELECTION if r.rule == "selection" else AXIOM
    value = lookup_or_solve(key, table, t)
    if r.key == key and r.coeff == 1:
        return value, table.provenance[key]
    return value, AXIOM


def make_key(names: Iterable[str], steps: int, t: TargetGeometry) -> CorrelatorKey:
    """Key from class names; raises ``KeyError`` on an unknown name."""
    return CorrelatorKey.of((t.index_of(nm) for nm in names), steps)


def evaluate(t: TargetGeometry, table: InvariantTable, names: Iterable[str], steps: int) -> Fraction:
    return lookup_or_solve(make_key(names, steps, t), table, t)


def _display_order(key: CorrelatorKey) -> list[int]:
    return sorted(key.insertions, reverse=True)


def format_key(key: CorrelatorKey, t: TargetGeometry) -> str:
    """Text rendering such as ``<p, g^3 | d=1/2>``."""
    parts = []
    for i, grp in groupby(_display_order(key)):
        m = len(list(grp))
        name = t.basis[i].name
        parts.append(name if m == 1 else f"{name}^{m}")
    degree = format_rational(steps_to_degree(key.steps, t.degree_step))
    return f"<{', '.join(parts)} | d={degree}>"


def key_to_json(key: CorrelatorKey, t: TargetGeometry) -> dict:
    return {"insertions": [t.basis[i].name for i in _display_order(key)],
            "degree_steps": key.steps}


def key_from_json(obj: dict, t: TargetGeometry) -> CorrelatorKey:
    return make_key(obj["insertions"], int(obj["degree_steps"]), t)


# -- persistence -------------------------------------------------------------

CACHE_SCHEMA = 1


def table_to_json(table: InvariantTable, t: TargetGeometry) -> dict:
    rows = []
    for key in table.keys():
        row = key_to_json(key, t)
        row["value"] = format_rational(table.entries[key])
        row["provenance"] = table.provenance[key]
        rows.append(row)
    return {"schema": CACHE_SCHEMA, "target": t.name, "entries": rows}


def table_from_json(obj, t: TargetGeometry) -> InvariantTable:
    """Rebuild a table for ``t`` from its JSON form.

    The target's seeds are always present; cached seed values must agree with
    them. Any nonzero entry that fails the selection rule is rejected.
    """
    table = InvariantTable.for_target(t)
    if not isinstance(obj, dict):
        raise CacheError("cache must be a JSON object")
    if not obj:
        return table
    if obj.get("schema") != CACHE_SCHEMA:
        raise CacheError(f"unsupported cache schema {obj.get('schema')!r}")
    if obj.get("target", t.name) != t.name:
        raise CacheError(f"cache is for target {obj.get('target')!r}, not {t.name!r}")
    entries = obj.get("entries", [])
    if not isinstance(entries, list):
        raise CacheError("cache entries must be a list")
    for row in entries:
        try:
            key = key_from_json(row, t)
            value = parse_rational(row["value"])
            tag = row.get("provenance", WDVV)
        except (KeyError, TypeError, ValueError, ZeroDivisionError, AttributeError) as exc:
            raise CacheError(f"malformed cache entry {row!r}: {exc}") from exc
        if tag not in TABLE_TAGS:
            raise CacheError(f"unknown provenance {tag!r} in cache")
        if value and not selection_pass(key, t):
            raise CacheError(f"cached value for {format_key(key, t)} violates the selection rule")
        if key in table.entries:
            if table.entries[key] != value or table.provenance[key] != tag:
                raise CacheError(f"cache disagrees with seed {format_key(key, t)}")
            continue
        if tag == SEED:
            raise CacheError(f"{format_key(key, t)} is tagged seed but is not a seed of {t.name}")
        table.record(key, value, tag)
    return table
