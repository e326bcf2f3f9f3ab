"""WDVV associativity constraints and the recursive solver built on them.

For a quadruple ``(i, j, k, l)``, a multiset of extra insertions ``S`` and a
total degree ``D`` the genus-zero WDVV relation reads::

    sum  <x_i, x_j, S1, e_mu>_{d1} g^{mu nu} <e_nu, x_k, x_l, S2>_{d2}
      =  (same with j and k exchanged)

summed over ``S1 + S2 = S`` (with multiplicity weights), ``d1 + d2 = D`` and
the inverse pairing. Every factor is normalized first, so an equation ends up
linear in a handful of irreducible correlators.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from math import comb
from typing import Callable, Iterable, Sequence

from .arith import degree_to_steps, format_rational, rat_pow
from .chowring import TWISTED, UNTWISTED, ChowClass, TargetGeometry, pairing_inverse_entries
from .correlators import (
    WDVV, CorrelatorKey, InvariantTable, format_key, key_to_json, lookup_or_solve, normalize,
)
from .errors import ConsistencyError, CycleError, SolverError, UnsolvableError

Quadruple = tuple[int, int, int, int]


@dataclass
class WdvvEquation:
    """``constant + sum(coeff * <key>) == 0``."""

    quadruple: Quadruple
    extras: tuple[int, ...]
    steps: int
    terms: dict[CorrelatorKey, Fraction] = field(default_factory=dict)
    constant: Fraction = Fraction(0)

    def is_trivial(self) -> bool:
        return not self.terms and self.constant == 0

    def keys(self) -> list[CorrelatorKey]:
        return sorted(self.terms, key=CorrelatorKey.rank)

    def residual(self, value: Callable[[CorrelatorKey], Fraction]) -> Fraction:
        return self.constant + sum((c * value(k) for k, c in self.terms.items()), Fraction(0))

    def context_json(self, t: TargetGeometry) -> dict:
        return {
            "quadruple": [t.basis[i].name for i in self.quadruple],
            "extras": [t.basis[i].name for i in sorted(self.extras, reverse=True)],
            "degree_steps": self.steps,
        }

    def to_json(self, t: TargetGeometry) -> dict:
        return {
            "context": self.context_json(t),
            "constant": format_rational(self.constant),
            "terms": [{"coeff": format_rational(self.terms[k]), "key": key_to_json(k, t)}
                      for k in self.keys()],
        }

    def render(self, t: TargetGeometry) -> str:
        parts = [f"({format_rational(self.terms[k])})*{format_key(k, t)}" for k in self.keys()]
        if self.constant or not parts:
            parts.append(format_rational(self.constant))
        return " + ".join(parts) + " = 0"


def splittings(extras: Iterable[int]):
    """Yield ``(S1, S2, weight)`` over sub-multisets ``S1`` of ``extras``.

    ``weight`` counts the ways to pick ``S1`` from the labelled insertions,
    so the weights sum to ``2**len(extras)``.
    """
    counts = sorted(Counter(extras).items())
    for choice in product(*(range(m + 1) for _, m in counts)):
        s1: list[int] = []
        s2: list[int] = []
        w = 1
        for (c, m), a in zip(counts, choice):
            s1 += [c] * a
            s2 += [c] * (m - a)
            w *= comb(m, a)
        yield tuple(s1), tuple(s2), w


def _grading_possible(quadruple: Sequence[int], extras: Sequence[int], steps: int,
                      t: TargetGeometry) -> bool:
    # Both factors of a term pass selection only if their sum does; the sum
    # is the same for every term, so a failed sum kills the whole equation.
    n = len(quadruple) + len(extras) + 2
    total = sum(t.basis[i].cr_degree for i in (*quadruple, *extras)) + t.dim
    return total == 2 * (t.dim - 3) + steps * t.c1_per_step + n


def generate_wdvv(quadruple: Sequence[int], extras: Iterable[int], steps: int,
                  t: TargetGeometry, table: InvariantTable | None = None,
                  evaluate: Callable[[CorrelatorKey], Fraction] | None = None,
                  unknown: CorrelatorKey | None = None) -> WdvvEquation:
    """Build the WDVV relation for one context as a linear equation.

    With ``unknown`` set (solver mode) every other irreducible key is folded
    into the coefficients through ``evaluate``, leaving ``c * <unknown> +
    constant``. Otherwise keys stay symbolic, and in a product of two
    irreducible factors the lower-ranked one is folded, through ``evaluate``
    if given, else from ``table``.
    """
    quad = tuple(quadruple)
    if len(quad) != 4 or any(not 0 <= i < t.size for i in quad):
        raise ValueError(f"bad quadruple {quadruple!r}")
    extras = tuple(sorted(extras))
    if any(not 0 <= i < t.size for i in extras):
        raise ValueError(f"bad extras {extras!r}")
    eq = WdvvEquation(quad, extras, steps)
    if not _grading_possible(quad, extras, steps, t):
        return eq

    def fold(key: CorrelatorKey) -> Fraction:
        if evaluate is not None:
            return evaluate(key)
        if table is not None and key in table:
            return table[key]
        raise SolverError(f"nonlinear WDVV term: {format_key(key, t)} is unknown")

    inv = pairing_inverse_entries(t)
    terms: dict[CorrelatorKey, Fraction] = defaultdict(Fraction)
    constant = Fraction(0)
    i, j, k, l = quad
    for sign, (a, b, c, d) in ((1, (i, j, k, l)), (-1, (i, k, j, l))):
        for s1, s2, weight in splittings(extras):
            for d1 in range(steps + 1):
                d2 = steps - d1
                for mu, nu, g in inv:
                    left = normalize(CorrelatorKey.of((a, b, mu, *s1), d1), t)
                    if left.key is None and left.coeff == 0:
                        continue
                    right = normalize(CorrelatorKey.of((nu, c, d, *s2), d2), t)
                    if right.key is None and right.coeff == 0:
                        continue
                    coeff = sign * weight * g * left.coeff * right.coeff
                    symbolic = [x for x in (left.key, right.key) if x is not None]
                    if unknown is not None:
                        if symbolic.count(unknown) > 1:
                            raise SolverError(f"{format_key(unknown, t)} appears quadratically")
                        for key in symbolic:
                            if key != unknown:
                                coeff *= evaluate(key)
                        symbolic = [x for x in symbolic if x == unknown]
                    elif len(symbolic) == 2:
                        symbolic.sort(key=CorrelatorKey.rank)
                        coeff *= fold(symbolic.pop(0))
                    if not coeff:
                        continue
                    if symbolic:
                        terms[symbolic[0]] += coeff
                    else:
                        constant += coeff
    eq.terms = {key: c for key, c in terms.items() if c}
    eq.constant = constant
    return eq


# -- solving -----------------------------------------------------------------

def divisor_classes(t: TargetGeometry) -> list[int]:
    return [b.index for b in t.basis if b.cr_degree == 1 and b.sector == UNTWISTED]


def default_strategy(key: CorrelatorKey, t: TargetGeometry):
    """Pick a WDVV context isolating ``key``.

    Writes one insertion ``e`` as a component of a product ``x*y`` of two
    untwisted divisors and uses the quadruple ``(x, y, u, v)`` where ``u, v``
    are two further insertions of ``key``; the remaining insertions become
    extras. For ``<p, g^(2g+1)>`` on P(1,1,2) this is ``(h, h, g, g)`` with
    extras ``g^(2g-1)``; for ``<P^(3d-1)>`` on P2 it is ``(H, H, P, P)``.
    Returns ``None`` when no such context exists.
    """
    ins = key.insertions
    if key.steps == 0 or len(ins) < 3:
        return None
    divs = divisor_classes(t)
    for e in sorted(set(ins), reverse=True):
        for x in divs:
            for y in divs:
                if y < x or not t.products[x, y][e]:
                    continue
                rest = list(ins)
                rest.remove(e)
                return (x, y, rest[0], rest[1]), tuple(rest[2:])
    return None


def solve_correlator(key: CorrelatorKey, t: TargetGeometry, table: InvariantTable,
                     strategy=default_strategy) -> Fraction:
    """Solve for an irreducible correlator and memoize it as ``wdvv``.

    Every other correlator in the chosen equation must rank strictly below
    ``key``; they are resolved recursively first.
    """
    if key in table:
        return table[key]
    if key in table._active:
        raise CycleError(f"{format_key(key, t)} revisited while being solved")
    if key.steps == 0:
        raise UnsolvableError(f"{format_key(key, t)}: degree-zero invariants are not "
                              "determined by WDVV here")
    if t.solve_max_degree_steps is not None and key.steps > t.solve_max_degree_steps:
        raise UnsolvableError(f"{format_key(key, t)}: no seeds or strategy for this degree on {t.name}")
    rank = key.rank()

    def resolve(other: CorrelatorKey) -> Fraction:
        if other.rank() >= rank:
            raise UnsolvableError(f"solving {format_key(key, t)} needs {format_key(other, t)}, "
                                  "which does not rank lower")
        return lookup_or_solve(other, table, t)

    table._active.add(key)
    try:
        context = strategy(key, t)
        if context is None:
            raise UnsolvableError(f"{format_key(key, t)}: no WDVV context isolates this key")
        quadruple, extras = context
        eq = generate_wdvv(quadruple, extras, key.steps, t, table, evaluate=resolve, unknown=key)
    finally:
        table._active.discard(key)
    coeff = eq.terms.get(key, 0)
    if not coeff:
        raise UnsolvableError(f"{format_key(key, t)}: WDVV equation degenerates to "
                              f"{eq.render(t)}")
    value = -eq.constant / coeff
    table.record(key, value, WDVV)
    table.solves += 1
    return value


# -- headline computations ----------------------------------------------------

def twisted_index(t: TargetGeometry) -> int:
    tw = [b.index for b in t.basis if b.sector == TWISTED]
    if len(tw) != 1:
        raise ValueError(f"{t.name} has no unique twisted class")
    return tw[0]


def hodge_key(g: int, t: TargetGeometry) -> CorrelatorKey:
    """``<p, gamma^(2g+1)>`` in degree 1/2."""
    if g < 0:
        raise ValueError("genus must be non-negative")
    steps = degree_to_steps(Fraction(1, 2), t.degree_step)
    return CorrelatorKey.of((t.point_index(),) + (twisted_index(t),) * (2 * g + 1), steps)


def hodge_closed_form(g: int) -> Fraction:
    return rat_pow(Fraction(-1, 4), g)


def hodge_integral(g: int, t: TargetGeometry, table: InvariantTable | None = None) -> Fraction:
    """Hyperelliptic Hodge integral for genus ``g`` via the WDVV recursion.

    The recursion value is compared with ``(-1/4)**g``; a mismatch raises
    :class:`ConsistencyError`.
    """
    if table is None:
        table = InvariantTable.for_target(t)
    for h in range(g):  # keep the recursion shallow
        lookup_or_solve(hodge_key(h, t), table, t)
    value = lookup_or_solve(hodge_key(g, t), table, t)
    expected = hodge_closed_form(g)
    if value != expected:
        raise ConsistencyError(f"genus {g}: recursion gives {format_rational(value)}, "
                               f"closed form {format_rational(expected)}")
    return value


@dataclass
class HodgeRow:
    g: int
    value: Fraction
    closed_form: Fraction

    @property
    def match(self) -> bool:
        return self.value == self.closed_form


def hodge_table(gmax: int, t: TargetGeometry, table: InvariantTable) -> list[HodgeRow]:
    rows = []
    for g in range(gmax + 1):
        rows.append(HodgeRow(g, lookup_or_solve(hodge_key(g, t), table, t), hodge_closed_form(g)))
    return rows


def kontsevich_key(d: int, t: TargetGeometry) -> CorrelatorKey:
    """All-point-class correlator of degree ``d`` allowed by the grading."""
    n = Fraction(t.dim - 3 + d * t.c1_per_step, t.dim - 1)
    if n.denominator != 1 or n < 0:
        raise ValueError(f"no point-class correlator in degree steps {d} on {t.name}")
    return CorrelatorKey.of((t.point_index(),) * int(n), d)


def kontsevich_numbers(dmax: int, t: TargetGeometry, table: InvariantTable | None = None) -> list[Fraction]:
    """``N_d`` for ``d = 1..dmax``, from the seeded ``N_1``."""
    if dmax < 1:
        raise ValueError("dmax must be at least 1")
    if table is None:
        table = InvariantTable.for_target(t)
    return [lookup_or_solve(kontsevich_key(d, t), table, t) for d in range(1, dmax + 1)]


# -- quantum product ----------------------------------------------------------

def quantum_product(a: int, b: int, t: TargetGeometry, table: InvariantTable,
                    max_steps: int) -> dict[int, ChowClass]:
    """Small quantum product of two basis classes, by degree steps.

    ``a*b = sum_d q^d sum <a, b, e_mu>_d g^{mu nu} e_nu``, truncated.
    """
    out = {}
    for d in range(max_steps + 1):
        vec = [Fraction(0)] * t.size
        for mu, nu, g in pairing_inverse_entries(t):
            v = lookup_or_solve(CorrelatorKey.of((a, b, mu), d), table, t)
            if v:
                vec[nu] += v * g
        out[d] = ChowClass(vec)
    return out


def quantum_multiply(x: dict[int, ChowClass], y: dict[int, ChowClass], t: TargetGeometry,
                     table: InvariantTable, max_steps: int) -> dict[int, ChowClass]:
    """Product of two q-truncated classes."""
    out = {d: ChowClass.zero(t.size) for d in range(max_steps + 1)}
    for dx, cx in x.items():
        for dy, cy in y.items():
            if dx + dy > max_steps:
                continue
            for i in cx.support():
                for j in cy.support():
                    qp = quantum_product(i, j, t, table, max_steps - dx - dy)
                    for dq, cls in qp.items():
                        out[dx + dy + dq] = out[dx + dy + dq] + (cx[i] * cy[j]) * cls
    return out


# -- audit ---------------------------------------------------------------------

@dataclass
class AuditBounds:
    extras_class: int
    max_extras: int
    degree_steps: tuple[int, ...]

    @classmethod
    def defaults(cls, t: TargetGeometry, **overrides) -> "AuditBounds":
        d = dict(t.audit_defaults)
        d.update({k: v for k, v in overrides.items() if v is not None})
        if "extras_class" not in d:
            raise ValueError(f"no audit defaults for {t.name}; give extras_class")
        extras = d["extras_class"]
        return cls(
            extras_class=extras if isinstance(extras, int) else t.index_of(extras),
            max_extras=int(d.get("max_extras", 0)),
            degree_steps=tuple(int(s) for s in d.get("degree_steps", (1,))),
        )


@dataclass
class Violation:
    equation: WdvvEquation
    residual: Fraction | None
    values: dict
    error: str = ""

    def to_json(self, t: TargetGeometry) -> dict:
        d = self.equation.to_json(t)
        for term, key in zip(d["terms"], self.equation.keys()):
            if key in self.values:
                term["value"] = format_rational(self.values[key])
        d["residual"] = None if self.residual is None else format_rational(self.residual)
        if self.error:
            d["error"] = self.error
        return d


@dataclass
class AuditReport:
    target: str
    equations: int = 0
    nontrivial: int = 0
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self, t: TargetGeometry) -> list:
        return [v.to_json(t) for v in self.violations]


def wdvv_residual_audit(t: TargetGeometry, table: InvariantTable,
                        bounds: AuditBounds | None = None) -> AuditReport:
    """Evaluate every WDVV equation within ``bounds`` against ``table``.

    All quadruples of basis classes are used, with extras ``c^m`` for
    ``m <= max_extras`` and each listed total degree. Missing irreducible
    values are solved on the way and memoized.
    """
    if bounds is None:
        bounds = AuditBounds.defaults(t)
    report = AuditReport(t.name)

    def value(key: CorrelatorKey) -> Fraction:
        return lookup_or_solve(key, table, t)

    for steps in bounds.degree_steps:
        for m in range(bounds.max_extras + 1):
            extras = (bounds.extras_class,) * m
            for quad in product(range(t.size), repeat=4):
                report.equations += 1
                try:
                    eq = generate_wdvv(quad, extras, steps, t, table, evaluate=value)
                except SolverError as exc:
                    eq = WdvvEquation(quad, extras, steps)
                    report.violations.append(Violation(eq, None, {}, str(exc)))
                    continue
                if eq.is_trivial():
                    continue
                report.nontrivial += 1
                try:
                    values = {k: value(k) for k in eq.terms}
                except SolverError as exc:
                    report.violations.append(Violation(eq, None, {}, str(exc)))
                    continue
                residual = eq.residual(values.__getitem__)
                if residual:
                    report.violations.append(Violation(eq, residual, values))
    return report
