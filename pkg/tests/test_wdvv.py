from fractions import Fraction
from itertools import product

import pytest

from oracles import KONTSEVICH_1_TO_6, hodge_by_halving, kontsevich_closed_recursion
from orbgw.chowring import build_target
from orbgw.correlators import CorrelatorKey, InvariantTable, lookup_or_solve, make_key
from orbgw.errors import ConsistencyError, CycleError, UnsolvableError
from orbgw.targets import builtin_config
from orbgw.wdvv import (
    AuditBounds, default_strategy, generate_wdvv, hodge_integral, hodge_key, hodge_table,
    kontsevich_numbers, quantum_multiply, quantum_product, solve_correlator, splittings,
    wdvv_residual_audit,
)


def idx(t, names):
    return [t.index_of(n) for n in names]


def test_oracle_frozen_values():
    assert kontsevich_closed_recursion(6) == KONTSEVICH_1_TO_6


def test_hhgg_instance_equation(t112, table112):
    eq = generate_wdvv(idx(t112, "hhgg"), idx(t112, "g"), 1, t112, table112)
    assert eq.constant == 0
    assert eq.terms == {
        make_key("p g g g".split(), 1, t112): Fraction(1, 2),
        make_key(["p", "g"], 1, t112): Fraction(1, 8),
    }


@pytest.mark.parametrize("g", range(1, 8))
def test_hhgg_instance_general_g(t112, table112, g):
    # <p, g^(2g+1)> * 1/2 + <p, g^(2g-1)> * 1/8 = 0 for every g
    eq = generate_wdvv(idx(t112, "hhgg"), idx(t112, "g" * (2 * g - 1)), 1, t112, table112)
    assert eq.terms == {
        make_key(["p"] + ["g"] * (2 * g + 1), 1, t112): Fraction(1, 2),
        make_key(["p"] + ["g"] * (2 * g - 1), 1, t112): Fraction(1, 8),
    }


def test_trivial_unit_equation(t112, table112):
    assert generate_wdvv([0, 0, 0, 0], [], 0, t112, table112).is_trivial()


def test_p2_degree_two_equation(tp2, tablep2):
    eq = generate_wdvv(idx(tp2, "HHPP"), idx(tp2, "PP"), 2, tp2, tablep2)
    n1, n2 = make_key("PP", 1, tp2), make_key("PPPPP", 2, tp2)
    assert eq.terms == {n2: 1, n1: -1} and eq.constant == 0
    assert eq.residual(lambda k: {n1: 1, n2: 1}[k]) == 0


def test_strategy_picks_hhgg(t112):
    key = hodge_key(3, t112)
    quad, extras = default_strategy(key, t112)
    assert quad == tuple(idx(t112, "hhgg"))
    assert extras == tuple(idx(t112, "g" * 5))


def test_strategy_p2(tp2):
    quad, extras = default_strategy(make_key("P" * 8, 3, tp2), tp2)
    assert quad == tuple(idx(tp2, "HHPP")) and extras == tuple(idx(tp2, "P" * 5))


@pytest.mark.parametrize("g, value", [(1, Fraction(-1, 4)), (2, Fraction(1, 16)), (3, Fraction(-1, 64))])
def test_solver_values(t112, table112, g, value):
    assert solve_correlator(hodge_key(g, t112), t112, table112) == value
    assert table112.provenance[hodge_key(g, t112)] == "wdvv"


@pytest.mark.parametrize("g, value", [(0, 1), (1, Fraction(-1, 4)), (5, Fraction(-1, 1024))])
def test_hodge_integral(t112, g, value):
    assert hodge_integral(g, t112) == value


def test_hodge_table_against_independent_power(t112, table112):
    for row in hodge_table(64, t112, table112):
        assert row.value == hodge_by_halving(row.g)
        assert row.match


def test_hodge_consistency_failure_is_fatal(t112):
    table = InvariantTable.for_target(t112)
    table.record(hodge_key(1, t112), Fraction(7), "wdvv")
    with pytest.raises(ConsistencyError):
        hodge_integral(1, t112, table)


def test_kontsevich(tp2):
    values = kontsevich_numbers(6, tp2)
    assert values == KONTSEVICH_1_TO_6
    assert kontsevich_numbers(7, tp2)[-1] == kontsevich_closed_recursion(7)[-1]


def test_kontsevich_bad_dmax(tp2):
    with pytest.raises(ValueError):
        kontsevich_numbers(0, tp2)


def test_strategy_termination(t112, table112):
    # every key resolved under a parent ranks below it; the solver enforces
    # this and raises otherwise, so a clean solve certifies the property
    top = hodge_key(20, t112)
    lookup_or_solve(top, table112, t112)
    ranks = sorted(k.rank() for k in table112.entries)
    assert ranks[-1] == top.rank()
    assert len(ranks) == 21


def test_rank_violation_detected(t112, table112):
    key = hodge_key(2, t112)

    def bad_strategy(k, t):
        # an equation that needs a higher-ranked key
        return tuple(idx(t, "hhgg")), tuple(idx(t, "g" * 5))

    with pytest.raises(UnsolvableError, match="rank"):
        solve_correlator(key, t112, table112, strategy=bad_strategy)


def test_cycle_detected(t112, table112):
    key = hodge_key(2, t112)

    def reentrant(k, t):
        solve_correlator(k, t, table112)

    with pytest.raises(CycleError):
        solve_correlator(key, t112, table112, strategy=reentrant)


def test_degenerate_equation_unsolvable(t112, table112):
    def unit_strategy(k, t):
        return (0, 0, 0, 0), ()

    with pytest.raises(UnsolvableError, match="degenerates"):
        solve_correlator(hodge_key(1, t112), t112, table112, strategy=unit_strategy)


def test_higher_degree_unsolvable(t112, table112):
    key = make_key("p p p g g".split(), 2, t112)
    with pytest.raises(UnsolvableError):
        lookup_or_solve(key, table112, t112)


def test_antisymmetry(t112, table112, tp2, tablep2):
    for t, table, extras_name, steps_list in ((t112, table112, "g", [1]), (tp2, tablep2, "P", [1, 2])):
        for steps in steps_list:
            for m in range(5):
                extras = [t.index_of(extras_name)] * m
                for i, j, k, l in product(range(t.size), repeat=4):
                    a = generate_wdvv((i, j, k, l), extras, steps, t, table,
                                      evaluate=lambda key: lookup_or_solve(key, table, t))
                    b = generate_wdvv((i, k, j, l), extras, steps, t, table,
                                      evaluate=lambda key: lookup_or_solve(key, table, t))
                    assert a.terms == {key: -c for key, c in b.terms.items()}
                    assert a.constant == -b.constant


def test_quadruple_symmetry(t112, table112):
    extras = [t112.index_of("g")] * 3
    for i, j, k, l in product(range(4), repeat=4):
        a = generate_wdvv((i, j, k, l), extras, 1, t112, table112)
        b = generate_wdvv((j, i, l, k), extras, 1, t112, table112)
        assert a.terms == b.terms and a.constant == b.constant


@pytest.mark.parametrize("m", range(0, 12))
def test_multinomial_conservation(m):
    weights = [w for _, _, w in splittings([2] * m)]
    assert len(weights) == m + 1
    assert sum(weights) == 2 ** m


def test_mixed_splittings():
    out = list(splittings([1, 2, 2]))
    assert sum(w for *_, w in out) == 8
    assert ((2,), (1, 2), 2) in out


def test_audit_p112(t112, table112):
    report = wdvv_residual_audit(t112, table112)
    assert report.ok
    assert report.equations == 4 ** 4 * 10
    assert report.nontrivial > 0


def test_audit_p2(tp2, tablep2):
    bounds = AuditBounds.defaults(tp2)
    assert bounds.degree_steps == (0, 1, 2, 3, 4)
    report = wdvv_residual_audit(tp2, tablep2, bounds)
    assert report.ok and report.nontrivial > 0


def test_audit_detects_corruption(t112, table112):
    assert wdvv_residual_audit(t112, table112).ok
    table112.entries[make_key(["p", "g"], 1, t112)] = Fraction(2)
    report = wdvv_residual_audit(t112, table112)
    assert report.violations
    v = report.violations[0].to_json(t112)
    assert v["residual"] != "0" and v["terms"]


def test_p2_quantum_associativity(tp2, tablep2):
    dmax = 3
    basis = {i: {0: tp2.cls(i)} for i in range(tp2.size)}
    for a, b, c in product(range(tp2.size), repeat=3):
        ab = quantum_multiply(basis[a], basis[b], tp2, tablep2, dmax)
        bc = quantum_multiply(basis[b], basis[c], tp2, tablep2, dmax)
        left = quantum_multiply(ab, basis[c], tp2, tablep2, dmax)
        right = quantum_multiply(basis[a], bc, tp2, tablep2, dmax)
        assert left == right
    # H*H*H = q in small quantum cohomology of the plane
    H = tp2.index_of("H")
    hh = quantum_product(H, H, tp2, tablep2, dmax)
    hhh = quantum_multiply(hh, basis[H], tp2, tablep2, dmax)
    assert hhh[0].is_zero() and hhh[1] == tp2.cls(0) and hhh[2].is_zero()


def test_p112_quantum_associativity(t112, table112):
    basis = {i: {0: t112.cls(i)} for i in range(t112.size)}
    for a, b, c in product(range(t112.size), repeat=3):
        ab = quantum_multiply(basis[a], basis[b], t112, table112, 1)
        bc = quantum_multiply(basis[b], basis[c], t112, table112, 1)
        assert quantum_multiply(ab, basis[c], t112, table112, 1) == \
            quantum_multiply(basis[a], bc, t112, table112, 1)


def test_recursion_insensitive_to_optional_rules():
    cfg = builtin_config("p112")
    cfg["vanishing_rules"] = []
    bare = build_target(cfg)
    table = InvariantTable.for_target(bare)
    for g in range(10):
        assert hodge_integral(g, bare, table) == hodge_by_halving(g)


def test_without_parity_even_sector_is_unsolvable_not_zero():
    cfg = builtin_config("p112")
    cfg["vanishing_rules"] = ["deg0-n4"]
    t = build_target(cfg)
    table = InvariantTable.for_target(t)
    with pytest.raises(UnsolvableError):
        lookup_or_solve(make_key("p g g".split(), 1, t), table, t)
