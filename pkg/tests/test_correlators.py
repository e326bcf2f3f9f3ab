import random
from fractions import Fraction

import pytest

from orbgw.correlators import (
    CorrelatorKey, InvariantTable, degree_zero_eval, evaluate, evaluate_with_provenance,
    format_key, key_from_json, key_to_json, lookup_or_solve, make_key, normalize,
    selection_pass, table_from_json, table_to_json,
)
from orbgw.errors import CacheError

half = Fraction(1, 2)


def K(t, names, steps):
    return make_key(names, steps, t)


@pytest.mark.parametrize("names, steps, ok", [
    ("p g".split(), 1, True),
    ("p p".split(), 1, False),
    ("p g g g".split(), 1, True),
    ("1 g g".split(), 0, True),
    ("p".split(), 0, False),
])
def test_selection(t112, names, steps, ok):
    assert selection_pass(K(t112, names, steps), t112) is ok


def test_key_canonical():
    assert CorrelatorKey.of([3, 2, 2, 1], 1) == CorrelatorKey.of([2, 1, 3, 2], 1)
    with pytest.raises(ValueError):
        CorrelatorKey.of([1], -1)


def test_normalize_divisor_twice(t112):
    r = normalize(K(t112, "h h p g".split(), 1), t112)
    assert r.coeff == Fraction(1, 4)
    assert r.key == K(t112, ["p", "g"], 1)


def test_normalize_unit_pairing(t112):
    r = normalize(K(t112, ["1", "g", "g"], 0), t112)
    assert r.is_value and r.coeff == half


def test_normalize_twisted_with_divisor_vanishes(t112):
    r = normalize(K(t112, "g g g g h p".split(), 0), t112)
    assert r.is_value and r.coeff == 0


def test_normalize_unit_kills_higher(t112):
    assert normalize(K(t112, "1 p g".split(), 1), t112).coeff == 0
    assert normalize(K(t112, "1 1 p".split(), 0), t112).coeff == 1


def test_normalize_parity(t112):
    # passes selection; only the twisted-count parity kills it
    r = normalize(K(t112, "p g g".split(), 1), t112)
    assert r.coeff == 0 and r.rule == "parity"


def test_normalize_irreducible(t112):
    k = K(t112, "p g g g".split(), 1)
    assert normalize(k, t112) == (1, k, None)


def test_degree_zero_eval(t112):
    assert degree_zero_eval(K(t112, "g g p".split(), 0), t112) == 0
    assert degree_zero_eval(K(t112, "h h p".split(), 0), t112) == 0
    assert degree_zero_eval(K(t112, "1 h h".split(), 0), t112) == half
    assert degree_zero_eval(K(t112, "h h g".split(), 0), t112) == 0
    with pytest.raises(ValueError):
        degree_zero_eval(K(t112, "h h".split(), 0), t112)


def test_lookup_examples(t112, table112):
    assert lookup_or_solve(K(t112, ["p", "g"], 1), table112, t112) == 1
    assert lookup_or_solve(K(t112, "p g g g".split(), 1), table112, t112) == Fraction(-1, 4)
    assert table112.provenance[K(t112, "p g g g".split(), 1)] == "wdvv"
    before = table112.solves
    assert lookup_or_solve(K(t112, ["p", "p"], 1), table112, t112) == 0
    assert table112.solves == before


def test_provenance_tags(t112, table112):
    assert evaluate_with_provenance(K(t112, ["p", "g"], 1), table112, t112) == (1, "seed")
    assert evaluate_with_provenance(K(t112, ["p", "p"], 1), table112, t112) == (0, "selection")
    assert evaluate_with_provenance(K(t112, "p g g g".split(), 1), table112, t112) == (Fraction(-1, 4), "wdvv")
    assert evaluate_with_provenance(K(t112, "h p g".split(), 1), table112, t112) == (half, "axiom")


def test_table_records_once(t112, table112):
    with pytest.raises(ValueError):
        table112.record(K(t112, ["p", "g"], 1), 3, "wdvv")
    with pytest.raises(ValueError):
        table112.record(K(t112, ["p", "g", "g", "g"], 1), 3, "guess")


def _random_key(rng, t, max_n=8, max_steps=3):
    n = rng.randint(0, max_n)
    return [rng.randrange(t.size) for _ in range(n)], rng.randint(0, max_steps)


def test_permutation_invariance(t112, table112):
    rng = random.Random(11)
    checked = 0
    while checked < 1000:
        ins, steps = _random_key(rng, t112, max_n=9, max_steps=1)
        shuffled = ins[:]
        rng.shuffle(shuffled)
        a = evaluate(t112, table112, [t112.basis[i].name for i in ins], steps)
        b = evaluate(t112, table112, [t112.basis[i].name for i in shuffled], steps)
        assert a == b
        checked += 1


def test_selection_soundness(t112, tp2):
    rng = random.Random(5)
    for t in (t112, tp2):
        table = InvariantTable.for_target(t)
        failing = 0
        while failing < 1000:
            ins, steps = _random_key(rng, t)
            key = CorrelatorKey.of(ins, steps)
            if selection_pass(key, t):
                continue
            assert lookup_or_solve(key, table, t) == 0
            failing += 1
        assert table.solves == 0


def test_divisor_consistency(t112, table112):
    for g in range(12):
        lookup_or_solve(K(t112, ["p"] + ["g"] * (2 * g + 1), 1), table112, t112)
    solved = [k for k, tag in table112.provenance.items() if tag == "wdvv" and k.steps == 1]
    assert len(solved) == 11
    h = t112.index_of("h")
    for k in solved + [K(t112, ["p", "g"], 1)]:
        with_h = CorrelatorKey.of(k.insertions + (h,), k.steps)
        assert lookup_or_solve(with_h, table112, t112) == half * lookup_or_solve(k, table112, t112)


def test_idempotent_memo(t112, table112):
    k = K(t112, ["p"] + ["g"] * 9, 1)
    v1 = lookup_or_solve(k, table112, t112)
    solves = table112.solves
    prov = dict(table112.provenance)
    v2 = lookup_or_solve(k, table112, t112)
    assert v1 == v2 and table112.solves == solves and table112.provenance == prov


def test_format_key(t112):
    assert format_key(K(t112, "g p g g".split(), 1), t112) == "<p, g^3 | d=1/2>"
    k = K(t112, "p g g g".split(), 1)
    assert key_to_json(k, t112) == {"insertions": ["p", "g", "g", "g"], "degree_steps": 1}
    assert key_from_json(key_to_json(k, t112), t112) == k


def test_cache_roundtrip(t112, table112):
    for g in range(11):
        lookup_or_solve(K(t112, ["p"] + ["g"] * (2 * g + 1), 1), table112, t112)
    restored = table_from_json(table_to_json(table112, t112), t112)
    assert restored.same_as(table112)


def test_cache_rejects_selection_violation(t112):
    bad = {"schema": 1, "target": "p112",
           "entries": [{"insertions": ["p", "p"], "degree_steps": 1, "value": "5", "provenance": "wdvv"}]}
    with pytest.raises(CacheError, match="selection"):
        table_from_json(bad, t112)


def test_cache_empty_object(t112):
    table = table_from_json({}, t112)
    assert len(table) == len(t112.seeds)


@pytest.mark.parametrize("obj", [
    [],
    {"schema": 2},
    {"schema": 1, "target": "p2", "entries": []},
    {"schema": 1, "entries": [{"insertions": ["q"], "degree_steps": 1, "value": "1"}]},
    {"schema": 1, "entries": [{"insertions": ["p", "g"], "degree_steps": 1, "value": "2", "provenance": "seed"}]},
    {"schema": 1, "entries": [{"insertions": ["p", "g", "g", "g"], "degree_steps": 1, "value": "x"}]},
])
def test_cache_malformed(t112, obj):
    with pytest.raises(CacheError):
        table_from_json(obj, t112)
