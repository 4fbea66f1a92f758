import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from conftest import contexts
from wikifca.assoc import (
    AssociationRule, UndefinedConfidence, all_association_rules_oracle, confidence,
    derive_rule, frequent_closed, luxenburger_base, rule_names,
)
from wikifca.context import FormalContext
from wikifca.fca import canonical_base

thresholds = st.sampled_from([Fraction(0), Fraction(1, 10), Fraction(1, 4), Fraction(1, 3),
                              Fraction(1, 2), Fraction(2, 3), Fraction(1)])


def test_cross_table_iceberg(cross_table):
    lattice = frequent_closed(cross_table, Fraction(1, 4))
    named = {frozenset(cross_table.names(B)): s for B, s in lattice.nodes.items()}
    assert named == {
        frozenset({"mother"}): 1,
        frozenset({"isMother", "mother"}): Fraction(3, 4),
        frozenset({"godparent", "mother"}): Fraction(3, 4),
        frozenset({"godparent", "isMother", "mother"}): Fraction(1, 2),
    }
    assert len(lattice.covers) == 4


def test_cross_table_luxenburger(cross_table):
    rules = luxenburger_base(cross_table, 0.25, 0.6)
    shown = [(rule_names(cross_table, r), r.support, r.confidence) for r in rules]
    # ties fall back to lectic order, where sets holding godparent come last
    assert shown == [
        ((["mother"], ["isMother"]), Fraction(3, 4), Fraction(3, 4)),
        ((["mother"], ["godparent"]), Fraction(3, 4), Fraction(3, 4)),
        ((["isMother", "mother"], ["godparent"]), Fraction(1, 2), Fraction(2, 3)),
        ((["godparent", "mother"], ["isMother"]), Fraction(1, 2), Fraction(2, 3)),
    ]


def test_thresholds_cut(cross_table):
    assert len(luxenburger_base(cross_table, 0.6, 0)) == 2
    assert luxenburger_base(cross_table, 0, 1) == []
    assert luxenburger_base(cross_table, 0, Fraction(101, 100)) == []


def test_no_objects():
    k = FormalContext((), ("a",), ())
    assert frequent_closed(k, 0).nodes == {}
    assert luxenburger_base(k, 0, 0) == []
    assert all_association_rules_oracle(k, 0, 0) == []


def test_confidence():
    k = FormalContext.from_table("ab", "xy", ["xx", "x."])
    assert confidence(k, 0b01, 0b10) == Fraction(1, 2)
    with pytest.raises(UndefinedConfidence):
        confidence(FormalContext.from_table("a", "xy", ["x."]), 0b10, 0b01)


@given(contexts(max_objects=10, max_attrs=6), thresholds)
def test_nodes_and_covers_match_brute_force(k, minsupp):
    if not k.objects:
        return
    lattice = frequent_closed(k, minsupp)
    expected = oracles.frequent_closed(k, minsupp)
    assert {oracles.to_set(B): s for B, s in lattice.nodes.items()} == expected
    assert {(oracles.to_set(a), oracles.to_set(b)) for a, b in lattice.covers} == \
        oracles.covers(expected)


@given(contexts(max_objects=10, max_attrs=6), thresholds, thresholds)
def test_rules_match_brute_force(k, minsupp, minconf):
    if not k.objects:
        return
    got = {(oracles.to_set(r.premise), oracles.to_set(r.conclusion), r.support, r.confidence)
           for r in luxenburger_base(k, minsupp, minconf)}
    assert got == oracles.luxenburger(k, minsupp, minconf)


@given(contexts(max_objects=10, max_attrs=6), thresholds, thresholds)
def test_rules_are_sorted_and_consistent(k, minsupp, minconf):
    if not k.objects:
        return
    rules = luxenburger_base(k, minsupp, minconf)
    keys = [(-r.support, -r.confidence) for r in rules]
    assert keys == sorted(keys)
    for r in rules:
        assert r.premise & r.conclusion == 0 and r.conclusion
        assert r.support >= minsupp and r.confidence >= minconf
        assert confidence(k, r.premise, r.conclusion) == r.confidence


@given(contexts(max_objects=10, max_attrs=5), thresholds, thresholds, thresholds)
def test_monotone_in_thresholds(k, a, b, c):
    if not k.objects:
        return
    lo, hi = sorted((a, b))
    assert set(frequent_closed(k, hi).nodes) <= set(frequent_closed(k, lo).nodes)
    assert len(luxenburger_base(k, c, hi)) <= len(luxenburger_base(k, c, lo))


@given(contexts(max_objects=10, max_attrs=5), thresholds, thresholds)
def test_every_rule_is_reconstructed(k, minsupp, minconf):
    if not k.objects:
        return
    base = canonical_base(k)
    lattice = frequent_closed(k, minsupp)
    rules = luxenburger_base(k, minsupp, minconf, lattice)
    for r in all_association_rules_oracle(k, minsupp, minconf):
        assert derive_rule(base, lattice, rules, r.premise, r.conclusion) == \
            (r.support, r.confidence)


def test_rule_oracle_matches_definition():
    rng = random.Random(3)
    for _ in range(30):
        k = oracles.random_context(rng, max_attrs=4)
        if not k.objects:
            continue
        got = {(r.premise, r.conclusion) for r in all_association_rules_oracle(k, 0.2, 0.5)}
        n = len(k.attributes)
        want = set()
        for X in range(1 << n):
            for Y in range(1, 1 << n):
                if X & Y or not oracles.supp(k, oracles.to_set(X)):
                    continue
                s = oracles.supp(k, oracles.to_set(X | Y))
                if s >= Fraction(1, 5) and s / oracles.supp(k, oracles.to_set(X)) >= Fraction(1, 2):
                    want.add((X, Y))
        assert got == want


def test_derive_rule_rejects_infrequent(cross_table):
    base = canonical_base(cross_table)
    lattice = frequent_closed(cross_table, Fraction(3, 4))
    rules = luxenburger_base(cross_table, Fraction(3, 4), 0, lattice)
    # {godparent, isMother} has support 1/2
    assert derive_rule(base, lattice, rules, 0b001, 0b010) is None


def test_rule_record():
    r = AssociationRule(1, 2, Fraction(1, 2), Fraction(2, 3))
    assert r.support == Fraction(1, 2)
