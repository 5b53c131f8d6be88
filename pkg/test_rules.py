"""
Test Rules
Rule construction, labelling and classification
"""

import pytest

from catalog import grid_rules, tran_rules
from errors import ValidationError
from generators import make_rng, random_disconnected_rules, random_rules
from kernel import Atom, const, null, substitute, top, var
from rules import (
    Connectivity,
    Rule,
    RuleSet,
    binary_head,
    body_components,
    classify,
    split_disconnected_body,
)

x, y, z, w = var("x"), var("y"), var("z"), var("w")
x1, x2, y1 = var("x1"), var("x2"), var("y1")


def test_grid_rule_frontier_and_existentials():
    grid = grid_rules().by_label()["grid"]
    assert grid.frontier == (var("x2"), y)
    assert grid.existentials == (var("y2"),)
    assert not grid.is_datalog


def test_loop_rule_has_empty_body():
    loop = grid_rules().by_label()["loop"]
    assert loop.body == frozenset()
    assert loop.existentials == (x,)


def test_unlabelled_rules_get_fresh_labels():
    rules = RuleSet.from_rules([
        Rule({Atom("E", (x, y))}, {Atom("T", (x, y))}),
        Rule({Atom("T", (x, y))}, {Atom("S", (x,))}, "r1"),
    ])
    assert [r.label for r in rules] == ["r2", "r1"]


def test_duplicate_labels_rejected():
    rule = Rule({Atom("E", (x, y))}, {Atom("T", (x, y))}, "r")
    with pytest.raises(ValidationError):
        RuleSet((rule, rule), rule_signature())


def rule_signature():
    return RuleSet.from_rules([Rule({Atom("E", (x, y))}, {Atom("T", (x, y))}, "r")]).signature


def test_rules_reject_nulls_and_empty_heads():
    with pytest.raises(ValidationError):
        Rule({Atom("E", (x, null("n")))}, {Atom("T", (x,))})
    with pytest.raises(ValidationError):
        Rule({Atom("E", (x, y))}, set())


def test_signature_conflict_in_rule_set():
    with pytest.raises(ValidationError):
        RuleSet.from_rules([
            Rule({Atom("E", (x, y))}, {Atom("T", (x,))}),
            Rule({Atom("T", (x, y))}, {Atom("E", (x, y))}),
        ])


def test_classification():
    transitive = tran_rules().by_label()["r2"]
    info = classify(transitive)
    assert info.is_datalog and info.is_single_headed
    assert info.datalog_connectivity == Connectivity.CONNECTED

    disconnected = Rule({Atom("A", (x1,)), Atom("B", (x2,))}, {Atom("R", (x1, x2))}, "d")
    assert classify(disconnected).datalog_connectivity == Connectivity.DISCONNECTED

    existential = tran_rules().by_label()["r1"]
    assert classify(existential).datalog_connectivity == Connectivity.NOT_APPLICABLE


def test_constants_do_not_connect_components():
    a = const("a")
    rule = Rule({Atom("E", (x1, a)), Atom("E", (a, x2))}, {Atom("R", (x1, x2))}, "d")
    assert body_components(rule) == [frozenset({x1}), frozenset({x2})]
    assert classify(rule).datalog_connectivity == Connectivity.DISCONNECTED


def test_binary_head_rejects_connected_rules():
    with pytest.raises(ValidationError):
        binary_head(tran_rules().by_label()["r2"])
    with pytest.raises(ValidationError):
        binary_head(grid_rules().by_label()["grow"])


def test_split_disconnected_body():
    rule = Rule(
        {Atom("A", (x1,)), Atom("E", (x1, y1)), Atom("B", (x2,)), top(z)},
        {Atom("R", (x1, x2))},
        "d",
    )
    phi1, phi2 = split_disconnected_body(rule)
    assert phi1 == {Atom("A", (x1,)), Atom("E", (x1, y1))}
    assert phi2 == {Atom("B", (x2,)), top(z)}


def _rename(rng, rule: Rule) -> Rule:
    names = sorted(rule.body_variables | rule.head_variables)
    order = rng.permutation(len(names))
    renaming = {v: var(f"v{int(order[i])}") for i, v in enumerate(names)}
    return Rule(substitute(rule.body, renaming), substitute(rule.head, renaming), rule.label)


def test_classification_survives_variable_renaming():
    rng = make_rng(41)
    for _ in range(30):
        for rules in (random_rules(rng), random_disconnected_rules(rng)):
            for rule in rules:
                assert classify(_rename(rng, rule)) == classify(rule)
