"""
Test Datalog Engine
Semi-naive evaluation, goal derivation and preservation under homomorphisms
"""

import pytest

from catalog import path_database, tc_program
from datalog_engine import DatalogEngine, DatalogQuery, eval_datalog, holds
from errors import ResourceLimitError, ValidationError
from generators import make_rng, random_database, random_morphism
from kernel import Atom, ConjunctiveQuery, Database, const, has_homomorphism, var
from rules import Rule, RuleSet

x, y = var("x"), var("y")


def T(s, t):
    return Atom("T", (const(s), const(t)))


def test_transitive_closure_of_a_path():
    derived = eval_datalog(path_database(["a", "b", "c"]), tc_program())
    assert derived.atoms == {T("a", "b"), T("b", "c"), T("a", "c")}
    assert not holds(path_database(["a", "b", "c"]), tc_program())


def test_goal_on_a_cycle():
    assert holds(path_database(["a", "b", "a"]), tc_program())


def test_idb_facts_in_input_are_rejected():
    with pytest.raises(ValidationError):
        eval_datalog(Database({T("a", "b")}), tc_program())


def test_existential_rules_are_not_datalog():
    rule = Rule({Atom("E", (x, y))}, {Atom("E", (y, var("z")))}, "r")
    with pytest.raises(ValidationError):
        DatalogQuery(RuleSet.from_rules([rule]))


def test_goal_must_be_nullary():
    with pytest.raises(ValidationError):
        DatalogQuery(tc_program().rules, goal="T")


def test_edb_and_idb_split():
    program = tc_program()
    assert program.idb == {"T", "goal"}
    assert program.edb == {"E", "top"}


def test_iterations_are_counted():
    engine = DatalogEngine()
    engine.eval_datalog(path_database(["a", "b", "c", "d", "e"]), tc_program())
    assert engine.iterations >= 3


def test_atom_cap_applies():
    with pytest.raises(ResourceLimitError):
        DatalogEngine(atom_cap=4).eval_datalog(path_database(["a", "b", "c", "d"]), tc_program())


def test_ucq_goal_program_agrees_with_homomorphisms():
    rng = make_rng(3)
    engine = DatalogEngine()
    queries = [
        ConjunctiveQuery({Atom("E", (x, y)), Atom("E", (y, x))}),
        ConjunctiveQuery({Atom("A", (x,)), Atom("E", (x, x))}),
    ]
    for _ in range(25):
        db = random_database(rng, signature={"A": 1, "E": 2})
        expected = any(has_homomorphism(q.atoms, db) for q in queries)
        assert engine.holds_ucq(db, queries) == expected


def test_holds_is_preserved_under_homomorphisms():
    rng = make_rng(11)
    engine = DatalogEngine()
    program = tc_program()
    for _ in range(40):
        source, h, target = random_morphism(rng)
        assert all(a.substitute(h) in target for a in source)
        if engine.holds(source, program):
            assert engine.holds(target, program)


def test_run_datalog_summary():
    results = DatalogEngine().run_datalog(path_database(["a", "b", "a"]), tc_program())
    assert results["goal"]
    assert results["counts"]["T"] == 4
