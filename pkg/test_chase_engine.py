"""
Test Chase Engine
Skolem chase steps, semi-naive sequences and bounded entailment
"""

import pytest

from catalog import d_grid, grid_fragment, grid_rules, path_database, tran_rules
from chase_engine import (
    ChaseEngine,
    EntailedAtStep,
    SkolemNull,
    Trigger,
    UnknownAtBudget,
    chase_k,
    entails_bcq,
    one_step,
    triggers,
)
from errors import ResourceLimitError, ValidationError
from generators import make_rng, random_instance, random_rules
from kernel import Atom, ConjunctiveQuery, Instance, const, has_homomorphism, is_isomorphic, null, top, var
from rules import Rule, RuleSet

a = const("a")
x, y = var("x"), var("y")


@pytest.fixture
def engine():
    return ChaseEngine(atom_cap=200_000)


def test_first_grid_step_matches_expected_shape(engine):
    n1, n2, m = null("n1"), null("n2"), null("m")
    expected = Instance({top(a), Atom("H", (a, n1)), Atom("V", (a, n2)), Atom("H", (m, m)), Atom("V", (m, m))})
    assert is_isomorphic(engine.chase_k(d_grid(), grid_rules(), 1), expected)


def test_skolem_null_names(engine):
    step = engine.chase_k(d_grid(), grid_rules(), 1)
    assert Atom("H", (a, null("z!grow!y!a"))) in step
    loop = SkolemNull("loop", "x", ()).term
    assert Atom("H", (loop, loop)) in step


def test_skolem_names_separate_images_with_commas(engine):
    x1, x2 = var("x1"), var("x2")
    rules = RuleSet.from_rules([Rule({Atom("E", (x1, x2))}, {Atom("S", (x1, x2, y))}, "r")])
    db = Instance({Atom("E", (const("a,b"), const("c"))), Atom("E", (a, const("b,c")))})
    step = engine.one_step(db, rules)
    assert len(step.nulls) == 2


def test_skolem_names_separate_nulls_from_constants(engine):
    rules = RuleSet.from_rules([Rule({Atom("A", (x,))}, {Atom("E", (x, y))}, "r")])
    db = Instance({Atom("A", (const("n"),)), Atom("A", (null("n"),))})
    assert len(engine.one_step(db, rules).nulls) == 3


def test_skolem_names_separate_labels_from_variables():
    first = SkolemNull("p!q", "r", (a,)).term
    second = SkolemNull("p", "q!r", (a,)).term
    assert first != second


def test_one_step_ignores_trigger_order():
    rng = make_rng(23)
    for _ in range(25):
        inst = random_instance(rng)
        rules = random_rules(rng)
        engine = ChaseEngine()
        found = engine.triggers(inst, rules)
        order = rng.permutation(len(found))
        current = inst
        for i in order:
            current = engine.apply_trigger(current, found[int(i)])
        assert current == engine.one_step(inst, rules)


def test_chase_zero_is_input(engine):
    assert engine.chase_k(d_grid(), grid_rules(), 0) == d_grid()


def test_negative_depth_rejected(engine):
    with pytest.raises(ValidationError):
        engine.chase_k(d_grid(), grid_rules(), -1)


@pytest.mark.parametrize("make_rules,db", [
    (grid_rules, d_grid()),
    (tran_rules, path_database(["a", "b", "c"])),
])
def test_semi_naive_sequence_equals_naive_iterate(engine, make_rules, db):
    rules = make_rules()
    naive = [db]
    for _ in range(3):
        naive.append(one_step(naive[-1], rules))
    assert engine.chase_sequence(db, rules, 3) == naive


def test_sequence_is_monotone(engine):
    seq = engine.chase_sequence(d_grid(), grid_rules(), 4)
    for before, after in zip(seq, seq[1:]):
        assert before.issubset(after)


def test_memoised_sequences_can_be_reset(engine):
    engine.chase_k(d_grid(), grid_rules(), 2)
    assert engine._sequences
    engine.reset()
    assert not engine._sequences


def test_grid_fragment_embeds_into_deep_chase(engine):
    deep = engine.chase_k(d_grid(), grid_rules(), 6)
    assert has_homomorphism(grid_fragment(4).atoms, deep)


def test_chase_prefix_maps_into_grid_fragment(engine):
    prefix = engine.chase_k(d_grid(), grid_rules(), 3)
    assert has_homomorphism(prefix.atoms, grid_fragment(8))


def test_triggers_and_apply_trigger():
    db = d_grid()
    rules = grid_rules()
    found = triggers(db, rules)
    assert {t.rule.label for t in found} == {"loop", "grow"}
    grow = next(t for t in found if t.rule.label == "grow")
    out = ChaseEngine().apply_trigger(db, grow)
    assert len(out) == 3


def test_apply_trigger_rejects_non_triggers():
    grow = grid_rules().by_label()["grow"]
    bogus = Trigger.make(grow, {x: const("b")})
    with pytest.raises(ValidationError):
        ChaseEngine().apply_trigger(d_grid(), bogus)


def test_atom_cap():
    with pytest.raises(ResourceLimitError):
        ChaseEngine(atom_cap=5).chase_k(d_grid(), grid_rules(), 3)


def test_entailment_verdicts():
    assert entails_bcq(d_grid(), grid_rules(), ConjunctiveQuery({Atom("H", (a, x))}), 3) == EntailedAtStep(1)
    assert entails_bcq(d_grid(), grid_rules(), ConjunctiveQuery({Atom("H", (x, x))}), 3) == EntailedAtStep(1)
    verdict = entails_bcq(d_grid(), grid_rules(), ConjunctiveQuery({Atom("H", (a, a))}), 3)
    assert verdict == UnknownAtBudget(3)
    assert not verdict.entailed


def test_empty_query_entailed_at_zero():
    assert entails_bcq(d_grid(), grid_rules(), ConjunctiveQuery(), 2) == EntailedAtStep(0)


def test_witness_is_recorded():
    verdict = entails_bcq(d_grid(), grid_rules(), ConjunctiveQuery({Atom("V", (a, y))}), 2)
    assert verdict.witness[y] == null("z!grow!y2!a")


def test_ucq_takes_the_earliest_disjunct(engine):
    slow = ConjunctiveQuery({Atom("H", (a, x)), Atom("V", (x, y)), Atom("H", (y, var("z")))})
    fast = ConjunctiveQuery({Atom("H", (a, x))})
    assert engine.entails_ucq(d_grid(), grid_rules(), [slow, fast], 3) == EntailedAtStep(1)


def test_transitive_rules_reach_a_model(engine):
    transitive = tran_rules()
    datalog_only = type(transitive)((transitive.by_label()["r2"],), transitive.signature)
    db = path_database(["a", "b", "c", "d"])
    assert not engine.is_model(db, datalog_only)
    results = engine.run_chase(db, datalog_only, 3)
    assert results["fixpoint"] and results["model"]
    assert results["steps"][-1]["atoms"] == 6


def test_chase_k_shortcut_matches_engine():
    assert chase_k(d_grid(), grid_rules(), 2) == ChaseEngine().chase_k(d_grid(), grid_rules(), 2)
