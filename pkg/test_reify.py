"""
Test Reification
Stars for wide atoms, rule and datalog translation, commutation with the chase
"""

from catalog import tc_program, ternary_chain
from chase_engine import ChaseEngine
from datalog_engine import DatalogEngine
from generators import make_rng, random_database, random_instance, random_rules
from kernel import (
    Atom,
    ConjunctiveQuery,
    Instance,
    Signature,
    TermKind,
    const,
    has_homomorphism,
    hom_equivalent,
    is_isomorphic,
    null,
    top,
    var,
)
from reify import (
    ReifiedSignature,
    dereify_instance,
    hub_term,
    reify_atom,
    reify_cq,
    reify_datalog,
    reify_instance,
    reify_rules,
)
from rules import Rule, RuleSet

a, b, c = const("a"), const("b"), const("c")
x, y, z = var("x"), var("y"), var("z")


def test_binary_atoms_are_untouched():
    atom = Atom("E", (a, b))
    assert reify_atom(atom) == {atom}


def test_ternary_atom_becomes_a_star():
    atom = Atom("T", (a, b, c))
    star = reify_atom(atom)
    hub = hub_term(atom)
    assert star == {Atom("T_1", (hub, a)), Atom("T_2", (hub, b)), Atom("T_3", (hub, c))}
    assert hub.is_null and hub.name.startswith("u!")


def test_hubs_are_deterministic_and_distinct():
    assert hub_term(Atom("T", (a, b, c))) == hub_term(Atom("T", (a, b, c)))
    assert hub_term(Atom("T", (a, b, c))) != hub_term(Atom("T", (c, b, a)))


def test_part_names_avoid_collisions():
    rsig = ReifiedSignature.of(Signature.of({"T": 3, "T_1": 2}))
    assert rsig.part_name("T", 1) == "T_1_"
    assert rsig.part_name("T", 2) == "T_2"
    assert rsig.signature.arities == {"T_1": 2, "T_1_": 2, "T_2": 2, "T_3": 2, "top": 1}


def test_infer_recovers_the_base_signature():
    rsig = ReifiedSignature.of(Signature.of({"E": 2, "T": 3}))
    inferred = ReifiedSignature.infer(rsig.signature)
    assert inferred.base == rsig.base
    assert inferred.part_lookup == rsig.part_lookup


def test_infer_ignores_gapped_groups():
    inferred = ReifiedSignature.infer(Signature.of({"S_1": 2, "S_3": 2, "S_4": 2}))
    assert inferred.base.arities == {"S_1": 2, "S_3": 2, "S_4": 2, "top": 1}


def test_dereify_inverts_reify():
    inst = Instance({Atom("T", (a, b, c)), Atom("E", (a, a)), Atom("A", (null("n"),))})
    rsig = ReifiedSignature.of(inst.signature())
    assert dereify_instance(reify_instance(inst, rsig), rsig) == inst


def test_dereify_of_the_ternary_chain():
    chain = ternary_chain(4)
    rsig = ReifiedSignature.of(chain.signature())
    assert is_isomorphic(dereify_instance(reify_instance(chain, rsig), rsig), chain)


def test_dereify_drops_incomplete_stars_and_orphan_hub_tops():
    hub = null("h")
    rsig = ReifiedSignature.of(Signature.of({"T": 3}))
    inst = Instance({Atom("T_1", (hub, a)), Atom("T_2", (hub, b)), top(hub), top(a)})
    assert dereify_instance(inst, rsig) == Instance({top(a)})


def test_reified_rules_use_hub_variables():
    rules = RuleSet.from_rules([Rule({Atom("T", (x, y, z))}, {Atom("T", (y, z, x))}, "rot")])
    reified = reify_rules(rules)
    rule = reified.by_label()["rot"]
    assert all(t.kind == TermKind.VARIABLE for a in rule.body | rule.head for t in a.args)
    assert len(rule.existentials) == 1
    assert rule.existentials[0].name.startswith("u!h")


def test_reified_query_matches_reified_instance():
    inst = Instance({Atom("T", (a, b, c)), Atom("E", (c, a))})
    q = ConjunctiveQuery({Atom("T", (x, y, z)), Atom("E", (z, x))})
    rsig = ReifiedSignature.of(inst.signature())
    assert has_homomorphism(reify_cq(q, rsig).atoms, reify_instance(inst, rsig))


def test_reification_commutes_with_the_chase():
    rng = make_rng(5)
    engine = ChaseEngine(atom_cap=100_000)
    for n in (1, 2, 3):
        for _ in range(6):
            inst = random_instance(rng)
            rules = random_rules(rng)
            rsig = ReifiedSignature.of(inst.signature().merge(rules.signature))
            direct = reify_instance(engine.chase_k(inst, rules, n), rsig)
            via = engine.chase_k(reify_instance(inst, rsig), reify_rules(rules), n)
            assert hom_equivalent(direct, via)


def test_reified_datalog_keeps_idb_arity():
    program = tc_program(goal_atoms=[Atom("T", (x, x))])
    wide = RuleSet.from_rules([
        Rule({Atom("R", (x, y, z))}, {Atom("T", (x, z))}, "wide"),
        *program.rules,
    ])
    reified = reify_datalog(type(program)(wide, program.goal))
    assert reified.rules.signature.arity("T") == 2
    assert "R" not in reified.rules.signature
    assert reified.rules.signature.arity("R_1") == 2


def test_reified_datalog_agrees_on_databases():
    rng = make_rng(9)
    engine = DatalogEngine()
    program = tc_program()
    wide = RuleSet.from_rules([Rule({Atom("R", (x, y, z))}, {Atom("T", (x, z))}, "wide"), *program.rules])
    q = type(program)(wide, program.goal)
    reified = reify_datalog(q)
    rsig = ReifiedSignature.of(Signature.of({"E": 2, "R": 3}))
    for _ in range(20):
        db = random_database(rng, signature={"E": 2, "R": 3})
        assert engine.holds(db, q) == engine.holds(reify_instance(db, rsig), reified)
