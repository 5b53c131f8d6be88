"""
Test Cliquewidth
Evaluation, validation, unfolding, recoloring and tree-decomposition conversion
"""

import pytest

from catalog import iless_system, itern_system, path_database, ternary_chain
from cliquewidth import (
    Add,
    ConstLeaf,
    DisjointUnion,
    EquationSystem,
    ExpressionEvaluator,
    NullLeaf,
    Recolor,
    Ref,
    Void,
    count_colors,
    evaluate,
    recolor_witness,
    td_color_bound,
    td_to_cw,
    unfold,
    validate,
)
from errors import ResourceLimitError, ValidationError
from generators import make_rng, random_decomposed_instance, random_system
from kernel import Atom, Instance, const, is_isomorphic, null
from reify import ReifiedSignature, dereify_instance, reify_instance
from tree_decomposition import TreeDecomposition

a, b = const("a"), const("b")


@pytest.mark.parametrize("depth", [1, 2, 3, 5, 6])
def test_strict_order_chain(depth):
    ci = evaluate(iless_system(), depth)
    relation = [atom for atom in ci.inst if atom.predicate == "R"]
    assert len(ci.inst.adom) == depth
    assert len(relation) == depth * (depth - 1) // 2
    assert count_colors(iless_system()) == 2


def test_strict_order_is_transitive_and_irreflexive():
    ci = evaluate(iless_system(), 5)
    pairs = {atom.args for atom in ci.inst if atom.predicate == "R"}
    assert all(s != t for s, t in pairs)
    for s, t in pairs:
        for u, v in pairs:
            if t == u:
                assert (s, v) in pairs


@pytest.mark.parametrize("depth", [2, 3, 4, 5, 6])
def test_ternary_chain_system(depth):
    rsig = ReifiedSignature.of(ternary_chain(1).signature())
    n = depth - 2
    dangling = null("hub")
    expected = reify_instance(ternary_chain(n), rsig).union({
        Atom("R_1", (dangling, null("-1"))),
        Atom("R_2", (dangling, null(str(n)))),
    })
    got = evaluate(itern_system(), depth).inst
    assert is_isomorphic(got, expected)
    if n:
        assert is_isomorphic(dereify_instance(got, rsig), ternary_chain(n))
    assert count_colors(itern_system()) == 6


def test_depth_zero_is_empty_and_evaluation_is_monotone():
    assert len(evaluate(iless_system(), 0).inst) == 0
    small = evaluate(iless_system(), 3).inst
    large = evaluate(iless_system(), 4).inst
    assert small.issubset(large)


def test_constant_leaves_and_void():
    system = EquationSystem.single(Add("E", (1, 2), DisjointUnion(ConstLeaf(a, 1), DisjointUnion(ConstLeaf(b, 2), Void()))))
    ci = evaluate(system, 1)
    assert Atom("E", (a, b)) in ci.inst
    assert ci.coloring == {a: 1, b: 2}


def test_recolor_merges_classes():
    system = EquationSystem.single(Recolor(1, 2, DisjointUnion(NullLeaf(1), NullLeaf(2))))
    assert set(evaluate(system, 1).coloring.values()) == {2}


def test_union_of_the_same_constant_is_rejected():
    system = EquationSystem.single(DisjointUnion(ConstLeaf(a, 1), ConstLeaf(a, 2)))
    with pytest.raises(ValidationError):
        evaluate(system, 1)
    assert validate(system)


def test_validation_issues():
    assert validate(iless_system()) == []
    assert validate(itern_system()) == []

    unresolved = EquationSystem.single(DisjointUnion(NullLeaf(1), Ref("missing")))
    assert any("unresolved" in str(i) for i in validate(unresolved))

    arity = EquationSystem.single(Add("E", (1,), Add("E", (1, 1), NullLeaf(1))))
    assert any("colors" in i.message for i in validate(arity))

    recursive = EquationSystem.of({"E": DisjointUnion(ConstLeaf(a, 1), Ref("E"))}, "E")
    assert any("recursive" in i.message for i in validate(recursive))

    twice = EquationSystem.of({"main": DisjointUnion(Ref("S"), Ref("S")), "S": ConstLeaf(a, 1)}, "main")
    assert any("2 times" in i.message for i in validate(twice))

    assert validate(EquationSystem.of({"E": NullLeaf(1)}, "F"))


def test_evaluate_rejects_bad_inputs():
    with pytest.raises(ValidationError):
        evaluate(iless_system(), -1)
    with pytest.raises(ValidationError):
        evaluate(EquationSystem.of({"E": NullLeaf(1)}, "F"), 1)


def test_evaluation_atom_cap():
    with pytest.raises(ResourceLimitError):
        ExpressionEvaluator(atom_cap=10).evaluate(iless_system(), 8)


def test_unfold_matches_evaluation():
    rng = make_rng(2)
    for _ in range(15):
        system = random_system(rng)
        for depth in (1, 2, 3):
            direct = evaluate(system, depth)
            flat = evaluate(EquationSystem.single(unfold(system, depth)), 1)
            assert flat.inst == direct.inst
            assert flat.coloring == direct.coloring


def test_recolor_witness_preserves_the_instance():
    rng = make_rng(6)
    for _ in range(10):
        system = random_system(rng)
        original = evaluate(system, 2)
        terms = original.inst.sorted_adom
        new = {t: f"c{int(rng.integers(2))}" for t in terms}
        witness = recolor_witness(system, new, 2)
        rebuilt = evaluate(witness, 1)
        assert rebuilt.inst == original.inst
        assert rebuilt.coloring == new
        assert count_colors(witness) <= (count_colors(system) + 1) * 2


def test_recolor_witness_requires_a_total_coloring():
    with pytest.raises(ValidationError):
        recolor_witness(iless_system(), {}, 3)


def test_td_to_cw_on_a_path():
    db = path_database(["a", "b", "c", "d"])
    td = TreeDecomposition.from_edges(
        {"x": {const("a"), const("b")}, "y": {const("b"), const("c")}, "z": {const("c"), const("d")}},
        [("x", "y"), ("y", "z")],
    )
    system = td_to_cw(db, td)
    assert validate(system) == []
    assert is_isomorphic(evaluate(system, 1).inst, db)
    assert count_colors(system) <= td_color_bound(db.signature(), td.width)


def test_td_to_cw_on_random_instances():
    rng = make_rng(13)
    for _ in range(25):
        inst, td = random_decomposed_instance(rng)
        system = td_to_cw(inst, td)
        assert is_isomorphic(evaluate(system, 1).inst, inst)
        assert count_colors(system) <= td_color_bound(inst.signature(), td.width)


def test_td_to_cw_rejects_wide_and_undecomposed_inputs():
    wide = Instance({Atom("T", (a, a, b))})
    with pytest.raises(ValidationError):
        td_to_cw(wide, TreeDecomposition({"x": {a, b}}))
    edge = Instance({Atom("E", (a, b))})
    with pytest.raises(ValidationError):
        td_to_cw(edge, TreeDecomposition.from_edges({"x": {a}, "y": {b}}, [("x", "y")]))


def test_run_eval_summary():
    results = ExpressionEvaluator().run_eval(iless_system(), 4)
    assert results["terms"] == 4
    assert results["colors_used"] == 2
