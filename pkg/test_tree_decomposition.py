"""
Test Tree Decompositions
Construction, validation and the min-degree heuristic
"""

import pytest

from errors import ValidationError
from generators import make_rng, random_decomposed_instance
from kernel import Atom, Instance, const, null
from reify import hub_term
from tree_decomposition import TreeDecomposition, decompose, forest_links, gaifman_graph, reify_decomposition

a, b, c, d = const("a"), const("b"), const("c"), const("d")


def E(s, t):
    return Atom("E", (s, t))


def path():
    return Instance({E(a, b), E(b, c), E(c, d)})


def path_td():
    return TreeDecomposition.from_edges(
        {"x": {a, b}, "y": {b, c}, "z": {c, d}},
        [("x", "y"), ("y", "z")],
    )


def test_from_edges_orients_away_from_the_root():
    td = path_td()
    assert td.root == "x"
    assert td.parent == {"x": None, "y": "x", "z": "y"}
    assert td.preorder() == ["x", "y", "z"]
    assert td.width == 1


def test_valid_decomposition_has_no_problems():
    assert path_td().validate(path()) == []


def test_missing_coverage_is_reported():
    td = TreeDecomposition.from_edges({"x": {a, b}, "y": {c, d}}, [("x", "y")])
    problems = td.validate(path())
    assert "atom E(b,c) is not contained in any bag" in problems


def test_disconnected_occurrences_are_reported():
    td = TreeDecomposition.from_edges(
        {"x": {a, b}, "y": {c, d}, "z": {b, c}},
        [("x", "y"), ("y", "z")],
    )
    problems = td.validate(path())
    assert problems == ["bags containing b are not connected"]


def test_structure_errors():
    with pytest.raises(ValidationError):
        TreeDecomposition({"x": {a}, "y": {b}})
    with pytest.raises(ValidationError):
        TreeDecomposition.from_edges({"x": {a}, "y": {b}}, [("x", "y"), ("y", "x"), ("x", "x")])
    with pytest.raises(ValidationError):
        TreeDecomposition.from_edges({"x": {a}}, [("x", "q")])
    with pytest.raises(ValidationError):
        TreeDecomposition.from_edges({}, [])


def test_gaifman_graph():
    graph = gaifman_graph(Instance({Atom("T", (a, b, c)), Atom("A", (d,))}))
    assert graph.number_of_nodes() == 4
    assert graph.number_of_edges() == 3


def test_decompose_produces_valid_decompositions():
    rng = make_rng(4)
    for _ in range(20):
        inst, _ = random_decomposed_instance(rng)
        td = decompose(inst)
        assert td.validate(inst) == []


def test_decompose_handles_disconnected_and_empty_instances():
    inst = Instance({E(a, b), E(c, d), E(null("n"), null("n"))})
    assert decompose(inst).validate(inst) == []
    assert decompose(Instance()).bags == {"b0": frozenset()}


def test_generated_decompositions_respect_the_width():
    rng = make_rng(8)
    for _ in range(20):
        inst, td = random_decomposed_instance(rng, max_width=2)
        assert td.validate(inst) == []
        assert td.width <= 2


def test_reified_decomposition_covers_hubs():
    wide = Atom("T", (a, b, c))
    inst = Instance({wide, E(c, d)})
    td = TreeDecomposition.from_edges({"x": {a, b, c}, "y": {c, d}}, [("x", "y")])
    reified = reify_decomposition(td, inst)
    assert hub_term(wide) in reified.bags["x"]
    assert hub_term(wide) not in reified.bags["y"]


def test_forest_components_join_by_numeric_bag_order():
    bags = [f"b{i}" for i in range(12)]
    chain = [(f"b{i}", f"b{i + 1}") for i in range(2, 11)]
    assert forest_links(bags, chain) == [("b0", "b1"), ("b0", "b2")]
