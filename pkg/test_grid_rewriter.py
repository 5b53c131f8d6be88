"""
Test Grid Rewriter
Marking closure, rewriting operations, dead queries and entailment under the grid rules
"""

import pytest

from catalog import d_grid, grid_rules
from chase_engine import ChaseEngine
from errors import RefutedQueryError, ResourceLimitError, ValidationError
from generators import make_rng, random_grid_database, random_marked_query
from grid_rewriter import (
    Converging,
    GridRewriter,
    Isolated,
    MarkedQuery,
    OneAtom,
    TwoAtoms,
    classify_maximal,
    collapse_loop,
    cut,
    drop_isolated,
    entails_grid,
    eval_marked,
    is_properly_marked,
    maximal_variables,
    merge,
    proper_closure,
    reduce,
    rewrite,
)
from kernel import Atom, ConjunctiveQuery, Database, Instance, const, null, top, var

a, b = const("a"), const("b")
x, y, z = var("x"), var("y"), var("z")


def H(s, t):
    return Atom("H", (s, t))


def V(s, t):
    return Atom("V", (s, t))


def test_marked_queries_reject_foreign_predicates_and_nulls():
    with pytest.raises(ValidationError):
        MarkedQuery({Atom("E", (x, y))})
    with pytest.raises(ValidationError):
        MarkedQuery({H(x, null("n"))})
    with pytest.raises(ValidationError):
        MarkedQuery({H(x, y)}, {z})


def test_proper_closure_rules():
    assert proper_closure(MarkedQuery({H(x, a)})).marked == {x, a}
    assert proper_closure(MarkedQuery({H(a, x), H(b, x)})).marked == {a, b, x}
    assert proper_closure(MarkedQuery({V(x, y), V(z, y)}, {x})).marked == {x, z}
    assert proper_closure(MarkedQuery({H(x, y), H(y, x), V(a, x)})).marked == {a}
    assert proper_closure(MarkedQuery({H(x, a), H(a, x)})).marked == {a, x}
    assert is_properly_marked(MarkedQuery({H(a, x)}, {a}))
    assert not is_properly_marked(MarkedQuery({H(a, x)}))


def test_classify_maximal_cases():
    assert maximal_variables(MarkedQuery({H(a, x), V(x, y)}, {a})) == [y]
    assert classify_maximal(MarkedQuery({H(a, x)}, {a}), x) == OneAtom(a, "H")
    assert classify_maximal(MarkedQuery({H(y, x), V(z, x)}), x) == TwoAtoms(y, z)
    assert classify_maximal(MarkedQuery({H(y, x), H(z, x)}), x) == Converging(y, z, "H")
    assert classify_maximal(MarkedQuery({top(x)}), x) == Isolated()
    with pytest.raises(ValidationError):
        classify_maximal(MarkedQuery({H(x, y)}), x)


def test_cut_keeps_a_vanishing_marked_source():
    out = cut(MarkedQuery({H(a, x), top(x)}, {a}), x)
    assert out == MarkedQuery({top(a)}, {a})
    kept = cut(MarkedQuery({H(a, x), V(a, y)}, {a}), y)
    assert kept == MarkedQuery({H(a, x)}, {a})


def test_reduce_produces_both_markings():
    unmarked, marked = reduce(MarkedQuery({H(y, x), V(z, x)}), x)
    v1 = var("v1")
    assert unmarked.atoms == {H(v1, z), V(v1, y)}
    assert unmarked.marked == frozenset()
    assert marked.marked == {v1}


def test_merge_identifies_sources():
    out = merge(MarkedQuery({H(y, x), H(z, x)}), x, y, z)
    assert H(z, x) in out.atoms and H(y, x) not in out.atoms
    towards_constant = merge(MarkedQuery({H(a, x), H(y, x)}, {a}), x, a, y)
    assert H(a, x) in towards_constant.atoms and H(y, x) not in towards_constant.atoms


def test_merge_of_two_constants_is_refuted():
    with pytest.raises(RefutedQueryError):
        merge(MarkedQuery({H(a, x), H(b, x)}, {a, b}), x, a, b)


def test_drop_isolated():
    assert drop_isolated(MarkedQuery({top(x), H(a, y)}, {a, y}), x) == MarkedQuery({H(a, y)}, {a, y})


def test_collapse_loop():
    assert collapse_loop(MarkedQuery({H(x, y), H(y, x)})) == MarkedQuery(set())
    assert collapse_loop(MarkedQuery({H(x, x), V(a, x)}, {a})) is None
    with pytest.raises(ValidationError):
        collapse_loop(MarkedQuery({H(a, b)}, {a, b}))


def test_rewrite_reaches_dead_queries():
    dead = rewrite(MarkedQuery({H(a, x), V(x, y)}, {a}))
    assert dead == [MarkedQuery({top(a)}, {a})]


def test_rewrite_rejects_improper_markings():
    with pytest.raises(ValidationError):
        rewrite(MarkedQuery({H(x, a)}))


def test_rewrite_outputs_are_dead_and_proper():
    rng = make_rng(21)
    rewriter = GridRewriter()
    for _ in range(30):
        mq = random_marked_query(rng)
        for dead in rewriter.rewrite(mq):
            assert dead.is_dead
            assert is_properly_marked(dead)


def test_query_cap():
    with pytest.raises(ResourceLimitError):
        GridRewriter(query_cap=0).rewrite(MarkedQuery({H(a, x), V(x, y)}, {a}))


def test_marked_evaluation_distinguishes_constants():
    inst = Instance({H(a, null("n"))})
    assert eval_marked(inst, MarkedQuery({H(a, x)}, {a}))
    assert not eval_marked(inst, MarkedQuery({H(a, x)}, {a, x}))


@pytest.mark.parametrize("query,expected", [
    (ConjunctiveQuery({H(x, x)}), True),
    (ConjunctiveQuery({H(a, x)}), True),
    (ConjunctiveQuery({H(a, x), V(x, y), H(y, z)}), True),
    (ConjunctiveQuery({H(a, a)}), False),
    (ConjunctiveQuery({H(x, a)}), False),
    (ConjunctiveQuery({top(b)}), False),
])
def test_entailment_over_the_single_constant_database(query, expected):
    assert entails_grid(d_grid(), query) == expected


def test_verdict_records_the_dead_query():
    verdict = GridRewriter().entails(d_grid(), ConjunctiveQuery({H(a, x)}))
    assert verdict.entailed
    assert verdict.dead_query.is_dead
    assert verdict.marking == {a}


def test_bounded_chase_entailment_is_never_missed():
    rng = make_rng(23)
    engine = ChaseEngine(atom_cap=500_000)
    rewriter = GridRewriter()
    for _ in range(12):
        db = random_grid_database(rng)
        q = random_marked_query(rng).query
        budget = min(len(q.terms) + 2, 4)
        if engine.entails_bcq(db, grid_rules(), q, budget).entailed:
            assert rewriter.entails(db, q).entailed


def test_database_with_an_edge_between_constants():
    db = Database({H(a, b), top(a)})
    assert entails_grid(db, ConjunctiveQuery({H(a, b)}))
    assert entails_grid(db, ConjunctiveQuery({H(a, x), V(b, y)}))
    assert not entails_grid(db, ConjunctiveQuery({H(b, a)}))
