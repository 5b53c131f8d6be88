"""
Catalog
Built-in rule sets, databases and equation systems used by tests, the CLI and the report
"""

from typing import Dict, List, Optional, Sequence

from cliquewidth import Add, DisjointUnion, EquationSystem, NullLeaf, Recolor, Ref
from datalog_engine import DatalogQuery
from kernel import Atom, Database, Instance, const, null, top, var
from reify import ReifiedSignature, reify_instance
from rules import Rule, RuleSet

x, y, z = var("x"), var("y"), var("z")


def tran_rules() -> RuleSet:
    """R∞_tran: an infinite E-chain closed under transitivity"""
    return RuleSet.from_rules([
        Rule({Atom("E", (x, y))}, {Atom("E", (y, z))}, "r1"),
        Rule({Atom("E", (x, y)), Atom("E", (y, z))}, {Atom("E", (x, z))}, "r2"),
    ])


def grid_rules() -> RuleSet:
    """R_grid over H, V and ⊤"""
    x2, y2 = var("x2"), var("y2")
    return RuleSet.from_rules([
        Rule(set(), {Atom("H", (x, x)), Atom("V", (x, x))}, "loop"),
        Rule({top(x)}, {Atom("H", (x, y)), Atom("V", (x, y2))}, "grow"),
        Rule(
            {Atom("H", (x, y)), Atom("V", (x, x2))},
            {Atom("H", (x2, y2)), Atom("V", (y, y2))},
            "grid",
        ),
    ])


def d_grid() -> Database:
    """{⊤(a)}"""
    return Database({top(const("a"))})


def grid_fragment(n: int, with_loop: bool = True) -> Instance:
    """
    The n×n corner of the infinite grid model rooted at constant a

    Position (0,0) is a; every other position (i,j) is the null x_i_j. H
    steps right (i+1), V steps up (j+1).
    """
    def cell(i: int, j: int):
        return const("a") if (i, j) == (0, 0) else null(f"x_{i}_{j}")

    atoms = {top(const("a"))}
    for i in range(n):
        for j in range(n):
            if i + 1 < n:
                atoms.add(Atom("H", (cell(i, j), cell(i + 1, j))))
            if j + 1 < n:
                atoms.add(Atom("V", (cell(i, j), cell(i, j + 1))))
    if with_loop:
        loop = null("y")
        atoms |= {Atom("H", (loop, loop)), Atom("V", (loop, loop))}
    return Instance(atoms)


def iless_system() -> EquationSystem:
    """E = Add_{R,(1,2)}(*1 ⊕ Recolor_{1→2}(E)); the strict order on a chain"""
    body = Add("R", (1, 2), DisjointUnion(NullLeaf(1), Recolor(1, 2, Ref("E"))))
    return EquationSystem.of({"E": body}, "E")


def ternary_chain(n: int) -> Instance:
    """{R(-1, k, k+1) | 0 <= k < n} with every element a null"""
    start = null("-1")
    return Instance(Atom("R", (start, null(str(k)), null(str(k + 1)))) for k in range(n))


def itern_system() -> EquationSystem:
    """
    Six-color system for the reified ternary chain

    At unfold depth d the first d-2 stars are complete; the innermost
    star still misses its R_3 edge.
    """
    level = Recolor(2, 3, Recolor(4, 5, Recolor(3, 6,
        Add("R_3", (4, 3), Add("R_2", (4, 2),
            DisjointUnion(NullLeaf(2), DisjointUnion(NullLeaf(4), Ref("E")))))
    )))
    main = Add("R_1", (5, 1), DisjointUnion(NullLeaf(1), Ref("E")))
    return EquationSystem.of({"main": main, "E": level}, "main")


def itern_prefix(depth: int) -> Instance:
    """What itern_system evaluates to at unfold depth >= 2, up to null renaming"""
    n = depth - 2
    rsig = ReifiedSignature.of(ternary_chain(1).signature())
    partial = null("u!partial")
    tail = {Atom(rsig.part_name("R", 1), (partial, null("-1"))), Atom(rsig.part_name("R", 2), (partial, null(str(n))))}
    return reify_instance(ternary_chain(n), rsig).union(tail)


def path_database(names: Sequence[str], predicate: str = "E") -> Database:
    """E-path through the named constants"""
    terms = [const(n) for n in names]
    return Database(Atom(predicate, (s, t)) for s, t in zip(terms, terms[1:]))


def tc_program(goal_atoms: Optional[List[Atom]] = None, goal: str = "goal") -> DatalogQuery:
    """
    Transitive closure T of E with a goal rule

    The default goal fires when T has a cycle.
    """
    goal_body = goal_atoms if goal_atoms is not None else [Atom("T", (x, y)), Atom("T", (y, x))]
    return DatalogQuery(RuleSet.from_rules([
        Rule({Atom("E", (x, y))}, {Atom("T", (x, y))}, "base"),
        Rule({Atom("T", (x, y)), Atom("E", (y, z))}, {Atom("T", (x, z))}, "step"),
        Rule(set(goal_body), {Atom(goal, ())}, "goal"),
    ]), goal)


BUILTINS: Dict[str, object] = {
    "grid": grid_rules,
    "tran": tran_rules,
    "dgrid": d_grid,
    "iless": iless_system,
    "itern": itern_system,
    "tc": tc_program,
}
