"""
Generators
Seeded random instances, rule sets, equation systems and grid queries
"""

from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from cliquewidth import (
    Add,
    Color,
    ConstLeaf,
    CwExpr,
    DisjointUnion,
    EquationSystem,
    NullLeaf,
    Recolor,
    Ref,
    validate,
)
from config import load_settings
from grid_rewriter import MarkedQuery, proper_closure
from kernel import Atom, Database, Instance, Term, const, null, top, var
from rules import Rule, RuleSet
from tree_decomposition import TreeDecomposition

MIXED_SIGNATURE = {"A": 1, "E": 2, "T": 3}
BINARY_SIGNATURE = {"A": 1, "E": 2, "F": 2}


def make_rng(seed: Optional[int] = None) -> np.random.Generator:
    return np.random.default_rng(load_settings().seed if seed is None else seed)


def _pick(rng: np.random.Generator, items: Sequence):
    return items[int(rng.integers(len(items)))]


def _random_atom(rng, signature: Dict[str, int], pool: Sequence[Term]) -> Atom:
    predicate = _pick(rng, sorted(signature))
    return Atom(predicate, tuple(_pick(rng, pool) for _ in range(signature[predicate])))


def random_instance(
    rng: np.random.Generator,
    max_atoms: int = 6,
    signature: Optional[Dict[str, int]] = None,
    n_constants: int = 2,
    n_nulls: int = 2,
) -> Instance:
    """Up to max_atoms atoms over a mixed pool of constants and nulls"""
    signature = signature or MIXED_SIGNATURE
    pool = [const(f"c{i}") for i in range(n_constants)] + [null(f"n{i}") for i in range(n_nulls)]
    size = int(rng.integers(1, max_atoms + 1))
    return Instance(_random_atom(rng, signature, pool) for _ in range(size))


def random_database(
    rng: np.random.Generator,
    max_atoms: int = 5,
    signature: Optional[Dict[str, int]] = None,
    n_constants: int = 3,
) -> Database:
    signature = signature or MIXED_SIGNATURE
    pool = [const(f"c{i}") for i in range(n_constants)]
    size = int(rng.integers(1, max_atoms + 1))
    return Database(_random_atom(rng, signature, pool) for _ in range(size))


def random_rule(rng: np.random.Generator, label: str, signature: Optional[Dict[str, int]] = None) -> Rule:
    """1-2 body atoms over x, y, z and 1-2 head atoms that may use the existential w"""
    signature = signature or MIXED_SIGNATURE
    body_pool = [var("x"), var("y"), var("z")]
    body = {_random_atom(rng, signature, body_pool) for _ in range(int(rng.integers(1, 3)))}
    head_pool = sorted({t for a in body for t in a.args}) + [var("w")]
    head = {_random_atom(rng, signature, head_pool) for _ in range(int(rng.integers(1, 3)))}
    return Rule(body, head, label)


def random_rules(rng: np.random.Generator, max_rules: int = 3,
                 signature: Optional[Dict[str, int]] = None) -> RuleSet:
    n = int(rng.integers(1, max_rules + 1))
    return RuleSet.from_rules([random_rule(rng, f"r{i + 1}", signature) for i in range(n)])


# ---------------------------------------------------------------------------
# Bounded-width binary instances
# ---------------------------------------------------------------------------

def random_decomposed_instance(
    rng: np.random.Generator,
    max_terms: int = 8,
    max_width: int = 2,
    max_atoms: int = 10,
) -> Tuple[Instance, TreeDecomposition]:
    """
    Binary instance built inside a random bag tree of width <= max_width

    Each new term opens a bag below a random existing bag and keeps a
    random part of that bag, so every term's bags stay connected.
    """
    n = int(rng.integers(1, max_terms + 1))
    terms = [const("a")] + [null(f"t{i}") for i in range(1, n)]
    bags: Dict[str, frozenset] = {"b0": frozenset({terms[0]})}
    parent: Dict[str, Optional[str]] = {"b0": None}
    for i, term in enumerate(terms[1:], start=1):
        above = _pick(rng, sorted(bags))
        inherited = sorted(bags[above])
        keep = int(rng.integers(0, min(max_width, len(inherited)) + 1))
        chosen = rng.choice(len(inherited), size=keep, replace=False) if keep else []
        bags[f"b{i}"] = frozenset({inherited[j] for j in chosen} | {term})
        parent[f"b{i}"] = above

    atoms = {top(t) for t in terms}
    for _ in range(int(rng.integers(0, max_atoms + 1))):
        bag = sorted(bags[_pick(rng, sorted(bags))])
        atoms.add(_random_atom(rng, BINARY_SIGNATURE, bag))
    return Instance(atoms), TreeDecomposition(bags, parent)


# ---------------------------------------------------------------------------
# Equation systems
# ---------------------------------------------------------------------------

def _random_expr(rng, colors: List[Color], size: int, recursive: bool, constants: List[Term]) -> CwExpr:
    if size <= 1:
        roll = rng.random()
        if recursive and roll < 0.3:
            return Ref("L")
        if constants and roll < 0.5:
            return ConstLeaf(constants.pop(), _pick(rng, colors))
        return NullLeaf(_pick(rng, colors))
    roll = rng.random()
    if roll < 0.4:
        split = int(rng.integers(1, size))
        return DisjointUnion(
            _random_expr(rng, colors, split, recursive, constants),
            _random_expr(rng, colors, size - split, recursive, constants),
        )
    child = _random_expr(rng, colors, size - 1, recursive, constants)
    if roll < 0.75:
        predicate = _pick(rng, ["A", "E"])
        arity = 1 if predicate == "A" else 2
        return Add(predicate, tuple(_pick(rng, colors) for _ in range(arity)), child)
    return Recolor(_pick(rng, colors), _pick(rng, colors), child)


def random_system(rng: np.random.Generator, n_colors: int = 3, size: int = 6) -> EquationSystem:
    """
    Valid system with a root `main` and an optional recursive equation L

    L holds no constants; constants only appear once in `main`.
    """
    colors = list(range(1, n_colors + 1))
    while True:
        recursive = bool(rng.random() < 0.6)
        constants = [const("a"), const("b")]
        main = _random_expr(rng, colors, size, recursive, constants)
        equations = {"main": main}
        if recursive:
            inner = _random_expr(rng, colors, max(size - 2, 2), False, [])
            equations["L"] = Add("E", (colors[0], colors[-1]),
                                   DisjointUnion(inner, Recolor(colors[0], colors[-1], Ref("L"))))
        system = EquationSystem.of(equations, "main")
        if not validate(system):
            return system


# ---------------------------------------------------------------------------
# Disconnected rules, grid queries, datalog morphisms
# ---------------------------------------------------------------------------

def random_disconnected_rules(rng: np.random.Generator, max_rules: int = 2) -> RuleSet:
    """Rules φ1(x1,ȳ) ∧ φ2(x2,z̄) → R(x1,x2) with variable-disjoint sides"""
    rules = []
    for i in range(int(rng.integers(1, max_rules + 1))):
        x1, x2 = var("x1"), var("x2")
        left = [x1, var("y1")]
        right = [x2, var("y2")]
        phi1 = {_random_atom(rng, BINARY_SIGNATURE, left) for _ in range(int(rng.integers(1, 3)))}
        phi2 = {_random_atom(rng, BINARY_SIGNATURE, right) for _ in range(int(rng.integers(1, 3)))}
        if not any(x1 in a.args for a in phi1):
            phi1.add(Atom("A", (x1,)))
        if not any(x2 in a.args for a in phi2):
            phi2.add(Atom("E", (x2, x2)))
        head = Atom(_pick(rng, ["E", "R"]), (x1, x2))
        rules.append(Rule(phi1 | phi2, {head}, f"d{i + 1}"))
    return RuleSet.from_rules(rules)


def random_marked_query(rng: np.random.Generator, max_atoms: int = 4, max_constants: int = 2) -> MarkedQuery:
    """Random H/V/⊤ query with a random marking, closed to a proper one"""
    constants = [const("c0"), const("c1")][:max_constants]
    pool = [var("X"), var("Y"), var("Z"), var("W")] + constants
    signature = {"H": 2, "V": 2, "top": 1}
    atoms = {_random_atom(rng, signature, pool) for _ in range(int(rng.integers(1, max_atoms + 1)))}
    terms = sorted({t for a in atoms for t in a.args})
    marked = {t for t in terms if rng.random() < 0.3}
    return proper_closure(MarkedQuery(atoms, marked))


def random_grid_database(rng: np.random.Generator, max_facts: int = 5, n_constants: int = 3) -> Database:
    signature = {"H": 2, "V": 2, "top": 1}
    pool = [const(f"c{i}") for i in range(n_constants)]
    return Database(_random_atom(rng, signature, pool) for _ in range(int(rng.integers(1, max_facts + 1))))


def random_morphism(rng: np.random.Generator, n_constants: int = 4) -> Tuple[Database, Dict[Term, Term], Database]:
    """(I, h, J) over E with h: I → J"""
    source = random_database(rng, max_atoms=6, signature={"E": 2}, n_constants=n_constants)
    targets = [const(f"d{i}") for i in range(n_constants)]
    h = {t: _pick(rng, targets) for t in source.sorted_adom}
    extra = random_database(rng, max_atoms=3, signature={"E": 2}, n_constants=n_constants)
    extra_atoms = {a.substitute({t: const(f"d{t.name[1:]}") for t in a.args}) for a in extra}
    image = {a.substitute(h) for a in source}
    return source, h, Database(image | extra_atoms)
