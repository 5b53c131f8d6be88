"""
Grid Rewriter
First-order rewriting of marked queries under the grid rule set and database-side evaluation
"""

import itertools
import logging
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple, Union

import networkx as nx

from config import load_settings
from errors import RefutedQueryError, ResourceLimitError, ValidationError
from kernel import (
    TOP,
    Atom,
    ConjunctiveQuery,
    Homomorphism,
    Instance,
    Term,
    find_homomorphisms,
    find_isomorphism,
    null,
    substitute,
    terms_of,
    top,
    var,
)

logger = logging.getLogger(__name__)

GRID_PREDICATES = ("H", "V")
MARK = "__mark__"


@dataclass(frozen=True)
class MarkedQuery:
    """A BCQ over H, V and ⊤ with the set M of terms that must map to constants"""
    atoms: FrozenSet[Atom]
    marked: FrozenSet[Term] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "atoms", frozenset(self.atoms))
        object.__setattr__(self, "marked", frozenset(self.marked))
        for atom in self.atoms:
            if atom.predicate not in GRID_PREDICATES and atom.predicate != TOP:
                raise ValidationError(f"{atom}: only H, V and {TOP} are allowed in grid queries")
            if any(t.is_null for t in atom.args):
                raise ValidationError(f"{atom}: queries cannot mention nulls")
        stray = self.marked - terms_of(self.atoms)
        if stray:
            raise ValidationError(f"marked terms not in the query: {sorted(stray)}")

    @classmethod
    def of(cls, q: Union[ConjunctiveQuery, Iterable[Atom]], marked: Iterable[Term] = ()) -> "MarkedQuery":
        atoms = q.atoms if isinstance(q, ConjunctiveQuery) else frozenset(q)
        return cls(atoms, frozenset(marked))

    @property
    def terms(self) -> Tuple[Term, ...]:
        return tuple(sorted(terms_of(self.atoms)))

    @property
    def unmarked(self) -> Tuple[Term, ...]:
        return tuple(t for t in self.terms if t not in self.marked)

    @property
    def edges(self) -> List[Atom]:
        return sorted(a for a in self.atoms if a.predicate in GRID_PREDICATES)

    @property
    def is_dead(self) -> bool:
        return not self.unmarked

    @property
    def query(self) -> ConjunctiveQuery:
        return ConjunctiveQuery(self.atoms)

    def __str__(self) -> str:
        atoms = ", ".join(str(a) for a in sorted(self.atoms))
        marks = ", ".join(str(t) for t in sorted(self.marked))
        return f"({{{atoms}}}, {{{marks}}})"


# ---------------------------------------------------------------------------
# Maximal-variable cases
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OneAtom:
    source: Term
    predicate: str


@dataclass(frozen=True)
class TwoAtoms:
    h_source: Term
    v_source: Term


@dataclass(frozen=True)
class Converging:
    first: Term
    second: Term
    predicate: str


@dataclass(frozen=True)
class Isolated:
    """The variable occurs in ⊤-atoms only"""


MaximalCase = Union[OneAtom, TwoAtoms, Converging, Isolated]


@dataclass(frozen=True)
class GridVerdict:
    entailed: bool
    marking: Optional[FrozenSet[Term]] = None
    dead_query: Optional[MarkedQuery] = None
    witness: Homomorphism = field(default_factory=dict, compare=False)


# ---------------------------------------------------------------------------
# Marking
# ---------------------------------------------------------------------------

def _edge_graph(atoms: Iterable[Atom]) -> nx.DiGraph:
    graph = nx.DiGraph()
    graph.add_nodes_from(terms_of(atoms))
    graph.add_edges_from(a.args for a in atoms if a.predicate in GRID_PREDICATES)
    return graph


def proper_closure(mq: MarkedQuery) -> MarkedQuery:
    """Least superset of M closed under the five marking rules"""
    marked = set(mq.marked) | {t for t in mq.terms if t.is_constant}
    edges = mq.edges
    graph = _edge_graph(mq.atoms)
    cycles = [
        comp for comp in nx.strongly_connected_components(graph)
        if len(comp) > 1 or any(graph.has_edge(t, t) for t in comp)
    ]
    sources: Dict[Tuple[str, Term], List[Term]] = {}
    for atom in edges:
        sources.setdefault((atom.predicate, atom.args[1]), []).append(atom.args[0])

    changed = True
    while changed:
        changed = False
        before = len(marked)
        for atom in edges:
            if atom.args[1] in marked:
                marked.add(atom.args[0])
        for comp in cycles:
            if any(t.is_constant for t in comp):
                marked |= comp
        for (_, target), preds in sources.items():
            if any(p in marked for p in preds):
                marked.update(preds)
            if len({p for p in preds if p.is_constant}) >= 2:
                marked.add(target)
        changed = len(marked) != before
    return MarkedQuery(mq.atoms, frozenset(marked))


def is_properly_marked(mq: MarkedQuery) -> bool:
    return proper_closure(mq).marked == mq.marked


def maximal_variables(mq: MarkedQuery) -> List[Term]:
    """Unmarked variables without an outgoing H/V edge"""
    has_out = {a.args[0] for a in mq.edges}
    return [t for t in mq.unmarked if t.is_variable and t not in has_out]


def classify_maximal(mq: MarkedQuery, x: Term) -> MaximalCase:
    if x not in maximal_variables(mq):
        raise ValidationError(f"{x} is not a maximal variable of {mq}")
    incoming = {p: sorted({a.args[0] for a in mq.edges if a.predicate == p and a.args[1] == x})
                for p in GRID_PREDICATES}
    for predicate in GRID_PREDICATES:
        if len(incoming[predicate]) >= 2:
            first, second = incoming[predicate][:2]
            return Converging(first, second, predicate)
    if incoming["H"] and incoming["V"]:
        return TwoAtoms(incoming["H"][0], incoming["V"][0])
    for predicate in GRID_PREDICATES:
        if incoming[predicate]:
            return OneAtom(incoming[predicate][0], predicate)
    return Isolated()


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def _restricted(atoms: Iterable[Atom], marked: Iterable[Term]) -> MarkedQuery:
    atoms = frozenset(atoms)
    return MarkedQuery(atoms, frozenset(marked) & terms_of(atoms))


def _fresh_variable(mq: MarkedQuery) -> Term:
    taken = {t.name for t in mq.terms}
    n = next(i for i in itertools.count(1) if f"v{i}" not in taken)
    return var(f"v{n}")


def cut(mq: MarkedQuery, x: Term) -> MarkedQuery:
    """
    Drop R(t,x) together with ⊤(x)

    A marked t that no longer occurs is kept as ⊤(t) so that it still has
    to be matched by a constant.
    """
    case = classify_maximal(mq, x)
    if not isinstance(case, OneAtom):
        raise ValidationError(f"cut needs a single incoming atom at {x}, found {case}")
    t = case.source
    rest = mq.atoms - {Atom(case.predicate, (t, x)), top(x)}
    if t not in terms_of(rest) and (t.is_constant or t in mq.marked):
        rest = rest | {top(t)}
    return _restricted(rest, mq.marked)


def reduce(mq: MarkedQuery, x: Term) -> Tuple[MarkedQuery, MarkedQuery]:
    """Replace H(tH,x), V(tV,x) by H(x',tV), V(x',tH) with x' unmarked, then marked"""
    case = classify_maximal(mq, x)
    if not isinstance(case, TwoAtoms):
        raise ValidationError(f"reduce needs exactly one H and one V atom into {x}, found {case}")
    fresh = _fresh_variable(mq)
    rest = mq.atoms - {Atom("H", (case.h_source, x)), Atom("V", (case.v_source, x)), top(x)}
    rest = rest | {Atom("H", (fresh, case.v_source)), Atom("V", (fresh, case.h_source))}
    return _restricted(rest, mq.marked), _restricted(rest, mq.marked | {fresh})


def merge(mq: MarkedQuery, x: Term, t: Term, t_other: Term) -> MarkedQuery:
    """
    Identify two sources of the same predicate into x and keep ⊤ of the replaced term

    A variable is always replaced by a constant; two distinct constants
    cannot share a null successor.
    """
    case = classify_maximal(mq, x)
    if not isinstance(case, Converging):
        raise ValidationError(f"merge needs converging atoms into {x}, found {case}")
    if t == t_other:
        raise ValidationError("merge needs two distinct terms")
    if t.is_constant and t_other.is_constant:
        raise RefutedQueryError(f"{t} and {t_other} cannot both precede the null {x}")
    if t.is_constant:
        t, t_other = t_other, t
    merged = substitute(mq.atoms, {t: t_other}) | {top(t)}
    return _restricted(merged, mq.marked)


def drop_isolated(mq: MarkedQuery, x: Term) -> MarkedQuery:
    """An unmarked ⊤-only variable is always matched by the loop null"""
    if not isinstance(classify_maximal(mq, x), Isolated):
        raise ValidationError(f"{x} is not isolated")
    return _restricted(mq.atoms - {top(x)}, mq.marked)


def collapse_loop(mq: MarkedQuery) -> Optional[MarkedQuery]:
    """
    Resolve an alive query whose unmarked part has a directed cycle

    Such a cycle can only map to the loop null, whose connected part of the
    chase holds no constant. The cycle's component is removed when it is
    wholly unmarked; otherwise the query is unsatisfiable (None).
    """
    graph = _edge_graph(mq.atoms)
    unmarked = graph.subgraph(mq.unmarked)
    try:
        cycle = nx.find_cycle(unmarked)
    except nx.NetworkXNoCycle:
        raise ValidationError(f"{mq} has neither a maximal variable nor an unmarked cycle")
    component = nx.node_connected_component(graph.to_undirected(), cycle[0][0])
    if component & mq.marked:
        logger.info("refuted: unmarked cycle %s reaches a marked term", cycle)
        return None
    logger.info("collapsed loop component %s", sorted(component))
    return _restricted([a for a in mq.atoms if not (a.terms & component)], mq.marked)


# ---------------------------------------------------------------------------
# Deduplication up to renaming
# ---------------------------------------------------------------------------

def _canonical(mq: MarkedQuery) -> Instance:
    renaming = {t: null(t.name) for t in mq.terms if t.is_variable}
    atoms = set(substitute(mq.atoms, renaming))
    atoms |= {Atom(MARK, (renaming.get(t, t),)) for t in mq.marked}
    return Instance(atoms)


def _bucket(mq: MarkedQuery) -> Tuple:
    counts = Counter(a.predicate for a in mq.atoms if a.predicate != TOP)
    return (
        len(mq.terms),
        len(mq.marked),
        tuple(sorted(counts.items())),
        tuple(t for t in mq.terms if t.is_constant),
    )


class _SeenSet:
    def __init__(self):
        self._buckets: Dict[Tuple, List[Instance]] = {}
        self.size = 0

    def add(self, mq: MarkedQuery) -> bool:
        """False when an equivalent query was seen before"""
        canonical = _canonical(mq)
        bucket = self._buckets.setdefault(_bucket(mq), [])
        for other in bucket:
            if find_isomorphism(canonical, other) is not None:
                return False
        bucket.append(canonical)
        self.size += 1
        return True


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def marked_witness(inst: Instance, mq: MarkedQuery) -> Optional[Homomorphism]:
    """A homomorphism q → inst with t ∈ M iff h(t) is a constant"""
    if all(t.is_constant for t in inst.adom) and not mq.is_dead:
        return None
    for hom in find_homomorphisms(mq.atoms, inst):
        if all((hom.get(t, t).is_constant) == (t in mq.marked) for t in mq.terms):
            return hom
    return None


def eval_marked(inst: Instance, mq: MarkedQuery) -> bool:
    return marked_witness(inst, mq) is not None


# ---------------------------------------------------------------------------
# Engine
# ---------------------------------------------------------------------------

class GridRewriter:
    """Exhaustive cut / reduce / merge rewriting into dead queries"""

    def __init__(self, query_cap: Optional[int] = None):
        self.query_cap = query_cap if query_cap is not None else load_settings().query_cap

        # State
        self.steps = 0
        self.refuted = 0
        self.collapsed = 0
        self.generated = 0

    def reset(self):
        self.steps = 0
        self.refuted = 0
        self.collapsed = 0
        self.generated = 0

    def step(self, mq: MarkedQuery) -> List[MarkedQuery]:
        """Raw outputs of the operation at the least maximal variable"""
        maximal = maximal_variables(mq)
        if not maximal:
            self.collapsed += 1
            out = collapse_loop(mq)
            return [out] if out is not None else []
        x = maximal[0]
        case = classify_maximal(mq, x)
        if isinstance(case, OneAtom):
            return [cut(mq, x)]
        if isinstance(case, TwoAtoms):
            return list(reduce(mq, x))
        if isinstance(case, Converging):
            try:
                return [merge(mq, x, case.first, case.second)]
            except RefutedQueryError as e:
                logger.debug("refuted branch: %s", e)
                return []
        return [drop_isolated(mq, x)]

    @staticmethod
    def _check_monotone(before: MarkedQuery, after: MarkedQuery):
        if len(after.terms) > len(before.terms) or len(after.edges) > len(before.edges):
            raise AssertionError(f"rewriting step grew the query: {before} → {after}")

    def rewrite(self, mq: MarkedQuery) -> List[MarkedQuery]:
        """
        rew(q, M): dead queries whose database matches cover the chase matches of mq

        Outputs that are not properly marked cannot match the chase and are
        dropped as refuted.
        """
        if not is_properly_marked(mq):
            raise ValidationError(f"{mq} is not properly marked")
        seen = _SeenSet()
        seen.add(mq)
        worklist = [mq]
        dead: List[MarkedQuery] = []
        while worklist:
            current = worklist.pop()
            if current.is_dead:
                dead.append(current)
                continue
            self.steps += 1
            for out in self.step(current):
                self._check_monotone(current, out)
                if not is_properly_marked(out):
                    self.refuted += 1
                    logger.debug("refuted improperly marked output %s", out)
                    continue
                if seen.add(out):
                    self.generated += 1
                    if seen.size > self.query_cap:
                        raise ResourceLimitError(
                            f"query cap {self.query_cap:,} exceeded while rewriting {mq}; raise RULEBENCH_QUERY_CAP"
                        )
                    worklist.append(out)
        return sorted(dead, key=str)

    def markings(self, q: ConjunctiveQuery) -> List[MarkedQuery]:
        """Every properly marked (q, M) with M ⊇ constants"""
        mq0 = MarkedQuery.of(q)
        constants = frozenset(t for t in mq0.terms if t.is_constant)
        variables = [t for t in mq0.terms if t.is_variable]
        found = []
        for r in range(len(variables) + 1):
            for chosen in itertools.combinations(variables, r):
                candidate = MarkedQuery(mq0.atoms, constants | frozenset(chosen))
                if is_properly_marked(candidate):
                    found.append(candidate)
        return found

    def entails(self, db: Instance, q: ConjunctiveQuery) -> GridVerdict:
        """
        db, R_grid ⊨ q

        Constant-free queries always hold through the loop null. Otherwise
        some properly marked (q, M) must have a dead rewriting matched by db.
        """
        mq0 = MarkedQuery.of(q)
        if q.is_constant_free:
            return GridVerdict(True)
        for mq in self.markings(q):
            for dead in self.rewrite(mq):
                witness = marked_witness(db, dead)
                if witness is not None:
                    return GridVerdict(True, mq.marked, dead, witness)
        logger.debug("no marking of %s rewrites into %s", mq0, db)
        return GridVerdict(False)

    def run_rewrite(self, mq: MarkedQuery) -> Dict:
        print(f"\n🚀 Rewriting {mq} ...")
        self.reset()
        started = time.perf_counter()
        dead = self.rewrite(mq)
        return {
            "input": mq,
            "dead": dead,
            "steps": self.steps,
            "refuted": self.refuted,
            "collapsed": self.collapsed,
            "generated": self.generated,
            "elapsed": time.perf_counter() - started,
        }

    def print_results(self, results: Dict):
        """Print rewriting summary"""
        print("\n" + "=" * 60)
        print("📊 GRID REWRITING")
        print("=" * 60)
        print(f"\n🧮 Steps:     {results['steps']}")
        print(f"   Generated: {results['generated']}")
        print(f"   Refuted:   {results['refuted']}")
        print(f"   Collapsed: {results['collapsed']}")
        print(f"\n✅ Dead queries: {len(results['dead'])}")
        for dq in results["dead"]:
            print(f"   {dq}")
        print(f"\n⏱️  {results['elapsed']:.3f}s")
        print("\n" + "=" * 60)


def rewrite(mq: MarkedQuery) -> List[MarkedQuery]:
    return GridRewriter().rewrite(mq)


def entails_grid(db: Instance, q: ConjunctiveQuery) -> bool:
    return GridRewriter().entails(db, q).entailed


# Quick test
if __name__ == "__main__":
    from catalog import d_grid
    from kernel import const

    a, x = const("a"), var("x")
    rewriter = GridRewriter()
    rewriter.print_results(rewriter.run_rewrite(MarkedQuery({Atom("H", (a, x))}, {a})))
    print("H(a,x):", entails_grid(d_grid(), ConjunctiveQuery({Atom("H", (a, x))})))
