"""
Cliquewidth
Expression algebra over colored instances: evaluation, validation, recoloring and td conversion
"""

from __future__ import annotations

import dataclasses
import itertools
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Dict, Hashable, Iterator, List, Mapping, Optional, Set, Tuple, Union

import networkx as nx

from config import load_settings
from errors import ResourceLimitError, ValidationError
from kernel import TOP, Atom, Instance, Signature, Term, null, top
from tree_decomposition import TreeDecomposition

logger = logging.getLogger(__name__)

Color = Hashable
DONE = "done"


def color_key(color: Color):
    """Total order on colors: ints, then strings, then tuples"""
    if isinstance(color, bool):
        return (3, repr(color))
    if isinstance(color, int):
        return (0, color)
    if isinstance(color, str):
        return (1, color)
    if isinstance(color, tuple):
        return (2, tuple(color_key(c) for c in color))
    return (3, repr(color))


def sorted_colors(colors) -> List[Color]:
    return sorted(set(colors), key=color_key)


# ---------------------------------------------------------------------------
# Expression nodes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstLeaf:
    constant: Term
    color: Color


@dataclass(frozen=True)
class NullLeaf:
    color: Color


@dataclass(frozen=True)
class Void:
    pass


@dataclass(frozen=True)
class Add:
    predicate: str
    colors: Tuple[Color, ...]
    child: "CwExpr"


@dataclass(frozen=True)
class Recolor:
    source: Color
    target: Color
    child: "CwExpr"


@dataclass(frozen=True)
class DisjointUnion:
    left: "CwExpr"
    right: "CwExpr"


@dataclass(frozen=True)
class Ref:
    name: str


CwExpr = Union[ConstLeaf, NullLeaf, Void, Add, Recolor, DisjointUnion, Ref]

_UNARY = (Add, Recolor)


def _split_chain(expr: CwExpr) -> Tuple[List[CwExpr], CwExpr]:
    """Peel a chain of unary operators, outermost first"""
    ops = []
    while isinstance(expr, _UNARY):
        ops.append(expr)
        expr = expr.child
    return ops, expr


def _rebuild(ops: List[CwExpr], base: CwExpr) -> CwExpr:
    for op in reversed(ops):
        base = dataclasses.replace(op, child=base)
    return base


def union_all(parts: List[CwExpr]) -> CwExpr:
    """Left-nested ⊕ of the parts; Void for none"""
    expr: Optional[CwExpr] = None
    for part in parts:
        expr = part if expr is None else DisjointUnion(expr, part)
    return expr if expr is not None else Void()


def iter_nodes(expr: CwExpr, path: str = "") -> Iterator[Tuple[str, CwExpr]]:
    """Pre-order walk with positional paths; Refs are not followed"""
    stack = [(path, expr)]
    while stack:
        here, node = stack.pop()
        here = f"{here}/{type(node).__name__.lower()}"
        yield here, node
        if isinstance(node, _UNARY):
            stack.append((here, node.child))
        elif isinstance(node, DisjointUnion):
            stack.append((f"{here}.R", node.right))
            stack.append((f"{here}.L", node.left))


@dataclass(frozen=True)
class EquationSystem:
    """Named expressions with a designated root; Ref realizes recursion"""
    equations: Tuple[Tuple[str, CwExpr], ...]
    root: str

    def __post_init__(self):
        object.__setattr__(self, "equations", tuple(self.equations))
        names = [n for n, _ in self.equations]
        if len(set(names)) != len(names):
            raise ValidationError("equation names must be unique")

    @classmethod
    def of(cls, equations: Mapping[str, CwExpr], root: str) -> "EquationSystem":
        return cls(tuple(equations.items()), root)

    @classmethod
    def single(cls, expr: CwExpr, name: str = "main") -> "EquationSystem":
        return cls(((name, expr),), name)

    @property
    def names(self) -> List[str]:
        return [n for n, _ in self.equations]

    def __contains__(self, name: str) -> bool:
        return any(n == name for n, _ in self.equations)

    def __getitem__(self, name: str) -> CwExpr:
        for n, expr in self.equations:
            if n == name:
                return expr
        raise ValidationError(f"unresolved reference '{name}'")

    def with_equation(self, name: str, expr: CwExpr, root: Optional[str] = None) -> "EquationSystem":
        eqs = dict(self.equations)
        eqs[name] = expr
        return EquationSystem.of(eqs, root or self.root)


@dataclass(frozen=True)
class ColoredInstance:
    """(I, λ) with λ total on adom(I)"""
    inst: Instance
    coloring: Dict[Term, Color]

    def __post_init__(self):
        missing = self.inst.adom - set(self.coloring)
        if missing:
            raise ValidationError(f"coloring is not total: {', '.join(map(str, sorted(missing)[:5]))}")
        extra = set(self.coloring) - self.inst.adom
        if extra:
            raise ValidationError(f"coloring mentions terms outside the instance: {sorted(extra)[:5]}")

    @property
    def colors(self) -> List[Color]:
        return sorted_colors(self.coloring.values())

    def terms_with(self, color: Color) -> List[Term]:
        return sorted(t for t, c in self.coloring.items() if c == color)


@dataclass(frozen=True)
class CwIssue:
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def _reference_graph(system: EquationSystem) -> nx.MultiDiGraph:
    graph = nx.MultiDiGraph()
    graph.add_nodes_from(system.names)
    for name, expr in system.equations:
        for _, node in iter_nodes(expr):
            if isinstance(node, Ref) and node.name in system:
                graph.add_edge(name, node.name)
    return graph


def validate(system: EquationSystem, signature: Optional[Signature] = None) -> List[CwIssue]:
    """
    Reference resolution, color-tuple arities and constant uniqueness over the unfolding

    Returns:
        List of issues (empty when the system is valid); never raises
    """
    issues: List[CwIssue] = []
    if system.root not in system:
        issues.append(CwIssue("root", f"root '{system.root}' is not defined"))

    arities: Dict[str, Tuple[int, str]] = {}
    local_constants: Dict[str, Counter] = {}
    first_seen: Dict[Term, str] = {}
    for name, expr in system.equations:
        local_constants[name] = Counter()
        for path, node in iter_nodes(expr, name):
            if isinstance(node, Ref) and node.name not in system:
                issues.append(CwIssue(path, f"unresolved reference '{node.name}'"))
            elif isinstance(node, Add):
                n = len(node.colors)
                if signature is not None and node.predicate in signature:
                    expected = signature.arity(node.predicate)
                    if expected != n:
                        issues.append(CwIssue(path, f"{node.predicate} has arity {expected}, got {n} colors"))
                elif node.predicate == TOP and n != 1:
                    issues.append(CwIssue(path, f"{TOP} has arity 1, got {n} colors"))
                elif node.predicate in arities and arities[node.predicate][0] != n:
                    arity, where = arities[node.predicate]
                    issues.append(CwIssue(path, f"{node.predicate} used with {n} colors, {arity} at {where}"))
                else:
                    arities.setdefault(node.predicate, (n, path))
            elif isinstance(node, ConstLeaf):
                if not node.constant.is_constant:
                    issues.append(CwIssue(path, f"{node.constant} is not a constant"))
                local_constants[name][node.constant] += 1
                first_seen.setdefault(node.constant, path)

    if system.root not in system:
        return issues

    graph = _reference_graph(system)
    reachable = nx.descendants(graph, system.root) | {system.root}
    cyclic = set()
    for component in nx.strongly_connected_components(graph):
        if len(component) > 1 or any(graph.has_edge(n, n) for n in component):
            cyclic |= component
    cyclic &= reachable

    repeated = set()
    for name in sorted(cyclic):
        below = nx.descendants(graph, name) | {name}
        for other in below:
            repeated |= set(local_constants[other])
    for c in sorted(repeated):
        issues.append(CwIssue(first_seen[c], f"constant {c} lies under a recursive reference"))

    memo: Dict[str, Counter] = {}

    def multiplicity(name: str) -> Counter:
        if name in memo:
            return memo[name]
        total = Counter(local_constants[name])
        if name not in cyclic:
            refs = Counter(v for _, v in graph.out_edges(name))
            for target, times in refs.items():
                for c, k in multiplicity(target).items():
                    total[c] += k * times
        memo[name] = total
        return total

    for c, k in sorted(multiplicity(system.root).items()):
        if k > 1 and c not in repeated:
            issues.append(CwIssue(first_seen[c], f"constant {c} occurs {k} times in the unfolding"))
    return issues


def count_colors(system: EquationSystem) -> int:
    """Distinct colors mentioned anywhere in the system"""
    seen: Set[Color] = set()
    for _, expr in system.equations:
        for _, node in iter_nodes(expr):
            if isinstance(node, (ConstLeaf, NullLeaf)):
                seen.add(node.color)
            elif isinstance(node, Add):
                seen.update(node.colors)
            elif isinstance(node, Recolor):
                seen.update((node.source, node.target))
    return len(seen)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _add_tuples(coloring: Mapping[Term, Color], predicate: str, colors: Tuple[Color, ...]) -> Set[Atom]:
    by_color: Dict[Color, List[Term]] = defaultdict(list)
    for term in sorted(coloring):
        by_color[coloring[term]].append(term)
    pools = [by_color.get(k, []) for k in colors]
    return {Atom(predicate, args) for args in itertools.product(*pools)}


def add_atoms(ci: ColoredInstance, predicate: str, colors: Tuple[Color, ...]) -> ColoredInstance:
    """ci ∪ {R(e) | λ(e) = colors}; coloring unchanged"""
    new = _add_tuples(ci.coloring, predicate, tuple(colors))
    return ColoredInstance(ci.inst.union(new), dict(ci.coloring))


class ExpressionEvaluator:
    """Bounded unfolding of equation systems into colored instances"""

    def __init__(self, atom_cap: Optional[int] = None):
        self.atom_cap = atom_cap if atom_cap is not None else load_settings().atom_cap

    def _check_cap(self, size: int):
        if size > self.atom_cap:
            raise ResourceLimitError(
                f"atom cap {self.atom_cap:,} exceeded during evaluation ({size:,} atoms)"
            )

    def evaluate(self, system: EquationSystem, depth: int) -> ColoredInstance:
        """
        Evaluate Ref(root) with `depth` unfoldings

        Null leaves are named e<path> after the ⊕-branches leading to them,
        so eval(d) is a subinstance of eval(d+1).
        """
        if depth < 0:
            raise ValidationError(f"unfold depth must be >= 0, got {depth}")
        if system.root not in system:
            raise ValidationError(f"root '{system.root}' is not defined")
        atoms, coloring = self._eval(system, Ref(system.root), depth, "")
        return ColoredInstance(Instance(atoms), coloring)

    def _eval(self, system, expr, budget, path):
        ops, base = _split_chain(expr)
        if isinstance(base, ConstLeaf):
            atoms, coloring = {top(base.constant)}, {base.constant: base.color}
        elif isinstance(base, NullLeaf):
            term = null(f"e{path}")
            atoms, coloring = {top(term)}, {term: base.color}
        elif isinstance(base, Void):
            atoms, coloring = set(), {}
        elif isinstance(base, Ref):
            if budget == 0:
                atoms, coloring = set(), {}
            else:
                atoms, coloring = self._eval(system, system[base.name], budget - 1, path)
        elif isinstance(base, DisjointUnion):
            atoms, coloring = self._eval(system, base.left, budget, path + "0")
            right_atoms, right_coloring = self._eval(system, base.right, budget, path + "1")
            clash = set(coloring) & set(right_coloring)
            if clash:
                raise ValidationError(f"constant {min(clash)} occurs on both sides of a union")
            atoms |= right_atoms
            coloring.update(right_coloring)
            self._check_cap(len(atoms))
        else:
            raise ValidationError(f"unknown expression node {base!r}")

        for op in reversed(ops):
            if isinstance(op, Add):
                atoms |= _add_tuples(coloring, op.predicate, op.colors)
                self._check_cap(len(atoms))
            else:
                for term, color in coloring.items():
                    if color == op.source:
                        coloring[term] = op.target
        return atoms, coloring

    def run_eval(self, system: EquationSystem, depth: int) -> Dict:
        ci = self.evaluate(system, depth)
        per_color = Counter(ci.coloring.values())
        return {
            "colored": ci,
            "depth": depth,
            "atoms": len(ci.inst),
            "terms": len(ci.inst.adom),
            "colors_used": count_colors(system),
            "color_classes": {repr(c): per_color[c] for c in sorted_colors(per_color)},
        }

    def print_results(self, results: Dict):
        """Print evaluation summary"""
        print("\n" + "=" * 60)
        print("📊 EXPRESSION EVALUATION")
        print("=" * 60)
        print(f"\n🎨 Unfold depth: {results['depth']}")
        print(f"   Atoms:        {results['atoms']:,}")
        print(f"   Terms:        {results['terms']:,}")
        print(f"   Colors:       {results['colors_used']}")
        for color, count in results["color_classes"].items():
            print(f"   {color:>12}: {count} terms")
        print("\n" + "=" * 60)


def evaluate(system: EquationSystem, depth: int) -> ColoredInstance:
    return ExpressionEvaluator().evaluate(system, depth)


def unfold(system: EquationSystem, depth: int) -> CwExpr:
    """Ref-free expression whose evaluation equals evaluate(system, depth)"""

    def expand(expr: CwExpr, budget: int) -> CwExpr:
        ops, base = _split_chain(expr)
        if isinstance(base, Ref):
            base = expand(system[base.name], budget - 1) if budget > 0 else Void()
        elif isinstance(base, DisjointUnion):
            base = DisjointUnion(expand(base.left, budget), expand(base.right, budget))
        return _rebuild(ops, base)

    return expand(Ref(system.root), depth)


# ---------------------------------------------------------------------------
# Recoloring
# ---------------------------------------------------------------------------

def recolor_witness(
    system: EquationSystem,
    new_coloring: Mapping[Term, Color],
    depth: int,
) -> EquationSystem:
    """
    Expression producing eval(system, depth) colored by new_coloring

    Leaves take the pair (k, λ'(e)); every Add and Recolor is fanned out
    over the new palette; a final projection (k, ℓ) → ℓ restores λ'.
    The output uses at most (n+1)·|palette| colors.
    """
    original = evaluate(system, depth)
    missing = original.inst.adom - set(new_coloring)
    if missing:
        raise ValidationError(f"new coloring is not total: {', '.join(map(str, sorted(missing)[:5]))}")
    lam = {t: new_coloring[t] for t in original.inst.adom}
    palette = sorted_colors(lam.values())

    tree = unfold(system, depth)
    old = sorted_colors(
        c
        for _, node in iter_nodes(tree)
        for c in (
            (node.color,) if isinstance(node, (ConstLeaf, NullLeaf))
            else node.colors if isinstance(node, Add)
            else (node.source, node.target) if isinstance(node, Recolor)
            else ()
        )
    )
    pairs = {(k, l) for k in old for l in palette}
    if pairs & set(palette):
        raise ValidationError("new palette collides with paired colors")

    def lift(expr: CwExpr, path: str) -> CwExpr:
        ops, base = _split_chain(expr)
        if isinstance(base, ConstLeaf):
            node: CwExpr = ConstLeaf(base.constant, (base.color, lam[base.constant]))
        elif isinstance(base, NullLeaf):
            node = NullLeaf((base.color, lam[null(f"e{path}")]))
        elif isinstance(base, DisjointUnion):
            node = DisjointUnion(lift(base.left, path + "0"), lift(base.right, path + "1"))
        else:
            node = Void()
        for op in reversed(ops):
            if isinstance(op, Add):
                for combo in itertools.product(palette, repeat=len(op.colors)):
                    node = Add(op.predicate, tuple(zip(op.colors, combo)), node)
            elif op.source != op.target:
                for l in palette:
                    node = Recolor((op.source, l), (op.target, l), node)
        return node

    body = lift(tree, "")
    for k in old:
        for l in palette:
            body = Recolor((k, l), l, body)
    return EquationSystem.single(body)


# ---------------------------------------------------------------------------
# Tree decompositions to expressions
# ---------------------------------------------------------------------------

def td_color_bound(signature: Signature, width: int) -> int:
    """(k+1) · 2^(|Σ1| + (2(k+1)+1)·|Σ2|)"""
    unary = len(signature.with_arity(1))
    binary = len(signature.with_arity(2))
    k = max(width, 0)
    return (k + 1) * 2 ** (unary + (2 * (k + 1) + 1) * binary)


def td_to_cw(inst: Instance, td: TreeDecomposition) -> EquationSystem:
    """
    Ref-free expression for a binary instance from a tree decomposition

    Every term gets a slot unique within each bag and is introduced at its
    pivot, the topmost bag holding it. A term whose link partner was
    introduced higher up carries the link request in its color until the
    partner's pivot adds the atom. Requests are discharged slot-ascending.
    """
    wide = [p for p, a in inst.signature().entries if a > 2]
    if wide:
        raise ValidationError(f"signature is not binary: {', '.join(wide)}")
    problems = td.validate(inst)
    if problems:
        raise ValidationError("invalid tree decomposition: " + "; ".join(problems))

    order = td.preorder()
    depth = {td.root: 0}
    for node in order:
        for child in td.children(node):
            depth[child] = depth[node] + 1

    slot: Dict[Term, int] = {}
    pivot: Dict[Term, str] = {}
    for node in order:
        parent = td.parent[node]
        used = {slot[t] for t in td.bags[node] if parent is not None and t in td.bags[parent] and t in slot}
        for term in sorted(td.bags[node]):
            if term in slot or term not in inst.adom:
                continue
            s = next(i for i in itertools.count() if i not in used)
            used.add(s)
            slot[term] = s
            pivot[term] = node

    requests: Dict[Term, Set[Tuple[str, str, int]]] = defaultdict(set)
    local: Dict[str, List[Atom]] = defaultdict(list)
    nullary: List[str] = []
    for atom in inst:
        if atom.predicate == TOP:
            continue
        if atom.arity == 0:
            nullary.append(atom.predicate)
        elif atom.arity == 1 or atom.args[0] == atom.args[1] or pivot[atom.args[0]] == pivot[atom.args[1]]:
            local[pivot[atom.args[0]]].append(atom)
        else:
            s, t = atom.args
            if depth[pivot[s]] > depth[pivot[t]]:
                requests[s].add((atom.predicate, "out", slot[t]))
            else:
                requests[t].add((atom.predicate, "in", slot[s]))

    built: Dict[str, Tuple[Optional[CwExpr], Set[Color]]] = {}
    for node in reversed(order):
        parts: List[CwExpr] = []
        live: Set[Color] = set()
        for child in td.children(node):
            child_expr, child_live = built.pop(child)
            if child_expr is not None:
                parts.append(child_expr)
                live |= child_live

        fresh = sorted((t for t, p in pivot.items() if p == node), key=lambda t: slot[t])
        color = {t: ("new", slot[t], tuple(sorted(requests[t]))) for t in fresh}
        for term in fresh:
            parts.append(ConstLeaf(term, color[term]) if term.is_constant else NullLeaf(color[term]))
        if not parts:
            built[node] = (None, set())
            continue
        expr = union_all(parts)

        for term in fresh:
            for requester in sorted_colors(live):
                if requester == DONE:
                    continue
                for predicate, direction, wanted in requester[1]:
                    if wanted != slot[term]:
                        continue
                    pair = (requester, color[term]) if direction == "out" else (color[term], requester)
                    expr = Add(predicate, pair, expr)

        for atom in sorted(local[node]):
            expr = Add(atom.predicate, tuple(color[t] for t in atom.args), expr)

        discharged = {slot[t] for t in fresh}
        next_live: Set[Color] = set()
        for requester in sorted_colors(live):
            if requester == DONE:
                next_live.add(requester)
                continue
            remaining = tuple(r for r in requester[1] if r[2] not in discharged)
            target = ("req", remaining) if remaining else DONE
            if target != requester:
                expr = Recolor(requester, target, expr)
            next_live.add(target)
        for term in fresh:
            pending = color[term][2]
            target = ("req", pending) if pending else DONE
            expr = Recolor(color[term], target, expr)
            next_live.add(target)
        built[node] = (expr, next_live)

    expr, _ = built[td.root]
    expr = expr if expr is not None else Void()
    for predicate in sorted(set(nullary)):
        expr = Add(predicate, (), expr)
    logger.debug("td_to_cw: %d terms, width %d, %d colors", len(slot), td.width,
                  count_colors(EquationSystem.single(expr)))
    return EquationSystem.single(expr)


# Quick test
if __name__ == "__main__":
    from catalog import iless_system, itern_system

    evaluator = ExpressionEvaluator()
    evaluator.print_results(evaluator.run_eval(iless_system(), 4))
    print("I_tern colors:", count_colors(itern_system()))
