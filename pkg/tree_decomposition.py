"""
Tree Decompositions
Rooted bag trees over instances: validation, a min-degree heuristic and reified bags
"""

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

import networkx as nx
from networkx.algorithms.approximation import treewidth_min_degree

from errors import ValidationError
from kernel import Instance, Term
from reify import hub_term


@dataclass
class TreeDecomposition:
    """Bags keyed by node name; parent links define the rooted tree"""
    bags: Dict[str, FrozenSet[Term]]
    parent: Dict[str, Optional[str]] = field(default_factory=dict)

    def __post_init__(self):
        self.bags = {n: frozenset(b) for n, b in self.bags.items()}
        for node in self.bags:
            self.parent.setdefault(node, None)
        roots = [n for n, p in self.parent.items() if p is None]
        if len(roots) != 1:
            raise ValidationError(f"tree decomposition needs exactly one root, found {len(roots)}")
        unknown = [p for p in self.parent.values() if p is not None and p not in self.bags]
        if unknown:
            raise ValidationError(f"parent link to unknown node '{unknown[0]}'")
        if not nx.is_tree(self.graph()):
            raise ValidationError("parent links do not form a tree")

    @classmethod
    def from_edges(
        cls,
        bags: Mapping[str, Iterable[Term]],
        edges: Iterable[Tuple[str, str]],
        root: Optional[str] = None,
    ) -> "TreeDecomposition":
        """Orient an undirected bag tree away from `root` (default: first bag)"""
        if not bags:
            raise ValidationError("tree decomposition without bags")
        graph = nx.Graph()
        graph.add_nodes_from(bags)
        for u, v in edges:
            if u not in bags or v not in bags:
                raise ValidationError(f"edge {u}-{v} mentions an unknown bag")
            graph.add_edge(u, v)
        if not nx.is_tree(graph):
            raise ValidationError("bag graph is not a tree")
        root = root if root is not None else next(iter(bags))
        if root not in bags:
            raise ValidationError(f"root '{root}' is not a bag")
        parent: Dict[str, Optional[str]] = {root: None}
        for u, v in nx.bfs_edges(graph, root):
            parent[v] = u
        return cls({n: frozenset(b) for n, b in bags.items()}, parent)

    def graph(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(self.bags)
        graph.add_edges_from((c, p) for c, p in self.parent.items() if p is not None)
        return graph

    @property
    def root(self) -> str:
        return next(n for n, p in self.parent.items() if p is None)

    @property
    def width(self) -> int:
        return max((len(b) for b in self.bags.values()), default=0) - 1

    def children(self, node: str) -> List[str]:
        return sorted(c for c, p in self.parent.items() if p == node)

    def preorder(self) -> List[str]:
        order, stack = [], [self.root]
        while stack:
            node = stack.pop()
            order.append(node)
            stack.extend(reversed(self.children(node)))
        return order

    def edges(self) -> List[Tuple[str, str]]:
        return sorted((p, c) for c, p in self.parent.items() if p is not None)

    def validate(self, inst: Instance) -> List[str]:
        """Coverage, atom co-occurrence and per-term connectivity problems"""
        problems = []
        covered = frozenset().union(*self.bags.values()) if self.bags else frozenset()
        for t in sorted(inst.adom - covered):
            problems.append(f"term {t} occurs in no bag")
        for atom in inst:
            if atom.arity > 1 and not any(atom.terms <= bag for bag in self.bags.values()):
                problems.append(f"atom {atom} is not contained in any bag")
        graph = self.graph()
        for t in sorted(covered):
            holding = [n for n, bag in self.bags.items() if t in bag]
            if not nx.is_connected(graph.subgraph(holding)):
                problems.append(f"bags containing {t} are not connected")
        return problems


def gaifman_graph(inst: Instance) -> nx.Graph:
    graph = nx.Graph()
    graph.add_nodes_from(inst.sorted_adom)
    for atom in inst:
        ts = sorted(atom.terms)
        graph.add_edges_from((u, v) for i, u in enumerate(ts) for v in ts[i + 1:])
    return graph


def _bag_index(name: str) -> int:
    return int(name[1:])


def forest_links(bags: Iterable[str], edges: Iterable[Tuple[str, str]]) -> List[Tuple[str, str]]:
    """Edges joining each forest component, by its lowest bag, under the lowest bag overall"""
    forest = nx.Graph()
    forest.add_nodes_from(bags)
    forest.add_edges_from(edges)
    # component term sets are disjoint, so any join keeps the decomposition valid
    lows = sorted((min(comp, key=_bag_index) for comp in nx.connected_components(forest)), key=_bag_index)
    return [(lows[0], low) for low in lows[1:]]


def decompose(inst: Instance) -> TreeDecomposition:
    """Min-degree elimination heuristic on the Gaifman graph"""
    graph = gaifman_graph(inst)
    if graph.number_of_nodes() == 0:
        return TreeDecomposition({"b0": frozenset()})
    _, decomposition = treewidth_min_degree(graph)
    ordered = sorted(decomposition.nodes, key=lambda bag: (sorted(bag), len(bag)))
    names = {bag: f"b{i}" for i, bag in enumerate(ordered)}
    edges = [(names[u], names[v]) for u, v in decomposition.edges]
    edges += forest_links(names.values(), edges)
    return TreeDecomposition.from_edges({names[b]: b for b in ordered}, edges, root=names[ordered[0]])


def reify_decomposition(td: TreeDecomposition, inst: Instance) -> TreeDecomposition:
    """Add the hub of every arity->=3 atom to each bag holding all of its terms"""
    wide = [a for a in inst if a.arity >= 3]
    bags = {}
    for node, bag in td.bags.items():
        hubs = {hub_term(a) for a in wide if a.terms <= bag}
        bags[node] = bag | hubs
    return TreeDecomposition(bags, dict(td.parent))
