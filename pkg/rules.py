"""
Rules
Existential rules, rule sets and their syntactic classification
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Tuple

import networkx as nx

from errors import ValidationError
from kernel import Atom, Signature, Term, terms_of


@dataclass(frozen=True)
class Rule:
    """body → ∃ existentials. head"""
    body: FrozenSet[Atom]
    head: FrozenSet[Atom]
    label: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "body", frozenset(self.body))
        object.__setattr__(self, "head", frozenset(self.head))
        if not self.head:
            raise ValidationError(f"rule {self.label or ''} has an empty head")
        for atom in self.body | self.head:
            if any(t.is_null for t in atom.args):
                raise ValidationError(f"rule atom {atom} mentions a null")

    @property
    def body_variables(self) -> FrozenSet[Term]:
        return frozenset(t for t in terms_of(self.body) if t.is_variable)

    @property
    def head_variables(self) -> FrozenSet[Term]:
        return frozenset(t for t in terms_of(self.head) if t.is_variable)

    @property
    def frontier(self) -> Tuple[Term, ...]:
        return tuple(sorted(self.head_variables & self.body_variables))

    @property
    def existentials(self) -> Tuple[Term, ...]:
        return tuple(sorted(self.head_variables - self.body_variables))

    @property
    def is_datalog(self) -> bool:
        return not self.existentials

    def relabel(self, label: str) -> "Rule":
        return Rule(self.body, self.head, label)

    def __str__(self) -> str:
        body = ", ".join(str(a) for a in sorted(self.body))
        head = ", ".join(str(a) for a in sorted(self.head))
        ex = f"∃{','.join(v.name for v in self.existentials)}. " if self.existentials else ""
        label = f"[{self.label}] " if self.label else ""
        return f"{label}{body} → {ex}{head}"


class Connectivity(Enum):
    CONNECTED = "connected"
    DISCONNECTED = "disconnected"
    NOT_APPLICABLE = "n/a"


@dataclass(frozen=True)
class RuleClass:
    is_datalog: bool
    is_single_headed: bool
    max_arity: int
    datalog_connectivity: Connectivity


@dataclass(frozen=True)
class RuleSet:
    """Ordered, uniquely labelled rules over a shared signature"""
    rules: Tuple[Rule, ...] = ()
    signature: Signature = Signature()

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        seen = set()
        for rule in self.rules:
            if not rule.label:
                raise ValidationError("rules inside a rule set must be labelled")
            if rule.label in seen:
                raise ValidationError(f"duplicate rule label '{rule.label}'")
            seen.add(rule.label)
            for atom in rule.body | rule.head:
                self.signature.check(atom)

    @classmethod
    def from_rules(cls, rules: Iterable[Rule], signature: Optional[Signature] = None) -> "RuleSet":
        """Label unlabelled rules r1, r2, ... and derive the signature"""
        rules = list(rules)
        taken = {r.label for r in rules if r.label}
        labelled = []
        counter = 0
        for rule in rules:
            if not rule.label:
                counter += 1
                while f"r{counter}" in taken:
                    counter += 1
                rule = rule.relabel(f"r{counter}")
                taken.add(rule.label)
            labelled.append(rule)
        derived = Signature.from_atoms(a for r in labelled for a in r.body | r.head)
        if signature is not None:
            derived = signature.merge(derived)
        return cls(tuple(labelled), derived)

    def __iter__(self) -> Iterator[Rule]:
        return iter(self.rules)

    def __len__(self) -> int:
        return len(self.rules)

    def by_label(self) -> Dict[str, Rule]:
        return {r.label: r for r in self.rules}

    @property
    def is_datalog(self) -> bool:
        return all(r.is_datalog for r in self.rules)

    @property
    def head_predicates(self) -> FrozenSet[str]:
        return frozenset(a.predicate for r in self.rules for a in r.head)


def body_components(rule: Rule) -> List[FrozenSet[Term]]:
    """Connected components of the body's variable co-occurrence graph (constants ignored)"""
    graph = nx.Graph()
    graph.add_nodes_from(rule.body_variables)
    for atom in rule.body:
        vs = sorted(atom.variables)
        graph.add_edges_from(zip(vs, vs[1:]))
    return sorted((frozenset(c) for c in nx.connected_components(graph)), key=min)


def classify(rule: Rule) -> RuleClass:
    """Datalog / single-headed / arity flags and the connected–disconnected split"""
    atoms = rule.body | rule.head
    max_arity = max((a.arity for a in atoms), default=0)
    if not rule.is_datalog:
        connectivity = Connectivity.NOT_APPLICABLE
    else:
        component_of = {}
        for i, comp in enumerate(body_components(rule)):
            for v in comp:
                component_of[v] = i
        head_vars = sorted(rule.head_variables)
        # head variables missing from the body cannot occur in datalog rules
        touched = {component_of[v] for v in head_vars}
        connectivity = Connectivity.DISCONNECTED if len(touched) > 1 else Connectivity.CONNECTED
    return RuleClass(
        is_datalog=rule.is_datalog,
        is_single_headed=len(rule.head) == 1,
        max_arity=max_arity,
        datalog_connectivity=connectivity,
    )


def binary_head(rule: Rule) -> Atom:
    """The single binary head atom R(x1, x2) of a Disconnected rule, or raise"""
    info = classify(rule)
    if not (info.is_datalog and info.is_single_headed):
        raise ValidationError(f"rule {rule.label}: expected a single-headed datalog rule")
    (head,) = tuple(rule.head)
    if head.arity != 2 or not all(t.is_variable for t in head.args) or head.args[0] == head.args[1]:
        raise ValidationError(f"rule {rule.label}: head must be R(x1,x2) over two distinct variables")
    if info.datalog_connectivity != Connectivity.DISCONNECTED:
        raise ValidationError(f"rule {rule.label} is not disconnected")
    return head


def split_disconnected_body(rule: Rule) -> Tuple[FrozenSet[Atom], FrozenSet[Atom]]:
    """
    Split the body of a disconnected rule R(x1,x2)

    Returns:
        (φ1, φ2): φ1 is the component of x1, φ2 the remainder (x2's side,
        other components and constant-only atoms)
    """
    head = binary_head(rule)
    x1 = head.args[0]
    side_one = next(c for c in body_components(rule) if x1 in c)
    phi1 = frozenset(a for a in rule.body if a.variables and a.variables <= side_one)
    return phi1, rule.body - phi1
