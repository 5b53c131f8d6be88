"""
Reification
Stars of binary atoms for arity >= 3; instances, rules, CQs and datalog queries; best-effort inverse
"""

import hashlib
import itertools
import re
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, Iterable, Optional, Tuple

from datalog_engine import DatalogQuery
from kernel import (
    TOP,
    Atom,
    ConjunctiveQuery,
    Instance,
    Signature,
    Term,
    TermKind,
    terms_of,
)
from rules import Rule, RuleSet

_PART_NAME = re.compile(r"^(?P<base>.+)_(?P<index>\d+)$")


@dataclass(frozen=True)
class ReifiedSignature:
    """Σ≤2 ⊎ {R_i | R ∈ Σ≥3, 1 ≤ i ≤ ar(R)}"""
    base: Signature
    parts: Tuple[Tuple[str, int, str], ...]

    @classmethod
    def of(cls, base: Signature, reserved: Iterable[str] = ()) -> "ReifiedSignature":
        taken = set(base.predicates) | set(reserved)
        parts = []
        for pred, arity in base.entries:
            if arity < 3:
                continue
            for i in range(1, arity + 1):
                name = f"{pred}_{i}"
                while name in taken:
                    name += "_"
                taken.add(name)
                parts.append((pred, i, name))
        return cls(base, tuple(parts))

    @classmethod
    def infer(cls, reified: Signature) -> "ReifiedSignature":
        """Recover the base from binary R_1..R_n names (n >= 3, contiguous)"""
        groups: Dict[str, Dict[int, str]] = {}
        for pred, arity in reified.entries:
            match = _PART_NAME.match(pred)
            if match and arity == 2:
                groups.setdefault(match["base"], {})[int(match["index"])] = pred
        arities = {}
        parts = []
        grouped = set()
        for base_pred, indexed in sorted(groups.items()):
            n = len(indexed)
            if n >= 3 and sorted(indexed) == list(range(1, n + 1)) and base_pred not in reified:
                arities[base_pred] = n
                parts.extend((base_pred, i, indexed[i]) for i in range(1, n + 1))
                grouped.update(indexed.values())
        for pred, arity in reified.entries:
            if pred not in grouped:
                arities[pred] = arity
        return cls(Signature.of(arities), tuple(parts))

    def part_name(self, predicate: str, index: int) -> str:
        for pred, i, name in self.parts:
            if pred == predicate and i == index:
                return name
        return f"{predicate}_{index}"

    @property
    def part_lookup(self) -> Dict[str, Tuple[str, int]]:
        return {name: (pred, i) for pred, i, name in self.parts}

    @property
    def signature(self) -> Signature:
        """Σ^rf"""
        arities = {p: a for p, a in self.base.entries if a <= 2}
        arities.update({name: 2 for _, _, name in self.parts})
        return Signature.of(arities)


def hub_term(atom: Atom, kind: TermKind = TermKind.NULL, role: str = "") -> Term:
    """Deterministic hub u_α named after the atom's serialization"""
    digest = hashlib.sha1(f"{role}|{atom}".encode("utf-8")).hexdigest()[:12]
    return Term(kind, f"u!{role}{digest}")


def reify_atom(
    atom: Atom,
    fresh: Optional[Callable[[Atom], Term]] = None,
    rsig: Optional[ReifiedSignature] = None,
) -> FrozenSet[Atom]:
    """Identity on arity <= 2; otherwise the star {R_i(u, t_i)}"""
    if atom.arity <= 2:
        return frozenset({atom})
    hub = fresh(atom) if fresh else hub_term(atom)
    name = rsig.part_name if rsig else (lambda p, i: f"{p}_{i}")
    return frozenset(
        Atom(name(atom.predicate, i), (hub, t)) for i, t in enumerate(atom.args, start=1)
    )


def _reify_atoms(atoms: Iterable[Atom], fresh, rsig) -> FrozenSet[Atom]:
    return frozenset(r for a in atoms for r in reify_atom(a, fresh, rsig))


def reify_instance(inst: Instance, rsig: Optional[ReifiedSignature] = None) -> Instance:
    return Instance(_reify_atoms(inst.atoms, None, rsig))


def reify_rule(rule: Rule, rsig: Optional[ReifiedSignature] = None) -> Rule:
    """Body hubs are universal variables, head hubs join the existential block"""
    body = _reify_atoms(rule.body, lambda a: hub_term(a, TermKind.VARIABLE, "b"), rsig)
    head = _reify_atoms(rule.head, lambda a: hub_term(a, TermKind.VARIABLE, "h"), rsig)
    return Rule(body, head, rule.label)


def reify_rules(rules: RuleSet) -> RuleSet:
    rsig = ReifiedSignature.of(rules.signature)
    return RuleSet.from_rules([reify_rule(r, rsig) for r in rules], rsig.signature)


def reify_cq(q: ConjunctiveQuery, rsig: Optional[ReifiedSignature] = None) -> ConjunctiveQuery:
    return ConjunctiveQuery(_reify_atoms(q.atoms, lambda a: hub_term(a, TermKind.VARIABLE, "q"), rsig))


def reify_datalog(q: DatalogQuery) -> DatalogQuery:
    """Only EDB atoms are reified; IDB atoms keep their arity"""
    edb_arities = {p: a for p, a in q.rules.signature.entries if p in q.edb}
    rsig = ReifiedSignature.of(Signature.of(edb_arities), reserved=q.idb)

    def convert(atoms: Iterable[Atom]) -> FrozenSet[Atom]:
        out = set()
        for atom in atoms:
            if atom.predicate in q.idb:
                out.add(atom)
            else:
                out |= reify_atom(atom, lambda a: hub_term(a, TermKind.VARIABLE, "b"), rsig)
        return frozenset(out)

    rules = [Rule(convert(r.body), r.head, r.label) for r in q.rules]
    return DatalogQuery(RuleSet.from_rules(rules), q.goal)


def dereify_instance(inst: Instance, rsig: ReifiedSignature) -> Instance:
    """
    Keep Σ≤2 atoms; emit R(t_1..t_n) whenever a hub t has R_i(t, t_i) for every i

    ⊤-atoms on hubs are dropped unless the hub survives in another atom.
    """
    lookup = rsig.part_lookup
    arities = rsig.base.arities
    kept = [a for a in inst if a.predicate not in lookup]
    stars: Dict[Tuple[str, Term], Dict[int, set]] = {}
    for atom in inst:
        if atom.predicate in lookup:
            pred, i = lookup[atom.predicate]
            stars.setdefault((pred, atom.args[0]), {}).setdefault(i, set()).add(atom.args[1])

    rebuilt = set()
    for (pred, _hub), parts in stars.items():
        n = arities[pred]
        if all(i in parts for i in range(1, n + 1)):
            for combo in itertools.product(*(sorted(parts[i]) for i in range(1, n + 1))):
                rebuilt.add(Atom(pred, combo))

    hubs = {hub for _, hub in stars}
    alive = terms_of(a for a in kept if a.predicate != TOP) | terms_of(rebuilt)
    kept = [a for a in kept if not (a.predicate == TOP and a.args[0] in hubs and a.args[0] not in alive)]
    return Instance(set(kept) | rebuilt)
