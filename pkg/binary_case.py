"""
Binary Case
Types of terms under disconnected datalog rules and color-driven one-step saturation
"""

from dataclasses import dataclass
from typing import Dict, FrozenSet, Tuple

from cliquewidth import ColoredInstance, add_atoms
from kernel import Instance, Term, has_homomorphism
from rules import RuleSet, binary_head, split_disconnected_body

Marker = Tuple[str, int]


@dataclass(frozen=True)
class DiscType:
    """(ρ, i) ∈ markers iff the term satisfies side i of rule ρ"""
    markers: FrozenSet[Marker] = frozenset()

    @property
    def color(self) -> Tuple[Marker, ...]:
        return tuple(sorted(self.markers))

    def __contains__(self, marker: Marker) -> bool:
        return marker in self.markers


def disc_types(inst: Instance, rules: RuleSet) -> Dict[Term, DiscType]:
    """τ(t) for every term of inst, deciding each side by a pinned homomorphism search"""
    sides = []
    for rule in rules:
        head = binary_head(rule)
        phi1, phi2 = split_disconnected_body(rule)
        sides.append((rule.label, 1, phi1, head.args[0]))
        sides.append((rule.label, 2, phi2, head.args[1]))

    types = {}
    for term in inst.sorted_adom:
        markers = frozenset(
            (label, side)
            for label, side, atoms, anchor in sides
            if has_homomorphism(atoms, inst, fixed={anchor: term})
        )
        types[term] = DiscType(markers)
    return types


def saturate_disconnected(inst: Instance, rules: RuleSet) -> Instance:
    """
    One chase step of disconnected rules computed through Add on the τ-coloring

    For each rule R(x1,x2) every color holding (ρ,1) is joined to every
    color holding (ρ,2).
    """
    types = disc_types(inst, rules)
    ci = ColoredInstance(inst, {t: tau.color for t, tau in types.items()})
    palette = sorted(set(ci.coloring.values()))
    for rule in rules:
        head = binary_head(rule)
        for left in palette:
            if (rule.label, 1) not in left:
                continue
            for right in palette:
                if (rule.label, 2) in right:
                    ci = add_atoms(ci, head.predicate, (left, right))
    return ci.inst
