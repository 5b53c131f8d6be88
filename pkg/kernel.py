"""
Kernel
Terms, atoms, instances, signatures and homomorphism search
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from enum import IntEnum
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Tuple

from errors import ValidationError

TOP = "top"

Homomorphism = Dict["Term", "Term"]


class TermKind(IntEnum):
    """Kinds are ordered: constants < nulls < variables"""
    CONSTANT = 0
    NULL = 1
    VARIABLE = 2


@dataclass(frozen=True, order=True)
class Term:
    """A constant, null or variable; equality is structural on (kind, name)"""
    kind: TermKind
    name: str

    @property
    def is_constant(self) -> bool:
        return self.kind == TermKind.CONSTANT

    @property
    def is_null(self) -> bool:
        return self.kind == TermKind.NULL

    @property
    def is_variable(self) -> bool:
        return self.kind == TermKind.VARIABLE

    def __str__(self) -> str:
        if self.kind == TermKind.NULL:
            return f"_:{self.name}"
        if self.kind == TermKind.VARIABLE:
            return f"?{self.name}"
        return self.name

    __repr__ = __str__


def const(name: str) -> Term:
    return Term(TermKind.CONSTANT, name)


def null(name: str) -> Term:
    return Term(TermKind.NULL, name)


def var(name: str) -> Term:
    return Term(TermKind.VARIABLE, name)


@dataclass(frozen=True, order=True)
class Atom:
    """Predicate applied to a tuple of terms"""
    predicate: str
    args: Tuple[Term, ...] = ()

    def __post_init__(self):
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def terms(self) -> FrozenSet[Term]:
        return frozenset(self.args)

    @property
    def variables(self) -> FrozenSet[Term]:
        return frozenset(t for t in self.args if t.is_variable)

    def substitute(self, mapping: Mapping[Term, Term]) -> "Atom":
        return Atom(self.predicate, tuple(mapping.get(t, t) for t in self.args))

    def __str__(self) -> str:
        if not self.args:
            return self.predicate
        return f"{self.predicate}({','.join(str(t) for t in self.args)})"

    __repr__ = __str__


def top(term: Term) -> Atom:
    return Atom(TOP, (term,))


def substitute(atoms: Iterable[Atom], mapping: Mapping[Term, Term]) -> FrozenSet[Atom]:
    return frozenset(a.substitute(mapping) for a in atoms)


def terms_of(atoms: Iterable[Atom]) -> FrozenSet[Term]:
    return frozenset(t for a in atoms for t in a.args)


@dataclass(frozen=True)
class Signature:
    """Predicate arities; ⊤ (spelled top) is always present with arity 1"""
    entries: Tuple[Tuple[str, int], ...] = ()

    def __post_init__(self):
        arities = dict(self.entries)
        if len(arities) != len(self.entries):
            raise ValidationError("duplicate predicate in signature entries")
        if arities.get(TOP, 1) != 1:
            raise ValidationError(f"'{TOP}' must have arity 1")
        arities[TOP] = 1
        for pred, arity in arities.items():
            if arity < 0:
                raise ValidationError(f"negative arity for '{pred}'")
        object.__setattr__(self, "entries", tuple(sorted(arities.items())))

    @classmethod
    def of(cls, arities: Mapping[str, int]) -> "Signature":
        return cls(tuple(arities.items()))

    @classmethod
    def from_atoms(cls, atoms: Iterable[Atom]) -> "Signature":
        arities: Dict[str, int] = {}
        for atom in atoms:
            known = arities.setdefault(atom.predicate, atom.arity)
            if known != atom.arity:
                raise ValidationError(
                    f"predicate '{atom.predicate}' used with arities {known} and {atom.arity}"
                )
        return cls.of(arities)

    @property
    def arities(self) -> Dict[str, int]:
        return dict(self.entries)

    @property
    def predicates(self) -> List[str]:
        return [p for p, _ in self.entries]

    def arity(self, predicate: str) -> int:
        try:
            return self.arities[predicate]
        except KeyError:
            raise ValidationError(f"unknown predicate '{predicate}'")

    def __contains__(self, predicate: str) -> bool:
        return predicate in self.arities

    @property
    def max_arity(self) -> int:
        return max(a for _, a in self.entries)

    def with_arity(self, k: int) -> List[str]:
        return [p for p, a in self.entries if a == k]

    def merge(self, other: "Signature") -> "Signature":
        merged = self.arities
        for pred, arity in other.entries:
            if merged.setdefault(pred, arity) != arity:
                raise ValidationError(
                    f"predicate '{pred}' has arity {merged[pred]} and {arity} in different sources"
                )
        return Signature.of(merged)

    def check(self, atom: Atom):
        """Raise if the atom disagrees with this signature"""
        expected = self.arity(atom.predicate)
        if expected != atom.arity:
            raise ValidationError(f"{atom}: '{atom.predicate}' has arity {expected}")


@dataclass(frozen=True, eq=False)
class Instance:
    """Finite set of atoms over constants and nulls"""
    atoms: FrozenSet[Atom] = frozenset()

    def __eq__(self, other):
        if isinstance(other, Instance):
            return self.atoms == other.atoms
        return NotImplemented

    def __hash__(self):
        return hash(self.atoms)

    def __post_init__(self):
        if not isinstance(self.atoms, frozenset):
            object.__setattr__(self, "atoms", frozenset(self.atoms))
        for atom in self.atoms:
            if any(t.is_variable for t in atom.args):
                raise ValidationError(f"instance atom {atom} contains a variable")

    @cached_property
    def adom(self) -> FrozenSet[Term]:
        return terms_of(self.atoms)

    @cached_property
    def sorted_atoms(self) -> Tuple[Atom, ...]:
        return tuple(sorted(self.atoms))

    @cached_property
    def sorted_adom(self) -> Tuple[Term, ...]:
        return tuple(sorted(self.adom))

    @cached_property
    def by_predicate(self) -> Dict[str, Tuple[Atom, ...]]:
        index: Dict[str, List[Atom]] = {}
        for atom in self.sorted_atoms:
            index.setdefault(atom.predicate, []).append(atom)
        return {p: tuple(v) for p, v in index.items()}

    @cached_property
    def by_position(self) -> Dict[Tuple[str, int, Term], Tuple[Atom, ...]]:
        index: Dict[Tuple[str, int, Term], List[Atom]] = {}
        for atom in self.sorted_atoms:
            for i, t in enumerate(atom.args):
                index.setdefault((atom.predicate, i, t), []).append(atom)
        return {k: tuple(v) for k, v in index.items()}

    @property
    def nulls(self) -> FrozenSet[Term]:
        return frozenset(t for t in self.adom if t.is_null)

    @property
    def constants(self) -> FrozenSet[Term]:
        return frozenset(t for t in self.adom if t.is_constant)

    def __iter__(self) -> Iterator[Atom]:
        return iter(self.sorted_atoms)

    def __len__(self) -> int:
        return len(self.atoms)

    def __contains__(self, atom: Atom) -> bool:
        return atom in self.atoms

    def union(self, atoms: Iterable[Atom]) -> "Instance":
        extra = frozenset(atoms)
        if extra <= self.atoms:
            return self
        return Instance(self.atoms | extra)

    def __or__(self, other: "Instance") -> "Instance":
        return self.union(other.atoms)

    def issubset(self, other: "Instance") -> bool:
        return self.atoms <= other.atoms

    def signature(self) -> Signature:
        return Signature.from_atoms(self.atoms)

    def without_top(self) -> FrozenSet[Atom]:
        return frozenset(a for a in self.atoms if a.predicate != TOP)

    def __str__(self) -> str:
        return "{" + ", ".join(str(a) for a in self.sorted_atoms) + "}"


class Database(Instance):
    """Finite instance whose terms are all constants"""

    def __post_init__(self):
        super().__post_init__()
        for atom in self.atoms:
            if not all(t.is_constant for t in atom.args):
                raise ValidationError(f"database atom {atom} is not ground over constants")


@dataclass(frozen=True)
class ConjunctiveQuery:
    """Boolean CQ: all variables are existentially quantified"""
    atoms: FrozenSet[Atom] = frozenset()

    def __post_init__(self):
        if not isinstance(self.atoms, frozenset):
            object.__setattr__(self, "atoms", frozenset(self.atoms))

    @property
    def terms(self) -> Tuple[Term, ...]:
        return tuple(sorted(terms_of(self.atoms)))

    @property
    def variables(self) -> Tuple[Term, ...]:
        return tuple(t for t in self.terms if t.is_variable)

    @property
    def constants(self) -> Tuple[Term, ...]:
        return tuple(t for t in self.terms if t.is_constant)

    @property
    def is_constant_free(self) -> bool:
        return not self.constants

    def __str__(self) -> str:
        body = ", ".join(str(a) for a in sorted(self.atoms))
        if self.variables:
            return f"∃{','.join(v.name for v in self.variables)}. {body}"
        return body


class NullFactory:
    """Session-wide supply of fresh nulls (monotone counter)"""

    def __init__(self, prefix: str = "~"):
        self.prefix = prefix
        self._counter = itertools.count(1)

    def fresh(self) -> Term:
        return null(f"{self.prefix}{next(self._counter)}")


FRESH_NULLS = NullFactory()


def freeze(atoms: Iterable[Atom], factory: Optional[NullFactory] = None) -> Tuple[Instance, Dict[Term, Term]]:
    """Canonical instance of a query: every variable becomes a fresh null"""
    factory = factory or FRESH_NULLS
    atoms = frozenset(atoms)
    renaming = {v: factory.fresh() for v in sorted(terms_of(atoms)) if v.is_variable}
    return Instance(substitute(atoms, renaming)), renaming


# ---------------------------------------------------------------------------
# Homomorphisms
# ---------------------------------------------------------------------------

def _order_key(atom: Atom, mapping: Mapping[Term, Term], position: int):
    unbound = {t for t in atom.args if t not in mapping}
    bound = atom.arity - sum(1 for t in atom.args if t in unbound)
    if not unbound:
        return (0, 0, 0, 0, position)
    return (1, -bound, len(unbound), atom.predicate == TOP, position)


def _candidates(
    atom: Atom,
    target: Instance,
    mapping: Mapping[Term, Term],
    used: Optional[Counter],
) -> List[List[Tuple[Term, Term]]]:
    """Bindings (new pairs only) that send atom into target under mapping"""
    if atom.predicate == TOP and atom.arity == 1:
        s = atom.args[0]
        if s in mapping:
            return [[]] if mapping[s] in target.adom else []
        pool = [t for t in target.sorted_adom if used is None or not used[t]]
        return [[(s, t)] for t in pool]

    pool: Tuple[Atom, ...] = target.by_predicate.get(atom.predicate, ())
    for i, s in enumerate(atom.args):
        if s in mapping:
            narrowed = target.by_position.get((atom.predicate, i, mapping[s]), ())
            if len(narrowed) < len(pool):
                pool = narrowed

    found = []
    for cand in pool:
        if cand.arity != atom.arity:
            continue
        binding: Dict[Term, Term] = {}
        ok = True
        for s, t in zip(atom.args, cand.args):
            image = mapping.get(s, binding.get(s))
            if image is None:
                if used is not None and (used[t] or t in binding.values()):
                    ok = False
                    break
                binding[s] = t
            elif image != t:
                ok = False
                break
        if ok:
            found.append(list(binding.items()))
    return found


def find_homomorphisms(
    source: Iterable[Atom],
    target: Instance,
    fixed: Optional[Mapping[Term, Term]] = None,
    injective: bool = False,
) -> Iterator[Homomorphism]:
    """
    Enumerate the extensions h of `fixed` with h(source) ⊆ target

    Variables and nulls of the source are mappable; constants map to
    themselves. A source atom top(x) matches every term of adom(target).

    Args:
        source: atoms to embed
        target: instance to embed into
        fixed: pre-assigned images
        injective: only enumerate injective mappings

    Returns:
        Lazy iterator of mappings (each a fresh dict)
    """
    mapping: Dict[Term, Term] = dict(fixed or {})
    used: Optional[Counter] = Counter(mapping.values()) if injective else None
    atoms = sorted(set(source))

    for atom in atoms:
        for t in atom.args:
            if t.is_constant:
                if mapping.get(t, t) != t:
                    return
                if t not in mapping:
                    if used is not None:
                        if used[t]:
                            return
                        used[t] += 1
                    mapping[t] = t

    if not atoms:
        yield dict(mapping)
        return

    positions = {a: i for i, a in enumerate(atoms)}
    remaining = list(atoms)
    frames: List[list] = []

    def push():
        nxt = min(remaining, key=lambda a: _order_key(a, mapping, positions[a]))
        remaining.remove(nxt)
        frames.append([nxt, _candidates(nxt, target, mapping, used), 0, []])

    push()
    while frames:
        frame = frames[-1]
        for s, t in frame[3]:
            del mapping[s]
            if used is not None:
                used[t] -= 1
        frame[3] = []
        if frame[2] >= len(frame[1]):
            frames.pop()
            remaining.append(frame[0])
            continue
        binding = frame[1][frame[2]]
        frame[2] += 1
        if used is not None and any(used[t] for _, t in binding):
            continue
        for s, t in binding:
            mapping[s] = t
            if used is not None:
                used[t] += 1
        frame[3] = binding
        if not remaining:
            yield dict(mapping)
        else:
            push()


def has_homomorphism(source: Iterable[Atom], target: Instance,
                     fixed: Optional[Mapping[Term, Term]] = None) -> bool:
    return next(find_homomorphisms(source, target, fixed), None) is not None


def hom_equivalent(left: Instance, right: Instance) -> bool:
    """Homomorphisms exist in both directions"""
    return has_homomorphism(left.atoms, right) and has_homomorphism(right.atoms, left)


def find_isomorphism(left: Instance, right: Instance) -> Optional[Homomorphism]:
    """A bijection adom(left) → adom(right) mapping atoms onto atoms, or None"""
    if len(left.adom) != len(right.adom) or left.constants != right.constants:
        return None
    left_atoms, right_atoms = left.without_top(), right.without_top()
    if len(left_atoms) != len(right_atoms):
        return None
    if Counter(a.predicate for a in left_atoms) != Counter(a.predicate for a in right_atoms):
        return None
    # ⊤ atoms are implicit; spell them out so every term of left is covered
    source = set(left_atoms) | {top(t) for t in left.adom}
    # injective + equal adom sizes + equal atom counts => bijective with atoms onto atoms
    return next(find_homomorphisms(source, right, injective=True), None)


def is_isomorphic(left: Instance, right: Instance) -> bool:
    return find_isomorphism(left, right) is not None


def induced_subinstance(inst: Instance, keep: Iterable[Term]) -> Instance:
    """Atoms of inst all of whose arguments lie in keep"""
    keep = frozenset(keep)
    return Instance(a for a in inst.atoms if all(t in keep for t in a.args))


def is_homomorphism(mapping: Mapping[Term, Term], source: Iterable[Atom], target: Instance) -> bool:
    """Check h(source) ⊆ target with constants fixed and ⊤ implicit"""
    for atom in source:
        if any(t.is_constant and mapping.get(t, t) != t for t in atom.args):
            return False
        if any(t not in mapping and not t.is_constant for t in atom.args):
            return False
        image = atom.substitute(mapping)
        if image.predicate == TOP and image.arity == 1:
            if image.args[0] not in target.adom:
                return False
        elif image not in target:
            return False
    return True


# Quick test
if __name__ == "__main__":
    a, b = const("a"), const("b")
    x, y = var("x"), var("y")
    target = Instance({Atom("E", (a, b))})
    print(list(find_homomorphisms({Atom("E", (x, y))}, target)))
    print(is_isomorphic(Instance({Atom("E", (null("n1"), null("n2")))}),
                        Instance({Atom("E", (null("n3"), null("n4")))})))
