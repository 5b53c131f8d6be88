"""
Chase Engine
Skolem chase: triggers, parallel one-step application, k-step chase and bounded BCQ entailment
"""

import logging
import re
import time
from dataclasses import dataclass, field
from typing import ClassVar, Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

from config import load_settings
from errors import ResourceLimitError, ValidationError
from kernel import (
    TOP,
    Atom,
    ConjunctiveQuery,
    Homomorphism,
    Instance,
    Term,
    find_homomorphisms,
    has_homomorphism,
    is_homomorphism,
    null,
    substitute,
)
from rules import Rule, RuleSet

logger = logging.getLogger(__name__)

_PLAIN = re.compile(r"[A-Za-z0-9_]+")


def _encode(text: str) -> str:
    """Plain names stay readable; anything else is length-prefixed"""
    return text if _PLAIN.fullmatch(text) else f"{len(text)}~{text}"


def _encode_image(term: Term) -> str:
    # nulls always carry a prefix, constants only when not plain
    if term.is_null:
        return f"{len(term.name)}:{term.name}"
    return _encode(term.name)


@dataclass(frozen=True)
class SkolemNull:
    """Canonical witness z_{ρ,h(frontier)} for an existential variable"""
    rule_label: Optional[str]
    variable: str
    frontier: Tuple[Term, ...]

    @property
    def term(self) -> Term:
        images = ",".join(_encode_image(t) for t in self.frontier)
        return null(f"z!{_encode(self.rule_label or '')}!{_encode(self.variable)}!{images}")


@dataclass(frozen=True)
class Trigger:
    """A rule with a homomorphism embedding its body"""
    rule: Rule
    binding: Tuple[Tuple[Term, Term], ...]

    @classmethod
    def make(cls, rule: Rule, hom: Homomorphism) -> "Trigger":
        body_terms = {t for a in rule.body for t in a.args if not t.is_constant}
        return cls(rule, tuple(sorted((s, t) for s, t in hom.items() if s in body_terms)))

    @property
    def hom(self) -> Homomorphism:
        return dict(self.binding)

    def head_image(self) -> FrozenSet[Atom]:
        """h̄(head): existentials go to their Skolem nulls"""
        extended = self.hom
        image = tuple(extended[v] for v in self.rule.frontier)
        for z in self.rule.existentials:
            extended[z] = SkolemNull(self.rule.label, z.name, image).term
        return substitute(self.rule.head, extended)


@dataclass(frozen=True)
class EntailedAtStep:
    step: int
    witness: Homomorphism = field(compare=False, default_factory=dict)
    entailed: ClassVar[bool] = True


@dataclass(frozen=True)
class UnknownAtBudget:
    budget: int
    entailed: ClassVar[bool] = False


EntailmentVerdict = Union[EntailedAtStep, UnknownAtBudget]


def _query_atoms(q: Union[ConjunctiveQuery, Iterable[Atom]]) -> FrozenSet[Atom]:
    return q.atoms if isinstance(q, ConjunctiveQuery) else frozenset(q)


class ChaseEngine:
    """Skolem chase over finite instances"""

    def __init__(self, atom_cap: Optional[int] = None):
        self.atom_cap = atom_cap if atom_cap is not None else load_settings().atom_cap

        # State
        self._sequences: Dict[Tuple[Instance, RuleSet], List[Instance]] = {}

    def reset(self):
        """Forget memoised chase sequences"""
        self._sequences = {}

    def _check_cap(self, size: int):
        if size > self.atom_cap:
            raise ResourceLimitError(
                f"atom cap {self.atom_cap:,} exceeded ({size:,} atoms); raise RULEBENCH_ATOM_CAP"
            )

    def triggers(self, inst: Instance, rules: RuleSet) -> List[Trigger]:
        """All (ρ, h) with h(body(ρ)) ⊆ inst, rule order then enumeration order"""
        found = []
        for rule in rules:
            for hom in find_homomorphisms(rule.body, inst):
                found.append(Trigger.make(rule, hom))
        return found

    def apply_trigger(self, inst: Instance, trigger: Trigger) -> Instance:
        """inst ∪ h̄(head)"""
        if not is_homomorphism(trigger.hom, trigger.rule.body, inst):
            raise ValidationError(f"not a trigger of the instance: {trigger.rule.label} {trigger.hom}")
        result = inst.union(trigger.head_image())
        self._check_cap(len(result))
        return result

    def one_step(self, inst: Instance, rules: RuleSet) -> Instance:
        """Parallel application of every trigger of inst"""
        produced = set()
        for trigger in self.triggers(inst, rules):
            produced |= trigger.head_image()
            self._check_cap(len(inst) + len(produced))
        return inst.union(produced)

    def _delta_triggers(
        self,
        current: Instance,
        rules: RuleSet,
        delta: Instance,
        new_terms: FrozenSet[Term],
    ) -> Iterator[Trigger]:
        """Triggers of `current` that use at least one new atom or new ⊤-term"""
        seen = set()
        for rule in rules:
            for atom in sorted(rule.body):
                if atom.predicate == TOP and atom.arity == 1:
                    s = atom.args[0]
                    if s.is_constant:
                        seeds = [{}] if s in new_terms else []
                    else:
                        seeds = [{s: t} for t in sorted(new_terms)]
                else:
                    seeds = find_homomorphisms([atom], delta)
                for seed in seeds:
                    for hom in find_homomorphisms(rule.body, current, fixed=seed):
                        trigger = Trigger.make(rule, hom)
                        if trigger not in seen:
                            seen.add(trigger)
                            yield trigger

    def chase_sequence(self, inst: Instance, rules: RuleSet, depth: int) -> List[Instance]:
        """
        [Ch_0, ..., Ch_depth]

        Steps after the first only enumerate triggers touching what the
        previous step added; Skolem naming makes this equal to the naive
        iterate of one_step.
        """
        if depth < 0:
            raise ValidationError(f"chase depth must be >= 0, got {depth}")
        seq = self._sequences.setdefault((inst, rules), [inst])
        while len(seq) <= depth:
            current = seq[-1]
            if len(seq) == 1:
                nxt = self.one_step(current, rules)
            else:
                previous = seq[-2]
                delta = Instance(current.atoms - previous.atoms)
                if not delta.atoms:
                    seq.append(current)
                    continue
                new_terms = current.adom - previous.adom
                produced = set()
                for trigger in self._delta_triggers(current, rules, delta, new_terms):
                    produced |= trigger.head_image()
                    self._check_cap(len(current) + len(produced))
                nxt = current.union(produced)
            logger.debug("chase step %d: %d atoms (+%d)", len(seq), len(nxt), len(nxt) - len(current))
            seq.append(nxt)
        return seq[: depth + 1]

    def chase_k(self, inst: Instance, rules: RuleSet, depth: int) -> Instance:
        """Ch_k(inst, rules)"""
        return self.chase_sequence(inst, rules, depth)[depth]

    def entails_bcq(
        self,
        db: Instance,
        rules: RuleSet,
        q: Union[ConjunctiveQuery, Iterable[Atom]],
        budget: int,
    ) -> EntailmentVerdict:
        """
        Semi-decide db, rules ⊨ q by matching q into successive chase steps

        Returns:
            EntailedAtStep(k) for the least k ≤ budget with q ↦ Ch_k,
            UnknownAtBudget otherwise (never a refutation)
        """
        atoms = _query_atoms(q)
        for k in range(budget + 1):
            witness = next(find_homomorphisms(atoms, self.chase_k(db, rules, k)), None)
            if witness is not None:
                return EntailedAtStep(k, witness)
        return UnknownAtBudget(budget)

    def entails_ucq(
        self,
        db: Instance,
        rules: RuleSet,
        queries: Sequence[ConjunctiveQuery],
        budget: int,
    ) -> EntailmentVerdict:
        """Earliest step at which some disjunct is entailed"""
        best: EntailmentVerdict = UnknownAtBudget(budget)
        for q in queries:
            verdict = self.entails_bcq(db, rules, q, budget)
            if verdict.entailed and (not best.entailed or verdict.step < best.step):
                best = verdict
        return best

    def is_model(self, inst: Instance, rules: RuleSet) -> bool:
        """Every trigger of inst has its head satisfied"""
        for trigger in self.triggers(inst, rules):
            frontier = {v: trigger.hom[v] for v in trigger.rule.frontier}
            if not has_homomorphism(trigger.rule.head, inst, fixed=frontier):
                return False
        return True

    def run_chase(self, inst: Instance, rules: RuleSet, depth: int) -> Dict:
        """
        Run the chase up to `depth` and collect statistics

        Returns:
            Dictionary with the final instance, per-step counts and fixpoint flag
        """
        print(f"\n🚀 Running Skolem chase...")
        print(f"   Rules: {len(rules)}  Facts: {len(inst)}  Depth: {depth}")
        print(f"   Atom cap: {self.atom_cap:,}")

        started = time.perf_counter()
        seq = self.chase_sequence(inst, rules, depth)
        elapsed = time.perf_counter() - started

        steps = []
        for k, step in enumerate(seq):
            steps.append({
                "step": k,
                "atoms": len(step),
                "terms": len(step.adom),
                "nulls": len(step.nulls),
                "new_atoms": len(step) - (len(seq[k - 1]) if k else 0),
            })
        fixpoint = len(seq) > 1 and seq[-1] == seq[-2]
        return {
            "instance": seq[-1],
            "depth": depth,
            "steps": steps,
            "fixpoint": fixpoint,
            "model": fixpoint and self.is_model(seq[-1], rules),
            "elapsed": elapsed,
        }

    def print_results(self, results: Dict):
        """Print chase statistics"""

        print("\n" + "=" * 60)
        print("📊 CHASE RESULTS")
        print("=" * 60)

        final = results["steps"][-1]
        print(f"\n🧮 Instance:")
        print(f"   Atoms:  {final['atoms']:,}")
        print(f"   Terms:  {final['terms']:,}")
        print(f"   Nulls:  {final['nulls']:,}")

        print(f"\n📈 Growth:")
        for step in results["steps"]:
            print(f"   Ch_{step['step']}: {step['atoms']:>8,} atoms  (+{step['new_atoms']:,})")

        status = "✅ fixpoint reached" if results["fixpoint"] else "⚠️  no fixpoint within depth"
        print(f"\n{status}")
        print(f"⏱️  {results['elapsed']:.3f}s")
        print("\n" + "=" * 60)


def triggers(inst: Instance, rules: RuleSet) -> List[Trigger]:
    return ChaseEngine().triggers(inst, rules)


def apply_trigger(inst: Instance, trigger: Trigger) -> Instance:
    return ChaseEngine().apply_trigger(inst, trigger)


def one_step(inst: Instance, rules: RuleSet) -> Instance:
    return ChaseEngine().one_step(inst, rules)


def chase_k(inst: Instance, rules: RuleSet, depth: int) -> Instance:
    return ChaseEngine().chase_k(inst, rules, depth)


def entails_bcq(db: Instance, rules: RuleSet, q, budget: int) -> EntailmentVerdict:
    return ChaseEngine().entails_bcq(db, rules, q, budget)


# Quick test
if __name__ == "__main__":
    from catalog import d_grid, grid_rules

    engine = ChaseEngine()
    results = engine.run_chase(d_grid(), grid_rules(), depth=3)
    engine.print_results(results)
