"""
Datalog Engine
Semi-naive least-fixpoint evaluation of datalog queries with a nullary Goal
"""

from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, Optional, Sequence

from chase_engine import ChaseEngine
from errors import ValidationError
from kernel import TOP, Atom, ConjunctiveQuery, Instance, find_homomorphisms, substitute
from rules import Rule, RuleSet


@dataclass(frozen=True)
class DatalogQuery:
    """Datalog rules with EDB/IDB split and a distinguished nullary goal"""
    rules: RuleSet
    goal: str = "goal"

    def __post_init__(self):
        for rule in self.rules:
            if not rule.is_datalog:
                raise ValidationError(f"rule {rule.label} has existential variables; not datalog")
        if self.goal in self.rules.signature and self.rules.signature.arity(self.goal) != 0:
            raise ValidationError(f"goal predicate '{self.goal}' must be nullary")
        if TOP in self.rules.head_predicates:
            raise ValidationError(f"'{TOP}' cannot be derived")

    @property
    def idb(self) -> FrozenSet[str]:
        return self.rules.head_predicates | {self.goal}

    @property
    def edb(self) -> FrozenSet[str]:
        return frozenset(self.rules.signature.predicates) - self.idb

    @property
    def goal_atom(self) -> Atom:
        return Atom(self.goal, ())

    @classmethod
    def from_queries(cls, queries: Sequence[ConjunctiveQuery], goal: str = "goal") -> "DatalogQuery":
        """Goal program of a union of BCQs: one rule body → goal per disjunct"""
        rules = [Rule(q.atoms, {Atom(goal, ())}, f"q{i + 1}") for i, q in enumerate(queries)]
        return cls(RuleSet.from_rules(rules), goal)


class DatalogEngine(ChaseEngine):
    """Least fixpoint of positive datalog; never invents terms"""

    def __init__(self, atom_cap: Optional[int] = None):
        super().__init__(atom_cap)
        self.iterations = 0

    def reset(self):
        super().reset()
        self.iterations = 0

    def eval_datalog(self, inst: Instance, q: DatalogQuery) -> Instance:
        """
        Semi-naive evaluation

        Args:
            inst: EDB facts (IDB facts are rejected)
            q: the datalog query

        Returns:
            Instance with exactly the derived IDB facts
        """
        stray = sorted(a for a in inst if a.predicate in q.idb)
        if stray:
            raise ValidationError(f"input contains IDB facts: {', '.join(map(str, stray[:5]))}")

        self.iterations = 0
        total = inst
        delta = set()
        for trigger in self.triggers(inst, q.rules):
            delta |= trigger.head_image()
        delta -= total.atoms

        while delta:
            self.iterations += 1
            previous_terms = total.adom
            total = total.union(delta)
            self._check_cap(len(total))
            delta_inst = Instance(delta)
            new_terms = total.adom - previous_terms

            produced = set()
            for rule in q.rules:
                for atom in sorted(rule.body):
                    if atom.predicate == TOP and atom.arity == 1:
                        s = atom.args[0]
                        if s.is_constant:
                            seeds = [{}] if s in new_terms else []
                        else:
                            seeds = [{s: t} for t in sorted(new_terms)]
                    elif atom.predicate in q.idb:
                        seeds = find_homomorphisms([atom], delta_inst)
                    else:
                        continue
                    for seed in seeds:
                        for hom in find_homomorphisms(rule.body, total, fixed=seed):
                            produced |= substitute(rule.head, hom)
            delta = produced - total.atoms

        return Instance(a for a in total if a.predicate in q.idb)

    def holds(self, inst: Instance, q: DatalogQuery) -> bool:
        """inst ⊨ q iff Goal is derived"""
        return q.goal_atom in self.eval_datalog(inst, q)

    def holds_ucq(self, inst: Instance, queries: Sequence[ConjunctiveQuery]) -> bool:
        return self.holds(inst, DatalogQuery.from_queries(queries))

    def run_datalog(self, inst: Instance, q: DatalogQuery) -> Dict:
        """Evaluate and summarise per IDB predicate"""
        print(f"\n🚀 Running datalog evaluation...")
        print(f"   Rules: {len(q.rules)}  EDB facts: {len(inst)}  Goal: {q.goal}")

        derived = self.eval_datalog(inst, q)
        counts = {p: len([a for a in derived if a.predicate == p]) for p in sorted(q.idb)}
        return {
            "derived": derived,
            "counts": counts,
            "goal": q.goal_atom in derived,
            "iterations": self.iterations,
        }


def eval_datalog(inst: Instance, q: DatalogQuery) -> Instance:
    return DatalogEngine().eval_datalog(inst, q)


def holds(inst: Instance, q: DatalogQuery) -> bool:
    return DatalogEngine().holds(inst, q)


# Quick test
if __name__ == "__main__":
    from catalog import path_database, tc_program

    engine = DatalogEngine()
    results = engine.run_datalog(path_database(["a", "b", "c", "d"]), tc_program())
    print(results["counts"], "goal:", results["goal"])
