"""
Workspace
Loads rule, fact, query, expression and decomposition files under one shared signature
"""

import logging
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

from catalog import BUILTINS
from cliquewidth import Color, EquationSystem
from datalog_engine import DatalogQuery
from errors import UsageError, ValidationError
from kernel import ConjunctiveQuery, Instance, Signature, Term
from parsers import (
    parse_coloring,
    parse_cwexpr,
    parse_datalog,
    parse_facts,
    parse_query,
    parse_rules,
    parse_td,
)
from rules import RuleSet
from tree_decomposition import TreeDecomposition

logger = logging.getLogger(__name__)


class Workspace:
    """Parsed artifacts keyed by path; `@name` refers to a catalog entry"""

    def __init__(self, signature: Optional[Signature] = None):
        self.signature = signature or Signature()

        # State
        self.objects: Dict[Tuple[str, str], object] = {}

    def _read(self, path: str) -> str:
        try:
            return Path(path).read_text(encoding="utf-8")
        except FileNotFoundError:
            raise UsageError(f"no such file: {path}")
        except UnicodeDecodeError as e:
            raise UsageError(f"{path} is not UTF-8: {e}")

    def _builtin(self, ref: str, kind: type):
        name = ref[1:]
        if name not in BUILTINS:
            raise UsageError(f"unknown builtin '{ref}'; choose from {', '.join('@' + n for n in BUILTINS)}")
        obj = BUILTINS[name]()
        if not isinstance(obj, kind):
            raise UsageError(f"builtin '{ref}' is a {type(obj).__name__}, expected {kind.__name__}")
        return obj

    def _absorb(self, signature: Signature, path: str):
        try:
            self.signature = self.signature.merge(signature)
        except ValidationError as e:
            raise ValidationError(f"{path}: {e}")

    def _load(self, path: str, kind: str, expected: type, parse: Callable[[str, str], object]):
        key = (kind, path)
        if key in self.objects:
            return self.objects[key]
        obj = self._builtin(path, expected) if path.startswith("@") else parse(self._read(path), path)
        self.objects[key] = obj
        logger.info("loaded %s from %s", kind, path)
        return obj

    def load_rules(self, path: str) -> RuleSet:
        rules = self._load(path, "rules", RuleSet, parse_rules)
        self._absorb(rules.signature, path)
        return rules

    def load_facts(self, path: str) -> Instance:
        inst = self._load(path, "facts", Instance, parse_facts)
        self._absorb(inst.signature(), path)
        return inst

    def load_queries(self, path: str) -> List[ConjunctiveQuery]:
        queries = self._load(path, "queries", list, parse_query)
        for q in queries:
            self._absorb(Signature.from_atoms(q.atoms), path)
        return queries

    def load_datalog(self, path: str) -> DatalogQuery:
        program = self._load(path, "datalog", DatalogQuery, parse_datalog)
        edb = {p: a for p, a in program.rules.signature.entries if p in program.edb}
        self._absorb(Signature.of(edb), path)
        return program

    def load_cwexpr(self, path: str) -> EquationSystem:
        return self._load(path, "cw", EquationSystem, parse_cwexpr)

    def load_td(self, path: str) -> TreeDecomposition:
        return self._load(path, "td", TreeDecomposition, parse_td)

    def load_coloring(self, path: str) -> Dict[Term, Color]:
        return self._load(path, "coloring", dict, parse_coloring)

    @staticmethod
    def save(text: str, path: str):
        Path(path).write_text(text, encoding="utf-8")
        logger.info("saved %s", path)
