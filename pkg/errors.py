"""
Errors
Exception hierarchy shared by every module; exit codes for the CLI
"""

from typing import List, Optional, Tuple


class RulebenchError(Exception):
    """Base class for all workbench errors"""
    exit_code = 1


class UsageError(RulebenchError):
    """Bad command line"""
    exit_code = 1


class ParseError(RulebenchError, ValueError):
    """Syntax / arity / unknown-predicate errors with positions"""
    exit_code = 2

    def __init__(self, issues: List[Tuple[int, int, str]], source: Optional[str] = None):
        self.issues = list(issues)
        self.source = source
        super().__init__(self.render())

    def render(self) -> str:
        prefix = f"{self.source}:" if self.source else ""
        return "\n".join(f"{prefix}{line}:{col}: {msg}" for line, col, msg in self.issues)


class ValidationError(RulebenchError, ValueError):
    """Precondition or well-formedness violation"""
    exit_code = 3


class RefutedQueryError(ValidationError):
    """A grid-rewriting branch that can never be satisfied"""


class ResourceLimitError(RulebenchError, RuntimeError):
    """Atom or query cap exceeded"""
    exit_code = 4
