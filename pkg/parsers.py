"""
Parsers
Line-oriented readers and printers for facts, rules, queries, datalog, expressions, decompositions and colorings
"""

import re
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Set, Tuple

from cliquewidth import (
    Add,
    Color,
    ConstLeaf,
    CwExpr,
    DisjointUnion,
    EquationSystem,
    NullLeaf,
    Recolor,
    Ref,
    Void,
    _split_chain,
)
from datalog_engine import DatalogQuery
from errors import ParseError
from kernel import TOP, Atom, ConjunctiveQuery, Database, Instance, Signature, Term, const, null, var
from rules import Rule, RuleSet
from tree_decomposition import TreeDecomposition

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>[%\#][^\n]*)
  | (?P<union>\(\+\))
  | (?P<arrow>->)
  | (?P<null>_:(?:"(?:[^"\\\n]|\\.)*"|[A-Za-z0-9_!]+))
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<int>-?\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_!]*)
  | (?P<punct>[(),.;{}=\[\]@])
""", re.VERBOSE)

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_!]*")
_INT = re.compile(r"-?\d+")
_NULL_NAME = re.compile(r"[A-Za-z0-9_!]+")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int

    @property
    def value(self) -> str:
        if self.kind == "string":
            return _unquote(self.text)
        if self.kind == "null":
            name = self.text[2:]
            return _unquote(name) if name.startswith('"') else name
        return self.text


def _unquote(text: str) -> str:
    return re.sub(r"\\(.)", r"\1", text[1:-1])


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def tokenize(text: str, source: Optional[str] = None) -> List[Token]:
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        match = _TOKEN.match(text, pos)
        if match is None:
            raise ParseError([(line, pos - line_start + 1, f"unexpected character {text[pos]!r}")], source)
        kind = match.lastgroup
        if kind == "nl":
            line += 1
            line_start = match.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, match.group(), line, pos - line_start + 1))
        pos = match.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    """Token cursor with positioned errors and arity bookkeeping"""

    def __init__(self, text: str, source: Optional[str] = None, signature: Optional[Signature] = None):
        self.tokens = tokenize(text, source)
        self.pos = 0
        self.source = source
        self.signature = signature
        self.arities: Dict[str, int] = {TOP: 1}
        self.issues: List[Tuple[int, int, str]] = []

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def at(self, kind: str, text: Optional[str] = None) -> bool:
        tok = self.tok
        return tok.kind == kind and (text is None or tok.text == text)

    def at_punct(self, text: str) -> bool:
        return self.at("punct", text)

    def advance(self) -> Token:
        tok = self.tok
        self.pos += 1
        return tok

    def fail(self, message: str, tok: Optional[Token] = None):
        tok = tok or self.tok
        raise ParseError(self.issues + [(tok.line, tok.col, message)], self.source)

    def expect(self, kind: str, text: Optional[str] = None) -> Token:
        if not self.at(kind, text):
            wanted = repr(text) if text else kind
            found = repr(self.tok.text) if self.tok.kind != "eof" else "end of input"
            self.fail(f"expected {wanted}, found {found}")
        return self.advance()

    def accept_punct(self, text: str) -> bool:
        if self.at_punct(text):
            self.advance()
            return True
        return False

    def note_atom(self, atom: Atom, tok: Token):
        if self.signature is not None:
            if atom.predicate not in self.signature:
                self.issues.append((tok.line, tok.col, f"unknown predicate '{atom.predicate}'"))
                return
            expected = self.signature.arity(atom.predicate)
        else:
            expected = self.arities.setdefault(atom.predicate, atom.arity)
        if expected != atom.arity:
            self.issues.append((tok.line, tok.col, f"'{atom.predicate}' has arity {expected}, got {atom.arity}"))

    def finish(self):
        if self.issues:
            raise ParseError(self.issues, self.source)

    def atom(self, term_of) -> Atom:
        head = self.expect("ident")
        args = []
        if self.accept_punct("("):
            if not self.at_punct(")"):
                args.append(term_of(self.advance()))
                while self.accept_punct(","):
                    args.append(term_of(self.advance()))
            self.expect("punct", ")")
        atom = Atom(head.text, tuple(args))
        self.note_atom(atom, head)
        return atom

    def atom_list(self, term_of, stop: Set[str]) -> List[Atom]:
        atoms = [self.atom(term_of)]
        while self.accept_punct(","):
            atoms.append(self.atom(term_of))
        if not any(self.at("arrow") if s == "->" else self.at_punct(s) for s in stop):
            self.fail(f"expected one of {sorted(stop)}")
        return atoms

    # terms -----------------------------------------------------------------

    def fact_term(self, tok: Token) -> Term:
        if tok.kind in ("ident", "string", "int"):
            return const(tok.value)
        if tok.kind == "null":
            return null(tok.value)
        self.fail(f"expected a term, found {tok.text!r}", tok)

    def rule_term(self, tok: Token) -> Term:
        if tok.kind == "ident":
            return var(tok.value)
        if tok.kind in ("string", "int"):
            return const(tok.value)
        if tok.kind == "null":
            self.fail("nulls are not allowed in rules", tok)
        self.fail(f"expected a term, found {tok.text!r}", tok)


# ---------------------------------------------------------------------------
# Facts
# ---------------------------------------------------------------------------

def parse_facts(text: str, source: Optional[str] = None, signature: Optional[Signature] = None) -> Instance:
    """`P(t1,...,tn).` statements; a Database when every term is a constant"""
    p = _Parser(text, source, signature)
    atoms = set()
    while not p.at("eof"):
        atoms.update(p.atom_list(p.fact_term, {"."}))
        p.expect("punct", ".")
    p.finish()
    inst = Instance(atoms)
    return Database(atoms) if not inst.nulls else inst


def format_term(term: Term) -> str:
    """Fact-style spelling: bare constants where unambiguous, `_:` nulls"""
    if term.is_null:
        return f"_:{term.name}" if _NULL_NAME.fullmatch(term.name) else f"_:{_quote(term.name)}"
    if term.is_constant and (_IDENT.fullmatch(term.name) or _INT.fullmatch(term.name)):
        return term.name
    if term.is_constant:
        return _quote(term.name)
    return term.name


def _rule_term(term: Term) -> str:
    if term.is_constant:
        return term.name if _INT.fullmatch(term.name) else _quote(term.name)
    return term.name


def _format_atom(atom: Atom, spell) -> str:
    if not atom.args:
        return atom.predicate
    return f"{atom.predicate}({','.join(spell(t) for t in atom.args)})"


def format_instance(inst: Instance) -> str:
    return "".join(f"{_format_atom(a, format_term)}.\n" for a in inst)


# ---------------------------------------------------------------------------
# Rules and datalog
# ---------------------------------------------------------------------------

def _parse_rule(p: _Parser) -> Rule:
    label = None
    if p.accept_punct("["):
        label = p.advance()
        if label.kind not in ("ident", "int"):
            p.fail("expected a rule label", label)
        label = label.text
        p.expect("punct", "]")
    start = p.tok
    body = [] if p.at("arrow") else p.atom_list(p.rule_term, {"->"})
    p.expect("arrow")
    declared = []
    if p.at("ident", "exists") and p.tokens[p.pos + 1].kind == "ident":
        p.advance()
        declared.append(p.expect("ident").text)
        while p.accept_punct(","):
            declared.append(p.expect("ident").text)
        p.expect("punct", ".")
    head = p.atom_list(p.rule_term, {"."})
    p.expect("punct", ".")
    rule_like = Rule(body, head, label)
    existentials = {v.name for v in rule_like.existentials}
    for name in declared:
        if name not in existentials:
            p.issues.append((start.line, start.col, f"declared existential '{name}' occurs in the body or not at all"))
    for name in sorted(existentials - set(declared)):
        p.issues.append((start.line, start.col, f"head variable '{name}' must be declared with exists"))
    return rule_like


def parse_rules(text: str, source: Optional[str] = None, signature: Optional[Signature] = None) -> RuleSet:
    """`[label] body -> exists v. head.` statements"""
    p = _Parser(text, source, signature)
    rules = []
    while not p.at("eof"):
        rules.append(_parse_rule(p))
    p.finish()
    labels = [r.label for r in rules if r.label]
    if len(set(labels)) != len(labels):
        raise ParseError([(1, 1, "duplicate rule labels")], source)
    return RuleSet.from_rules(rules, signature)


def format_rule(rule: Rule) -> str:
    label = f"[{rule.label}] " if rule.label else ""
    body = ", ".join(_format_atom(a, _rule_term) for a in sorted(rule.body))
    head = ", ".join(_format_atom(a, _rule_term) for a in sorted(rule.head))
    exists = f"exists {', '.join(v.name for v in rule.existentials)}. " if rule.existentials else ""
    body = f"{body} " if body else ""
    return f"{label}{body}-> {exists}{head}."


def format_rules(rules: RuleSet) -> str:
    return "".join(format_rule(r) + "\n" for r in rules)


def parse_datalog(text: str, source: Optional[str] = None) -> DatalogQuery:
    """`@goal name.` followed by datalog rules"""
    p = _Parser(text, source)
    goal = "goal"
    rules = []
    while not p.at("eof"):
        if p.accept_punct("@"):
            keyword = p.expect("ident")
            if keyword.text != "goal":
                p.fail(f"unknown directive @{keyword.text}", keyword)
            goal = p.expect("ident").text
            p.expect("punct", ".")
            continue
        rules.append(_parse_rule(p))
    p.finish()
    return DatalogQuery(RuleSet.from_rules(rules), goal)


def format_datalog(q: DatalogQuery) -> str:
    return f"@goal {q.goal}.\n" + format_rules(q.rules)


# ---------------------------------------------------------------------------
# Queries
# ---------------------------------------------------------------------------

def parse_query(text: str, source: Optional[str] = None, signature: Optional[Signature] = None) -> List[ConjunctiveQuery]:
    """
    One BCQ per statement; several statements form a UCQ

    Variables are those declared by `exists` or spelled with an uppercase
    initial; other bare identifiers are constants.
    """
    p = _Parser(text, source, signature)
    queries = []
    while not p.at("eof"):
        declared = set()
        if p.at("ident", "exists") and p.tokens[p.pos + 1].kind == "ident":
            p.advance()
            declared.add(p.expect("ident").text)
            while p.accept_punct(","):
                declared.add(p.expect("ident").text)
            p.expect("punct", ".")

        def query_term(tok: Token) -> Term:
            if tok.kind == "ident" and (tok.text in declared or tok.text[0].isupper()):
                return var(tok.text)
            if tok.kind == "null":
                p.fail("nulls are not allowed in queries", tok)
            return p.fact_term(tok)

        atoms = p.atom_list(query_term, {"."})
        p.expect("punct", ".")
        queries.append(ConjunctiveQuery(atoms))
    p.finish()
    if not queries:
        raise ParseError([(1, 1, "no query found")], source)
    return queries


def format_query(q: ConjunctiveQuery) -> str:
    exists = f"exists {', '.join(v.name for v in q.variables)}. " if q.variables else ""
    atoms = ", ".join(_format_atom(a, _rule_term) for a in sorted(q.atoms))
    return f"{exists}{atoms}."


def format_queries(queries: List[ConjunctiveQuery]) -> str:
    return "".join(format_query(q) + "\n" for q in queries)


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------

def _parse_color(p: _Parser) -> Color:
    tok = p.tok
    if tok.kind == "int":
        p.advance()
        return int(tok.text)
    if tok.kind in ("ident", "string"):
        p.advance()
        return tok.value
    if p.accept_punct("("):
        items = []
        trailing = False
        while not p.at_punct(")"):
            items.append(_parse_color(p))
            trailing = p.accept_punct(",")
            if not trailing and not p.at_punct(")"):
                p.fail("expected ',' or ')' in color tuple")
        p.expect("punct", ")")
        if len(items) == 1 and not trailing:
            return items[0]
        return tuple(items)
    p.fail(f"expected a color, found {tok.text!r}")


def _parse_color_list(p: _Parser) -> Tuple[Color, ...]:
    p.expect("punct", "(")
    colors = []
    while not p.at_punct(")"):
        colors.append(_parse_color(p))
        if not p.accept_punct(","):
            break
    p.expect("punct", ")")
    return tuple(colors)


def _parse_term(p: _Parser) -> CwExpr:
    ops = []
    while p.at("ident", "add") or p.at("ident", "recolor"):
        keyword = p.advance()
        if keyword.text == "add":
            predicate = p.expect("ident")
            colors = _parse_color_list(p)
            p.note_atom(Atom(predicate.text, tuple(null(str(i)) for i in range(len(colors)))), predicate)
            ops.append(Add(predicate.text, colors, Void()))
        else:
            source = _parse_color(p)
            p.expect("arrow")
            ops.append(Recolor(source, _parse_color(p), Void()))

    tok = p.tok
    if p.accept_punct("("):
        base = _parse_expr(p)
        p.expect("punct", ")")
    elif tok.kind == "ident" and tok.text == "null":
        p.advance()
        base = NullLeaf(_parse_color(p))
    elif tok.kind == "ident" and tok.text == "const":
        p.advance()
        name = p.advance()
        if name.kind not in ("ident", "string", "int"):
            p.fail("expected a constant", name)
        base = ConstLeaf(const(name.value), _parse_color(p))
    elif tok.kind == "ident" and tok.text == "ref":
        p.advance()
        base = Ref(p.expect("ident").text)
    elif tok.kind == "ident" and tok.text == "void":
        p.advance()
        base = Void()
    else:
        p.fail(f"expected an expression, found {tok.text!r}")

    for op in reversed(ops):
        base = Add(op.predicate, op.colors, base) if isinstance(op, Add) else Recolor(op.source, op.target, base)
    return base


def _parse_expr(p: _Parser) -> CwExpr:
    expr = _parse_term(p)
    while p.at("union"):
        p.advance()
        expr = DisjointUnion(expr, _parse_term(p))
    return expr


def parse_cwexpr(text: str, source: Optional[str] = None) -> EquationSystem:
    """`let NAME = expr; ... root NAME` (root defaults to the first equation)"""
    p = _Parser(text, source)
    equations: Dict[str, CwExpr] = {}
    root = None
    while not p.at("eof"):
        if p.accept_punct(";"):
            continue
        keyword = p.expect("ident")
        if keyword.text == "let":
            name = p.expect("ident")
            if name.text in equations:
                p.fail(f"equation '{name.text}' defined twice", name)
            p.expect("punct", "=")
            equations[name.text] = _parse_expr(p)
        elif keyword.text == "root":
            root = p.expect("ident").text
        else:
            p.fail(f"expected 'let' or 'root', found {keyword.text!r}", keyword)
        if not p.at("eof"):
            p.expect("punct", ";")
    p.finish()
    if not equations:
        raise ParseError([(1, 1, "no equations found")], source)
    return EquationSystem.of(equations, root or next(iter(equations)))


def format_color(color: Color) -> str:
    if isinstance(color, bool):
        raise ValueError(f"unprintable color {color!r}")
    if isinstance(color, int):
        return str(color)
    if isinstance(color, str):
        return color if _IDENT.fullmatch(color) else _quote(color)
    if isinstance(color, tuple):
        if len(color) == 1:
            return f"({format_color(color[0])},)"
        return "(" + ", ".join(format_color(c) for c in color) + ")"
    raise ValueError(f"unprintable color {color!r}")


def _format_term(expr: CwExpr) -> str:
    ops, base = _split_chain(expr)
    prefix = []
    for op in ops:
        if isinstance(op, Add):
            prefix.append(f"add {op.predicate} ({', '.join(format_color(c) for c in op.colors)}) ")
        else:
            prefix.append(f"recolor {format_color(op.source)} -> {format_color(op.target)} ")
    if isinstance(base, DisjointUnion):
        inner = f"({format_expr(base)})"
    elif isinstance(base, ConstLeaf):
        inner = f"const {format_term(base.constant)} {format_color(base.color)}"
    elif isinstance(base, NullLeaf):
        inner = f"null {format_color(base.color)}"
    elif isinstance(base, Ref):
        inner = f"ref {base.name}"
    else:
        inner = "void"
    return "".join(prefix) + inner


def format_expr(expr: CwExpr) -> str:
    """Left-nested unions print flat; right-nested ones are parenthesised"""
    if not isinstance(expr, DisjointUnion):
        return _format_term(expr)
    rights = []
    while isinstance(expr, DisjointUnion):
        rights.append(expr.right)
        expr = expr.left
    parts = [_format_term(expr)] + [_format_term(r) for r in reversed(rights)]
    return " (+) ".join(parts)


def format_cwexpr(system: EquationSystem) -> str:
    lines = [f"let {name} = {format_expr(expr)};" for name, expr in system.equations]
    lines.append(f"root {system.root}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Tree decompositions and colorings
# ---------------------------------------------------------------------------

def _node_name(p: _Parser) -> str:
    tok = p.advance()
    if tok.kind not in ("ident", "int"):
        p.fail("expected a bag name", tok)
    return tok.text


def parse_td(text: str, source: Optional[str] = None) -> TreeDecomposition:
    """`bag N {t1, t2}.` / `edge PARENT CHILD.` / `root N.`"""
    p = _Parser(text, source)
    bags: Dict[str, List[Term]] = {}
    edges = []
    root = None
    while not p.at("eof"):
        keyword = p.expect("ident")
        if keyword.text == "bag":
            name = _node_name(p)
            p.expect("punct", "{")
            terms = []
            while not p.at_punct("}"):
                terms.append(p.fact_term(p.advance()))
                if not p.accept_punct(","):
                    break
            p.expect("punct", "}")
            bags[name] = terms
        elif keyword.text == "edge":
            edges.append((_node_name(p), _node_name(p)))
        elif keyword.text == "root":
            root = _node_name(p)
        else:
            p.fail(f"expected 'bag', 'edge' or 'root', found {keyword.text!r}", keyword)
        p.expect("punct", ".")
    p.finish()
    if not bags:
        raise ParseError([(1, 1, "no bags found")], source)
    return TreeDecomposition.from_edges(bags, edges, root)


def format_td(td: TreeDecomposition) -> str:
    lines = []
    for node in td.preorder():
        terms = ", ".join(format_term(t) for t in sorted(td.bags[node]))
        lines.append(f"bag {node} {{{terms}}}.")
    lines.extend(f"edge {parent} {child}." for parent, child in td.edges())
    lines.append(f"root {td.root}.")
    return "\n".join(lines) + "\n"


def parse_coloring(text: str, source: Optional[str] = None) -> Dict[Term, Color]:
    """`<term> = <color>.` lines"""
    p = _Parser(text, source)
    coloring: Dict[Term, Color] = {}
    while not p.at("eof"):
        tok = p.advance()
        term = p.fact_term(tok)
        if term in coloring:
            p.fail(f"{format_term(term)} colored twice", tok)
        p.expect("punct", "=")
        coloring[term] = _parse_color(p)
        p.expect("punct", ".")
    p.finish()
    return coloring


def format_coloring(coloring: Mapping[Term, Color]) -> str:
    return "".join(f"{format_term(t)} = {format_color(c)}.\n" for t, c in sorted(coloring.items()))
