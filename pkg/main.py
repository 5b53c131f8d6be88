"""
Main Runner - Rulebench command line
Chase, datalog, reification, cliquewidth and grid rewriting on rule/fact/expression files
"""

import argparse
import json
import logging
import sys
from contextlib import redirect_stdout
from typing import Callable, Dict, List, Optional

from acceptance_report import AcceptanceReport
from binary_case import disc_types, saturate_disconnected
from chase_engine import ChaseEngine
from cliquewidth import (
    ExpressionEvaluator,
    count_colors,
    recolor_witness,
    td_color_bound,
    td_to_cw,
    validate,
)
from datalog_engine import DatalogEngine
from errors import RulebenchError, UsageError, ValidationError
from grid_rewriter import GridRewriter, MarkedQuery, is_properly_marked
from kernel import Instance, Term, find_isomorphism
from parsers import (
    format_color,
    format_cwexpr,
    format_datalog,
    format_instance,
    format_queries,
    format_rules,
    format_term,
)
from reify import (
    ReifiedSignature,
    dereify_instance,
    reify_cq,
    reify_datalog,
    reify_instance,
    reify_rules,
)
from tree_decomposition import decompose, reify_decomposition
from visualizer import Visualizer
from workspace import Workspace

logger = logging.getLogger(__name__)


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _facts(inst: Instance) -> List[str]:
    return format_instance(inst).splitlines()


def _witness(hom: Dict[Term, Term]) -> Dict[str, str]:
    return {str(s): format_term(t) for s, t in sorted(hom.items()) if not s.is_constant}


def _emit(args, payload: Dict, text: str):
    if args.json:
        print(json.dumps({"command": args.command, **payload}, sort_keys=True, indent=2))
    else:
        print(text, end="" if text.endswith("\n") else "\n")


def _comments(lines: List[str]) -> str:
    return "".join(f"% {line}\n" for line in lines)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_chase(args, ws: Workspace) -> int:
    rules = ws.load_rules(args.rules)
    db = ws.load_facts(args.db)
    engine = ChaseEngine()
    with redirect_stdout(sys.stderr):
        results = engine.run_chase(db, rules, args.depth)
    if args.plot:
        with redirect_stdout(sys.stderr):
            Visualizer.plot_chase_growth(results, save_path=args.plot)
    inst = results["instance"]
    report = [f"chase depth {args.depth}: {len(inst)} atoms, {len(inst.nulls)} nulls"]
    if results["fixpoint"]:
        report.append("fixpoint reached")
    _emit(args, {
        "depth": args.depth,
        "facts": _facts(inst),
        "steps": results["steps"],
        "fixpoint": results["fixpoint"],
    }, _comments(report) + format_instance(inst))
    return 0


def cmd_entail(args, ws: Workspace) -> int:
    rules = ws.load_rules(args.rules)
    db = ws.load_facts(args.db)
    queries = ws.load_queries(args.query)
    verdict = ChaseEngine().entails_ucq(db, rules, queries, args.budget)
    if verdict.entailed:
        lines = [f"ENTAILED at step {verdict.step}"]
        lines += [f"{s} -> {t}" for s, t in _witness(verdict.witness).items()]
        payload = {"entailed": True, "step": verdict.step, "witness": _witness(verdict.witness)}
    else:
        lines = [f"UNKNOWN at budget {verdict.budget}"]
        payload = {"entailed": False, "budget": verdict.budget}
    _emit(args, payload, lines[0] + "\n" + _comments(lines[1:]))
    return 0


def cmd_datalog(args, ws: Workspace) -> int:
    program = ws.load_datalog(args.program)
    db = ws.load_facts(args.db)
    engine = DatalogEngine()
    with redirect_stdout(sys.stderr):
        results = engine.run_datalog(db, program)
    derived = results["derived"]
    report = [f"goal {program.goal}: {'holds' if results['goal'] else 'does not hold'}"]
    report += [f"{p}: {n} facts" for p, n in results["counts"].items()]
    _emit(args, {
        "goal": results["goal"],
        "derived": _facts(derived),
        "counts": results["counts"],
        "iterations": results["iterations"],
    }, _comments(report) + format_instance(derived))
    return 0


def cmd_reify(args, ws: Workspace) -> int:
    if not (args.rules or args.db or args.query or args.program):
        raise UsageError("reify needs at least one of --rules, --db, --query, --program")
    rules = ws.load_rules(args.rules) if args.rules else None
    db = ws.load_facts(args.db) if args.db else None
    queries = ws.load_queries(args.query) if args.query else None
    program = ws.load_datalog(args.program) if args.program else None
    rsig = ReifiedSignature.of(ws.signature)

    payload: Dict = {"parts": [name for _, _, name in rsig.parts]}
    text = ""
    if rules is not None:
        out = format_rules(reify_rules(rules))
        payload["rules"] = out.splitlines()
        text += out
    if db is not None:
        out = format_instance(reify_instance(db, rsig))
        payload["facts"] = out.splitlines()
        text += out
    if queries is not None:
        out = format_queries([reify_cq(q, rsig) for q in queries])
        payload["queries"] = out.splitlines()
        text += out
    if program is not None:
        out = format_datalog(reify_datalog(program))
        payload["program"] = out.splitlines()
        text += out
    _emit(args, payload, text)
    return 0


def cmd_dereify(args, ws: Workspace) -> int:
    inst = ws.load_facts(args.db)
    if args.base:
        rsig = ReifiedSignature.of(ws.load_rules(args.base).signature)
    else:
        rsig = ReifiedSignature.infer(inst.signature())
    out = dereify_instance(inst, rsig)
    _emit(args, {"facts": _facts(out)}, format_instance(out))
    return 0


def cmd_cw_eval(args, ws: Workspace) -> int:
    system = ws.load_cwexpr(args.expr)
    issues = validate(system)
    if issues:
        raise ValidationError("invalid expression: " + "; ".join(str(i) for i in issues))
    evaluator = ExpressionEvaluator()
    results = evaluator.run_eval(system, args.unfold)
    ci = results["colored"]

    isomorphic = None
    if args.check_iso:
        expected = ws.load_facts(args.check_iso)
        isomorphic = find_isomorphism(ci.inst, expected) is not None
        if not isomorphic:
            raise ValidationError(f"evaluation at depth {args.unfold} is not isomorphic to {args.check_iso}")
    if args.plot:
        with redirect_stdout(sys.stderr):
            Visualizer.plot_colored_instance(ci, title=f"{args.expr} at depth {args.unfold}", save_path=args.plot)

    report = [f"unfold depth {args.unfold}: {results['atoms']} atoms, {results['terms']} terms",
              f"colors: {results['colors_used']}"]
    if isomorphic:
        report.append(f"isomorphic to {args.check_iso}")
    coloring = [f"{format_term(t)} = {format_color(c)}." for t, c in sorted(ci.coloring.items())]
    _emit(args, {
        "depth": args.unfold,
        "facts": _facts(ci.inst),
        "coloring": {format_term(t): format_color(c) for t, c in ci.coloring.items()},
        "colors": results["colors_used"],
        "isomorphic": isomorphic,
    }, _comments(report) + format_instance(ci.inst) + _comments(coloring))
    return 0


def cmd_td2cw(args, ws: Workspace) -> int:
    inst = ws.load_facts(args.db)
    td = ws.load_td(args.td) if args.td else decompose(inst)
    report = []
    wide = [a for a in inst if a.arity > 2]
    if wide:
        td = reify_decomposition(td, inst)
        inst = reify_instance(inst)
        report.append(f"reified {len(wide)} atoms of arity > 2")
    system = td_to_cw(inst, td)
    colors = count_colors(system)
    bound = td_color_bound(inst.signature(), td.width)
    if args.plot:
        ci = ExpressionEvaluator().evaluate(system, 1)
        with redirect_stdout(sys.stderr):
            Visualizer.plot_colored_instance(ci, title=f"td2cw {args.db}", save_path=args.plot)
    report.append(f"width {td.width}: {colors} colors (bound {bound})")
    _emit(args, {
        "expression": format_cwexpr(system).splitlines(),
        "colors": colors,
        "bound": bound,
        "width": td.width,
    }, _comments(report) + format_cwexpr(system))
    return 0


def cmd_recolor(args, ws: Workspace) -> int:
    system = ws.load_cwexpr(args.expr)
    coloring = ws.load_coloring(args.coloring)
    witness = recolor_witness(system, coloring, args.unfold)
    colors = count_colors(witness)
    _emit(args, {
        "expression": format_cwexpr(witness).splitlines(),
        "colors": colors,
    }, _comments([f"colors: {colors}"]) + format_cwexpr(witness))
    return 0


def _parse_marked(listing: Optional[str], terms) -> List[Term]:
    """Comma-separated names of query terms"""
    if not listing:
        return []
    by_name = {t.name: t for t in terms}
    names = [n.strip() for n in listing.split(",") if n.strip()]
    unknown = [n for n in names if n not in by_name]
    if unknown:
        raise UsageError(f"--marked names terms not in the query: {', '.join(unknown)}")
    return [by_name[n] for n in names]


def cmd_grid_rewrite(args, ws: Workspace) -> int:
    queries = ws.load_queries(args.query)
    if len(queries) != 1:
        raise UsageError("grid-rewrite takes a single query")
    query = queries[0]
    marked = set(_parse_marked(args.marked, query.terms)) | set(query.constants)
    mq = MarkedQuery.of(query, marked)
    if not is_properly_marked(mq):
        raise ValidationError(f"{mq} is not properly marked")
    rewriter = GridRewriter()
    with redirect_stdout(sys.stderr):
        results = rewriter.run_rewrite(mq)
    dead = results["dead"]
    report = [f"steps {results['steps']}, refuted {results['refuted']}, collapsed {results['collapsed']}",
              f"{len(dead)} dead queries"]
    text = _comments(report)
    for q in dead:
        text += _comments([f"marked: {', '.join(str(t) for t in sorted(q.marked))}"])
        text += format_queries([q.query])
    _emit(args, {
        "dead": [str(q) for q in dead],
        "steps": results["steps"],
        "refuted": results["refuted"],
        "collapsed": results["collapsed"],
    }, text)
    return 0


def cmd_grid_entail(args, ws: Workspace) -> int:
    db = ws.load_facts(args.db)
    queries = ws.load_queries(args.query)
    rewriter = GridRewriter()
    verdict = None
    for query in queries:
        verdict = rewriter.entails(db, query)
        if verdict.entailed:
            break
    lines = ["ENTAILED" if verdict.entailed else "NOT-ENTAILED"]
    if verdict.dead_query is not None:
        lines.append(f"marking: {', '.join(str(t) for t in sorted(verdict.marking))}")
        lines.append(f"dead query: {verdict.dead_query}")
    lines += [f"{s} -> {t}" for s, t in _witness(verdict.witness).items()]
    _emit(args, {
        "entailed": verdict.entailed,
        "marking": sorted(str(t) for t in verdict.marking) if verdict.marking else [],
        "dead_query": str(verdict.dead_query) if verdict.dead_query else None,
        "witness": _witness(verdict.witness),
    }, lines[0] + "\n" + _comments(lines[1:]))
    return 0


def cmd_disc_saturate(args, ws: Workspace) -> int:
    rules = ws.load_rules(args.rules)
    db = ws.load_facts(args.db)
    out = saturate_disconnected(db, rules)
    types = disc_types(db, rules)
    report = [f"{format_term(t)}: {' '.join(f'{l}.{s}' for l, s in tau.color) or '-'}"
              for t, tau in types.items()]
    _emit(args, {
        "facts": _facts(out),
        "types": {format_term(t): [f"{l}.{s}" for l, s in tau.color] for t, tau in types.items()},
    }, _comments(report) + format_instance(out))
    return 0


def cmd_report(args, ws: Workspace) -> int:
    report = AcceptanceReport(seed=args.seed, scale=args.scale)
    with redirect_stdout(sys.stderr if args.json else sys.stdout):
        results = report.run_report()
        if not args.json:
            report.print_results(results)
    if args.json:
        print(json.dumps({
            "command": args.command,
            "rows": results["table"].to_dict(orient="records"),
            "all_passed": results["all_passed"],
        }, sort_keys=True, indent=2, default=str))
    return 0 if results["all_passed"] else 3


COMMANDS: Dict[str, Callable] = {
    "chase": cmd_chase,
    "entail": cmd_entail,
    "datalog": cmd_datalog,
    "reify": cmd_reify,
    "dereify": cmd_dereify,
    "cw-eval": cmd_cw_eval,
    "td2cw": cmd_td2cw,
    "recolor": cmd_recolor,
    "grid-rewrite": cmd_grid_rewrite,
    "grid-entail": cmd_grid_entail,
    "disc-saturate": cmd_disc_saturate,
    "report": cmd_report,
}


def _non_negative(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = _ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit one JSON document")
    common.add_argument("--verbose", action="store_true", help="debug logging")

    parser = _ArgumentParser(prog="rulebench", description="Reasoning workbench for existential rules")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    p = sub.add_parser("chase", parents=[common], help="Skolem chase to a depth")
    p.add_argument("--rules", required=True)
    p.add_argument("--db", required=True)
    p.add_argument("--depth", type=_non_negative, default=1)
    p.add_argument("--plot", help="save a growth chart (PNG)")

    p = sub.add_parser("entail", parents=[common], help="bounded BCQ/UCQ entailment")
    p.add_argument("--rules", required=True)
    p.add_argument("--db", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--budget", type=_non_negative, default=3)

    p = sub.add_parser("datalog", parents=[common], help="evaluate a datalog query")
    p.add_argument("--program", required=True)
    p.add_argument("--db", required=True)

    p = sub.add_parser("reify", parents=[common], help="reify rules, facts, queries or programs")
    p.add_argument("--rules")
    p.add_argument("--db")
    p.add_argument("--query")
    p.add_argument("--program")

    p = sub.add_parser("dereify", parents=[common], help="rebuild wide atoms from stars")
    p.add_argument("--db", required=True)
    p.add_argument("--base", help="rule file giving the original signature")

    p = sub.add_parser("cw-eval", parents=[common], help="evaluate an expression system")
    p.add_argument("--expr", required=True)
    p.add_argument("--unfold", type=_non_negative, default=1)
    p.add_argument("--check-iso", dest="check_iso")
    p.add_argument("--plot", help="save the colored instance (PNG)")

    p = sub.add_parser("td2cw", parents=[common], help="expression from a tree decomposition")
    p.add_argument("--db", required=True)
    p.add_argument("--td")
    p.add_argument("--plot", help="save the colored instance (PNG)")

    p = sub.add_parser("recolor", parents=[common], help="recoloring witness")
    p.add_argument("--expr", required=True)
    p.add_argument("--unfold", type=_non_negative, default=1)
    p.add_argument("--coloring", required=True)

    p = sub.add_parser("grid-rewrite", parents=[common], help="rewrite a marked grid query")
    p.add_argument("--query", required=True)
    p.add_argument("--marked", help="comma-separated marked terms")

    p = sub.add_parser("grid-entail", parents=[common], help="grid entailment via rewriting")
    p.add_argument("--db", required=True)
    p.add_argument("--query", required=True)

    p = sub.add_parser("disc-saturate", parents=[common], help="one step of disconnected rules via colors")
    p.add_argument("--rules", required=True)
    p.add_argument("--db", required=True)

    p = sub.add_parser("report", parents=[common], help="seeded acceptance summary")
    p.add_argument("--seed", type=_non_negative)
    p.add_argument("--scale", type=float, default=1.0)

    return parser


def run(command: str, args: argparse.Namespace) -> int:
    """Dispatch one command; library errors become exit codes"""
    try:
        return COMMANDS[command](args, Workspace())
    except RulebenchError as e:
        print(f"❌ {e}", file=sys.stderr)
        return e.exit_code


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(f"❌ {e}", file=sys.stderr)
        return e.exit_code
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return run(args.command, args)


if __name__ == "__main__":
    sys.exit(main())
