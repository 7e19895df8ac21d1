"""Command-line front end: validate, query, ask, explain.

Exit codes: 0 success, 1 usage or syntax error, 2 validation violations,
3 resolution error (defeasibility or containment cycles).
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from typing import List, Optional

from .defeasibility import resolve, trigger_profile
from .errors import (
    ContainmentCycleError,
    DefeasibilityCycleError,
    LogicCycleError,
    OlgError,
    SubclassCycleError,
)
from .ingest import load_context, load_document, build_graph
from .query import execute, parse_query
from .schema import builtin_schema, load_schema_file

_CYCLE_ERRORS = (
    DefeasibilityCycleError,
    ContainmentCycleError,
    SubclassCycleError,
    LogicCycleError,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="olgpp",
        description="Validate, query, and resolve legal rule graphs.",
    )
    parser.add_argument(
        "--schema",
        help="schema file overriding the built-in vocabulary "
             "(or set OLGPP_SCHEMA)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="check a document against the schema")
    p_validate.add_argument("document")

    p_query = sub.add_parser("query", help="run a graph-pattern query")
    p_query.add_argument("document")
    p_query.add_argument(
        "--query-file", default="-",
        help="query text file, or - for stdin (default)",
    )
    p_query.add_argument("--format", choices=("text", "csv"), default="text")
    p_query.add_argument("--max-bindings", type=int, default=10**6)

    for name, help_text in (
        ("ask", "resolve which triggers hold in a context"),
        ("explain", "resolve and print the full defeat trace"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("document")
        p.add_argument("--context", required=True, help="context file")
        p.add_argument("--scope", help="comma-separated trigger ids to consider")
    return parser


def _load_schema(args):
    path = args.schema or os.environ.get("OLGPP_SCHEMA")
    if path:
        return load_schema_file(path)
    return builtin_schema()


def _load(args):
    schema = _load_schema(args)
    doc = load_document(args.document)
    graph, violations = build_graph(doc, schema)
    return graph, violations


def _render_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float) and value == int(value):
        return str(int(value))
    return str(value)


def _print_table(table, fmt: str, out):
    if fmt == "csv":
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([_render_cell(v) for v in row])
        return
    cells = [list(table.columns)] + [
        [_render_cell(v) for v in row] for row in table.rows
    ]
    widths = [max(len(r[i]) for r in cells) for i in range(len(table.columns))]
    header, *body = cells
    out.write(" | ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip() + "\n")
    out.write("-+-".join("-" * w for w in widths) + "\n")
    for row in body:
        out.write(" | ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() + "\n")


def _cmd_validate(args, out, err) -> int:
    graph, violations = _load(args)
    for violation in violations:
        out.write(f"{violation}\n")
    out.write(f"{len(violations)} violations\n")
    return 2 if violations else 0


def _cmd_query(args, out, err) -> int:
    graph, violations = _load(args)
    if violations:
        err.write(f"warning: document has {len(violations)} violations\n")
    if args.query_file == "-":
        text = sys.stdin.read()
    else:
        with open(args.query_file, "r", encoding="utf-8") as handle:
            text = handle.read()
    table = execute(parse_query(text), graph, max_bindings=args.max_bindings)
    _print_table(table, args.format, out)
    return 0


def _resolve(args, err):
    graph, violations = _load(args)
    if violations:
        err.write(f"warning: document has {len(violations)} violations\n")
    ctx = load_context(args.context)
    if ctx.party is None and ctx.position is None and ctx.instant is None and not ctx.facts:
        raise OlgError("context file carries no party, position, instant, or facts")
    scope = None
    if args.scope:
        scope = {t.strip() for t in args.scope.split(",") if t.strip()}
    return graph, resolve(graph, ctx, scope)


def _cmd_ask(args, out, err) -> int:
    graph, ruling = _resolve(args, err)
    for winner in ruling.winners:
        profile = trigger_profile(graph, winner)
        out.write(f"WINNER {winner} {profile.modality} {profile.label}\n")
    if not ruling.winners:
        out.write("no applicable triggers\n")
    return 0


def _cmd_explain(args, out, err) -> int:
    _, ruling = _resolve(args, err)
    for line in ruling.trace:
        out.write(line + "\n")
    return 0


_COMMANDS = {
    "validate": _cmd_validate,
    "query": _cmd_query,
    "ask": _cmd_ask,
    "explain": _cmd_explain,
}


def main(argv: Optional[List[str]] = None, out=None, err=None) -> int:
    out = out if out is not None else sys.stdout
    err = err if err is not None else sys.stderr
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return _COMMANDS[args.command](args, out, err)
    except _CYCLE_ERRORS as exc:
        err.write(f"error: {exc}\n")
        return 3
    except OlgError as exc:
        err.write(f"error: {exc}\n")
        return 1
    except OSError as exc:
        err.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
