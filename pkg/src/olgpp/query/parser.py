"""Recursive-descent parser for the graph-pattern query language.

Grammar (keywords case-insensitive, identifiers case-sensitive):

    query    := "SUBCLASS"? (match | where)+ return
    match    := "MATCH" path ("," path)*
    path     := node (edge node)*
    node     := "(" var? (":" ident)? props? ")"
    edge     := "-[" var? (":" ident)? props? "]->"
              | "<-[" var? (":" ident)? props? "]-"
    props    := "{" ident ":" literal ("," ident ":" literal)* "}"
    where    := "WHERE" orexpr
    orexpr   := andexpr ("OR" andexpr)*
    andexpr  := unary ("AND" unary)*
    unary    := "NOT" unary | primary
    primary  := "EXISTS" "{" match+ where? "}" | "(" orexpr ")" | comparison
    compare  := operand ("=" operand | "CONTAINS" operand | "IN" literal)
    operand  := var "." ident | literal
    return   := "RETURN" "DISTINCT"? item ("," item)*
                ("ORDER" "BY" ident ("," ident)*)?
    item     := (var "." ident | case) ("AS" ident)?
    case     := "CASE" "WHEN" path "THEN" literal "ELSE" literal "END"

A leading SUBCLASS keyword makes node-label matching honor the subclass_of
closure, so the query header reads "SUBCLASS MATCH ...".
"""

from __future__ import annotations

from typing import List, Optional, Set

from ..dsl import Lexer, parse_value
from ..errors import ParseError, UnboundVariableError
from .astnodes import (
    BoolOp,
    CaseWhen,
    Comparison,
    EdgePattern,
    ExistsBlock,
    Literal,
    MatchClause,
    NodePattern,
    NotOp,
    PathPattern,
    PropRef,
    Query,
    ReturnClause,
    ReturnItem,
    WhereClause,
)

KEYWORDS = frozenset(
    "MATCH WHERE RETURN DISTINCT AS ORDER BY AND OR NOT EXISTS IN CONTAINS "
    "CASE WHEN THEN ELSE END SUBCLASS TRUE FALSE".split()
)


def parse_query(text: str) -> Query:
    parser = _Parser(Lexer(text))
    query = parser.parse()
    _check_bindings(query)
    return query


class _Parser:
    def __init__(self, lx: Lexer):
        self.lx = lx

    def error(self, message) -> ParseError:
        tok = self.lx.peek()
        return ParseError(f"{message}, found {tok.text or 'end of input'!r}",
                          tok.line, tok.col)

    def at_kw(self, word) -> bool:
        return self.lx.at_keyword(word)

    def take_kw(self, word):
        self.lx.take_keyword(word)

    def ident(self, what="an identifier") -> str:
        tok = self.lx.peek()
        if tok.kind != "IDENT":
            raise self.error(f"expected {what}")
        if tok.text.upper() in KEYWORDS:
            raise ParseError(f"keyword {tok.text!r} cannot be used as {what}",
                             tok.line, tok.col)
        self.lx.next()
        return tok.text

    # -- top level --

    def parse(self) -> Query:
        subclass_closure = False
        if self.at_kw("SUBCLASS"):
            self.lx.next()
            subclass_closure = True
        clauses = []
        while True:
            if self.at_kw("MATCH"):
                clauses.append(self.match_clause())
            elif self.at_kw("WHERE"):
                self.lx.next()
                clauses.append(WhereClause(self.or_expr()))
            else:
                break
        if not any(isinstance(c, MatchClause) for c in clauses):
            raise self.error("expected at least one MATCH clause")
        returns = self.return_clause()
        if not self.lx.at("EOF"):
            raise self.error("expected end of query")
        return Query(tuple(clauses), returns, subclass_closure)

    # -- patterns --

    def match_clause(self) -> MatchClause:
        self.take_kw("MATCH")
        paths = [self.path()]
        while self.lx.at(","):
            self.lx.next()
            paths.append(self.path())
        return MatchClause(tuple(paths))

    def path(self) -> PathPattern:
        nodes = [self.node_pattern()]
        edges = []
        while self.lx.at("-") or self.lx.at("LARROW"):
            edges.append(self.edge_pattern())
            nodes.append(self.node_pattern())
        return PathPattern(tuple(nodes), tuple(edges))

    def node_pattern(self) -> NodePattern:
        self.lx.expect("(")
        var = label = None
        props = ()
        if self.lx.at("IDENT"):
            var = self.ident("a variable")
        if self.lx.at(":"):
            self.lx.next()
            tok = self.lx.expect("IDENT")
            label = tok.text
        if self.lx.at("{"):
            props = self.prop_equalities()
        self.lx.expect(")")
        return NodePattern(var, label, props)

    def edge_pattern(self) -> EdgePattern:
        if self.lx.at("LARROW"):
            direction = "in"
            self.lx.next()
        else:
            direction = "out"
            self.lx.expect("-")
        self.lx.expect("[")
        var = label = None
        props = ()
        if self.lx.at("IDENT"):
            var = self.ident("a variable")
        if self.lx.at(":"):
            self.lx.next()
            tok = self.lx.expect("IDENT")
            label = tok.text
        if self.lx.at("{"):
            props = self.prop_equalities()
        self.lx.expect("]")
        if direction == "out":
            self.lx.expect("ARROW")
        else:
            self.lx.expect("-")
        return EdgePattern(direction, var, label, props)

    def prop_equalities(self) -> tuple:
        self.lx.expect("{")
        pairs = []
        while True:
            key = self.lx.expect("IDENT").text
            self.lx.expect(":")
            pairs.append((key, self.literal().value))
            if self.lx.at(","):
                self.lx.next()
                continue
            break
        self.lx.expect("}")
        return tuple(pairs)

    # -- values and operands --

    def literal(self) -> Literal:
        tok = self.lx.peek()
        if tok.kind == "IDENT" and tok.text.upper() in ("TRUE", "FALSE"):
            self.lx.next()
            return Literal(tok.text.upper() == "TRUE")
        value, _ = parse_value(self.lx)
        return Literal(value)

    def operand(self):
        tok = self.lx.peek()
        if tok.kind == "IDENT" and tok.text.upper() not in ("TRUE", "FALSE"):
            var = self.ident("a variable")
            self.lx.expect(".")
            prop = self.lx.expect("IDENT").text
            return PropRef(var, prop)
        return self.literal()

    # -- boolean expressions --

    def or_expr(self):
        parts = [self.and_expr()]
        while self.at_kw("OR"):
            self.lx.next()
            parts.append(self.and_expr())
        return parts[0] if len(parts) == 1 else BoolOp("OR", tuple(parts))

    def and_expr(self):
        parts = [self.unary_expr()]
        while self.at_kw("AND"):
            self.lx.next()
            parts.append(self.unary_expr())
        return parts[0] if len(parts) == 1 else BoolOp("AND", tuple(parts))

    def unary_expr(self):
        if self.at_kw("NOT"):
            self.lx.next()
            return NotOp(self.unary_expr())
        return self.primary_expr()

    def primary_expr(self):
        if self.at_kw("EXISTS"):
            self.lx.next()
            self.lx.expect("{")
            paths: List[PathPattern] = []
            while self.at_kw("MATCH"):
                paths.extend(self.match_clause().paths)
            if not paths:
                raise self.error("EXISTS block needs at least one MATCH")
            where = None
            if self.at_kw("WHERE"):
                self.lx.next()
                where = self.or_expr()
            self.lx.expect("}")
            return ExistsBlock(tuple(paths), where)
        if self.lx.at("("):
            self.lx.next()
            inner = self.or_expr()
            self.lx.expect(")")
            return inner
        return self.comparison()

    def comparison(self) -> Comparison:
        lhs = self.operand()
        if self.lx.at("="):
            self.lx.next()
            return Comparison("=", lhs, self.operand())
        if self.at_kw("CONTAINS"):
            self.lx.next()
            return Comparison("CONTAINS", lhs, self.operand())
        if self.at_kw("IN"):
            self.lx.next()
            rhs = self.literal()
            if not isinstance(rhs.value, tuple):
                raise self.error("IN needs a list literal on the right")
            return Comparison("IN", lhs, rhs)
        raise self.error("expected =, CONTAINS, or IN")

    # -- return --

    def return_clause(self) -> ReturnClause:
        self.take_kw("RETURN")
        distinct = False
        if self.at_kw("DISTINCT"):
            self.lx.next()
            distinct = True
        items = [self.return_item()]
        while self.lx.at(","):
            self.lx.next()
            items.append(self.return_item())
        order_by = ()
        if self.at_kw("ORDER"):
            self.lx.next()
            self.take_kw("BY")
            names = [self.lx.expect("IDENT").text]
            while self.lx.at(","):
                self.lx.next()
                names.append(self.lx.expect("IDENT").text)
            order_by = tuple(names)
        clause = ReturnClause(tuple(items), distinct, order_by)
        aliases = {item.alias for item in clause.items}
        for name in order_by:
            if name not in aliases:
                raise ParseError(f"ORDER BY names unknown column {name!r}")
        return clause

    def return_item(self) -> ReturnItem:
        if self.at_kw("CASE"):
            expr = self.case_expr()
            default_alias = "case"
        else:
            ref = self.operand()
            if not isinstance(ref, PropRef):
                raise self.error("RETURN items must be var.prop or CASE expressions")
            expr = ref
            default_alias = str(ref)
        alias = default_alias
        if self.at_kw("AS"):
            self.lx.next()
            alias = self.lx.expect("IDENT").text
        return ReturnItem(expr, alias)

    def case_expr(self) -> CaseWhen:
        self.take_kw("CASE")
        self.take_kw("WHEN")
        pattern = self.path()
        self.take_kw("THEN")
        then_value = self.literal()
        self.take_kw("ELSE")
        else_value = self.literal()
        self.take_kw("END")
        return CaseWhen(pattern, then_value, else_value)


# -- binding analysis ------------------------------------------------------------


def _expr_refs(expr, local: Set[str], out: Set[str]):
    """Variables an expression references beyond its own local bindings."""
    if isinstance(expr, PropRef):
        if expr.var not in local:
            out.add(expr.var)
    elif isinstance(expr, Comparison):
        _expr_refs(expr.lhs, local, out)
        _expr_refs(expr.rhs, local, out)
    elif isinstance(expr, BoolOp):
        for part in expr.operands:
            _expr_refs(part, local, out)
    elif isinstance(expr, NotOp):
        _expr_refs(expr.operand, local, out)
    elif isinstance(expr, ExistsBlock):
        # Pattern variables inside the block are local bindings; only the
        # leftover references reach outward.
        inner = set(local)
        for path in expr.paths:
            inner.update(path.variables())
        if expr.where is not None:
            _expr_refs(expr.where, inner, out)
    elif isinstance(expr, Literal):
        pass
    else:  # pragma: no cover
        raise TypeError(f"unexpected expression node {type(expr).__name__}")


def _check_bindings(query: Query):
    """Reject WHERE references to variables no earlier pattern binds, and
    RETURN references to variables no pattern binds at all."""
    bound: Set[str] = set()
    for clause in query.clauses:
        if isinstance(clause, MatchClause):
            for path in clause.paths:
                bound.update(path.variables())
        else:
            refs: Set[str] = set()
            _expr_refs(clause.expr, set(), refs)
            missing = refs - bound
            if missing:
                raise UnboundVariableError(
                    f"WHERE references unbound variable(s): {', '.join(sorted(missing))}"
                )
    for item in query.returns.items:
        if isinstance(item.expr, PropRef) and item.expr.var not in bound:
            raise UnboundVariableError(
                f"RETURN references unbound variable {item.expr.var!r}"
            )


# -- pretty printing ----------------------------------------------------------------


def format_query(query: Query) -> str:
    lines = []
    if query.subclass_closure:
        lines.append("SUBCLASS")
    for clause in query.clauses:
        if isinstance(clause, MatchClause):
            lines.append("MATCH " + ", ".join(_fmt_path(p) for p in clause.paths))
        else:
            lines.append("WHERE " + _fmt_expr(clause.expr))
    ret = query.returns
    parts = ["RETURN"]
    if ret.distinct:
        parts.append("DISTINCT")
    parts.append(", ".join(_fmt_item(i) for i in ret.items))
    lines.append(" ".join(parts))
    if ret.order_by:
        lines.append("ORDER BY " + ", ".join(ret.order_by))
    return "\n".join(lines)


def _fmt_literal(value) -> str:
    from ..dsl import format_value

    if isinstance(value, tuple):
        return "[" + ", ".join(_fmt_literal(v) for v in value) + "]"
    return format_value(value)


def _fmt_props(props) -> str:
    if not props:
        return ""
    inner = ", ".join(f"{k}: {_fmt_literal(v)}" for k, v in props)
    return " {" + inner + "}"


def _fmt_node(node: NodePattern) -> str:
    label = f":{node.label}" if node.label else ""
    return f"({node.var or ''}{label}{_fmt_props(node.props)})"


def _fmt_edge(edge: EdgePattern) -> str:
    label = f":{edge.label}" if edge.label else ""
    body = f"[{edge.var or ''}{label}{_fmt_props(edge.props)}]"
    return f"-{body}->" if edge.direction == "out" else f"<-{body}-"


def _fmt_path(path: PathPattern) -> str:
    out = [_fmt_node(path.nodes[0])]
    for edge, node in zip(path.edges, path.nodes[1:]):
        out.append(_fmt_edge(edge))
        out.append(_fmt_node(node))
    return "".join(out)


def _fmt_expr(expr) -> str:
    if isinstance(expr, PropRef):
        return str(expr)
    if isinstance(expr, Literal):
        return _fmt_literal(expr.value)
    if isinstance(expr, Comparison):
        return f"{_fmt_expr(expr.lhs)} {expr.op} {_fmt_expr(expr.rhs)}"
    if isinstance(expr, BoolOp):
        joined = f" {expr.op} ".join(
            _fmt_operand(part, expr.op) for part in expr.operands
        )
        return joined
    if isinstance(expr, NotOp):
        return f"NOT {_fmt_operand(expr.operand, 'NOT')}"
    if isinstance(expr, ExistsBlock):
        inner = " ".join(f"MATCH {_fmt_path(p)}" for p in expr.paths)
        if expr.where is not None:
            inner += f" WHERE {_fmt_expr(expr.where)}"
        return "EXISTS { " + inner + " }"
    raise TypeError(f"unexpected expression node {type(expr).__name__}")


def _fmt_operand(expr, parent_op) -> str:
    text = _fmt_expr(expr)
    if isinstance(expr, BoolOp) and expr.op != parent_op:
        return f"({text})"
    if parent_op == "NOT" and isinstance(expr, BoolOp):
        return f"({text})"
    return text


def _fmt_item(item: ReturnItem) -> str:
    if isinstance(item.expr, CaseWhen):
        case = item.expr
        text = (
            f"CASE WHEN {_fmt_path(case.pattern)} "
            f"THEN {_fmt_literal(case.then_value.value)} "
            f"ELSE {_fmt_literal(case.else_value.value)} END"
        )
    else:
        text = str(item.expr)
    return f"{text} AS {item.alias}"
