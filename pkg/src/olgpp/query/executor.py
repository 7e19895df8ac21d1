"""Query execution: nested-loop pattern joins over a graph snapshot.

Clauses run in order; MATCH extends the binding table, WHERE filters it.
A NOT EXISTS block keeps a row only when no extension of its bindings
satisfies the subpattern. Unknown labels match nothing rather than erroring.
Result ordering is deterministic: ORDER BY keys first, then the row's
binding ids.
"""

from __future__ import annotations

from typing import Dict, Iterator, List, Optional, Tuple

from ..errors import BindingLimitError
from ..graph import id_sort_key
from ..schema import subclass_descendants
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
    ResultTable,
    WhereClause,
)

DEFAULT_MAX_BINDINGS = 10**6

Binding = Tuple[str, str]  # ("node"|"edge", id)
Row = Dict[str, Binding]


class _Budget:
    __slots__ = ("remaining",)

    def __init__(self, cap: int):
        self.remaining = cap

    def spend(self, n: int = 1):
        self.remaining -= n
        if self.remaining < 0:
            raise BindingLimitError(
                "binding cap exceeded; raise max_bindings to continue"
            )


class _Engine:
    def __init__(self, graph, closure: bool, budget: _Budget):
        self.graph = graph
        self.schema = graph.schema
        self.closure = closure
        self.budget = budget
        self._descendant_types: Dict[str, set] = {}

    # -- type and property matching --

    def _closure_types(self, node_id: str) -> set:
        cached = self._descendant_types.get(node_id)
        if cached is None:
            cached = set()
            for did in subclass_descendants(self.graph, node_id):
                rec = self.graph.node(did)
                cached.add(rec.node_type)
                if rec.subtype:
                    cached.add(rec.subtype)
                cached.add(self.schema.node_category(rec.node_type))
            self._descendant_types[node_id] = cached
        return cached

    def node_label_ok(self, rec, label: Optional[str]) -> bool:
        if label is None:
            return True
        if self.schema.node_matches_type(rec, label):
            return True
        if self.closure:
            return self.schema.canonical_edge_or_node(label) in self._closure_types(rec.id)
        return False

    def node_prop_value(self, rec, key: str):
        if key in rec.props:
            return rec.props[key]
        if key == "id":
            return rec.id
        if key == "label":
            return rec.label
        if key == "type":
            return rec.subtype if rec.subtype is not None else rec.node_type
        if key == "subtype":
            return rec.subtype
        return None

    def edge_prop_value(self, rec, key: str):
        if key in rec.props:
            return rec.props[key]
        if key == "id":
            return rec.id
        if key == "type":
            return rec.edge_type
        return None

    def node_ok(self, rec, pattern: NodePattern) -> bool:
        if not self.node_label_ok(rec, pattern.label):
            return False
        return all(self.node_prop_value(rec, k) == v for k, v in pattern.props)

    def edge_ok(self, rec, pattern: EdgePattern) -> bool:
        if pattern.label is not None and not self.schema.edge_matches_type(rec, pattern.label):
            return False
        return all(self.edge_prop_value(rec, k) == v for k, v in pattern.props)

    # -- pattern extension --

    def _seed_nodes(self, row: Row, pattern: NodePattern) -> List[str]:
        if pattern.var and pattern.var in row:
            kind, bound_id = row[pattern.var]
            if kind != "node":
                return []
            rec = self.graph.node(bound_id)
            self.budget.spend()
            return [bound_id] if self.node_ok(rec, pattern) else []
        out = []
        for node_id in self.graph.node_ids():
            self.budget.spend()
            if self.node_ok(self.graph.node(node_id), pattern):
                out.append(node_id)
        return out

    def extend(self, row: Row, path: PathPattern) -> Iterator[Row]:
        first = path.nodes[0]
        for node_id in self._seed_nodes(row, first):
            new_row = dict(row)
            if first.var:
                new_row[first.var] = ("node", node_id)
            yield from self._walk(new_row, node_id, path, 0)

    def _walk(self, row: Row, at_node: str, path: PathPattern, hop: int) -> Iterator[Row]:
        if hop == len(path.edges):
            yield row
            return
        edge_pat = path.edges[hop]
        node_pat = path.nodes[hop + 1]
        direction = "out" if edge_pat.direction == "out" else "in"
        for edge_id, other_id in self.graph.neighbors(at_node, direction):
            self.budget.spend()
            edge = self.graph.edge(edge_id)
            if not self.edge_ok(edge, edge_pat):
                continue
            if edge_pat.var:
                prior = row.get(edge_pat.var)
                if prior is not None and prior != ("edge", edge_id):
                    continue
            if node_pat.var:
                prior = row.get(node_pat.var)
                if prior is not None and prior != ("node", other_id):
                    continue
            if not self.node_ok(self.graph.node(other_id), node_pat):
                continue
            new_row = dict(row)
            if edge_pat.var:
                new_row[edge_pat.var] = ("edge", edge_id)
            if node_pat.var:
                new_row[node_pat.var] = ("node", other_id)
            yield from self._walk(new_row, other_id, path, hop + 1)

    def extend_all(self, rows: List[Row], paths) -> List[Row]:
        for path in paths:
            rows = [extended for row in rows for extended in self.extend(row, path)]
        return rows

    # -- expression evaluation --

    def resolve_operand(self, operand, row: Row):
        if isinstance(operand, Literal):
            return operand.value
        kind, bound_id = row[operand.var]
        if kind == "node":
            return self.node_prop_value(self.graph.node(bound_id), operand.prop)
        return self.edge_prop_value(self.graph.edge(bound_id), operand.prop)

    def eval_expr(self, expr, row: Row) -> bool:
        if isinstance(expr, Comparison):
            lhs = self.resolve_operand(expr.lhs, row)
            rhs = self.resolve_operand(expr.rhs, row)
            if expr.op == "=":
                return lhs == rhs
            if expr.op == "CONTAINS":
                return isinstance(lhs, str) and isinstance(rhs, str) and rhs in lhs
            return lhs in rhs  # IN; rhs is a tuple literal
        if isinstance(expr, BoolOp):
            if expr.op == "AND":
                return all(self.eval_expr(part, row) for part in expr.operands)
            return any(self.eval_expr(part, row) for part in expr.operands)
        if isinstance(expr, NotOp):
            return not self.eval_expr(expr.operand, row)
        if isinstance(expr, ExistsBlock):
            candidates = self.extend_all([dict(row)], expr.paths)
            if expr.where is None:
                return bool(candidates)
            return any(self.eval_expr(expr.where, cand) for cand in candidates)
        raise TypeError(f"unexpected expression node {type(expr).__name__}")

    def project(self, item_expr, row: Row):
        if isinstance(item_expr, PropRef):
            return self.resolve_operand(item_expr, row)
        case: CaseWhen = item_expr
        for _ in self.extend(dict(row), case.pattern):
            return case.then_value.value
        return case.else_value.value


def _order_key(value):
    # Total order across the mixed types a projection can produce.
    if value is None:
        return (0, "")
    if isinstance(value, bool):
        return (1, value)
    if isinstance(value, (int, float)):
        return (2, value)
    if isinstance(value, str):
        return (3, value)
    return (4, str(value))


def _row_tiebreak(row: Row):
    return tuple(
        (var, kind, id_sort_key(bound_id))
        for var, (kind, bound_id) in sorted(row.items())
    )


def execute(query: Query, graph, max_bindings: int = DEFAULT_MAX_BINDINGS) -> ResultTable:
    """Run a parsed query. Raises BindingLimitError when the nested-loop
    join considers more candidates than the cap allows."""
    engine = _Engine(graph, query.subclass_closure, _Budget(max_bindings))
    rows: List[Row] = [{}]
    for clause in query.clauses:
        if isinstance(clause, MatchClause):
            rows = engine.extend_all(rows, clause.paths)
        else:
            rows = [row for row in rows if engine.eval_expr(clause.expr, row)]
        if not rows:
            break

    columns = tuple(item.alias for item in query.returns.items)
    projected = [
        (tuple(engine.project(item.expr, row) for item in query.returns.items), row)
        for row in rows
    ]

    order_names = query.returns.order_by
    indexes = {alias: i for i, alias in enumerate(columns)}

    def sort_key(entry):
        values, row = entry
        by = tuple(_order_key(values[indexes[name]]) for name in order_names)
        return (by, _row_tiebreak(row))

    projected.sort(key=sort_key)

    out: List[tuple] = []
    seen = set()
    for values, _ in projected:
        if query.returns.distinct:
            if values in seen:
                continue
            seen.add(values)
        out.append(values)
    return ResultTable(columns, tuple(out))
