"""Query AST.

All nodes are frozen dataclasses so parsed queries compare structurally;
pattern property maps are stored as ordered (key, value) tuples.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple, Union


@dataclass(frozen=True)
class NodePattern:
    var: Optional[str] = None
    label: Optional[str] = None
    props: Tuple[tuple, ...] = ()


@dataclass(frozen=True)
class EdgePattern:
    direction: str  # "out" for -[]->, "in" for <-[]-
    var: Optional[str] = None
    label: Optional[str] = None
    props: Tuple[tuple, ...] = ()


@dataclass(frozen=True)
class PathPattern:
    nodes: Tuple[NodePattern, ...]
    edges: Tuple[EdgePattern, ...] = ()

    def __post_init__(self):
        if len(self.nodes) != len(self.edges) + 1:
            raise ValueError("path must alternate node, edge, node, ...")

    def variables(self):
        for node in self.nodes:
            if node.var:
                yield node.var
        for edge in self.edges:
            if edge.var:
                yield edge.var


@dataclass(frozen=True)
class MatchClause:
    paths: Tuple[PathPattern, ...]


@dataclass(frozen=True)
class PropRef:
    var: str
    prop: str

    def __str__(self):
        return f"{self.var}.{self.prop}"


@dataclass(frozen=True)
class Literal:
    value: object  # str | int | float | bool | tuple for lists

    def __post_init__(self):
        if isinstance(self.value, list):
            object.__setattr__(self, "value", tuple(self.value))


@dataclass(frozen=True)
class Comparison:
    op: str  # "=", "CONTAINS", "IN"
    lhs: Union[PropRef, Literal]
    rhs: Union[PropRef, Literal]


@dataclass(frozen=True)
class BoolOp:
    op: str  # "AND" | "OR"
    operands: Tuple[object, ...]


@dataclass(frozen=True)
class NotOp:
    operand: object


@dataclass(frozen=True)
class ExistsBlock:
    paths: Tuple[PathPattern, ...]
    where: Optional[object] = None


@dataclass(frozen=True)
class WhereClause:
    expr: object


@dataclass(frozen=True)
class CaseWhen:
    pattern: PathPattern
    then_value: Literal
    else_value: Literal


@dataclass(frozen=True)
class ReturnItem:
    expr: Union[PropRef, CaseWhen]
    alias: str


@dataclass(frozen=True)
class ReturnClause:
    items: Tuple[ReturnItem, ...]
    distinct: bool = False
    order_by: Tuple[str, ...] = ()


@dataclass(frozen=True)
class Query:
    clauses: Tuple[Union[MatchClause, WhereClause], ...]
    returns: ReturnClause
    subclass_closure: bool = False


@dataclass(frozen=True)
class ResultTable:
    columns: Tuple[str, ...]
    rows: Tuple[tuple, ...]

    def __post_init__(self):
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError("row arity does not match columns")
