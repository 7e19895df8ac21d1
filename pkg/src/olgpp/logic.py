"""Condition expression trees and formula evaluation.

Logic-group nodes reify boolean structure: members attach via MEMBER edges,
and an and/or edge between two groups builds a parent connective over both.
Leaves are condition nodes that dispatch to the spatial, temporal, fact, or
party evaluators against an EvalContext.

Connective evaluation is Kleene-style: AND is false as soon as any child is
false and OR true as soon as any child is true, even when another child
cannot be resolved, so the result never depends on member order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from typing import Dict, List, Optional, Tuple

from .errors import (
    EmptyFormulaError,
    LogicCycleError,
    MalformedGroupError,
    NonNumericOperandError,
    ParseError,
    UnresolvableLeafError,
)
from .graph import id_sort_key
from .parties import party_matches
from .spatial import GeoPoint, Region, SpatialPredicate, eval_spatial
from .temporal import TimeWindow, in_window

AND, OR, NOT, LEAF = "AND", "OR", "NOT", "LEAF"

EVALUATORS = ("spatial", "temporal", "fact", "party")

_LOGIC_NODE_TYPES = frozenset({"logical_group", "condition_group", "condition"})
_GROUP_TYPES = frozenset({"logical_group", "condition_group"})
_FORMULA_OPS = ("addition", "multiplication", "maximum")


@dataclass(frozen=True)
class ConditionRef:
    node_id: str
    evaluator: str

    def __post_init__(self):
        if self.evaluator not in EVALUATORS:
            raise ValueError(f"unknown evaluator {self.evaluator!r}")


@dataclass(frozen=True)
class ExprTree:
    op: str
    children: Tuple["ExprTree", ...] = ()
    leaf: Optional[ConditionRef] = None

    def __post_init__(self):
        if self.op == LEAF:
            if self.children or self.leaf is None:
                raise ValueError("LEAF carries a condition and no children")
        elif self.op == NOT:
            if len(self.children) != 1:
                raise ValueError("NOT takes exactly one child")
        elif self.op in (AND, OR):
            if len(self.children) < 2:
                raise ValueError(f"{self.op} needs at least two children")
        else:
            raise ValueError(f"unknown connective {self.op!r}")


@dataclass
class EvalContext:
    """The situation a question is asked about. Facts are closed-world:
    anything not listed is false."""

    party: Optional[str] = None
    position: Optional[GeoPoint] = None
    instant: Optional[datetime] = None
    facts: Dict[str, bool] = field(default_factory=dict)

    def __post_init__(self):
        for key in self.facts:
            if not isinstance(key, str) or not key:
                raise ValueError(f"fact keys must be nonempty strings, got {key!r}")


# -- building trees from the graph ----------------------------------------------


def _group_connective(node) -> str:
    explicit = node.props.get("type")
    if isinstance(explicit, str) and explicit.upper() in (AND, OR, NOT):
        return explicit.upper()
    evaluation = node.props.get("evaluation")
    if isinstance(evaluation, str):
        lowered = evaluation.lower()
        if "all" in lowered:
            return AND
        if "any" in lowered or "one of" in lowered or "at least one" in lowered:
            return OR
    raise MalformedGroupError(
        f"group {node.id!r} has no usable connective "
        f"(type={node.props.get('type')!r}, evaluation={node.props.get('evaluation')!r})"
    )


def _members(graph, group_id) -> List[str]:
    pairs = graph.neighbors(group_id, "in", edge_type="member")
    return [src for _, src in pairs]


def _leaf_for(graph, node) -> ExprTree:
    evaluator = node.props.get("kind")
    if evaluator is None:
        if "window" in node.props:
            evaluator = "temporal"
        elif "predicate" in node.props:
            evaluator = "spatial"
        elif "party" in node.props:
            evaluator = "party"
        else:
            evaluator = "fact"
    return ExprTree(LEAF, leaf=ConditionRef(node.id, evaluator))


def _group_tree(graph, group_id, active: set) -> ExprTree:
    if group_id in active:
        raise LogicCycleError(f"logic group {group_id!r} is a member of itself")
    node = graph.node(group_id)
    if node.node_type == "condition":
        return _leaf_for(graph, node)
    active = active | {group_id}
    children = []
    for member_id in _members(graph, group_id):
        member = graph.node(member_id)
        if member.node_type in _GROUP_TYPES:
            children.append(_group_tree(graph, member_id, active))
        else:
            children.append(_leaf_for(graph, member))
    connective = _group_connective(node)
    if connective == NOT:
        if len(children) != 1:
            raise MalformedGroupError(
                f"NOT group {group_id!r} needs exactly one member, has {len(children)}"
            )
        return ExprTree(NOT, tuple(children))
    if len(children) < 2:
        raise MalformedGroupError(
            f"{connective} group {group_id!r} needs at least two members, "
            f"has {len(children)}"
        )
    return ExprTree(connective, tuple(children))


def _combining_edges(graph, node_id) -> List[tuple]:
    """and/or edges incident to a logic node, either direction."""
    out = []
    for direction in ("out", "in"):
        for edge_type in ("and", "or"):
            for edge_id, other in graph.neighbors(node_id, direction, edge_type=edge_type):
                if graph.node(other).node_type in _GROUP_TYPES:
                    out.append((edge_id, edge_type.upper(), other))
    return sorted(out, key=lambda t: id_sort_key(t[0]))


def build_tree(graph, root_id: str) -> ExprTree:
    """Expression tree rooted at a logic group.

    MEMBER edges supply the group's own children; an and/or edge between two
    groups creates a parent connective spanning both, so the tree for either
    endpoint covers the combined structure.
    """
    root = graph.node(root_id)
    if root.node_type not in _LOGIC_NODE_TYPES:
        raise MalformedGroupError(
            f"{root_id!r} is a {root.node_type} node, not a logic node"
        )
    tree = _group_tree(graph, root_id, set())
    visited = {root_id}
    queue = [root_id]
    while queue:
        node_id = queue.pop(0)
        for _, connective, other in _combining_edges(graph, node_id):
            if other in visited:
                continue
            visited.add(other)
            tree = ExprTree(connective, (tree, _group_tree(graph, other, set())))
            queue.append(other)
    return tree


def condition_tree(graph, node_id: str) -> ExprTree:
    """Tree for any logic node: groups build recursively, bare conditions
    become single leaves."""
    node = graph.node(node_id)
    if node.node_type == "condition":
        return _leaf_for(graph, node)
    return build_tree(graph, node_id)


# -- evaluation ------------------------------------------------------------------


def _predicate_target(graph, node):
    if isinstance(node.props.get("region"), Region):
        return node.props["region"]
    if isinstance(node.props.get("point"), GeoPoint):
        return node.props["point"]
    # Fall back to a spatial edge pointing at a node that carries geometry.
    for edge_type in ("proximity_to", "spatial", "location_predicate"):
        for _, dst in graph.neighbors(node.id, "out", edge_type=edge_type):
            target = graph.node(dst)
            geometry = target.props.get("boundary", target.props.get("position"))
            if isinstance(geometry, (Region, GeoPoint)):
                return geometry
    raise UnresolvableLeafError(
        f"spatial condition {node.id!r} has no region/point and no spatial "
        f"edge to a node with geometry"
    )


def _eval_leaf(ref: ConditionRef, ctx: EvalContext, graph) -> bool:
    node = graph.node(ref.node_id)
    negate = node.props.get("negate") is True
    if ref.evaluator == "fact":
        key = node.props.get("fact") or node.label or node.id
        value = ctx.facts.get(key, False)
    elif ref.evaluator == "temporal":
        if ctx.instant is None:
            raise UnresolvableLeafError(
                f"condition {node.id!r} needs an instant the context lacks"
            )
        window = node.props.get("window")
        if not isinstance(window, TimeWindow):
            raise UnresolvableLeafError(f"condition {node.id!r} has no window property")
        value = in_window(ctx.instant, window)
    elif ref.evaluator == "spatial":
        if ctx.position is None:
            raise UnresolvableLeafError(
                f"condition {node.id!r} needs a position the context lacks"
            )
        kind = node.props.get("predicate", "within")
        pred = SpatialPredicate(kind, _predicate_target(graph, node),
                                node.props.get("distance"))
        value = eval_spatial(pred, ctx.position)
    elif ref.evaluator == "party":
        if ctx.party is None:
            raise UnresolvableLeafError(
                f"condition {node.id!r} needs a party the context lacks"
            )
        holder = node.props.get("party")
        if not isinstance(holder, str):
            raise UnresolvableLeafError(f"condition {node.id!r} has no party property")
        value = party_matches(graph, holder, ctx.party, ctx.instant)
    else:  # pragma: no cover - ConditionRef rejects unknown evaluators
        raise UnresolvableLeafError(f"unknown evaluator {ref.evaluator!r}")
    return (not value) if negate else value


def evaluate(tree: ExprTree, ctx: EvalContext, graph) -> bool:
    """Boolean value of the tree under the context.

    Raises UnresolvableLeafError only when the unresolved leaf actually
    matters for the result.
    """
    if tree.op == LEAF:
        return _eval_leaf(tree.leaf, ctx, graph)
    if tree.op == NOT:
        return not evaluate(tree.children[0], ctx, graph)
    results, pending = [], None
    for child in tree.children:
        try:
            results.append(evaluate(child, ctx, graph))
        except UnresolvableLeafError as exc:
            pending = exc
    if tree.op == AND:
        if any(r is False for r in results):
            return False
    else:
        if any(r is True for r in results):
            return True
    if pending is not None:
        raise pending
    return tree.op == AND


# -- printable expression strings -------------------------------------------------


def format_expr(tree: ExprTree) -> str:
    """Canonical text form, e.g. "(c1 AND c2) OR (c3 AND c4)"."""
    if tree.op == LEAF:
        return tree.leaf.node_id
    if tree.op == NOT:
        return f"(NOT {format_expr(tree.children[0])})"
    joined = f" {tree.op} ".join(format_expr(c) for c in tree.children)
    return f"({joined})"


def parse_expr(text: str, evaluator: str = "fact") -> ExprTree:
    """Parse the printable form back to a tree; names become leaves."""
    tokens = [t for t in text.replace("(", " ( ").replace(")", " ) ").split() if t]
    pos = 0

    def peek():
        return tokens[pos] if pos < len(tokens) else None

    def take(expected=None):
        nonlocal pos
        tok = peek()
        if tok is None or (expected is not None and tok != expected):
            raise ParseError(f"expected {expected or 'a token'}, found {tok!r}")
        pos += 1
        return tok

    def parse_or():
        left = parse_and()
        parts = [left]
        while peek() == "OR":
            take("OR")
            parts.append(parse_and())
        return parts[0] if len(parts) == 1 else ExprTree(OR, tuple(parts))

    def parse_and():
        parts = [parse_not()]
        while peek() == "AND":
            take("AND")
            parts.append(parse_not())
        return parts[0] if len(parts) == 1 else ExprTree(AND, tuple(parts))

    def parse_not():
        if peek() == "NOT":
            take("NOT")
            return ExprTree(NOT, (parse_not(),))
        return parse_atom()

    def parse_atom():
        if peek() == "(":
            take("(")
            inner = parse_or()
            take(")")
            return inner
        name = take()
        if name in ("AND", "OR", "NOT", ")"):
            raise ParseError(f"unexpected {name!r} in expression")
        return ExprTree(LEAF, leaf=ConditionRef(name, evaluator))

    tree = parse_or()
    if pos != len(tokens):
        raise ParseError(f"trailing tokens after expression: {tokens[pos:]}")
    return tree


# -- numeric formulas ---------------------------------------------------------------


def _numeric_value(node):
    for key in ("value", "amount"):
        raw = node.props.get(key)
        if isinstance(raw, bool):
            continue
        if isinstance(raw, (int, float)):
            return raw
    return None


def evaluate_formula(graph, root_id: str, _active=None) -> float:
    """Fold formula edges under a node into a number.

    Operands are the node's formula-edge targets, ordered by node id; each
    operand is its own formula when it has formula edges, otherwise its
    numeric value property.
    """
    active = _active or frozenset()
    if root_id in active:
        raise NonNumericOperandError(f"formula cycle through {root_id!r}")
    node = graph.node(root_id)
    by_op = {}
    for op in _FORMULA_OPS:
        targets = [dst for _, dst in graph.neighbors(root_id, "out", edge_type=op)]
        if targets:
            by_op[op] = sorted(targets, key=id_sort_key)
    if not by_op:
        value = _numeric_value(node)
        if value is None:
            if node.props.get("value") is not None or node.props.get("amount") is not None:
                raise NonNumericOperandError(
                    f"operand {root_id!r} has a non-numeric value property"
                )
            raise EmptyFormulaError(
                f"node {root_id!r} has no formula edges and no numeric value"
            )
        return value
    if len(by_op) > 1:
        raise NonNumericOperandError(
            f"node {root_id!r} mixes formula operators {sorted(by_op)}"
        )
    op, operands = next(iter(by_op.items()))
    values = [evaluate_formula(graph, t, active | {root_id}) for t in operands]
    if op == "addition":
        total = values[0]
        for v in values[1:]:
            total += v
        return total
    if op == "multiplication":
        total = values[0]
        for v in values[1:]:
            total *= v
        return total
    return max(values)
