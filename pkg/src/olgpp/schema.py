"""Vocabulary registry and whole-graph structural validation.

The engine ships a declarative schema file (data/olgpp.schema) naming every
node and edge type, required properties, and edge endpoint rules. A malformed
schema aborts startup; validation of a *graph* never raises, it returns
Violation records.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Dict, List, Optional, Tuple

from .dsl import Lexer, parse_props
from .errors import ParseError, SchemaError, SubclassCycleError
from .spatial import GeoPoint, Region, contains, region_problems

# Violation kinds
MISSING_PROP = "MissingProp"
BAD_ENDPOINT = "BadEndpoint"
UNKNOWN_TYPE = "UnknownType"
CYCLE_WHERE_FORBIDDEN = "CycleWhereForbidden"
BAD_VALUE_KIND = "BadValueKind"

MODALITIES = ("entitlement", "obligation", "prohibition", "permission")

# Edge families whose instances must never form a directed cycle.
_ACYCLIC_EDGE_TYPES = ("subclass_of", "exception", "override")


@dataclass(frozen=True)
class Violation:
    kind: str
    subject: str  # node or edge id
    message: str

    def __str__(self):
        return f"{self.kind} {self.subject}: {self.message}"


@dataclass(frozen=True)
class NodeTypeDef:
    name: str
    category: str
    subtypes: Tuple[str, ...] = ()
    required: Tuple[str, ...] = ()


@dataclass(frozen=True)
class EdgeTypeDef:
    name: str
    category: str
    src: Optional[Tuple[str, ...]] = None  # None means any node type
    dst: Optional[Tuple[str, ...]] = None
    required: Tuple[str, ...] = ()


class TypeSchema:
    """Immutable after construction; share freely across readers."""

    def __init__(self, node_types, edge_types, aliases=None, version=""):
        self.node_types: Dict[str, NodeTypeDef] = dict(node_types)
        self.edge_types: Dict[str, EdgeTypeDef] = dict(edge_types)
        self.aliases: Dict[str, str] = dict(aliases or {})
        self.version = version
        self._check_consistency()

    def _check_consistency(self):
        for edef in self.edge_types.values():
            for side, allowed in (("src", edef.src), ("dst", edef.dst)):
                for name in allowed or ():
                    if name not in self.node_types:
                        raise SchemaError(
                            f"edge type {edef.name!r} {side} rule names "
                            f"unregistered node type {name!r}"
                        )
        for alias, target in self.aliases.items():
            if target not in self.edge_types and target not in self.node_types:
                raise SchemaError(f"alias {alias!r} points at unknown type {target!r}")

    def canonical_edge_or_node(self, name: str) -> str:
        return self.aliases.get(name, name)

    def has_node_type(self, name: str) -> bool:
        return name in self.node_types

    def has_edge_type(self, name: str) -> bool:
        return name in self.edge_types

    def node_category(self, node_type: str) -> str:
        type_def = self.node_types.get(node_type)
        return type_def.category if type_def else node_type

    def edge_category(self, edge_type: str) -> str:
        type_def = self.edge_types.get(edge_type)
        return type_def.category if type_def else edge_type

    def node_matches_type(self, record, label: str) -> bool:
        """True when a pattern label names the node's type, subtype, or the
        type's category."""
        label = self.canonical_edge_or_node(label)
        return (
            record.node_type == label
            or record.subtype == label
            or self.node_category(record.node_type) == label
        )

    def edge_matches_type(self, record, label: str) -> bool:
        label = self.canonical_edge_or_node(label)
        return record.edge_type == label or self.edge_category(record.edge_type) == label

    def required_node_props(self, record) -> Tuple[str, ...]:
        """Required props for a node: its type's list, plus its subtype's
        when the subtype is itself a registered type name."""
        required = []
        type_def = self.node_types.get(record.node_type)
        if type_def:
            required.extend(type_def.required)
        if record.subtype and record.subtype in self.node_types:
            for prop in self.node_types[record.subtype].required:
                if prop not in required:
                    required.append(prop)
        return tuple(required)


# -- schema file loading -------------------------------------------------------


def load_schema(text: str) -> TypeSchema:
    """Parse a schema document. Raises SchemaError on any malformation."""
    try:
        return _load_schema(text)
    except ParseError as exc:
        raise SchemaError(f"malformed schema: {exc}") from exc


def _str_list(props, key, where):
    raw = props.get(key)
    if raw is None:
        return None
    if not isinstance(raw, list) or not all(isinstance(x, str) for x in raw):
        raise SchemaError(f"{where}: {key} must be a list of strings")
    return tuple(raw)


def _load_schema(text: str) -> TypeSchema:
    lx = Lexer(text, keep_newlines=True)
    node_types, edge_types, aliases = {}, {}, {}
    version = None
    while not lx.at("EOF"):
        if lx.at("NEWLINE"):
            lx.next()
            continue
        keyword = lx.expect("IDENT").text
        if keyword == "schema":
            props, _ = parse_props(lx)
            version = props.get("version")
            if not isinstance(version, str) or not version:
                raise SchemaError("schema header needs a nonempty version string")
        elif keyword in ("nodetype", "edgetype"):
            name_tok = lx.expect("IDENT")
            name = name_tok.text
            props, _ = parse_props(lx)
            where = f"{keyword} {name}"
            category = props.get("category", name)
            if not isinstance(category, str):
                raise SchemaError(f"{where}: category must be a string")
            required = _str_list(props, "required", where) or ()
            for alias in _str_list(props, "aliases", where) or ():
                aliases[alias] = name
            if keyword == "nodetype":
                if name in node_types:
                    raise SchemaError(f"duplicate nodetype {name!r}")
                node_types[name] = NodeTypeDef(
                    name=name,
                    category=category,
                    subtypes=_str_list(props, "subtypes", where) or (),
                    required=required,
                )
            else:
                if name in edge_types:
                    raise SchemaError(f"duplicate edgetype {name!r}")
                edge_types[name] = EdgeTypeDef(
                    name=name,
                    category=category,
                    src=_str_list(props, "src", where),
                    dst=_str_list(props, "dst", where),
                    required=required,
                )
        else:
            tok = lx.peek()
            raise SchemaError(
                f"unknown schema record {keyword!r} (line {tok.line})"
            )
    if version is None:
        raise SchemaError("schema file missing the 'schema {version:...}' header")
    if not node_types:
        raise SchemaError("schema defines no node types")
    return TypeSchema(node_types, edge_types, aliases, version)


@lru_cache(maxsize=1)
def builtin_schema() -> TypeSchema:
    text = resources.files("olgpp").joinpath("data/olgpp.schema").read_text("utf-8")
    return load_schema(text)


def load_schema_file(path: str) -> TypeSchema:
    with open(path, "r", encoding="utf-8") as handle:
        return load_schema(handle.read())


# -- graph validation ----------------------------------------------------------


def validate_graph(graph) -> List[Violation]:
    """Every structural problem in the graph, deterministically ordered.

    Side-effect free and idempotent; an empty list means every node and edge
    satisfies its type definition and the global shape rules.
    """
    schema: TypeSchema = graph.schema
    violations: List[Violation] = []

    for node in graph.nodes():
        type_def = schema.node_types.get(node.node_type)
        if type_def is None:
            violations.append(Violation(
                UNKNOWN_TYPE, node.id,
                f"node type {node.node_type!r} is not registered",
            ))
            continue
        for prop in schema.required_node_props(node):
            if prop not in node.props:
                violations.append(Violation(
                    MISSING_PROP, node.id,
                    f"{node.node_type} node missing required property {prop!r}",
                ))
        violations.extend(_geometry_problems(node))

    for edge in graph.edges():
        type_def = schema.edge_types.get(edge.edge_type)
        if type_def is None:
            violations.append(Violation(
                UNKNOWN_TYPE, edge.id,
                f"edge type {edge.edge_type!r} is not registered",
            ))
            continue
        src, dst = graph.node(edge.src), graph.node(edge.dst)
        for side, allowed, endpoint in (("src", type_def.src, src), ("dst", type_def.dst, dst)):
            if allowed is None:
                continue
            if not any(schema.node_matches_type(endpoint, want) for want in allowed):
                violations.append(Violation(
                    BAD_ENDPOINT, edge.id,
                    f"{edge.edge_type} {side} must be one of {list(allowed)}, "
                    f"got {endpoint.node_type} node {endpoint.id!r}",
                ))
        for prop in type_def.required:
            if prop not in edge.props:
                violations.append(Violation(
                    MISSING_PROP, edge.id,
                    f"{edge.edge_type} edge missing required property {prop!r}",
                ))
        if edge.edge_type == "deontic_modality":
            modality = edge.props.get("type", edge.props.get("modality"))
            if modality is not None and modality not in MODALITIES:
                violations.append(Violation(
                    BAD_VALUE_KIND, edge.id,
                    f"deontic modality must be one of {list(MODALITIES)}, got {modality!r}",
                ))

    violations.extend(_cycle_violations(graph))
    violations.extend(_containment_disagreements(graph))
    violations.sort(key=lambda v: (v.subject, v.kind, v.message))
    return violations


def _geometry_problems(node) -> List[Violation]:
    out = []
    for key, value in node.props.items():
        if isinstance(value, Region):
            for problem in region_problems(value):
                out.append(Violation(
                    BAD_VALUE_KIND, node.id, f"property {key!r}: {problem}",
                ))
    return out


def _cycle_violations(graph) -> List[Violation]:
    out = []
    for edge_type in _ACYCLIC_EDGE_TYPES:
        cycle_node = _find_cycle(graph, lambda e, t=edge_type: e.edge_type == t)
        if cycle_node is not None:
            out.append(Violation(
                CYCLE_WHERE_FORBIDDEN, cycle_node,
                f"{edge_type} edges form a cycle through node {cycle_node!r}",
            ))
    cycle_node = _find_cycle(
        graph,
        lambda e: e.edge_type == "location_predicate" and e.props.get("type") == "within",
    )
    if cycle_node is not None:
        out.append(Violation(
            CYCLE_WHERE_FORBIDDEN, cycle_node,
            f"within-containment edges form a cycle through node {cycle_node!r}",
        ))
    return out


def _find_cycle(graph, edge_pred) -> Optional[str]:
    adjacency: Dict[str, List[str]] = {}
    for edge in graph.edges():
        if edge_pred(edge):
            adjacency.setdefault(edge.src, []).append(edge.dst)
    color = {}
    for start in sorted(adjacency):
        if color.get(start) == 2:
            continue
        stack = [(start, iter(adjacency.get(start, ())))]
        color[start] = 1
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if color.get(nxt) == 1:
                    return nxt
                if color.get(nxt, 0) == 0:
                    color[nxt] = 1
                    stack.append((nxt, iter(adjacency.get(nxt, ()))))
                    advanced = True
                    break
            if not advanced:
                color[node] = 2
                stack.pop()
    return None


def _containment_disagreements(graph) -> List[Violation]:
    """within edges whose endpoint polygons contradict the asserted nesting."""
    out = []
    for edge in graph.edges():
        if edge.edge_type != "location_predicate" or edge.props.get("type") != "within":
            continue
        inner = graph.node(edge.src).props.get("boundary")
        outer = graph.node(edge.dst).props.get("boundary")
        if not (isinstance(inner, Region) and isinstance(outer, Region)):
            continue
        if region_problems(inner) or region_problems(outer):
            continue  # degeneracy reported separately
        if not all(contains(outer, GeoPoint(p.x, p.y)) for p in inner.polygon):
            out.append(Violation(
                BAD_ENDPOINT, edge.id,
                f"within edge disagrees with boundary polygons: {edge.src!r} "
                f"is not geometrically inside {edge.dst!r}",
            ))
    return out


# -- subclass closure ----------------------------------------------------------


def subclass_ancestors(graph, node_id: str) -> List[str]:
    """Transitive subclass_of targets, nearest first. Raises SubclassCycle
    when the hierarchy loops."""
    graph.node(node_id)
    order: List[str] = []
    seen = {node_id}
    frontier = [node_id]
    while frontier:
        nxt = []
        for cur in frontier:
            for _, parent in graph.neighbors(cur, "out", edge_type="subclass_of"):
                if parent == node_id:
                    raise SubclassCycleError(
                        f"subclass_of cycle back to {node_id!r}"
                    )
                if parent not in seen:
                    seen.add(parent)
                    order.append(parent)
                    nxt.append(parent)
        frontier = nxt
    cycle = _find_cycle(
        graph,
        lambda e: e.edge_type == "subclass_of" and e.src in seen and e.dst in seen,
    )
    if cycle is not None:
        raise SubclassCycleError(f"subclass_of cycle through {cycle!r}")
    return order


def subclass_descendants(graph, node_id: str) -> List[str]:
    """Nodes that declare themselves (transitively) subclasses of this one."""
    order: List[str] = []
    seen = {node_id}
    frontier = [node_id]
    while frontier:
        nxt = []
        for cur in frontier:
            for _, child in graph.neighbors(cur, "in", edge_type="subclass_of"):
                if child not in seen:
                    seen.add(child)
                    order.append(child)
                    nxt.append(child)
        frontier = nxt
    return order
