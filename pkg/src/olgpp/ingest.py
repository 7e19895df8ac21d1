"""Rule-document parsing and graph materialization.

The document format is line-oriented and diff-friendly:

    # comment
    document {source:"municipal code", version:"1"}
    origin latlong(32.7157,-117.1611)
    node n1 obligation_trigger {label:"Permission: selling", modality:"permission"}
    edge a1 whatRel n1 -> n2 {}

Node records may carry label/subtype/status/created_date/modified_date in
their property block; edges additionally temporal_validity. Distances
normalize to meters at parse time and the original spelling is preserved in
a <key>_raw property. latlong(...) values project onto the planar frame at
the document's declared origin.

Parsing is purely structural; build_graph constructs the graph even when it
is invalid and reports every problem as a Violation.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import date, datetime
from typing import Dict, List, Optional, Tuple

from .dsl import Lexer, LatLong, format_props, parse_constructor, parse_props
from .errors import DuplicateIdError, ParseError
from .graph import BaseProps, PropertyGraph
from .logic import EvalContext
from .schema import BAD_VALUE_KIND, TypeSchema, Violation, validate_graph
from .spatial import GeoPoint
from .temporal import TimeWindow

_NODE_BASE_KEYS = ("status", "created_date", "modified_date")
_EDGE_BASE_KEYS = ("status", "created_date", "modified_date", "temporal_validity")


@dataclass(frozen=True)
class NodeSpec:
    id: str
    node_type: str
    props: dict = field(default_factory=dict)
    raws: dict = field(default_factory=dict)


@dataclass(frozen=True)
class EdgeSpec:
    id: str
    edge_type: str
    src: str
    dst: str
    props: dict = field(default_factory=dict)
    raws: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RuleDocument:
    meta: dict
    origin: Optional[object] = None  # GeoPoint or LatLong
    nodes: Tuple[NodeSpec, ...] = ()
    edges: Tuple[EdgeSpec, ...] = ()


# -- parsing -------------------------------------------------------------------


def _take_id(lx: Lexer) -> str:
    tok = lx.peek()
    if tok.kind in ("IDENT", "NUMBER"):
        lx.next()
        return tok.text
    raise ParseError(f"expected an identifier, found {tok.text or 'end of input'!r}",
                     tok.line, tok.col)


def _skip_newlines(lx: Lexer):
    while lx.at("NEWLINE"):
        lx.next()


def _end_record(lx: Lexer):
    if lx.at("EOF"):
        return
    tok = lx.peek()
    if tok.kind != "NEWLINE":
        raise ParseError(f"unexpected {tok.text!r} after record", tok.line, tok.col)
    lx.next()


def parse_document(text) -> RuleDocument:
    """Structural parse only; schema checks happen in build_graph."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    lx = Lexer(text, keep_newlines=True)
    meta: Optional[dict] = None
    origin = None
    nodes: List[NodeSpec] = []
    edges: List[EdgeSpec] = []
    node_ids: Dict[str, bool] = {}
    edge_ids: Dict[str, bool] = {}

    _skip_newlines(lx)
    while not lx.at("EOF"):
        tok = lx.peek()
        keyword = lx.expect("IDENT").text
        if keyword == "document":
            if meta is not None:
                raise ParseError("duplicate document header", tok.line, tok.col)
            meta, _ = parse_props(lx)
            version = meta.get("version")
            if not isinstance(version, str) or not version:
                raise ParseError("document header needs a nonempty version",
                                 tok.line, tok.col)
        elif meta is None:
            raise ParseError("document header required before records",
                             tok.line, tok.col)
        elif keyword == "origin":
            name_tok = lx.expect("IDENT")
            if name_tok.text not in ("point", "latlong"):
                raise ParseError("origin must be point(...) or latlong(...)",
                                 name_tok.line, name_tok.col)
            lx.expect("(")
            raw = lx.raw_span_to(")")
            origin = parse_constructor(name_tok.text, raw, name_tok)
        elif keyword == "node":
            node_id = _take_id(lx)
            node_type = lx.expect("IDENT").text
            props, raws = parse_props(lx) if lx.at("{") else ({}, {})
            if node_id in node_ids:
                raise DuplicateIdError(f"duplicate node id {node_id!r}")
            node_ids[node_id] = True
            nodes.append(NodeSpec(node_id, node_type, props, raws))
        elif keyword == "edge":
            edge_id = _take_id(lx)
            edge_type = lx.expect("IDENT").text
            src = _take_id(lx)
            lx.expect("ARROW")
            dst = _take_id(lx)
            props, raws = parse_props(lx) if lx.at("{") else ({}, {})
            if edge_id in edge_ids:
                raise DuplicateIdError(f"duplicate edge id {edge_id!r}")
            for endpoint in (src, dst):
                if endpoint not in node_ids:
                    raise ParseError(
                        f"edge {edge_id!r} references undeclared node {endpoint!r}",
                        tok.line, tok.col,
                    )
            edge_ids[edge_id] = True
            edges.append(EdgeSpec(edge_id, edge_type, src, dst, props, raws))
        else:
            raise ParseError(
                f"unknown record {keyword!r} (expected document/origin/node/edge)",
                tok.line, tok.col,
            )
        _end_record(lx)
        _skip_newlines(lx)

    if meta is None:
        raise ParseError("document header required", 1, 1)
    return RuleDocument(meta, origin, tuple(nodes), tuple(edges))


def serialize_document(doc: RuleDocument) -> str:
    lines = [f"document {format_props(doc.meta)}"]
    if doc.origin is not None:
        from .dsl import format_value

        lines.append(f"origin {format_value(doc.origin)}")
    for node in doc.nodes:
        lines.append(f"node {node.id} {node.node_type} {format_props(node.props, node.raws)}")
    for edge in doc.edges:
        lines.append(
            f"edge {edge.id} {edge.edge_type} {edge.src} -> {edge.dst} "
            f"{format_props(edge.props, edge.raws)}"
        )
    return "\n".join(lines) + "\n"


def load_document(path: str) -> RuleDocument:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_document(handle.read())


# -- graph construction ----------------------------------------------------------


def _project_latlongs(props: dict, origin, subject: str, violations: List[Violation]):
    out = {}
    for key, value in props.items():
        if isinstance(value, LatLong):
            if isinstance(origin, LatLong):
                out[key] = value.project(origin)
            else:
                violations.append(Violation(
                    BAD_VALUE_KIND, subject,
                    f"property {key!r} uses latlong(...) but the document has "
                    f"no latlong origin; value dropped",
                ))
        elif isinstance(value, list) and any(isinstance(v, LatLong) for v in value):
            if isinstance(origin, LatLong):
                out[key] = [v.project(origin) if isinstance(v, LatLong) else v for v in value]
            else:
                violations.append(Violation(
                    BAD_VALUE_KIND, subject,
                    f"property {key!r} uses latlong(...) but the document has "
                    f"no latlong origin; value dropped",
                ))
        else:
            out[key] = value
    return out


def _split_base(props: dict, keys, subject: str, default_date: date,
                violations: List[Violation]):
    fields = {}
    rest = dict(props)
    for key in keys:
        if key not in rest:
            continue
        value = rest.pop(key)
        if key in ("created_date", "modified_date") and not isinstance(value, date):
            violations.append(Violation(
                BAD_VALUE_KIND, subject, f"{key} must be a date(...) literal",
            ))
            continue
        if key == "temporal_validity" and not isinstance(value, TimeWindow):
            violations.append(Violation(
                BAD_VALUE_KIND, subject,
                "temporal_validity must be an at(start/end) window",
            ))
            continue
        fields[key] = value
    fields.setdefault("created_date", default_date)
    fields.setdefault("modified_date", fields["created_date"])
    try:
        base = BaseProps(**fields)
    except ValueError as exc:
        violations.append(Violation(BAD_VALUE_KIND, subject, str(exc)))
        base = BaseProps(default_date, default_date)
    return base, rest


def _raw_props(raws: dict) -> dict:
    return {f"{key}_raw": text for key, text in raws.items()}


def _sanitize_kinds(props: dict, subject: str, violations: List[Violation]) -> dict:
    from .values import value_kind

    out = {}
    for key, value in props.items():
        try:
            value_kind(value)
        except ValueError as exc:
            violations.append(Violation(
                BAD_VALUE_KIND, subject, f"property {key!r}: {exc}; value dropped",
            ))
            continue
        out[key] = value
    return out


def _rewrite_reified_predicates(doc: RuleDocument) -> RuleDocument:
    """A location_predicate node with exactly one incoming and one outgoing
    edge is sugar for a direct location_predicate edge; rewrite it."""
    predicate_ids = {n.id for n in doc.nodes if n.node_type == "location_predicate"}
    if not predicate_ids:
        return doc
    incoming = {nid: [] for nid in predicate_ids}
    outgoing = {nid: [] for nid in predicate_ids}
    for edge in doc.edges:
        if edge.dst in predicate_ids:
            incoming[edge.dst].append(edge)
        if edge.src in predicate_ids:
            outgoing[edge.src].append(edge)
    rewritable = {
        nid for nid in predicate_ids
        if len(incoming[nid]) == 1 and len(outgoing[nid]) == 1
        and incoming[nid][0] is not outgoing[nid][0]
    }
    if not rewritable:
        return doc
    dropped_edges = set()
    new_edges: List[EdgeSpec] = []
    taken = {e.id for e in doc.edges}
    for node in doc.nodes:
        if node.id not in rewritable:
            continue
        enter, leave = incoming[node.id][0], outgoing[node.id][0]
        dropped_edges.update((enter.id, leave.id))
        props = {k: v for k, v in node.props.items()
                 if k not in ("label", "subtype") + _NODE_BASE_KEYS}
        edge_id = node.id if node.id not in taken else f"{node.id}_edge"
        taken.add(edge_id)
        new_edges.append(EdgeSpec(edge_id, "location_predicate",
                                  enter.src, leave.dst, props, dict(node.raws)))
    nodes = tuple(n for n in doc.nodes if n.id not in rewritable)
    edges = tuple(e for e in doc.edges if e.id not in dropped_edges) + tuple(new_edges)
    return replace(doc, nodes=nodes, edges=edges)


def build_graph(doc: RuleDocument, schema: TypeSchema):
    """Materialize a document. Returns (graph, violations); the graph is
    always constructed, violations describe everything wrong with it."""
    doc = _rewrite_reified_predicates(doc)
    violations: List[Violation] = []
    default_date = doc.meta.get("date")
    if not isinstance(default_date, date):
        default_date = BaseProps().created_date
    graph = PropertyGraph(schema)

    for spec in doc.nodes:
        props = _project_latlongs(dict(spec.props), doc.origin, spec.id, violations)
        label = props.pop("label", "")
        subtype = props.pop("subtype", None)
        base, props = _split_base(props, _NODE_BASE_KEYS, spec.id, default_date, violations)
        props = _sanitize_kinds(props, spec.id, violations)
        props.update(_raw_props(spec.raws))
        graph.add_node(
            spec.node_type,
            label=label if isinstance(label, str) else str(label),
            subtype=subtype if isinstance(subtype, str) else None,
            props=props,
            base=base,
            id=spec.id,
            strict=False,
        )

    for spec in doc.edges:
        props = _project_latlongs(dict(spec.props), doc.origin, spec.id, violations)
        base, props = _split_base(props, _EDGE_BASE_KEYS, spec.id, default_date, violations)
        props = _sanitize_kinds(props, spec.id, violations)
        props.update(_raw_props(spec.raws))
        graph.add_edge(
            spec.edge_type,
            spec.src,
            spec.dst,
            props=props,
            base=base,
            id=spec.id,
            strict=False,
        )

    violations.extend(validate_graph(graph))
    violations = sorted(set(violations), key=lambda v: (v.subject, v.kind, v.message))
    return graph.freeze(), violations


def load_graph(path: str, schema: TypeSchema):
    return build_graph(load_document(path), schema)


# -- evaluation contexts -----------------------------------------------------------

_CONTEXT_KEYS = frozenset({"party", "instant", "position", "facts"})


def parse_context(text: str) -> EvalContext:
    """Context files share the document literal syntax:

    context {party:"vendor", instant:at(2024-06-01T12:30),
             position:point(40,45), facts:["permit"]}
    """
    lx = Lexer(text, keep_newlines=True)
    _skip_newlines(lx)
    lx.take_keyword("context")
    props, _ = parse_props(lx)
    _skip_newlines(lx)
    if not lx.at("EOF"):
        tok = lx.peek()
        raise ParseError(f"unexpected {tok.text!r} after context record",
                         tok.line, tok.col)
    unknown = set(props) - _CONTEXT_KEYS
    if unknown:
        raise ParseError(f"unknown context keys: {sorted(unknown)}")
    party = props.get("party")
    if party is not None and not isinstance(party, str):
        raise ParseError("context party must be a node id string")
    instant = props.get("instant")
    if instant is not None and not isinstance(instant, datetime):
        raise ParseError("context instant must be an at(...) literal")
    position = props.get("position")
    if position is not None and not isinstance(position, GeoPoint):
        raise ParseError("context position must be a point(...) literal")
    facts_list = props.get("facts", [])
    if not isinstance(facts_list, list) or not all(isinstance(f, str) for f in facts_list):
        raise ParseError("context facts must be a list of fact names")
    return EvalContext(
        party=party,
        position=position,
        instant=instant,
        facts={name: True for name in facts_list},
    )


def load_context(path: str) -> EvalContext:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_context(handle.read())
