"""In-memory directed property graph with typed nodes and edges.

Build once under a single writer, then freeze() and share the snapshot among
readers. Lookups are index-backed and every read returns a deterministic
ordering, so repeated identical queries produce identical results.

There is no deletion: superseded elements keep their ids and carry
status="superseded" in their base properties.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date
from typing import Dict, Iterable, List, Optional, Tuple

from .errors import (
    DuplicateIdError,
    FrozenGraphError,
    MissingEndpointError,
    MissingNodeError,
    UnknownEdgeTypeError,
    UnknownNodeTypeError,
)
from .values import check_props

STATUSES = ("active", "superseded", "draft")

DEFAULT_DATE = date(2024, 1, 1)


@dataclass(frozen=True)
class BaseProps:
    created_date: date = DEFAULT_DATE
    modified_date: date = DEFAULT_DATE
    status: str = "active"
    temporal_validity: Optional[object] = None  # TimeWindow, edges only

    def __post_init__(self):
        if self.modified_date < self.created_date:
            raise ValueError(
                f"modified_date {self.modified_date} precedes created_date {self.created_date}"
            )
        if self.status not in STATUSES:
            raise ValueError(f"status must be one of {STATUSES}, got {self.status!r}")


@dataclass(frozen=True)
class NodeRecord:
    id: str
    node_type: str
    label: str = ""
    subtype: Optional[str] = None
    props: dict = field(default_factory=dict)
    base: BaseProps = field(default_factory=BaseProps)


@dataclass(frozen=True)
class EdgeRecord:
    id: str
    edge_type: str
    src: str
    dst: str
    props: dict = field(default_factory=dict)
    base: BaseProps = field(default_factory=BaseProps)


def id_sort_key(identifier: str):
    """Engine-assigned integer ids sort numerically, everything else
    lexicographically after them."""
    if identifier.isdigit():
        return (0, int(identifier), "")
    return (1, 0, identifier)


class PropertyGraph:
    """Directed multigraph of NodeRecord/EdgeRecord keyed by string ids."""

    def __init__(self, schema):
        self.schema = schema
        self._nodes: Dict[str, NodeRecord] = {}
        self._edges: Dict[str, EdgeRecord] = {}
        self._out: Dict[str, List[str]] = {}
        self._in: Dict[str, List[str]] = {}
        self._by_type: Dict[str, List[str]] = {}
        self._next_id = 1
        self._frozen = False

    # -- construction --

    def _fresh_id(self, taken) -> str:
        while str(self._next_id) in taken:
            self._next_id += 1
        new = str(self._next_id)
        self._next_id += 1
        return new

    def _guard_mutation(self):
        if self._frozen:
            raise FrozenGraphError("snapshot is frozen; build a new graph to mutate")

    def add_node(
        self,
        node_type: str,
        label: str = "",
        subtype: Optional[str] = None,
        props: Optional[dict] = None,
        base: Optional[BaseProps] = None,
        id: Optional[str] = None,
        strict: bool = True,
    ) -> str:
        self._guard_mutation()
        node_type = self.schema.canonical_edge_or_node(node_type)
        if strict and not self.schema.has_node_type(node_type):
            raise UnknownNodeTypeError(f"unknown node type {node_type!r}")
        if id is not None and id in self._nodes:
            raise DuplicateIdError(f"node id {id!r} already present")
        node_id = id if id is not None else self._fresh_id(self._nodes)
        record = NodeRecord(
            id=node_id,
            node_type=node_type,
            label=label,
            subtype=subtype,
            props=check_props(dict(props or {})),
            base=base or BaseProps(),
        )
        self._nodes[node_id] = record
        self._out.setdefault(node_id, [])
        self._in.setdefault(node_id, [])
        self._by_type.setdefault(node_type, []).append(node_id)
        return node_id

    def add_edge(
        self,
        edge_type: str,
        src: str,
        dst: str,
        props: Optional[dict] = None,
        base: Optional[BaseProps] = None,
        id: Optional[str] = None,
        strict: bool = True,
    ) -> str:
        self._guard_mutation()
        edge_type = self.schema.canonical_edge_or_node(edge_type)
        if strict and not self.schema.has_edge_type(edge_type):
            raise UnknownEdgeTypeError(f"unknown edge type {edge_type!r}")
        for endpoint in (src, dst):
            if endpoint not in self._nodes:
                raise MissingEndpointError(f"edge endpoint {endpoint!r} does not exist")
        if id is not None and id in self._edges:
            raise DuplicateIdError(f"edge id {id!r} already present")
        edge_id = id if id is not None else self._fresh_id(self._edges)
        record = EdgeRecord(
            id=edge_id,
            edge_type=edge_type,
            src=src,
            dst=dst,
            props=check_props(dict(props or {})),
            base=base or BaseProps(),
        )
        self._edges[edge_id] = record
        self._out[src].append(edge_id)
        self._in[dst].append(edge_id)
        return edge_id

    def freeze(self) -> "PropertyGraph":
        self._frozen = True
        return self

    # -- reads --

    def node(self, node_id: str) -> NodeRecord:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise MissingNodeError(f"no node {node_id!r}") from None

    def edge(self, edge_id: str) -> EdgeRecord:
        try:
            return self._edges[edge_id]
        except KeyError:
            raise MissingNodeError(f"no edge {edge_id!r}") from None

    def has_node(self, node_id: str) -> bool:
        return node_id in self._nodes

    def node_ids(self) -> List[str]:
        return sorted(self._nodes, key=id_sort_key)

    def edge_ids(self) -> List[str]:
        return sorted(self._edges, key=id_sort_key)

    def nodes(self) -> Iterable[NodeRecord]:
        return (self._nodes[i] for i in self.node_ids())

    def edges(self) -> Iterable[EdgeRecord]:
        return (self._edges[i] for i in self.edge_ids())

    def match_nodes(
        self,
        node_type: Optional[str] = None,
        prop_filter: Optional[Dict[str, object]] = None,
    ) -> List[str]:
        """Node ids, ordered by id, matching a type and per-property filters.

        The type filter accepts the node's type, its subtype, or the type's
        category. Filter values are predicates when callable, otherwise
        compared for equality.
        """
        if node_type is not None:
            candidates = [
                nid
                for nid, rec in self._nodes.items()
                if self.schema.node_matches_type(rec, node_type)
            ]
        else:
            candidates = list(self._nodes)
        out = []
        for nid in candidates:
            rec = self._nodes[nid]
            ok = True
            for key, want in (prop_filter or {}).items():
                got = rec.props.get(key)
                if callable(want):
                    if not want(got):
                        ok = False
                        break
                elif got != want:
                    ok = False
                    break
            if ok:
                out.append(nid)
        return sorted(out, key=id_sort_key)

    def neighbors(
        self,
        node_id: str,
        direction: str = "both",
        edge_type: Optional[str] = None,
    ) -> List[Tuple[str, str]]:
        """(edge id, neighbor id) pairs under the direction/type filter,
        ordered by edge id."""
        if node_id not in self._nodes:
            raise MissingNodeError(f"no node {node_id!r}")
        if direction not in ("out", "in", "both"):
            raise ValueError(f"direction must be out/in/both, got {direction!r}")
        pairs = []
        if direction in ("out", "both"):
            for eid in self._out[node_id]:
                edge = self._edges[eid]
                if edge_type is None or edge.edge_type == edge_type:
                    pairs.append((eid, edge.dst))
        if direction in ("in", "both"):
            for eid in self._in[node_id]:
                edge = self._edges[eid]
                if edge_type is None or edge.edge_type == edge_type:
                    pairs.append((eid, edge.src))
        return sorted(pairs, key=lambda p: id_sort_key(p[0]))

    def find_edges(
        self,
        edge_type: Optional[str] = None,
        src: Optional[str] = None,
        dst: Optional[str] = None,
    ) -> List[EdgeRecord]:
        out = []
        for eid in self.edge_ids():
            edge = self._edges[eid]
            if edge_type is not None and edge.edge_type != edge_type:
                continue
            if src is not None and edge.src != src:
                continue
            if dst is not None and edge.dst != dst:
                continue
            out.append(edge)
        return out

    def __len__(self) -> int:
        return len(self._nodes)
