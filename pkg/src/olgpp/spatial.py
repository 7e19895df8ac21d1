"""Planar geometry for locations and jurisdictions.

All coordinates are meters in a local planar frame (east = +x, north = +y).
Geographic lat/long input is projected onto this frame at ingest time, so
everything here is plain Euclidean geometry with a small boundary tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

from .errors import ContainmentCycleError, DegenerateRegionError, MissingNodeError

# Points closer than this to a boundary count as "on" it.
BOUNDARY_EPS = 1e-9

SPATIAL_KINDS = frozenset(
    {"within", "outside", "north_of", "south_of", "east_of", "west_of", "within_distance"}
)


@dataclass(frozen=True)
class GeoPoint:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite coordinates: ({self.x}, {self.y})")


@dataclass(frozen=True)
class Region:
    """A simple polygon, implicitly closed. Degeneracy is tolerated at
    construction and rejected by the operations that need a real area."""

    polygon: tuple
    name: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "polygon", tuple(self.polygon))

    def bbox(self):
        xs = [p.x for p in self.polygon]
        ys = [p.y for p in self.polygon]
        return min(xs), min(ys), max(xs), max(ys)


@dataclass(frozen=True)
class SpatialPredicate:
    kind: str
    target: Union[Region, GeoPoint]
    distance: Optional[float] = None

    def __post_init__(self):
        if self.kind not in SPATIAL_KINDS:
            raise ValueError(f"unknown spatial predicate kind: {self.kind!r}")
        if self.kind == "within_distance":
            if self.distance is None or self.distance <= 0:
                raise ValueError("within_distance needs a positive distance")
        elif self.distance is not None:
            raise ValueError(f"{self.kind} does not take a distance")


def signed_area(region: Region) -> float:
    pts = region.polygon
    total = 0.0
    for i in range(len(pts)):
        a, b = pts[i], pts[(i + 1) % len(pts)]
        total += a.x * b.y - b.x * a.y
    return total / 2.0


def _segments_properly_intersect(p1, p2, p3, p4) -> bool:
    def orient(a, b, c):
        return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)

    d1 = orient(p3, p4, p1)
    d2 = orient(p3, p4, p2)
    d3 = orient(p1, p2, p3)
    d4 = orient(p1, p2, p4)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and all(
        abs(d) > BOUNDARY_EPS for d in (d1, d2, d3, d4)
    )


def region_problems(region: Region) -> list:
    """Why a region is not a valid polygon; empty list means valid."""
    probs = []
    n = len(region.polygon)
    if n < 3:
        probs.append(f"degenerate region: {n} vertices, need at least 3")
        return probs
    if abs(signed_area(region)) <= BOUNDARY_EPS:
        probs.append("degenerate region: zero area")
    for i in range(n):
        for j in range(i + 1, n):
            # Adjacent segments (sharing a vertex) are allowed to touch.
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            a1, a2 = region.polygon[i], region.polygon[(i + 1) % n]
            b1, b2 = region.polygon[j], region.polygon[(j + 1) % n]
            if _segments_properly_intersect(a1, a2, b1, b2):
                probs.append(f"self-intersecting polygon (segments {i} and {j})")
                return probs
    return probs


def _require_valid(region: Region):
    probs = region_problems(region)
    if probs:
        raise DegenerateRegionError("; ".join(probs))


def _point_segment_distance(p: GeoPoint, a: GeoPoint, b: GeoPoint) -> float:
    vx, vy = b.x - a.x, b.y - a.y
    wx, wy = p.x - a.x, p.y - a.y
    seg_len2 = vx * vx + vy * vy
    if seg_len2 == 0:
        return math.hypot(wx, wy)
    t = max(0.0, min(1.0, (wx * vx + wy * vy) / seg_len2))
    return math.hypot(p.x - (a.x + t * vx), p.y - (a.y + t * vy))


def boundary_distance(region: Region, p: GeoPoint) -> float:
    pts = region.polygon
    return min(
        _point_segment_distance(p, pts[i], pts[(i + 1) % len(pts)])
        for i in range(len(pts))
    )


def contains(region: Region, p: GeoPoint, eps: float = BOUNDARY_EPS) -> bool:
    """Closed containment: boundary points count as inside.

    Ray casting with an explicit boundary-proximity check so points within
    eps of an edge are classified as contained regardless of crossing parity.
    """
    _require_valid(region)
    if boundary_distance(region, p) <= eps:
        return True
    inside = False
    pts = region.polygon
    n = len(pts)
    for i in range(n):
        a, b = pts[i], pts[(i + 1) % n]
        if (a.y > p.y) != (b.y > p.y):
            x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y)
            if p.x < x_cross:
                inside = not inside
    return inside


def distance_to(target: Union[Region, GeoPoint], p: GeoPoint) -> float:
    """Distance from p to a point target, or to a region (0 inside)."""
    if isinstance(target, GeoPoint):
        return math.hypot(p.x - target.x, p.y - target.y)
    _require_valid(target)
    if contains(target, p):
        return 0.0
    return boundary_distance(target, p)


def _extent(target: Union[Region, GeoPoint]):
    if isinstance(target, GeoPoint):
        return target.x, target.y, target.x, target.y
    _require_valid(target)
    return target.bbox()


def eval_spatial(pred: SpatialPredicate, p: GeoPoint) -> bool:
    """Evaluate a single predicate; composites belong to the logic layer."""
    kind = pred.kind
    if kind == "within":
        if isinstance(pred.target, GeoPoint):
            return distance_to(pred.target, p) <= BOUNDARY_EPS
        return contains(pred.target, p)
    if kind == "outside":
        if isinstance(pred.target, GeoPoint):
            return distance_to(pred.target, p) > BOUNDARY_EPS
        return not contains(pred.target, p)
    if kind == "within_distance":
        return distance_to(pred.target, p) <= pred.distance
    min_x, min_y, max_x, max_y = _extent(pred.target)
    if kind == "north_of":
        return p.y > max_y
    if kind == "south_of":
        return p.y < min_y
    if kind == "east_of":
        return p.x > max_x
    if kind == "west_of":
        return p.x < min_x
    raise ValueError(f"unhandled predicate kind: {kind}")


# -- graph-level operations ---------------------------------------------------
#
# These walk location_predicate {type:"within"} edges between location-family
# nodes. The graph argument is any object with the graph-core read API.

_LOCATION_TYPES = frozenset(
    {"location", "specific_location", "jurisdiction", "location_predicate"}
)


def _within_parents(graph, node_id):
    out = []
    for edge_id, dst in graph.neighbors(node_id, "out", edge_type="location_predicate"):
        edge = graph.edge(edge_id)
        if edge.props.get("type") == "within":
            out.append(dst)
    return out


def jurisdiction_chain(graph, node_id) -> list:
    """Innermost-to-outermost ancestors along within-edges.

    Breadth-first order; raises ContainmentCycleError when the containment
    edges loop back on any node reachable from the start.
    """
    node = graph.node(node_id)
    if node.node_type not in _LOCATION_TYPES:
        raise MissingNodeError(f"{node_id} is not a location or jurisdiction node")
    _check_acyclic(graph, node_id)
    chain = []
    seen = {node_id}
    frontier = [node_id]
    while frontier:
        nxt = []
        for cur in frontier:
            for parent in _within_parents(graph, cur):
                if parent not in seen:
                    seen.add(parent)
                    chain.append(parent)
                    nxt.append(parent)
        frontier = nxt
    return chain


def _check_acyclic(graph, start):
    # Iterative DFS with a path stack over the within-subgraph.
    done = set()
    stack = [(start, iter(_within_parents(graph, start)))]
    on_path = {start}
    while stack:
        node, parents = stack[-1]
        advanced = False
        for parent in parents:
            if parent in on_path:
                raise ContainmentCycleError(
                    f"containment cycle through {parent} reached from {start}"
                )
            if parent not in done:
                on_path.add(parent)
                stack.append((parent, iter(_within_parents(graph, parent))))
                advanced = True
                break
        if not advanced:
            on_path.discard(node)
            done.add(node)
            stack.pop()


def effective_obligations(graph, jurisdiction_id) -> set:
    """Triggers attached to a jurisdiction and everything it sits inside.

    Inner districts inherit the outer district's obligations; this is the
    raw union before any defeasibility filtering.
    """
    ids = [jurisdiction_id] + jurisdiction_chain(graph, jurisdiction_id)
    triggers = set()
    for jid in ids:
        for _, dst in graph.neighbors(jid, "out", edge_type="has_jurisdiction"):
            triggers.add(dst)
    return triggers
