"""Party identity and membership resolution.

A rule's holder can be an individual party, an enumerated group, or a
collective defined against a semantic entity (e.g. employees of an
organization). Delegation passes applicability to a delegate while the
delegation edge is live.
"""

from __future__ import annotations

from datetime import datetime
from typing import Optional

from .temporal import TimeWindow, in_window


def edge_active(edge, instant: Optional[datetime]) -> bool:
    """Edges that are superseded/draft, or whose temporal_validity excludes
    the instant, do not participate in resolution."""
    if edge.base.status != "active":
        return False
    validity = edge.base.temporal_validity
    if isinstance(validity, TimeWindow) and instant is not None:
        return in_window(instant, validity)
    return True


def _memberships(graph, party_id, instant):
    """Semantic entities and groups this party belongs to via membership edges."""
    out = set()
    for edge_id, dst in graph.neighbors(party_id, "out", edge_type="membership"):
        if edge_active(graph.edge(edge_id), instant):
            out.add(dst)
    return out


def _delegation_live(graph, edge, instant) -> bool:
    if not edge_active(edge, instant):
        return False
    if edge.props.get("revoked") is True:
        return False
    duration = edge.props.get("duration")
    if isinstance(duration, TimeWindow) and instant is not None:
        return in_window(instant, duration)
    return True


def party_matches(graph, holder_id: str, party_id: str,
                  instant: Optional[datetime] = None) -> bool:
    """Does a concrete party fall under a rule holder?

    True when the party is the holder itself, an enumerated member of the
    holder group, a member (by reference) of the semantic entity a collective
    group is defined over, or a live delegate of the holder.
    """
    if holder_id == party_id:
        return True
    holder = graph.node(holder_id)
    if holder.node_type == "party_group":
        for edge_id, member in graph.neighbors(holder_id, "out", edge_type="has_member"):
            if member == party_id and edge_active(graph.edge(edge_id), instant):
                return True
        memberships = _memberships(graph, party_id, instant)
        if holder_id in memberships:
            return True
        if holder.props.get("is_collective") is True:
            for edge_id, entity in graph.neighbors(holder_id, "out", edge_type="member_of"):
                if entity in memberships and edge_active(graph.edge(edge_id), instant):
                    return True
    for edge_id, delegate in graph.neighbors(holder_id, "out", edge_type="delegation"):
        if delegate == party_id and _delegation_live(graph, graph.edge(edge_id), instant):
            return True
    return False
