"""The resolver: which deontic triggers survive in a given context.

Resolution runs in four steps. Gather the triggers applicable to the context;
drop everything an applicable trigger carves out via exception chains; drop
what an exception-survivor overrides; settle remaining precedence pairs by
level. Exceptions come before overrides: a carve-out narrows what a rule says,
a priority decides between rules that both still speak.

A defeat travels along a chain of exception/override edges only when every
intermediate trigger on the chain is itself applicable in the context;
direct edges always carry. Every defeat is recorded with the edge ids that
justify it, and the whole evaluation leaves an ordered, reproducible trace.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

from .errors import DefeasibilityCycleError
from .graph import id_sort_key
from .logic import EvalContext, condition_tree, evaluate
from .parties import edge_active, party_matches
from .schema import MODALITIES
from .spatial import Region, contains, region_problems
from .temporal import TimeWindow, in_window

EXCEPTED = "excepted"
OVERRIDDEN = "overridden"
PRECEDENCE = "precedence"

_TEMPORAL_EDGE_TYPES = ("during", "recurring", "on", "temporal_modifier")
_LOGIC_TYPES = frozenset({"logical_group", "condition_group", "condition"})


@dataclass(frozen=True)
class DeonticTrigger:
    """A trigger's resolution-relevant profile, read off the graph."""

    id: str
    modality: str
    holder: Optional[str] = None
    condition_roots: Tuple[str, ...] = ()
    jurisdictions: Tuple[str, ...] = ()
    windows: Tuple[TimeWindow, ...] = ()
    label: str = ""


@dataclass(frozen=True)
class DefeatRecord:
    loser: str
    winner: str
    reason: str
    edges: Tuple[str, ...]


@dataclass(frozen=True)
class Ruling:
    winners: Tuple[str, ...]
    defeated: Tuple[DefeatRecord, ...]
    trace: Tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "winners": list(self.winners),
            "defeated": [
                {"loser": d.loser, "winner": d.winner, "reason": d.reason,
                 "edges": list(d.edges)}
                for d in self.defeated
            ],
            "trace": list(self.trace),
        }


def trigger_profile(graph, trigger_id: str, instant=None) -> DeonticTrigger:
    node = graph.node(trigger_id)
    modality, holder = None, None
    for edge_id, dst in graph.neighbors(trigger_id, "out", edge_type="deontic_modality"):
        edge = graph.edge(edge_id)
        if not edge_active(edge, instant):
            continue
        holder = dst
        declared = edge.props.get("type", edge.props.get("modality"))
        if declared in MODALITIES:
            modality = declared
        break
    if holder is None:
        for edge_id, dst in graph.neighbors(trigger_id, "out", edge_type="performed_by"):
            if edge_active(graph.edge(edge_id), instant):
                holder = dst
                break
    if modality is None:
        declared = node.props.get("modality")
        modality = declared if declared in MODALITIES else "obligation"

    condition_roots = []
    for edge_id, dst in graph.neighbors(trigger_id, "out", edge_type="if_true"):
        if not edge_active(graph.edge(edge_id), instant):
            continue
        if graph.node(dst).node_type in _LOGIC_TYPES:
            condition_roots.append(dst)

    jurisdictions = []
    for edge_id, src in graph.neighbors(trigger_id, "in", edge_type="has_jurisdiction"):
        if edge_active(graph.edge(edge_id), instant):
            jurisdictions.append(src)

    windows = []
    for edge_type in _TEMPORAL_EDGE_TYPES:
        for edge_id, dst in graph.neighbors(trigger_id, "out", edge_type=edge_type):
            if not edge_active(graph.edge(edge_id), instant):
                continue
            window = graph.node(dst).props.get("window")
            if isinstance(window, TimeWindow):
                windows.append(window)

    return DeonticTrigger(
        id=trigger_id,
        modality=modality,
        holder=holder,
        condition_roots=tuple(condition_roots),
        jurisdictions=tuple(jurisdictions),
        windows=tuple(windows),
        label=node.label,
    )


def _position_applies(graph, profile: DeonticTrigger, position) -> bool:
    """Inside any of the trigger's jurisdiction polygons. Jurisdictions
    without a usable boundary cannot be tested and do not constrain."""
    testable = []
    for jid in profile.jurisdictions:
        boundary = graph.node(jid).props.get("boundary")
        if isinstance(boundary, Region) and not region_problems(boundary):
            testable.append(boundary)
    if not testable:
        return True
    return any(contains(region, position) for region in testable)


def applicable(graph, trigger_id: str, ctx: EvalContext) -> bool:
    """Does the trigger speak to this context at all?

    Holder, jurisdiction, and window tests each apply only when both the
    context and the trigger carry the relevant piece; condition trees are
    always evaluated when present.
    """
    node = graph.node(trigger_id)
    if node.base.status != "active":
        return False
    profile = trigger_profile(graph, trigger_id, ctx.instant)
    if ctx.party is not None and profile.holder is not None:
        if not party_matches(graph, profile.holder, ctx.party, ctx.instant):
            return False
    if ctx.position is not None and profile.jurisdictions:
        if not _position_applies(graph, profile, ctx.position):
            return False
    if ctx.instant is not None and profile.windows:
        if not any(in_window(ctx.instant, w) for w in profile.windows):
            return False
    for root in profile.condition_roots:
        if not evaluate(condition_tree(graph, root), ctx, graph):
            return False
    return True


# -- defeat machinery -----------------------------------------------------------


def _stage_edges(graph, edge_type: str, instant) -> Dict[str, List[tuple]]:
    adjacency: Dict[str, List[tuple]] = {}
    for edge in graph.edges():
        if edge.edge_type == edge_type and edge_active(edge, instant):
            adjacency.setdefault(edge.src, []).append((edge.id, edge.dst))
    for lst in adjacency.values():
        lst.sort(key=lambda p: id_sort_key(p[0]))
    return adjacency


def _check_stage_acyclic(adjacency, restrict: Set[str], edge_type: str):
    color: Dict[str, int] = {}
    for start in sorted(restrict, key=id_sort_key):
        if color.get(start, 0) == 2:
            continue
        stack = [(start, iter(adjacency.get(start, ())))]
        color[start] = 1
        while stack:
            node, it = stack[-1]
            advanced = False
            for _, nxt in it:
                if nxt not in restrict:
                    continue
                if color.get(nxt, 0) == 1:
                    raise DefeasibilityCycleError(
                        f"{edge_type} cycle among applicable triggers through {nxt!r}"
                    )
                if color.get(nxt, 0) == 0:
                    color[nxt] = 1
                    stack.append((nxt, iter(adjacency.get(nxt, ()))))
                    advanced = True
                    break
            if not advanced:
                color[node] = 2
                stack.pop()


def _chain_defeats(adjacency, defeaters: Set[str], pool: Set[str],
                   applicable_set: Set[str], reason: str) -> List[DefeatRecord]:
    """All (loser, winner) pairs where the winner reaches the loser through
    stage edges whose intermediate stops are applicable."""
    records = []
    for winner in sorted(defeaters, key=id_sort_key):
        # BFS keeping the edge path that first reached each node.
        paths: Dict[str, Tuple[str, ...]] = {}
        frontier = [winner]
        path_to = {winner: ()}
        while frontier:
            nxt_frontier = []
            for cur in frontier:
                # Expand through the start unconditionally, through later
                # stops only when the stop itself is applicable.
                if cur != winner and cur not in applicable_set:
                    continue
                for edge_id, dst in adjacency.get(cur, ()):
                    if dst in path_to:
                        continue
                    path_to[dst] = path_to[cur] + (edge_id,)
                    paths[dst] = path_to[dst]
                    nxt_frontier.append(dst)
            frontier = nxt_frontier
        for loser, edges in paths.items():
            if loser != winner and loser in pool:
                records.append(DefeatRecord(loser, winner, reason, edges))
    records.sort(key=lambda r: (id_sort_key(r.loser), id_sort_key(r.winner)))
    return records


def _precedence_defeats(graph, survivors: Set[str], instant):
    """Per precedence-linked pair, the higher level wins; ties keep both."""
    pair_edges: Dict[tuple, Dict[str, list]] = {}
    for edge in graph.edges():
        if edge.edge_type != "precedence" or not edge_active(edge, instant):
            continue
        if edge.src not in survivors or edge.dst not in survivors or edge.src == edge.dst:
            continue
        key = tuple(sorted((edge.src, edge.dst), key=id_sort_key))
        sides = pair_edges.setdefault(key, {key[0]: [], key[1]: []})
        sides[edge.src].append(edge)
    records, warnings = [], []
    for (a, b), sides in sorted(pair_edges.items()):
        def level_of(edges):
            levels = [e.props.get("level", 0) for e in edges]
            levels = [lv for lv in levels if isinstance(lv, (int, float))]
            return max(levels) if levels else None

        level_a, level_b = level_of(sides[a]), level_of(sides[b])
        cited = tuple(e.id for e in sorted(sides[a] + sides[b], key=lambda e: id_sort_key(e.id)))
        if level_a is not None and (level_b is None or level_a > level_b):
            records.append(DefeatRecord(b, a, PRECEDENCE, cited))
        elif level_b is not None and (level_a is None or level_b > level_a):
            records.append(DefeatRecord(a, b, PRECEDENCE, cited))
        elif level_a is not None and level_a == level_b:
            warnings.append(f"WARN precedence-tie {a} {b} level={level_a}")
    return records, warnings


def resolve(graph, ctx: EvalContext, scope: Optional[Set[str]] = None) -> Ruling:
    """Settle which triggers hold in the context, with a full defeat trace.

    Raises DefeasibilityCycleError when exception or override edges form a
    cycle among the applicable triggers.
    """
    if scope is not None:
        candidates = sorted(scope, key=id_sort_key)
    else:
        candidates = [
            n.id for n in graph.nodes()
            if n.node_type == "obligation_trigger" and n.base.status == "active"
        ]
        candidates.sort(key=id_sort_key)

    trace: List[str] = []
    applicable_set: Set[str] = set()
    for tid in candidates:
        if applicable(graph, tid, ctx):
            applicable_set.add(tid)
            trace.append(f"EVAL {tid} applicable")
        else:
            trace.append(f"EVAL {tid} not-applicable")

    exc_adj = _stage_edges(graph, "exception", ctx.instant)
    ovr_adj = _stage_edges(graph, "override", ctx.instant)
    _check_stage_acyclic(exc_adj, applicable_set, "exception")
    _check_stage_acyclic(ovr_adj, applicable_set, "override")

    exc_defeats = _chain_defeats(
        exc_adj, applicable_set, applicable_set, applicable_set, EXCEPTED
    )
    survivors = applicable_set - {d.loser for d in exc_defeats}

    ovr_defeats = _chain_defeats(
        ovr_adj, survivors, survivors, applicable_set, OVERRIDDEN
    )
    survivors = survivors - {d.loser for d in ovr_defeats}

    prec_defeats, warnings = _precedence_defeats(graph, survivors, ctx.instant)
    survivors = survivors - {d.loser for d in prec_defeats}

    defeats = exc_defeats + ovr_defeats + prec_defeats
    for d in defeats:
        tag = {EXCEPTED: "excepted-by", OVERRIDDEN: "overridden-by",
               PRECEDENCE: "precedence-below"}[d.reason]
        trace.append(f"DEFEAT {d.loser} {tag} {d.winner} via {'+'.join(d.edges)}")
    trace.extend(warnings)

    winners = sorted(survivors, key=id_sort_key)
    profiles = {tid: trigger_profile(graph, tid, ctx.instant) for tid in winners}
    trace.extend(_modality_conflicts(profiles))
    for tid in winners:
        trace.append(f"WINNER {tid} {profiles[tid].modality} {profiles[tid].label}")

    return Ruling(tuple(winners), tuple(defeats), tuple(trace))


def _modality_conflicts(profiles: Dict[str, DeonticTrigger]) -> List[str]:
    """Flag prohibition/permission winners that bind the same holder; the
    engine reports both rather than guessing a priority."""
    warnings = []
    by_holder: Dict[str, List[DeonticTrigger]] = {}
    for profile in profiles.values():
        if profile.holder is not None:
            by_holder.setdefault(profile.holder, []).append(profile)
    for holder in sorted(by_holder, key=id_sort_key):
        group = by_holder[holder]
        prohibitions = sorted(p.id for p in group if p.modality == "prohibition")
        grants = sorted(p.id for p in group if p.modality in ("permission", "entitlement"))
        if prohibitions and grants:
            warnings.append(
                f"WARN modality-conflict holder={holder} "
                f"prohibition={','.join(prohibitions)} grants={','.join(grants)}"
            )
    return warnings


# -- auxiliary checks -------------------------------------------------------------

_OUTCOME_EDGE = {"true": "if_true", "false": "if_false", "late": "if_late"}


def consequences(graph, antecedent_id: str, outcome: str) -> List[str]:
    """Obligation triggers activated by the antecedent's outcome."""
    graph.node(antecedent_id)
    edge_type = _OUTCOME_EDGE.get(outcome)
    if edge_type is None:
        raise ValueError(f"outcome must be one of {sorted(_OUTCOME_EDGE)}, got {outcome!r}")
    out = []
    for edge_id, dst in graph.neighbors(antecedent_id, "out", edge_type=edge_type):
        if not edge_active(graph.edge(edge_id), None):
            continue
        if graph.node(dst).node_type == "obligation_trigger":
            out.append(dst)
    return sorted(set(out), key=id_sort_key)


def check_prerequisites(graph, trigger_id: str, satisfied: Set[str]) -> List[str]:
    """Unmet prerequisites of a trigger: sources of prerequisite edges not in
    the satisfied set. The edge's grace_period, when present, is informational
    and stays available on the edge for presentation."""
    graph.node(trigger_id)
    unmet = []
    for edge_id, src in graph.neighbors(trigger_id, "in", edge_type="prerequisite"):
        if edge_active(graph.edge(edge_id), None) and src not in satisfied:
            unmet.append(src)
    return sorted(set(unmet), key=id_sort_key)


def check_mutual_exclusivity(graph, active: Set[str]) -> List[Tuple[str, str]]:
    """Every mutual_exclusivity edge with both endpoints active, once each."""
    out = []
    for edge in graph.edges():
        if edge.edge_type != "mutual_exclusivity":
            continue
        if edge.src in active and edge.dst in active and edge_active(edge, None):
            out.append((edge.src, edge.dst))
    return out
