"""Structural (intrinsic) load of a task graph.

Each dependency edge into a call node costs effort along two axes: how far
back in the conversation its source lies (the attentional distance, in
turns), and how many same-typed but wrong entities are already in context
competing with the one the call actually needs (interference). The edge
weight multiplies the two, ``distance * (1 + interference_weight * count)``,
and the task's intrinsic load is the sum of those weights over every edge
into every call node. Execution-order edges carry no entity and therefore
no interference.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from tigload.errors import InvalidTask, UnknownEdge
from tigload.model import (
    DATA,
    DepEdge,
    TaskInstance,
    ToolGraph,
    turn_positions,
    validate_task,
)

DEFAULT_INTERFERENCE_WEIGHT = 0.5


@dataclass(frozen=True)
class IntrinsicParams:
    """Knobs for the edge-weight formula.

    ``interference_weight`` is the balancing factor applied to the
    interference count (the config key and CLI flag call it ``lambda``).
    """

    interference_weight: float = DEFAULT_INTERFERENCE_WEIGHT

    def __post_init__(self):
        if self.interference_weight < 0:
            raise ValueError("interference_weight must be non-negative")


@dataclass(frozen=True)
class EdgeLoad:
    """Per-edge breakdown: distance, competitor count, resulting weight."""

    edge: tuple[str, str]
    delta: int
    interference: int
    weight: float

    def as_dict(self) -> dict:
        return {
            "src": self.edge[0],
            "dst": self.edge[1],
            "delta": self.delta,
            "interference": self.interference,
            "weight": self.weight,
        }


@dataclass(frozen=True)
class IntrinsicReport:
    per_edge: tuple[EdgeLoad, ...]
    per_node: dict[str, float] = field(default_factory=dict)
    total: float = 0.0

    def as_dict(self) -> dict:
        return {
            "per_edge": [e.as_dict() for e in self.per_edge],
            "per_node": dict(sorted(self.per_node.items())),
            "total": self.total,
        }


def _require_edge(graph: ToolGraph, edge: DepEdge) -> None:
    if not any(e.key == edge.key for e in graph.edges):
        raise UnknownEdge(f"edge {edge.src}->{edge.dst} is not part of the graph")


def attentional_distance(graph: ToolGraph, edge: DepEdge) -> int:
    """Turns between the edge's source and its consuming node (>= 1)."""
    _require_edge(graph, edge)
    positions = turn_positions(graph)
    return positions[edge.dst] - positions[edge.src]


def _context_entities(task: TaskInstance, positions: dict[str, int], before_turn: int) -> set:
    """All (type, value) pairs produced or mentioned strictly before a turn.

    Query nodes mirror their query's mentioned entities in ``produces``, so
    a single sweep over node products covers both sources; queries parsed
    without graph mirroring are still counted via the query list.
    """
    seen = set()
    for node in task.graph.nodes:
        if positions[node.id] < before_turn:
            for ent in node.produces:
                seen.add(ent.key)
    query_turn = {
        n.query_index: positions[n.id]
        for n in task.graph.nodes
        if n.kind == "query" and n.query_index is not None
    }
    for query in task.queries:
        turn = query_turn.get(query.index)
        if turn is not None and turn < before_turn:
            for ent in query.mentioned_entities:
                seen.add(ent.key)
    return seen


def interference(task: TaskInstance, edge: DepEdge) -> int:
    """Count of in-context same-type entities competing with the needed one.

    Execution edges return 0: selecting nothing costs nothing.
    """
    if edge.kind != DATA or edge.entity is None:
        return 0
    _require_edge(task.graph, edge)
    positions = turn_positions(task.graph)
    context = _context_entities(task, positions, positions[edge.dst])
    wanted = edge.entity.key
    return sum(
        1 for (stype, value) in context
        if stype == wanted[0] and value != wanted[1]
    )


def edge_weight(task: TaskInstance, edge: DepEdge, params: IntrinsicParams) -> float:
    distance = attentional_distance(task.graph, edge)
    count = interference(task, edge)
    return distance * (1.0 + params.interference_weight * count)


def intrinsic_load(task: TaskInstance, params: IntrinsicParams = IntrinsicParams()) -> IntrinsicReport:
    """Full per-edge, per-node, and total intrinsic load of a task.

    Raises :class:`InvalidTask` when the task fails validation; load values
    on a broken graph would be meaningless.
    """
    violations = validate_task(task)
    if violations:
        raise InvalidTask(f"task {task.id!r} is invalid", violations)

    positions = turn_positions(task.graph)
    node_by_id = task.graph.node_map()
    context_cache: dict[int, set] = {}

    per_edge: list[EdgeLoad] = []
    per_node: dict[str, float] = {
        n.id: 0.0 for n in task.graph.nodes if n.is_call
    }
    for edge in sorted(task.graph.edges, key=lambda e: (positions[e.dst], positions[e.src], e.kind)):
        if not node_by_id[edge.dst].is_call:
            continue
        distance = positions[edge.dst] - positions[edge.src]
        count = 0
        if edge.kind == DATA and edge.entity is not None:
            turn = positions[edge.dst]
            if turn not in context_cache:
                context_cache[turn] = _context_entities(task, positions, turn)
            wanted = edge.entity.key
            count = sum(
                1 for (stype, value) in context_cache[turn]
                if stype == wanted[0] and value != wanted[1]
            )
        weight = distance * (1.0 + params.interference_weight * count)
        per_edge.append(EdgeLoad(edge=(edge.src, edge.dst), delta=distance,
                                 interference=count, weight=weight))
        per_node[edge.dst] += weight

    total = sum(per_node.values())
    return IntrinsicReport(per_edge=tuple(per_edge), per_node=per_node, total=total)
