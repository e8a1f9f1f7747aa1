"""Task/graph data model, validation, and canonical conversational order.

A task couples an ordered sequence of user queries with a tool set and a
ground-truth dependency graph over query nodes and function-call nodes.
Edges are either data dependencies (an output entity of one node is a
parameter of a later call) or execution-order constraints. All load metrics
are computed over the canonical linearization produced here: a total order
of the nodes that respects every edge and interleaves calls with the query
turn they belong to.

All types are immutable after construction and safe to share across
threads. Validation returns findings as data; nothing here raises on a
*bad graph*, only on misuse (e.g. linearizing a cyclic graph).
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Optional

from tigload.errors import CycleError

QUERY = "query"
CALL = "call"
DATA = "data"
EXECUTION = "execution"


@dataclass(frozen=True)
class EntityRef:
    """A typed value annotation; identity is the (type, value) pair."""

    semantic_type: str
    value_id: str
    extra: Mapping[str, Any] = field(default_factory=dict, compare=False, repr=False)

    @property
    def key(self) -> tuple[str, str]:
        return (self.semantic_type, self.value_id)


@dataclass(frozen=True)
class ToolParam:
    name: str
    type_tag: str = "string"
    required: bool = True
    description: str = ""
    extra: Mapping[str, Any] = field(default_factory=dict, compare=False, repr=False)


@dataclass(frozen=True)
class ToolSpec:
    name: str
    description: str = ""
    params: tuple[ToolParam, ...] = ()
    extra: Mapping[str, Any] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))


@dataclass(frozen=True)
class Query:
    """One user turn; ``index`` is the 0-based arrival position."""

    index: int
    text: str
    mentioned_entities: tuple[EntityRef, ...] = ()
    extra: Mapping[str, Any] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "mentioned_entities", tuple(self.mentioned_entities))


@dataclass(frozen=True)
class GraphNode:
    """A query turn or a required tool invocation.

    ``turn`` is the node's position in the canonical linearization; it may
    be omitted, in which case :func:`linearize` assigns the order. Query
    nodes carry ``query_index`` tying them to the task's query list and
    ``produces`` mirroring that query's mentioned entities; call nodes
    carry ``tool_name`` plus the entities they consume and produce.
    """

    id: str
    kind: str
    turn: Optional[int] = None
    tool_name: Optional[str] = None
    query_index: Optional[int] = None
    produces: tuple[EntityRef, ...] = ()
    consumes: tuple[EntityRef, ...] = ()
    extra: Mapping[str, Any] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "produces", tuple(self.produces))
        object.__setattr__(self, "consumes", tuple(self.consumes))

    @property
    def is_call(self) -> bool:
        return self.kind == CALL


@dataclass(frozen=True)
class DepEdge:
    """Directed dependency; ``entity`` is present exactly on data edges."""

    src: str
    dst: str
    kind: str = DATA
    entity: Optional[EntityRef] = None
    extra: Mapping[str, Any] = field(default_factory=dict, compare=False, repr=False)

    @property
    def key(self) -> tuple:
        return (self.src, self.dst, self.kind, self.entity.key if self.entity else None)


@dataclass(frozen=True)
class ToolGraph:
    nodes: tuple[GraphNode, ...] = ()
    edges: tuple[DepEdge, ...] = ()
    extra: Mapping[str, Any] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))

    def node_map(self) -> dict[str, GraphNode]:
        return {n.id: n for n in self.nodes}

    def incoming(self, node_id: str) -> list[DepEdge]:
        return [e for e in self.edges if e.dst == node_id]


@dataclass(frozen=True)
class TaskInstance:
    """One multi-turn tool-use task: queries, tool set, and solution graph."""

    id: str
    domain: str
    queries: tuple[Query, ...]
    tools: tuple[ToolSpec, ...]
    graph: ToolGraph
    meta: Mapping[str, str] = field(default_factory=dict)
    extra: Mapping[str, Any] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "queries", tuple(self.queries))
        object.__setattr__(self, "tools", tuple(self.tools))

    def tool_map(self) -> dict[str, ToolSpec]:
        return {t.name: t for t in self.tools}

    def used_tool_names(self) -> set[str]:
        return {n.tool_name for n in self.graph.nodes if n.is_call and n.tool_name}


@dataclass(frozen=True)
class Violation:
    """A single invariant failure: machine code, human message, subject ids."""

    code: str
    message: str
    subject: str = ""

    def as_dict(self) -> dict[str, str]:
        return {"code": self.code, "message": self.message, "subject": self.subject}


def _has_cycle(graph: ToolGraph) -> bool:
    indeg = {n.id: 0 for n in graph.nodes}
    succs: dict[str, list[str]] = {n.id: [] for n in graph.nodes}
    for e in graph.edges:
        if e.src in indeg and e.dst in indeg:
            indeg[e.dst] += 1
            succs[e.src].append(e.dst)
    ready = [nid for nid, d in indeg.items() if d == 0]
    seen = 0
    while ready:
        nid = ready.pop()
        seen += 1
        for succ in succs[nid]:
            indeg[succ] -= 1
            if indeg[succ] == 0:
                ready.append(succ)
    return seen != len(indeg)


def validate_graph(graph: ToolGraph) -> list[Violation]:
    """Check every graph-level invariant; an empty report means valid.

    Violations come back in a fixed order (node checks by node position,
    then edge checks by edge position, then global checks) so reports are
    directly comparable across runs.
    """
    out: list[Violation] = []
    ids: set[str] = set()
    node_by_id: dict[str, GraphNode] = {}
    for node in graph.nodes:
        if node.id in ids:
            out.append(Violation("duplicate_node_id", f"node id {node.id!r} appears more than once", node.id))
        ids.add(node.id)
        node_by_id.setdefault(node.id, node)
        if node.kind not in (QUERY, CALL):
            out.append(Violation("unknown_node_kind", f"node {node.id!r} has kind {node.kind!r}", node.id))
        if node.kind == QUERY:
            if node.tool_name is not None:
                out.append(Violation("query_with_tool", f"query node {node.id!r} carries a tool name", node.id))
            if node.query_index is None:
                out.append(Violation("query_without_index", f"query node {node.id!r} lacks query_index", node.id))
            if node.consumes:
                out.append(Violation("query_consumes", f"query node {node.id!r} lists consumed entities", node.id))
        if node.kind == CALL:
            if not node.tool_name:
                out.append(Violation("call_without_tool", f"call node {node.id!r} lacks a tool name", node.id))
            if node.query_index is not None:
                out.append(Violation("call_with_query_index", f"call node {node.id!r} carries query_index", node.id))
        for ent in tuple(node.produces) + tuple(node.consumes):
            if not ent.semantic_type:
                out.append(Violation("empty_semantic_type", f"node {node.id!r} carries an entity with empty semantic type", node.id))

    qindexes = [n.query_index for n in graph.nodes if n.kind == QUERY and n.query_index is not None]
    if len(qindexes) != len(set(qindexes)):
        out.append(Violation("duplicate_query_index", "two query nodes share a query_index"))

    seen_edge_keys: set[tuple] = set()
    for pos, edge in enumerate(graph.edges):
        subject = f"{edge.src}->{edge.dst}"
        src = node_by_id.get(edge.src)
        dst = node_by_id.get(edge.dst)
        if src is None or dst is None:
            out.append(Violation("dangling_endpoint", f"edge {subject} references a missing node", subject))
            continue
        if edge.kind not in (DATA, EXECUTION):
            out.append(Violation("unknown_edge_kind", f"edge {subject} has kind {edge.kind!r}", subject))
        if dst.kind != CALL:
            out.append(Violation("edge_into_query", f"edge {subject} targets a non-call node", subject))
        if edge.key in seen_edge_keys:
            out.append(Violation("duplicate_edge", f"edge {subject} ({edge.kind}) is duplicated", subject))
        seen_edge_keys.add(edge.key)
        if edge.kind == EXECUTION and edge.entity is not None:
            out.append(Violation("execution_with_entity", f"execution edge {subject} carries an entity", subject))
        if edge.kind == DATA:
            if edge.entity is None:
                out.append(Violation("data_without_entity", f"data edge {subject} carries no entity", subject))
            else:
                if edge.entity.key not in {p.key for p in src.produces}:
                    out.append(Violation(
                        "dangling_data_dependency",
                        f"data edge {subject} carries {edge.entity.key} absent from the source's products",
                        subject,
                    ))
                if dst.kind == CALL and edge.entity.key not in {c.key for c in dst.consumes}:
                    out.append(Violation(
                        "unconsumed_data_dependency",
                        f"data edge {subject} carries {edge.entity.key} the target does not consume",
                        subject,
                    ))

    turns = [n.turn for n in graph.nodes if n.turn is not None]
    if turns and len(turns) != len(graph.nodes):
        out.append(Violation("partial_turns", "some nodes carry turns and some do not"))
    elif turns:
        if sorted(turns) != list(range(len(graph.nodes))):
            out.append(Violation("bad_turn_sequence", "turns are not the positions 0..n-1"))
        else:
            turn_of = {n.id: n.turn for n in graph.nodes}
            for edge in graph.edges:
                if edge.src in turn_of and edge.dst in turn_of and turn_of[edge.src] >= turn_of[edge.dst]:
                    out.append(Violation(
                        "backward_edge",
                        f"edge {edge.src}->{edge.dst} does not point forward in conversation time",
                        f"{edge.src}->{edge.dst}",
                    ))

    if _has_cycle(graph):
        out.append(Violation("cycle", "cycle detected"))
    return out


def validate_task(task: TaskInstance) -> list[Violation]:
    """Graph report plus the task-level invariants tying graph to queries/tools."""
    out = validate_graph(task.graph)
    if not task.queries:
        out.append(Violation("no_queries", "task has no queries", task.id))
    for pos, query in enumerate(task.queries):
        if query.index != pos:
            out.append(Violation("query_index_mismatch", f"query at position {pos} has index {query.index}", task.id))
    if not task.tools:
        out.append(Violation("no_tools", "task has no tools", task.id))
    tool_names = [t.name for t in task.tools]
    if len(tool_names) != len(set(tool_names)):
        out.append(Violation("duplicate_tool", "tool names are not unique", task.id))
    for tool in task.tools:
        param_names = [p.name for p in tool.params]
        if len(param_names) != len(set(param_names)):
            out.append(Violation("duplicate_param", f"tool {tool.name!r} repeats a parameter name", tool.name))

    known_tools = set(tool_names)
    query_nodes = [n for n in task.graph.nodes if n.kind == QUERY]
    for node in task.graph.nodes:
        if node.is_call and node.tool_name and node.tool_name not in known_tools:
            out.append(Violation("unknown_tool", f"call node {node.id!r} uses unlisted tool {node.tool_name!r}", node.id))

    want = set(range(len(task.queries)))
    have = [n.query_index for n in query_nodes if n.query_index is not None]
    if sorted(have) != sorted(want) or len(query_nodes) != len(task.queries):
        out.append(Violation(
            "query_node_mismatch",
            f"graph has {len(query_nodes)} query nodes for {len(task.queries)} queries",
            task.id,
        ))
    else:
        for node in query_nodes:
            query = task.queries[node.query_index]
            if {e.key for e in node.produces} != {e.key for e in query.mentioned_entities}:
                out.append(Violation(
                    "query_entity_mismatch",
                    f"query node {node.id!r} does not mirror the mentioned entities of query {node.query_index}",
                    node.id,
                ))
    return out


def anchor_turns(graph: ToolGraph) -> dict[str, int]:
    """Latest upstream query index per node (0 when no query ancestor).

    This anchors every call to the conversation turn that triggered it, so
    the assigned order interleaves calls with their queries instead of
    front-loading all user turns.
    """
    indeg = {n.id: 0 for n in graph.nodes}
    succs: dict[str, list[str]] = {n.id: [] for n in graph.nodes}
    for e in graph.edges:
        indeg[e.dst] += 1
        succs[e.src].append(e.dst)

    anchors: dict[str, int] = {}
    for node in graph.nodes:
        if node.kind == QUERY and node.query_index is not None:
            anchors[node.id] = node.query_index
        else:
            anchors[node.id] = 0

    ready = [nid for nid, d in indeg.items() if d == 0]
    while ready:
        nid = ready.pop()
        for succ in succs[nid]:
            anchors[succ] = max(anchors[succ], anchors[nid])
            indeg[succ] -= 1
            if indeg[succ] == 0:
                ready.append(succ)
    return anchors


def linearize(graph: ToolGraph) -> list[str]:
    """Canonical conversational order of the node ids.

    Graphs whose nodes all carry turns are simply sorted by turn. Otherwise
    the order is a deterministic topological sort: among ready nodes, the
    one with the smallest (anchor query index, kind rank, node id) is
    emitted next, where query nodes rank before calls anchored to the same
    turn. Raises :class:`CycleError` when no topological order exists.
    """
    if graph.nodes and all(n.turn is not None for n in graph.nodes):
        return [n.id for n in sorted(graph.nodes, key=lambda n: n.turn)]

    anchors = anchor_turns(graph)
    node_by_id = graph.node_map()

    def priority(nid: str) -> tuple:
        node = node_by_id[nid]
        if node.kind == QUERY:
            return (anchors[nid], 0, node.id)
        return (anchors[nid], 1, node.id)

    indeg = {n.id: 0 for n in graph.nodes}
    succs: dict[str, list[str]] = {n.id: [] for n in graph.nodes}
    for e in graph.edges:
        indeg[e.dst] += 1
        succs[e.src].append(e.dst)

    heap = [priority(nid) + (nid,) for nid, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    order: list[str] = []
    while heap:
        nid = heapq.heappop(heap)[-1]
        order.append(nid)
        for succ in succs[nid]:
            indeg[succ] -= 1
            if indeg[succ] == 0:
                heapq.heappush(heap, priority(succ) + (succ,))
    if len(order) != len(graph.nodes):
        raise CycleError("graph contains a cycle; no conversational order exists")
    return order


def turn_positions(graph: ToolGraph) -> dict[str, int]:
    """Map node id to its canonical turn."""
    return {nid: pos for pos, nid in enumerate(linearize(graph))}


def assign_turns(graph: ToolGraph) -> ToolGraph:
    """Return an equal graph whose nodes carry their canonical turns."""
    positions = turn_positions(graph)
    nodes = tuple(
        GraphNode(
            id=n.id, kind=n.kind, turn=positions[n.id], tool_name=n.tool_name,
            query_index=n.query_index, produces=n.produces, consumes=n.consumes, extra=n.extra,
        )
        for n in graph.nodes
    )
    return ToolGraph(nodes=nodes, edges=graph.edges, extra=graph.extra)


def function_nodes(graph: ToolGraph) -> list[str]:
    """Call-node ids in canonical order."""
    node_by_id = graph.node_map()
    return [nid for nid in linearize(graph) if node_by_id[nid].is_call]


def make_task(
    task_id: str,
    domain: str,
    queries: Iterable[Query],
    tools: Iterable[ToolSpec],
    graph: ToolGraph,
    meta: Optional[Mapping[str, str]] = None,
) -> TaskInstance:
    """Construct a task with canonical turns assigned to its graph."""
    return TaskInstance(
        id=task_id, domain=domain, queries=tuple(queries), tools=tuple(tools),
        graph=assign_turns(graph), meta=dict(meta or {}),
    )
