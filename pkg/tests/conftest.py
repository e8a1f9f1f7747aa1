"""Shared builders for task fixtures.

Tests construct graphs by hand through these helpers rather than through
the generator, so model-level checks do not depend on generator behavior.
"""

from __future__ import annotations

import random

from tigload.model import (
    CALL,
    DATA,
    EXECUTION,
    QUERY,
    DepEdge,
    EntityRef,
    GraphNode,
    Query,
    TaskInstance,
    ToolGraph,
    ToolParam,
    ToolSpec,
    make_task,
)


def ent(semantic_type: str, value_id: str) -> EntityRef:
    return EntityRef(semantic_type, value_id)


def tool(name: str, description: str = "", params: tuple[str, ...] = ("target",)) -> ToolSpec:
    return ToolSpec(name=name, description=description or f"{name} operation",
                    params=tuple(ToolParam(p) for p in params))


def query_node(idx: int, mentions=()) -> GraphNode:
    return GraphNode(id=f"q{idx}", kind=QUERY, query_index=idx, produces=tuple(mentions))


def call_node(node_id: str, tool_name: str, produces=(), consumes=()) -> GraphNode:
    return GraphNode(id=node_id, kind=CALL, tool_name=tool_name,
                     produces=tuple(produces), consumes=tuple(consumes))


def build_task(task_id, queries, nodes, edges, tools, domain="test") -> TaskInstance:
    return make_task(task_id, domain, queries, tools, ToolGraph(tuple(nodes), tuple(edges)))


def chain_task(n_calls: int, task_id: str = "chain") -> TaskInstance:
    """q0 followed by n calls, each execution-chained to its predecessor."""
    queries = [Query(0, "run the chain", ())]
    nodes = [query_node(0)]
    edges = []
    tools = [tool("step")]
    prev = "q0"
    for i in range(n_calls):
        nid = f"f{i}"
        nodes.append(call_node(nid, "step", produces=[ent("item", f"v{i}")]))
        edges.append(DepEdge(prev, nid, EXECUTION))
        prev = nid
    return build_task(task_id, queries, nodes, edges, tools)


def interference_task() -> TaskInstance:
    """Three same-typed ids in the opening query; the first call needs one.

    Worked load under interference weight 0.5: the q0->f1 data edge has
    distance 1 and two competitors (weight 2.0), the f1->f2 data edge has
    distance 1 and none (weight 1.0); total 3.0.
    """
    u1, u2, u3 = ent("user_id", "u1"), ent("user_id", "u2"), ent("user_id", "u3")
    record = ent("record", "r1")
    queries = [Query(0, "check accounts u1 u2 u3", (u1, u2, u3))]
    nodes = [
        query_node(0, (u1, u2, u3)),
        call_node("f1", "lookup", produces=[record], consumes=[u2]),
        call_node("f2", "fetch", consumes=[record]),
    ]
    edges = [DepEdge("q0", "f1", DATA, u2), DepEdge("f1", "f2", DATA, record)]
    tools = [tool("lookup", "look up a user account record"),
             tool("fetch", "fetch a stored record")]
    return build_task("interference", queries, nodes, edges, tools)


def random_task(rng: random.Random, task_id: str = "rand",
                max_queries: int = 3, max_calls: int = 8) -> TaskInstance:
    """Independent random valid instance (not built via the generator)."""
    n_queries = rng.randint(1, max_queries)
    n_calls = rng.randint(1, max_calls)
    types = ["user_id", "path", "order"]

    queries = []
    nodes = []
    edges = []
    sequence = []  # (node_id, produces) in conversational order
    for qi in range(n_queries):
        mentions = tuple(
            ent(rng.choice(types), f"m{qi}-{j}") for j in range(rng.randint(0, 2))
        )
        queries.append(Query(qi, f"turn {qi}", mentions))
        nodes.append(query_node(qi, mentions))
        sequence.append((f"q{qi}", mentions))

    tool_names = [f"op{i}" for i in range(1 + n_calls // 2)]
    per_query = [n_calls // n_queries] * n_queries
    for i in range(n_calls % n_queries):
        per_query[i] += 1

    call_no = 0
    built = []
    for qi in range(n_queries):
        for _ in range(per_query[qi]):
            nid = f"f{call_no}"
            produced = (ent(rng.choice(types), f"out{call_no}"),)
            consumes = []
            src_id, src_produces = sequence[rng.randrange(len(sequence))]
            if src_produces and rng.random() < 0.7:
                entity = rng.choice(src_produces)
                consumes.append(entity)
                edges.append(DepEdge(src_id, nid, DATA, entity))
            else:
                edges.append(DepEdge(src_id, nid, EXECUTION))
            built.append(call_node(nid, rng.choice(tool_names),
                                   produces=produced, consumes=consumes))
            nodes.append(built[-1])
            sequence.append((nid, produced))
            call_no += 1

    tools = [tool(name) for name in tool_names]
    return build_task(task_id, queries, nodes, edges, tools)
