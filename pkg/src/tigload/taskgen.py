"""Synthesizing task instances at a targeted intrinsic load.

Generation is two-phase. First a minimal skeleton is laid out: queries and
their calls in conversational order, each call produces one typed entity
and hangs off its immediate predecessor with a unit-weight ordering edge,
so the starting load is exactly the call count. Then forward dependency
edges are inserted greedily — at every step the candidate whose weight
lands the running load closest to the target without overshooting the
tolerance band — until the load sits inside the band or no candidate fits.

Interference is steered by planting decoy entities of the pooled types in
query texts; distractor tools are appended from the catalog without being
referenced by any call. Everything is a pure function of the generation
spec (including its seed): the same spec yields byte-identical instances.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

from tigload.errors import ConfigError, TargetUnreachable
from tigload.intrinsic import IntrinsicParams, intrinsic_load
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
    assign_turns,
)
from tigload.rng import CounterRNG, derive_key, uniform_at

DEFAULT_ENTITY_TYPES = ("user_id", "file_path", "order_id", "ticket_id")


def default_tool_catalog() -> tuple[ToolSpec, ...]:
    """Built-in catalog; neighboring entries share vocabulary so distractors
    can be made arbitrarily tempting by picking near neighbors."""
    specs = [
        ("create_order", "create a new purchase order for a user account"),
        ("cancel_order", "cancel an existing purchase order for a user account"),
        ("get_order_status", "look up the current status of a purchase order"),
        ("list_orders", "list recent purchase orders for a user account"),
        ("read_file", "read the contents of a file at a given path"),
        ("write_file", "write new contents to a file at a given path"),
        ("delete_file", "delete the file at a given path"),
        ("open_ticket", "open a new support ticket for a reported problem"),
        ("close_ticket", "close a support ticket once the problem is resolved"),
        ("escalate_ticket", "escalate a support ticket to the next support tier"),
        ("lookup_user", "look up profile details for a user account"),
        ("notify_user", "send a notification message to a user account"),
    ]
    return tuple(
        ToolSpec(name=n, description=d, params=(ToolParam("target", "string", True, "operand id"),))
        for n, d in specs
    )


@dataclass(frozen=True)
class GenSpec:
    """Parameters of one generated instance; the seed pins every choice."""

    n_queries: int = 1
    n_calls: int = 0
    target_cli: float = 0.0
    tolerance: float = 0.5
    entity_type_pool: tuple[str, ...] = DEFAULT_ENTITY_TYPES
    interference_density: float = 0.0
    tool_catalog: tuple[ToolSpec, ...] = ()
    distractor_count: int = 0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "entity_type_pool", tuple(self.entity_type_pool))
        object.__setattr__(self, "tool_catalog", tuple(self.tool_catalog))
        if self.n_queries < 1:
            raise ConfigError("n_queries must be at least 1")
        if self.n_calls < 0:
            raise ConfigError("n_calls must be non-negative")
        if self.tolerance <= 0:
            raise ConfigError("tolerance must be positive")
        if not (0.0 <= self.interference_density <= 1.0):
            raise ConfigError("interference_density must lie in [0, 1]")
        if self.distractor_count < 0:
            raise ConfigError("distractor_count must be non-negative")
        if self.target_cli < 0:
            raise ConfigError("target_cli must be non-negative")
        if not self.entity_type_pool:
            raise ConfigError("entity_type_pool must not be empty")


def _catalog(spec: GenSpec) -> tuple[tuple[ToolSpec, ...], tuple[ToolSpec, ...]]:
    """Seeded rotation before the used/distractor split, so which tools end
    up as distractors (and how tempting they are) varies across instances."""
    catalog = spec.tool_catalog or default_tool_catalog()
    if spec.distractor_count >= len(catalog) and spec.n_calls > 0:
        raise ConfigError(
            f"catalog of {len(catalog)} tools cannot set aside {spec.distractor_count} distractors"
        )
    offset = CounterRNG(derive_key(spec.seed, 7)).randrange(len(catalog))
    rotated = catalog[offset:] + catalog[:offset]
    cut = len(rotated) - spec.distractor_count
    return rotated[:cut], rotated[cut:]


def _skeleton(spec: GenSpec) -> TaskInstance:
    """Minimal-load instance: every call chained to its predecessor."""
    usable, distractors = _catalog(spec)
    rng = CounterRNG(derive_key(spec.seed, 0))

    per_query = [spec.n_calls // spec.n_queries] * spec.n_queries
    for i in range(spec.n_calls % spec.n_queries):
        per_query[i] += 1

    decoys_per_query = round(spec.interference_density * len(spec.entity_type_pool))

    queries: list[Query] = []
    nodes: list[GraphNode] = []
    edges: list[DepEdge] = []
    call_no = 0
    for qi in range(spec.n_queries):
        mentions = tuple(
            EntityRef(spec.entity_type_pool[d % len(spec.entity_type_pool)], f"decoy-{qi}-{d}")
            for d in range(decoys_per_query)
        )
        text = f"Turn {qi}: continue the workflow"
        if mentions:
            text += " with " + ", ".join(f"{e.semantic_type}={e.value_id}" for e in mentions)
        text += "."
        queries.append(Query(index=qi, text=text, mentioned_entities=mentions))
        nodes.append(GraphNode(id=f"q{qi}", kind=QUERY, query_index=qi, produces=mentions))
        for _ in range(per_query[qi]):
            produced = EntityRef(
                rng.choice(spec.entity_type_pool), f"out-{call_no:03d}"
            )
            tool = usable[call_no % len(usable)] if usable else None
            if tool is None:
                raise ConfigError("no usable tools for call nodes")
            node_id = f"f{call_no:03d}"
            prev = nodes[-1].id
            nodes.append(GraphNode(id=node_id, kind=CALL, tool_name=tool.name,
                                   produces=(produced,)))
            edges.append(DepEdge(src=prev, dst=node_id, kind=EXECUTION))
            call_no += 1

    used_names = {n.tool_name for n in nodes if n.kind == CALL}
    tools = tuple(t for t in usable if t.name in used_names) + distractors
    if not tools:
        tools = (usable[0],) if usable else tuple(default_tool_catalog()[:1])

    graph = assign_turns(ToolGraph(nodes=tuple(nodes), edges=tuple(edges)))
    return TaskInstance(
        id=f"gen-{spec.seed:016x}",
        domain="synthetic",
        queries=tuple(queries),
        tools=tools,
        graph=graph,
        meta={
            "generator": "tigload.taskgen",
            "seed": str(spec.seed),
            "target_cli": repr(spec.target_cli),
        },
    )


def _candidates(task: TaskInstance, params: IntrinsicParams):
    """Every edge not yet present that a call node could legally gain.

    Adding an edge never changes the weight of other candidates — context
    entities live on nodes, not edges — so weights can be computed once.
    """
    positions = {n.id: n.turn for n in task.graph.nodes}
    node_by_id = task.graph.node_map()
    existing = {e.key for e in task.graph.edges}

    produced_before: dict[int, set] = {}
    mentioned: set = set()
    for node in sorted(task.graph.nodes, key=lambda n: n.turn):
        produced_before[node.turn] = set(mentioned)
        mentioned.update(e.key for e in node.produces)
    horizon = max(positions.values()) + 1 if positions else 0
    produced_before[horizon] = set(mentioned)

    out = []
    calls = [n for n in task.graph.nodes if n.kind == CALL]
    for dst in sorted(calls, key=lambda n: n.turn):
        context = produced_before[dst.turn]
        for src in sorted(task.graph.nodes, key=lambda n: n.turn):
            if src.turn >= dst.turn:
                break
            distance = dst.turn - src.turn
            exec_key = (src.id, dst.id, EXECUTION, None)
            if exec_key not in existing:
                out.append((float(distance), DepEdge(src.id, dst.id, EXECUTION)))
            for ent in src.produces:
                data_key = (src.id, dst.id, DATA, ent.key)
                if data_key in existing:
                    continue
                clash = sum(
                    1 for (stype, value) in context
                    if stype == ent.semantic_type and value != ent.value_id
                )
                weight = distance * (1.0 + params.interference_weight * clash)
                out.append((weight, DepEdge(src.id, dst.id, DATA, ent)))
    return out, node_by_id


def _with_edge(task: TaskInstance, edge: DepEdge) -> TaskInstance:
    nodes = []
    for node in task.graph.nodes:
        if edge.kind == DATA and node.id == edge.dst and edge.entity is not None \
                and edge.entity.key not in {c.key for c in node.consumes}:
            nodes.append(GraphNode(
                id=node.id, kind=node.kind, turn=node.turn, tool_name=node.tool_name,
                query_index=node.query_index, produces=node.produces,
                consumes=node.consumes + (edge.entity,), extra=node.extra,
            ))
        else:
            nodes.append(node)
    graph = ToolGraph(nodes=tuple(nodes), edges=task.graph.edges + (edge,),
                      extra=task.graph.extra)
    return TaskInstance(id=task.id, domain=task.domain, queries=task.queries,
                        tools=task.tools, graph=graph, meta=task.meta, extra=task.extra)


def insert_edges(task: TaskInstance, target_cli: float, tolerance: float,
                 params: IntrinsicParams = IntrinsicParams()) -> TaskInstance:
    """Raise a task's intrinsic load into [target - tol, target + tol].

    Only adds edges (never removes or rewrites), always forward in
    conversation time, greedily choosing the weight that lands closest to
    the target without exceeding the band's ceiling.
    """
    task = TaskInstance(id=task.id, domain=task.domain, queries=task.queries,
                        tools=task.tools, graph=assign_turns(task.graph),
                        meta=task.meta, extra=task.extra)
    current = intrinsic_load(task, params).total
    if current > target_cli + tolerance:
        raise TargetUnreachable(
            f"load {current} already exceeds the band top {target_cli + tolerance}",
            achievable=current,
        )
    while current < target_cli - tolerance or current > target_cli + tolerance:
        candidates, _ = _candidates(task, params)
        fitting = [
            (abs(target_cli - (current + w)), pos_key(edge), w, edge)
            for w, edge in candidates
            if current + w <= target_cli + tolerance
        ]
        if not fitting:
            maximum = current + sum(w for w, _ in candidates)
            raise TargetUnreachable(
                f"no insertable edge reaches [{target_cli - tolerance}, "
                f"{target_cli + tolerance}] from load {current} "
                f"(maximum achievable {maximum})",
                achievable=maximum,
            )
        fitting.sort(key=lambda item: (item[0], item[1]))
        _, _, weight, edge = fitting[0]
        task = _with_edge(task, edge)
        current += weight
    return task


def pos_key(edge: DepEdge) -> tuple:
    return (edge.src, edge.dst, edge.kind, edge.entity.key if edge.entity else ("", ""))


def max_achievable_cli(spec: GenSpec, params: IntrinsicParams = IntrinsicParams()) -> float:
    """Load of the skeleton plus every edge that could ever be inserted."""
    skeleton = _skeleton(spec)
    current = intrinsic_load(skeleton, params).total
    candidates, _ = _candidates(skeleton, params)
    return current + sum(w for w, _ in candidates)


def generate_graph(spec: GenSpec,
                   params: IntrinsicParams = IntrinsicParams()) -> TaskInstance:
    """Produce a valid instance whose intrinsic load sits in the target band."""
    if spec.n_calls == 0:
        if abs(spec.target_cli) > spec.tolerance:
            raise TargetUnreachable(
                f"a task with no calls has load 0, outside "
                f"[{spec.target_cli - spec.tolerance}, {spec.target_cli + spec.tolerance}]",
                achievable=0.0,
            )
        return _skeleton(spec)
    skeleton = _skeleton(spec)
    floor = intrinsic_load(skeleton, params).total
    if spec.target_cli + spec.tolerance < floor:
        raise TargetUnreachable(
            f"minimum load for {spec.n_calls} calls is {floor}, above the band top "
            f"{spec.target_cli + spec.tolerance}",
            achievable=floor,
        )
    ceiling = max_achievable_cli(spec, params)
    if spec.target_cli - spec.tolerance > ceiling:
        raise TargetUnreachable(
            f"maximum achievable load is {ceiling}, below the band bottom "
            f"{spec.target_cli - spec.tolerance}",
            achievable=ceiling,
        )
    return insert_edges(skeleton, spec.target_cli, spec.tolerance, params)


@dataclass(frozen=True)
class StratumResult:
    stratum: int
    target: float
    achieved_mean: float
    n: int
    errors: tuple[str, ...]

    def as_dict(self) -> dict:
        return {"stratum": self.stratum, "target": self.target,
                "achieved_mean": self.achieved_mean, "n": self.n,
                "errors": list(self.errors)}


def sweep(base: GenSpec, targets: Sequence[float], per_target: int,
          params: IntrinsicParams = IntrinsicParams(),
          mean_calls: Optional[float] = None) -> tuple[list[TaskInstance], list[StratumResult]]:
    """Generate a load-stratified dataset over a target grid.

    Per-stratum generation failures are collected in the manifest rather
    than aborting the sweep. ``mean_calls`` randomizes the per-instance
    call count between the two neighboring integers so the dataset mean
    approaches the requested value.
    """
    tasks: list[TaskInstance] = []
    strata: list[StratumResult] = []
    for si, target in enumerate(targets):
        achieved: list[float] = []
        errors: list[str] = []
        stratum_key = derive_key(base.seed, si)
        for i in range(per_target):
            seed_i = derive_key(stratum_key, i)
            n_calls = base.n_calls
            if mean_calls is not None:
                whole = int(mean_calls)
                frac = mean_calls - whole
                n_calls = whole + (1 if uniform_at(seed_i, 0) < frac else 0)
            spec_i = replace(base, seed=seed_i, target_cli=target, n_calls=n_calls)
            try:
                task = generate_graph(spec_i, params)
            except (TargetUnreachable, ConfigError) as exc:
                errors.append(f"instance {i}: {exc}")
                continue
            task = TaskInstance(
                id=f"gen-{si:02d}-{i:04d}", domain=task.domain, queries=task.queries,
                tools=task.tools, graph=task.graph, meta=task.meta, extra=task.extra,
            )
            achieved.append(intrinsic_load(task, params).total)
            tasks.append(task)
        strata.append(StratumResult(
            stratum=si,
            target=float(target),
            achieved_mean=sum(achieved) / len(achieved) if achieved else float("nan"),
            n=len(achieved),
            errors=tuple(errors),
        ))
    return tasks, strata
