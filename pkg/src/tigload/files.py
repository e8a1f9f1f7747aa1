"""Reading and writing the on-disk formats.

Task instances are single JSON documents with a required top-level
``"schema": "tigload/1"``; batches are JSONL with one task per line.
Unknown fields survive a parse/serialize round-trip at every level.

Derived artifacts (loads, trials, decisions, profiles, ...) embed
provenance: JSON documents carry ``schema``/``kind``/``run_config``/
``input_digests`` keys, JSONL files start with one header record of kind
``"header"``, and CSV files start with a ``# provenance:`` comment line.
All writes go to a temporary file first and are renamed into place, so a
failing command never leaves a partial artifact behind.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from typing import Any, Iterable, Optional

from tigload.errors import DataError
from tigload.model import (
    DepEdge,
    EntityRef,
    GraphNode,
    Query,
    TaskInstance,
    ToolGraph,
    ToolParam,
    ToolSpec,
)

SCHEMA = "tigload/1"


def _take(doc: dict, known: Iterable[str]) -> dict:
    """The unknown remainder of ``doc`` (preserved as ``extra``)."""
    known = set(known)
    return {k: v for k, v in doc.items() if k not in known}


def _require(doc: dict, key: str, context: str):
    if key not in doc:
        raise DataError(f"{context}: missing required field {key!r}")
    return doc[key]


# ---------------------------------------------------------------- parsing

def entity_from_dict(doc: dict, context: str = "entity") -> EntityRef:
    if not isinstance(doc, dict):
        raise DataError(f"{context}: expected an object")
    return EntityRef(
        semantic_type=str(_require(doc, "semantic_type", context)),
        value_id=str(_require(doc, "value_id", context)),
        extra=_take(doc, ("semantic_type", "value_id")),
    )


def entity_to_dict(ent: EntityRef) -> dict:
    out = {"semantic_type": ent.semantic_type, "value_id": ent.value_id}
    out.update(ent.extra)
    return out


def _query_from_dict(doc: dict) -> Query:
    ctx = "query"
    return Query(
        index=int(_require(doc, "index", ctx)),
        text=str(_require(doc, "text", ctx)),
        mentioned_entities=tuple(
            entity_from_dict(e, "mentioned entity") for e in doc.get("mentioned_entities", [])
        ),
        extra=_take(doc, ("index", "text", "mentioned_entities")),
    )


def _query_to_dict(q: Query) -> dict:
    out = {
        "index": q.index,
        "text": q.text,
        "mentioned_entities": [entity_to_dict(e) for e in q.mentioned_entities],
    }
    out.update(q.extra)
    return out


def _tool_from_dict(doc: dict) -> ToolSpec:
    params = []
    for p in doc.get("params", []):
        params.append(ToolParam(
            name=str(_require(p, "name", "tool param")),
            type_tag=str(p.get("type", "string")),
            required=bool(p.get("required", True)),
            description=str(p.get("description", "")),
            extra=_take(p, ("name", "type", "required", "description")),
        ))
    return ToolSpec(
        name=str(_require(doc, "name", "tool")),
        description=str(doc.get("description", "")),
        params=tuple(params),
        extra=_take(doc, ("name", "description", "params")),
    )


def _tool_to_dict(tool: ToolSpec) -> dict:
    out = {
        "name": tool.name,
        "description": tool.description,
        "params": [],
    }
    for p in tool.params:
        pd = {"name": p.name, "type": p.type_tag, "required": p.required, "description": p.description}
        pd.update(p.extra)
        out["params"].append(pd)
    out.update(tool.extra)
    return out


def _node_from_dict(doc: dict) -> GraphNode:
    ctx = "graph node"
    known = ("id", "kind", "turn", "tool_name", "query_index", "produces", "consumes")
    return GraphNode(
        id=str(_require(doc, "id", ctx)),
        kind=str(_require(doc, "kind", ctx)),
        turn=None if doc.get("turn") is None else int(doc["turn"]),
        tool_name=None if doc.get("tool_name") is None else str(doc["tool_name"]),
        query_index=None if doc.get("query_index") is None else int(doc["query_index"]),
        produces=tuple(entity_from_dict(e, "produced entity") for e in doc.get("produces", [])),
        consumes=tuple(entity_from_dict(e, "consumed entity") for e in doc.get("consumes", [])),
        extra=_take(doc, known),
    )


def _node_to_dict(node: GraphNode) -> dict:
    out: dict[str, Any] = {"id": node.id, "kind": node.kind}
    if node.turn is not None:
        out["turn"] = node.turn
    if node.tool_name is not None:
        out["tool_name"] = node.tool_name
    if node.query_index is not None:
        out["query_index"] = node.query_index
    out["produces"] = [entity_to_dict(e) for e in node.produces]
    out["consumes"] = [entity_to_dict(e) for e in node.consumes]
    out.update(node.extra)
    return out


def _edge_from_dict(doc: dict) -> DepEdge:
    ctx = "graph edge"
    return DepEdge(
        src=str(_require(doc, "src", ctx)),
        dst=str(_require(doc, "dst", ctx)),
        kind=str(doc.get("kind", "data")),
        entity=None if doc.get("entity") is None else entity_from_dict(doc["entity"], "edge entity"),
        extra=_take(doc, ("src", "dst", "kind", "entity")),
    )


def _edge_to_dict(edge: DepEdge) -> dict:
    out: dict[str, Any] = {"src": edge.src, "dst": edge.dst, "kind": edge.kind}
    if edge.entity is not None:
        out["entity"] = entity_to_dict(edge.entity)
    out.update(edge.extra)
    return out


def task_from_dict(doc: dict) -> TaskInstance:
    """Parse one task document; structural problems raise :class:`DataError`."""
    if not isinstance(doc, dict):
        raise DataError("task document must be a JSON object")
    schema = doc.get("schema")
    if schema != SCHEMA:
        raise DataError(f"unsupported schema {schema!r} (expected {SCHEMA!r})")
    graph_doc = _require(doc, "graph", "task")
    graph = ToolGraph(
        nodes=tuple(_node_from_dict(n) for n in graph_doc.get("nodes", [])),
        edges=tuple(_edge_from_dict(e) for e in graph_doc.get("edges", [])),
        extra=_take(graph_doc, ("nodes", "edges")),
    )
    return TaskInstance(
        id=str(_require(doc, "id", "task")),
        domain=str(doc.get("domain", "")),
        queries=tuple(_query_from_dict(q) for q in _require(doc, "queries", "task")),
        tools=tuple(_tool_from_dict(t) for t in _require(doc, "tools", "task")),
        graph=graph,
        meta={str(k): str(v) for k, v in doc.get("meta", {}).items()},
        extra=_take(doc, ("schema", "id", "domain", "queries", "tools", "graph", "meta")),
    )


def task_to_dict(task: TaskInstance) -> dict:
    graph = {
        "nodes": [_node_to_dict(n) for n in task.graph.nodes],
        "edges": [_edge_to_dict(e) for e in task.graph.edges],
    }
    graph.update(task.graph.extra)
    out: dict[str, Any] = {
        "schema": SCHEMA,
        "id": task.id,
        "domain": task.domain,
        "queries": [_query_to_dict(q) for q in task.queries],
        "tools": [_tool_to_dict(t) for t in task.tools],
        "graph": graph,
        "meta": dict(task.meta),
    }
    out.update(task.extra)
    return out


# ---------------------------------------------------------------- files

def dumps_canonical(doc: Any) -> str:
    """Deterministic single-line JSON: sorted keys, fixed separators."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def atomic_write_text(path: str, text: str) -> None:
    """Write via a sibling temp file and rename, so readers never see a partial file."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tigload-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 20), b""):
            digest.update(block)
    return "sha256:" + digest.hexdigest()


def provenance(kind: str, run_config: Optional[dict] = None,
               inputs: Optional[dict[str, str]] = None) -> dict:
    """Provenance block embedded in every derived artifact."""
    return {
        "schema": SCHEMA,
        "kind": kind,
        "run_config": dict(run_config or {}),
        "input_digests": {label: sha256_file(p) for label, p in sorted((inputs or {}).items())},
    }


def write_json_artifact(path: str, payload: dict) -> None:
    atomic_write_text(path, dumps_canonical(payload) + "\n")


def read_json_artifact(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as handle:
        try:
            return json.load(handle)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: not valid JSON ({exc})") from exc


def write_jsonl(path: str, records: Iterable[dict], header: Optional[dict] = None) -> None:
    lines = []
    if header is not None:
        head = dict(header)
        head["kind"] = "header"
        head.setdefault("schema", SCHEMA)
        lines.append(dumps_canonical(head))
    lines.extend(dumps_canonical(r) for r in records)
    atomic_write_text(path, "\n".join(lines) + ("\n" if lines else ""))


def read_jsonl(path: str) -> tuple[Optional[dict], list[tuple[int, dict]], list[tuple[int, str]]]:
    """Parse a JSONL artifact into (header, numbered records, diagnostics).

    Line numbers are 1-based. Records that fail to parse become diagnostics
    instead of aborting the read, so callers can report every bad line.
    """
    header: Optional[dict] = None
    records: list[tuple[int, dict]] = []
    diagnostics: list[tuple[int, str]] = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                diagnostics.append((lineno, f"invalid JSON: {exc.msg}"))
                continue
            if not isinstance(doc, dict):
                diagnostics.append((lineno, "line is not a JSON object"))
                continue
            if doc.get("kind") == "header" and header is None and not records:
                header = doc
            else:
                records.append((lineno, doc))
    return header, records, diagnostics


def read_tasks_jsonl(path: str) -> tuple[list[tuple[int, TaskInstance]], list[tuple[int, str]]]:
    """Read tasks; malformed entries become line-numbered diagnostics.

    Accepts either a JSONL batch (one task per line) or a file holding a
    single task document, which may be pretty-printed across lines.
    """
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    stripped = text.strip()
    if stripped and "\n" in stripped:
        try:
            doc = json.loads(stripped)
        except json.JSONDecodeError:
            doc = None
        if isinstance(doc, dict):
            try:
                return [(1, task_from_dict(doc))], []
            except DataError as exc:
                return [], [(1, str(exc))]

    _, records, diagnostics = read_jsonl(path)
    tasks: list[tuple[int, TaskInstance]] = []
    for lineno, doc in records:
        try:
            tasks.append((lineno, task_from_dict(doc)))
        except DataError as exc:
            diagnostics.append((lineno, str(exc)))
    diagnostics.sort(key=lambda d: d[0])
    return tasks, diagnostics


def write_tasks_jsonl(path: str, tasks: Iterable[TaskInstance]) -> None:
    write_jsonl(path, (task_to_dict(t) for t in tasks))


def write_csv(path: str, fieldnames: list[str], rows: Iterable[Iterable[Any]],
              prov: Optional[dict] = None) -> None:
    """CSV with an optional leading ``# provenance:`` comment line."""
    lines = []
    if prov is not None:
        lines.append("# provenance: " + dumps_canonical(prov))
    lines.append(",".join(fieldnames))
    for row in rows:
        lines.append(",".join(_csv_cell(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def _csv_cell(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    text = str(value)
    if any(c in text for c in ",\"\n"):
        text = '"' + text.replace('"', '""') + '"'
    return text
