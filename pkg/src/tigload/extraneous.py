"""Presentation-induced (extraneous) load: per-query ambiguity and distraction.

Each query is scored on two axes, both normalized to [0, 1]: how much of
what its calls need is left unsaid (ambiguity), and how tempting the
closest irrelevant tool is (distraction). A task's extraneous load is the
sum of the two scores over all queries.

Two scorers implement the same interface. The heuristic scorer is fully
deterministic and is the default everywhere reproducibility matters:

* ambiguity: of the entities the query's calls consume that no data edge
  supplies (i.e. the user has to state them), the fraction missing from the
  query's mentioned entities;
* distraction: the maximum token-set Jaccard similarity between any unused
  tool and any used tool, over lowercased alphanumeric tokens of the tool
  name plus description.

The remote scorer posts each query to an LLM endpoint and requires the
reply to contain exactly one fenced block with the two scores; anything
else raises :class:`MalformedScore` rather than guessing. Scores are cached
on disk keyed by (scorer id, task id, query index) so reruns are free and
idempotent, and every raw reply is kept in the cache for audit.
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

from tigload.errors import ConfigError, MalformedScore, ScorerUnavailable
from tigload.model import CALL, Query, TaskInstance, anchor_turns

_TOKEN_RE = re.compile(r"[a-z0-9]+")

_SCORE_BLOCK_RE = re.compile(
    r"```[a-zA-Z]*\s*\n"
    r"\s*ambiguity\s*[:=]\s*([0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?)\s*\n"
    r"\s*distraction\s*[:=]\s*([0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?)\s*\n"
    r"\s*```"
)


@dataclass(frozen=True)
class QueryLoad:
    query_index: int
    ambiguity: float
    distraction: float

    @property
    def total(self) -> float:
        return self.ambiguity + self.distraction

    def as_dict(self) -> dict:
        return {
            "query_index": self.query_index,
            "ambiguity": self.ambiguity,
            "distraction": self.distraction,
            "total": self.total,
        }


@dataclass(frozen=True)
class ExtraneousReport:
    per_query: tuple[QueryLoad, ...]
    scorer_id: str

    @property
    def total(self) -> float:
        return sum(q.total for q in self.per_query)

    def as_dict(self) -> dict:
        return {
            "per_query": [q.as_dict() for q in self.per_query],
            "scorer_id": self.scorer_id,
            "total": self.total,
        }


@dataclass(frozen=True)
class ScorerConfig:
    """Configuration for either scorer kind; exactly one kind is active."""

    kind: str = "heuristic"
    # heuristic feature weights, applied before clamping to [0, 1]
    ambiguity_weight: float = 1.0
    distraction_weight: float = 1.0
    # remote scorer
    endpoint: str = ""
    model: str = ""
    timeout: float = 30.0
    max_concurrency: int = 4
    max_retries: int = 3
    backoff_base: float = 0.5
    api_key_env: str = "TIGLOAD_SCORER_API_KEY"
    cache_path: Optional[str] = None

    def __post_init__(self):
        if self.kind not in ("heuristic", "remote"):
            raise ConfigError(f"unknown scorer kind {self.kind!r}")
        if self.kind == "remote" and not self.endpoint:
            raise ConfigError("remote scorer requires an endpoint")

    @classmethod
    def from_dict(cls, doc: dict) -> "ScorerConfig":
        known = {f.name for f in cls.__dataclass_fields__.values()}  # type: ignore[attr-defined]
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown scorer config keys: {sorted(unknown)}")
        return cls(**doc)


def _clamp01(x: float) -> float:
    return 0.0 if x < 0.0 else (1.0 if x > 1.0 else x)


def tool_tokens(name: str, description: str) -> frozenset[str]:
    return frozenset(_TOKEN_RE.findall((name + " " + description).lower()))


def token_jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    if not a or not b:
        return 0.0
    return len(a & b) / len(a | b)


class HeuristicScorer:
    """Deterministic feature-based scorer; same bytes in, same scores out."""

    def __init__(self, config: ScorerConfig = ScorerConfig()):
        self.config = config

    @property
    def scorer_id(self) -> str:
        cfg = self.config
        if cfg.ambiguity_weight == 1.0 and cfg.distraction_weight == 1.0:
            return "heuristic/1"
        return f"heuristic/1;aw={cfg.ambiguity_weight!r};dw={cfg.distraction_weight!r}"

    def _ambiguity(self, query: Query, task: TaskInstance) -> float:
        anchors = anchor_turns(task.graph)
        supplied: dict[str, set] = {}
        for edge in task.graph.edges:
            if edge.kind == "data" and edge.entity is not None:
                supplied.setdefault(edge.dst, set()).add(edge.entity.key)
        slots = 0
        unresolved = 0
        mentioned = {e.key for e in query.mentioned_entities}
        for node in task.graph.nodes:
            if node.kind != CALL or anchors.get(node.id) != query.index:
                continue
            fed = supplied.get(node.id, set())
            for ent in node.consumes:
                if ent.key in fed:
                    continue
                slots += 1
                if ent.key not in mentioned:
                    unresolved += 1
        if slots == 0:
            return 0.0
        return unresolved / slots

    def _distraction(self, task: TaskInstance) -> float:
        used_names = task.used_tool_names()
        used = [tool_tokens(t.name, t.description) for t in task.tools if t.name in used_names]
        distractors = [tool_tokens(t.name, t.description) for t in task.tools if t.name not in used_names]
        if not distractors or not used:
            return 0.0
        return max(token_jaccard(d, u) for d in distractors for u in used)

    def score_query(self, query: Query, task: TaskInstance) -> QueryLoad:
        cfg = self.config
        return QueryLoad(
            query_index=query.index,
            ambiguity=_clamp01(cfg.ambiguity_weight * self._ambiguity(query, task)),
            distraction=_clamp01(cfg.distraction_weight * self._distraction(task)),
        )


class ScoreCache:
    """Append-only JSONL store of scores keyed by (scorer, task, query).

    Doubles as the provenance log: the raw scorer reply is kept verbatim
    alongside the parsed numbers. Appends are serialized by a lock.
    """

    def __init__(self, path: str):
        self.path = path
        self._lock = threading.Lock()
        self._entries: dict[str, dict] = {}
        if os.path.exists(path):
            with open(path, "r", encoding="utf-8") as handle:
                for line in handle:
                    line = line.strip()
                    if not line:
                        continue
                    doc = json.loads(line)
                    self._entries[doc["key"]] = doc

    @staticmethod
    def key_for(scorer_id: str, task_id: str, query_index: int) -> str:
        return f"{scorer_id}|{task_id}|{query_index}"

    def get(self, key: str) -> Optional[dict]:
        with self._lock:
            return self._entries.get(key)

    def put(self, key: str, ambiguity: float, distraction: float, raw: str) -> None:
        doc = {"key": key, "ambiguity": ambiguity, "distraction": distraction, "raw": raw}
        with self._lock:
            self._entries[key] = doc
            os.makedirs(os.path.dirname(os.path.abspath(self.path)) or ".", exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as handle:
                handle.write(json.dumps(doc, sort_keys=True) + "\n")


def parse_score_block(content: str) -> tuple[float, float]:
    """Extract the two scores from a reply; exactly one fenced block allowed."""
    matches = _SCORE_BLOCK_RE.findall(content)
    if len(matches) != 1:
        raise MalformedScore(
            f"expected exactly one fenced ambiguity/distraction block, found {len(matches)}"
        )
    ambiguity, distraction = (float(v) for v in matches[0])
    return _clamp01(ambiguity), _clamp01(distraction)


class RemoteScorer:
    """Scores queries by calling an LLM endpoint; failures are loud.

    Network trouble is retried with exponential backoff up to the
    configured limit and then surfaces as :class:`ScorerUnavailable`.
    A well-formed HTTP reply whose content lacks the score block raises
    :class:`MalformedScore`; scores are never silently defaulted.
    """

    def __init__(self, config: ScorerConfig, cache: Optional[ScoreCache] = None):
        self.config = config
        self.cache = cache
        if cache is None and config.cache_path:
            self.cache = ScoreCache(config.cache_path)
        self._gate = threading.Semaphore(max(1, config.max_concurrency))

    @property
    def scorer_id(self) -> str:
        return f"remote:{self.config.model or 'default'}"

    def _prompt(self, query: Query, task: TaskInstance) -> str:
        tool_lines = "\n".join(f"- {t.name}: {t.description}" for t in task.tools)
        return (
            "Rate this user query on two axes, each in [0, 1].\n"
            "ambiguity: how underspecified the query is for the tools it needs.\n"
            "distraction: how tempting the closest irrelevant tool is.\n"
            "Reply with exactly one fenced block of the form:\n"
            "```\nambiguity: <number>\ndistraction: <number>\n```\n\n"
            f"Available tools:\n{tool_lines}\n\nQuery (turn {query.index}): {query.text}\n"
        )

    def _call_once(self, payload: bytes) -> str:
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(self.config.api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        request = urllib.request.Request(self.config.endpoint, data=payload, headers=headers)
        with urllib.request.urlopen(request, timeout=self.config.timeout) as response:
            body = response.read().decode("utf-8")
        doc = json.loads(body)
        if not isinstance(doc, dict) or not isinstance(doc.get("content"), str):
            raise MalformedScore("scorer response lacks a string 'content' field")
        return doc["content"]

    def _call(self, query: Query, task: TaskInstance) -> str:
        payload = json.dumps({
            "model": self.config.model,
            "task_id": task.id,
            "query_index": query.index,
            "prompt": self._prompt(query, task),
        }, sort_keys=True).encode("utf-8")
        last_error: Optional[Exception] = None
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                time.sleep(self.config.backoff_base * (2 ** (attempt - 1)))
            try:
                with self._gate:
                    return self._call_once(payload)
            except urllib.error.HTTPError as exc:
                last_error = exc
                if exc.code not in (429, 500, 502, 503, 504):
                    break
            except (urllib.error.URLError, TimeoutError, ConnectionError, json.JSONDecodeError) as exc:
                last_error = exc
        raise ScorerUnavailable(f"remote scorer failed after {self.config.max_retries + 1} attempts: {last_error}")

    def score_query(self, query: Query, task: TaskInstance) -> QueryLoad:
        key = ScoreCache.key_for(self.scorer_id, task.id, query.index)
        if self.cache is not None:
            hit = self.cache.get(key)
            if hit is not None:
                return QueryLoad(query.index, hit["ambiguity"], hit["distraction"])
        content = self._call(query, task)
        ambiguity, distraction = parse_score_block(content)
        if self.cache is not None:
            self.cache.put(key, ambiguity, distraction, content)
        return QueryLoad(query.index, ambiguity, distraction)


def make_scorer(config: ScorerConfig, cache: Optional[ScoreCache] = None):
    if config.kind == "heuristic":
        return HeuristicScorer(config)
    return RemoteScorer(config, cache=cache)


def score_query(query: Query, task: TaskInstance, config: ScorerConfig) -> QueryLoad:
    return make_scorer(config).score_query(query, task)


def extraneous_load(task: TaskInstance, config: ScorerConfig = ScorerConfig(),
                    scorer=None) -> ExtraneousReport:
    """Score every query and sum; all-or-nothing (no partial reports)."""
    scorer = scorer if scorer is not None else make_scorer(config)
    if isinstance(scorer, RemoteScorer) and len(task.queries) > 1:
        workers = max(1, scorer.config.max_concurrency)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            loads = list(pool.map(lambda q: scorer.score_query(q, task), task.queries))
    else:
        loads = [scorer.score_query(q, task) for q in task.queries]
    loads.sort(key=lambda q: q.query_index)
    return ExtraneousReport(per_query=tuple(loads), scorer_id=scorer.scorer_id)
