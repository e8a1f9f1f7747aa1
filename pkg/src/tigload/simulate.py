"""Monte Carlo oracle for the load-success model.

A simulated agent attempts each call node independently: node success is a
Bernoulli draw with probability ``exp(-(k * node_load + b_node))`` where
``node_load`` is the node's share of the task's intrinsic load, and the
task succeeds only if every node passes. Multiplying the per-node
probabilities makes the expected task success rate
``exp(-(k * total_load + n * b_node))``, which is what
:func:`verify_additivity` checks empirically: success depends on the sum of
per-node loads, not on the graph's shape.

Note the per-node baseline surfaces as ``n * b_node`` in the task-level
exponent, whereas the fitted profile uses a single task-level baseline.
Both forms are exposed — :func:`simulate_success_count` plays out the
per-node game, :func:`generate_decay_trials` samples the task-level form —
so the difference is measurable instead of hidden.

Randomness is the counter-based stream from :mod:`tigload.rng`; per-task
substream keys are derived from the agent seed and the task id, so results
are reproducible bit for bit from the seed alone and replications can be
partitioned across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from tigload import _kernels
from tigload.errors import DomainError
from tigload.fitting import TrialRecord
from tigload.intrinsic import IntrinsicParams, intrinsic_load
from tigload.model import TaskInstance, function_nodes
from tigload.rng import fnv1a64, mix64, uniform_at


@dataclass(frozen=True)
class SimAgent:
    """Synthetic agent: decay rate, per-node baseline, and stream seed."""

    k: float
    b_node: float
    seed: int

    def __post_init__(self):
        if not (self.k >= 0 and math.isfinite(self.k)):
            raise DomainError(f"k must be finite and non-negative, got {self.k!r}")
        if not (self.b_node >= 0 and math.isfinite(self.b_node)):
            raise DomainError(f"b_node must be finite and non-negative, got {self.b_node!r}")


@dataclass(frozen=True)
class SimOutcome:
    task_id: str
    success: bool
    per_node_rolls: tuple[tuple[str, float, bool], ...]


@dataclass(frozen=True)
class AdditivityRow:
    task_id: str
    replications: int
    empirical: float
    predicted: float
    deviation: float
    sigma: float

    @property
    def within_3_sigma(self) -> bool:
        return abs(self.deviation) <= 3.0 * self.sigma


@dataclass(frozen=True)
class AdditivityReport:
    rows: tuple[AdditivityRow, ...]

    @property
    def max_abs_deviation(self) -> float:
        return max((abs(r.deviation) for r in self.rows), default=0.0)

    @property
    def fraction_within_3_sigma(self) -> float:
        if not self.rows:
            return 1.0
        return sum(1 for r in self.rows if r.within_3_sigma) / len(self.rows)


def node_success_prob(agent: SimAgent, node_load: float) -> float:
    """Probability one call node succeeds at the given load."""
    if node_load < 0:
        raise DomainError(f"node load must be non-negative, got {node_load!r}")
    return math.exp(-(agent.k * node_load + agent.b_node))


def task_stream_key(agent: SimAgent, task_id: str) -> int:
    """Substream key for one (agent, task) pair; stable across runs."""
    return mix64(agent.seed ^ fnv1a64(task_id))


def per_node_loads(task: TaskInstance,
                   params: IntrinsicParams = IntrinsicParams()) -> tuple[list[str], np.ndarray]:
    """Call-node ids in canonical order with their intrinsic load shares."""
    report = intrinsic_load(task, params)
    order = function_nodes(task.graph)
    return order, np.array([report.per_node[nid] for nid in order], dtype=np.float64)


def closed_form_success(agent: SimAgent, task: TaskInstance,
                        params: IntrinsicParams = IntrinsicParams()) -> float:
    """Expected task success rate: exp(-(k * total_load + n * b_node))."""
    _, loads = per_node_loads(task, params)
    return math.exp(-(agent.k * float(loads.sum()) + len(loads) * agent.b_node))


def simulate_task(agent: SimAgent, task: TaskInstance,
                  params: IntrinsicParams = IntrinsicParams(),
                  replication: int = 0) -> SimOutcome:
    """Play out one replication, keeping every per-node roll for inspection."""
    order, loads = per_node_loads(task, params)
    key = task_stream_key(agent, task.id)
    base = replication * len(order)
    rolls: list[tuple[str, float, bool]] = []
    success = True
    for j, (node_id, load) in enumerate(zip(order, loads)):
        p = node_success_prob(agent, float(load))
        passed = uniform_at(key, base + j) < p
        success = success and passed
        rolls.append((node_id, p, passed))
    return SimOutcome(task_id=task.id, success=success, per_node_rolls=tuple(rolls))


def simulate_success_count(agent: SimAgent, task: TaskInstance,
                           params: IntrinsicParams = IntrinsicParams(),
                           replications: int = 10_000,
                           partitions: int = 1) -> int:
    """Count successful replications using the batch kernel.

    ``partitions`` splits the replication range into contiguous chunks that
    consume disjoint counter ranges of the same stream, so any partitioning
    yields the identical total.
    """
    order, loads = per_node_loads(task, params)
    probs = np.exp(-(agent.k * loads + agent.b_node))
    key = task_stream_key(agent, task.id)
    n = len(order)
    if n == 0:
        return replications
    total = 0
    base, rem = divmod(replications, max(1, partitions))
    done = 0
    for p in range(max(1, partitions)):
        reps = base + (1 if p < rem else 0)
        if reps == 0:
            continue
        total += int(_kernels.count_task_successes(key, done * n, probs, reps))
        done += reps
    return total


def simulate_trials(agent: SimAgent, tasks: Sequence[TaskInstance],
                    params: IntrinsicParams = IntrinsicParams(),
                    replications: int = 1,
                    agent_id: Optional[str] = None) -> list[TrialRecord]:
    """Per-node simulation emitting one trial record per replication."""
    label = agent_id if agent_id is not None else f"sim-k{agent.k}-b{agent.b_node}"
    out: list[TrialRecord] = []
    for task in tasks:
        order, loads = per_node_loads(task, params)
        probs = np.exp(-(agent.k * loads + agent.b_node))
        key = task_stream_key(agent, task.id)
        n = len(order)
        if n == 0:
            out.extend(TrialRecord(task.id, label, True) for _ in range(replications))
            continue
        rolls = _kernels.fill_uniform(key, 0, replications * n).reshape(replications, n)
        wins = (rolls < probs).all(axis=1)
        out.extend(TrialRecord(task.id, label, bool(w)) for w in wins)
    return out


def verify_additivity(agent: SimAgent, tasks: Iterable[TaskInstance],
                      params: IntrinsicParams = IntrinsicParams(),
                      replications: int = 100_000) -> AdditivityReport:
    """Empirical success rate vs. the additive closed form, task by task.

    The binomial standard error at the predicted rate gives each task a
    sigma; rows landing outside three sigma flag either a broken stream or
    a load computation that is not actually additive.
    """
    rows = []
    for task in tasks:
        predicted = closed_form_success(agent, task, params)
        wins = simulate_success_count(agent, task, params, replications)
        empirical = wins / replications
        sigma = math.sqrt(max(predicted * (1.0 - predicted), 1e-12) / replications)
        rows.append(AdditivityRow(
            task_id=task.id, replications=replications, empirical=empirical,
            predicted=predicted, deviation=empirical - predicted, sigma=sigma,
        ))
    return AdditivityReport(rows=tuple(rows))


def generate_decay_trials(k: float, b: float, loads: Sequence[tuple[str, float]],
                          seed: int, agent_id: str = "sim",
                          replications: int = 1) -> list[TrialRecord]:
    """Sample task-level outcomes from the fitted-model form exp(-(k*CL+b)).

    This is the single-baseline generator used for fit-recovery and
    calibration-null experiments; draw ``r`` for task ``i`` uses counter
    ``r * len(loads) + i`` of the stream keyed by ``seed``. Key the draws
    with a stream of their own (see ``rng.derive_key``): reusing the stream
    that produced the loads correlates outcomes with loads.
    """
    if k < 0 or b < 0:
        raise DomainError("k and b must be non-negative")
    probs = np.array([math.exp(-(k * cl + b)) for _, cl in loads], dtype=np.float64)
    out: list[TrialRecord] = []
    m = len(loads)
    for r in range(replications):
        draws = _kernels.sample_bernoulli(seed, r * m, probs)
        out.extend(
            TrialRecord(task_id=tid, agent_id=agent_id, success=bool(win))
            for (tid, _), win in zip(loads, draws)
        )
    return out
