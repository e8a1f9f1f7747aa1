"""Routing tasks to agents by predicted accuracy.

Given each agent's fitted profile and the task's total load *as that agent
sees it* (each agent scales extraneous load with its own calibration), the
router predicts per-agent accuracy and applies a policy: pick the most
accurate agent outright, or the cheapest one clearing an accuracy floor.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from tigload.errors import ConfigError, NoProfiles
from tigload.fitting import CognitiveProfile

MAX_ACCURACY = "max_accuracy"
CHEAPEST_ABOVE = "cheapest_above_threshold"


@dataclass(frozen=True)
class RoutingPolicy:
    kind: str = MAX_ACCURACY
    threshold: float = 0.5
    costs: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in (MAX_ACCURACY, CHEAPEST_ABOVE):
            raise ConfigError(f"unknown routing policy {self.kind!r}")
        if self.kind == CHEAPEST_ABOVE and not (0.0 < self.threshold < 1.0):
            raise ConfigError("threshold must lie strictly inside (0, 1)")

    def cost_of(self, agent_id: str) -> float:
        return float(self.costs.get(agent_id, 0.0))


@dataclass(frozen=True)
class RoutingDecision:
    task_id: str
    agent_id: str
    predicted_accuracy: float
    rationale: str

    def as_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "agent_id": self.agent_id,
            "predicted_accuracy": self.predicted_accuracy,
            "rationale": self.rationale,
        }


def route(task_id: str, task_loads: Mapping[str, float],
          profiles: Mapping[str, CognitiveProfile],
          policy: RoutingPolicy = RoutingPolicy()) -> RoutingDecision:
    """Pick one agent for one task.

    ``task_loads`` maps agent id to the task's total load under that
    agent's own extraneous scale. Ties on predicted accuracy break toward
    the cheaper agent, then the lexicographically smaller id.
    """
    if not profiles:
        raise NoProfiles("cannot route without at least one profile")
    scores: dict[str, float] = {}
    for agent_id, profile in profiles.items():
        if agent_id not in task_loads:
            raise ConfigError(f"no load supplied for agent {agent_id!r} on task {task_id!r}")
        scores[agent_id] = profile.predict(task_loads[agent_id])

    def best_by_accuracy() -> str:
        return min(scores, key=lambda a: (-scores[a], policy.cost_of(a), a))

    if policy.kind == MAX_ACCURACY:
        winner = best_by_accuracy()
        return RoutingDecision(
            task_id=task_id, agent_id=winner, predicted_accuracy=scores[winner],
            rationale=f"highest predicted accuracy {scores[winner]:.4f}",
        )

    qualified = [a for a, s in scores.items() if s >= policy.threshold]
    if qualified:
        winner = min(qualified, key=lambda a: (policy.cost_of(a), -scores[a], a))
        return RoutingDecision(
            task_id=task_id, agent_id=winner, predicted_accuracy=scores[winner],
            rationale=(f"cheapest agent with predicted accuracy "
                       f"{scores[winner]:.4f} >= {policy.threshold}"),
        )
    winner = best_by_accuracy()
    return RoutingDecision(
        task_id=task_id, agent_id=winner, predicted_accuracy=scores[winner],
        rationale=(f"no agent reached {policy.threshold}; "
                   f"fell back to highest predicted accuracy {scores[winner]:.4f}"),
    )
