"""Combining intrinsic and extraneous load on one scale.

The two load kinds are measured in different units; the bridge is
empirical: split tasks into equal-thirds buckets along each load axis,
measure how much accuracy falls from the low bucket to the high bucket,
and take the ratio of the two falls as the extraneous scale factor. Total
load is then ``intrinsic + scale * extraneous``. The scale is agent
specific unless trials are pooled explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from tigload.errors import DegenerateCalibration, EmptyBucket, TooFewTasks

LOW, MEDIUM, HIGH = "Low", "Medium", "High"


@dataclass(frozen=True)
class Bucketing:
    """Equal-thirds split of tasks along one load dimension."""

    dimension: str
    boundaries: tuple[float, float]
    assignment: Mapping[str, str]

    def bucket_of(self, task_id: str) -> str:
        return self.assignment[task_id]

    def ids_in(self, bucket: str) -> list[str]:
        return sorted(tid for tid, b in self.assignment.items() if b == bucket)


@dataclass(frozen=True)
class OmegaCalibration:
    """Extraneous-to-intrinsic scale with the drops that produced it."""

    agent_id: str
    omega_e: float
    drop_cli: float
    drop_cle: float

    def as_dict(self) -> dict:
        return {
            "agent_id": self.agent_id,
            "omega_e": self.omega_e,
            "drop_cli": self.drop_cli,
            "drop_cle": self.drop_cle,
        }


@dataclass(frozen=True)
class TotalLoadRecord:
    task_id: str
    cl_i: float
    cl_e: float
    cl_total: float

    def as_dict(self) -> dict:
        return {"task_id": self.task_id, "cl_i": self.cl_i, "cl_e": self.cl_e,
                "cl_total": self.cl_total}


def tercile_buckets(loads: Iterable[tuple[str, float]], dimension: str = "CLTotal") -> Bucketing:
    """Split tasks into Low/Medium/High thirds by load.

    Ties are broken by task id so the split is deterministic; when the
    count is not divisible by three the lower buckets take the remainder.
    """
    items = sorted(loads, key=lambda kv: (kv[1], kv[0]))
    n = len(items)
    if n < 3:
        raise TooFewTasks(f"tercile bucketing needs at least 3 tasks, got {n}")
    base, rem = divmod(n, 3)
    sizes = [base + (1 if rem >= 1 else 0), base + (1 if rem >= 2 else 0), base]
    assignment: dict[str, str] = {}
    cursor = 0
    for size, name in zip(sizes, (LOW, MEDIUM, HIGH)):
        for task_id, _ in items[cursor:cursor + size]:
            assignment[task_id] = name
        cursor += size
    boundaries = (items[sizes[0] - 1][1], items[sizes[0] + sizes[1] - 1][1])
    return Bucketing(dimension=dimension, boundaries=boundaries, assignment=assignment)


def bucket_accuracy(trials: Sequence, buckets: Bucketing) -> dict[str, float]:
    """Trial-weighted success rate per bucket; every bucket must have trials."""
    counts = {LOW: 0, MEDIUM: 0, HIGH: 0}
    wins = {LOW: 0, MEDIUM: 0, HIGH: 0}
    for trial in trials:
        name = buckets.assignment.get(trial.task_id)
        if name is None:
            continue
        counts[name] += 1
        wins[name] += 1 if trial.success else 0
    for name, count in counts.items():
        if count == 0:
            raise EmptyBucket(f"bucket {name} has no trials")
    return {name: wins[name] / counts[name] for name in counts}


def accuracy_drop(trials: Sequence, buckets: Bucketing) -> float:
    """Accuracy lost between the low-load and high-load buckets."""
    acc = bucket_accuracy(trials, buckets)
    return acc[LOW] - acc[HIGH]


def calibrate_omega(trials: Sequence, cli_loads: Iterable[tuple[str, float]],
                    cle_loads: Iterable[tuple[str, float]],
                    agent_id: str = "") -> OmegaCalibration:
    """Scale factor placing extraneous load on the intrinsic axis.

    The factor is the exact ratio of the two observed drops. With noisy
    trials and no real extraneous effect the extraneous drop (and hence the
    ratio) can dip slightly below zero; the raw value is reported so the
    noise is visible rather than clamped away. A non-positive intrinsic
    drop leaves the ratio undefined and raises
    :class:`DegenerateCalibration`.
    """
    drop_cli = accuracy_drop(trials, tercile_buckets(cli_loads, dimension="CLI"))
    drop_cle = accuracy_drop(trials, tercile_buckets(cle_loads, dimension="CLE"))
    if drop_cli <= 0:
        raise DegenerateCalibration(
            f"intrinsic-load accuracy drop is {drop_cli:.4f}; "
            "the extraneous scale is undefined (supply omega_e manually)"
        )
    return OmegaCalibration(agent_id=agent_id, omega_e=drop_cle / drop_cli,
                            drop_cli=drop_cli, drop_cle=drop_cle)


def total_load(cl_i: float, cl_e: float, omega_e: float) -> float:
    """Weighted sum of the two loads."""
    return cl_i + omega_e * cl_e


def total_records(loads: Iterable[tuple[str, float, float]], omega_e: float) -> list[TotalLoadRecord]:
    return [
        TotalLoadRecord(task_id=tid, cl_i=cl_i, cl_e=cl_e,
                        cl_total=total_load(cl_i, cl_e, omega_e))
        for tid, cl_i, cl_e in loads
    ]
