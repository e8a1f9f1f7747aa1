"""Fitting load-success decay profiles and validating their calibration.

An agent's success probability is modeled as ``exp(-(k * load + b))``:
``k`` (load sensitivity) is the decay rate per unit load and ``b``
(baseline load) fixes the zero-load accuracy at ``exp(-b)``. The fit is
closed form: bin trials by load, regress ``ln(accuracy)`` on load with
per-bin trial counts as weights, and project onto ``k > 0, b >= 0``. Being
log-linear, the result is deterministic and identical across platforms; an
optional Gauss-Newton refinement in probability space exists behind a flag.

Calibration is checked two ways: reliability-style bins of predicted
probability against observed accuracy, and the grouped chi-square test
(deciles of predicted probability, ``dof = groups - 2``). The chi-square
survival probability is computed here from the regularized upper incomplete
gamma function rather than taken from a stats library, so the test has no
heavyweight dependency; unit tests pin it against an independent oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from tigload.errors import (
    DegenerateGroup,
    DegenerateLoads,
    DomainError,
    InsufficientData,
    UnmatchedTrial,
)


@dataclass(frozen=True)
class TrialRecord:
    """One externally judged attempt at a task; the unit of evidence."""

    task_id: str
    agent_id: str
    success: bool

    def as_dict(self) -> dict:
        return {"task_id": self.task_id, "agent_id": self.agent_id, "success": self.success}

    @classmethod
    def from_dict(cls, doc: dict) -> "TrialRecord":
        return cls(task_id=str(doc["task_id"]), agent_id=str(doc["agent_id"]),
                   success=bool(doc["success"]))


@dataclass(frozen=True)
class FitBin:
    load_mid: float
    accuracy: float
    n: int


@dataclass(frozen=True)
class CognitiveProfile:
    """Fitted (sensitivity, baseline) pair with its supporting bins."""

    agent_id: str
    k: float
    b: float
    fit_bins: tuple[FitBin, ...]
    residual_sse: float

    def predict(self, cl_total: float) -> float:
        return predict_accuracy(self.k, self.b, cl_total)

    def as_dict(self) -> dict:
        return {
            "agent_id": self.agent_id,
            "k": self.k,
            "b": self.b,
            "bins": [{"load_mid": fb.load_mid, "accuracy": fb.accuracy, "n": fb.n}
                     for fb in self.fit_bins],
            "sse": self.residual_sse,
        }


@dataclass(frozen=True)
class HLResult:
    chi2: float
    dof: int
    p_value: float
    groups: tuple[tuple[int, int, float], ...]  # (n, observed successes, expected successes)

    def as_dict(self) -> dict:
        return {
            "chi2": self.chi2,
            "dof": self.dof,
            "p_value": self.p_value,
            "groups": [{"n": n, "observed": o, "expected": e} for n, o, e in self.groups],
        }


@dataclass(frozen=True)
class CalibrationBin:
    predicted_mean: float
    observed_acc: float
    n: int


@dataclass(frozen=True)
class FitOptions:
    n_bins: int = 10
    min_bin_count: int = 5
    min_bins: int = 3
    min_k: float = 1e-6
    nonlinear_refine: bool = False


def predict_accuracy(k: float, b: float, cl_total: float) -> float:
    """Success probability at a given total load."""
    if not (k > 0):
        raise DomainError(f"load sensitivity must be positive, got {k!r}")
    if b < 0:
        raise DomainError(f"baseline load must be non-negative, got {b!r}")
    if cl_total < 0:
        raise DomainError(f"load must be non-negative, got {cl_total!r}")
    return math.exp(-(k * cl_total + b))


# ------------------------------------------------------------- profile fit

def _binned(trials: Sequence[TrialRecord], loads: Mapping[str, float],
            opts: FitOptions) -> list[FitBin]:
    missing = sorted({t.task_id for t in trials if t.task_id not in loads})
    if missing:
        raise UnmatchedTrial(f"{len(missing)} trial task id(s) have no load", missing)
    # canonical order makes the float accumulation independent of trial order
    ordered = sorted(trials, key=lambda t: (loads[t.task_id], t.task_id, t.success))
    xs = np.array([loads[t.task_id] for t in ordered], dtype=np.float64)
    ys = np.array([1.0 if t.success else 0.0 for t in ordered], dtype=np.float64)
    lo, hi = float(xs.min()), float(xs.max())
    if hi == lo:
        raise DegenerateLoads(f"all {len(xs)} loads equal {lo}; no decay to fit")

    idx = np.minimum(opts.n_bins - 1,
                     ((xs - lo) / (hi - lo) * opts.n_bins).astype(np.int64))
    raw: list[tuple[int, float, float]] = []  # (count, wins, load sum)
    for i in range(opts.n_bins):
        mask = idx == i
        raw.append((int(mask.sum()), float(ys[mask].sum()), float(xs[mask].sum())))

    # sparse bins merge into their right neighbor; a sparse tail joins the
    # last full bin so every emitted bin meets the minimum count
    bins: list[FitBin] = []
    count = wins = total = 0.0
    for c, w, s in raw:
        count += c
        wins += w
        total += s
        if count >= opts.min_bin_count:
            bins.append(FitBin(load_mid=total / count, accuracy=wins / count, n=int(count)))
            count = wins = total = 0.0
    if count > 0:
        if bins:
            last = bins.pop()
            merged_n = last.n + int(count)
            bins.append(FitBin(
                load_mid=(last.load_mid * last.n + total) / merged_n,
                accuracy=(last.accuracy * last.n + wins) / merged_n,
                n=merged_n,
            ))
        else:
            bins.append(FitBin(load_mid=total / count, accuracy=wins / count, n=int(count)))
    return bins


def _weighted_line(x: np.ndarray, y: np.ndarray, w: np.ndarray,
                   min_k: float) -> tuple[float, float]:
    """Weighted fit of y ~ c0 + c1 x projected onto k=-c1 >= min_k, b=-c0 >= 0."""
    sw = w.sum()
    mx = (w * x).sum() / sw
    my = (w * y).sum() / sw
    sxx = (w * (x - mx) ** 2).sum()
    sxy = (w * (x - mx) * (y - my)).sum()
    if sxx == 0:
        raise DegenerateLoads("bin loads are all identical after merging")
    c1 = sxy / sxx
    c0 = my - c1 * mx
    k, b = -c1, -c0
    if k >= min_k and b >= 0:
        return k, b

    def sse(kk: float, bb: float) -> float:
        return float((w * (y - (-(kk) * x - bb)) ** 2).sum())

    candidates = []
    # b pinned at 0: slope-only fit through the origin
    k_b0 = max(min_k, -float((w * x * y).sum() / (w * x * x).sum()))
    candidates.append((k_b0, 0.0))
    # k pinned at the floor: intercept-only fit
    b_kmin = max(0.0, -float((w * (y + min_k * x)).sum() / sw))
    candidates.append((min_k, b_kmin))
    best = min(candidates, key=lambda kb: sse(*kb))
    return best


def _refine_irls(bins: Sequence[FitBin], k: float, b: float, min_k: float,
                 steps: int = 100) -> tuple[float, float]:
    """Iteratively reweighted nonlinear least squares in probability space.

    Weights are the binomial inverse variances ``n / (p * (1 - p))``, so the
    refinement is near-efficient and removes the small-sample bias the
    log-space fit picks up in sparse bins. Constraints are kept each step.
    """
    x = np.array([fb.load_mid for fb in bins])
    a = np.array([fb.accuracy for fb in bins])
    n = np.array([float(fb.n) for fb in bins])
    for _ in range(steps):
        pred = np.exp(-(k * x + b))
        w = n / np.maximum(pred * (1.0 - pred), 1e-9)
        resid = a - pred
        jk = pred * x   # -d pred/dk
        jb = pred       # -d pred/db
        jtj = np.array([[np.sum(w * jk * jk), np.sum(w * jk * jb)],
                        [np.sum(w * jk * jb), np.sum(w * jb * jb)]])
        jtr = np.array([np.sum(w * jk * resid), np.sum(w * jb * resid)])
        jtj += 1e-12 * np.eye(2)
        try:
            step = np.linalg.solve(jtj, jtr)
        except np.linalg.LinAlgError:
            break
        k_next = max(min_k, k - float(step[0]))
        b_next = max(0.0, b - float(step[1]))
        if abs(k_next - k) < 1e-13 and abs(b_next - b) < 1e-13:
            k, b = k_next, b_next
            break
        k, b = k_next, b_next
    return k, b


def fit_profile(trials: Sequence[TrialRecord], loads: Mapping[str, float],
                opts: FitOptions = FitOptions(), agent_id: str = "") -> CognitiveProfile:
    """Fit the decay profile of one agent from its trial outcomes.

    Trials are binned by total load (equal-width bins over the observed
    range, sparse bins merged rightward), then ``ln(accuracy)`` is
    regressed on load weighted by bin counts. Zero-accuracy bins get the
    standard half-count continuity correction so the log is defined.
    """
    bins = _binned(trials, loads, opts)
    if len(bins) < opts.min_bins:
        raise InsufficientData(
            f"only {len(bins)} populated bin(s); need at least {opts.min_bins}"
        )
    x = np.array([fb.load_mid for fb in bins])
    acc = np.array([fb.accuracy for fb in bins])
    w = np.array([float(fb.n) for fb in bins])
    corrected = np.maximum(acc, 0.5 / w)
    y = np.log(corrected)
    k, b = _weighted_line(x, y, w, opts.min_k)

    def prob_sse(kk: float, bb: float) -> float:
        return float(((acc - np.exp(-(kk * x + bb))) ** 2).sum())

    if opts.nonlinear_refine:
        # reweighting has no monotonicity guarantee, so the refinement is
        # kept only when it lowers the Pearson statistic of the binned fit
        def pearson(kk: float, bb: float) -> float:
            p = np.clip(np.exp(-(kk * x + bb)), 1e-12, 1.0 - 1e-12)
            return float((w * (acc - p) ** 2 / (p * (1.0 - p))).sum())

        k2, b2 = _refine_irls(bins, k, b, opts.min_k)
        if pearson(k2, b2) <= pearson(k, b):
            k, b = k2, b2
    return CognitiveProfile(agent_id=agent_id, k=float(k), b=float(b),
                            fit_bins=tuple(bins), residual_sse=prob_sse(k, b))


# ------------------------------------------------------- goodness of fit

def chi2_survival(x: float, dof: int) -> float:
    """Upper-tail probability of the chi-square distribution.

    Computed as the regularized upper incomplete gamma Q(dof/2, x/2) with
    a series expansion below x = dof + 1 and a continued fraction above;
    absolute error is below 1e-8 across the tested range.
    """
    if x < 0:
        raise DomainError(f"chi-square statistic must be non-negative, got {x!r}")
    if dof < 1:
        raise DomainError(f"degrees of freedom must be positive, got {dof!r}")
    if x == 0:
        return 1.0
    a = dof / 2.0
    z = x / 2.0
    if x < dof + 1:
        return min(1.0, max(0.0, 1.0 - _lower_gamma_series(a, z)))
    return min(1.0, max(0.0, _upper_gamma_cf(a, z)))


def _lower_gamma_series(a: float, z: float) -> float:
    """Regularized lower incomplete gamma P(a, z) by its power series."""
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(1000):
        ap += 1.0
        term *= z / ap
        total += term
        if abs(term) < abs(total) * 1e-16:
            break
    return total * math.exp(-z + a * math.log(z) - math.lgamma(a))


def _upper_gamma_cf(a: float, z: float) -> float:
    """Regularized upper incomplete gamma Q(a, z) by continued fraction."""
    tiny = 1e-300
    b = z + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b if b != 0 else 1.0 / tiny
    h = d
    for i in range(1, 1000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return math.exp(-z + a * math.log(z) - math.lgamma(a)) * h


def hosmer_lemeshow(trials: Sequence[TrialRecord], predictions: Mapping[str, float],
                    groups: int = 10) -> HLResult:
    """Grouped chi-square calibration test on predicted success probability.

    Trials are sorted by prediction and cut into near-equal groups
    (deciles by default); each group contributes
    ``(observed - n * mean_p)^2 / (n * mean_p * (1 - mean_p))``.
    """
    if groups < 3:
        raise DomainError("need at least 3 groups for a meaningful test")
    missing = sorted({t.task_id for t in trials if t.task_id not in predictions})
    if missing:
        raise UnmatchedTrial(f"{len(missing)} trial task id(s) have no prediction", missing)
    if len(trials) < groups:
        raise InsufficientData(f"{len(trials)} trials cannot fill {groups} groups")

    ordered = sorted(trials, key=lambda t: (predictions[t.task_id], t.task_id, t.success))
    n = len(ordered)
    base, rem = divmod(n, groups)
    sizes = [base + (1 if g < rem else 0) for g in range(groups)]

    chi2 = 0.0
    rows: list[tuple[int, int, float]] = []
    cursor = 0
    for size in sizes:
        chunk = ordered[cursor:cursor + size]
        cursor += size
        mean_p = sum(predictions[t.task_id] for t in chunk) / size
        observed = sum(1 for t in chunk if t.success)
        expected = size * mean_p
        if mean_p <= 0.0 or mean_p >= 1.0:
            raise DegenerateGroup(
                f"group mean prediction {mean_p} leaves zero variance; cannot test"
            )
        chi2 += (observed - expected) ** 2 / (size * mean_p * (1.0 - mean_p))
        rows.append((size, observed, expected))

    dof = groups - 2
    return HLResult(chi2=chi2, dof=dof, p_value=chi2_survival(chi2, dof),
                    groups=tuple(rows))


def calibration_bins(trials: Sequence[TrialRecord], predictions: Mapping[str, float],
                     n_bins: int = 10) -> list[CalibrationBin]:
    """Reliability-diagram points: equal-width bins of predicted probability."""
    if not trials:
        raise InsufficientData("no trials to bin")
    missing = sorted({t.task_id for t in trials if t.task_id not in predictions})
    if missing:
        raise UnmatchedTrial(f"{len(missing)} trial task id(s) have no prediction", missing)
    sums = [0.0] * n_bins
    wins = [0] * n_bins
    counts = [0] * n_bins
    for trial in trials:
        p = predictions[trial.task_id]
        idx = min(n_bins - 1, max(0, int(p * n_bins)))
        sums[idx] += p
        wins[idx] += 1 if trial.success else 0
        counts[idx] += 1
    out = []
    for i in range(n_bins):
        if counts[i]:
            out.append(CalibrationBin(predicted_mean=sums[i] / counts[i],
                                      observed_acc=wins[i] / counts[i], n=counts[i]))
    return out
