"""Command-line surface.

Subcommands mirror the pipeline stages: ``gen`` makes task files,
``analyze``/``score`` compute loads, ``simulate`` produces trial records,
``calibrate-omega`` scales extraneous load, ``fit`` fits profiles and
checks calibration, ``validate`` runs the calibration test alone,
``route`` assigns tasks to agents, and ``report`` renders the tables.

Every derived artifact embeds the run configuration and the digests of its
inputs; with the deterministic scorer, identical inputs and seeds produce
byte-identical outputs. Exit codes: 0 success, 2 data errors, 3
configuration errors, 4 remote-scorer failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

from tigload import files
from tigload.errors import (
    ConfigError,
    DataError,
    DegenerateCalibration,
    DegenerateGroup,
    InsufficientData,
    MalformedScore,
    ScorerUnavailable,
    TigloadError,
    UnmatchedTrial,
)
from tigload.extraneous import ScoreCache, ScorerConfig, extraneous_load, make_scorer
from tigload.fitting import (
    CognitiveProfile,
    FitBin,
    FitOptions,
    TrialRecord,
    calibration_bins,
    fit_profile,
    hosmer_lemeshow,
)
from tigload.intrinsic import IntrinsicParams, intrinsic_load
from tigload.model import validate_task
from tigload.router import RoutingPolicy, route
from tigload.simulate import SimAgent, generate_decay_trials, simulate_trials
from tigload.taskgen import GenSpec, sweep
from tigload.total import calibrate_omega, tercile_buckets, bucket_accuracy

EXIT_OK = 0
EXIT_DATA = 2
EXIT_CONFIG = 3
EXIT_SCORER = 4


class _Parser(argparse.ArgumentParser):
    """argparse flag problems are configuration errors (exit 3)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_CONFIG)


@dataclass
class RunConfig:
    """Everything that influences outputs; embedded in every artifact."""

    interference_weight: float = 0.5
    seed: int = 0
    jobs: int = 1
    scorer: dict = field(default_factory=lambda: {"kind": "heuristic"})
    omega_mode: str = "per-agent"  # or "pooled"
    fit: dict = field(default_factory=dict)
    hl_groups: int = 10
    calibration_bin_count: int = 10

    def as_dict(self) -> dict:
        return {
            "lambda": self.interference_weight,
            "seed": self.seed,
            "jobs": self.jobs,
            "scorer": dict(self.scorer),
            "omega_mode": self.omega_mode,
            "fit": dict(self.fit),
            "hl_groups": self.hl_groups,
            "calibration_bins": self.calibration_bin_count,
        }

    def intrinsic_params(self) -> IntrinsicParams:
        return IntrinsicParams(self.interference_weight)

    def scorer_config(self) -> ScorerConfig:
        return ScorerConfig.from_dict(self.scorer)

    def fit_options(self) -> FitOptions:
        known = {f for f in FitOptions.__dataclass_fields__}  # type: ignore[attr-defined]
        bad = set(self.fit) - known
        if bad:
            raise ConfigError(f"unknown fit option(s): {sorted(bad)}")
        return FitOptions(**self.fit)


def load_run_config(args) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        try:
            doc = files.read_json_artifact(args.config)
        except DataError as exc:
            raise ConfigError(str(exc)) from exc
        known = {"lambda", "seed", "jobs", "scorer", "omega_mode", "fit",
                 "hl_groups", "calibration_bins"}
        bad = set(doc) - known
        if bad:
            raise ConfigError(f"unknown config key(s): {sorted(bad)}")
        cfg.interference_weight = float(doc.get("lambda", cfg.interference_weight))
        cfg.seed = int(doc.get("seed", cfg.seed))
        cfg.jobs = int(doc.get("jobs", cfg.jobs))
        cfg.scorer = dict(doc.get("scorer", cfg.scorer))
        cfg.omega_mode = str(doc.get("omega_mode", cfg.omega_mode))
        cfg.fit = dict(doc.get("fit", cfg.fit))
        cfg.hl_groups = int(doc.get("hl_groups", cfg.hl_groups))
        cfg.calibration_bin_count = int(doc.get("calibration_bins", cfg.calibration_bin_count))
    if getattr(args, "interference_weight", None) is not None:
        cfg.interference_weight = args.interference_weight
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "jobs", None) is not None:
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        cfg.jobs = args.jobs
    if cfg.omega_mode not in ("per-agent", "pooled"):
        raise ConfigError(f"omega_mode must be 'per-agent' or 'pooled', got {cfg.omega_mode!r}")
    if cfg.interference_weight < 0:
        raise ConfigError("--lambda must be non-negative")
    return cfg


# ----------------------------------------------------------------- helpers

def _print_diagnostics(path: str, diagnostics) -> None:
    for lineno, message in diagnostics:
        sys.stderr.write(f"{path}:{lineno}: {message}\n")


def _read_loads(path: str) -> tuple[dict[str, dict], list[tuple[int, str]]]:
    _, records, diagnostics = files.read_jsonl(path)
    loads: dict[str, dict] = {}
    for lineno, doc in records:
        if "task_id" not in doc or "cl_i" not in doc:
            diagnostics.append((lineno, "load record lacks task_id/cl_i"))
            continue
        loads[str(doc["task_id"])] = doc
    return loads, diagnostics


def _load_record(task, params, scorer, intrinsic_only: bool) -> dict:
    """The per-task load record shared by analyze and on-the-fly routing."""
    intrinsic = intrinsic_load(task, params)
    record = {
        "task_id": task.id,
        "cl_i": intrinsic.total,
        "per_edge": [e.as_dict() for e in intrinsic.per_edge],
        "per_node": dict(sorted(intrinsic.per_node.items())),
    }
    if intrinsic_only:
        record.update({"cl_e": 0.0, "per_query": [], "scorer_id": "none"})
    else:
        extraneous = extraneous_load(task, scorer=scorer)
        record.update({
            "cl_e": extraneous.total,
            "per_query": [q.as_dict() for q in extraneous.per_query],
            "scorer_id": extraneous.scorer_id,
        })
    return record


def _loads_from_any(path: str, cfg: "RunConfig") -> tuple[dict[str, dict], list[tuple[int, str]]]:
    """Accept a precomputed loads file or a raw task file (loads computed here)."""
    _, records, diagnostics = files.read_jsonl(path)
    if not records or "cl_i" in records[0][1]:
        return _read_loads(path)
    tasks, diagnostics = files.read_tasks_jsonl(path)
    scorer_cfg = cfg.scorer_config()
    cache = ScoreCache(scorer_cfg.cache_path) if scorer_cfg.cache_path else None
    scorer = make_scorer(scorer_cfg, cache=cache)
    params = cfg.intrinsic_params()
    loads: dict[str, dict] = {}
    for lineno, task in tasks:
        problems = validate_task(task)
        if problems:
            diagnostics.append((lineno, f"task {task.id!r} invalid: {problems[0].message}"))
            continue
        loads[task.id] = _load_record(task, params, scorer, intrinsic_only=False)
    return loads, diagnostics


def _read_trials(path: str) -> tuple[list[TrialRecord], list[tuple[int, str]]]:
    _, records, diagnostics = files.read_jsonl(path)
    trials: list[TrialRecord] = []
    for lineno, doc in records:
        try:
            trials.append(TrialRecord.from_dict(doc))
        except (KeyError, TypeError, ValueError):
            diagnostics.append((lineno, "trial record lacks task_id/agent_id/success"))
    return trials, diagnostics


def _by_agent(trials: Sequence[TrialRecord]) -> dict[str, list[TrialRecord]]:
    grouped: dict[str, list[TrialRecord]] = {}
    for trial in trials:
        grouped.setdefault(trial.agent_id, []).append(trial)
    return grouped


def _read_profiles(path: str) -> dict[str, CognitiveProfile]:
    doc = files.read_json_artifact(path)
    out: dict[str, CognitiveProfile] = {}
    for row in doc.get("profiles", []):
        bins = tuple(FitBin(b["load_mid"], b["accuracy"], int(b["n"]))
                     for b in row.get("bins", []))
        out[row["agent_id"]] = CognitiveProfile(
            agent_id=row["agent_id"], k=float(row["k"]), b=float(row["b"]),
            fit_bins=bins, residual_sse=float(row.get("sse", 0.0)),
        )
    if not out:
        raise DataError(f"{path}: no profiles found")
    return out


def _read_omegas(path: str) -> dict[str, float]:
    doc = files.read_json_artifact(path)
    rows = doc.get("calibrations", [])
    return {row["agent_id"]: float(row["omega_e"]) for row in rows}


def _agent_omega(agent_id: str, args, omegas: dict[str, float]) -> float:
    if getattr(args, "omega", None) is not None:
        return args.omega
    if agent_id in omegas:
        return omegas[agent_id]
    if "" in omegas:  # pooled calibration
        return omegas[""]
    raise ConfigError(
        f"no extraneous scale for agent {agent_id!r}: pass --omega or --omega-file"
    )


# ------------------------------------------------------------- subcommands

def cmd_analyze(args) -> int:
    cfg = load_run_config(args)
    tasks, diagnostics = files.read_tasks_jsonl(args.tasks)
    params = cfg.intrinsic_params()
    scorer_cfg = cfg.scorer_config()
    cache = ScoreCache(scorer_cfg.cache_path) if scorer_cfg.cache_path else None
    scorer = make_scorer(scorer_cfg, cache=cache)

    def one(entry):
        lineno, task = entry
        problems = validate_task(task)
        if problems:
            first = problems[0]
            return ("diag", lineno, f"task {task.id!r} invalid: {first.message}")
        return ("record", lineno,
                _load_record(task, params, scorer, args.intrinsic_only))

    results = []
    if cfg.jobs > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(one, tasks))
    else:
        results = [one(entry) for entry in tasks]

    records = []
    for kind, lineno, payload in results:
        if kind == "diag":
            diagnostics.append((lineno, payload))
        else:
            records.append(payload)
    records.sort(key=lambda r: r["task_id"])
    diagnostics.sort(key=lambda d: d[0])

    header = files.provenance("loads", cfg.as_dict(), {"tasks": args.tasks})
    files.write_jsonl(args.out, records, header=header)
    _print_diagnostics(args.tasks, diagnostics)
    return EXIT_DATA if diagnostics else EXIT_OK


def cmd_score(args) -> int:
    cfg = load_run_config(args)
    tasks, diagnostics = files.read_tasks_jsonl(args.tasks)
    scorer_cfg = cfg.scorer_config()
    cache = ScoreCache(scorer_cfg.cache_path) if scorer_cfg.cache_path else None
    scorer = make_scorer(scorer_cfg, cache=cache)
    records = []
    for lineno, task in tasks:
        problems = validate_task(task)
        if problems:
            diagnostics.append((lineno, f"task {task.id!r} invalid: {problems[0].message}"))
            continue
        report = extraneous_load(task, scorer=scorer)
        records.append({
            "task_id": task.id,
            "cl_e": report.total,
            "per_query": [q.as_dict() for q in report.per_query],
            "scorer_id": report.scorer_id,
        })
    records.sort(key=lambda r: r["task_id"])
    header = files.provenance("extraneous-scores", cfg.as_dict(), {"tasks": args.tasks})
    files.write_jsonl(args.out, records, header=header)
    _print_diagnostics(args.tasks, diagnostics)
    return EXIT_DATA if diagnostics else EXIT_OK


def cmd_calibrate_omega(args) -> int:
    cfg = load_run_config(args)
    if args.pooled:
        cfg.omega_mode = "pooled"
    loads, load_diags = _read_loads(args.loads)
    trials, trial_diags = _read_trials(args.trials)
    diagnostics = load_diags + trial_diags
    if diagnostics:
        _print_diagnostics("input", diagnostics)
        return EXIT_DATA
    unknown = sorted({t.task_id for t in trials if t.task_id not in loads})
    if unknown:
        sys.stderr.write(f"trials reference {len(unknown)} task id(s) with no load: "
                         f"{', '.join(unknown[:5])}\n")
        return EXIT_DATA

    cli_loads = [(tid, float(doc["cl_i"])) for tid, doc in loads.items()]
    cle_loads = [(tid, float(doc.get("cl_e", 0.0))) for tid, doc in loads.items()]
    groups = {"": list(trials)} if cfg.omega_mode == "pooled" else _by_agent(trials)

    rows = []
    for agent_id in sorted(groups):
        try:
            calib = calibrate_omega(groups[agent_id], cli_loads, cle_loads, agent_id=agent_id)
        except (DegenerateCalibration, TigloadError) as exc:
            sys.stderr.write(f"agent {agent_id or '<pooled>'}: {exc}\n")
            return EXIT_DATA
        cli_buckets = tercile_buckets(cli_loads, dimension="CLI")
        cle_buckets = tercile_buckets(cle_loads, dimension="CLE")
        row = calib.as_dict()
        row["bucket_boundaries"] = {
            "cl_i": list(cli_buckets.boundaries),
            "cl_e": list(cle_buckets.boundaries),
        }
        rows.append(row)

    payload = files.provenance("omega-calibration", cfg.as_dict(),
                               {"loads": args.loads, "trials": args.trials})
    payload["calibrations"] = rows
    files.write_json_artifact(args.out, payload)
    return EXIT_OK


def _total_loads_for(loads: dict[str, dict], omega: float) -> dict[str, float]:
    """Per-task totals; a negative scale is floored so totals never dip below
    the intrinsic part."""
    scale = max(0.0, omega)
    return {
        tid: float(doc["cl_i"]) + scale * float(doc.get("cl_e", 0.0))
        for tid, doc in loads.items()
    }


def cmd_fit(args) -> int:
    cfg = load_run_config(args)
    loads, load_diags = _read_loads(args.loads)
    trials, trial_diags = _read_trials(args.trials)
    diagnostics = load_diags + trial_diags
    if diagnostics:
        _print_diagnostics("input", diagnostics)
        return EXIT_DATA

    omegas: dict[str, float] = {}
    if args.omega_file:
        omegas = _read_omegas(args.omega_file)

    grouped = _by_agent(trials)
    profiles_rows = []
    hl_rows = []
    calib_rows = []
    decay_rows = []
    for agent_id in sorted(grouped):
        agent_trials = grouped[agent_id]
        try:
            if args.omega is None and not args.omega_file:
                cli_loads = [(tid, float(doc["cl_i"])) for tid, doc in loads.items()]
                cle_loads = [(tid, float(doc.get("cl_e", 0.0))) for tid, doc in loads.items()]
                omega = calibrate_omega(agent_trials, cli_loads, cle_loads, agent_id=agent_id).omega_e
            else:
                omega = _agent_omega(agent_id, args, omegas)
            totals = _total_loads_for(loads, omega)
            profile = fit_profile(agent_trials, totals, cfg.fit_options(), agent_id=agent_id)
        except UnmatchedTrial as exc:
            sys.stderr.write(f"agent {agent_id}: {exc}: {', '.join(exc.task_ids[:5])}\n")
            return EXIT_DATA
        except (InsufficientData, DegenerateCalibration, TigloadError) as exc:
            sys.stderr.write(f"agent {agent_id}: {exc}\n")
            return EXIT_DATA
        row = profile.as_dict()
        row["omega_e"] = omega
        profiles_rows.append(row)

        predictions = {tid: profile.predict(cl) for tid, cl in totals.items()}
        try:
            hl = hosmer_lemeshow(agent_trials, predictions, groups=cfg.hl_groups)
            hl_row = {"agent_id": agent_id}
            hl_row.update(hl.as_dict())
        except (DegenerateGroup, InsufficientData) as exc:
            hl_row = {"agent_id": agent_id, "error": str(exc)}
        hl_rows.append(hl_row)

        for cb in calibration_bins(agent_trials, predictions, cfg.calibration_bin_count):
            calib_rows.append((agent_id, cb.predicted_mean, cb.observed_acc, cb.n))
        for fb in profile.fit_bins:
            decay_rows.append((agent_id, fb.load_mid, fb.accuracy,
                               profile.predict(fb.load_mid), fb.n))

    inputs = {"loads": args.loads, "trials": args.trials}
    outdir = args.out_dir
    os.makedirs(outdir, exist_ok=True)

    payload = files.provenance("profiles", cfg.as_dict(), inputs)
    payload["profiles"] = profiles_rows
    files.write_json_artifact(os.path.join(outdir, "profiles.json"), payload)

    payload = files.provenance("hosmer-lemeshow", cfg.as_dict(), inputs)
    payload["results"] = hl_rows
    files.write_json_artifact(os.path.join(outdir, "hosmer_lemeshow.json"), payload)

    prov = files.provenance("calibration-bins", cfg.as_dict(), inputs)
    files.write_csv(os.path.join(outdir, "calibration.csv"),
                    ["agent_id", "predicted_mean", "observed_acc", "n"],
                    calib_rows, prov=prov)
    prov = files.provenance("decay-curve", cfg.as_dict(), inputs)
    files.write_csv(os.path.join(outdir, "decay_curve.csv"),
                    ["agent_id", "load_mid", "empirical_acc", "fitted_acc", "n"],
                    decay_rows, prov=prov)
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = load_run_config(args)
    loads, load_diags = _read_loads(args.loads)
    trials, trial_diags = _read_trials(args.trials)
    diagnostics = load_diags + trial_diags
    if diagnostics:
        _print_diagnostics("input", diagnostics)
        return EXIT_DATA
    profiles = _read_profiles(args.profiles)
    omegas = _read_omegas(args.omega_file) if args.omega_file else {}

    rows = []
    for agent_id, agent_trials in sorted(_by_agent(trials).items()):
        if agent_id not in profiles:
            sys.stderr.write(f"no profile for agent {agent_id!r}\n")
            return EXIT_DATA
        omega = _agent_omega(agent_id, args, omegas)
        totals = _total_loads_for(loads, omega)
        predictions = {tid: profiles[agent_id].predict(cl) for tid, cl in totals.items()}
        try:
            hl = hosmer_lemeshow(agent_trials, predictions, groups=cfg.hl_groups)
            row = {"agent_id": agent_id}
            row.update(hl.as_dict())
        except (DegenerateGroup, InsufficientData, UnmatchedTrial) as exc:
            row = {"agent_id": agent_id, "error": str(exc)}
        rows.append(row)

    payload = files.provenance("hosmer-lemeshow", cfg.as_dict(),
                               {"loads": args.loads, "trials": args.trials,
                                "profiles": args.profiles})
    payload["results"] = rows
    files.write_json_artifact(args.out, payload)
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = load_run_config(args)
    if args.mode == "node":
        if not args.tasks:
            raise ConfigError("--mode node requires a tasks file")
        tasks, diagnostics = files.read_tasks_jsonl(args.tasks)
        if diagnostics:
            _print_diagnostics(args.tasks, diagnostics)
            return EXIT_DATA
        agent = SimAgent(k=args.k, b_node=args.b, seed=cfg.seed)
        trials = simulate_trials(agent, [t for _, t in tasks], cfg.intrinsic_params(),
                                 replications=args.replications, agent_id=args.agent_id)
        inputs = {"tasks": args.tasks}
    else:
        if not args.loads:
            raise ConfigError("--mode task requires a loads file")
        loads, diagnostics = _read_loads(args.loads)
        if diagnostics:
            _print_diagnostics(args.loads, diagnostics)
            return EXIT_DATA
        omega = args.omega if args.omega is not None else 1.0
        totals = sorted(_total_loads_for(loads, omega).items())
        trials = generate_decay_trials(args.k, args.b, totals, seed=cfg.seed,
                                       agent_id=args.agent_id,
                                       replications=args.replications)
        inputs = {"loads": args.loads}

    header = files.provenance("trials", cfg.as_dict(), inputs)
    files.write_jsonl(args.out, (t.as_dict() for t in trials), header=header)
    return EXIT_OK


def cmd_gen(args) -> int:
    cfg = load_run_config(args)
    try:
        targets = [float(t) for t in args.targets.split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"--targets must be comma-separated numbers: {exc}") from exc
    if not targets:
        raise ConfigError("--targets must name at least one load target")
    spec = GenSpec(
        n_queries=args.queries,
        n_calls=args.calls,
        tolerance=args.tolerance,
        interference_density=args.interference_density,
        distractor_count=args.distractors,
        seed=cfg.seed,
    )
    tasks, strata = sweep(spec, targets, args.per_target, cfg.intrinsic_params(),
                          mean_calls=args.mean_calls)
    files.write_tasks_jsonl(args.out, tasks)
    manifest = files.provenance("gen-manifest", cfg.as_dict(), {})
    manifest["strata"] = [s.as_dict() for s in strata]
    manifest["total_tasks"] = len(tasks)
    files.write_json_artifact(args.manifest, manifest)
    failures = sum(len(s.errors) for s in strata)
    for stratum in strata:
        for err in stratum.errors:
            sys.stderr.write(f"target {stratum.target}: {err}\n")
    return EXIT_OK if failures == 0 or tasks else EXIT_DATA


def cmd_route(args) -> int:
    cfg = load_run_config(args)
    loads, diagnostics = _loads_from_any(args.loads, cfg)
    if diagnostics:
        _print_diagnostics(args.loads, diagnostics)
        return EXIT_DATA
    profiles = _read_profiles(args.profiles)
    omegas = _read_omegas(args.omega_file) if args.omega_file else {}

    policy = RoutingPolicy()
    if args.policy:
        doc = files.read_json_artifact(args.policy)
        policy = RoutingPolicy(
            kind=doc.get("kind", "max_accuracy"),
            threshold=float(doc.get("threshold", 0.5)),
            costs={str(k): float(v) for k, v in doc.get("costs", {}).items()},
        )

    per_agent_totals = {
        agent_id: _total_loads_for(loads, _agent_omega(agent_id, args, omegas))
        for agent_id in profiles
    }
    decisions = []
    for task_id in sorted(loads):
        task_loads = {agent_id: per_agent_totals[agent_id][task_id] for agent_id in profiles}
        decisions.append(route(task_id, task_loads, profiles, policy).as_dict())

    header = files.provenance("routing-decisions", cfg.as_dict(),
                              {"loads": args.loads, "profiles": args.profiles})
    files.write_jsonl(args.out, decisions, header=header)
    return EXIT_OK


def _fmt(value: float, places: int = 4) -> str:
    return f"{value:.{places}f}"


def cmd_report(args) -> int:
    cfg = load_run_config(args)
    lines = ["# tigload report", ""]
    inputs: dict[str, str] = {}

    trials: list[TrialRecord] = []
    loads: dict[str, dict] = {}
    if args.trials:
        trials, diags = _read_trials(args.trials)
        if diags:
            _print_diagnostics(args.trials, diags)
            return EXIT_DATA
        inputs["trials"] = args.trials
    if args.loads:
        loads, diags = _read_loads(args.loads)
        if diags:
            _print_diagnostics(args.loads, diags)
            return EXIT_DATA
        inputs["loads"] = args.loads

    if trials:
        lines += ["## Overall accuracy", "", "| Agent | Trials | Accuracy |", "| --- | --- | --- |"]
        for agent_id, agent_trials in sorted(_by_agent(trials).items()):
            acc = sum(1 for t in agent_trials if t.success) / len(agent_trials)
            lines.append(f"| {agent_id} | {len(agent_trials)} | {_fmt(acc)} |")
        lines.append("")

    if args.profiles:
        inputs["profiles"] = args.profiles
        doc = files.read_json_artifact(args.profiles)
        lines += ["## Cognitive profiles", "",
                  "| Agent | Load sensitivity (k) | Baseline load (b) | SSE |",
                  "| --- | --- | --- | --- |"]
        for row in sorted(doc.get("profiles", []), key=lambda r: r["agent_id"]):
            lines.append(f"| {row['agent_id']} | {_fmt(row['k'])} | {_fmt(row['b'])} "
                         f"| {_fmt(row.get('sse', 0.0))} |")
        lines.append("")

    if args.hl:
        inputs["hl"] = args.hl
        doc = files.read_json_artifact(args.hl)
        lines += ["## Calibration (grouped chi-square test)", "",
                  "| Agent | chi2 | dof | p |", "| --- | --- | --- | --- |"]
        for row in sorted(doc.get("results", []), key=lambda r: r["agent_id"]):
            if "error" in row:
                lines.append(f"| {row['agent_id']} | - | - | {row['error']} |")
            else:
                lines.append(f"| {row['agent_id']} | {_fmt(row['chi2'], 2)} | {row['dof']} "
                             f"| {_fmt(row['p_value'], 2)} |")
        lines.append("")

    if trials and loads:
        for key, title in (("cl_i", "intrinsic load"), ("cl_e", "extraneous load")):
            pairs = [(tid, float(doc.get(key, 0.0))) for tid, doc in loads.items()]
            if len(pairs) < 3 or len({v for _, v in pairs}) < 2:
                continue
            buckets = tercile_buckets(pairs, dimension=key)
            lines += [f"## Accuracy by {title} tercile", "",
                      "| Agent | Low | Medium | High |", "| --- | --- | --- | --- |"]
            for agent_id, agent_trials in sorted(_by_agent(trials).items()):
                try:
                    acc = bucket_accuracy(agent_trials, buckets)
                except TigloadError:
                    continue
                lines.append(f"| {agent_id} | {_fmt(acc['Low'])} | {_fmt(acc['Medium'])} "
                             f"| {_fmt(acc['High'])} |")
            lines.append("")

    prov = files.provenance("report", cfg.as_dict(), inputs)
    lines += ["---", "", f"provenance: `{files.dumps_canonical(prov)}`", ""]
    files.atomic_write_text(args.out, "\n".join(lines))
    return EXIT_OK


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tigload",
                     description="Cognitive-load analytics for multi-turn tool-use tasks.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="run configuration JSON file")
        p.add_argument("--seed", type=int, default=None, help="random stream seed")
        p.add_argument("--lambda", dest="interference_weight", type=float, default=None,
                       help="interference weighting factor inside edge weights")
        p.add_argument("--jobs", type=int, default=None, help="parallel workers")

    p = sub.add_parser("analyze", help="compute per-task loads from a task file")
    common(p)
    p.add_argument("tasks")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--intrinsic-only", action="store_true",
                   help="skip extraneous scoring (cl_e reported as 0)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("score", help="extraneous load only")
    common(p)
    p.add_argument("tasks")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("calibrate-omega", help="calibrate the extraneous load scale")
    common(p)
    p.add_argument("loads")
    p.add_argument("trials")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--pooled", action="store_true", help="pool all agents' trials")
    p.set_defaults(func=cmd_calibrate_omega)

    p = sub.add_parser("fit", help="fit per-agent decay profiles and calibration files")
    common(p)
    p.add_argument("loads")
    p.add_argument("trials")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--omega", type=float, default=None, help="shared extraneous scale")
    p.add_argument("--omega-file", default=None, help="calibrate-omega output JSON")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("validate", help="calibration test for existing profiles")
    common(p)
    p.add_argument("loads")
    p.add_argument("trials")
    p.add_argument("--profiles", required=True)
    p.add_argument("--omega", type=float, default=None)
    p.add_argument("--omega-file", default=None)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", help="emit trial records from a simulated agent")
    common(p)
    p.add_argument("--mode", choices=["node", "task"], default="node")
    p.add_argument("--tasks", help="task file (node mode)")
    p.add_argument("--loads", help="loads file (task mode)")
    p.add_argument("--k", type=float, required=True, help="load sensitivity")
    p.add_argument("--b", type=float, required=True,
                   help="baseline load (per node in node mode, per task in task mode)")
    p.add_argument("--omega", type=float, default=None,
                   help="extraneous scale for task mode totals (default 1.0)")
    p.add_argument("--replications", type=int, default=1)
    p.add_argument("--agent-id", default="sim")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gen", help="generate a load-stratified synthetic task file")
    common(p)
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--targets", required=True, help="comma-separated load targets")
    p.add_argument("--per-target", type=int, default=10)
    p.add_argument("--queries", type=int, default=2)
    p.add_argument("--calls", type=int, default=5)
    p.add_argument("--tolerance", type=float, default=1.0)
    p.add_argument("--interference-density", type=float, default=0.25)
    p.add_argument("--distractors", type=int, default=2)
    p.add_argument("--mean-calls", type=float, default=None,
                   help="randomize per-instance call count around this mean")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("route", help="assign each task to an agent")
    common(p)
    p.add_argument("loads", help="loads JSONL, or a task file to analyze in place")
    p.add_argument("--profiles", required=True)
    p.add_argument("--policy", default=None, help="policy JSON file")
    p.add_argument("--omega", type=float, default=None)
    p.add_argument("--omega-file", default=None)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_route)

    p = sub.add_parser("report", help="render tables from pipeline artifacts")
    common(p)
    p.add_argument("--profiles", default=None)
    p.add_argument("--hl", default=None)
    p.add_argument("--trials", default=None)
    p.add_argument("--loads", default=None)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return EXIT_CONFIG
    except (ScorerUnavailable, MalformedScore) as exc:
        sys.stderr.write(f"scorer error: {exc}\n")
        return EXIT_SCORER
    except (DataError, TigloadError) as exc:
        sys.stderr.write(f"data error: {exc}\n")
        return EXIT_DATA
    except OSError as exc:
        sys.stderr.write(f"io error: {exc}\n")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
