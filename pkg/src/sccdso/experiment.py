"""Experiment harness: sweeps, repetition seeding, aggregation, emission.

Four standard sweeps mirror the evaluation protocol:

* completion-by-file-size   — single-copy job completion time per scheduler
* locality-by-cluster-size  — locality ratio across cluster scales (RF=2)
* throughput-by-replication — cluster throughput and recovery latency
                              across replication factors
* straggler-completion      — completion under injected slow nodes across
                              cluster sizes

Every (scenario, cell, scheduler, repetition) gets its own seed derived by
hashing the master seed with those coordinates, so adding a scheduler or a
cell never perturbs any other cell's randomness. A failed cell is recorded
as a failure row; the rest of the experiment proceeds.

Scheduler pipelines:

* scc-dso       kernel predictor + equalized placement + full colony +
                runtime migration and prefetching
* scc-dso-lite  linear predictor + equalized placement + 5-ant EWMA colony
                + the same runtime adaptivity
* rf-fd         rack-aware placement + reservation first-fit over a linear
                regression estimate
* rsync         rack-aware placement + sequential primary affinity with a
                sync delay per non-local access
* rr            rack-aware placement + round robin
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import aco, placement, predictor as pred, sim, workload as wl
from .cluster import (
    ClusterGraph,
    build_cluster,
    load_cluster_config,
    scale_bandwidth,
    synthetic_cluster_config,
)

SCHEDULERS = ("scc-dso", "scc-dso-lite", "rf-fd", "rsync", "rr")
SCENARIOS = (
    "completion-by-file-size",
    "locality-by-cluster-size",
    "throughput-by-replication",
    "straggler-completion",
)
RSYNC_SYNC_DELAY_S = 0.25
HISTORY_RECORDS = 240


@dataclass(frozen=True)
class ExperimentConfig:
    cluster_path: str | None = None
    workload_path: str | None = None
    schedulers: tuple[str, ...] = ("rf-fd", "rsync", "scc-dso")
    scenarios: tuple[str, ...] = SCENARIOS
    seed: int = 42
    repetitions: int = 50
    preset: str = "stage7"
    block_sizes_mb: tuple[float, ...] = (16.0,)
    file_sizes_mb: tuple[float, ...] = (20, 40, 60, 80, 100)
    cluster_sizes: tuple[int, ...] = (10, 20, 30, 40, 50)
    replication_factors: tuple[int, ...] = (1, 2, 3, 4)
    straggler_node_counts: tuple[int, ...] = (60, 70, 80, 90, 100)
    straggler_fraction: float = 0.1
    straggler_slowdown: float = 4.0
    locality_input_mb: float = 1664.0
    locality_block_mb: float = 64.0
    demand: object = field(default_factory=lambda: {"uniform": [0.3, 0.8]})
    gcycles_per_mb: object = field(default_factory=lambda: {"uniform": [0.06, 0.1]})
    network_load: float = 0.0
    out_dir: str = "results"
    format: str = "csv"

    def validate(self) -> None:
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if not self.schedulers:
            raise ValueError("need at least one scheduler")
        for s in self.schedulers:
            if s not in SCHEDULERS:
                raise ValueError(f"unknown scheduler: {s}")
        for s in self.scenarios:
            if s not in SCENARIOS:
                raise ValueError(f"unknown scenario: {s}")
        if not self.block_sizes_mb or any(b <= 0 for b in self.block_sizes_mb):
            raise ValueError("block sizes must be > 0")
        if self.locality_block_mb <= 0:
            raise ValueError("block sizes must be > 0")
        if self.format not in ("csv", "json", "md"):
            raise ValueError(f"unknown format: {self.format}")
        if self.preset not in ("table1", "stage7"):
            raise ValueError(f"unknown preset: {self.preset}")


def config_from_dict(data: dict, base_dir: str = ".") -> ExperimentConfig:
    def path_of(key):
        p = data.get(key)
        return os.path.join(base_dir, p) if p and not os.path.isabs(p) else p

    cfg = ExperimentConfig(
        cluster_path=path_of("cluster"),
        workload_path=path_of("workload"),
        schedulers=tuple(data.get("schedulers", ("rf-fd", "rsync", "scc-dso"))),
        scenarios=tuple(data.get("scenarios", SCENARIOS)),
        seed=int(data.get("seed", 42)),
        repetitions=int(data.get("repetitions", 50)),
        preset=data.get("preset", "stage7"),
        block_sizes_mb=tuple(
            data["block_sizes_mb"]
            if "block_sizes_mb" in data
            else (float(data.get("block_size_mb", 16.0)),)
        ),
        file_sizes_mb=tuple(data.get("file_sizes_mb", (20, 40, 60, 80, 100))),
        cluster_sizes=tuple(data.get("cluster_sizes", (10, 20, 30, 40, 50))),
        replication_factors=tuple(data.get("replication_factors", (1, 2, 3, 4))),
        straggler_node_counts=tuple(
            data.get("straggler_node_counts", (60, 70, 80, 90, 100))
        ),
        straggler_fraction=float(data.get("straggler_fraction", 0.1)),
        straggler_slowdown=float(data.get("straggler_slowdown", 4.0)),
        locality_input_mb=float(data.get("locality_input_mb", 1664.0)),
        locality_block_mb=float(data.get("locality_block_mb", 64.0)),
        demand=data.get("demand", {"uniform": [0.3, 0.8]}),
        gcycles_per_mb=data.get("gcycles_per_mb", {"uniform": [0.06, 0.1]}),
        network_load=float(data.get("network_load", 0.0)),
        out_dir=data.get("out_dir", "results"),
        format=data.get("format", "csv"),
    )
    cfg.validate()
    return cfg


def load_experiment_config(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return config_from_dict(data, base_dir=os.path.dirname(os.path.abspath(path)))


def derive_seed(master: int, scenario: str, cell: str, scheduler: str, rep: int) -> int:
    key = f"{master}|{scenario}|{cell}|{scheduler}|{rep}".encode()
    digest = hashlib.blake2b(key, digest_size=8).digest()
    return int.from_bytes(digest, "big") & (2**63 - 1)


# --- single pipeline run --------------------------------------------------


def _history(g: ClusterGraph, seed: int, n: int = HISTORY_RECORDS) -> list[pred.ExecRecord]:
    """Synthetic execution history: observed times for random (node, task)
    pairs with small measurement noise."""
    rng = np.random.default_rng(seed)
    ids = sorted(g.nodes)
    records = []
    for _ in range(n):
        node = g.node(ids[int(rng.integers(0, len(ids)))])
        mb = float(rng.uniform(4.0, 64.0))
        task = wl.TaskSpec(
            id="h",
            block_id="h",
            block_mb=mb,
            resource_demand=float(rng.uniform(0.2, 0.9)),
            compute_gcycles=mb * float(rng.uniform(0.06, 0.1)),
        )
        t = sim.true_service_time(node, task) * float(1.0 + 0.03 * rng.standard_normal())
        records.append(
            pred.ExecRecord(
                features=(task.block_mb, node.cpu_ghz, node.mem_gb, node.io_mbps),
                observed_time_s=max(t, 1e-3),
            )
        )
    return records


class _PredictorCache:
    def __init__(self):
        self._models = {}

    def kernel(self, key: str, g: ClusterGraph, seed: int) -> pred.KernelModel:
        k = ("kernel", key)
        if k not in self._models:
            self._models[k] = pred.fit_kernel(_history(g, seed), epochs=300)
        return self._models[k]

    def regression(self, key: str, g: ClusterGraph, seed: int) -> pred.FeatureRegression:
        k = ("linreg", key)
        if k not in self._models:
            self._models[k] = pred.fit_feature_regression(_history(g, seed))
        return self._models[k]


def _eff_order(
    plan: placement.PlacementPlan, model, g: ClusterGraph,
    assignment: dict, tasks: list[wl.TaskSpec],
) -> dict[str, list[str]]:
    """Per-node queue order: descending locality-over-predicted-time,
    ties by task id."""
    by_id = {t.id: t for t in tasks}
    queues: dict[str, list[str]] = {}
    for tid, nid in assignment.items():
        queues.setdefault(nid, []).append(tid)
    for nid, tids in queues.items():
        node = g.node(nid)

        def eff(tid: str) -> float:
            task = by_id[tid]
            local = 1.0 if plan.is_local(nid, task.block_id) else 0.0
            return local / max(model.predict(node, task), 1e-12)

        tids.sort(key=lambda tid: (-eff(tid), tid))
    return queues


def run_pipeline(
    g: ClusterGraph,
    workload: wl.Workload,
    scheduler: str,
    seed: int,
    *,
    preset: str = "stage7",
    cache: _PredictorCache | None = None,
    cache_key: str = "",
    runtime_overrides: dict | None = None,
    sim_cluster: ClusterGraph | None = None,
) -> sim.SimTrace:
    """Place, schedule, and simulate one workload under one scheduler.

    `sim_cluster` lets the runtime view differ from the scheduling view
    (straggler injection happens after scheduling)."""
    cache = cache or _PredictorCache()
    rng = np.random.default_rng(seed)
    rf = workload.apps[0].replication_factor
    tasks = list(workload.tasks)
    blocks = list(workload.blocks)
    node_ids = sorted(g.nodes)
    queues: dict[str, list[str]] | None = None

    def rack_aware_plan() -> placement.PlacementPlan:
        # one independently seeded upload client per app
        mapping: dict[str, tuple[str, ...]] = {}
        for app in workload.apps:
            client = node_ids[int(rng.integers(0, len(node_ids)))]
            app_blocks = [b for b in blocks if b.app_id == app.id]
            part = placement.place_rack_aware(
                g, app_blocks, client, rf=app.replication_factor
            )
            mapping.update(part.block_to_nodes)
        return placement.PlacementPlan(block_to_nodes=mapping, strategy="rack-aware")

    if scheduler in ("scc-dso", "scc-dso-lite"):
        if scheduler == "scc-dso":
            model = cache.kernel(cache_key, g, seed=1)
            variant = "full"
        else:
            model = pred.LinearModel()
            variant = "lightweight"
        plan = placement.place_heterogeneous(g, blocks, model, rf)
        cfg = aco.AcoConfig.preset(preset, variant=variant)
        result = aco.solve(tasks, plan, g, model, cfg, seed=seed)
        assignment = result.best.assignment
        sched_metrics = result.best.metrics
        queues = _eff_order(plan, model, g, assignment, tasks)
        runtime = dict(enable_migration=True, enable_prefetch=True)
    elif scheduler == "rf-fd":
        model = cache.regression(cache_key, g, seed=1)
        plan = rack_aware_plan()
        sol = aco.baseline_rf_fd(tasks, g, plan, model)
        assignment, sched_metrics = sol.assignment, sol.metrics
        runtime = {}
    elif scheduler == "rsync":
        model = cache.regression(cache_key, g, seed=1)
        plan = rack_aware_plan()
        sol = aco.baseline_rsync(tasks, g, plan, model)
        assignment, sched_metrics = sol.assignment, sol.metrics
        runtime = dict(sync_delay_s=RSYNC_SYNC_DELAY_S)
    elif scheduler == "rr":
        model = pred.LinearModel()
        plan = rack_aware_plan()
        sol = aco.baseline_round_robin(tasks, g, plan, model)
        assignment, sched_metrics = sol.assignment, sol.metrics
        runtime = {}
    else:
        raise ValueError(f"unknown scheduler: {scheduler}")

    if runtime_overrides:
        runtime.update(runtime_overrides)
    rc = sim.RuntimeConfig(**runtime)
    run_g = sim_cluster if sim_cluster is not None else g
    if workload.network_load > 0:
        run_g = scale_bandwidth(run_g, 1.0 - workload.network_load)
    trace = sim.simulate(
        run_g, plan, assignment, workload, rc, seed=seed,
        queues=queues, predictor=model,
    )
    return replace(trace, sched_metrics=sched_metrics)


def _single_app_workload(
    input_mb: float, block_mb: float, rf: int, cfg: ExperimentConfig, seed: int
) -> wl.Workload:
    profile = wl.WorkloadProfile(
        apps=(
            wl.AppProfile(
                count=1,
                input_mb=input_mb,
                block_size_mb=block_mb,
                replication_factor=rf,
                demand=cfg.demand,
                gcycles_per_mb=cfg.gcycles_per_mb,
            ),
        ),
        network_load=cfg.network_load,
    )
    return wl.generate_workload(seed, profile)


def _base_workload(cfg: ExperimentConfig, rf: int, seed: int) -> wl.Workload:
    """Workload for the non-size-sweep scenarios: the configured workload
    file when present (job profiles or a generator profile), otherwise the
    built-in single-app reference; the cell's replication factor always
    wins."""
    if not cfg.workload_path:
        return _single_app_workload(
            cfg.locality_input_mb, cfg.locality_block_mb, rf, cfg, seed
        )
    with open(cfg.workload_path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if isinstance(data, dict) and "jobs" in data or isinstance(data, list):
        apps = wl.load_job_profiles(cfg.workload_path)
        apps = [replace(a, replication_factor=rf) for a in apps]
        return wl.workload_from_apps(apps, network_load=cfg.network_load)
    profile = wl.profile_from_dict(data)
    generated = wl.generate_workload(seed, profile)
    apps = [replace(a, replication_factor=rf) for a in generated.apps]
    return wl.workload_from_apps(apps, network_load=generated.network_load)


# --- aggregation ----------------------------------------------------------


@dataclass(frozen=True)
class AggregateRow:
    scenario: str
    cell: str
    scheduler: str
    metric: str
    mean: float
    sd: float
    ci95: float
    n: int


def aggregate(values: list[float]) -> tuple[float, float, float]:
    """Mean, population SD, and normal-approximation 95% CI half-width."""
    if not values:
        raise ValueError("no runs to aggregate")
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    sd = float(arr.std())
    ci = 1.96 * sd / math.sqrt(len(arr))
    return mean, sd, ci


_METRIC_KEYS = (
    "completion_time_s",
    "locality_ratio",
    "throughput_mbps",
    "network_mb",
    "migrations",
    "recovery_latency_s",
)


def _rows_for(
    scenario: str, cell: str, scheduler: str, runs: list[sim.RunMetrics]
) -> list[AggregateRow]:
    rows = []
    for key in _METRIC_KEYS:
        vals = [getattr(m, key) for m in runs]
        mean, sd, ci = aggregate(vals)
        rows.append(AggregateRow(scenario, cell, scheduler, key, mean, sd, ci, len(runs)))
    return rows


# --- scenarios ------------------------------------------------------------


@dataclass
class ExperimentResult:
    aggregates: list[AggregateRow] = field(default_factory=list)
    runs: list[dict] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)

    def cell_mean(self, scenario: str, cell: str, scheduler: str, metric: str) -> float:
        for row in self.aggregates:
            if (row.scenario, row.cell, row.scheduler, row.metric) == (
                scenario,
                cell,
                scheduler,
                metric,
            ):
                return row.mean
        raise KeyError((scenario, cell, scheduler, metric))


def _default_cluster(cfg: ExperimentConfig) -> dict:
    if cfg.cluster_path:
        return load_cluster_config(cfg.cluster_path)
    return synthetic_cluster_config(50)


def _cells_for(cfg: ExperimentConfig, scenario: str):
    """Yield (cell_label, cluster_config, workload_builder, sim_view_fn)."""
    if scenario == "completion-by-file-size":
        cluster_cfg = _default_cluster(cfg)
        sweep_blocks = len(cfg.block_sizes_mb) > 1
        for block_mb in cfg.block_sizes_mb:
            for size in cfg.file_sizes_mb:
                label = f"{size:g}MB" + (f"/b{block_mb:g}" if sweep_blocks else "")
                yield (
                    label,
                    cluster_cfg,
                    lambda seed, size=size, block_mb=block_mb: _single_app_workload(
                        size, block_mb, 1, cfg, seed
                    ),
                    None,
                )
    elif scenario == "locality-by-cluster-size":
        for n in cfg.cluster_sizes:
            yield (
                f"{n}",
                synthetic_cluster_config(n),
                lambda seed: _base_workload(cfg, 2, seed),
                None,
            )
    elif scenario == "throughput-by-replication":
        cluster_cfg = _default_cluster(cfg)
        for rf in cfg.replication_factors:
            yield (
                f"RF{rf}",
                cluster_cfg,
                lambda seed, rf=rf: _base_workload(cfg, rf, seed),
                None,
            )
    elif scenario == "straggler-completion":
        for n in cfg.straggler_node_counts:
            yield (
                f"{n}",
                synthetic_cluster_config(n),
                lambda seed: _base_workload(cfg, 2, seed),
                lambda g, seed: sim.inject_stragglers(
                    g, cfg.straggler_fraction, cfg.straggler_slowdown, seed
                ),
            )
    else:
        raise ValueError(f"unknown scenario: {scenario}")


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    cfg.validate()
    result = ExperimentResult()
    cache = _PredictorCache()
    for scenario in cfg.scenarios:
        for cell, cluster_cfg, make_workload, straggle in _cells_for(cfg, scenario):
            g = build_cluster(cluster_cfg)
            cache_key = f"{scenario}|{cell}"
            for scheduler in cfg.schedulers:
                runs: list[sim.RunMetrics] = []
                try:
                    for rep in range(cfg.repetitions):
                        seed = derive_seed(cfg.seed, scenario, cell, scheduler, rep)
                        workload = make_workload(seed)
                        sim_view = straggle(g, seed) if straggle else None
                        trace = run_pipeline(
                            g,
                            workload,
                            scheduler,
                            seed,
                            preset=cfg.preset,
                            cache=cache,
                            cache_key=cache_key,
                            sim_cluster=sim_view,
                        )
                        metrics = trace.metrics
                        if scenario == "throughput-by-replication":
                            rf = workload.apps[0].replication_factor
                            if rf >= 2:
                                metrics = replace(
                                    metrics,
                                    recovery_latency_s=_recovery_latency(
                                        g, workload, scheduler, seed, cfg, cache,
                                        cache_key, metrics.completion_time_s,
                                    ),
                                )
                        runs.append(metrics)
                        delay, cost, loss = trace.sched_metrics or (0.0, 0.0, 0.0)
                        result.runs.append(
                            {
                                "scenario": scenario,
                                "cell": cell,
                                "scheduler": scheduler,
                                "rep": rep,
                                "seed": seed,
                                **sim.SimTrace(events=(), metrics=metrics).metrics_dict(),
                                "sched_delay": delay,
                                "sched_cost": cost,
                                "sched_loss": loss,
                            }
                        )
                    result.aggregates.extend(_rows_for(scenario, cell, scheduler, runs))
                except Exception as exc:  # noqa: BLE001 - cell isolation
                    result.failures.append(
                        {
                            "scenario": scenario,
                            "cell": cell,
                            "scheduler": scheduler,
                            "error": f"{type(exc).__name__}: {exc}",
                        }
                    )
    return result


def _recovery_latency(
    g, workload, scheduler, seed, cfg, cache, cache_key, base_completion
) -> float:
    """Extra completion time when one node's replicas vanish mid-run."""
    victim = sorted(g.nodes)[0]
    trace = run_pipeline(
        g,
        workload,
        scheduler,
        seed,
        preset=cfg.preset,
        cache=cache,
        cache_key=cache_key,
        runtime_overrides={"replica_blackout": (victim, base_completion / 2.0)},
    )
    return max(0.0, trace.metrics.completion_time_s - base_completion)


# --- emission -------------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def emit(result: ExperimentResult, out_dir: str, fmt: str = "csv") -> list[str]:
    """Write per-run and aggregate outputs; returns the file paths.
    Identical inputs produce byte-identical files."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []

    runs_path = os.path.join(out_dir, "runs.csv")
    with open(runs_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        header = [
            "scenario", "cell", "scheduler", "rep", "seed",
            "completion_time_s", "locality_ratio", "throughput_mbps",
            "network_mb", "migrations", "prefetches", "tasks",
            "recovery_latency_s", "sched_delay", "sched_cost", "sched_loss",
        ]
        writer.writerow(header)
        for run in result.runs:
            writer.writerow(
                [run["scenario"], run["cell"], run["scheduler"], run["rep"], run["seed"]]
                + [_fmt(float(run[k])) for k in header[5:]]
            )
    paths.append(runs_path)

    scenarios = sorted({r.scenario for r in result.aggregates})
    for scenario in scenarios:
        rows = [r for r in result.aggregates if r.scenario == scenario]
        base = os.path.join(out_dir, scenario)
        if fmt == "csv":
            path = base + ".csv"
            with open(path, "w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["cell", "scheduler", "metric", "mean", "sd", "ci95", "n"])
                for r in rows:
                    writer.writerow(
                        [r.cell, r.scheduler, r.metric, _fmt(r.mean), _fmt(r.sd), _fmt(r.ci95), r.n]
                    )
        elif fmt == "json":
            path = base + ".json"
            payload = [
                {
                    "cell": r.cell,
                    "scheduler": r.scheduler,
                    "metric": r.metric,
                    "mean": round(r.mean, 6),
                    "sd": round(r.sd, 6),
                    "ci95": round(r.ci95, 6),
                    "n": r.n,
                }
                for r in rows
            ]
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(payload, fh, indent=2, sort_keys=True)
                fh.write("\n")
        else:
            path = base + ".md"
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(_markdown_table(scenario, rows))
        paths.append(path)

    if result.failures:
        fail_path = os.path.join(out_dir, "failures.csv")
        with open(fail_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["scenario", "cell", "scheduler", "error"])
            for f in result.failures:
                writer.writerow([f["scenario"], f["cell"], f["scheduler"], f["error"]])
        paths.append(fail_path)
    return paths


_PRIMARY_METRIC = {
    "completion-by-file-size": "completion_time_s",
    "locality-by-cluster-size": "locality_ratio",
    "throughput-by-replication": "throughput_mbps",
    "straggler-completion": "completion_time_s",
}


def _markdown_table(scenario: str, rows: list[AggregateRow]) -> str:
    """Pivot to one row per cell, one column per scheduler (mean ± sd of
    the scenario's primary metric)."""
    metric = _PRIMARY_METRIC.get(scenario, "completion_time_s")
    picked = [r for r in rows if r.metric == metric]
    cells = sorted({r.cell for r in picked}, key=_cell_sort_key)
    schedulers = sorted({r.scheduler for r in picked})
    lines = [f"### {scenario} ({metric})", ""]
    lines.append("| cell | " + " | ".join(schedulers) + " |")
    lines.append("|---" * (len(schedulers) + 1) + "|")
    by_key = {(r.cell, r.scheduler): r for r in picked}
    for cell in cells:
        vals = []
        for s in schedulers:
            r = by_key.get((cell, s))
            scale = 100.0 if metric == "locality_ratio" else 1.0
            vals.append(f"{r.mean * scale:.1f} ± {r.sd * scale:.1f}" if r else "—")
        lines.append(f"| {cell} | " + " | ".join(vals) + " |")
    return "\n".join(lines) + "\n"


def _cell_sort_key(cell: str):
    digits = "".join(ch for ch in cell if ch.isdigit() or ch == ".")
    try:
        return (0, float(digits))
    except ValueError:
        return (1, cell)


# --- brute-force oracle suite ----------------------------------------------


def brute_force_makespan(problem: aco.AssignmentProblem) -> float:
    """Exact minimum makespan by enumerating every capacity-feasible
    assignment. Exponential; keep instances small."""
    n = len(problem.node_ids)
    b = len(problem.task_ids)
    grids = np.meshgrid(*([np.arange(n)] * b), indexing="ij")
    assigns = np.stack([gr.ravel() for gr in grids], axis=1)  # (n^b, b)
    m = assigns.shape[0]
    loads = np.zeros((m, n))
    used = np.zeros((m, n))
    rows = np.arange(m)
    for j in range(b):
        loads[rows, assigns[:, j]] += problem.t_eff[assigns[:, j], j]
        used[rows, assigns[:, j]] += problem.demand_mb[j]
    feasible = (used <= problem.capacity_mb[None, :] + 1e-9).all(axis=1)
    if not feasible.any():
        raise aco.InfeasibleScheduleError("no feasible assignment exists")
    return float(loads[feasible].max(axis=1).min())


def oracle_instance(seed: int, max_tasks: int = 8, max_nodes: int = 4):
    """Random small scheduling instance with exact (ground-truth) times."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, max_nodes + 1))
    b = int(rng.integers(2, max_tasks + 1))
    cluster_cfg = {
        "racks": ["r0", "r1"],
        "nodes": [
            {
                "id": f"n{i}",
                "cpu_ghz": float(rng.uniform(1.0, 4.0)),
                "mem_gb": 8.0,
                "io_mbps": float(rng.uniform(80.0, 400.0)),
                "slots": 2,
                "rack": "r0" if i < (n + 1) // 2 else "r1",
            }
            for i in range(n)
        ],
        "link_bandwidth_mbps": float(rng.uniform(60.0, 125.0)),
        "intra_rack_latency_ms": 1.0,
        "inter_rack_latency_ms": 5.0,
    }
    g = build_cluster(cluster_cfg)
    app = wl.Application(
        id="app0",
        input_mb=b * 32.0,
        block_size_mb=32.0,
        replication_factor=min(2, n),
        gcycles_per_mb=float(rng.uniform(0.2, 0.6)),
        demand=0.5,
    )
    blocks = wl.partition(app)
    tasks = wl.tasks_for(app, blocks)
    plan = placement.place_random(g, blocks, app.replication_factor, seed)
    problem = aco.build_problem(g, plan, tasks, sim.TrueTimeModel())
    return problem


def run_oracle_suite(
    seeds: int = 100,
    max_tasks: int = 8,
    max_nodes: int = 4,
    preset: str = "table1",
    ratio_bound: float = 1.05,
) -> dict:
    """Head-to-head against exhaustive enumeration on small instances."""
    cfg = aco.AcoConfig.preset(preset, objective="makespan")
    hits = 0
    worst = 1.0
    t0 = time.perf_counter()
    for s in range(seeds):
        problem = oracle_instance(1000 + s, max_tasks, max_nodes)
        optimum = brute_force_makespan(problem)
        result = aco.solve_problem(problem, cfg, seed=s)
        ratio = result.best.makespan / optimum
        worst = max(worst, ratio)
        if ratio <= ratio_bound + 1e-9:
            hits += 1
    return {
        "instances": seeds,
        "within_bound": hits,
        "ratio_bound": ratio_bound,
        "worst_ratio": worst,
        "elapsed_s": time.perf_counter() - t0,
    }
