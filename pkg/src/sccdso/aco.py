"""Task-to-node assignment: ant colony search plus comparison baselines.

The solver minimizes either the weighted delay/cost/loss objective (with
makespan as the tiebreak) or the pure min-max makespan. Ants build
complete assignments task by task, sampling nodes in proportion to
pheromone^alpha * desirability^beta over the eligible set; desirability is
the inverse of predicted execution time with the data-access cost folded
in, so locality and speed ride the same signal.

Two pheromone regimes:

* full — every feasible ant deposits Q / makespan on the edges it used,
  after global evaporation.
* lightweight (EWMA) — only the best-so-far assignment is reinforced, at
  rate rho toward 1/T per edge; everything else just evaporates. Paired
  with a reduced colony (5 ants) for cheap per-iteration work.

A floor keeps every pheromone entry positive so no edge ever becomes
unreachable. Candidate fan-out per task is capped (`l_max`) to prune
low-desirability nodes on large clusters; capacity-feasible fallback keeps
the cap from manufacturing infeasibility.

Baselines: reservation-first-fit with a linear-regression load estimate
(locality-blind), sequential primary-affinity with a per-non-local-access
synchronization delay, and plain round robin.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .cluster import ClusterGraph
from .placement import PlacementPlan
from .qos import ObjectiveWeights
from .workload import TaskSpec

LIGHTWEIGHT_ANTS = 5


class InfeasibleScheduleError(RuntimeError):
    """Raised when no capacity-respecting assignment was found."""

    def __init__(self, message: str, diagnosis: dict | None = None):
        super().__init__(message)
        self.diagnosis = diagnosis or {}


# Documented tuning ranges; values outside them trigger a warning, not an
# error. The evaluated pipeline's own constants (alpha 0.8, beta 1.2,
# 5-ant colonies) are accepted silently.
_SOFT_RANGES = {
    "alpha": (1.0, 2.0, {0.8}),
    "beta": (2.0, 3.0, {1.2}),
    "rho": (0.1, 0.3, set()),
    "tau0": (0.01, 0.1, set()),
    "q_const": (100.0, 500.0, set()),
    "ants": (10, 20, {LIGHTWEIGHT_ANTS}),
    "max_iters": (20, 50, set()),
    "tau_floor": (1e-4, 1e-2, set()),
    "tol": (1e-3, 1e-2, set()),
    "l_max": (5, 10, set()),
}


@dataclass(frozen=True)
class AcoConfig:
    alpha: float = 0.8
    beta: float = 1.2
    rho: float = 0.1
    tau0: float = 0.05
    q_const: float = 100.0
    ants: int = 10
    max_iters: int = 20
    tol: float = 5e-3
    tau_floor: float = 1e-3
    weights: ObjectiveWeights = field(default_factory=ObjectiveWeights)
    variant: str = "full"
    objective: str = "weighted"  # or "makespan"
    l_max: int = 10
    patience: int = 5

    def validate(self) -> None:
        if min(self.alpha, self.beta, self.tau0, self.q_const, self.tol) <= 0:
            raise ValueError("alpha, beta, tau0, q_const, tol must be > 0")
        if not 0 < self.rho < 1:
            raise ValueError("rho must be in (0, 1)")
        if self.ants < 1 or self.max_iters < 1 or self.l_max < 1:
            raise ValueError("ants, max_iters, l_max must be >= 1")
        if self.tau_floor <= 0:
            raise ValueError("tau_floor must be > 0")
        if self.variant not in ("full", "lightweight"):
            raise ValueError(f"unknown variant: {self.variant}")
        if self.objective not in ("weighted", "makespan"):
            raise ValueError(f"unknown objective: {self.objective}")
        self.weights.validate()
        for name, (lo, hi, extra) in _SOFT_RANGES.items():
            v = getattr(self, name)
            if not (lo <= v <= hi) and v not in extra:
                warnings.warn(
                    f"AcoConfig.{name}={v} outside the usual range [{lo}, {hi}]",
                    stacklevel=2,
                )

    @classmethod
    def preset(cls, name: str, **overrides) -> "AcoConfig":
        if name == "table1":
            base = dict(alpha=1.5, beta=2.5, rho=0.2, ants=20, max_iters=50)
        elif name == "stage7":
            base = dict(alpha=0.8, beta=1.2, rho=0.1)
        else:
            raise ValueError(f"unknown preset: {name}")
        base.update(overrides)
        cfg = cls(**base)
        cfg.validate()
        return cfg


@dataclass
class PheromoneMatrix:
    node_ids: tuple[str, ...]
    task_ids: tuple[str, ...]
    tau: np.ndarray  # (n_nodes, n_tasks)
    floor: float

    @classmethod
    def initial(cls, node_ids, task_ids, config: AcoConfig) -> "PheromoneMatrix":
        return cls(
            node_ids=tuple(node_ids),
            task_ids=tuple(task_ids),
            tau=np.full((len(node_ids), len(task_ids)), config.tau0, dtype=float),
            floor=config.tau_floor,
        )

    def clamp(self) -> None:
        np.maximum(self.tau, self.floor, out=self.tau)

    def index(self, node_id: str, task_id: str) -> tuple[int, int]:
        return self.node_ids.index(node_id), self.task_ids.index(task_id)


@dataclass(frozen=True)
class AntSolution:
    assignment: dict[str, str]  # task id -> node id
    makespan: float
    metrics: tuple[float, float, float]  # raw (delay, cost, loss)
    feasible: bool
    edge_times: dict[str, float]  # task id -> effective time at its node
    objective: float = float("nan")


@dataclass(frozen=True)
class AssignmentProblem:
    """Everything an ant needs, precomputed as dense arrays."""

    g: ClusterGraph
    plan: PlacementPlan
    tasks: tuple[TaskSpec, ...]
    node_ids: tuple[str, ...]
    task_ids: tuple[str, ...]
    t_pred: np.ndarray  # (n, B) predicted execution seconds
    access: np.ndarray  # (n, B) data-access seconds
    t_eff: np.ndarray  # t_pred + access
    eta: np.ndarray  # 1 / t_eff
    xtra_delay: np.ndarray  # (n, B) queueing + latency extras of the fetch path
    cost: np.ndarray  # (n, B) per-assignment cost contribution
    src_idx: np.ndarray  # (n, B) chosen replica source index, -1 when local
    demand_mb: np.ndarray  # (B,)
    capacity_mb: np.ndarray  # (n,)
    loss_prob: np.ndarray  # (n,)
    candidate_mask: np.ndarray  # (n, B) fan-out-capped eligibility


def build_problem(
    g: ClusterGraph,
    plan: PlacementPlan,
    tasks: list[TaskSpec],
    predictor,
    l_max: int = 10,
) -> AssignmentProblem:
    node_ids = tuple(sorted(g.nodes))
    task_ids = tuple(t.id for t in tasks)
    nodes = [g.node(n) for n in node_ids]
    n, b = len(node_ids), len(tasks)

    t_pred = np.asarray(predictor.predict_matrix(nodes, list(tasks)), dtype=float)
    access = np.zeros((n, b))
    xtra_delay = np.zeros((n, b))
    cost = np.zeros((n, b))
    src_idx = np.full((n, b), -1, dtype=int)
    idx_of = {nid: i for i, nid in enumerate(node_ids)}

    for j, task in enumerate(tasks):
        replicas = plan.replicas(task.block_id)
        for i, nid in enumerate(node_ids):
            node = nodes[i]
            compute_cost = node.cost_per_cycle * task.compute_gcycles * 1e9
            if nid in replicas:
                cost[i, j] = compute_cost
                continue
            best = None  # (transfer_s, queue_extras, transfer_cost, src)
            for r in replicas:
                links = g.path_links(nid, r)
                xfer = sum(task.block_mb / l.bandwidth_mbps for l in links)
                queue = sum(l.base_queue_delay_s for l in links) + g.tier_latency_s(nid, r)
                link_cost = sum(l.cost_per_mb * task.block_mb for l in links)
                cand = (xfer, queue, link_cost, idx_of[r])
                if best is None or cand < best:
                    best = cand
            access[i, j] = best[0]
            xtra_delay[i, j] = best[1]
            cost[i, j] = best[2] + compute_cost
            src_idx[i, j] = best[3]

    t_eff = t_pred + access
    eta = 1.0 / np.maximum(t_eff, 1e-12)

    mask = np.zeros((n, b), dtype=bool)
    k = min(l_max, n)
    for j in range(b):
        top = np.argsort(-eta[:, j], kind="stable")[:k]
        mask[top, j] = True

    return AssignmentProblem(
        g=g,
        plan=plan,
        tasks=tuple(tasks),
        node_ids=node_ids,
        task_ids=task_ids,
        t_pred=t_pred,
        access=access,
        t_eff=t_eff,
        eta=eta,
        xtra_delay=xtra_delay,
        cost=cost,
        src_idx=src_idx,
        demand_mb=np.array([t.block_mb for t in tasks]),
        capacity_mb=np.array([nd.capacity_mb for nd in nodes]),
        loss_prob=np.array([nd.loss_prob for nd in nodes]),
        candidate_mask=mask,
    )


def selection_probabilities(
    tau_col: np.ndarray, eta_col: np.ndarray, alpha: float, beta: float, mask: np.ndarray
) -> np.ndarray:
    """Normalized node probabilities for one task over its eligible set."""
    w = np.where(mask, np.power(tau_col, alpha) * np.power(eta_col, beta), 0.0)
    total = w.sum()
    if total <= 0:
        raise ValueError("no eligible node carries positive weight")
    return w / total


def _solution_from_indices(
    problem: AssignmentProblem, assign: np.ndarray, feasible: bool
) -> AntSolution:
    n = len(problem.node_ids)
    assigned = assign >= 0
    loads = np.zeros(n)
    counts = np.zeros(n)
    delay = cost = loss_sum = 0.0
    assignment: dict[str, str] = {}
    edge_times: dict[str, float] = {}
    for j, i in enumerate(assign):
        if i < 0:
            continue
        loads[i] += problem.t_eff[i, j]
        counts[i] += 1
        delay += problem.xtra_delay[i, j]
        cost += problem.cost[i, j]
        survive = 1.0 - problem.loss_prob[i]
        if problem.src_idx[i, j] >= 0:
            survive *= 1.0 - problem.loss_prob[problem.src_idx[i, j]]
        loss_sum += 1.0 - survive
        tid = problem.task_ids[j]
        assignment[tid] = problem.node_ids[i]
        edge_times[tid] = float(problem.t_eff[i, j])
    # Each task's latency is dominated by its node's backlog (the workload
    # at the node over its capacity), so the plan delay sums every node's
    # drain time once per task served there, plus fetch-path extras.
    delay += float((counts * loads).sum())
    count = max(int(assigned.sum()), 1)
    makespan = float(loads.max()) if assigned.any() else float("inf")
    return AntSolution(
        assignment=assignment,
        makespan=makespan,
        metrics=(float(delay), float(cost), loss_sum / count),
        feasible=feasible and bool(assigned.all()),
        edge_times=edge_times,
    )


def construct_solution(
    pheromones: PheromoneMatrix,
    problem: AssignmentProblem,
    config: AcoConfig,
    rng: np.random.Generator,
) -> AntSolution:
    """One ant: visit tasks in random order, sample a node per task from
    the pheromone/desirability distribution over capacity-feasible
    candidates. Runs to completion even when capacity strands a task; the
    result is then flagged infeasible instead of raising."""
    n, b = pheromones.tau.shape
    order = rng.permutation(b)
    used = np.zeros(n)
    assign = np.full(b, -1, dtype=int)
    feasible = True
    for j in order:
        fits = used + problem.demand_mb[j] <= problem.capacity_mb + 1e-9
        mask = problem.candidate_mask[:, j] & fits
        if not mask.any():
            mask = fits  # fan-out cap must not manufacture infeasibility
        if not mask.any():
            feasible = False
            continue
        w = np.where(
            mask,
            np.power(pheromones.tau[:, j], config.alpha)
            * np.power(problem.eta[:, j], config.beta),
            0.0,
        )
        cum = np.cumsum(w)
        pick = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
        pick = min(pick, n - 1)
        assign[j] = pick
        used[pick] += problem.demand_mb[j]
    return _solution_from_indices(problem, assign, feasible)


def update_pheromones_full(
    pheromones: PheromoneMatrix, solutions: list[AntSolution], config: AcoConfig
) -> None:
    """Evaporate, then deposit Q/makespan along every feasible ant's edges."""
    pheromones.tau *= 1.0 - config.rho
    node_pos = {nid: i for i, nid in enumerate(pheromones.node_ids)}
    task_pos = {tid: j for j, tid in enumerate(pheromones.task_ids)}
    for sol in solutions:
        if not sol.feasible or sol.makespan <= 0:
            continue
        deposit = config.q_const / sol.makespan
        for tid, nid in sol.assignment.items():
            pheromones.tau[node_pos[nid], task_pos[tid]] += deposit
    pheromones.clamp()


def update_pheromones_ewma(
    pheromones: PheromoneMatrix, best: AntSolution, config: AcoConfig
) -> None:
    """Evaporate everywhere; nudge only the best assignment's edges toward
    1/T at rate rho. Repeated application with a fixed best converges each
    reinforced entry to exactly 1/T."""
    pheromones.tau *= 1.0 - config.rho
    if best is not None and best.feasible:
        node_pos = {nid: i for i, nid in enumerate(pheromones.node_ids)}
        task_pos = {tid: j for j, tid in enumerate(pheromones.task_ids)}
        for tid, nid in best.assignment.items():
            delta = 1.0 / max(best.edge_times[tid], 1e-12)
            pheromones.tau[node_pos[nid], task_pos[tid]] += config.rho * delta
    pheromones.clamp()


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    best_objective: float
    best_makespan: float
    mean_makespan: float
    feasible_ants: int


@dataclass(frozen=True)
class SolveResult:
    best: AntSolution
    trace: tuple[TraceRow, ...]
    iterations: int
    converged_iteration: int | None  # iteration at which early stop fired
    pheromones: PheromoneMatrix | None = None  # final trail state


def _refine_makespan(
    problem: AssignmentProblem, sol: AntSolution, max_rounds: int = 64
) -> AntSolution:
    """Bounded hill climb: repeatedly move one task off the most loaded
    node while that strictly lowers the makespan and respects capacity."""
    pos = {nid: i for i, nid in enumerate(problem.node_ids)}
    tpos = {tid: j for j, tid in enumerate(problem.task_ids)}
    n = len(problem.node_ids)
    assign = np.full(len(problem.task_ids), -1, dtype=int)
    for tid, nid in sol.assignment.items():
        assign[tpos[tid]] = pos[nid]
    if (assign < 0).any():
        return sol
    loads = np.zeros(n)
    used = np.zeros(n)
    for j, i in enumerate(assign):
        loads[i] += problem.t_eff[i, j]
        used[i] += problem.demand_mb[j]
    improved_any = False
    for _ in range(max_rounds):
        src = int(np.argmax(loads))
        best = None  # (new_makespan, j, dst)
        others = np.partition(loads, -2)[-2] if n > 1 else 0.0
        for j in np.where(assign == src)[0]:
            for dst in range(n):
                if dst == src:
                    continue
                if used[dst] + problem.demand_mb[j] > problem.capacity_mb[dst] + 1e-9:
                    continue
                new_mk = max(
                    others,
                    loads[src] - problem.t_eff[src, j],
                    loads[dst] + problem.t_eff[dst, j],
                )
                if new_mk < loads[src] - 1e-12 and (best is None or new_mk < best[0]):
                    best = (new_mk, int(j), dst)
        if best is None:
            break
        _, j, dst = best
        loads[src] -= problem.t_eff[src, j]
        used[src] -= problem.demand_mb[j]
        loads[dst] += problem.t_eff[dst, j]
        used[dst] += problem.demand_mb[j]
        assign[j] = dst
        improved_any = True
    if not improved_any:
        return sol
    return _solution_from_indices(problem, assign, True)


def _weighted(metrics, refs, weights: ObjectiveWeights) -> float:
    # Scale by the first iteration's mean per metric: each term is measured
    # in relative units, so a near-constant metric cannot hijack the sum
    # the way a min-max span close to zero would.
    parts = [v / ref if ref > 0 else 0.0 for v, ref in zip(metrics, refs)]
    return (
        weights.delay * parts[0] + weights.cost * parts[1] + weights.loss * parts[2]
    )


def solve(
    tasks: list[TaskSpec],
    plan: PlacementPlan,
    g: ClusterGraph,
    predictor,
    config: AcoConfig,
    seed: int,
) -> SolveResult:
    """Run the colony; returns the best-ever feasible solution and the
    per-iteration convergence trace.

    Early-stops once the best value improves by less than `tol`
    (relatively) for `patience` consecutive iterations. Raises
    InfeasibleScheduleError when no ant ever produced a feasible
    assignment.
    """
    config.validate()
    problem = build_problem(g, plan, tasks, predictor, l_max=config.l_max)
    return solve_problem(problem, config, seed)


def preallocation_solution(problem: AssignmentProblem) -> AntSolution:
    """The balanced pre-allocation list: every task on its block's primary
    owner. Used to seed the colony's first iteration."""
    pos = {nid: i for i, nid in enumerate(problem.node_ids)}
    assign = np.array(
        [pos[problem.plan.primary(t.block_id)] for t in problem.tasks], dtype=int
    )
    return _assignment_solution(problem, assign)


def greedy_local_solution(problem: AssignmentProblem) -> AntSolution:
    """Longest-task-first over replica holders: keep every task local while
    leveling per-node load; fall back to the globally least-loaded node
    only when a holder cannot take the data. Second colony seed."""
    pos = {nid: i for i, nid in enumerate(problem.node_ids)}
    n = len(problem.node_ids)
    loads = np.zeros(n)
    used = np.zeros(n)
    assign = np.full(len(problem.tasks), -1, dtype=int)
    order = sorted(
        range(len(problem.tasks)),
        key=lambda j: (-float(problem.t_eff[:, j].min()), j),
    )
    for j in order:
        task = problem.tasks[j]
        holders = [pos[r] for r in problem.plan.replicas(task.block_id)]
        fits = [
            i for i in holders
            if used[i] + problem.demand_mb[j] <= problem.capacity_mb[i] + 1e-9
        ]
        if not fits:
            fits = [
                i for i in range(n)
                if used[i] + problem.demand_mb[j] <= problem.capacity_mb[i] + 1e-9
            ]
        if not fits:
            return _assignment_solution(problem, assign)  # infeasible
        i = min(fits, key=lambda i: (loads[i] + problem.t_eff[i, j], i))
        assign[j] = i
        loads[i] += problem.t_eff[i, j]
        used[i] += problem.demand_mb[j]
    return _assignment_solution(problem, assign)


def solve_problem(
    problem: AssignmentProblem, config: AcoConfig, seed: int
) -> SolveResult:
    config.validate()
    ants = LIGHTWEIGHT_ANTS if config.variant == "lightweight" else config.ants
    ph = PheromoneMatrix.initial(problem.node_ids, problem.task_ids, config)
    rng = np.random.default_rng(seed)

    best: AntSolution | None = None
    best_key: tuple | None = None
    refs = None
    trace: list[TraceRow] = []
    prev_val = float("inf")
    stall = 0
    converged = None
    last_infeasible: AntSolution | None = None

    for it in range(1, config.max_iters + 1):
        sols = [construct_solution(ph, problem, config, rng) for _ in range(ants)]
        if it == 1:
            for elite in (preallocation_solution(problem), greedy_local_solution(problem)):
                if elite.feasible:
                    sols.append(elite)
        if config.objective == "makespan":
            iter_best = min(
                (s for s in sols if s.feasible),
                key=lambda s: s.makespan,
                default=None,
            )
            if iter_best is not None:
                refined = _refine_makespan(problem, iter_best)
                if refined is not iter_best:
                    sols.append(refined)
        feas = [s for s in sols if s.feasible]
        if not feas and sols:
            last_infeasible = sols[0]
        if refs is None and feas:
            cols = list(zip(*(s.metrics for s in feas)))
            refs = [float(np.mean(c)) for c in cols]
        for idx, s in enumerate(feas):
            obj = (
                s.makespan
                if config.objective == "makespan"
                else _weighted(s.metrics, refs, config.weights)
            )
            feas[idx] = replace(s, objective=obj)
            key = (
                (s.makespan, tuple(sorted(s.assignment.items())))
                if config.objective == "makespan"
                else (obj, s.makespan, tuple(sorted(s.assignment.items())))
            )
            if best_key is None or key < best_key:
                best_key, best = key, feas[idx]

        mean_mk = float(np.mean([s.makespan for s in feas])) if feas else float("inf")
        trace.append(
            TraceRow(
                iteration=it,
                best_objective=best.objective if best else float("inf"),
                best_makespan=best.makespan if best else float("inf"),
                mean_makespan=mean_mk,
                feasible_ants=len(feas),
            )
        )

        if config.variant == "lightweight":
            update_pheromones_ewma(ph, best, config)
        else:
            # best-ever rides along as an elitist depositor
            update_pheromones_full(ph, feas + ([best] if best else []), config)

        if best is not None:
            val = best.objective if config.objective == "weighted" else best.makespan
            if np.isfinite(prev_val):
                improvement = (prev_val - val) / max(abs(prev_val), 1e-12)
                stall = stall + 1 if improvement < config.tol else 0
            prev_val = val
            if stall >= config.patience:
                converged = it
                break

    if best is None:
        diag = {}
        if last_infeasible is not None:
            diag = {
                "assigned": len(last_infeasible.assignment),
                "tasks": len(problem.task_ids),
                "total_demand_mb": float(problem.demand_mb.sum()),
                "total_capacity_mb": float(problem.capacity_mb.sum()),
            }
        raise InfeasibleScheduleError(
            "no feasible assignment found within the iteration budget", diag
        )
    return SolveResult(
        best=best,
        trace=tuple(trace),
        iterations=len(trace),
        converged_iteration=converged,
        pheromones=ph,
    )


def write_trace_csv(trace: tuple[TraceRow, ...], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("iter,best_objective,best_makespan,mean_makespan,feasible_ants\n")
        for row in trace:
            fh.write(
                f"{row.iteration},{row.best_objective:.9g},{row.best_makespan:.9g},"
                f"{row.mean_makespan:.9g},{row.feasible_ants}\n"
            )


def _assignment_solution(problem: AssignmentProblem, assign: np.ndarray) -> AntSolution:
    within = True
    used = np.zeros(len(problem.node_ids))
    for j, i in enumerate(assign):
        if i < 0:
            within = False
            continue
        used[i] += problem.demand_mb[j]
    within = within and bool(np.all(used <= problem.capacity_mb + 1e-9))
    return _solution_from_indices(problem, assign, within)


def baseline_round_robin(
    tasks: list[TaskSpec], g: ClusterGraph, plan: PlacementPlan, predictor
) -> AntSolution:
    """Neutral control: task k on node k mod n, node order by id."""
    problem = build_problem(g, plan, tasks, predictor)
    n = len(problem.node_ids)
    assign = np.array([j % n for j in range(len(tasks))], dtype=int)
    return _assignment_solution(problem, assign)


def baseline_rf_fd(
    tasks: list[TaskSpec],
    g: ClusterGraph,
    plan: PlacementPlan,
    predictor,
    reservation_headroom: float = 1.25,
) -> AntSolution:
    """Reservation first-fit: walk nodes in id order and take the first one
    whose capacity fits and whose estimated load stays under the
    reservation threshold (mean fair-share load times the headroom).
    Estimated loads feed back into later picks. Locality-blind."""
    problem = build_problem(g, plan, tasks, predictor)
    n = len(problem.node_ids)
    t_est = problem.t_pred  # regression estimate, no locality signal
    fair = float(t_est.mean(axis=0).sum()) / n
    threshold = fair * reservation_headroom
    loads = np.zeros(n)
    used = np.zeros(n)
    assign = np.full(len(tasks), -1, dtype=int)
    for j in range(len(tasks)):
        placed = False
        for i in range(n):
            if used[i] + problem.demand_mb[j] > problem.capacity_mb[i] + 1e-9:
                continue
            if loads[i] + t_est[i, j] <= threshold:
                assign[j] = i
                placed = True
                break
        if not placed:
            fits = np.where(used + problem.demand_mb[j] <= problem.capacity_mb + 1e-9)[0]
            if len(fits) == 0:
                raise InfeasibleScheduleError(
                    f"capacity exhausted while placing task {tasks[j].id}"
                )
            assign[j] = int(fits[np.argmin(loads[fits])])
        loads[assign[j]] += t_est[assign[j], j]
        used[assign[j]] += problem.demand_mb[j]
    return _assignment_solution(problem, assign)


def baseline_rsync(
    tasks: list[TaskSpec],
    g: ClusterGraph,
    plan: PlacementPlan,
    predictor,
    affinity_depth: int | None = None,
) -> AntSolution:
    """Sequential single-replica affinity: each task goes to its block's
    primary holder until that queue is `affinity_depth` deep, then spills
    round-robin to the remaining nodes (those accesses become non-local and
    pay the synchronization delay in simulation)."""
    problem = build_problem(g, plan, tasks, predictor)
    n = len(problem.node_ids)
    if affinity_depth is None:
        affinity_depth = max(1, (2 * len(tasks) + n - 1) // n)
    pos = {nid: i for i, nid in enumerate(problem.node_ids)}
    depth = np.zeros(n, dtype=int)
    used = np.zeros(n)
    assign = np.full(len(tasks), -1, dtype=int)
    spill = 0
    for j, task in enumerate(tasks):
        primary = pos[plan.primary(task.block_id)]
        i = primary
        ok = (
            depth[i] < affinity_depth
            and used[i] + problem.demand_mb[j] <= problem.capacity_mb[i] + 1e-9
        )
        if not ok:
            chosen = -1
            fallback = -1
            for _ in range(n):
                cand = spill % n
                spill += 1
                if used[cand] + problem.demand_mb[j] > problem.capacity_mb[cand] + 1e-9:
                    continue
                if fallback < 0:
                    fallback = cand
                if depth[cand] < affinity_depth:
                    chosen = cand
                    break
            i = chosen if chosen >= 0 else fallback
            if i < 0:
                raise InfeasibleScheduleError(
                    f"capacity exhausted while placing task {task.id}"
                )
        assign[j] = i
        depth[i] += 1
        used[i] += problem.demand_mb[j]
    return _assignment_solution(problem, assign)
