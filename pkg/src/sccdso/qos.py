"""Path-level QoS metrics and the weighted scheduling objective.

A SchedulePath records what a candidate schedule moves and computes: edges
carry data over bandwidth-limited links, nodes grind through compute work.
Delay and cost are additive over elements; packet loss composes as the
complement of the survival product; jitter sums per-element delay spread.

The global objective blends delay, cost (which may stand in for energy),
and loss into one scalar. Raw metrics live on incompatible scales, so
callers min-max normalize a candidate set before weighting.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass


@dataclass(frozen=True)
class PathEdge:
    carried_mb: float
    bandwidth_mbps: float
    queue_delay_s: float = 0.0
    cost_per_mb: float = 0.0
    delay_samples: tuple[float, ...] = ()

    def validate(self) -> None:
        if self.carried_mb < 0:
            raise ValueError("carried_mb must be >= 0")
        if self.bandwidth_mbps <= 0:
            raise ValueError("edge bandwidth must be > 0")


@dataclass(frozen=True)
class PathNode:
    work_gcycles: float
    cpu_ghz: float
    loss_prob: float = 0.0
    cost_per_cycle: float = 0.0
    delay_samples: tuple[float, ...] = ()

    def validate(self) -> None:
        if self.work_gcycles < 0:
            raise ValueError("work_gcycles must be >= 0")
        if self.cpu_ghz <= 0:
            raise ValueError("node capacity must be > 0")
        if not 0.0 <= self.loss_prob <= 1.0:
            raise ValueError("loss_prob must be in [0, 1]")


@dataclass(frozen=True)
class SchedulePath:
    edges: tuple[PathEdge, ...] = ()
    nodes: tuple[PathNode, ...] = ()

    def validate(self) -> None:
        for e in self.edges:
            e.validate()
        for v in self.nodes:
            v.validate()


def concat(a: SchedulePath, b: SchedulePath) -> SchedulePath:
    return SchedulePath(edges=a.edges + b.edges, nodes=a.nodes + b.nodes)


def path_delay(p: SchedulePath) -> float:
    """Transmission plus processing delay, seconds."""
    p.validate()
    edge_s = sum(e.carried_mb / e.bandwidth_mbps + e.queue_delay_s for e in p.edges)
    node_s = sum(v.work_gcycles / v.cpu_ghz for v in p.nodes)
    return edge_s + node_s


def path_cost(p: SchedulePath) -> float:
    """Resource consumption in abstract cost units (node work is billed
    per cycle, so Gcycles scale by 1e9)."""
    p.validate()
    edge_c = sum(e.cost_per_mb * e.carried_mb for e in p.edges)
    node_c = sum(v.cost_per_cycle * v.work_gcycles * 1e9 for v in p.nodes)
    return edge_c + node_c


def path_loss(p: SchedulePath) -> float:
    """1 - prod(1 - p_v) over path nodes, treating losses as independent."""
    p.validate()
    survive = 1.0
    for v in p.nodes:
        survive *= 1.0 - v.loss_prob
    return 1.0 - survive


def _population_std(samples: tuple[float, ...]) -> float:
    n = len(samples)
    mean = sum(samples) / n
    return math.sqrt(sum((s - mean) ** 2 for s in samples) / n)


def path_jitter(p: SchedulePath) -> float:
    """Sum over elements of the population standard deviation of that
    element's recorded delay samples."""
    p.validate()
    total = 0.0
    for element in (*p.edges, *p.nodes):
        if not element.delay_samples:
            raise ValueError("jitter needs >= 1 delay sample per element")
        total += _population_std(element.delay_samples)
    return total


# Weight presets: the per-term tuning range, and the delay-heavy preset
# used by the full pipeline.
WEIGHT_RANGE = (0.2, 0.4)
PIPELINE_WEIGHTS = (0.5, 0.3, 0.2)


@dataclass(frozen=True)
class ObjectiveWeights:
    delay: float = PIPELINE_WEIGHTS[0]
    cost: float = PIPELINE_WEIGHTS[1]
    loss: float = PIPELINE_WEIGHTS[2]

    def validate(self) -> None:
        total = self.delay + self.cost + self.loss
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {total}")
        trio = (self.delay, self.cost, self.loss)
        in_range = all(WEIGHT_RANGE[0] <= w <= WEIGHT_RANGE[1] for w in trio)
        if not in_range and trio != PIPELINE_WEIGHTS:
            warnings.warn(
                f"objective weights {trio} outside the usual {WEIGHT_RANGE} band",
                stacklevel=2,
            )

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.delay, self.cost, self.loss)


def objective(plan_metrics: tuple[float, float, float], weights: ObjectiveWeights) -> float:
    """Weighted sum of (delay, cost, loss), already normalized; lower is
    better."""
    weights.validate()
    d, c, l = plan_metrics
    return weights.delay * d + weights.cost * c + weights.loss * l


def normalize_metrics(rows: list[tuple[float, float, float]]) -> list[tuple[float, float, float]]:
    """Min-max normalize each metric column over the candidate set.
    Constant columns map to 0 (no discriminating power)."""
    if not rows:
        return []
    cols = list(zip(*rows))
    lo = [min(c) for c in cols]
    span = [max(c) - l for c, l in zip(cols, lo)]
    out = []
    for row in rows:
        out.append(
            tuple(
                (v - l) / s if s > 0 else 0.0
                for v, l, s in zip(row, lo, span)
            )
        )
    return out
