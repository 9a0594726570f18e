"""Execution-time predictors.

Two models share one job: estimate how long a map task runs on a node.

* KernelModel — Gaussian-RBF kernel regression over the feature vector
  [block MB, cpu GHz, mem GB, io MB/s], coefficients trained by full-batch
  gradient descent on squared error. Features are standardized before
  kernel evaluation; raw MB/GHz/GB scales would make a unit-bandwidth RBF
  degenerate. The support set is capped (reservoir sampling) so a single
  prediction touches at most `s_max` stored points.

* LinearModel — the lightweight alternative: an affine map of the task's
  normalized resource demand, ignoring node features entirely. Its noise
  term belongs to simulated ground truth, never to predictions, so
  schedulers stay deterministic.

Fitted models are immutable; share them freely across runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .cluster import NodeSpec
from .workload import TaskSpec

PREDICTION_FLOOR_S = 1e-3


@dataclass(frozen=True)
class ExecRecord:
    """One historical observation: features [m, cpu, mem, io] and the
    measured wall time."""

    features: tuple[float, float, float, float]
    observed_time_s: float

    def validate(self) -> None:
        if any((not np.isfinite(f)) or f < 0 for f in self.features):
            raise ValueError("features must be finite and non-negative")
        if self.observed_time_s <= 0:
            raise ValueError("observed_time_s must be > 0")


def features_for(node: NodeSpec, task: TaskSpec) -> np.ndarray:
    return np.array([task.block_mb, node.cpu_ghz, node.mem_gb, node.io_mbps])


def rbf_kernel(a: np.ndarray, b: np.ndarray, sigma: float) -> np.ndarray:
    """exp(-||a - b||^2 / (2 sigma^2)) for row-wise inputs; returns the
    (len(a), len(b)) Gram block."""
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    sq = (
        np.sum(a * a, axis=1)[:, None]
        - 2.0 * (a @ b.T)
        + np.sum(b * b, axis=1)[None, :]
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-sq / (2.0 * sigma * sigma))


def loss_and_gradient(
    coeffs: np.ndarray, bias: float, gram: np.ndarray, targets: np.ndarray
) -> tuple[float, np.ndarray, float]:
    """Mean squared error of gram @ coeffs + bias against targets, with its
    analytic gradient. Kept as a pure function so it can be checked against
    finite differences."""
    pred = gram @ coeffs + bias
    err = pred - targets
    n = len(targets)
    loss = float(np.mean(err * err))
    grad_w = (2.0 / n) * (gram.T @ err)
    grad_b = float((2.0 / n) * np.sum(err))
    return loss, grad_w, grad_b


@dataclass(frozen=True)
class KernelModel:
    supports: np.ndarray  # (S, 4) standardized support features
    coeffs: np.ndarray  # (S,)
    bias: float
    sigma: float
    learning_rate: float
    scaler_mean: np.ndarray  # (4,)
    scaler_std: np.ndarray  # (4,)
    degenerate: bool = False
    loss_history: tuple[float, ...] = ()

    def _standardize(self, feats: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(feats) - self.scaler_mean) / self.scaler_std

    def predict_features(self, feats: np.ndarray) -> np.ndarray:
        """Predict seconds for one or more raw feature rows."""
        x = self._standardize(np.asarray(feats, dtype=float))
        if self.degenerate:
            pred = np.full(len(x), self.bias)
        else:
            gram = rbf_kernel(x, self.supports, self.sigma)
            pred = gram @ self.coeffs + self.bias
        return np.maximum(pred, PREDICTION_FLOOR_S)

    def predict(self, node: NodeSpec, task: TaskSpec) -> float:
        return float(self.predict_features(features_for(node, task))[0])

    def predict_matrix(self, nodes: list[NodeSpec], tasks: list[TaskSpec]) -> np.ndarray:
        """(len(nodes), len(tasks)) prediction matrix in one kernel pass."""
        feats = np.array(
            [features_for(n, t) for n in nodes for t in tasks], dtype=float
        )
        return self.predict_features(feats).reshape(len(nodes), len(tasks))


def fit_kernel(
    records: list[ExecRecord],
    sigma: float = 1.0,
    learning_rate: float = 0.05,
    epochs: int = 400,
    s_max: int = 512,
    seed: int = 0,
) -> KernelModel:
    """Train a KernelModel by gradient descent on mean squared error.

    Records beyond `s_max` are thinned by reservoir sampling so prediction
    cost stays bounded. Degenerate inputs (all-identical features) collapse
    to a bias-only model flagged `degenerate`.
    """
    if len(records) < 2:
        raise ValueError("need at least 2 records to fit")
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    if not 0.01 <= learning_rate <= 0.1:
        raise ValueError("learning_rate must be in [0.01, 0.1]")
    for r in records:
        r.validate()

    if len(records) > s_max:
        rng = np.random.default_rng(seed)
        keep = list(range(s_max))
        for i in range(s_max, len(records)):
            j = int(rng.integers(0, i + 1))
            if j < s_max:
                keep[j] = i
        records = [records[i] for i in sorted(keep)]

    feats = np.array([r.features for r in records], dtype=float)
    targets = np.array([r.observed_time_s for r in records], dtype=float)

    mean = feats.mean(axis=0)
    std = feats.std(axis=0)
    std[std == 0.0] = 1.0

    if np.allclose(feats, feats[0]):
        return KernelModel(
            supports=np.zeros((0, 4)),
            coeffs=np.zeros(0),
            bias=float(targets.mean()),
            sigma=sigma,
            learning_rate=learning_rate,
            scaler_mean=mean,
            scaler_std=std,
            degenerate=True,
        )

    x = (feats - mean) / std
    gram = rbf_kernel(x, x, sigma)
    coeffs = np.zeros(len(records))
    bias = float(targets.mean())
    history = []
    for _ in range(epochs):
        loss, grad_w, grad_b = loss_and_gradient(coeffs, bias, gram, targets)
        history.append(loss)
        coeffs = coeffs - learning_rate * grad_w
        bias = bias - learning_rate * grad_b
    history.append(loss_and_gradient(coeffs, bias, gram, targets)[0])

    return KernelModel(
        supports=x,
        coeffs=coeffs,
        bias=bias,
        sigma=sigma,
        learning_rate=learning_rate,
        scaler_mean=mean,
        scaler_std=std,
        loss_history=tuple(history),
    )


@dataclass(frozen=True)
class LinearModel:
    """T = slope * demand + intercept; node-agnostic by design."""

    slope: float = 0.5
    intercept: float = 0.1
    noise_std: float = 0.1

    def validate(self) -> None:
        # prediction must stay positive over demand in (0, 1]
        if self.intercept <= 0 or self.slope + self.intercept <= 0:
            raise ValueError("linear model must predict > 0 on (0, 1]")

    def predict(self, node: NodeSpec, task: TaskSpec) -> float:
        return max(self.slope * task.resource_demand + self.intercept, PREDICTION_FLOOR_S)

    def predict_matrix(self, nodes: list[NodeSpec], tasks: list[TaskSpec]) -> np.ndarray:
        row = np.array([self.predict(None, t) for t in tasks])
        return np.tile(row, (len(nodes), 1))


def efficiency(model, node: NodeSpec, task: TaskSpec) -> float:
    """Observed-data-per-second rate under ideal locality: MB / predicted s."""
    t = model.predict(node, task)
    if not np.isfinite(t) or t <= 0:
        raise ValueError(f"non-positive prediction for node {node.id}")
    return task.block_mb / t


@dataclass(frozen=True)
class FeatureRegression:
    """Multiple linear regression over [m, cpu, mem, io] (plus intercept),
    solved in closed form. Used by the reservation-first-fit baseline."""

    theta: np.ndarray  # (5,) — intercept first

    def predict(self, node: NodeSpec, task: TaskSpec) -> float:
        x = features_for(node, task)
        return max(float(self.theta[0] + x @ self.theta[1:]), PREDICTION_FLOOR_S)

    def predict_matrix(self, nodes: list[NodeSpec], tasks: list[TaskSpec]) -> np.ndarray:
        feats = np.array(
            [features_for(n, t) for n in nodes for t in tasks], dtype=float
        )
        pred = self.theta[0] + feats @ self.theta[1:]
        return np.maximum(pred, PREDICTION_FLOOR_S).reshape(len(nodes), len(tasks))


def fit_feature_regression(records: list[ExecRecord]) -> FeatureRegression:
    if len(records) < 2:
        raise ValueError("need at least 2 records to fit")
    feats = np.array([r.features for r in records], dtype=float)
    targets = np.array([r.observed_time_s for r in records], dtype=float)
    design = np.column_stack([np.ones(len(records)), feats])
    theta, *_ = np.linalg.lstsq(design, targets, rcond=None)
    return FeatureRegression(theta=theta)


def save_model(model: KernelModel, path: str) -> None:
    payload = {
        "supports": model.supports.tolist(),
        "coeffs": model.coeffs.tolist(),
        "bias": model.bias,
        "sigma": model.sigma,
        "learning_rate": model.learning_rate,
        "scaler_mean": model.scaler_mean.tolist(),
        "scaler_std": model.scaler_std.tolist(),
        "degenerate": model.degenerate,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_model(path: str) -> KernelModel:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    return KernelModel(
        supports=np.array(payload["supports"], dtype=float).reshape(-1, 4),
        coeffs=np.array(payload["coeffs"], dtype=float),
        bias=float(payload["bias"]),
        sigma=float(payload["sigma"]),
        learning_rate=float(payload["learning_rate"]),
        scaler_mean=np.array(payload["scaler_mean"], dtype=float),
        scaler_std=np.array(payload["scaler_std"], dtype=float),
        degenerate=bool(payload["degenerate"]),
    )
