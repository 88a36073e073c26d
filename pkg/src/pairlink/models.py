"""Linear classifiers trained by deterministic full-batch gradient descent.

Two loss functions, both written out by hand: the logistic log-loss and the
linear-SVM hinge loss, each with an L2 penalty on the weights (never on the
bias). Training is full-batch with a 1/sqrt(epoch) learning-rate decay, so
a run is a pure function of (data, config): no shuffling, no stochastic
minibatches, and every reduction happens in a fixed order, which makes
models bit-for-bit reproducible across partition layouts and worker counts.

Scores are probabilities for the logistic model (decision threshold 0.5)
and raw margins for the SVM (threshold 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, NumericError, ShapeError, TrainingError
from .preprocess import FeatureMatrix

__all__ = [
    "LOSS_KINDS",
    "TrainConfig",
    "TrainedModel",
    "loss_and_gradient",
    "train",
    "predict",
    "save_model",
    "load_model",
]

LOSS_KINDS = ("logistic", "hinge")
MODEL_FORMAT_HEADER = "pairlink-model v1"


@dataclass(slots=True, frozen=True)
class TrainConfig:
    """Hyperparameters for gradient-descent training.

    The defaults are sized for heavily imbalanced comparison data (a few
    percent positives after rebalancing): under the 1/sqrt(epoch) decay the
    optimizer needs a few thousand full-batch steps before minority-class
    logits cross the decision threshold, and an L2 strength much above 1e-3
    pins the converged weights below that crossing point.
    """

    loss: str = "logistic"
    learning_rate: float = 2.0
    epochs: int = 2000
    l2: float = 0.001
    tolerance: float = 1e-6

    def __post_init__(self):
        if self.loss not in LOSS_KINDS:
            raise ConfigError(f"unknown loss {self.loss!r}; choose from {LOSS_KINDS}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning rate must be > 0, got {self.learning_rate}")
        if not (isinstance(self.epochs, int) and self.epochs >= 1):
            raise ConfigError(f"epochs must be an integer >= 1, got {self.epochs!r}")
        if self.l2 < 0:
            raise ConfigError(f"l2 strength must be >= 0, got {self.l2}")
        if self.tolerance < 0:
            raise ConfigError(f"tolerance must be >= 0, got {self.tolerance}")


@dataclass(slots=True)
class TrainedModel:
    """Linear decision function w.x + b with its training provenance."""

    weights: np.ndarray
    bias: float
    loss: str
    threshold: float
    columns: tuple[str, ...]
    l2: float = 0.0
    learning_rate: float = 1.0
    tolerance: float = 0.0
    epochs_run: int = 0
    converged: bool = False
    final_loss: float = math.nan

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 1 or len(self.weights) != len(self.columns):
            raise ShapeError(
                f"{len(self.weights)} weights for {len(self.columns)} columns"
            )
        if self.loss not in LOSS_KINDS:
            raise ConfigError(f"unknown loss {self.loss!r}; choose from {LOSS_KINDS}")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _check_width(weights: np.ndarray, X: np.ndarray):
    if X.ndim != 2 or X.shape[1] != len(weights):
        raise ShapeError(
            f"feature width {X.shape[1] if X.ndim == 2 else X.shape} does not match "
            f"{len(weights)} model weights"
        )


def _loss_grad(
    w: np.ndarray,
    b: float,
    X: np.ndarray,
    y01: np.ndarray,
    loss: str,
    l2: float,
) -> tuple[float, np.ndarray, float]:
    """Loss value plus gradient wrt (w, b) for one full batch."""
    n = len(y01)
    z = X @ w + b
    if loss == "logistic":
        y = y01.astype(np.float64)
        data_loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
        gz = _sigmoid(z) - y
        grad_w = (X.T @ gz) / n + l2 * w
        grad_b = float(np.mean(gz))
    else:
        ys = y01.astype(np.float64) * 2.0 - 1.0
        margin = 1.0 - ys * z
        active = margin > 0.0  # subgradient 0 exactly at the kink
        data_loss = float(np.mean(np.maximum(margin, 0.0)))
        ys_active = np.where(active, ys, 0.0)
        grad_w = -(X.T @ ys_active) / n + l2 * w
        grad_b = -float(np.sum(ys_active)) / n
    total = data_loss + 0.5 * l2 * float(w @ w)
    return total, grad_w, grad_b


def loss_and_gradient(
    model: TrainedModel,
    matrix: FeatureMatrix,
    epoch: int | None = None,
) -> tuple[float, np.ndarray]:
    """Objective value and its gradient, packed as (weights..., bias).

    The gradient layout matches the flattened parameter vector, which is
    what a finite-difference check perturbs.
    """
    _check_width(model.weights, matrix.X)
    loss, grad_w, grad_b = _loss_grad(
        model.weights, model.bias, matrix.X, matrix.y, model.loss, model.l2
    )
    grad = np.append(grad_w, grad_b)
    if not (math.isfinite(loss) and np.isfinite(grad).all()):
        where = f" at epoch {epoch}" if epoch is not None else ""
        raise NumericError(
            f"non-finite loss or gradient{where}; try a smaller learning rate"
        )
    return loss, grad


def train(matrix: FeatureMatrix, config: TrainConfig = TrainConfig()) -> TrainedModel:
    """Full-batch gradient descent until convergence or the epoch budget.

    Each epoch computes the exact batch gradient and steps with learning
    rate lr/sqrt(epoch). Training stops early once the gradient max-norm
    drops below the tolerance. Raises if the data is empty or single-class,
    or if the objective diverges to a non-finite value.
    """
    X, y = matrix.X, matrix.y
    if len(y) == 0:
        raise TrainingError("cannot train on an empty matrix")
    pos = int(np.sum(y == 1))
    if pos == 0 or pos == len(y):
        raise TrainingError(
            f"training data has a single class ({pos}/{len(y)} positive); "
            "both classes are required"
        )

    model = TrainedModel(
        weights=np.zeros(X.shape[1], dtype=np.float64),
        bias=0.0,
        loss=config.loss,
        threshold=0.5 if config.loss == "logistic" else 0.0,
        columns=matrix.columns,
        l2=config.l2,
        learning_rate=config.learning_rate,
        tolerance=config.tolerance,
    )
    w = model.weights
    b = 0.0
    epochs_run = 0
    converged = False
    for epoch in range(1, config.epochs + 1):
        loss, grad_w, grad_b = _loss_grad(w, b, X, y, config.loss, config.l2)
        if not (math.isfinite(loss) and np.isfinite(grad_w).all() and math.isfinite(grad_b)):
            raise NumericError(
                f"non-finite loss or gradient at epoch {epoch}; try a smaller learning rate"
            )
        gmax = max(float(np.max(np.abs(grad_w))) if len(grad_w) else 0.0, abs(grad_b))
        if gmax < config.tolerance:
            converged = True
            break
        step = config.learning_rate / math.sqrt(epoch)
        w = w - step * grad_w
        b = b - step * grad_b
        epochs_run = epoch

    final_loss, _, _ = _loss_grad(w, b, X, y, config.loss, config.l2)
    if not math.isfinite(final_loss):
        raise NumericError(
            f"non-finite loss after epoch {epochs_run}; try a smaller learning rate"
        )
    model.weights = w
    model.bias = float(b)
    model.epochs_run = epochs_run
    model.converged = converged
    model.final_loss = float(final_loss)
    return model


def predict(model: TrainedModel, matrix: FeatureMatrix) -> tuple[np.ndarray, np.ndarray]:
    """(labels, scores) for every row; scores are probabilities or margins."""
    _check_width(model.weights, matrix.X)
    z = matrix.X @ model.weights + model.bias
    if model.loss == "logistic":
        scores = _sigmoid(z)
    else:
        scores = z
    labels = (scores >= model.threshold).astype(np.int8)
    return labels, scores


def save_model(model: TrainedModel, path: str | Path) -> None:
    """Write the versioned plain-text model file (repr floats, diffable)."""
    lines = [
        MODEL_FORMAT_HEADER,
        f"loss={model.loss}",
        f"threshold={model.threshold!r}",
        f"columns={','.join(model.columns)}",
        "weights=" + ",".join(repr(float(v)) for v in model.weights),
        f"bias={model.bias!r}",
        f"l2={model.l2!r}",
        f"learning_rate={model.learning_rate!r}",
        f"tolerance={model.tolerance!r}",
        f"epochs_run={model.epochs_run}",
        f"converged={model.converged}",
        f"final_loss={model.final_loss!r}",
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> TrainedModel:
    """Read a model file written by save_model; floats round-trip exactly."""
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or lines[0] != MODEL_FORMAT_HEADER:
        raise ConfigError(f"{path}: not a pairlink model file")
    kv = {}
    for line in lines[1:]:
        if not line.strip():
            continue
        key, _, value = line.partition("=")
        kv[key] = value
    try:
        columns = tuple(c for c in kv["columns"].split(",") if c)
        weights = np.array(
            [float(v) for v in kv["weights"].split(",") if v], dtype=np.float64
        )
        return TrainedModel(
            weights=weights,
            bias=float(kv["bias"]),
            loss=kv["loss"],
            threshold=float(kv["threshold"]),
            columns=columns,
            l2=float(kv["l2"]),
            learning_rate=float(kv["learning_rate"]),
            tolerance=float(kv["tolerance"]),
            epochs_run=int(kv["epochs_run"]),
            converged=kv["converged"] == "True",
            final_loss=float(kv["final_loss"]),
        )
    except KeyError as exc:
        raise ConfigError(f"{path}: model file missing field {exc}") from None
