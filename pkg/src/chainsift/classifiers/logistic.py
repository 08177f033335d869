"""L2-regularized logistic regression trained by full-batch gradient descent.

The optimizer is deterministic: zero initialization, Nesterov momentum,
step size 1/L with L estimated by power iteration on X^T X. Training
stops when the gradient norm drops below the tolerance or at the epoch
cap. Regularization strength defaults to 1.0 on the summed loss (i.e.
l2/n on the mean loss), with the bias unpenalized.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionMismatch, SingleClassPool


@dataclass(frozen=True)
class LogisticConfig:
    learning_rate: float | None = None  # None: 1/L from power iteration
    epochs: int = 3000
    l2: float = 1.0
    tol: float = 1e-6


@dataclass(frozen=True)
class LogisticModel:
    weights: np.ndarray
    bias: float
    training_config: LogisticConfig = field(default_factory=LogisticConfig)


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _lipschitz(X: np.ndarray, l2: float) -> float:
    """Upper bound on the mean-loss gradient Lipschitz constant."""
    v = np.ones(X.shape[1] + 1)
    Xb = np.hstack([X, np.ones((X.shape[0], 1))])
    for _ in range(30):
        v = Xb.T @ (Xb @ v)
        norm = np.linalg.norm(v)
        if norm == 0:
            return l2 / X.shape[0] + 1e-12
        v /= norm
    lam_max = float(v @ (Xb.T @ (Xb @ v)))
    return lam_max / (4.0 * X.shape[0]) + l2 / X.shape[0]


def train_logistic(X, y, config: LogisticConfig | None = None,
                   rng=None) -> LogisticModel:
    """Minimize mean log-loss + l2/(2n) * ||w||^2 over (w, b)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(np.unique(y)) < 2:
        raise SingleClassPool("logistic regression needs both classes")
    config = config or LogisticConfig()
    n, d = X.shape
    lr = config.learning_rate or 1.0 / _lipschitz(X, config.l2)
    w = np.zeros(d)
    b = 0.0
    vw, vb = w.copy(), b  # Nesterov lookahead point
    t = 1.0
    for _ in range(config.epochs):
        p = sigmoid(X @ vw + vb)
        gw = (X.T @ (p - y)) / n + (config.l2 / n) * vw
        gb = float(np.mean(p - y))
        w_new = vw - lr * gw
        b_new = vb - lr * gb
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        mom = (t - 1.0) / t_new
        vw = w_new + mom * (w_new - w)
        vb = b_new + mom * (b_new - b)
        w, b, t = w_new, b_new, t_new
        if np.sqrt(float(np.sum(gw * gw)) + gb * gb) < config.tol:
            break
    return LogisticModel(weights=w, bias=float(b), training_config=config)


def logistic_scores(model: LogisticModel, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.weights.shape[0]:
        raise DimensionMismatch(
            f"features {X.shape[1]} != model dim {model.weights.shape[0]}")
    return sigmoid(X @ model.weights + model.bias)


def logistic_gradient(model: LogisticModel, x: np.ndarray, y: int) -> np.ndarray:
    """Gradient of single-example log-loss: (sigma(wx+b) - y) * (x, 1)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != model.weights.shape:
        raise DimensionMismatch(
            f"point dim {x.shape} != model dim {model.weights.shape}")
    residual = float(sigmoid(np.array([x @ model.weights + model.bias]))[0]) - y
    return residual * np.concatenate([x, [1.0]])
