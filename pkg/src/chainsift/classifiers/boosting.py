"""Stagewise second-order gradient boosting on log-loss.

Each round fits a depth-limited regression tree to the gradient and
hessian of the log-loss at the current margin; leaves take damped
Newton steps scaled by the learning rate. Training is deterministic
(no row or column subsampling).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch, SingleClassPool
from .logistic import sigmoid
from .tree import TreeNodes, grow_regression_tree, tree_predict


@dataclass(frozen=True)
class BoostedConfig:
    n_rounds: int = 100
    max_depth: int = 3
    learning_rate: float = 0.1
    reg_lambda: float = 1.0
    min_leaf: int = 1


@dataclass(frozen=True)
class BoostedModel:
    trees: list[TreeNodes]
    base_score: float  # log-odds of the training positive rate
    n_features: int
    config: BoostedConfig


def train_boosted(X, y, config: BoostedConfig | None = None,
                  seed: int = 0) -> BoostedModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(np.unique(y)) < 2:
        raise SingleClassPool("boosting needs both classes")
    config = config or BoostedConfig()
    pos_rate = float(np.clip(y.mean(), 1e-12, 1 - 1e-12))
    base = math.log(pos_rate / (1.0 - pos_rate))
    margin = np.full(X.shape[0], base)
    trees: list[TreeNodes] = []
    for _ in range(config.n_rounds):
        p = sigmoid(margin)
        grad = p - y
        hess = p * (1.0 - p)
        tree = grow_regression_tree(
            X, grad, hess, max_depth=config.max_depth,
            min_leaf=config.min_leaf, reg_lambda=config.reg_lambda)
        trees.append(tree)
        margin = margin + config.learning_rate * tree_predict(tree, X)
    return BoostedModel(trees=trees, base_score=base, n_features=X.shape[1],
                        config=config)


def boosted_margin(model: BoostedModel, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.n_features:
        raise DimensionMismatch(
            f"features {X.shape[1]} != model dim {model.n_features}")
    margin = np.full(X.shape[0], model.base_score)
    for tree in model.trees:
        margin += model.config.learning_rate * tree_predict(tree, X)
    return margin


def boosted_scores(model: BoostedModel, X: np.ndarray) -> np.ndarray:
    return sigmoid(boosted_margin(model, X))
