"""Random forest of Gini decision trees; score = fraction voting illicit."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionMismatch, SingleClassPool
from .tree import TreeNodes, grow_classification_tree, tree_predict


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_depth: int | None = None
    min_leaf: int = 1
    max_features: int | str | None = "sqrt"  # per-split feature subsample
    bootstrap: bool = True


@dataclass(frozen=True)
class ForestModel:
    trees: list[TreeNodes]
    n_features: int
    config: ForestConfig
    seed: int

    @property
    def n_trees(self) -> int:
        return len(self.trees)


def _resolve_max_features(spec, d: int) -> int | None:
    if spec is None:
        return None
    if spec == "sqrt":
        return max(1, int(math.isqrt(d)))
    return int(spec)


def train_forest(X, y, config: ForestConfig | None = None,
                 seed: int = 0) -> ForestModel:
    """Bootstrap-sampled Gini trees; deterministic per seed."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(np.unique(y)) < 2:
        raise SingleClassPool("forest training needs both classes")
    config = config or ForestConfig()
    n, d = X.shape
    max_features = _resolve_max_features(config.max_features, d)
    seeds = np.random.SeedSequence(int(seed)).spawn(config.n_trees)
    trees = []
    for ss in seeds:
        rng = np.random.Generator(np.random.PCG64(ss))
        if config.bootstrap:
            idx = rng.integers(0, n, size=n)
            Xt, yt = X[idx], y[idx]
            if len(np.unique(yt)) < 2:
                # degenerate bootstrap: keep the draw but fall back to the
                # full sample so every tree sees both classes
                Xt, yt = X, y
        else:
            Xt, yt = X, y
        trees.append(grow_classification_tree(
            Xt, yt, max_depth=config.max_depth, min_leaf=config.min_leaf,
            max_features=max_features, rng=rng))
    return ForestModel(trees=trees, n_features=d, config=config, seed=int(seed))


def forest_scores(model: ForestModel, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.n_features:
        raise DimensionMismatch(
            f"features {X.shape[1]} != model dim {model.n_features}")
    if X.shape[0] == 0:
        return np.zeros(0)
    votes = np.zeros(X.shape[0])
    for tree in model.trees:
        votes += tree_predict(tree, X)
    return votes / len(model.trees)
