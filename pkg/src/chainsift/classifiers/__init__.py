"""Supervised baseline models: logistic regression, random forest, boosting."""

from __future__ import annotations

import json
from dataclasses import asdict

import numpy as np

from ..errors import SchemaVersionMismatch
from .boosting import (
    BoostedConfig,
    BoostedModel,
    boosted_margin,
    boosted_scores,
    train_boosted,
)
from .forest import ForestConfig, ForestModel, forest_scores, train_forest
from .logistic import (
    LogisticConfig,
    LogisticModel,
    logistic_gradient,
    logistic_scores,
    sigmoid,
    train_logistic,
)
from .tree import TreeNodes, tree_predict

MODEL_SCHEMA = "chainsift-model/1"

CLASSIFIER_NAMES = ("LR", "RF", "GBT")


def predict_scores(model, X) -> np.ndarray:
    """Per-row score in [0, 1]; pure and aligned to the row order of X."""
    X = np.asarray(X, dtype=np.float64)
    if X.size == 0:
        return np.zeros(0)
    if isinstance(model, LogisticModel):
        return logistic_scores(model, X)
    if isinstance(model, ForestModel):
        return forest_scores(model, X)
    if isinstance(model, BoostedModel):
        return boosted_scores(model, X)
    raise TypeError(f"unknown model type: {type(model).__name__}")


def train_classifier(name: str, X, y, seed: int = 0):
    if name == "LR":
        return train_logistic(X, y)
    if name == "RF":
        return train_forest(X, y, seed=seed)
    if name == "GBT":
        return train_boosted(X, y, seed=seed)
    raise ValueError(f"unknown classifier: {name}")


def model_to_json(model) -> str:
    if isinstance(model, LogisticModel):
        body = {"kind": "LR", "weights": model.weights.tolist(),
                "bias": model.bias,
                "config": asdict(model.training_config)}
    elif isinstance(model, ForestModel):
        body = {"kind": "RF", "trees": [t.to_lists() for t in model.trees],
                "n_features": model.n_features, "seed": model.seed,
                "config": asdict(model.config)}
    elif isinstance(model, BoostedModel):
        body = {"kind": "GBT", "trees": [t.to_lists() for t in model.trees],
                "base_score": model.base_score, "n_features": model.n_features,
                "config": asdict(model.config)}
    else:
        raise TypeError(f"unknown model type: {type(model).__name__}")
    body["schema"] = MODEL_SCHEMA
    return json.dumps(body)


def model_from_json(text: str):
    body = json.loads(text)
    if body.get("schema") != MODEL_SCHEMA:
        raise SchemaVersionMismatch(body.get("schema"), MODEL_SCHEMA)
    kind = body["kind"]
    if kind == "LR":
        return LogisticModel(weights=np.asarray(body["weights"]),
                             bias=body["bias"],
                             training_config=LogisticConfig(**body["config"]))
    if kind == "RF":
        return ForestModel(trees=[TreeNodes.from_lists(t) for t in body["trees"]],
                           n_features=body["n_features"],
                           config=ForestConfig(**body["config"]),
                           seed=body["seed"])
    if kind == "GBT":
        return BoostedModel(trees=[TreeNodes.from_lists(t) for t in body["trees"]],
                            base_score=body["base_score"],
                            n_features=body["n_features"],
                            config=BoostedConfig(**body["config"]))
    raise SchemaVersionMismatch(kind, "LR|RF|GBT")
