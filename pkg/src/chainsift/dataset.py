"""Elliptic-format dataset loading, validation, temporal splitting, resampling.

File layout follows the published Kaggle distribution: a headerless
features CSV (tx_id + 166 feature columns, the first feature being the
time-step), a classes CSV with header and tokens "1" (illicit),
"2" (licit), "unknown", and an optional edge-list CSV that is digest-
checked but otherwise ignored (every method here consumes only the
precomputed features).

All operations are pure: they return new values and never mutate input.
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import (
    BoundaryOutOfRange,
    DanglingClassRow,
    DuplicateTxId,
    EmptySide,
    MalformedRow,
    MissingFile,
    TargetRateAboveCurrent,
    UnknownClassToken,
)

N_FEATURES = 166
N_TIME_STEPS = 49

FEATURES_FILENAME = "elliptic_txs_features.csv"
CLASSES_FILENAME = "elliptic_txs_classes.csv"
EDGELIST_FILENAME = "elliptic_txs_edgelist.csv"

DATA_DIR_ENV = "CHAINSIFT_DATA_DIR"


class Label(enum.Enum):
    ILLICIT = "illicit"
    LICIT = "licit"
    UNKNOWN = "unknown"


_CLASS_TOKENS = {"1": Label.ILLICIT, "2": Label.LICIT, "unknown": Label.UNKNOWN}


@dataclass(frozen=True)
class TransactionRecord:
    tx_id: int
    time_step: int
    features: np.ndarray  # 166 reals, finite
    label: Label


class Dataset:
    """Columnar transaction store, ordered by ascending tx_id.

    Row order and the content digest are canonical: permuting the input
    file rows yields an identical Dataset.
    """

    def __init__(self, tx_ids: np.ndarray, time_steps: np.ndarray,
                 features: np.ndarray, labels: list[Label], source_digest: str):
        order = np.argsort(tx_ids, kind="stable")
        self.tx_ids = tx_ids[order]
        self.time_steps = time_steps[order]
        self.features = features[order]
        self.labels = np.array([labels[i].value for i in order], dtype=object)
        self.source_digest = source_digest
        if len(np.unique(self.tx_ids)) != len(self.tx_ids):
            dupes = self.tx_ids[np.flatnonzero(np.diff(self.tx_ids) == 0)]
            raise DuplicateTxId(int(dupes[0]))

    def __len__(self) -> int:
        return len(self.tx_ids)

    def record(self, i: int) -> TransactionRecord:
        return TransactionRecord(
            tx_id=int(self.tx_ids[i]),
            time_step=int(self.time_steps[i]),
            features=self.features[i],
            label=Label(self.labels[i]),
        )

    def records(self):
        return (self.record(i) for i in range(len(self)))

    def label_counts(self) -> dict[str, int]:
        return {lab.value: int(np.sum(self.labels == lab.value)) for lab in Label}

    def manifest(self) -> dict:
        """Dataset manifest: class counts, per-time-step counts, digest."""
        per_step = {}
        for step in np.unique(self.time_steps):
            mask = self.time_steps == step
            per_step[int(step)] = {
                "total": int(mask.sum()),
                "illicit": int(np.sum(mask & (self.labels == Label.ILLICIT.value))),
                "licit": int(np.sum(mask & (self.labels == Label.LICIT.value))),
            }
        return {
            "total": len(self),
            "labels": self.label_counts(),
            "per_time_step": per_step,
            "source_digest": self.source_digest,
        }


@dataclass(frozen=True)
class LabeledFrame:
    """Labeled records as aligned arrays; labels are 1=illicit, 0=licit."""

    tx_ids: np.ndarray
    time_steps: np.ndarray
    features: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return len(self.tx_ids)

    @property
    def illicit_rate(self) -> float:
        return float(self.labels.mean()) if len(self) else 0.0


@dataclass(frozen=True)
class DatasetSplit:
    train: LabeledFrame  # time_step <= boundary
    test: LabeledFrame  # time_step > boundary
    boundary: int
    source_digest: str = ""


def _file_digest(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _canonical_digest(tx_ids, time_steps, features, labels) -> str:
    """Digest of the canonical (tx_id-sorted) record stream."""
    order = np.argsort(tx_ids, kind="stable")
    h = hashlib.sha256()
    for i in order:
        h.update(int(tx_ids[i]).to_bytes(8, "little", signed=True))
        h.update(int(time_steps[i]).to_bytes(2, "little"))
        h.update(np.ascontiguousarray(features[i], dtype=np.float64).tobytes())
        h.update(labels[i].value.encode())
    return h.hexdigest()


def load_dataset(features_path, classes_path, edges_path=None) -> Dataset:
    """Load and validate the three Elliptic CSV files.

    The time-step is the first raw feature column and stays in the
    feature matrix (models train on all 166 features).
    """
    features_path = Path(features_path)
    classes_path = Path(classes_path)
    for p in (features_path, classes_path):
        if not p.exists():
            raise MissingFile(p)
    if edges_path is not None:
        edges_path = Path(edges_path)
        if not edges_path.exists():
            raise MissingFile(edges_path)
        _file_digest(edges_path)  # accepted and digest-checked, unused

    try:
        feat_df = pd.read_csv(features_path, header=None, dtype=np.float64)
    except ValueError as exc:
        raise MalformedRow("?", f"non-numeric feature value ({exc})") from exc
    if feat_df.shape[1] != N_FEATURES + 1:
        raise MalformedRow(1, f"expected {N_FEATURES + 1} columns, "
                              f"got {feat_df.shape[1]}")
    if feat_df.isna().any().any():
        bad = int(feat_df.isna().any(axis=1).idxmax()) + 1
        raise MalformedRow(bad, "missing or non-numeric feature value")
    values = feat_df.to_numpy()
    if not np.isfinite(values).all():
        bad = int(np.flatnonzero(~np.isfinite(values).all(axis=1))[0]) + 1
        raise MalformedRow(bad, "non-finite feature value")

    tx_ids = values[:, 0]
    if not np.array_equal(tx_ids, np.round(tx_ids)):
        raise MalformedRow(1, "non-integer tx_id")
    tx_ids = tx_ids.astype(np.int64)
    features = values[:, 1:]
    time_steps = features[:, 0].astype(np.int64)
    if np.any((time_steps < 1) | (time_steps > N_TIME_STEPS)):
        bad = int(np.flatnonzero((time_steps < 1) | (time_steps > N_TIME_STEPS))[0]) + 1
        raise MalformedRow(bad, "time-step outside 1..49")

    cls_df = pd.read_csv(classes_path, dtype=str)
    if cls_df.shape[1] != 2:
        raise MalformedRow(1, f"classes file needs 2 columns, got {cls_df.shape[1]}")
    class_map: dict[int, Label] = {}
    for i, (tid_str, token) in enumerate(cls_df.itertuples(index=False), start=2):
        try:
            tid = int(tid_str)
        except (TypeError, ValueError) as exc:
            raise MalformedRow(i, f"non-integer tx_id {tid_str!r}") from exc
        if token not in _CLASS_TOKENS:
            raise UnknownClassToken(token)
        if tid in class_map:
            raise DuplicateTxId(tid)
        class_map[tid] = _CLASS_TOKENS[token]

    known = set(int(t) for t in tx_ids)
    for tid in class_map:
        if tid not in known:
            raise DanglingClassRow(tid)

    labels = [class_map.get(int(t), Label.UNKNOWN) for t in tx_ids]
    digest = _canonical_digest(tx_ids, time_steps, features, labels)
    return Dataset(tx_ids, time_steps, features, labels, digest)


def load_dataset_dir(data_dir=None) -> Dataset:
    """Load from a directory holding the standard Kaggle filenames."""
    root = Path(data_dir or os.environ.get(DATA_DIR_ENV, "."))
    edges = root / EDGELIST_FILENAME
    return load_dataset(root / FEATURES_FILENAME, root / CLASSES_FILENAME,
                        edges if edges.exists() else None)


DEFAULT_BOUNDARY = 34


def temporal_split(dataset: Dataset, boundary: int = DEFAULT_BOUNDARY) -> DatasetSplit:
    """Partition labeled records by time-step; unknowns appear on neither side."""
    if not (1 <= boundary < N_TIME_STEPS):
        raise BoundaryOutOfRange(boundary)
    labeled = dataset.labels != Label.UNKNOWN.value
    illicit = dataset.labels == Label.ILLICIT.value

    def side(mask) -> LabeledFrame:
        idx = np.flatnonzero(mask)
        return LabeledFrame(
            tx_ids=dataset.tx_ids[idx].copy(),
            time_steps=dataset.time_steps[idx].copy(),
            features=dataset.features[idx].copy(),
            labels=illicit[idx].astype(np.int64),
        )

    train = side(labeled & (dataset.time_steps <= boundary))
    test = side(labeled & (dataset.time_steps > boundary))
    if len(train) == 0:
        raise EmptySide("train")
    if len(test) == 0:
        raise EmptySide("test")
    return DatasetSplit(train=train, test=test, boundary=boundary,
                        source_digest=dataset.source_digest)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _target_illicit_count(n_licit: int, n_illicit: int, rate: float) -> int:
    """Smallest k with k = round_half_up(rate * (n_licit + k)).

    Exhaustive over k; falls back to the closest fixpoint when the
    rounding equation has no exact solution.
    """
    best_k, best_gap = 0, float("inf")
    for k in range(n_illicit + 1):
        want = _round_half_up(rate * (n_licit + k))
        if want == k:
            return k
        gap = abs(want - k)
        if gap < best_gap:
            best_k, best_gap = k, gap
    return best_k


def undersample_illicit(split: DatasetSplit, target_illicit_rate: float,
                        seed: int) -> DatasetSplit:
    """Randomly drop illicit records until each side hits the target rate.

    Applied independently to train and test; licit records untouched;
    deterministic per seed. Rounding is half-up (ties do not occur with
    the real data, documented anyway).
    """
    if not (0.0 < target_illicit_rate < 1.0):
        raise TargetRateAboveCurrent(target_illicit_rate, 1.0)
    rng = np.random.Generator(np.random.PCG64(int(seed)))

    def shrink(frame: LabeledFrame) -> LabeledFrame:
        current = frame.illicit_rate
        if target_illicit_rate > current:
            raise TargetRateAboveCurrent(target_illicit_rate, current)
        illicit_idx = np.flatnonzero(frame.labels == 1)
        licit_idx = np.flatnonzero(frame.labels == 0)
        keep_n = _target_illicit_count(len(licit_idx), len(illicit_idx),
                                       target_illicit_rate)
        kept_illicit = rng.choice(illicit_idx, size=keep_n, replace=False)
        keep = np.sort(np.concatenate([licit_idx, kept_illicit]))
        return LabeledFrame(
            tx_ids=frame.tx_ids[keep].copy(),
            time_steps=frame.time_steps[keep].copy(),
            features=frame.features[keep].copy(),
            labels=frame.labels[keep].copy(),
        )

    return DatasetSplit(train=shrink(split.train), test=shrink(split.test),
                        boundary=split.boundary, source_digest=split.source_digest)


def write_manifest(dataset: Dataset, path) -> None:
    Path(path).write_text(json.dumps(dataset.manifest(), indent=2, sort_keys=True))
