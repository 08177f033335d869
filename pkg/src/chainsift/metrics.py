"""Illicit-class F1 evaluation, contamination thresholding, aggregation.

Conventions, fixed here and tested: any 0/0 in precision/recall/F1 is 0;
the contamination threshold flags exactly floor(c * N) instances, ties
broken by ascending instance index, which makes flag sets nested in c.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import EmptyInput, GridMismatch, LengthMismatch


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


class XMeaning(enum.Enum):
    TIME_STEP = "time_step"
    LABELED_POOL_SIZE = "labeled_pool_size"
    CONTAMINATION_PCT = "contamination_pct"


@dataclass
class MetricSeries:
    xs: list
    f1: list[float]
    precision: list[float]
    recall: list[float]
    x_meaning: XMeaning
    degenerate: list[bool] = field(default_factory=list)

    def __post_init__(self):
        if not self.degenerate:
            self.degenerate = [False] * len(self.xs)
        if any(self.xs[i] >= self.xs[i + 1] for i in range(len(self.xs) - 1)):
            raise GridMismatch("series x values must be strictly increasing")

    def __len__(self) -> int:
        return len(self.xs)

    def to_dict(self) -> dict:
        return {
            "x_meaning": self.x_meaning.value,
            "points": [
                {"x": x, "f1": f, "precision": p, "recall": r, "degenerate": d}
                for x, f, p, r, d in zip(self.xs, self.f1, self.precision,
                                         self.recall, self.degenerate)
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricSeries":
        pts = d["points"]
        return cls(
            xs=[p["x"] for p in pts],
            f1=[p["f1"] for p in pts],
            precision=[p["precision"] for p in pts],
            recall=[p["recall"] for p in pts],
            x_meaning=XMeaning(d["x_meaning"]),
            degenerate=[p.get("degenerate", False) for p in pts],
        )


def _safe_div(num: float, den: float) -> float:
    return num / den if den else 0.0


def illicit_f1(labels, preds) -> tuple[float, float, float, ConfusionCounts]:
    """Precision, recall, F1 for the positive (illicit) class."""
    labels = np.asarray(labels, dtype=np.int64)
    preds = np.asarray(preds, dtype=np.int64)
    if labels.shape != preds.shape:
        raise LengthMismatch(f"{labels.shape} vs {preds.shape}")
    if labels.size == 0:
        raise EmptyInput("no instances to evaluate")
    tp = int(np.sum((labels == 1) & (preds == 1)))
    fp = int(np.sum((labels == 0) & (preds == 1)))
    tn = int(np.sum((labels == 0) & (preds == 0)))
    fn = int(np.sum((labels == 1) & (preds == 0)))
    precision = _safe_div(tp, tp + fp)
    recall = _safe_div(tp, tp + fn)
    f1 = _safe_div(2 * precision * recall, precision + recall)
    return f1, precision, recall, ConfusionCounts(tp, fp, tn, fn)


def threshold_at_contamination(scores, c: float) -> np.ndarray:
    """Flag exactly floor(c * N) top-scored instances as positive.

    The count uses exact rational arithmetic on c so floor never slips
    off an integer boundary through float rounding. Ties are broken by
    ascending index, making flag sets nested across contamination levels.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if not np.isfinite(scores).all():
        raise EmptyInput("scores must be finite")
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"contamination {c} outside [0, 1]")
    n = scores.size
    m = int(Fraction(c).limit_denominator(10**12) * n)  # floor via int()
    order = np.lexsort((np.arange(n), -scores))  # score desc, index asc
    preds = np.zeros(n, dtype=np.int64)
    preds[order[:m]] = 1
    return preds


def contamination_sweep(scores, labels, grid) -> MetricSeries:
    """Illicit F1 across contamination levels; x is the level in percent."""
    xs, f1s, ps, rs = [], [], [], []
    for c in grid:
        preds = threshold_at_contamination(scores, c)
        f1, p, r, _ = illicit_f1(labels, preds)
        xs.append(round(100 * c))
        f1s.append(f1)
        ps.append(p)
        rs.append(r)
    return MetricSeries(xs, f1s, ps, rs, XMeaning.CONTAMINATION_PCT)


def per_timestep_f1(labels, preds, time_steps) -> MetricSeries:
    """One F1 point per distinct time-step.

    Steps with neither true positives nor predicted positives get F1=0
    and are flagged degenerate rather than dropped.
    """
    labels = np.asarray(labels, dtype=np.int64)
    preds = np.asarray(preds, dtype=np.int64)
    time_steps = np.asarray(time_steps, dtype=np.int64)
    if not (labels.shape == preds.shape == time_steps.shape):
        raise LengthMismatch("labels, preds, time_steps must align")
    xs, f1s, ps, rs, degenerate = [], [], [], [], []
    for step in np.unique(time_steps):
        mask = time_steps == step
        f1, p, r, cc = illicit_f1(labels[mask], preds[mask])
        xs.append(int(step))
        f1s.append(f1)
        ps.append(p)
        rs.append(r)
        degenerate.append(cc.tp + cc.fn == 0 and cc.tp + cc.fp == 0)
    return MetricSeries(xs, f1s, ps, rs, XMeaning.TIME_STEP, degenerate)


@dataclass(frozen=True)
class AggregateBand:
    xs: list
    median: list[float]
    lower: list[float]  # 2.5th percentile
    upper: list[float]  # 97.5th percentile


def aggregate_runs(runs: list[MetricSeries]) -> AggregateBand:
    """Pointwise median and empirical 95% band across runs."""
    if not runs:
        raise EmptyInput("no runs to aggregate")
    xs = runs[0].xs
    for r in runs[1:]:
        if r.xs != xs:
            raise GridMismatch("runs do not share an x grid")
    mat = np.array([r.f1 for r in runs], dtype=np.float64)
    return AggregateBand(
        xs=list(xs),
        median=list(np.median(mat, axis=0)),
        lower=list(np.percentile(mat, 2.5, axis=0)),
        upper=list(np.percentile(mat, 97.5, axis=0)),
    )
