"""Experiment orchestration: baselines, anomaly benchmark, AL sweeps.

Runs are persisted as JSON-lines (one RunRecord per line) with CSV
summary tables alongside. Every record embeds its config, seed, dataset
digest, and any in-band deviations (e.g. OCSVM reference subsampling),
so a record can be re-run to regenerate an identical metric series.
"""

from __future__ import annotations

import csv
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import active_learning as al
from . import dataset as ds
from . import detectors, metrics
from .classifiers import predict_scores, train_classifier, train_forest
from .errors import ConfigError, IoError, SchemaVersionMismatch

TOOLKIT_VERSION = "0.1.0"
RECORD_SCHEMA = "chainsift-run/1"

DEFAULT_SEEDS = [1, 2, 3, 4, 5]
DEFAULT_CONTAMINATION_GRID = [0.05, 0.10, 0.15, 0.20]
FULL_CONTAMINATION_GRID = [round(0.05 * i, 2) for i in range(1, 21)]

# methods whose scores do not depend on the seed; benchmarked once
DETERMINISTIC_METHODS = {
    detectors.Method.KNN, detectors.Method.LOF, detectors.Method.PCA,
    detectors.Method.ABOD, detectors.Method.ELLIPTIC,
}


@dataclass(frozen=True)
class RunRecord:
    config: dict
    seed: int
    series: dict  # name -> MetricSeries dict
    wall_clock_seconds: float
    toolkit_version: str
    dataset_digest: str
    deviations: list[str] = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"schema": RECORD_SCHEMA, "config": self.config,
                "seed": self.seed, "series": self.series,
                "wall_clock_seconds": self.wall_clock_seconds,
                "toolkit_version": self.toolkit_version,
                "dataset_digest": self.dataset_digest,
                "deviations": list(self.deviations),
                "extras": self.extras}

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        if d.get("schema") != RECORD_SCHEMA:
            raise SchemaVersionMismatch(d.get("schema"), RECORD_SCHEMA)
        return cls(config=d["config"], seed=d["seed"], series=d["series"],
                   wall_clock_seconds=d["wall_clock_seconds"],
                   toolkit_version=d["toolkit_version"],
                   dataset_digest=d["dataset_digest"],
                   deviations=list(d.get("deviations", [])),
                   extras=d.get("extras", {}))


@dataclass
class ExperimentConfig:
    kind: str  # baselines | anomaly | al
    data_dir: str | None = None
    boundary: int = ds.DEFAULT_BOUNDARY
    undersample_rate: float | None = None
    seeds: list[int] = field(default_factory=lambda: list(DEFAULT_SEEDS))
    classifiers: list[str] = field(default_factory=lambda: ["LR", "RF", "GBT"])
    detectors: list[str] = field(
        default_factory=lambda: [m.value for m in detectors.Method])
    contamination_grid: list[float] = field(
        default_factory=lambda: list(DEFAULT_CONTAMINATION_GRID))
    al_grid: list[dict] = field(default_factory=list)
    jobs: int = 1

    def validate(self) -> None:
        if self.kind not in ("baselines", "anomaly", "al"):
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if not self.seeds:
            raise ConfigError("seeds must be nonempty")
        if self.kind == "baselines" and not self.classifiers:
            raise ConfigError("classifier list must be nonempty")
        if self.kind == "anomaly":
            if not self.detectors:
                raise ConfigError("detector list must be nonempty")
            if not self.contamination_grid:
                raise ConfigError("contamination grid must be nonempty")
            bad = [c for c in self.contamination_grid if not 0 <= c <= 1]
            if bad:
                raise ConfigError(f"contamination levels outside [0,1]: {bad}")
            for name in self.detectors:
                detectors.Method(name)
        if self.kind == "al" and not self.al_grid:
            raise ConfigError("al grid must be nonempty")
        if self.undersample_rate is not None \
                and not 0 < self.undersample_rate < 1:
            raise ConfigError("undersample rate must be in (0, 1)")

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**raw)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return {f: getattr(self, f) for f in self.__dataclass_fields__}


def load_split(config: ExperimentConfig, seed: int | None = None):
    data = ds.load_dataset_dir(config.data_dir)
    split = ds.temporal_split(data, config.boundary)
    if config.undersample_rate is not None:
        split = ds.undersample_illicit(split, config.undersample_rate,
                                       seed if seed is not None else
                                       config.seeds[0])
    return split


def _map_cells(fn, cells, jobs: int):
    if jobs <= 1:
        return [fn(c) for c in cells]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, cells))


def run_baselines(config: ExperimentConfig, split=None) -> list[RunRecord]:
    """Train each classifier over all seeds; record global and per-step F1."""
    config.validate()
    if split is None:
        split = load_split(config)

    def cell(args) -> RunRecord:
        name, seed = args
        start = time.perf_counter()
        model = train_classifier(name, split.train.features, split.train.labels,
                                 seed=seed)
        scores = predict_scores(model, split.test.features)
        preds = (scores >= 0.5).astype(np.int64)
        f1, precision, recall, _ = metrics.illicit_f1(split.test.labels, preds)
        per_step = metrics.per_timestep_f1(split.test.labels, preds,
                                           split.test.time_steps)
        return RunRecord(
            config={"kind": "baselines", "classifier": name,
                    "boundary": split.boundary,
                    "undersample_rate": config.undersample_rate},
            seed=seed,
            series={"per_time_step": per_step.to_dict()},
            wall_clock_seconds=time.perf_counter() - start,
            toolkit_version=TOOLKIT_VERSION,
            dataset_digest=split.source_digest,
            extras={"test_f1": f1, "test_precision": precision,
                    "test_recall": recall},
        )

    cells = [(name, seed) for name in config.classifiers
             for seed in config.seeds]
    return _map_cells(cell, cells, config.jobs)


def run_anomaly_bench(config: ExperimentConfig, split=None) -> list[RunRecord]:
    """Fit each detector on train, score test, sweep contamination levels.

    Includes the supervised RF row, thresholded at the same alert rates.
    Deterministic detectors run once (first seed only).
    """
    config.validate()
    if split is None:
        split = load_split(config)
    grid = sorted(config.contamination_grid)

    def detector_cell(args) -> RunRecord:
        name, seed = args
        start = time.perf_counter()
        spec = detectors.DetectorSpec(method=detectors.Method(name), seed=seed)
        result = detectors.fit_score(spec, split.train.features,
                                     split.test.features)
        series = metrics.contamination_sweep(result.scores, split.test.labels,
                                             grid)
        return RunRecord(
            config={"kind": "anomaly", "detector": name,
                    "spec": spec.to_dict(), "boundary": split.boundary,
                    "contamination_grid": grid},
            seed=seed,
            series={"contamination": series.to_dict()},
            wall_clock_seconds=time.perf_counter() - start,
            toolkit_version=TOOLKIT_VERSION,
            dataset_digest=split.source_digest,
            deviations=list(result.deviations),
        )

    def rf_cell(seed: int) -> RunRecord:
        start = time.perf_counter()
        model = train_forest(split.train.features, split.train.labels,
                             seed=seed)
        scores = predict_scores(model, split.test.features)
        series = metrics.contamination_sweep(scores, split.test.labels, grid)
        return RunRecord(
            config={"kind": "anomaly", "detector": "RF_BASELINE",
                    "boundary": split.boundary, "contamination_grid": grid},
            seed=seed,
            series={"contamination": series.to_dict()},
            wall_clock_seconds=time.perf_counter() - start,
            toolkit_version=TOOLKIT_VERSION,
            dataset_digest=split.source_digest,
        )

    cells = []
    for name in config.detectors:
        if detectors.Method(name) in DETERMINISTIC_METHODS:
            cells.append((name, config.seeds[0]))
        else:
            cells.extend((name, seed) for seed in config.seeds)
    records = _map_cells(detector_cell, cells, config.jobs)
    records.extend(_map_cells(rf_cell, config.seeds, config.jobs))
    return records


def run_al_sweep(config: ExperimentConfig, split=None) -> list[RunRecord]:
    """Cartesian product of AL setups x seeds via the simulated oracle."""
    config.validate()
    if split is None:
        split = load_split(config)

    def cell(args) -> RunRecord:
        setup, seed = args
        al_config = al.AlConfig.from_dict({**setup, "seed": seed})
        record = al.run_simulated(al_config, split)
        merged = dict(record.config)
        merged["undersample_rate"] = config.undersample_rate
        return RunRecord(config=merged, seed=record.seed, series=record.series,
                         wall_clock_seconds=record.wall_clock_seconds,
                         toolkit_version=record.toolkit_version,
                         dataset_digest=record.dataset_digest,
                         deviations=record.deviations, extras=record.extras)

    cells = [(setup, seed) for setup in config.al_grid
             for seed in config.seeds]
    return _map_cells(cell, cells, config.jobs)


def run_experiment(config: ExperimentConfig) -> list[RunRecord]:
    config.validate()
    if config.kind == "baselines":
        return run_baselines(config)
    if config.kind == "anomaly":
        return run_anomaly_bench(config)
    return run_al_sweep(config)


# --- persistence --------------------------------------------------------------

RUNS_FILENAME = "runs.jsonl"


def write_records(records: list[RunRecord], out_dir) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / RUNS_FILENAME
    with open(path, "w") as f:
        for record in records:
            f.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")
    return path


def read_records(in_dir) -> list[RunRecord]:
    path = Path(in_dir) / RUNS_FILENAME
    if not path.exists():
        raise IoError(f"no {RUNS_FILENAME} in {in_dir}")
    records = []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                records.append(RunRecord.from_dict(json.loads(line)))
            except json.JSONDecodeError as exc:
                raise IoError(f"corrupted record at line {lineno}: {exc}") \
                    from exc
    return records


# --- summaries ------------------------------------------------------------------

def _check_digests(records: list[RunRecord]) -> list[str]:
    digests = {r.dataset_digest for r in records}
    if len(digests) > 1:
        return [f"records span {len(digests)} distinct dataset digests"]
    return []


def summarize_baselines(records: list[RunRecord]) -> list[dict]:
    rows = []
    by_name: dict[str, list[float]] = {}
    for r in records:
        if r.config.get("kind") != "baselines":
            continue
        name = r.config["classifier"]
        rows.append({"classifier": name, "seed": r.seed,
                     "test_f1": r.extras["test_f1"]})
        by_name.setdefault(name, []).append(r.extras["test_f1"])
    for name, vals in sorted(by_name.items()):
        rows.append({"classifier": name, "seed": "mean",
                     "test_f1": float(np.mean(vals))})
    return rows


def summarize_anomaly(records: list[RunRecord]) -> list[dict]:
    """Table-1-shaped rows: one per detector, F1 columns per level (means
    across seeds for stochastic detectors)."""
    grouped: dict[str, list[RunRecord]] = {}
    for r in records:
        if r.config.get("kind") == "anomaly":
            grouped.setdefault(r.config["detector"], []).append(r)
    rows = []
    for name, group in sorted(grouped.items()):
        series = [metrics.MetricSeries.from_dict(r.series["contamination"])
                  for r in group]
        xs = series[0].xs
        mean_f1 = np.mean([s.f1 for s in series], axis=0)
        row = {"detector": name}
        row.update({f"f1_at_{x}pct": float(v) for x, v in zip(xs, mean_f1)})
        rows.append(row)
    return rows


def _al_group_key(r: RunRecord) -> tuple:
    cfg = r.config["al"]
    return (cfg["warmup"], cfg["hot"], cfg["classifier"],
            r.config.get("undersample_rate"))


def summarize_al(records: list[RunRecord],
                 pool_sizes=(200, 500, 1000, 1500, 3000)) -> list[dict]:
    """Table-2-shaped rows, emitting both mean and median across seeds."""
    grouped: dict[tuple, list[RunRecord]] = {}
    for r in records:
        if r.config.get("kind") == "al":
            grouped.setdefault(_al_group_key(r), []).append(r)
    rows = []
    for key, group in sorted(grouped.items(), key=lambda kv: str(kv[0])):
        warmup, hot, classifier, rate = key
        series = [metrics.MetricSeries.from_dict(r.series["learning_curve"])
                  for r in group]
        row = {"warmup": warmup, "hot": hot, "classifier": classifier,
               "undersample_rate": "" if rate is None else rate,
               "n_seeds": len(group)}
        for size in pool_sizes:
            vals = [s.f1[s.xs.index(size)] for s in series if size in s.xs]
            if vals:
                row[f"mean_f1_at_{size}"] = float(np.mean(vals))
                row[f"median_f1_at_{size}"] = float(np.median(vals))
        rows.append(row)
    return rows


def _write_csv(path: Path, rows: list[dict]) -> None:
    if not rows:
        return
    fields: list[str] = []
    for row in rows:
        for k in row:
            if k not in fields:
                fields.append(k)
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)


def write_summaries(records: list[RunRecord], out_dir) -> list[str]:
    """Emit table1.csv / table2.csv / baselines.csv / curves/*.csv.

    Returns provenance warnings (mixed dataset digests)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    warnings = _check_digests(records)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    _write_csv(out_dir / "baselines.csv", summarize_baselines(records))
    _write_csv(out_dir / "table1.csv", summarize_anomaly(records))
    _write_csv(out_dir / "table2.csv", summarize_al(records))

    curves_dir = out_dir / "curves"
    grouped: dict[tuple, list[RunRecord]] = {}
    for r in records:
        if r.config.get("kind") == "al":
            grouped.setdefault(_al_group_key(r), []).append(r)
    for key, group in grouped.items():
        series = [metrics.MetricSeries.from_dict(r.series["learning_curve"])
                  for r in group]
        try:
            band = metrics.aggregate_runs(series)
        except Exception:
            continue
        curves_dir.mkdir(parents=True, exist_ok=True)
        warmup, hot, classifier, rate = key
        stem = f"{classifier}_{warmup}_{hot}" + (
            f"_rate{rate}" if rate is not None else "")
        rows = [{"x": x, "f1_median": m, "band_lo": lo, "band_hi": hi}
                for x, m, lo, hi in zip(band.xs, band.median, band.lower,
                                        band.upper)]
        _write_csv(curves_dir / f"{stem}.csv", rows)
    return warnings
