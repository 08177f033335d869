"""Operator entry point for all offline workflows.

Exit codes: 0 success, 1 config error, 2 data error, 3 runtime failure.
Config overrides use dotted-path keys into the JSON config; arrays are
comma lists (e.g. --override seeds=1,2,3).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import bench
from . import dataset as ds
from .errors import ChainsiftError, ConfigError, DataError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3


def _parse_override_value(raw: str):
    def scalar(token: str):
        try:
            return json.loads(token)
        except json.JSONDecodeError:
            return token

    if "," in raw:
        return [scalar(t) for t in raw.split(",")]
    return scalar(raw)


def apply_overrides(config: dict, overrides: list[str]) -> dict:
    """Apply key=value overrides; keys are dotted paths into the config."""
    out = json.loads(json.dumps(config))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, raw = item.split("=", 1)
        parts = key.split(".")
        node = out
        for part in parts[:-1]:
            if not isinstance(node, dict) or part not in node:
                raise ConfigError(f"override key {key!r} not in config")
            node = node[part]
        leaf = parts[-1]
        if not isinstance(node, dict) or leaf not in node:
            raise ConfigError(f"override key {key!r} not in config")
        value = _parse_override_value(raw)
        if isinstance(node[leaf], list) and not isinstance(value, list):
            value = [value]
        node[leaf] = value
    return out


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chainsift",
        description="Illicit-transaction detection toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_data_flags(p):
        p.add_argument("--features", help="features CSV path")
        p.add_argument("--classes", help="classes CSV path")
        p.add_argument("--edges", help="optional edge-list CSV path")
        p.add_argument("--data-dir",
                       default=os.environ.get(ds.DATA_DIR_ENV),
                       help=f"data directory (default ${ds.DATA_DIR_ENV})")

    def add_run_flags(p):
        add_data_flags(p)
        p.add_argument("--config", help="experiment config JSON path")
        p.add_argument("--output", default="out", help="output directory")
        p.add_argument("--override", action="append", default=[],
                       help="dotted-path config override, repeatable")
        p.add_argument("--jobs", type=int, default=1,
                       help="parallel experiment cells")

    p = sub.add_parser("validate", help="load the dataset, print the manifest")
    add_data_flags(p)
    p.add_argument("--output", help="write the manifest JSON here")

    for name, description in (("baseline", "supervised baselines"),
                              ("anomaly", "anomaly-detection benchmark"),
                              ("al", "active-learning sweep")):
        add_run_flags(sub.add_parser(name, help=description))

    p = sub.add_parser("undersample-report",
                       help="achieved illicit rates after undersampling")
    add_data_flags(p)
    p.add_argument("--rates", default="0.02,0.005")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--boundary", type=int, default=ds.DEFAULT_BOUNDARY)
    p.add_argument("--output", help="write the report JSON here")

    p = sub.add_parser("serve", help="start the annotation session service")
    add_data_flags(p)
    p.add_argument("--port", type=int, default=8640)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--demo", action="store_true",
                   help="serve a seeded synthetic dataset")
    p.add_argument("--checkpoint-dir", help="session checkpoint directory")
    p.add_argument("--frontend-dir", help="serve the console from here")
    p.add_argument("--baseline-f1", type=float,
                   help="supervised reference line for the UI")
    return parser


def _load_data(args) -> ds.Dataset:
    if args.features and args.classes:
        return ds.load_dataset(args.features, args.classes, args.edges)
    if args.data_dir:
        return ds.load_dataset_dir(args.data_dir)
    raise ConfigError("provide --features/--classes or --data-dir "
                      f"(or set ${ds.DATA_DIR_ENV})")


def _cmd_validate(args) -> int:
    data = _load_data(args)
    manifest = data.manifest()
    labeled = manifest["labels"]["illicit"] + manifest["labels"]["licit"]
    print(f"total transactions: {manifest['total']:,}")
    print(f"labeled: {labeled:,} "
          f"(illicit {manifest['labels']['illicit']:,}, "
          f"licit {manifest['labels']['licit']:,}, "
          f"unknown {manifest['labels']['unknown']:,})")
    print(f"source digest: {manifest['source_digest']}")
    if args.output:
        Path(args.output).parent.mkdir(parents=True, exist_ok=True)
        ds.write_manifest(data, args.output)
        print(f"manifest written to {args.output}")
    return EXIT_OK


def _experiment_config(args, kind: str) -> bench.ExperimentConfig:
    # start from full defaults so overrides can address any field
    raw = bench.ExperimentConfig(kind=kind).to_dict()
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        loaded = json.loads(path.read_text())
        unknown = set(loaded) - set(raw)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        raw.update(loaded)
        raw.setdefault("kind", kind)
    if args.data_dir and not raw.get("data_dir"):
        raw["data_dir"] = args.data_dir
    raw = apply_overrides(raw, args.override)
    if args.jobs != 1:
        raw["jobs"] = args.jobs
    return bench.ExperimentConfig.from_json(json.dumps(raw))


def _cmd_run(args, kind: str) -> int:
    config = _experiment_config(args, kind)
    records = bench.run_experiment(config)
    out_dir = Path(args.output)
    bench.write_records(records, out_dir)
    bench.write_summaries(records, out_dir)
    print(f"{len(records)} run records written to {out_dir}")
    return EXIT_OK


def _cmd_undersample_report(args) -> int:
    data = _load_data(args)
    split = ds.temporal_split(data, args.boundary)
    rates = [float(r) for r in str(args.rates).split(",")]
    report = {"boundary": args.boundary, "seed": args.seed, "rates": []}
    for rate in rates:
        shrunk = ds.undersample_illicit(split, rate, args.seed)
        report["rates"].append({
            "target_rate": rate,
            "train": {"size": len(shrunk.train),
                      "illicit_rate": shrunk.train.illicit_rate},
            "test": {"size": len(shrunk.test),
                     "illicit_rate": shrunk.test.illicit_rate},
        })
    text = json.dumps(report, indent=2)
    print(text)
    if args.output:
        Path(args.output).parent.mkdir(parents=True, exist_ok=True)
        Path(args.output).write_text(text)
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from . import service

    if args.demo:
        split = service.make_demo_split()
        name = "demo"
    else:
        data = _load_data(args)
        split = ds.temporal_split(data)
        name = "elliptic"
    datasets = {name: service.DatasetEntry(name=name, split=split,
                                           baseline_f1=args.baseline_f1)}
    app = service.create_app(datasets, checkpoint_dir=args.checkpoint_dir,
                             frontend_dir=args.frontend_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command in ("baseline", "anomaly", "al"):
            return _cmd_run(args, {"baseline": "baselines", "anomaly": "anomaly",
                                   "al": "al"}[args.command])
        if args.command == "undersample-report":
            return _cmd_undersample_report(args)
        if args.command == "serve":
            return _cmd_serve(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ChainsiftError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
