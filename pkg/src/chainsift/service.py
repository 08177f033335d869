"""HTTP session API exposing the active-learning loop.

One AlSession per HTTP session resource. Each session is guarded by an
exclusive writer lock: concurrent label submissions resolve to exactly
one 200, the loser gets 409. Sessions checkpoint to JSON after every
completed iteration, so a restarted server reproduces identical GET
responses (at most the submitted-but-unacked labels of the pending
batch are lost).
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse

from . import active_learning as al
from .dataset import DatasetSplit
from .errors import BatchMismatch, ChainsiftError, ConfigError, UnknownTxId

DEFAULT_PORT = 8640


def _error(status: int, code: str, message: str, details=None) -> JSONResponse:
    return JSONResponse(status_code=status, content={
        "code": code, "message": message, "details": details or {}})


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class SessionResource:
    session_id: str
    session: al.AlSession
    dataset_name: str
    lock: threading.Lock = field(default_factory=threading.Lock)
    created_at: str = field(default_factory=_now)
    updated_at: str = field(default_factory=_now)

    @property
    def status(self) -> str:
        if self.session.finished:
            return "Finished"
        return "AwaitingLabels" if self.session.pending else "Training"


@dataclass(frozen=True)
class DatasetEntry:
    name: str
    split: DatasetSplit
    baseline_f1: float | None = None  # optional supervised reference line


def _feature_summary(features: np.ndarray, top: int = 5) -> list[dict]:
    """The `top` features with largest absolute value for one transaction.

    Features are anonymized, so magnitude is the only human-readable
    signal worth surfacing.
    """
    idx = np.argsort(-np.abs(features), kind="stable")[:top]
    return [{"feature": int(i), "value": float(features[i])} for i in idx]


class ServiceState:
    def __init__(self, datasets: dict[str, DatasetEntry],
                 checkpoint_dir: str | None = None):
        self.datasets = datasets
        self.sessions: dict[str, SessionResource] = {}
        self.checkpoint_dir = Path(checkpoint_dir) if checkpoint_dir else None
        self.registry_lock = threading.Lock()
        if self.checkpoint_dir:
            self.checkpoint_dir.mkdir(parents=True, exist_ok=True)
            self._restore()

    def _checkpoint(self, resource: SessionResource) -> None:
        if not self.checkpoint_dir:
            return
        payload = {"session_id": resource.session_id,
                   "dataset": resource.dataset_name,
                   "created_at": resource.created_at,
                   "updated_at": resource.updated_at,
                   "state": resource.session.to_dict()}
        path = self.checkpoint_dir / f"{resource.session_id}.json"
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(payload))
        tmp.replace(path)

    def _restore(self) -> None:
        for path in sorted(self.checkpoint_dir.glob("*.json")):
            payload = json.loads(path.read_text())
            entry = self.datasets.get(payload["dataset"])
            if entry is None:
                continue
            pool, evaluator = _pool_and_evaluator(entry.split)
            session = al.AlSession.from_dict(payload["state"], pool, evaluator)
            resource = SessionResource(
                session_id=payload["session_id"], session=session,
                dataset_name=payload["dataset"],
                created_at=payload["created_at"],
                updated_at=payload["updated_at"])
            self.sessions[resource.session_id] = resource


def _pool_and_evaluator(split: DatasetSplit):
    pool = al.TrainPool(tx_ids=split.train.tx_ids,
                        features=split.train.features,
                        time_steps=split.train.time_steps)
    return pool, al.make_test_evaluator(split.test)


def create_app(datasets: dict[str, DatasetEntry],
               checkpoint_dir: str | None = None,
               frontend_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="chainsift annotation service")
    state = ServiceState(datasets, checkpoint_dir)
    app.state.chainsift = state

    @app.exception_handler(ChainsiftError)
    async def _chainsift_error(request: Request, exc: ChainsiftError):
        if isinstance(exc, ConfigError):
            return _error(400, "invalid_config", str(exc))
        return _error(500, "internal", str(exc))

    @app.get("/api/datasets")
    def list_datasets():
        return {"datasets": [
            {"name": name,
             "train_size": len(entry.split.train),
             "test_size": len(entry.split.test),
             "boundary": entry.split.boundary,
             "baseline_f1": entry.baseline_f1}
            for name, entry in sorted(state.datasets.items())]}

    @app.post("/api/sessions", status_code=201)
    async def create_session(request: Request):
        body = await request.json()
        name = body.get("dataset")
        if name not in state.datasets:
            return _error(404, "unknown_dataset", f"no dataset named {name!r}")
        entry = state.datasets[name]
        try:
            config = al.AlConfig.from_dict(body.get("config", {}))
            pool, evaluator = _pool_and_evaluator(entry.split)
            session = al.init_session(config, pool, evaluator)
            al.select_batch(session)
        except (ChainsiftError, KeyError, ValueError) as exc:
            return _error(400, "invalid_config", str(exc))
        resource = SessionResource(session_id=uuid.uuid4().hex,
                                   session=session, dataset_name=name)
        with state.registry_lock:
            state.sessions[resource.session_id] = resource
        state._checkpoint(resource)
        return _session_body(resource)

    def _get(session_id: str) -> SessionResource | None:
        return state.sessions.get(session_id)

    def _session_body(resource: SessionResource) -> dict:
        s = resource.session
        return {"session_id": resource.session_id,
                "dataset": resource.dataset_name,
                "status": resource.status,
                "phase": s.phase.value,
                "labeled_pool_size": len(s.labeled_ids),
                "pending_count": len(s.pending),
                "config": s.config.to_dict(),
                "created_at": resource.created_at,
                "updated_at": resource.updated_at}

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        resource = _get(session_id)
        if resource is None:
            return _error(404, "unknown_session", session_id)
        return _session_body(resource)

    @app.get("/api/sessions/{session_id}/batch")
    def get_batch(session_id: str):
        resource = _get(session_id)
        if resource is None:
            return _error(404, "unknown_session", session_id)
        if resource.status == "Finished":
            return _error(409, "finished", "session is finished",
                          {"status": resource.status})
        if resource.status == "Training":
            return _error(409, "training", "no batch pending",
                          {"status": resource.status})
        s = resource.session
        hot = s.phase is al.Phase.HOT
        items = []
        for tx_id in s.pending:  # query-strategy rank order
            row = s._row_of[tx_id]
            score = s.pending_scores.get(tx_id)
            if score is not None and not np.isfinite(score):
                score = None
            items.append({
                "tx_id": tx_id,
                "time_step": int(s.pool.time_steps[row])
                if s.pool.time_steps is not None else None,
                "model_score": score if hot else None,
                "anomaly_score": None if hot else score,
                "feature_summary": _feature_summary(s.pool.features[row]),
            })
        return {"session_id": session_id, "phase": s.phase.value,
                "items": items}

    @app.post("/api/sessions/{session_id}/labels")
    async def post_labels(session_id: str, request: Request):
        resource = _get(session_id)
        if resource is None:
            return _error(404, "unknown_session", session_id)
        body = await request.json()
        labels = body.get("labels", body)
        try:
            answers = {int(t): _parse_label(l) for t, l in labels.items()}
        except (TypeError, ValueError, AttributeError) as exc:
            return _error(422, "bad_labels", f"unparseable label body: {exc}")
        if not resource.lock.acquire(blocking=False):
            return _error(409, "concurrent_submission",
                          "another submission is in progress")
        try:
            if resource.status == "Finished":
                return _error(409, "finished", "session is finished")
            s = resource.session
            try:
                al.submit_labels(s, answers)
            except BatchMismatch as exc:
                return _error(422, "batch_mismatch", str(exc),
                              {"missing": exc.missing, "extra": exc.extra})
            except UnknownTxId as exc:
                return _error(422, "unknown_tx_id", str(exc))
            if not s.finished:
                al.select_batch(s)
            resource.updated_at = _now()
            state._checkpoint(resource)
            tail = s.history[-1] if s.history else None
            return {"status": resource.status,
                    "labeled_pool_size": len(s.labeled_ids),
                    "phase": s.phase.value,
                    "latest_metric": tail}
        finally:
            resource.lock.release()

    @app.get("/api/sessions/{session_id}/metrics")
    def get_metrics(session_id: str):
        resource = _get(session_id)
        if resource is None:
            return _error(404, "unknown_session", session_id)
        s = resource.session
        entry = state.datasets[resource.dataset_name]
        return {"session_id": session_id,
                "series": s.history_series().to_dict(),
                "annotations": s.transitions,
                "baseline_f1": entry.baseline_f1,
                "status": resource.status}

    if frontend_dir:
        root = Path(frontend_dir)

        @app.get("/")
        def index():
            return FileResponse(root / "index.html")

        @app.get("/assets/{name}")
        def asset(name: str):
            target = (root / name).resolve()
            if root.resolve() not in target.parents or not target.exists():
                return _error(404, "not_found", name)
            return FileResponse(target)

    return app


def _parse_label(value) -> int:
    if isinstance(value, str):
        token = value.strip().lower()
        if token in ("illicit", "1"):
            return 1
        if token in ("licit", "0", "2"):
            return 0
        raise ValueError(f"unknown label {value!r}")
    iv = int(value)
    if iv not in (0, 1):
        raise ValueError(f"label must be 0/1, got {value!r}")
    return iv


def make_demo_split(seed: int = 7, n_train: int = 600,
                    n_test: int = 400, d: int = 166) -> DatasetSplit:
    """Synthetic, seeded split for demos and end-to-end tests.

    Illicit points are shifted along a random direction so a classifier
    can actually learn something.
    """
    from .dataset import LabeledFrame

    rng = np.random.Generator(np.random.PCG64(seed))
    direction = rng.normal(size=d)
    direction /= np.linalg.norm(direction)

    def frame(n, id_base, step_lo, step_hi):
        labels = (rng.random(n) < 0.1).astype(np.int64)
        X = rng.normal(size=(n, d))
        X[labels == 1] += 2.5 * direction
        steps = rng.integers(step_lo, step_hi + 1, size=n)
        X[:, 0] = steps
        return LabeledFrame(tx_ids=np.arange(id_base, id_base + n),
                            time_steps=steps, features=X, labels=labels)

    return DatasetSplit(train=frame(n_train, 0, 1, 34),
                        test=frame(n_test, n_train, 35, 49),
                        boundary=34, source_digest=f"demo-{seed}")
