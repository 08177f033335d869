"""Active-learning loop: pools, warm-up/hot query strategies, oracle.

The session is a single-writer state machine. One batch is selected at
a time (uniformly at random on the very first iteration, by the
unsupervised warm-up learner until the labeled pool holds an illicit
instance, then by the configured hot strategy). Labels for exactly the
pending batch move it into the labeled pool, the classifier retrains,
and the test metric is recorded on the evaluation cadence.

With a single-class labeled pool the classifier cannot train; the
session stays in warm-up and evaluations record F1 = 0 rather than
being skipped silently.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from . import detectors
from .classifiers import (
    LogisticModel,
    logistic_scores,
    predict_scores,
    train_classifier,
    train_logistic,
)
from .errors import (
    BatchMismatch,
    BatchPending,
    ConfigError,
    EmptyPool,
    InvalidStop,
    PoolExhausted,
    SingleClassPool,
    UnknownTxId,
    UntrainedModel,
)
from .metrics import MetricSeries, XMeaning, illicit_f1
from .numkit import seeded_rng


class Phase(enum.Enum):
    INITIAL = "initial"
    WARM_UP = "warm_up"
    HOT = "hot"


class Warmup(enum.Enum):
    RANDOM = "random"
    IFOREST = "iforest"
    ELLIPTIC = "elliptic"


class Hot(enum.Enum):
    NONE = "none"
    UNCERTAINTY = "uncertainty"
    EXPECTED_MODEL_CHANGE = "expected_model_change"


_WARMUP_METHOD = {
    Warmup.IFOREST: detectors.Method.IFOREST,
    Warmup.ELLIPTIC: detectors.Method.ELLIPTIC,
}


@dataclass(frozen=True)
class AlConfig:
    stop_at: int
    batch_size: int = 50
    warmup: Warmup = Warmup.RANDOM
    hot: Hot = Hot.UNCERTAINTY
    classifier: str = "RF"  # LR | RF | GBT
    seed: int = 0
    eval_every: int = 1

    def validate(self, pool_size: int) -> None:
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.stop_at < self.batch_size:
            raise InvalidStop(
                f"stop_at {self.stop_at} below batch_size {self.batch_size}")
        if self.stop_at > pool_size:
            raise InvalidStop(
                f"stop_at {self.stop_at} above train pool size {pool_size}")
        if self.eval_every < 1:
            raise ConfigError("eval_every must be >= 1")
        if self.classifier not in ("LR", "RF", "GBT"):
            raise ConfigError(f"unknown classifier {self.classifier!r}")

    def to_dict(self) -> dict:
        return {"stop_at": self.stop_at, "batch_size": self.batch_size,
                "warmup": self.warmup.value, "hot": self.hot.value,
                "classifier": self.classifier, "seed": self.seed,
                "eval_every": self.eval_every}

    @classmethod
    def from_dict(cls, d: dict) -> "AlConfig":
        return cls(stop_at=int(d["stop_at"]),
                   batch_size=int(d.get("batch_size", 50)),
                   warmup=Warmup(d.get("warmup", "random")),
                   hot=Hot(d.get("hot", "uncertainty")),
                   classifier=d.get("classifier", "RF"),
                   seed=int(d.get("seed", 0)),
                   eval_every=int(d.get("eval_every", 1)))


@dataclass(frozen=True)
class TrainPool:
    tx_ids: np.ndarray
    features: np.ndarray
    time_steps: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.tx_ids)


class SimulatedOracle:
    """Instant, consistent oracle backed by a ground-truth label map."""

    def __init__(self, truth: dict[int, int]):
        self.truth = dict(truth)

    def answer(self, tx_ids) -> dict[int, int]:
        return {int(t): int(self.truth[int(t)]) for t in tx_ids}

    @classmethod
    def from_frame(cls, frame) -> "SimulatedOracle":
        return cls({int(t): int(l) for t, l in zip(frame.tx_ids, frame.labels)})


class AlSession:
    """Mutable AL state over an immutable train pool.

    The evaluator is a callable(model_or_none) -> (f1, precision, recall)
    supplied at construction; it is not part of the serialized state.
    """

    def __init__(self, config: AlConfig, pool: TrainPool, evaluator=None):
        config.validate(len(pool))
        if len(pool) == 0:
            raise EmptyPool("train pool is empty")
        self.config = config
        self.pool = pool
        self.evaluator = evaluator
        self._row_of = {int(t): i for i, t in enumerate(pool.tx_ids)}
        self.labeled_ids: list[int] = []
        self.labels: dict[int, int] = {}
        self.pending: list[int] = []
        self.pending_scores: dict[int, float] = {}
        self.phase = Phase.INITIAL
        self.iteration = 0
        self.history: list[dict] = []  # {"x", "f1", "precision", "recall"}
        self.transitions: list[dict] = []  # {"pool_size", "phase"}
        self.rng = seeded_rng(config.seed)
        self.classifier = None
        self.emc_model: LogisticModel | None = None

    # --- derived state ------------------------------------------------------

    @property
    def unlabeled_ids(self) -> np.ndarray:
        taken = set(self.labeled_ids) | set(self.pending)
        return np.array([int(t) for t in self.pool.tx_ids
                         if int(t) not in taken], dtype=np.int64)

    @property
    def finished(self) -> bool:
        return (len(self.labeled_ids) >= self.config.stop_at
                or (len(self.unlabeled_ids) == 0 and not self.pending))

    def labeled_matrix(self):
        rows = [self._row_of[t] for t in self.labeled_ids]
        X = self.pool.features[rows]
        y = np.array([self.labels[t] for t in self.labeled_ids], dtype=np.int64)
        return X, y

    def history_series(self) -> MetricSeries:
        return MetricSeries(
            xs=[h["x"] for h in self.history],
            f1=[h["f1"] for h in self.history],
            precision=[h["precision"] for h in self.history],
            recall=[h["recall"] for h in self.history],
            x_meaning=XMeaning.LABELED_POOL_SIZE,
        )

    # --- serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "phase": self.phase.value,
            "iteration": self.iteration,
            "labeled": [[t, self.labels[t]] for t in self.labeled_ids],
            "pending": list(self.pending),
            "pending_scores": {str(k): v for k, v in self.pending_scores.items()},
            "history": self.history,
            "transitions": self.transitions,
            "rng_state": _encode_rng_state(self.rng.bit_generator.state),
        }

    @classmethod
    def from_dict(cls, d: dict, pool: TrainPool, evaluator=None) -> "AlSession":
        session = cls(AlConfig.from_dict(d["config"]), pool, evaluator)
        session.phase = Phase(d["phase"])
        session.iteration = int(d["iteration"])
        session.labeled_ids = [int(t) for t, _ in d["labeled"]]
        session.labels = {int(t): int(l) for t, l in d["labeled"]}
        session.pending = [int(t) for t in d["pending"]]
        session.pending_scores = {int(k): float(v)
                                  for k, v in d.get("pending_scores", {}).items()}
        session.history = list(d["history"])
        session.transitions = list(d["transitions"])
        session.rng.bit_generator.state = _decode_rng_state(d["rng_state"])
        session._retrain()
        return session

    # --- internals ------------------------------------------------------------

    def _has_both_classes(self) -> bool:
        vals = set(self.labels.values())
        return 0 in vals and 1 in vals

    def _retrain(self) -> None:
        if not self.labeled_ids:
            return
        X, y = self.labeled_matrix()
        try:
            self.classifier = train_classifier(self.config.classifier, X, y,
                                               seed=self.config.seed)
        except SingleClassPool:
            self.classifier = None
        if self.config.hot is Hot.EXPECTED_MODEL_CHANGE:
            try:
                self.emc_model = train_logistic(X, y)
            except SingleClassPool:
                self.emc_model = None


def _encode_rng_state(state: dict) -> dict:
    return {"bit_generator": state["bit_generator"],
            "state": str(state["state"]["state"]),
            "inc": str(state["state"]["inc"]),
            "has_uint32": state["has_uint32"],
            "uinteger": state["uinteger"]}


def _decode_rng_state(d: dict) -> dict:
    return {"bit_generator": d["bit_generator"],
            "state": {"state": int(d["state"]), "inc": int(d["inc"])},
            "has_uint32": d["has_uint32"],
            "uinteger": d["uinteger"]}


def init_session(config: AlConfig, pool: TrainPool, evaluator=None) -> AlSession:
    return AlSession(config, pool, evaluator)


def _top_by(ids: np.ndarray, keys: np.ndarray, b: int) -> list[int]:
    """b ids with the smallest keys; ties broken by ascending tx_id."""
    order = np.lexsort((ids, keys))
    return [int(t) for t in ids[order[:b]]]


def query_uncertainty(model, features, b: int, ids=None) -> list[int]:
    """b instances whose predicted score is closest to 0.5."""
    if model is None:
        raise UntrainedModel("uncertainty sampling needs a trained classifier")
    features = np.atleast_2d(features)
    ids = np.arange(features.shape[0]) if ids is None else np.asarray(ids)
    scores = predict_scores(model, features)
    return _top_by(ids, np.abs(scores - 0.5), b)


def expected_gradient_lengths(model: LogisticModel, features) -> np.ndarray:
    """EGL(x) = sum_y P(y|x) * ||grad loss(x, y)||.

    For single-example log-loss the label-weighted sum collapses to
    2 * sigma * (1 - sigma) * ||(x, 1)||.
    """
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    sigma = logistic_scores(model, features)
    norms = np.sqrt(np.einsum("ij,ij->i", features, features) + 1.0)
    return 2.0 * sigma * (1.0 - sigma) * norms


def query_expected_model_change(model: LogisticModel, features, b: int,
                                ids=None) -> list[int]:
    """b instances with the largest expected gradient length."""
    if model is None:
        raise UntrainedModel("expected model change needs a trained LR model")
    features = np.atleast_2d(features)
    ids = np.arange(features.shape[0]) if ids is None else np.asarray(ids)
    return _top_by(ids, -expected_gradient_lengths(model, features), b)


def select_batch(session: AlSession) -> list[int]:
    """Pick the next batch of ids to label and park it as pending."""
    if session.pending:
        raise BatchPending("previous batch still awaiting labels")
    unlabeled = session.unlabeled_ids
    if unlabeled.size == 0 or session.finished:
        raise PoolExhausted("no unlabeled instances left")
    b = min(session.config.batch_size, unlabeled.size)
    rows = np.array([session._row_of[int(t)] for t in unlabeled])
    features = session.pool.features[rows]
    scores: dict[int, float] = {}

    if session.phase is Phase.INITIAL or (
            session.phase is Phase.WARM_UP
            and session.config.warmup is Warmup.RANDOM):
        batch = [int(t) for t in session.rng.choice(unlabeled, size=b,
                                                    replace=False)]
    elif session.phase is Phase.WARM_UP:
        spec = detectors.DetectorSpec(
            method=_WARMUP_METHOD[session.config.warmup],
            seed=_iteration_seed(session.config.seed, session.iteration))
        X_labeled, _ = session.labeled_matrix()
        result = detectors.fit_score(spec, X_labeled, features)
        batch = _top_by(unlabeled, -result.scores, b)
        scores = {int(t): float(s) for t, s in zip(unlabeled, result.scores)}
    elif session.config.hot is Hot.UNCERTAINTY:
        batch = query_uncertainty(session.classifier, features, b, ids=unlabeled)
        s = predict_scores(session.classifier, features)
        scores = {int(t): float(v) for t, v in zip(unlabeled, s)}
    elif session.config.hot is Hot.EXPECTED_MODEL_CHANGE:
        batch = query_expected_model_change(session.emc_model, features, b,
                                            ids=unlabeled)
        egl = expected_gradient_lengths(session.emc_model, features)
        scores = {int(t): float(v) for t, v in zip(unlabeled, egl)}
    else:  # pragma: no cover
        raise ConfigError(f"unhandled hot strategy {session.config.hot}")

    session.pending = batch
    session.pending_scores = {t: scores.get(t, float("nan")) for t in batch}
    return list(batch)


def _iteration_seed(seed: int, iteration: int) -> int:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(iteration),))
    return int(ss.generate_state(1, np.uint64)[0])


def submit_labels(session: AlSession, answers: dict[int, int]) -> AlSession:
    """Apply labels for exactly the pending batch; atomic on mismatch."""
    pending = set(session.pending)
    got = {int(t): int(l) for t, l in answers.items()}
    for t in got:
        if t not in session._row_of:
            raise UnknownTxId(t)
    missing = pending - set(got)
    extra = set(got) - pending
    if missing or extra:
        raise BatchMismatch(missing=missing, extra=extra)

    for t in session.pending:
        session.labeled_ids.append(t)
        session.labels[t] = got[t]
    session.pending = []
    session.pending_scores = {}
    session.iteration += 1

    if session.phase is Phase.INITIAL:
        session.phase = Phase.WARM_UP
        session.transitions.append({"pool_size": len(session.labeled_ids),
                                    "phase": session.phase.value})
    session._retrain()
    if (session.phase is Phase.WARM_UP
            and session.config.hot is not Hot.NONE
            and any(l == 1 for l in session.labels.values())
            and session.classifier is not None):
        session.phase = Phase.HOT
        session.transitions.append({"pool_size": len(session.labeled_ids),
                                    "phase": session.phase.value})

    if session.iteration % session.config.eval_every == 0 or session.finished:
        if session.evaluator is not None:
            f1, precision, recall = session.evaluator(session.classifier)
        else:
            f1 = precision = recall = 0.0
        session.history.append({"x": len(session.labeled_ids), "f1": f1,
                                "precision": precision, "recall": recall})
    return session


def make_test_evaluator(test_frame):
    """Evaluator closure: score the test side at threshold 0.5.

    An untrainable (single-class) classifier records all-zero metrics.
    """
    def evaluate(model):
        if model is None:
            return 0.0, 0.0, 0.0
        scores = predict_scores(model, test_frame.features)
        preds = (scores >= 0.5).astype(np.int64)
        f1, precision, recall, _ = illicit_f1(test_frame.labels, preds)
        return f1, precision, recall
    return evaluate


def run_simulated(config: AlConfig, split) -> "RunRecord":
    """Drive one seeded session against the simulated oracle to stop_at."""
    import time

    from .bench import RunRecord, TOOLKIT_VERSION

    start = time.perf_counter()
    pool = TrainPool(tx_ids=split.train.tx_ids, features=split.train.features,
                     time_steps=split.train.time_steps)
    oracle = SimulatedOracle.from_frame(split.train)
    session = init_session(config, pool,
                           evaluator=make_test_evaluator(split.test))
    while not session.finished:
        batch = select_batch(session)
        submit_labels(session, oracle.answer(batch))
    return RunRecord(
        config={"kind": "al", "al": config.to_dict(),
                "boundary": split.boundary},
        seed=config.seed,
        series={"learning_curve": session.history_series().to_dict()},
        wall_clock_seconds=time.perf_counter() - start,
        toolkit_version=TOOLKIT_VERSION,
        dataset_digest=split.source_digest,
        deviations=[],
        extras={"transitions": session.transitions},
    )
