import os
from pathlib import Path

import numpy as np
import pytest

from chainsift import dataset as ds

ELLIPTIC_DIR = Path(os.environ.get(ds.DATA_DIR_ENV, "data"))

requires_elliptic = pytest.mark.skipif(
    not (ELLIPTIC_DIR / ds.FEATURES_FILENAME).exists(),
    reason=f"Elliptic CSVs not found in {ELLIPTIC_DIR} "
           f"(set ${ds.DATA_DIR_ENV}; manual Kaggle download)",
)


def write_fixture_csvs(tmp_path, rows, classes, features_name="features.csv",
                       classes_name="classes.csv"):
    """rows: list of (tx_id, time_step, feature_tail) where feature_tail
    fills features 2..166 with a constant; classes: list of (tx_id, token).
    """
    features_path = tmp_path / features_name
    lines = []
    for tx_id, step, tail in rows:
        feats = [float(step)] + [float(tail)] * (ds.N_FEATURES - 1)
        lines.append(",".join([str(tx_id)] + [repr(v) for v in feats]))
    features_path.write_text("\n".join(lines) + "\n")
    classes_path = tmp_path / classes_name
    body = "\n".join(f"{t},{tok}" for t, tok in classes)
    classes_path.write_text("txId,class\n" + body + "\n")
    return features_path, classes_path


@pytest.fixture
def tiny_dataset(tmp_path):
    rows = [(101, 1, 0.5), (102, 2, -1.0), (103, 3, 2.0),
            (104, 4, 0.0), (105, 5, 1.0), (106, 1, -0.5)]
    classes = [(101, "1"), (102, "2"), (103, "unknown"),
               (104, "1"), (105, "2"), (106, "2")]
    fp, cp = write_fixture_csvs(tmp_path, rows, classes)
    return ds.load_dataset(fp, cp)


@pytest.fixture(scope="session")
def elliptic_dataset():
    if not (ELLIPTIC_DIR / ds.FEATURES_FILENAME).exists():
        pytest.skip("Elliptic CSVs not available")
    return ds.load_dataset_dir(ELLIPTIC_DIR)


@pytest.fixture(scope="session")
def elliptic_split(elliptic_dataset):
    return ds.temporal_split(elliptic_dataset, 34)


def random_frame(rng, n, d=8, illicit_rate=0.2, id_base=0, step_lo=1,
                 step_hi=34, separation=2.0):
    """Synthetic LabeledFrame with linearly detectable illicit points."""
    labels = (rng.random(n) < illicit_rate).astype(np.int64)
    X = rng.normal(size=(n, d))
    X[labels == 1, 1] += separation
    steps = rng.integers(step_lo, step_hi + 1, size=n)
    X[:, 0] = steps
    return ds.LabeledFrame(tx_ids=np.arange(id_base, id_base + n),
                           time_steps=steps, features=X, labels=labels)


def random_split(seed=0, n_train=300, n_test=200, d=8, illicit_rate=0.2,
                 separation=2.0):
    rng = np.random.Generator(np.random.PCG64(seed))
    train = random_frame(rng, n_train, d, illicit_rate, 0, 1, 34, separation)
    test = random_frame(rng, n_test, d, illicit_rate, n_train, 35, 49,
                        separation)
    return ds.DatasetSplit(train=train, test=test, boundary=34,
                           source_digest=f"synthetic-{seed}")
