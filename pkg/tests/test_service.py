import json

import pytest
from fastapi.testclient import TestClient

from chainsift import active_learning as al
from chainsift import service

from conftest import random_split


def make_entry(seed=0, baseline_f1=0.8):
    split = random_split(seed=seed, n_train=150, n_test=80, d=6)
    return service.DatasetEntry(name="synthetic", split=split,
                                baseline_f1=baseline_f1), split


@pytest.fixture
def entry_and_split():
    return make_entry()


@pytest.fixture
def client(entry_and_split):
    entry, _ = entry_and_split
    app = service.create_app({entry.name: entry})
    return TestClient(app)


def new_session(client, **config):
    body = {"dataset": "synthetic",
            "config": {"stop_at": 100, "batch_size": 20,
                       "classifier": "LR", "seed": 3, **config}}
    response = client.post("/api/sessions", json=body)
    assert response.status_code == 201, response.text
    return response.json()


def truth_for(split):
    return {int(t): int(l) for t, l in zip(split.train.tx_ids,
                                           split.train.labels)}


def label_batch(client, session_id, truth):
    batch = client.get(f"/api/sessions/{session_id}/batch").json()
    labels = {str(item["tx_id"]): truth[item["tx_id"]]
              for item in batch["items"]}
    response = client.post(f"/api/sessions/{session_id}/labels",
                           json={"labels": labels})
    assert response.status_code == 200, response.text
    return batch, response.json()


class TestDatasets:
    def test_listing(self, client):
        body = client.get("/api/datasets").json()
        assert body["datasets"] == [{"name": "synthetic", "train_size": 150,
                                     "test_size": 80, "boundary": 34,
                                     "baseline_f1": 0.8}]


class TestSessionCreation:
    def test_create_starts_awaiting_labels(self, client):
        body = new_session(client)
        assert body["status"] == "AwaitingLabels"
        assert body["phase"] == "initial"
        assert body["pending_count"] == 20
        assert body["labeled_pool_size"] == 0

    def test_unknown_dataset_404(self, client):
        response = client.post("/api/sessions", json={"dataset": "nope"})
        assert response.status_code == 404
        assert response.json()["code"] == "unknown_dataset"

    def test_invalid_config_400(self, client):
        response = client.post("/api/sessions", json={
            "dataset": "synthetic",
            "config": {"stop_at": 10, "batch_size": 50}})
        assert response.status_code == 400
        body = response.json()
        assert body["code"] == "invalid_config"
        assert "stop_at" in body["message"]

    def test_stop_above_pool_400(self, client):
        response = client.post("/api/sessions", json={
            "dataset": "synthetic",
            "config": {"stop_at": 10_000}})
        assert response.status_code == 400

    def test_unknown_session_404(self, client):
        assert client.get("/api/sessions/absent").status_code == 404
        assert client.get("/api/sessions/absent/batch").status_code == 404
        assert client.get("/api/sessions/absent/metrics").status_code == 404


class TestBatchEndpoint:
    def test_batch_items_shape(self, client):
        session_id = new_session(client)["session_id"]
        body = client.get(f"/api/sessions/{session_id}/batch").json()
        assert len(body["items"]) == 20
        item = body["items"][0]
        assert set(item) == {"tx_id", "time_step", "model_score",
                             "anomaly_score", "feature_summary"}
        assert len(item["feature_summary"]) == 5
        # initial phase: neither model nor anomaly scores exist yet
        assert item["model_score"] is None
        assert item["anomaly_score"] is None

    def test_batch_conflict_when_finished(self, client, entry_and_split):
        _, split = entry_and_split
        session_id = new_session(client, stop_at=20)["session_id"]
        label_batch(client, session_id, truth_for(split))
        response = client.get(f"/api/sessions/{session_id}/batch")
        assert response.status_code == 409
        assert response.json()["code"] == "finished"

    def test_hot_phase_exposes_model_scores(self, client, entry_and_split):
        _, split = entry_and_split
        truth = truth_for(split)
        session_id = new_session(client)["session_id"]
        while True:
            _, result = label_batch(client, session_id, truth)
            if result["phase"] == "hot" or result["status"] == "Finished":
                break
        assert result["phase"] == "hot"
        batch = client.get(f"/api/sessions/{session_id}/batch").json()
        scores = [i["model_score"] for i in batch["items"]]
        assert all(s is not None and 0.0 <= s <= 1.0 for s in scores)
        assert all(i["anomaly_score"] is None for i in batch["items"])


class TestLabelSubmission:
    def test_full_loop_reaches_finished(self, client, entry_and_split):
        _, split = entry_and_split
        truth = truth_for(split)
        session_id = new_session(client)["session_id"]
        result = None
        for _ in range(5):
            _, result = label_batch(client, session_id, truth)
        assert result["status"] == "Finished"
        assert result["labeled_pool_size"] == 100
        assert result["latest_metric"]["x"] == 100

    def test_batch_mismatch_422_names_missing_and_extra(self, client,
                                                        entry_and_split):
        _, split = entry_and_split
        session_id = new_session(client)["session_id"]
        batch = client.get(f"/api/sessions/{session_id}/batch").json()
        ids = [i["tx_id"] for i in batch["items"]]
        labels = {str(t): 0 for t in ids[1:]}
        outside = next(int(t) for t in split.train.tx_ids
                       if int(t) not in ids)
        labels[str(outside)] = 1
        response = client.post(f"/api/sessions/{session_id}/labels",
                               json={"labels": labels})
        assert response.status_code == 422
        details = response.json()["details"]
        assert details["missing"] == [ids[0]]
        assert details["extra"] == [outside]

    def test_mismatch_does_not_consume_batch(self, client, entry_and_split):
        _, split = entry_and_split
        session_id = new_session(client)["session_id"]
        before = client.get(f"/api/sessions/{session_id}/batch").json()
        client.post(f"/api/sessions/{session_id}/labels",
                    json={"labels": {str(before["items"][0]["tx_id"]): 1}})
        after = client.get(f"/api/sessions/{session_id}/batch").json()
        assert before == after

    def test_string_label_tokens_accepted(self, client, entry_and_split):
        _, split = entry_and_split
        truth = truth_for(split)
        session_id = new_session(client)["session_id"]
        batch = client.get(f"/api/sessions/{session_id}/batch").json()
        labels = {str(i["tx_id"]):
                  "illicit" if truth[i["tx_id"]] else "licit"
                  for i in batch["items"]}
        response = client.post(f"/api/sessions/{session_id}/labels",
                               json={"labels": labels})
        assert response.status_code == 200
        assert response.json()["labeled_pool_size"] == 20

    def test_garbage_label_422(self, client):
        session_id = new_session(client)["session_id"]
        batch = client.get(f"/api/sessions/{session_id}/batch").json()
        labels = {str(i["tx_id"]): "maybe" for i in batch["items"]}
        response = client.post(f"/api/sessions/{session_id}/labels",
                               json={"labels": labels})
        assert response.status_code == 422
        assert response.json()["code"] == "bad_labels"

    def test_concurrent_submission_409(self, client, entry_and_split):
        _, split = entry_and_split
        session_id = new_session(client)["session_id"]
        state = client.app.state.chainsift
        resource = state.sessions[session_id]
        batch = client.get(f"/api/sessions/{session_id}/batch").json()
        labels = {str(i["tx_id"]): 0 for i in batch["items"]}
        resource.lock.acquire()  # a submission is mid-flight
        try:
            response = client.post(f"/api/sessions/{session_id}/labels",
                                   json={"labels": labels})
            assert response.status_code == 409
            assert response.json()["code"] == "concurrent_submission"
        finally:
            resource.lock.release()

    def test_submit_after_finished_409(self, client, entry_and_split):
        _, split = entry_and_split
        truth = truth_for(split)
        session_id = new_session(client, stop_at=20)["session_id"]
        label_batch(client, session_id, truth)
        response = client.post(f"/api/sessions/{session_id}/labels",
                               json={"labels": {}})
        assert response.status_code == 409
        assert response.json()["code"] == "finished"


class TestMetricsEndpoint:
    def test_series_annotations_and_baseline(self, client, entry_and_split):
        _, split = entry_and_split
        truth = truth_for(split)
        session_id = new_session(client)["session_id"]
        for _ in range(3):
            label_batch(client, session_id, truth)
        body = client.get(f"/api/sessions/{session_id}/metrics").json()
        assert body["baseline_f1"] == 0.8
        xs = [p["x"] for p in body["series"]["points"]]
        assert xs == [20, 40, 60]
        phases = [a["phase"] for a in body["annotations"]]
        assert phases[0] == "warm_up"
        assert all(a["pool_size"] in xs for a in body["annotations"])


class TestCheckpointRestore:
    def test_restart_reproduces_get_responses(self, tmp_path,
                                              entry_and_split):
        entry, split = entry_and_split
        truth = truth_for(split)
        app = service.create_app({entry.name: entry},
                                 checkpoint_dir=str(tmp_path))
        client = TestClient(app)
        session_id = new_session(client)["session_id"]
        for _ in range(2):
            label_batch(client, session_id, truth)

        session_before = client.get(f"/api/sessions/{session_id}").json()
        metrics_before = client.get(
            f"/api/sessions/{session_id}/metrics").json()
        batch_before = client.get(f"/api/sessions/{session_id}/batch").json()

        restarted = TestClient(service.create_app(
            {entry.name: entry}, checkpoint_dir=str(tmp_path)))
        assert restarted.get(
            f"/api/sessions/{session_id}").json() == session_before
        assert restarted.get(
            f"/api/sessions/{session_id}/metrics").json() == metrics_before
        assert restarted.get(
            f"/api/sessions/{session_id}/batch").json() == batch_before

        # and the restored session keeps working
        _, result = label_batch(restarted, session_id, truth)
        assert result["labeled_pool_size"] == 60


class TestParityWithDirectLoop:
    def test_http_driven_session_equals_run_simulated(self, entry_and_split):
        entry, split = entry_and_split
        truth = truth_for(split)
        config = al.AlConfig(stop_at=100, batch_size=20, classifier="LR",
                             seed=9)

        client = TestClient(service.create_app({entry.name: entry}))
        response = client.post("/api/sessions", json={
            "dataset": entry.name, "config": config.to_dict()})
        session_id = response.json()["session_id"]
        while True:
            _, result = label_batch(client, session_id, truth)
            if result["status"] == "Finished":
                break
        via_http = client.get(f"/api/sessions/{session_id}/metrics").json()

        direct = al.run_simulated(config, split)
        assert json.dumps(via_http["series"], sort_keys=True) \
            == json.dumps(direct.series["learning_curve"], sort_keys=True)
        assert via_http["annotations"] == direct.extras["transitions"]


class TestDemoSplit:
    def test_seeded_and_shaped(self):
        a = service.make_demo_split()
        b = service.make_demo_split()
        assert (a.train.tx_ids == b.train.tx_ids).all()
        assert (a.train.features == b.train.features).all()
        assert a.train.features.shape[1] == 166
        assert 0 < a.train.labels.sum() < len(a.train)
