import csv
import random
from datetime import datetime, timedelta, timezone

import pytest
from fastapi.testclient import TestClient

from crowdenergy.api import create_app
from crowdenergy.store import Store


@pytest.fixture
def store(tmp_path):
    s = Store(tmp_path / "store")
    s.ensure_seed_questions()
    return s


@pytest.fixture
def client(store):
    return TestClient(create_app(store, master_seed=0))


def make_users(client, n):
    return [client.post("/api/participants").json()["id"] for _ in range(n)]


def load_meter(store, tmp_path, users, days=40, base_kwh=10.0):
    rng = random.Random(1)
    path = tmp_path / "meter_in.csv"
    base = datetime(2026, 1, 1, tzinfo=timezone.utc)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["user_id", "interval_start", "kwh"])
        for u in users:
            for d in range(days):
                w.writerow([u, (base + timedelta(days=d)).isoformat(),
                            base_kwh + u + rng.random()])
    return store.ingest_meter_csv(path)


class TestQuestionsFlow:
    def test_fresh_store_stats(self, client):
        stats = client.get("/api/stats").json()
        assert stats["questions"] == {"pending": 0, "approved": 6, "rejected": 0}
        assert stats["users"] == 0 and stats["answers"] == 0

    def test_submit_moderate_cycle(self, client):
        (u,) = make_users(client, 1)
        r = client.post("/api/questions", json={
            "author": str(u), "text": "Heated floors?", "qtype": "yes_no",
        })
        assert r.status_code == 201
        qid = r.json()["id"]
        assert r.json()["status"] == "pending"

        r = client.post(f"/api/questions/{qid}/moderate", json={"decision": "approve"})
        assert r.json()["status"] == "approved"

        r = client.post(f"/api/questions/{qid}/moderate", json={"decision": "reject"})
        assert r.status_code == 409
        assert r.json()["error"]["code"] == "conflict"

    def test_submit_validation(self, client):
        (u,) = make_users(client, 1)
        r = client.post("/api/questions", json={"author": str(u), "text": "", "qtype": "numeric"})
        assert r.status_code == 422
        r = client.post("/api/questions", json={"author": str(u), "text": "x", "qtype": "essay"})
        assert r.status_code == 422
        r = client.post("/api/questions/zzz/moderate", json={"decision": "approve"})
        assert r.status_code == 404
        assert r.json()["error"]["code"] == "unknown_question"

    def test_pending_queue(self, client):
        (u,) = make_users(client, 1)
        qid = client.post("/api/questions", json={
            "author": str(u), "text": "Sauna?", "qtype": "yes_no",
        }).json()["id"]
        pending = client.get("/api/questions/pending").json()["questions"]
        assert [q["id"] for q in pending] == [qid]


class TestNextQuestions:
    def test_only_approved_unanswered(self, client):
        (u,) = make_users(client, 1)
        pend = client.post("/api/questions", json={
            "author": str(u), "text": "pending?", "qtype": "numeric",
        }).json()["id"]
        client.post("/api/answers", json={"user_id": u, "question_id": "q1", "value": 3})
        got = client.get("/api/questions/next", params={"user": u, "limit": 50}).json()
        ids = {q["id"] for q in got["questions"]}
        assert "q1" not in ids and pend not in ids
        assert ids == {"q2", "q3", "q4", "q5", "q6"}

    def test_limit_and_empty(self, client):
        (u,) = make_users(client, 1)
        got = client.get("/api/questions/next", params={"user": u, "limit": 2}).json()
        assert len(got["questions"]) == 2
        got = client.get("/api/questions/next", params={"user": u, "limit": 0}).json()
        assert got["questions"] == []

    def test_everything_answered_empty(self, client):
        (u,) = make_users(client, 1)
        for qid, value in [("q1", 3), ("q2", "no"), ("q3", 0), ("q4", 4),
                           ("q5", "yes"), ("q6", 2)]:
            assert client.post("/api/answers", json={
                "user_id": u, "question_id": qid, "value": value,
            }).status_code == 201
        got = client.get("/api/questions/next", params={"user": u, "limit": 10}).json()
        assert got["questions"] == []

    def test_unknown_user(self, client):
        r = client.get("/api/questions/next", params={"user": 99, "limit": 5})
        assert r.status_code == 404
        assert r.json()["error"]["code"] == "unknown_user"


class TestAnswers:
    def test_type_enforcement(self, client):
        (u,) = make_users(client, 1)
        cases = [
            ("q1", 7, 422),       # likert out of range
            ("q1", 2.5, 422),     # non-integer likert
            ("q2", "maybe", 422), # bad yes/no
            ("q3", "yes", 422),   # string on numeric
            ("q1", 4, 201),
            ("q2", "yes", 201),
            ("q3", 2, 201),
        ]
        for qid, value, expected in cases:
            r = client.post("/api/answers", json={
                "user_id": u, "question_id": qid, "value": value,
            })
            assert r.status_code == expected, (qid, value, r.text)

    def test_unapproved_forbidden(self, client):
        (u,) = make_users(client, 1)
        qid = client.post("/api/questions", json={
            "author": str(u), "text": "p?", "qtype": "numeric",
        }).json()["id"]
        r = client.post("/api/answers", json={"user_id": u, "question_id": qid, "value": 1})
        assert r.status_code == 403
        assert r.json()["error"]["code"] == "not_answerable"


class TestModelAndAudit:
    def fit(self, client, store, tmp_path, n_users=8):
        users = make_users(client, n_users)
        rng = random.Random(2)
        for u in users:
            client.post("/api/answers", json={"user_id": u, "question_id": "q1",
                                              "value": rng.randint(1, 5)})
            client.post("/api/answers", json={"user_id": u, "question_id": "q3",
                                              "value": rng.randint(0, 3)})
        load_meter(store, tmp_path, users)
        r = client.post("/api/model/refresh", params={"wait": "true"})
        assert r.json()["status"] == "done", r.text
        return users

    def test_audit_before_model(self, client):
        (u,) = make_users(client, 1)
        r = client.get(f"/api/users/{u}/audit")
        assert r.status_code == 409
        assert r.json()["error"]["code"] == "model_pending"

    def test_audit_after_refresh(self, client, store, tmp_path):
        users = self.fit(client, store, tmp_path)
        r = client.get(f"/api/users/{users[0]}/audit")
        assert r.status_code == 200
        body = r.json()
        assert len(body["entries"]) <= 10
        mags = [abs(e["contribution_kwh"]) for e in body["entries"]]
        assert mags == sorted(mags, reverse=True)
        assert "series" in body and len(body["series"]["days"]) >= 28

    def test_refresh_deterministic(self, client, store, tmp_path):
        users = self.fit(client, store, tmp_path)
        first = client.get(f"/api/users/{users[0]}/audit").json()
        client.post("/api/model/refresh", params={"wait": "true"})
        second = client.get(f"/api/users/{users[0]}/audit").json()
        assert first == second

    def test_failed_refresh_keeps_old_model(self, client, store, tmp_path, monkeypatch):
        users = self.fit(client, store, tmp_path)
        before = client.get(f"/api/users/{users[0]}/audit").json()

        import crowdenergy.api as api_mod

        def boom(*a, **k):
            raise RuntimeError("meter backend down")

        monkeypatch.setattr(api_mod, "outcome_delta30", boom)
        r = client.post("/api/model/refresh", params={"wait": "true"})
        assert r.json()["status"] == "failed"
        after = client.get(f"/api/users/{users[0]}/audit").json()
        assert after == before

    def test_insufficient_data_fails_cleanly(self, client, store, tmp_path):
        make_users(client, 2)
        r = client.post("/api/model/refresh", params={"wait": "true"})
        assert r.json()["status"] == "failed"
        assert r.json()["error"]

    def test_usage_series(self, client, store, tmp_path):
        users = self.fit(client, store, tmp_path)
        r = client.get(f"/api/users/{users[0]}/usage")
        body = r.json()
        series = body["series"]
        assert len(series["days"]) == len(series["user"]) == len(series["group_mean"])
        observed = [v for v in series["user"] if v is not None]
        assert observed  # the user has readings in the window

    def test_health_during_refresh(self, client, store, tmp_path):
        users = make_users(client, 5)
        load_meter(store, tmp_path, users)
        client.post("/api/model/refresh")  # fire and forget
        assert client.get("/api/health").json() == {"status": "ok"}


def test_stats_counts_track_writes(client):
    u1, u2 = make_users(client, 2)
    client.post("/api/answers", json={"user_id": u1, "question_id": "q1", "value": 2})
    client.post("/api/answers", json={"user_id": u2, "question_id": "q1", "value": 5})
    stats = client.get("/api/stats").json()
    assert stats["users"] == 2 and stats["answers"] == 2
    assert stats["min_column_missing_fraction"] == 0.0  # q1 fully answered
