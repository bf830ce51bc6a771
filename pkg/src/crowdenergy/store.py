"""Embedded file-backed persistence: append-only JSONL logs for questions,
moderation decisions, answers and participants, plus a CSV log for meter
readings.

Single-writer, multi-reader: every mutation is serialized through one lock
and appended to its log before the in-memory state updates. ``snapshot``
returns a frozen, timestamp-filtered view that never blocks the writer.
``compact`` rewrites the logs with duplicate meter keys and superseded
moderation state folded in.
"""
from __future__ import annotations

import csv
import json
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import pandas as pd

from .domain import (
    Answer,
    AnswerValue,
    DomainError,
    EXPERT_AUTHOR,
    Participant,
    Question,
    QUESTION_TYPES,
    SEED_QUESTIONS,
)


class ConflictError(DomainError):
    """A state transition that has already happened (e.g. double moderation)."""


@dataclass
class ModerationDecision:
    question_id: str
    decision: str  # approve | reject
    reason: str | None
    decided_at: datetime


@dataclass
class IngestReport:
    stored: int
    rejected: list[tuple[int, str]] = field(default_factory=list)  # (line number, reason)


@dataclass
class StoreSnapshot:
    as_of: datetime
    questions: list[Question]
    answers: list[Answer]
    participants: list[Participant]
    readings: pd.DataFrame


def _now() -> datetime:
    return datetime.now(timezone.utc)


def _iso(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).isoformat()


class Store:
    """Append-only store rooted at a directory."""

    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.RLock()
        self._questions: dict[str, Question] = {}
        self._decisions: dict[str, ModerationDecision] = {}
        self._answers: list[Answer] = []
        self._participants: dict[int, Participant] = {}
        self._readings: dict[tuple[int, str], tuple[float, datetime]] = {}
        self._load()

    # -- paths ---------------------------------------------------------------
    @property
    def _qlog(self) -> Path:
        return self.root / "questions.jsonl"

    @property
    def _alog(self) -> Path:
        return self.root / "answers.jsonl"

    @property
    def _plog(self) -> Path:
        return self.root / "participants.jsonl"

    @property
    def _mlog(self) -> Path:
        return self.root / "meter.log.csv"

    def _append(self, path: Path, record: dict) -> None:
        with open(path, "a") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")

    # -- load ----------------------------------------------------------------
    def _load(self) -> None:
        if self._qlog.exists():
            for line in self._qlog.read_text().splitlines():
                rec = json.loads(line)
                if rec["event"] == "submit":
                    q = Question(
                        rec["id"], rec["text"], rec["qtype"], "pending",
                        rec["author"], datetime.fromisoformat(rec["at"]),
                    )
                    self._questions[q.id] = q
                else:  # moderate
                    q = self._questions[rec["id"]]
                    status = "approved" if rec["decision"] == "approve" else "rejected"
                    self._questions[q.id] = q.with_status(status)
                    self._decisions[q.id] = ModerationDecision(
                        q.id, rec["decision"], rec.get("reason"),
                        datetime.fromisoformat(rec["at"]),
                    )
        if self._plog.exists():
            for line in self._plog.read_text().splitlines():
                rec = json.loads(line)
                p = Participant(rec["id"], datetime.fromisoformat(rec["at"]))
                self._participants[p.id] = p
        if self._alog.exists():
            for line in self._alog.read_text().splitlines():
                rec = json.loads(line)
                self._answers.append(Answer(
                    rec["user_id"], rec["question_id"],
                    AnswerValue(rec["kind"], rec["value"]),
                    datetime.fromisoformat(rec["at"]),
                ))
        if self._mlog.exists():
            with open(self._mlog, newline="") as fh:
                for row in csv.reader(fh):
                    user, day, kwh, at = row
                    self._readings[(int(user), day)] = (
                        float(kwh), datetime.fromisoformat(at)
                    )

    # -- writes --------------------------------------------------------------
    def add_participant(self, joined_at: datetime | None = None) -> Participant:
        with self._lock:
            joined_at = joined_at or _now()
            pid = max(self._participants, default=0) + 1
            p = Participant(pid, joined_at)
            self._append(self._plog, {"id": pid, "at": _iso(joined_at)})
            self._participants[pid] = p
            return p

    def submit_question(
        self,
        author: str,
        text: str,
        qtype: str,
        created_at: datetime | None = None,
        question_id: str | None = None,
    ) -> Question:
        with self._lock:
            if not text:
                raise DomainError("question text must be non-empty")
            if qtype not in QUESTION_TYPES:
                raise DomainError(f"unknown question type {qtype!r}")
            if author != EXPERT_AUTHOR and int(author) not in self._participants:
                raise DomainError(f"unknown author {author!r}")
            created_at = created_at or _now()
            qid = question_id or f"q{len(self._questions) + 1}"
            if qid in self._questions:
                raise ConflictError(f"question id {qid} already exists")
            q = Question(qid, text, qtype, "pending", author, created_at)
            self._append(self._qlog, {
                "event": "submit", "id": qid, "text": text, "qtype": qtype,
                "author": author, "at": _iso(created_at),
            })
            self._questions[qid] = q
            return q

    def moderate_question(
        self,
        question_id: str,
        decision: str,
        reason: str | None = None,
        decided_at: datetime | None = None,
    ) -> Question:
        with self._lock:
            if decision not in ("approve", "reject"):
                raise DomainError(f"unknown decision {decision!r}")
            q = self._questions.get(question_id)
            if q is None:
                raise DomainError(f"unknown question {question_id}")
            if q.status != "pending":
                raise ConflictError(f"question {question_id} already moderated")
            decided_at = decided_at or _now()
            self._append(self._qlog, {
                "event": "moderate", "id": question_id, "decision": decision,
                "reason": reason, "at": _iso(decided_at),
            })
            updated = q.with_status("approved" if decision == "approve" else "rejected")
            self._questions[question_id] = updated
            self._decisions[question_id] = ModerationDecision(
                question_id, decision, reason, decided_at
            )
            return updated

    def post_answer(
        self,
        user_id: int,
        question_id: str,
        value: AnswerValue,
        timestamp: datetime | None = None,
    ) -> Answer:
        with self._lock:
            q = self._questions.get(question_id)
            if q is None:
                raise DomainError(f"unknown question {question_id}")
            if q.status != "approved":
                raise DomainError(f"question {question_id} is not answerable")
            if user_id not in self._participants:
                raise DomainError(f"unknown participant {user_id}")
            if not value.matches_qtype(q.qtype):
                raise DomainError(
                    f"answer kind {value.kind} does not match question type {q.qtype}"
                )
            timestamp = timestamp or _now()
            a = Answer(user_id, question_id, value, timestamp)
            self._append(self._alog, {
                "user_id": user_id, "question_id": question_id,
                "kind": value.kind, "value": value.value, "at": _iso(timestamp),
            })
            self._answers.append(a)
            return a

    def ingest_meter_csv(self, path: Path | str, received_at: datetime | None = None) -> IngestReport:
        """Upsert daily readings from a meter.csv file.

        Malformed rows and negative kwh are rejected per row with their line
        number; duplicate (user, day) keys overwrite, so re-ingest is
        idempotent. Sub-daily intervals are summed into their day.
        """
        received_at = received_at or _now()
        report = IngestReport(stored=0)
        daily: dict[tuple[int, str], float] = {}
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            for lineno, row in enumerate(reader, start=2):
                try:
                    user = int(row["user_id"])
                    # fromisoformat rejects a trailing Z before Python 3.11
                    ts = datetime.fromisoformat(row["interval_start"].replace("Z", "+00:00"))
                    kwh = float(row["kwh"])
                except (KeyError, TypeError, ValueError) as exc:
                    report.rejected.append((lineno, f"malformed row: {exc}"))
                    continue
                if not kwh >= 0.0:
                    report.rejected.append((lineno, "negative kwh"))
                    continue
                daily[(user, ts.date().isoformat())] = (
                    daily.get((user, ts.date().isoformat()), 0.0) + kwh
                )
        with self._lock:
            with open(self._mlog, "a", newline="") as fh:
                w = csv.writer(fh)
                for (user, day), kwh in daily.items():
                    w.writerow([user, day, repr(kwh), _iso(received_at)])
                    self._readings[(user, day)] = (kwh, received_at)
                    report.stored += 1
        return report

    def ensure_seed_questions(self, at: datetime | None = None) -> int:
        """Load the expert seed questions on first boot; idempotent."""
        with self._lock:
            added = 0
            for qid, text, qtype in SEED_QUESTIONS:
                if qid in self._questions:
                    continue
                self.submit_question(EXPERT_AUTHOR, text, qtype, created_at=at, question_id=qid)
                self.moderate_question(qid, "approve", reason="seed", decided_at=at)
                added += 1
            return added

    def compact(self) -> None:
        """Rewrite the logs from current state, dropping superseded records."""
        with self._lock:
            tmp = self._qlog.with_suffix(".tmp")
            with open(tmp, "w") as fh:
                for q in self._questions.values():
                    fh.write(json.dumps({
                        "event": "submit", "id": q.id, "text": q.text,
                        "qtype": q.qtype, "author": q.author,
                        "at": _iso(q.created_at),
                    }, sort_keys=True) + "\n")
                for d in self._decisions.values():
                    fh.write(json.dumps({
                        "event": "moderate", "id": d.question_id,
                        "decision": d.decision, "reason": d.reason,
                        "at": _iso(d.decided_at),
                    }, sort_keys=True) + "\n")
            tmp.replace(self._qlog)
            tmp = self._mlog.with_suffix(".tmp")
            with open(tmp, "w", newline="") as fh:
                w = csv.writer(fh)
                for (user, day), (kwh, at) in self._readings.items():
                    w.writerow([user, day, repr(kwh), _iso(at)])
            tmp.replace(self._mlog)

    # -- reads ---------------------------------------------------------------
    def snapshot(self, as_of: datetime | None = None) -> StoreSnapshot:
        with self._lock:
            as_of = as_of or _now()
            questions = []
            for q in self._questions.values():
                if q.created_at > as_of:
                    continue
                d = self._decisions.get(q.id)
                if d is not None and d.decided_at > as_of:
                    q = q.with_status("pending")
                questions.append(q)
            answers = [a for a in self._answers if a.timestamp <= as_of]
            participants = [
                p for p in self._participants.values() if p.joined_at <= as_of
            ]
            rows = [
                (user, pd.Timestamp(day, tz="UTC"), kwh)
                for (user, day), (kwh, at) in self._readings.items()
                if at <= as_of
            ]
            readings = pd.DataFrame(rows, columns=["user_id", "interval_start", "kwh"])
            return StoreSnapshot(as_of, questions, answers, participants, readings)

    def question(self, question_id: str) -> Question | None:
        with self._lock:
            return self._questions.get(question_id)

    def participant(self, user_id: int) -> Participant | None:
        with self._lock:
            return self._participants.get(user_id)

    def answered_question_ids(self, user_id: int) -> set[str]:
        with self._lock:
            return {a.question_id for a in self._answers if a.user_id == user_id}
