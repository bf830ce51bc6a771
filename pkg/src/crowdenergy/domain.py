"""Survey/energy domain types: questions, answers, participants and the
sparse answer matrix.

Answer kinds are encoded onto a common numeric scale so that downstream
standardization can treat every column uniformly: yes/no maps to 0/1,
five-level agreement answers map to their level 1..5, numeric answers pass
through unchanged.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterable, Sequence

import numpy as np

QUESTION_TYPES = ("numeric", "yes_no", "likert5")
QUESTION_STATUSES = ("pending", "approved", "rejected")

LIKERT_LEVELS = {
    1: "Strongly Disagree",
    2: "Disagree",
    3: "Neither agree nor disagree",
    4: "Agree",
    5: "Strongly Agree",
}

#: The six expert-authored seed questions loaded into a fresh store.
SEED_QUESTIONS = (
    ("q1", "I generally use air conditioners on hot summer days", "likert5"),
    ("q2", "Do you have a hot tub?", "yes_no"),
    ("q3", "How many teenagers are in your home?", "numeric"),
    ("q4", "How many loads of laundry do you do per week?", "numeric"),
    ("q5", "Do you have an electric hot water tank?", "yes_no"),
    ("q6", "Most of my appliances (laundry machines, refrigerator, etc.) are high efficiency.", "likert5"),
)

EXPERT_AUTHOR = "expert"


class DomainError(ValueError):
    """Invalid domain object or operation."""


@dataclass(frozen=True)
class Question:
    id: str
    text: str
    qtype: str
    status: str = "pending"
    author: str = EXPERT_AUTHOR
    created_at: datetime | None = None

    def __post_init__(self):
        if not self.text:
            raise DomainError("question text must be non-empty")
        if self.qtype not in QUESTION_TYPES:
            raise DomainError(f"unknown question type {self.qtype!r}")
        if self.status not in QUESTION_STATUSES:
            raise DomainError(f"unknown question status {self.status!r}")

    def with_status(self, status: str) -> "Question":
        return Question(self.id, self.text, self.qtype, status, self.author, self.created_at)


@dataclass(frozen=True)
class AnswerValue:
    """A typed answer: kind is one of numeric / yes_no / likert."""

    kind: str
    value: float | bool | int

    def __post_init__(self):
        if self.kind == "numeric":
            if not math.isfinite(float(self.value)):
                raise DomainError("numeric answers must be finite")
        elif self.kind == "yes_no":
            if not isinstance(self.value, (bool, np.bool_)):
                raise DomainError("yes/no answers must be boolean")
        elif self.kind == "likert":
            if int(self.value) not in LIKERT_LEVELS:
                raise DomainError("likert answers must be a level in 1..5")
        else:
            raise DomainError(f"unknown answer kind {self.kind!r}")

    @staticmethod
    def numeric(x: float) -> "AnswerValue":
        return AnswerValue("numeric", float(x))

    @staticmethod
    def yes_no(b: bool) -> "AnswerValue":
        return AnswerValue("yes_no", bool(b))

    @staticmethod
    def likert(level: int) -> "AnswerValue":
        return AnswerValue("likert", int(level))

    def matches_qtype(self, qtype: str) -> bool:
        return {"numeric": "numeric", "yes_no": "yes_no", "likert5": "likert"}[qtype] == self.kind


def encode_answer(v: AnswerValue) -> float:
    """Encode an answer onto the common numeric scale.

    numeric passes through, no/yes -> 0/1, likert level k -> k.
    Injective within each answer kind.
    """
    if v.kind == "numeric":
        return float(v.value)
    if v.kind == "yes_no":
        return 1.0 if v.value else 0.0
    return float(int(v.value))


@dataclass(frozen=True)
class Participant:
    id: int
    joined_at: datetime | None = None


@dataclass(frozen=True)
class Answer:
    user_id: int
    question_id: str
    value: AnswerValue
    timestamp: datetime | None = None


@dataclass
class AnswerMatrix:
    """Immutable users x questions snapshot of encoded answers.

    ``values[i, j]`` is the encoded answer of user ``user_ids[i]`` to question
    ``question_ids[j]``, NaN where missing.
    """

    user_ids: list[int]
    question_ids: list[str]
    values: np.ndarray  # n x p float, NaN = missing

    @property
    def n_users(self) -> int:
        return len(self.user_ids)

    @property
    def n_questions(self) -> int:
        return len(self.question_ids)

    @property
    def observed(self) -> np.ndarray:
        return ~np.isnan(self.values)

    @property
    def n_filled(self) -> int:
        return int(self.observed.sum())

    def fill_fraction(self) -> float:
        return self.n_filled / (self.n_users * self.n_questions)


@dataclass
class BuildReport:
    matrix: AnswerMatrix
    rejected: list[Answer] = field(default_factory=list)


def build_matrix(
    questions: Sequence[Question],
    answers: Iterable[Answer],
    participants: Sequence[Participant] | None = None,
) -> BuildReport:
    """Assemble the sparse answer matrix from an answer log.

    Columns are approved questions in input order; rows are participants in
    id order (derived from the answer log when ``participants`` is omitted).
    Duplicate answers to the same cell resolve last-write-wins by timestamp,
    falling back to log order for equal timestamps. Answers referencing an
    unknown or non-approved question, or an unknown participant, are reported
    in ``rejected`` rather than raising.
    """
    approved = [q for q in questions if q.status == "approved"]
    qindex = {q.id: j for j, q in enumerate(approved)}
    answers = list(answers)

    if participants is not None:
        user_ids = sorted(p.id for p in participants)
    else:
        user_ids = sorted({a.user_id for a in answers})
    uindex = {u: i for i, u in enumerate(user_ids)}

    n, p = len(user_ids), len(approved)
    values = np.full((n, p), np.nan)
    # cell -> timestamp of the answer currently occupying it
    latest: dict[tuple[int, int], tuple] = {}
    rejected: list[Answer] = []
    for pos, a in enumerate(answers):
        j = qindex.get(a.question_id)
        i = uindex.get(a.user_id)
        if i is None or j is None:
            rejected.append(a)
            continue
        key = (a.timestamp or datetime.min, pos)
        if (i, j) in latest and key < latest[(i, j)]:
            continue
        latest[(i, j)] = key
        values[i, j] = encode_answer(a.value)

    return BuildReport(AnswerMatrix(user_ids, [q.id for q in approved], values), rejected)


@dataclass
class SparsityStats:
    column_missing_fraction: np.ndarray  # per question
    min_missing_fraction: float
    max_missing_fraction: float
    user_answer_counts: np.ndarray  # per user


def sparsity_stats(m: AnswerMatrix) -> SparsityStats:
    """Per-question missing fractions and per-user answered counts."""
    if m.n_users == 0 or m.n_questions == 0:
        raise DomainError("sparsity_stats requires a nonempty matrix")
    obs = m.observed
    col_missing = 1.0 - obs.mean(axis=0)
    return SparsityStats(
        column_missing_fraction=col_missing,
        min_missing_fraction=float(col_missing.min()),
        max_missing_fraction=float(col_missing.max()),
        user_answer_counts=obs.sum(axis=1).astype(int),
    )
