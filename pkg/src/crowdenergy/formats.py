"""CSV/JSON file formats shared by the simulator, the store and the pipeline.

questions.csv: id,author,qtype,status,created_at,text (RFC-4180 quoting)
answers.csv:   user_id,question_id,value,timestamp (ISO-8601 UTC)
meter.csv:     user_id,interval_start,kwh
matrix.csv:    header = question ids, one row per user, empty field = missing
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import pandas as pd

from .domain import Answer, AnswerMatrix, AnswerValue, DomainError, Question
from .preprocess import StandardizedMatrix
from .simulate import GroundTruth, PlantedEffect


def _iso(ts: datetime | None) -> str:
    if ts is None:
        return ""
    return ts.astimezone(timezone.utc).isoformat()


def _parse_ts(text: str) -> datetime | None:
    return datetime.fromisoformat(text) if text else None


def write_questions_csv(path: Path, questions: list[Question]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "author", "qtype", "status", "created_at", "text"])
        for q in questions:
            w.writerow([q.id, q.author, q.qtype, q.status, _iso(q.created_at), q.text])


def read_questions_csv(path: Path) -> list[Question]:
    with open(path, newline="") as fh:
        return [
            Question(
                row["id"], row["text"], row["qtype"], row["status"],
                row["author"], _parse_ts(row["created_at"]),
            )
            for row in csv.DictReader(fh)
        ]


def format_answer_value(v: AnswerValue) -> str:
    if v.kind == "yes_no":
        return "yes" if v.value else "no"
    if v.kind == "likert":
        return str(int(v.value))
    return repr(float(v.value))


def parse_answer_value(text: str, qtype: str) -> AnswerValue:
    if qtype == "yes_no":
        if text not in ("yes", "no"):
            raise DomainError(f"bad yes/no answer {text!r}")
        return AnswerValue.yes_no(text == "yes")
    if qtype == "likert5":
        return AnswerValue.likert(int(text))
    return AnswerValue.numeric(float(text))


def write_answers_csv(path: Path, answers: list[Answer]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["user_id", "question_id", "value", "timestamp"])
        for a in answers:
            w.writerow([a.user_id, a.question_id, format_answer_value(a.value), _iso(a.timestamp)])


def read_answers_csv(path: Path, questions: list[Question]) -> list[Answer]:
    qtypes = {q.id: q.qtype for q in questions}
    answers = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            qid = row["question_id"]
            if qid not in qtypes:
                raise DomainError(f"answer references unknown question {qid}")
            answers.append(Answer(
                int(row["user_id"]), qid,
                parse_answer_value(row["value"], qtypes[qid]),
                _parse_ts(row["timestamp"]),
            ))
    return answers


def write_meter_csv(path: Path, readings: pd.DataFrame) -> None:
    df = readings.copy()
    df["interval_start"] = pd.to_datetime(df["interval_start"], utc=True).map(
        lambda t: t.isoformat()
    )
    df.to_csv(path, index=False, columns=["user_id", "interval_start", "kwh"])


def read_meter_csv(path: Path) -> pd.DataFrame:
    df = pd.read_csv(path)
    df["interval_start"] = pd.to_datetime(df["interval_start"], utc=True)
    return df


def write_ground_truth(path: Path, gt: GroundTruth) -> None:
    payload = {
        "signal_question_ids": gt.signal_question_ids,
        "effects": [
            {"form": e.form, "weight": e.weight, "qtype": e.qtype} for e in gt.effects
        ],
        "traits": np.asarray(gt.traits).tolist(),
        "window_start": gt.window_start.isoformat() if gt.window_start else None,
        "window_end": gt.window_end.isoformat() if gt.window_end else None,
    }
    path.write_text(json.dumps(payload, sort_keys=True))


def read_ground_truth(path: Path) -> GroundTruth:
    payload = json.loads(path.read_text())
    from datetime import date

    return GroundTruth(
        signal_question_ids=payload["signal_question_ids"],
        effects=[PlantedEffect(e["form"], e["weight"], e["qtype"]) for e in payload["effects"]],
        traits=np.asarray(payload["traits"]),
        window_start=date.fromisoformat(payload["window_start"]) if payload["window_start"] else None,
        window_end=date.fromisoformat(payload["window_end"]) if payload["window_end"] else None,
    )


def write_matrix_csv(path: Path, m: AnswerMatrix) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["user_id"] + m.question_ids)
        for i, u in enumerate(m.user_ids):
            row = [
                "" if np.isnan(v) else repr(float(v)) for v in m.values[i]
            ]
            w.writerow([u] + row)


def write_standardized_export(path: Path, z: StandardizedMatrix) -> None:
    """matrix.csv-style export of z plus a stats.json sidecar."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["user_id"] + z.question_ids)
        for i, u in enumerate(z.user_ids):
            w.writerow([u] + [repr(float(v)) for v in z.z[i]])
    stats = {
        q: {
            "mean": float(z.col_means[j]),
            "sd": float(z.col_sds[j]),
            "missing_fraction": float(z.imputed_mask[:, j].mean()),
        }
        for j, q in enumerate(z.question_ids)
    }
    path.with_name("stats.json").write_text(json.dumps(stats, sort_keys=True))
