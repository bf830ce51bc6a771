"""JSON-over-HTTP service for the collaborative Q&A loop, usage comparison
and the per-user virtual energy audit.

Writes go through the store's single-writer contract; reads work on
snapshots. The served linear model is refit in a background thread and
swapped atomically — a failed refit leaves the previous model in place, and
concurrent refresh requests coalesce onto the running job.
"""
from __future__ import annotations

import itertools
import logging
import threading
from dataclasses import dataclass
from datetime import timedelta

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .domain import (
    AnswerValue,
    DomainError,
    LIKERT_LEVELS,
    build_matrix,
    sparsity_stats,
)
from .linear_audit import LinearModel, audit_report, fit_stepwise_aic
from .preprocess import (
    ROLLING_DAYS,
    StandardizedMatrix,
    _daily_series,
    outcome_delta30,
    standardize_impute,
)
from .store import ConflictError, Store

log = logging.getLogger(__name__)

MIN_FIT_USERS = 3


class ApiError(Exception):
    """Maps onto a JSON error body with a stable machine-readable code."""

    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


@dataclass
class ServedModel:
    """A fitted model together with the snapshot it was fitted on.

    Audit responses read only from here, so they are a pure function of the
    served model and never observe a half-applied refresh.
    """

    model: LinearModel
    z: StandardizedMatrix
    question_texts: dict[str, str]
    fitted_users: list[int]


def _parse_value(raw, qtype: str) -> AnswerValue:
    try:
        if qtype == "yes_no":
            if isinstance(raw, bool):
                return AnswerValue.yes_no(raw)
            if raw in ("yes", "no"):
                return AnswerValue.yes_no(raw == "yes")
            raise DomainError(f"expected yes/no, got {raw!r}")
        if qtype == "likert5":
            if isinstance(raw, bool) or int(raw) != raw:
                raise DomainError(f"expected a level in 1..5, got {raw!r}")
            return AnswerValue.likert(int(raw))
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise DomainError(f"expected a number, got {raw!r}")
        return AnswerValue.numeric(float(raw))
    except (TypeError, ValueError) as exc:
        raise DomainError(str(exc)) from None


def _question_json(q) -> dict:
    return {
        "id": q.id,
        "text": q.text,
        "qtype": q.qtype,
        "status": q.status,
        "author": q.author,
        "created_at": q.created_at.isoformat() if q.created_at else None,
        "likert_levels": LIKERT_LEVELS if q.qtype == "likert5" else None,
    }


def create_app(store: Store, master_seed: int = 0) -> FastAPI:
    app = FastAPI(title="crowdenergy")
    app.state.store = store
    app.state.served_model: ServedModel | None = None
    app.state.refresh_lock = threading.Lock()
    app.state.refresh_thread: threading.Thread | None = None
    app.state.refresh_job = 0
    app.state.last_refresh_error: str | None = None
    request_counter = itertools.count()

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content={"error": {"code": exc.code, "message": exc.message}},
        )

    def _require_user(user_id: int):
        p = store.participant(user_id)
        if p is None:
            raise ApiError(404, "unknown_user", f"no participant {user_id}")
        return p

    # -- questions -----------------------------------------------------------
    @app.post("/api/questions", status_code=201)
    async def submit_question(body: dict):
        try:
            q = store.submit_question(
                str(body["author"]), body.get("text", ""), body.get("qtype", "")
            )
        except KeyError as exc:
            raise ApiError(422, "validation_error", f"missing field {exc}")
        except ConflictError as exc:
            raise ApiError(409, "conflict", str(exc))
        except DomainError as exc:
            raise ApiError(422, "validation_error", str(exc))
        return _question_json(q)

    @app.post("/api/questions/{question_id}/moderate")
    async def moderate(question_id: str, body: dict):
        try:
            q = store.moderate_question(
                question_id, body.get("decision", ""), body.get("reason")
            )
        except ConflictError as exc:
            raise ApiError(409, "conflict", str(exc))
        except DomainError as exc:
            if store.question(question_id) is None:
                raise ApiError(404, "unknown_question", str(exc))
            raise ApiError(422, "validation_error", str(exc))
        return _question_json(q)

    @app.get("/api/questions/pending")
    async def pending_questions():
        snap = store.snapshot()
        return {
            "questions": [
                _question_json(q) for q in snap.questions if q.status == "pending"
            ]
        }

    @app.get("/api/questions/next")
    async def next_questions(user: int, limit: int = 10):
        _require_user(user)
        if limit < 0:
            raise ApiError(422, "validation_error", "limit must be >= 0")
        answered = store.answered_question_ids(user)
        snap = store.snapshot()
        open_qs = [
            q for q in snap.questions
            if q.status == "approved" and q.id not in answered
        ]
        rng = np.random.default_rng(
            np.random.SeedSequence([master_seed, next(request_counter)])
        )
        take = min(limit, len(open_qs))
        picks = rng.choice(len(open_qs), size=take, replace=False) if take else []
        return {"questions": [_question_json(open_qs[i]) for i in picks]}

    # -- answers -------------------------------------------------------------
    @app.post("/api/answers", status_code=201)
    async def post_answer(body: dict):
        try:
            user_id = int(body["user_id"])
            question_id = str(body["question_id"])
            raw = body["value"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ApiError(422, "validation_error", f"bad answer body: {exc}")
        _require_user(user_id)
        q = store.question(question_id)
        if q is None:
            raise ApiError(404, "unknown_question", f"no question {question_id}")
        if q.status != "approved":
            raise ApiError(403, "not_answerable", f"question {question_id} is {q.status}")
        try:
            value = _parse_value(raw, q.qtype)
            a = store.post_answer(user_id, question_id, value)
        except DomainError as exc:
            raise ApiError(422, "validation_error", str(exc))
        return {
            "user_id": a.user_id,
            "question_id": a.question_id,
            "value": raw,
            "timestamp": a.timestamp.isoformat(),
        }

    # -- usage / audit -------------------------------------------------------
    def _usage_series(user_id: int) -> dict:
        snap = store.snapshot()
        if snap.readings.empty:
            raise ApiError(404, "no_meter_data", f"no readings for user {user_id}")
        daily = _daily_series(snap.readings)
        mine = daily[daily["user_id"] == user_id]
        if mine.empty:
            raise ApiError(404, "no_meter_data", f"no readings for user {user_id}")
        last = daily["day"].max()
        days = [last - timedelta(days=d) for d in range(ROLLING_DAYS + 1, -1, -1)]
        by_day = daily.groupby("day")["kwh"].mean()
        user_by_day = mine.set_index("day")["kwh"]
        return {
            "days": [d.isoformat() for d in days],
            "user": [
                float(user_by_day[d]) if d in user_by_day.index else None for d in days
            ],
            "group_mean": [
                float(by_day[d]) if d in by_day.index else None for d in days
            ],
        }

    @app.get("/api/users/{user_id}/usage")
    async def usage(user_id: int):
        _require_user(user_id)
        return {"user_id": user_id, "series": _usage_series(user_id)}

    @app.get("/api/users/{user_id}/audit")
    async def audit(user_id: int):
        _require_user(user_id)
        served: ServedModel | None = app.state.served_model
        if served is None:
            raise ApiError(409, "model_pending", "no model fitted yet")
        if user_id not in served.z.user_ids:
            raise ApiError(
                409, "model_pending",
                f"user {user_id} was not part of the last model fit",
            )
        report = audit_report(served.model, served.z, user_id, served.question_texts)
        return {
            "user_id": user_id,
            "predicted_deviation_kwh": report.predicted_deviation,
            "entries": [
                {"question_id": qid, "text": text, "contribution_kwh": c}
                for qid, text, c in report.entries
            ],
            "series": _usage_series(user_id),
        }

    # -- model refresh -------------------------------------------------------
    def _refit():
        try:
            snap = store.snapshot()
            report = build_matrix(snap.questions, snap.answers, snap.participants)
            if snap.readings.empty:
                raise DomainError("no meter data")
            daily = _daily_series(snap.readings)
            as_of = daily["day"].max() + timedelta(days=1)
            outcome = outcome_delta30(snap.readings, report.matrix.user_ids, as_of)
            if len(outcome.user_ids) < MIN_FIT_USERS:
                raise DomainError(
                    f"need >= {MIN_FIT_USERS} users with full meter coverage"
                )
            keep = [report.matrix.user_ids.index(u) for u in outcome.user_ids]
            z = standardize_impute(report.matrix)
            z = StandardizedMatrix(
                user_ids=outcome.user_ids,
                question_ids=z.question_ids,
                z=z.z[keep],
                col_means=z.col_means,
                col_sds=z.col_sds,
                imputed_mask=z.imputed_mask[keep],
            )
            model = fit_stepwise_aic(z, outcome.values)
            texts = {q.id: q.text for q in snap.questions}
            app.state.served_model = ServedModel(model, z, texts, outcome.user_ids)
            app.state.last_refresh_error = None
        except Exception as exc:  # old model stays served
            app.state.last_refresh_error = str(exc)
            log.warning("model refresh failed: %s", exc)

    @app.post("/api/model/refresh", status_code=202)
    async def refresh_model(wait: bool = False):
        with app.state.refresh_lock:
            thread = app.state.refresh_thread
            if thread is not None and thread.is_alive():
                status = "coalesced"
            else:
                app.state.refresh_job += 1
                thread = threading.Thread(target=_refit, daemon=True)
                app.state.refresh_thread = thread
                thread.start()
                status = "started"
            job = app.state.refresh_job
        if wait:
            thread.join()
            status = "done" if app.state.last_refresh_error is None else "failed"
        return {"job": job, "status": status, "error": app.state.last_refresh_error}

    # -- stats / health ------------------------------------------------------
    @app.get("/api/stats")
    async def stats():
        snap = store.snapshot()
        by_status = {"pending": 0, "approved": 0, "rejected": 0}
        for q in snap.questions:
            by_status[q.status] += 1
        min_missing = None
        if snap.answers and snap.participants:
            report = build_matrix(snap.questions, snap.answers, snap.participants)
            if report.matrix.n_questions and report.matrix.n_users:
                min_missing = sparsity_stats(report.matrix).min_missing_fraction
        return {
            "users": len(snap.participants),
            "questions": by_status,
            "answers": len(snap.answers),
            "min_column_missing_fraction": min_missing,
        }

    @app.post("/api/participants", status_code=201)
    async def add_participant():
        p = store.add_participant()
        return {"id": p.id, "joined_at": p.joined_at.isoformat()}

    @app.get("/api/health")
    async def health():
        return {"status": "ok"}

    return app
