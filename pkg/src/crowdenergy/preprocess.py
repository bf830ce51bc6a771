"""Outcome construction and feature-matrix preparation.

Turns daily meter readings into per-user outcome vectors (rolling 30-day
deviation from the group mean, or a fixed-window total), and turns the sparse
answer matrix into a dense standardized matrix: per-column z-scores over the
answered cells, |z| >= 3 outlier dropping iterated to convergence, and zero
imputation of everything missing. Also builds the column-shuffled null
dataset.
"""
from __future__ import annotations

from dataclasses import dataclass
from datetime import date, timedelta
from typing import Sequence

import numpy as np
import pandas as pd

from .domain import AnswerMatrix, DomainError

ROLLING_DAYS = 28
ROLLING_SCALE = 30.0 / 28.0


@dataclass
class OutcomeVector:
    window: str
    user_ids: list[int]
    values: np.ndarray
    group_mean: float
    excluded: list[int]


@dataclass
class StandardizedMatrix:
    user_ids: list[int]
    question_ids: list[str]
    z: np.ndarray  # dense n x p, imputed cells exactly 0
    col_means: np.ndarray
    col_sds: np.ndarray
    imputed_mask: np.ndarray  # True where the cell was imputed

    @property
    def n_users(self) -> int:
        return len(self.user_ids)

    @property
    def n_questions(self) -> int:
        return len(self.question_ids)


def _daily_series(readings: pd.DataFrame) -> pd.DataFrame:
    """Normalize a readings frame to one row per (user_id, day).

    Sub-daily intervals are summed to daily totals.
    """
    df = readings.copy()
    df["day"] = pd.to_datetime(df["interval_start"]).dt.date
    return df.groupby(["user_id", "day"], as_index=False)["kwh"].sum()


def outcome_delta30(
    readings: pd.DataFrame,
    users: Sequence[int],
    as_of: date,
) -> OutcomeVector:
    """Rolling 30-day usage deviation from the group mean.

    Per user: sum of the 28 days ending at ``as_of`` (exclusive), scaled by
    30/28, minus the group mean of the same quantity. Users without full
    28-day coverage are excluded and reported.
    """
    daily = _daily_series(readings)
    start = as_of - timedelta(days=ROLLING_DAYS)
    window = daily[(daily["day"] >= start) & (daily["day"] < as_of)]
    counts = window.groupby("user_id")["day"].nunique()
    sums = window.groupby("user_id")["kwh"].sum()

    included, totals, excluded = [], [], []
    for u in users:
        if counts.get(u, 0) >= ROLLING_DAYS:
            included.append(u)
            totals.append(sums[u] * ROLLING_SCALE)
        else:
            excluded.append(u)
    if not included:
        raise DomainError("no users with sufficient meter coverage")
    totals = np.asarray(totals, dtype=float)
    group_mean = float(totals.mean())
    return OutcomeVector("rolling30", included, totals - group_mean, group_mean, excluded)


def outcome_window_total(
    readings: pd.DataFrame,
    users: Sequence[int],
    start: date,
    end: date,
    min_coverage: float = 0.9,
    standardize: bool = True,
    log_outcome: bool = False,
) -> OutcomeVector:
    """Total kWh per user over [start, end), optionally z-scored.

    Users covering fewer than ``min_coverage`` of the window days are
    excluded. With ``standardize`` (the default) the totals are converted to
    z-scores so that a no-signal model has unit mean squared error.
    """
    if end <= start:
        raise DomainError("window start must precede end")
    n_days = (end - start).days
    daily = _daily_series(readings)
    window = daily[(daily["day"] >= start) & (daily["day"] < end)]
    counts = window.groupby("user_id")["day"].nunique()
    sums = window.groupby("user_id")["kwh"].sum()

    included, totals, excluded = [], [], []
    for u in users:
        if counts.get(u, 0) >= min_coverage * n_days:
            included.append(u)
            totals.append(sums[u])
        else:
            excluded.append(u)
    if not included:
        raise DomainError("no users cover the requested window")
    totals = np.asarray(totals, dtype=float)
    group_mean = float(totals.mean())
    values = np.log(totals) if log_outcome else totals
    if standardize:
        values = (values - values.mean()) / values.std(ddof=1)
    return OutcomeVector(f"fixed_window({start},{end})", included, values, group_mean, excluded)


def standardize_impute(m: AnswerMatrix, drop_outliers: bool = True) -> StandardizedMatrix:
    """Column-wise z-scores with outlier removal and zero imputation.

    Per column, over answered cells: z-score with the sample (n-1) standard
    deviation; cells with |z| >= 3 are dropped and the survivors re-scored,
    repeating until no observed z-score reaches 3 (one drop pass alone cannot
    guarantee that, because re-standardizing shrinks the scale). Missing and
    dropped cells are imputed with exactly 0. Columns with fewer than two
    distinct observed values come out all-zero.
    """
    raw = m.values
    n, p = raw.shape
    z = np.zeros_like(raw)
    col_means = np.zeros(p)
    col_sds = np.zeros(p)
    observed = ~np.isnan(raw)

    for j in range(p):
        obs = observed[:, j].copy()
        degenerate = False
        while True:
            if obs.sum() < 2:
                degenerate = True
                break
            vals = raw[obs, j]
            mean, sd = vals.mean(), vals.std(ddof=1)
            if sd == 0.0:
                degenerate = True
                break
            if not drop_outliers:
                break
            keep = np.abs((vals - mean) / sd) < 3.0
            if keep.all():
                break
            obs[np.flatnonzero(obs)[~keep]] = False
        if degenerate:
            observed[:, j] = False
            if obs.sum() >= 1:
                col_means[j] = raw[obs, j].mean()
            continue
        observed[:, j] = obs
        col_means[j] = mean
        col_sds[j] = sd
        z[obs, j] = (vals - mean) / sd

    return StandardizedMatrix(
        user_ids=list(m.user_ids),
        question_ids=list(m.question_ids),
        z=z,
        col_means=col_means,
        col_sds=col_sds,
        imputed_mask=~observed,
    )


def shuffle_null(m, seed: int):
    """Independently permute each column across rows, values and missingness
    moving together; returns the same type as the input.

    The per-column multiset (including missing markers) is preserved exactly,
    while rows are decoupled from any outcome. Deterministic given ``seed``.
    """
    rng = np.random.default_rng(seed)
    if isinstance(m, AnswerMatrix):
        vals = m.values.copy()
        for j in range(vals.shape[1]):
            rng.shuffle(vals[:, j])
        return AnswerMatrix(list(m.user_ids), list(m.question_ids), vals)
    if isinstance(m, StandardizedMatrix):
        z = m.z.copy()
        imputed = m.imputed_mask.copy()
        for j in range(z.shape[1]):
            perm = rng.permutation(z.shape[0])
            z[:, j] = z[perm, j]
            imputed[:, j] = imputed[perm, j]
        return StandardizedMatrix(
            list(m.user_ids), list(m.question_ids), z,
            m.col_means.copy(), m.col_sds.copy(), imputed,
        )
    raise TypeError(f"cannot shuffle {type(m).__name__}")
