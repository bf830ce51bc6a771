"""Forward-only stepwise-AIC linear regression and the per-user audit report.

The online model: starting from an intercept-only fit, greedily add the single
standardized answer column that most lowers AIC = n*ln(RSS/n) + 2*(k+1)
(k = number of predictors; the always-present intercept is not counted against
the term cap). Stops when no candidate lowers AIC or the cap is reached.
Ties break toward the lowest question id for determinism.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .domain import DomainError
from .preprocess import StandardizedMatrix

MAX_TERMS = 20
AUDIT_DISPLAY_LIMIT = 10


@dataclass
class LinearModel:
    selected: list[str]  # question ids, in order of addition
    beta: dict[str, float]
    intercept: float
    aic_trace: list[float]  # AIC after each addition, starting at intercept-only
    residuals: np.ndarray
    skipped: list[str] = field(default_factory=list)  # rank-deficient candidates

    def predict_row(self, z_row: np.ndarray, question_ids: list[str]) -> float:
        qindex = {q: j for j, q in enumerate(question_ids)}
        return self.intercept + sum(self.beta[q] * z_row[qindex[q]] for q in self.selected)

    def to_json(self) -> str:
        return json.dumps(
            {
                "selected": self.selected,
                "beta": self.beta,
                "intercept": self.intercept,
                "aic_trace": self.aic_trace,
            },
            sort_keys=True,
        )


@dataclass
class AuditReport:
    user_id: int
    entries: list[tuple[str, str, float]]  # (question id, text, contribution)
    predicted_deviation: float


def _aic(n: int, rss: float, k: int) -> float:
    # Gaussian log-likelihood with constants dropped; k predictors + intercept.
    rss = max(rss, 1e-300)
    return n * np.log(rss / n) + 2.0 * (k + 1)


def _ols_rss(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float, int]:
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    return coef, float(resid @ resid), rank


def fit_stepwise_aic(
    z: StandardizedMatrix | np.ndarray,
    y: np.ndarray,
    max_terms: int = MAX_TERMS,
    question_ids: list[str] | None = None,
) -> LinearModel:
    """Fit the forward-only stepwise-AIC model.

    ``z`` may be a StandardizedMatrix or a plain n x p array (then
    ``question_ids`` names the columns, defaulting to column indices).
    Rank-deficient candidate additions are skipped and reported.
    """
    if isinstance(z, StandardizedMatrix):
        question_ids = z.question_ids
        z = z.z
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = z.shape
    if question_ids is None:
        question_ids = [str(j) for j in range(p)]
    if n < 3:
        raise DomainError("stepwise fit needs at least 3 rows")
    if p < 1:
        raise DomainError("stepwise fit needs at least 1 feature")
    if len(y) != n:
        raise DomainError("outcome length does not match matrix rows")

    # candidate columns in lowest-question-id order: that ordering plus
    # strict improvement comparison implements the documented tie-break
    order = sorted(range(p), key=lambda j: question_ids[j])

    selected: list[int] = []
    skipped: list[str] = []
    X = np.ones((n, 1))
    rss0 = float(np.sum((y - y.mean()) ** 2))
    current_aic = _aic(n, rss0, 0)
    aic_trace = [current_aic]

    while len(selected) < max_terms:
        best_j, best_aic = None, current_aic
        for j in order:
            if j in selected:
                continue
            Xj = np.column_stack([X, z[:, j]])
            _, rss, rank = _ols_rss(Xj, y)
            if rank < Xj.shape[1]:
                skipped.append(question_ids[j])
                continue
            cand_aic = _aic(n, rss, len(selected) + 1)
            if cand_aic < best_aic:
                best_j, best_aic = j, cand_aic
        if best_j is None:
            break
        selected.append(best_j)
        X = np.column_stack([X, z[:, best_j]])
        current_aic = best_aic
        aic_trace.append(current_aic)

    coef, _, _ = _ols_rss(X, y)
    residuals = y - X @ coef
    return LinearModel(
        selected=[question_ids[j] for j in selected],
        beta={question_ids[j]: float(coef[k + 1]) for k, j in enumerate(selected)},
        intercept=float(coef[0]),
        aic_trace=aic_trace,
        residuals=residuals,
        skipped=sorted(set(skipped)),
    )


def audit_report(
    model: LinearModel,
    z: StandardizedMatrix,
    user_id: int,
    question_texts: dict[str, str] | None = None,
    limit: int = AUDIT_DISPLAY_LIMIT,
) -> AuditReport:
    """Top per-user contributions |beta_j * z_ij| of the fitted model.

    At most ``limit`` entries, sorted by absolute contribution descending.
    """
    try:
        i = z.user_ids.index(user_id)
    except ValueError:
        raise DomainError(f"unknown user {user_id}") from None
    qindex = {q: j for j, q in enumerate(z.question_ids)}
    texts = question_texts or {}

    contributions = [
        (q, texts.get(q, ""), model.beta[q] * float(z.z[i, qindex[q]]))
        for q in model.selected
    ]
    contributions.sort(key=lambda e: (-abs(e[2]), e[0]))
    predicted = model.intercept + sum(c for _, _, c in contributions)
    return AuditReport(user_id, contributions[:limit], predicted)
