"""Statistical comparison machinery: exact two-sample Kolmogorov-Smirnov
test, true-vs-shuffled replicate comparison, pairwise-complete correlation
ranking, hypergeometric overlap probability, and the side-by-side rank table.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, exp, log, sqrt
from typing import Sequence

import numpy as np

from .domain import AnswerMatrix, DomainError
from .forest import ForestParams, fit_forest, importance_ranking
from .preprocess import StandardizedMatrix

#: Largest n*m for which the exact lattice-path p-value is required.
EXACT_LIMIT = 10_000


def _ks_statistic_int(a: np.ndarray, b: np.ndarray) -> int:
    """sup |ECDF_a - ECDF_b| on the integer grid: returns max |i*m - j*n|.

    Ties are handled by the ECDF convention: both functions jump at a tied
    value before the gap is measured.
    """
    n, m = len(a), len(b)
    values = np.unique(np.concatenate([a, b]))
    ia = np.searchsorted(np.sort(a), values, side="right")
    jb = np.searchsorted(np.sort(b), values, side="right")
    return int(np.max(np.abs(ia * m - jb * n)))


def _exact_pvalue(n: int, m: int, d_int: int) -> float:
    """P(max deviation >= d_int) over all C(n+m, n) orderings, exactly.

    Counts monotone lattice paths from (0,0) to (n,m) whose deviation
    |i*m - j*n| stays strictly below ``d_int`` everywhere, with exact integer
    arithmetic; the complement is the two-sided p-value.
    """
    if d_int <= 0:
        return 1.0
    # column-wise DP over path counts that never reach the barrier
    prev = [1] + [0] * m
    for j in range(1, m + 1):
        if abs(-j * n) >= d_int:
            prev[j] = 0
        else:
            prev[j] = prev[j - 1]
    for i in range(1, n + 1):
        cur = [0] * (m + 1)
        cur[0] = prev[0] if abs(i * m) < d_int else 0
        for j in range(1, m + 1):
            if abs(i * m - j * n) >= d_int:
                cur[j] = 0
            else:
                cur[j] = cur[j - 1] + prev[j]
        prev = cur
    total = comb(n + m, n)
    return float(Fraction(total - prev[m], total))


def _asymptotic_pvalue(n: int, m: int, d: float) -> float:
    """Kolmogorov survival function with the small-sample correction."""
    en = sqrt(n * m / (n + m))
    t = (en + 0.12 + 0.11 / en) * d
    if t < 1.1e-16:
        return 1.0
    x = -2.0 * t * t
    p, sign, r = 0.0, 1.0, 1
    while True:
        term = exp(x * r * r)
        p += sign * term
        if term == 0.0 or term / max(p, 1e-300) <= 1.1e-16:
            break
        r += 1
        sign = -sign
    return min(1.0, max(0.0, 2.0 * p))


def ks_exact_two_sample(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    """Two-sided two-sample KS test: returns (D, p).

    The p-value is exact (lattice-path count of orderings achieving a
    deviation >= the observed D) when n*m <= 10^4, asymptotic above.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise DomainError("KS test requires nonempty samples")
    n, m = len(a), len(b)
    d_int = _ks_statistic_int(a, b)
    d = d_int / (n * m)
    if n * m <= EXACT_LIMIT:
        p = _exact_pvalue(n, m, d_int)
    else:
        p = _asymptotic_pvalue(n, m, d)
    return d, max(p, 0.0)


@dataclass
class ReplicateComparison:
    true_mses: list[float]
    null_mses: list[float]
    ks_d: float
    p_value: float
    true_rankings: list[list[str]] = field(default_factory=list)
    null_rankings: list[list[str]] = field(default_factory=list)
    true_importances: list[np.ndarray] = field(default_factory=list)


def _rep_seed(master: int, tag: int, rep: int) -> int:
    return int(np.random.SeedSequence([master, tag, rep]).generate_state(1)[0])


def compare_true_vs_null(
    z: StandardizedMatrix | np.ndarray,
    z_shuf: StandardizedMatrix | np.ndarray,
    y: np.ndarray,
    params: ForestParams,
    reps: int = 10,
) -> ReplicateComparison:
    """Train ``reps`` forests on the true and the column-shuffled data and
    compare the two OOB-MSE samples with the exact KS test.

    Replicates differ only in their forest seeds, derived deterministically
    from ``params.seed``.
    """
    feature_ids = None
    if isinstance(z, StandardizedMatrix):
        feature_ids = z.question_ids
        z = z.z
    if isinstance(z_shuf, StandardizedMatrix):
        z_shuf = z_shuf.z
    if z.shape != z_shuf.shape:
        raise DomainError("true and shuffled matrices must have the same shape")

    true_mses, null_mses = [], []
    true_rankings, null_rankings, true_importances = [], [], []
    for rep in range(reps):
        for tag, X, mses, rankings in (
            (0, z, true_mses, true_rankings),
            (1, z_shuf, null_mses, null_rankings),
        ):
            p = ForestParams(
                n_trees=params.n_trees, mtry=params.mtry,
                min_node_size=params.min_node_size, max_depth=params.max_depth,
                bootstrap=params.bootstrap, seed=_rep_seed(params.seed, tag, rep),
            )
            forest = fit_forest(X, y, p, feature_ids=feature_ids)
            mses.append(forest.oob_mse)
            rankings.append([q for q, _ in importance_ranking(forest)])
            if tag == 0:
                true_importances.append(forest.importance_scores.copy())
    d, pval = ks_exact_two_sample(true_mses, null_mses)
    return ReplicateComparison(
        true_mses, null_mses, d, pval, true_rankings, null_rankings, true_importances
    )


@dataclass
class CorrelationRow:
    question_id: str
    r: float
    n_pairs: int


@dataclass
class CorrelationRanking:
    rows: list[CorrelationRow]  # sorted by |r| descending
    excluded: list[str]
    high_correlation_ids: list[str]  # |r| > 0.15 subset
    negative_fraction: float  # among |r| >= 0.01

    def rank_of(self) -> dict[str, int]:
        return {row.question_id: k + 1 for k, row in enumerate(self.rows)}


def correlation_ranking(
    m: AnswerMatrix,
    y: np.ndarray,
    min_pairs: int = 3,
) -> CorrelationRanking:
    """Pairwise-complete Pearson correlation of each question with the outcome.

    ``y`` is aligned with the matrix rows. Questions with fewer than
    ``min_pairs`` answered rows, or zero variance on the paired cases, are
    excluded and reported. Ranked by |r| descending, ties by question id.
    """
    y = np.asarray(y, dtype=float)
    if len(y) != m.n_users:
        raise DomainError("outcome length does not match matrix rows")
    rows, excluded = [], []
    for j, q in enumerate(m.question_ids):
        col = m.values[:, j]
        mask = ~np.isnan(col)
        if mask.sum() < min_pairs:
            excluded.append(q)
            continue
        xv, yv = col[mask], y[mask]
        sx, sy = xv.std(), yv.std()
        if sx == 0.0 or sy == 0.0:
            excluded.append(q)
            continue
        r = float(np.corrcoef(xv, yv)[0, 1])
        rows.append(CorrelationRow(q, r, int(mask.sum())))
    rows.sort(key=lambda row: (-abs(row.r), row.question_id))
    meaningful = [row.r for row in rows if abs(row.r) >= 0.01]
    negative_fraction = (
        sum(r < 0 for r in meaningful) / len(meaningful) if meaningful else 0.0
    )
    return CorrelationRanking(
        rows=rows,
        excluded=excluded,
        high_correlation_ids=[row.question_id for row in rows if row.r > 0.15],
        negative_fraction=negative_fraction,
    )


def expert_overlap_prob(N: int, K: int, n: int, k: int) -> tuple[Fraction, float]:
    """Exact hypergeometric probability of ``k`` expert questions among the
    top ``n`` of ``N``, ``K`` of which are expert-authored.

    Returns the exact rational C(K,k)*C(N-K,n-k)/C(N,n) and its decimal
    rendering.
    """
    if not (0 <= k <= min(K, n) <= N and K <= N and n <= N):
        raise DomainError("invalid hypergeometric bounds")
    prob = Fraction(comb(K, k) * comb(N - K, n - k), comb(N, n))
    return prob, float(prob)


@dataclass
class RankTableRow:
    question_id: str
    r: float
    r_rank: int
    importance: float
    importance_rank: int

    @property
    def rank_delta(self) -> int:
        return self.r_rank - self.importance_rank


def rank_compare_table(
    correlation: CorrelationRanking,
    importance: Sequence[tuple[str, float]],
) -> list[RankTableRow]:
    """Join the correlation and importance rankings over a common question set.

    ``importance`` is (question id, score) sorted descending. Raises when the
    two sides cover different question sets.
    """
    corr_ranks = correlation.rank_of()
    corr_r = {row.question_id: row.r for row in correlation.rows}
    imp_ids = [q for q, _ in importance]
    if set(imp_ids) != set(corr_ranks):
        raise DomainError("rankings cover different question sets")
    table = [
        RankTableRow(
            question_id=q,
            r=corr_r[q],
            r_rank=corr_ranks[q],
            importance=float(score),
            importance_rank=rank,
        )
        for rank, (q, score) in enumerate(importance, start=1)
    ]
    table.sort(key=lambda row: row.importance_rank)
    return table
