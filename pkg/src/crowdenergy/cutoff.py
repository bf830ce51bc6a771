"""Rank-degeneration cutoff: the position at which replicate importance
rankings stop agreeing better than chance.

For a pair of rankings, I_j = 1 when the item at rank j in the first list
sits within ``delta`` ranks of j in the second. A windowed pilot estimate
p_hat of the concordance probability is compared against the
moderate-deviation threshold 0.5 + sqrt(ln(nu)/nu); the cutoff is the longest
prefix on which every pilot estimate clears it. A cutoff shorter than the
pilot window is reported as no valid cutoff, which is a first-class outcome:
null-model analyses count these.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import log, sqrt
from typing import Sequence

import numpy as np

from .domain import DomainError

DELTA_RANGE = (1, 10)
NU_RANGE = (2, 20)


@dataclass(frozen=True)
class CutoffParams:
    delta: int = 10
    nu: int = 20

    def __post_init__(self):
        if self.delta < 1:
            raise DomainError("delta must be >= 1")
        if self.nu < 2:
            raise DomainError("nu must be >= 2")


@dataclass
class CutoffResult:
    params: CutoffParams
    k_hat: int | None  # None = no valid cutoff
    pairs_valid: int = 0
    pairs_total: int = 0
    per_pair: list[int | None] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return self.k_hat is not None


def rank_displacements(r1: Sequence, r2: Sequence) -> np.ndarray:
    """|rank_in_r2 - rank_in_r1| for the items in r1 order."""
    if len(r1) != len(r2) or set(r1) != set(r2):
        raise DomainError("rankings must be permutations of the same item set")
    if len(set(r1)) != len(r1):
        raise DomainError("rankings must not repeat items")
    pos2 = {item: j for j, item in enumerate(r2, start=1)}
    return np.array([abs(pos2[item] - j) for j, item in enumerate(r1, start=1)])


def pair_concordance(r1: Sequence, r2: Sequence, delta: int) -> np.ndarray:
    """Binary concordance sequence I_1..I_N for a pair of rankings."""
    return (rank_displacements(r1, r2) <= delta).astype(int)


def concordance_threshold(nu: int) -> float:
    return 0.5 + sqrt(log(nu) / nu)


def estimate_cutoff(I: Sequence[int], nu: int) -> int | None:
    """Cutoff from one concordance sequence, or None when no valid cutoff.

    Pilot estimates p_hat_j average I over the trailing window of (up to) nu
    positions. The cutoff is the largest j such that every p_hat_i for i <= j
    exceeds 0.5 + sqrt(ln(nu)/nu); prefixes shorter than nu are not accepted.
    """
    I = np.asarray(I)
    if len(I) < nu:
        raise DomainError("concordance sequence shorter than the pilot window")
    threshold = concordance_threshold(nu)
    k = 0
    window_sum = 0.0
    for j in range(1, len(I) + 1):
        window_sum += I[j - 1]
        if j > nu:
            window_sum -= I[j - nu - 1]
        width = min(j, nu)
        if window_sum / width <= threshold:
            break
        k = j
    return k if k >= nu else None


def aggregate_cutoff(rankings: Sequence[Sequence], params: CutoffParams) -> CutoffResult:
    """Median of the valid pairwise cutoffs over all C(J,2) ranking pairs.

    No valid cutoff when more than half of the pairs are individually invalid.
    """
    if len(rankings) < 2:
        raise DomainError("aggregate_cutoff needs at least two rankings")
    per_pair: list[int | None] = []
    for a in range(len(rankings)):
        for b in range(a + 1, len(rankings)):
            I = pair_concordance(rankings[a], rankings[b], params.delta)
            per_pair.append(estimate_cutoff(I, params.nu))
    valid = [k for k in per_pair if k is not None]
    total = len(per_pair)
    if len(valid) < total - total // 2:  # strictly more than half invalid
        k_hat = None
    else:
        k_hat = int(np.median(valid))
    return CutoffResult(params, k_hat, len(valid), total, per_pair)


@dataclass
class GridSummary:
    results: list[CutoffResult]
    invalid_fraction: float
    min_valid: int | None
    max_valid: int | None
    median_valid: float | None


def sensitivity_grid(
    rankings: Sequence[Sequence],
    delta_range: tuple[int, int] = DELTA_RANGE,
    nu_range: tuple[int, int] = NU_RANGE,
) -> GridSummary:
    """One aggregate cutoff per (delta, nu) cell, plus summary statistics.

    Pairwise displacements are computed once and reused across the grid.
    """
    if delta_range[0] > delta_range[1] or nu_range[0] > nu_range[1]:
        raise DomainError("empty parameter range")
    disps = []
    for a in range(len(rankings)):
        for b in range(a + 1, len(rankings)):
            disps.append(rank_displacements(rankings[a], rankings[b]))

    results = []
    for delta in range(delta_range[0], delta_range[1] + 1):
        sequences = [(d <= delta).astype(int) for d in disps]
        for nu in range(nu_range[0], nu_range[1] + 1):
            per_pair = [estimate_cutoff(I, nu) for I in sequences]
            valid = [k for k in per_pair if k is not None]
            total = len(per_pair)
            if len(valid) < total - total // 2:
                k_hat = None
            else:
                k_hat = int(np.median(valid))
            results.append(
                CutoffResult(CutoffParams(delta, nu), k_hat, len(valid), total, per_pair)
            )

    valid_ks = [r.k_hat for r in results if r.k_hat is not None]
    return GridSummary(
        results=results,
        invalid_fraction=sum(r.k_hat is None for r in results) / len(results),
        min_valid=min(valid_ks) if valid_ks else None,
        max_valid=max(valid_ks) if valid_ks else None,
        median_valid=float(np.median(valid_ks)) if valid_ks else None,
    )
