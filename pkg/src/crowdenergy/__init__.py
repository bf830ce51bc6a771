"""Crowdsourced energy-survey toolkit: platform domain model, embedded store
and HTTP API, preprocessing, stepwise linear audit model, from-scratch random
forests, exact validation statistics, ranking-stability cutoffs, and a
calibrated crowd simulator.
"""
from .cutoff import (
    CutoffParams,
    CutoffResult,
    aggregate_cutoff,
    estimate_cutoff,
    pair_concordance,
    sensitivity_grid,
)
from .domain import (
    Answer,
    AnswerMatrix,
    AnswerValue,
    DomainError,
    Participant,
    Question,
    SEED_QUESTIONS,
    build_matrix,
    encode_answer,
    sparsity_stats,
)
from .forest import Forest, ForestParams, fit_forest, fit_tree, importance_ranking
from .linear_audit import LinearModel, audit_report, fit_stepwise_aic
from .preprocess import (
    StandardizedMatrix,
    outcome_delta30,
    outcome_window_total,
    shuffle_null,
    standardize_impute,
)
from .simulate import SimConfig, evaluate_recovery, paper_regime, simulate
from .store import Store
from .validate import (
    compare_true_vs_null,
    correlation_ranking,
    expert_overlap_prob,
    ks_exact_two_sample,
    rank_compare_table,
)

__all__ = [
    "Answer",
    "AnswerMatrix",
    "AnswerValue",
    "CutoffParams",
    "CutoffResult",
    "DomainError",
    "Forest",
    "ForestParams",
    "LinearModel",
    "Participant",
    "Question",
    "SEED_QUESTIONS",
    "SimConfig",
    "StandardizedMatrix",
    "Store",
    "aggregate_cutoff",
    "audit_report",
    "build_matrix",
    "compare_true_vs_null",
    "correlation_ranking",
    "encode_answer",
    "estimate_cutoff",
    "evaluate_recovery",
    "expert_overlap_prob",
    "fit_forest",
    "fit_stepwise_aic",
    "fit_tree",
    "importance_ranking",
    "ks_exact_two_sample",
    "outcome_delta30",
    "outcome_window_total",
    "pair_concordance",
    "paper_regime",
    "rank_compare_table",
    "sensitivity_grid",
    "shuffle_null",
    "simulate",
    "sparsity_stats",
    "standardize_impute",
]
