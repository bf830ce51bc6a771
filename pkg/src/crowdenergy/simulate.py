"""Synthetic collaborative-crowdsourcing data generator.

Reproduces the sparsity mechanism of the platform: users arrive over time
with sequential ids, questions accumulate (a handful of expert seeds, an
early trickle, one campaign burst, a late trickle), and each user answers a
random subset of the questions available at their visits. Questions created
after a user's last visit stay missing for them, producing the triangular
missing-value band.

A configurable set of planted questions carries real signal: latent user
traits generate both the answers to those questions and a shift of the
user's (log-normal) energy usage, through linear, threshold or quadratic
effect shapes.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import date, datetime, timedelta, timezone

import numpy as np
import pandas as pd

from .domain import (
    Answer,
    AnswerValue,
    DomainError,
    EXPERT_AUTHOR,
    Participant,
    Question,
    SEED_QUESTIONS,
)

EFFECT_FORMS = ("linear", "threshold", "quadratic")


@dataclass(frozen=True)
class PlantedEffect:
    form: str
    weight: float
    qtype: str = "numeric"

    def apply(self, t: np.ndarray) -> np.ndarray:
        if self.form == "linear":
            return self.weight * t
        if self.form == "threshold":
            # centered indicator, unit variance
            ind = (t > 0.0).astype(float)
            return self.weight * (ind - 0.5) * 2.0
        if self.form == "quadratic":
            return self.weight * (t**2 - 1.0) / np.sqrt(2.0)
        raise DomainError(f"unknown effect form {self.form!r}")


def default_signal(n_planted: int = 10, positive_fraction: float = 0.84) -> list[PlantedEffect]:
    """Mixed-form planted effects: mostly linear, one quadratic, two thresholds.

    Signs are assigned so that roughly ``positive_fraction`` of the effects
    are positive (deterministic pattern, skew matches the configured target).
    """
    forms = ["linear"] * max(0, n_planted - 3) + ["threshold", "threshold", "quadratic"]
    forms = forms[:n_planted]
    n_negative = round(n_planted * (1.0 - positive_fraction))
    effects = []
    for i, form in enumerate(forms):
        sign = -1.0 if i < n_negative and form != "quadratic" else 1.0
        qtype = ("numeric", "likert5", "yes_no")[i % 3]
        if form == "threshold":
            qtype = "yes_no"
        effects.append(PlantedEffect(form, sign, qtype))
    return effects


@dataclass
class SimConfig:
    n_users: int = 600
    horizon_days: int = 450
    base_date: date = date(2013, 6, 25)

    # question arrival: early trickle, one campaign burst, late trickle
    seed_question_count: int = 6
    campaign_start_day: int = 170
    campaign_duration_days: int = 60
    campaign_questions: int = 460
    trickle_before: int = 60
    trickle_after: int = 100
    rejection_prob: float = 0.05

    # participation
    early_join_fraction: float = 0.7  # join before the campaign
    return_visit_prob: float = 0.35  # geometric continuation per extra visit
    answer_diligence_mean: float = 0.64  # per-question answer probability
    answer_diligence_conc: float = 30.0

    # outcome and planted signal
    signal: list[PlantedEffect] = field(default_factory=default_signal)
    signal_strength: float = 0.88  # corr(latent signal, log usage)
    trait_correlation: float = 0.4  # shared lifestyle factor across planted traits
    answer_noise_sd: float = 0.15
    usage_log_mu: float = 6.0819
    usage_log_sigma: float = 0.5662
    daily_noise_cv: float = 0.15
    outcome_window: tuple[int, int] = (179, 269)  # day offsets, 90-day winter window

    def validate(self) -> None:
        for prob in (self.rejection_prob, self.early_join_fraction,
                     self.return_visit_prob, self.answer_diligence_mean):
            if not 0.0 <= prob <= 1.0:
                raise DomainError("probabilities must lie in [0, 1]")
        if self.n_users < 1 or self.horizon_days < 1:
            raise DomainError("n_users and horizon_days must be positive")
        if not 0.0 <= self.signal_strength < 1.0:
            raise DomainError("signal_strength must lie in [0, 1)")


@dataclass
class GroundTruth:
    signal_question_ids: list[str]
    effects: list[PlantedEffect]
    traits: np.ndarray  # n_users x n_planted latent traits
    window_start: date = None
    window_end: date = None


@dataclass
class SimData:
    questions: list[Question]
    participants: list[Participant]
    answers: list[Answer]
    readings: pd.DataFrame  # user_id, interval_start, kwh
    ground_truth: GroundTruth


def _ts(base: date, day: float) -> datetime:
    return datetime(base.year, base.month, base.day, tzinfo=timezone.utc) + timedelta(days=float(day))


def _likert_from_latent(x: np.ndarray) -> np.ndarray:
    cut = np.array([-1.5, -0.5, 0.5, 1.5])
    return np.searchsorted(cut, x) + 1


def simulate(config: SimConfig, seed: int) -> SimData:
    """Generate one synthetic dataset; bitwise deterministic in (config, seed)."""
    config.validate()
    rng = np.random.default_rng(seed)
    n = config.n_users
    base = config.base_date

    # --- participants: sequential ids in join order -------------------------
    n_early = int(round(n * config.early_join_fraction))
    join_days = np.concatenate([
        rng.uniform(0, config.campaign_start_day, n_early),
        rng.uniform(config.campaign_start_day, 0.9 * config.horizon_days, n - n_early),
    ])
    join_days.sort()
    participants = [
        Participant(i + 1, _ts(base, d)) for i, d in enumerate(join_days)
    ]

    # visits: the join day plus a geometric number of uniformly placed returns
    visits: list[np.ndarray] = []
    for d in join_days:
        extra = rng.geometric(1.0 - config.return_visit_prob) - 1
        later = rng.uniform(d, config.horizon_days, extra) if extra else np.array([])
        visits.append(np.sort(np.concatenate([[d], later])))

    # --- question timeline --------------------------------------------------
    camp_end = config.campaign_start_day + config.campaign_duration_days
    create_days = np.concatenate([
        rng.uniform(2, config.campaign_start_day, config.trickle_before),
        rng.uniform(config.campaign_start_day, camp_end, config.campaign_questions),
        rng.uniform(camp_end, 0.9 * config.horizon_days, config.trickle_after),
    ])
    create_days.sort()

    questions: list[Question] = [
        Question(qid, text, qtype, "approved", EXPERT_AUTHOR, _ts(base, 0))
        for qid, text, qtype in SEED_QUESTIONS[: config.seed_question_count]
    ]
    n_seed = len(questions)

    # planted questions sit in the early trickle so they accumulate answers
    n_planted = len(config.signal)
    if n_planted > config.trickle_before:
        raise DomainError("more planted effects than early crowd questions")
    planted_slots = (
        rng.choice(config.trickle_before, size=n_planted, replace=False)
        if n_planted else np.array([], dtype=int)
    )
    slot_effect = {int(s): e for s, e in zip(planted_slots, config.signal)}

    noise_qtypes = rng.choice(
        ["numeric", "yes_no", "likert5"], size=len(create_days), p=[0.4, 0.3, 0.3]
    )
    rejected_flags = rng.random(len(create_days)) < config.rejection_prob
    rejected_flags[list(slot_effect)] = False  # planted questions always pass moderation

    signal_ids: list[str] = []
    effects_in_order: list[PlantedEffect] = []
    crowd_questions: list[Question] = []
    for k, day in enumerate(create_days):
        qid = f"q{n_seed + k + 1}"
        effect = slot_effect.get(k)
        if effect is not None and not rejected_flags[k]:
            qtype = effect.qtype
            signal_ids.append(qid)
            effects_in_order.append(effect)
        else:
            qtype = str(noise_qtypes[k])
        joined = np.searchsorted(join_days, day, side="right")
        author = str(participants[int(rng.integers(0, joined))].id) if joined else EXPERT_AUTHOR
        status = "rejected" if rejected_flags[k] else "approved"
        crowd_questions.append(Question(qid, f"synthetic question {qid}", qtype, status, author, _ts(base, day)))
    questions.extend(crowd_questions)

    approved = [q for q in questions if q.status == "approved"]
    # questions are generated in creation order, so this is already sorted
    q_days_sorted = np.array([
        (q.created_at - _ts(base, 0)).total_seconds() / 86400.0 for q in approved
    ])

    # --- latent traits, answers and usage -----------------------------------
    c = config.trait_correlation
    shared = rng.standard_normal((n, 1))
    traits = np.sqrt(c) * shared + np.sqrt(1 - c) * rng.standard_normal((n, len(signal_ids)))
    observed_latent = traits + config.answer_noise_sd * rng.standard_normal(traits.shape)

    # encoded answer values for every (user, question) pair; sparsity applied later
    sig_index = {qid: k for k, qid in enumerate(signal_ids)}
    answer_pool = np.empty((n, len(approved)))
    for qi, q in enumerate(approved):
        k = sig_index.get(q.id)
        if k is not None:
            latent = observed_latent[:, k]
            if q.qtype == "numeric":
                answer_pool[:, qi] = np.round(latent, 2)
            elif q.qtype == "likert5":
                answer_pool[:, qi] = _likert_from_latent(latent)
            else:
                answer_pool[:, qi] = (latent > 0).astype(float)
        else:
            if q.qtype == "numeric":
                answer_pool[:, qi] = np.round(rng.lognormal(1.0, 0.7, n))
            elif q.qtype == "likert5":
                answer_pool[:, qi] = rng.integers(1, 6, n)
            else:
                answer_pool[:, qi] = (rng.random(n) < rng.beta(2, 2)).astype(float)

    diligence = rng.beta(
        config.answer_diligence_mean * config.answer_diligence_conc,
        (1 - config.answer_diligence_mean) * config.answer_diligence_conc,
        n,
    )

    answers: list[Answer] = []
    for i, p in enumerate(participants):
        user_visits = visits[i]
        # first visit at/after each question's creation = answer opportunity
        vidx = np.searchsorted(user_visits, q_days_sorted)
        reachable = vidx < len(user_visits)
        take = reachable & (rng.random(len(approved)) < diligence[i])
        for qi in np.flatnonzero(take):
            q = approved[qi]
            raw = answer_pool[i, qi]
            if q.qtype == "numeric":
                value = AnswerValue.numeric(raw)
            elif q.qtype == "likert5":
                value = AnswerValue.likert(int(raw))
            else:
                value = AnswerValue.yes_no(bool(raw > 0.5))
            day = user_visits[vidx[qi]]
            answers.append(Answer(p.id, q.id, value, _ts(base, day)))

    # --- usage: log-normal monthly totals shifted by the planted effects ----
    if signal_ids:
        raw_signal = np.zeros(n)
        for k, effect in enumerate(effects_in_order):
            raw_signal += effect.apply(traits[:, k])
        raw_signal = (raw_signal - raw_signal.mean()) / raw_signal.std()
        rho = config.signal_strength
        g = rho * raw_signal + np.sqrt(1 - rho**2) * rng.standard_normal(n)
    else:
        g = rng.standard_normal(n)
    monthly = np.exp(config.usage_log_mu + config.usage_log_sigma * g)
    daily_rate = monthly / 30.0

    days = np.arange(config.horizon_days)
    cv = config.daily_noise_cv
    shape = 1.0 / cv**2
    noise = rng.gamma(shape, 1.0 / shape, size=(n, config.horizon_days))
    kwh = daily_rate[:, None] * noise
    readings = pd.DataFrame({
        "user_id": np.repeat([p.id for p in participants], config.horizon_days),
        "interval_start": np.tile([_ts(base, int(d)) for d in days], n),
        "kwh": kwh.ravel(),
    })

    ground_truth = GroundTruth(
        signal_question_ids=signal_ids,
        effects=effects_in_order,
        traits=traits,
        window_start=base + timedelta(days=config.outcome_window[0]),
        window_end=base + timedelta(days=config.outcome_window[1]),
    )
    return SimData(questions, participants, answers, readings, ground_truth)


def paper_regime(seed: int, config: SimConfig | None = None) -> SimData:
    """The calibrated preset: ~600 users x ~600 questions, a minimum column
    missing fraction in the low 30s of percent, and 10 planted questions."""
    return simulate(config or SimConfig(), seed)


@dataclass
class RecoveryReport:
    recall: float
    precision: float
    k_hat: int | None
    hits: list[str]


def evaluate_recovery(
    ground_truth: GroundTruth,
    importance_ranking: list[str],
    k_hat: int | None,
) -> RecoveryReport:
    """Recall/precision of the planted questions within the top-k of a ranking.

    An invalid cutoff (``k_hat`` None) recovers nothing by definition.
    """
    planted = set(ground_truth.signal_question_ids)
    if not planted:
        raise DomainError("ground truth has no planted questions")
    if k_hat is None or k_hat <= 0:
        return RecoveryReport(0.0, 0.0, k_hat, [])
    top = importance_ranking[:k_hat]
    hits = [q for q in top if q in planted]
    return RecoveryReport(
        recall=len(hits) / len(planted),
        precision=len(hits) / len(top),
        k_hat=k_hat,
        hits=hits,
    )
