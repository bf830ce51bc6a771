"""Simulate a full crowdsourcing campaign and look at the data it produces.

Run:  python3 demos/01_simulate_campaign.py
"""
import numpy as np

from crowdenergy import build_matrix, paper_regime, sparsity_stats
from crowdenergy.preprocess import _daily_series

data = paper_regime(seed=0)

print(f"participants: {len(data.participants)}")
print(f"questions:    {len(data.questions)} "
      f"({sum(q.status == 'approved' for q in data.questions)} approved, "
      f"{sum(q.status == 'rejected' for q in data.questions)} rejected)")
print(f"answers:      {len(data.answers)}")

matrix = build_matrix(data.questions, data.answers, data.participants).matrix
stats = sparsity_stats(matrix)
print(f"\nanswer matrix: {matrix.n_users} users x {matrix.n_questions} questions")
print(f"fill fraction: {matrix.fill_fraction():.3f}")
print(f"column missing fraction: min {stats.min_missing_fraction:.3f}, "
      f"max {stats.max_missing_fraction:.3f}")
print(f"users with >100 answers: {(stats.user_answer_counts > 100).mean():.2f}")

daily = _daily_series(data.readings)
gt = data.ground_truth
window = daily[(daily["day"] >= gt.window_start) & (daily["day"] < gt.window_end)]
monthly = window.groupby("user_id")["kwh"].sum() / 3.0
print(f"\nmonthly usage over the 90-day outcome window: "
      f"mean {monthly.mean():.0f} kWh, sd {monthly.std():.0f} kWh")
print(f"planted predictive questions: {gt.signal_question_ids}")
