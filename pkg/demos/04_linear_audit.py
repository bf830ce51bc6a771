"""The online model behind the 'virtual energy audit' page.

A forward stepwise-AIC linear model predicts each user's deviation from the
group-mean usage; the audit lists the answers that pushed their prediction
up or down the most.

Run:  python3 demos/04_linear_audit.py
"""
from crowdenergy import (
    audit_report,
    build_matrix,
    fit_stepwise_aic,
    outcome_window_total,
    paper_regime,
    standardize_impute,
)

data = paper_regime(seed=3)
matrix = build_matrix(data.questions, data.answers, data.participants).matrix
gt = data.ground_truth
outcome = outcome_window_total(
    data.readings, matrix.user_ids, gt.window_start, gt.window_end,
    standardize=False,
)
y = outcome.values - outcome.values.mean()  # deviation from group mean, kWh

z = standardize_impute(matrix)
model = fit_stepwise_aic(z, y)
print(f"selected {len(model.selected)} terms "
      f"(AIC {model.aic_trace[0]:.1f} -> {model.aic_trace[-1]:.1f})")
planted = set(gt.signal_question_ids)
print(f"planted questions among them: "
      f"{sorted(set(model.selected) & planted)}")

texts = {q.id: q.text for q in data.questions}
user = matrix.user_ids[5]
rep = audit_report(model, z, user, question_texts=texts)
print(f"\naudit for user {user}: predicted deviation "
      f"{rep.predicted_deviation:+.0f} kWh over the window")
for qid, text, contribution in rep.entries:
    print(f"  {contribution:+9.1f} kWh  {qid:<6} {text[:60]}")
