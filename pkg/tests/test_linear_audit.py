import numpy as np
import pytest

from crowdenergy.domain import DomainError
from crowdenergy.linear_audit import (
    AUDIT_DISPLAY_LIMIT,
    MAX_TERMS,
    audit_report,
    fit_stepwise_aic,
)
from crowdenergy.preprocess import StandardizedMatrix


def aic_oracle(n, rss, k):
    return n * np.log(max(rss, 1e-300) / n) + 2 * (k + 1)


def stepwise_oracle(z, y, max_terms=MAX_TERMS, names=None):
    """Per-step exhaustive enumeration: at each step refit OLS for every
    remaining candidate and take the strict-AIC-improving one with the
    lowest column name. Kept deliberately naive."""
    n, p = z.shape
    names = names or [str(j) for j in range(p)]
    order = sorted(range(p), key=lambda j: names[j])
    selected = []
    X = np.ones((n, 1))
    current = aic_oracle(n, float(np.sum((y - y.mean()) ** 2)), 0)
    while len(selected) < max_terms:
        best = None
        for j in order:
            if j in selected:
                continue
            Xj = np.column_stack([X, z[:, j]])
            coef, _, rank, _ = np.linalg.lstsq(Xj, y, rcond=None)
            if rank < Xj.shape[1]:
                continue
            rss = float(np.sum((y - Xj @ coef) ** 2))
            a = aic_oracle(n, rss, len(selected) + 1)
            if best is None or a < best[1]:
                best = (j, a)
        if best is None or best[1] >= current:
            break
        selected.append(best[0])
        X = np.column_stack([X, z[:, best[0]]])
        current = best[1]
    return [names[j] for j in selected]


class TestStepwise:
    def test_matches_oracle_on_random_instances(self):
        rng = np.random.default_rng(12345)
        for _ in range(100):
            n = int(rng.integers(10, 51))
            p = int(rng.integers(2, 9))
            z = rng.normal(size=(n, p))
            beta = rng.normal(size=p) * (rng.random(p) < 0.5)
            y = z @ beta + rng.normal(size=n) * rng.uniform(0.2, 2.0)
            model = fit_stepwise_aic(z, y)
            assert model.selected == stepwise_oracle(z, y)

    def test_pure_signal_single_predictor(self):
        rng = np.random.default_rng(0)
        z = rng.normal(size=(200, 5))
        y = 2.0 * z[:, 3] + rng.normal(size=200) * 0.01
        model = fit_stepwise_aic(z, y)
        assert model.selected[0] == "3"
        assert model.beta["3"] == pytest.approx(2.0, abs=0.01)

    def test_aic_trace_strictly_decreasing(self):
        rng = np.random.default_rng(1)
        z = rng.normal(size=(80, 10))
        y = z[:, 0] - z[:, 4] + rng.normal(size=80) * 0.5
        model = fit_stepwise_aic(z, y)
        trace = model.aic_trace
        assert len(trace) == len(model.selected) + 1
        assert all(b < a for a, b in zip(trace, trace[1:]))

    def test_term_cap(self):
        rng = np.random.default_rng(2)
        z = rng.normal(size=(300, 40))
        y = z.sum(axis=1) + rng.normal(size=300) * 0.1
        model = fit_stepwise_aic(z, y)
        assert len(model.selected) == MAX_TERMS

    def test_duplicate_column_skipped_as_rank_deficient(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=60)
        z = np.column_stack([x, x, rng.normal(size=60)])
        y = 3 * x + rng.normal(size=60) * 0.1
        model = fit_stepwise_aic(z, y, question_ids=["qa", "qb", "qc"])
        # whichever twin goes in first, the other is rank-deficient
        assert set(model.selected) & {"qa", "qb"}
        assert len(set(model.selected) & {"qa", "qb"}) == 1
        assert set(model.skipped) & {"qa", "qb"}

    def test_tie_break_lowest_question_id(self):
        x = np.array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
        z = np.column_stack([x, -x])  # identical explanatory power
        y = x.copy()
        model = fit_stepwise_aic(z, y, question_ids=["q2", "q1"])
        assert model.selected[0] == "q1"

    def test_noise_only_usually_selects_nothing_or_little(self):
        # with pure noise the expected count of spurious AIC improvements is
        # small; check the average over seeds rather than any single run
        rng = np.random.default_rng(4)
        sizes = []
        for _ in range(30):
            z = rng.normal(size=(50, 8))
            y = rng.normal(size=50)
            sizes.append(len(fit_stepwise_aic(z, y).selected))
        assert np.mean(sizes) < 2.0

    def test_input_validation(self):
        with pytest.raises(DomainError):
            fit_stepwise_aic(np.zeros((2, 3)), np.zeros(2))
        with pytest.raises(DomainError):
            fit_stepwise_aic(np.zeros((10, 0)), np.zeros(10))
        with pytest.raises(DomainError):
            fit_stepwise_aic(np.zeros((10, 2)), np.zeros(9))

    def test_json_export_fields(self):
        rng = np.random.default_rng(5)
        z = rng.normal(size=(40, 3))
        y = z[:, 0] + rng.normal(size=40) * 0.1
        import json

        payload = json.loads(fit_stepwise_aic(z, y).to_json())
        assert set(payload) == {"selected", "beta", "intercept", "aic_trace"}


class TestAudit:
    def make_fitted(self):
        rng = np.random.default_rng(6)
        zmat = rng.normal(size=(50, 12))
        y = zmat[:, 0] * 2 - zmat[:, 5] + rng.normal(size=50) * 0.2
        qids = [f"q{j+1}" for j in range(12)]
        z = StandardizedMatrix(
            user_ids=list(range(50)), question_ids=qids, z=zmat,
            col_means=np.zeros(12), col_sds=np.ones(12),
            imputed_mask=np.zeros((50, 12), dtype=bool),
        )
        return fit_stepwise_aic(z, y), z

    def test_entries_sorted_by_magnitude_and_capped(self):
        model, z = self.make_fitted()
        rep = audit_report(model, z, user_id=7)
        mags = [abs(c) for _, _, c in rep.entries]
        assert mags == sorted(mags, reverse=True)
        assert len(rep.entries) <= AUDIT_DISPLAY_LIMIT

    def test_contributions_are_beta_times_z(self):
        model, z = self.make_fitted()
        rep = audit_report(model, z, user_id=3)
        for qid, _, c in rep.entries:
            j = z.question_ids.index(qid)
            assert c == pytest.approx(model.beta[qid] * z.z[3, j])

    def test_all_imputed_user_gets_intercept(self):
        model, z = self.make_fitted()
        z.z[11, :] = 0.0  # as if every answer were imputed
        rep = audit_report(model, z, user_id=11)
        assert all(c == 0.0 for _, _, c in rep.entries)
        assert rep.predicted_deviation == pytest.approx(model.intercept)

    def test_predicted_deviation_matches_model(self):
        model, z = self.make_fitted()
        rep = audit_report(model, z, user_id=20, limit=50)
        assert rep.predicted_deviation == pytest.approx(
            model.predict_row(z.z[20], z.question_ids)
        )

    def test_unknown_user(self):
        model, z = self.make_fitted()
        with pytest.raises(DomainError):
            audit_report(model, z, user_id=999)
