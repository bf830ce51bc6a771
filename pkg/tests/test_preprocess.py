import numpy as np
import pandas as pd
import pytest
from datetime import date, datetime, timedelta, timezone

from hypothesis import given, settings, strategies as st

from crowdenergy.domain import AnswerMatrix, DomainError
from crowdenergy.preprocess import (
    ROLLING_DAYS,
    outcome_delta30,
    outcome_window_total,
    shuffle_null,
    standardize_impute,
)


def matrix_from(values):
    values = np.asarray(values, dtype=float)
    n, p = values.shape
    return AnswerMatrix(list(range(n)), [f"q{j+1}" for j in range(p)], values)


def readings_frame(per_user_daily: dict[int, list[float]], start=date(2026, 1, 1)):
    rows = []
    for u, series in per_user_daily.items():
        for d, kwh in enumerate(series):
            rows.append((u, datetime.combine(start + timedelta(days=d),
                                             datetime.min.time(), timezone.utc), kwh))
    return pd.DataFrame(rows, columns=["user_id", "interval_start", "kwh"])


class TestOutcomeDelta30:
    def test_constant_users(self):
        # user 1 uses 10/day, user 2 uses 20/day over 28 full days
        readings = readings_frame({1: [10.0] * 28, 2: [20.0] * 28})
        out = outcome_delta30(readings, [1, 2], as_of=date(2026, 1, 29))
        assert out.group_mean == pytest.approx(15.0 * 28 * 30 / 28)
        assert out.values == pytest.approx([-150.0, 150.0])
        assert out.values.sum() == pytest.approx(0.0)

    def test_scaling_28_to_30(self):
        readings = readings_frame({1: [1.0] * 28, 2: [0.0] * 28})
        out = outcome_delta30(readings, [1, 2], as_of=date(2026, 1, 29))
        # user totals are 28*30/28 = 30 and 0 before centering
        assert out.values[0] - out.values[1] == pytest.approx(30.0)

    def test_incomplete_coverage_excluded(self):
        readings = readings_frame({1: [10.0] * 28, 2: [10.0] * 20})
        out = outcome_delta30(readings, [1, 2], as_of=date(2026, 1, 29))
        assert out.user_ids == [1]
        assert out.excluded == [2]

    def test_subdaily_intervals_summed(self):
        rows = []
        for d in range(ROLLING_DAYS):
            day = datetime(2026, 1, 1 + d, tzinfo=timezone.utc)
            rows.append((1, day, 4.0))
            rows.append((1, day.replace(hour=12), 6.0))
        for d in range(ROLLING_DAYS):
            rows.append((2, datetime(2026, 1, 1 + d, tzinfo=timezone.utc), 10.0))
        readings = pd.DataFrame(rows, columns=["user_id", "interval_start", "kwh"])
        out = outcome_delta30(readings, [1, 2], as_of=date(2026, 1, 29))
        assert out.values == pytest.approx([0.0, 0.0])  # both 10/day


class TestOutcomeWindowTotal:
    def test_standardized_has_unit_variance(self):
        rng = np.random.default_rng(0)
        daily = {u: list(rng.uniform(5, 15, size=90)) for u in range(12)}
        readings = readings_frame(daily)
        out = outcome_window_total(
            readings, list(range(12)), date(2026, 1, 1), date(2026, 4, 1)
        )
        assert out.values.mean() == pytest.approx(0.0, abs=1e-12)
        assert out.values.std(ddof=1) == pytest.approx(1.0)

    def test_raw_totals(self):
        readings = readings_frame({1: [2.0] * 10, 2: [3.0] * 10})
        out = outcome_window_total(
            readings, [1, 2], date(2026, 1, 1), date(2026, 1, 11), standardize=False
        )
        assert list(out.values) == [20.0, 30.0]

    def test_coverage_threshold(self):
        readings = readings_frame({1: [1.0] * 100, 2: [1.0] * 80})
        out = outcome_window_total(
            readings, [1, 2], date(2026, 1, 1), date(2026, 4, 11),
            min_coverage=0.9, standardize=False,
        )
        assert out.user_ids == [1] and out.excluded == [2]

    def test_log_outcome(self):
        readings = readings_frame({1: [2.0] * 10, 2: [8.0] * 10})
        out = outcome_window_total(
            readings, [1, 2], date(2026, 1, 1), date(2026, 1, 11),
            standardize=False, log_outcome=True,
        )
        assert out.values == pytest.approx(np.log([20.0, 80.0]))

    def test_empty_window_rejected(self):
        readings = readings_frame({1: [1.0]})
        with pytest.raises(DomainError):
            outcome_window_total(readings, [1], date(2026, 2, 1), date(2026, 1, 1))


class TestStandardizeImpute:
    def test_observed_columns_zero_mean_unit_sd(self):
        rng = np.random.default_rng(1)
        vals = rng.normal(50, 12, size=(40, 6))
        vals[rng.random(vals.shape) < 0.3] = np.nan
        z = standardize_impute(matrix_from(vals), drop_outliers=False)
        for j in range(6):
            obs = ~z.imputed_mask[:, j]
            assert z.z[obs, j].mean() == pytest.approx(0.0, abs=1e-9)
            assert z.z[obs, j].std(ddof=1) == pytest.approx(1.0, abs=1e-9)

    def test_imputed_cells_exactly_zero(self):
        vals = np.array([[1.0, np.nan], [2.0, 5.0], [np.nan, 7.0], [4.0, 9.0]])
        z = standardize_impute(matrix_from(vals))
        assert (z.z[z.imputed_mask] == 0.0).all()

    def test_outlier_pass_bounds_z(self):
        vals = np.random.default_rng(2).normal(size=(200, 3))
        vals[0, 0] = 1000.0  # gross outlier
        z = standardize_impute(matrix_from(vals))
        assert z.imputed_mask[0, 0]  # dropped
        obs = ~z.imputed_mask
        assert np.abs(z.z[obs]).max() < 3.0

    def test_outlier_removal_iterates_to_convergence(self):
        # dropping the gross outlier shrinks the scale enough that the 1.0s
        # land beyond |z|=3 of the re-standardized column; they must go too
        col = np.concatenate([np.zeros(50), [1.0] * 5, [100.0]])
        z = standardize_impute(matrix_from(col[:, None]))
        obs = ~z.imputed_mask[:, 0]
        assert z.imputed_mask[:, 0].sum() >= 1
        if obs.any():
            assert np.abs(z.z[obs, 0]).max() < 3.0
            assert z.z[obs, 0].mean() == pytest.approx(0.0, abs=1e-9)

    def test_constant_column_all_zero(self):
        vals = np.column_stack([np.full(10, 7.0), np.arange(10, dtype=float)])
        z = standardize_impute(matrix_from(vals))
        assert (z.z[:, 0] == 0.0).all()
        assert z.imputed_mask[:, 0].all()

    def test_sample_sd_convention(self):
        vals = np.array([[1.0], [3.0]])
        z = standardize_impute(matrix_from(vals), drop_outliers=False)
        # sd with ddof=1 is sqrt(2); z = +-1/sqrt(2) * sqrt(2) = +-1/sqrt(2)...
        assert z.col_sds[0] == pytest.approx(np.sqrt(2.0))
        assert z.z[:, 0] == pytest.approx([-1 / np.sqrt(2), 1 / np.sqrt(2)])

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_property_invariants(self, seed):
        rng = np.random.default_rng(seed)
        n, p = rng.integers(5, 25), rng.integers(1, 6)
        vals = rng.normal(size=(n, p)) * rng.uniform(0.5, 20)
        vals[rng.random((n, p)) < 0.4] = np.nan
        z = standardize_impute(matrix_from(vals))
        assert (z.z[z.imputed_mask] == 0.0).all()
        obs = ~z.imputed_mask
        if obs.any():
            assert np.abs(z.z[obs]).max() < 3.0
        for j in range(p):
            col_obs = obs[:, j]
            if col_obs.sum() >= 2:
                assert z.z[col_obs, j].mean() == pytest.approx(0.0, abs=1e-9)
                assert z.z[col_obs, j].std(ddof=1) == pytest.approx(1.0, abs=1e-9)


class TestShuffleNull:
    def test_column_multisets_preserved(self):
        rng = np.random.default_rng(3)
        vals = rng.normal(size=(30, 5))
        vals[rng.random(vals.shape) < 0.3] = np.nan
        m = matrix_from(vals)
        shuf = shuffle_null(m, seed=0)
        for j in range(5):
            a, b = np.sort(m.values[:, j]), np.sort(shuf.values[:, j])
            assert np.array_equal(a, b, equal_nan=True)

    def test_missingness_moves_with_values(self):
        vals = np.array([[1.0, np.nan], [np.nan, 2.0], [3.0, 4.0]])
        shuf = shuffle_null(matrix_from(vals), seed=1)
        assert np.isnan(shuf.values).sum(axis=0).tolist() == [1, 1]

    def test_deterministic_given_seed(self):
        vals = np.random.default_rng(4).normal(size=(20, 4))
        m = matrix_from(vals)
        a = shuffle_null(m, seed=5)
        b = shuffle_null(m, seed=5)
        assert np.array_equal(a.values, b.values)
        c = shuffle_null(m, seed=6)
        assert not np.array_equal(a.values, c.values)

    def test_standardized_matrix_variant(self):
        rng = np.random.default_rng(7)
        vals = rng.normal(size=(25, 4))
        vals[rng.random(vals.shape) < 0.3] = np.nan
        z = standardize_impute(matrix_from(vals))
        shuf = shuffle_null(z, seed=2)
        for j in range(4):
            assert sorted(z.z[:, j]) == pytest.approx(sorted(shuf.z[:, j]))
            assert z.imputed_mask[:, j].sum() == shuf.imputed_mask[:, j].sum()
        # imputation structure still aligned: imputed cells are exactly 0
        assert (shuf.z[shuf.imputed_mask] == 0.0).all()

    def test_rejects_unknown_type(self):
        with pytest.raises(TypeError):
            shuffle_null(np.zeros((3, 3)), seed=0)
