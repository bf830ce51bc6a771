import numpy as np
import pytest

from crowdenergy.domain import DomainError
from crowdenergy.forest import (
    Forest,
    ForestParams,
    fit_forest,
    fit_tree,
    importance_ranking,
    tree_rng,
)


def sse(y):
    return float(np.sum((y - y.mean()) ** 2)) if len(y) else 0.0


def enumerate_splits(X, y):
    """Exhaustive enumeration of every (feature, midpoint) candidate.

    Yields (gain, feature, threshold, left mask) for each valid split.
    """
    n, p = X.shape
    parent = sse(y)
    for f in range(p):
        for t in sorted(set(X[:, f])):
            mask = X[:, f] <= t
            if mask.all() or not mask.any():
                continue
            # midpoint between t and the next distinct value
            above = X[X[:, f] > t, f].min()
            thr = 0.5 * (t + above)
            gain = parent - sse(y[mask]) - sse(y[~mask])
            yield gain, f, thr, mask


def tree_best_root_split(X, y):
    """Root split chosen by fit_tree with all features available."""
    t = fit_tree(X, y, mtry=X.shape[1], min_node_size=1, max_depth=1)
    if t.feature[0] < 0:
        return None
    return int(t.feature[0]), float(t.threshold[0])


class TestSplitOracle:
    def test_matches_exhaustive_oracle_small_instances(self):
        rng = np.random.default_rng(99)
        for _ in range(200):
            n = int(rng.integers(2, 21))
            p = int(rng.integers(1, 5))
            # mixed continuous and small-integer columns to exercise ties
            X = np.where(
                rng.random((n, p)) < 0.5,
                rng.integers(0, 4, size=(n, p)).astype(float),
                np.round(rng.normal(size=(n, p)), 1),
            )
            y = rng.normal(size=n)
            splits = sorted(enumerate_splits(X, y), key=lambda s: -s[0])
            ours = tree_best_root_split(X, y)
            if not splits or splits[0][0] <= 1e-12:
                assert ours is None
                continue
            assert ours is not None
            f, thr = ours
            our_mask = X[:, f] <= thr
            our_gain = sse(y) - sse(y[our_mask]) - sse(y[~our_mask])
            # the achieved gain is optimal
            assert our_gain == pytest.approx(splits[0][0], abs=1e-9)
            # and when the optimum is unique, the exact partition matches
            runners_up = [s for s in splits[1:] if s[0] < splits[0][0] - 1e-9]
            if len(runners_up) == len(splits) - 1:
                assert np.array_equal(our_mask, splits[0][3])
                assert (f, thr) == (splits[0][1], pytest.approx(splits[0][2]))

    def test_threshold_is_midpoint(self):
        X = np.array([[1.0], [3.0], [10.0], [11.0]])
        y = np.array([0.0, 0.0, 5.0, 5.0])
        f, thr = tree_best_root_split(X, y)
        assert f == 0 and thr == pytest.approx(6.5)

    def test_tie_breaks_lowest_feature_then_smallest_threshold(self):
        # both features separate y perfectly; feature 0 must win
        x = np.array([0.0, 0.0, 1.0, 1.0])
        X = np.column_stack([x, x])
        y = np.array([0.0, 0.0, 1.0, 1.0])
        f, thr = tree_best_root_split(X, y)
        assert f == 0 and thr == pytest.approx(0.5)

    def test_constant_target_no_split(self):
        X = np.random.default_rng(0).normal(size=(10, 3))
        assert tree_best_root_split(X, np.ones(10)) is None

    def test_constant_features_no_split(self):
        y = np.random.default_rng(1).normal(size=10)
        assert tree_best_root_split(np.ones((10, 3)), y) is None


class TestTree:
    def test_leaf_value_is_node_mean(self):
        X = np.array([[0.0], [0.0], [1.0], [1.0]])
        y = np.array([1.0, 3.0, 10.0, 20.0])
        t = fit_tree(X, y, mtry=1, min_node_size=2)
        assert t.predict(np.array([[0.0]]))[0] == pytest.approx(2.0)
        assert t.predict(np.array([[1.0]]))[0] == pytest.approx(15.0)

    def test_min_node_size_respected(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(100, 3))
        y = rng.normal(size=100)
        t = fit_tree(X, y, mtry=3, min_node_size=10)
        internal = t.feature >= 0
        assert (t.n_samples[internal] > 10).all()

    def test_max_depth_one_is_a_stump(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(50, 2))
        y = X[:, 0]
        t = fit_tree(X, y, mtry=2, min_node_size=1, max_depth=1)
        assert t.n_nodes == 3

    def test_deep_tree_interpolates_training_data(self):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(40, 2))
        y = rng.normal(size=40)
        t = fit_tree(X, y, mtry=2, min_node_size=1)
        assert t.predict(X) == pytest.approx(y)

    def test_importance_sums_to_relative_sse_drop(self):
        rng = np.random.default_rng(8)
        X = rng.normal(size=(60, 4))
        y = 2 * X[:, 1] + rng.normal(size=60) * 0.3
        t = fit_tree(X, y, mtry=4, min_node_size=5)
        leaves = t.feature < 0
        total_drop = t.impurity[0] - t.impurity[leaves].sum()
        assert t.importance.sum() * len(y) == pytest.approx(total_drop)
        assert t.importance.argmax() == 1


class TestForest:
    def test_degenerate_forest_equals_single_cart_bitwise(self):
        rng = np.random.default_rng(9)
        X = rng.normal(size=(80, 6))
        y = X[:, 0] - 0.5 * X[:, 3] + rng.normal(size=80) * 0.4
        params = ForestParams(n_trees=1, mtry=6, min_node_size=5, bootstrap=False, seed=3)
        forest = fit_forest(X, y, params)
        cart = fit_tree(X, y, mtry=6, min_node_size=5, rng=tree_rng(3, 0))
        Xtest = rng.normal(size=(30, 6))
        assert np.array_equal(forest.predict(Xtest), cart.predict(Xtest))
        assert np.array_equal(forest.trees[0].feature, cart.feature)
        assert np.array_equal(forest.trees[0].threshold, cart.threshold, equal_nan=True)

    def test_reproducible_given_seed(self):
        rng = np.random.default_rng(10)
        X = rng.normal(size=(60, 5))
        y = rng.normal(size=60)
        p = ForestParams(n_trees=5, min_node_size=5, seed=42)
        a = fit_forest(X, y, p)
        b = fit_forest(X, y, p)
        assert a.oob_mse == b.oob_mse
        assert np.array_equal(a.importance_scores, b.importance_scores)
        for ta, tb in zip(a.trees, b.trees):
            assert np.array_equal(ta.feature, tb.feature)

    def test_tree_seeds_independent_of_count(self):
        # growing more trees never changes the earlier trees
        rng = np.random.default_rng(11)
        X = rng.normal(size=(40, 4))
        y = rng.normal(size=40)
        small = fit_forest(X, y, ForestParams(n_trees=3, seed=7))
        big = fit_forest(X, y, ForestParams(n_trees=6, seed=7))
        for ta, tb in zip(small.trees, big.trees):
            assert np.array_equal(ta.feature, tb.feature)
            assert np.array_equal(ta.value, tb.value)

    def test_oob_mse_beats_null_on_strong_signal(self):
        rng = np.random.default_rng(12)
        X = rng.normal(size=(200, 10))
        y = 2 * X[:, 0] + rng.normal(size=200) * 0.3
        y_null = rng.permutation(y)
        p = ForestParams(n_trees=30, min_node_size=5, seed=0)
        assert fit_forest(X, y, p).oob_mse < fit_forest(X, y_null, p).oob_mse

    def test_importance_normalized_and_ranked(self):
        rng = np.random.default_rng(13)
        X = rng.normal(size=(150, 8))
        y = 3 * X[:, 2] + X[:, 6] + rng.normal(size=150) * 0.2
        forest = fit_forest(X, y, ForestParams(n_trees=25, seed=1),
                            feature_ids=[f"q{j}" for j in range(8)])
        assert forest.importance_scores.sum() == pytest.approx(1.0)
        ranking = importance_ranking(forest)
        assert ranking[0][0] == "q2"
        assert "q6" in [q for q, _ in ranking[:3]]
        scores = [s for _, s in ranking]
        assert scores == sorted(scores, reverse=True)

    def test_predict_width_check(self):
        rng = np.random.default_rng(14)
        forest = fit_forest(rng.normal(size=(30, 4)), rng.normal(size=30),
                            ForestParams(n_trees=2, seed=0))
        with pytest.raises(DomainError):
            forest.predict(np.zeros((3, 5)))

    def test_param_validation(self):
        X, y = np.zeros((10, 3)), np.zeros(10)
        with pytest.raises(DomainError):
            fit_forest(X, y, ForestParams(n_trees=0))
        with pytest.raises(DomainError):
            fit_forest(X, y, ForestParams(mtry=4))
        with pytest.raises(DomainError):
            fit_forest(np.zeros((3, 2)), np.zeros(3), ForestParams())

    def test_json_export(self):
        import json

        rng = np.random.default_rng(15)
        forest = fit_forest(rng.normal(size=(30, 3)), rng.normal(size=30),
                            ForestParams(n_trees=2, seed=0), feature_ids=["a", "b", "c"])
        payload = json.loads(forest.to_json())
        assert set(payload) == {"params", "oob_mse", "importance"}
        assert set(payload["importance"]) == {"a", "b", "c"}
