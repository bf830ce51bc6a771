"""Random forest regression built from scratch: CART regression trees,
bootstrap bagging, per-node random feature subsets, out-of-bag error and
mean-decrease-in-impurity variable importance.

Node impurity is the sum of squared deviations from the node mean; the best
split maximizes the impurity reduction over midpoints between consecutive
distinct values of each candidate feature. All per-tree randomness derives
from (master seed, tree index), so fits are reproducible bitwise.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .domain import DomainError

#: Minimum impurity a node must carry (and a split must remove) to keep splitting.
_MIN_GAIN = 1e-12


@dataclass
class ForestParams:
    n_trees: int = 500
    mtry: int | None = None  # default floor(p/3), at least 1
    min_node_size: int = 5
    max_depth: int | None = None
    bootstrap: bool = True
    seed: int = 0

    def resolve_mtry(self, p: int) -> int:
        if self.mtry is None:
            return max(1, p // 3)
        return self.mtry

    def validate(self, n: int, p: int) -> None:
        if self.n_trees < 1:
            raise DomainError("n_trees must be >= 1")
        if n < 5:
            raise DomainError("forest fitting needs at least 5 rows")
        mtry = self.resolve_mtry(p)
        if not 1 <= mtry <= p:
            raise DomainError(f"mtry must be in 1..{p}, got {mtry}")
        if self.min_node_size < 1:
            raise DomainError("min_node_size must be >= 1")


@dataclass
class RegressionTree:
    """Flat-array binary tree. ``feature[k] == -1`` marks node k as a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # node mean of training targets
    n_samples: np.ndarray
    impurity: np.ndarray  # sum of squared deviations
    importance: np.ndarray  # per-feature weighted impurity decrease

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        idx = np.zeros(len(X), dtype=np.int64)
        while True:
            feats = self.feature[idx]
            active = np.flatnonzero(feats >= 0)
            if active.size == 0:
                break
            node = idx[active]
            go_left = X[active, feats[active]] <= self.threshold[node]
            idx[active] = np.where(go_left, self.left[node], self.right[node])
        return self.value[idx]


def _best_split(X, y, idx, feats):
    """Best (feature, threshold) over midpoint candidates of ``feats``.

    Returns (gain, feature, threshold, left_row_mask) or None. Candidate
    features are scanned in ascending id order and thresholds in ascending
    value order, so ties resolve to the lowest feature id, then the smallest
    threshold (argmax keeps the first maximum).
    """
    m = idx.size
    Xn = X[np.ix_(idx, feats)]
    yn = y[idx]
    # sort stability is irrelevant: candidate positions inside tie blocks are
    # masked out, and prefix sums at block boundaries do not depend on the
    # intra-block order
    order = np.argsort(Xn, axis=0)
    Xs = np.take_along_axis(Xn, order, axis=0)
    ys = yn[order]

    csum = np.cumsum(ys, axis=0)
    total = csum[-1, 0]
    k = np.arange(1, m, dtype=float)[:, None]
    left_sum = csum[:-1, :]
    gain = left_sum**2 / k + (total - left_sum) ** 2 / (m - k) - total**2 / m
    gain[Xs[1:, :] <= Xs[:-1, :]] = -np.inf  # only split between distinct values

    flat = int(np.argmax(gain.T))  # feature-major: lowest feature id wins ties
    f_pos, split_pos = divmod(flat, m - 1)
    best_gain = gain[split_pos, f_pos]
    if not np.isfinite(best_gain):
        return None
    threshold = 0.5 * (Xs[split_pos, f_pos] + Xs[split_pos + 1, f_pos])
    left_mask = X[idx, feats[f_pos]] <= threshold
    return float(best_gain), int(feats[f_pos]), float(threshold), left_mask


def fit_tree(
    X: np.ndarray,
    y: np.ndarray,
    row_idx: np.ndarray | None = None,
    mtry: int | None = None,
    min_node_size: int = 5,
    max_depth: int | None = None,
    seed: int = 0,
    rng: np.random.Generator | None = None,
) -> RegressionTree:
    """Grow one CART regression tree on ``X[row_idx]``.

    A fresh random ``mtry``-subset of features is drawn per node. Nodes stop
    splitting at ``min_node_size`` samples, at ``max_depth``, or when no
    split reduces the impurity.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if row_idx is None:
        row_idx = np.arange(n)
    row_idx = np.asarray(row_idx)
    if row_idx.size == 0:
        raise DomainError("fit_tree needs a nonempty row set")
    mtry = max(1, p // 3) if mtry is None else mtry
    if not 1 <= mtry <= p:
        raise DomainError(f"mtry must be in 1..{p}")
    if rng is None:
        rng = np.random.default_rng(seed)

    feature, threshold = [], []
    left, right = [], []
    value, n_samples, impurity = [], [], []
    importance = np.zeros(p)
    n_root = row_idx.size

    def new_node(idx):
        k = len(feature)
        yn = y[idx]
        mean = yn.mean()
        feature.append(-1)
        threshold.append(np.nan)
        left.append(-1)
        right.append(-1)
        value.append(mean)
        n_samples.append(idx.size)
        impurity.append(float(np.sum((yn - mean) ** 2)))
        return k

    root = new_node(row_idx)
    stack = [(root, row_idx, 0)]
    while stack:
        node, idx, depth = stack.pop()
        m = idx.size
        if (
            m <= min_node_size
            or impurity[node] <= _MIN_GAIN
            or (max_depth is not None and depth >= max_depth)
        ):
            continue
        feats = rng.choice(p, size=mtry, replace=False) if mtry < p else np.arange(p)
        feats.sort()
        split = _best_split(X, y, idx, feats)
        if split is None or split[0] <= _MIN_GAIN:
            continue
        gain, f, thr, left_mask = split
        feature[node] = f
        threshold[node] = thr
        importance[f] += gain / n_root
        lchild = new_node(idx[left_mask])
        rchild = new_node(idx[~left_mask])
        left[node] = lchild
        right[node] = rchild
        stack.append((rchild, idx[~left_mask], depth + 1))
        stack.append((lchild, idx[left_mask], depth + 1))

    return RegressionTree(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        value=np.array(value),
        n_samples=np.array(n_samples, dtype=np.int64),
        impurity=np.array(impurity),
        importance=importance,
    )


@dataclass
class Forest:
    params: ForestParams
    trees: list[RegressionTree]
    bootstrap_indices: list[np.ndarray]
    oob_mse: float
    importance_scores: np.ndarray  # normalized to sum 1 when any split occurred
    feature_ids: list[str] = field(default_factory=list)
    n_features: int = 0

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features:
            raise DomainError(
                f"row width {X.shape[1]} does not match fitted width {self.n_features}"
            )
        preds = np.zeros(len(X))
        for tree in self.trees:
            preds += tree.predict(X)
        return preds / len(self.trees)

    def predict_row(self, z_row: np.ndarray) -> float:
        return float(self.predict(np.asarray(z_row)[None, :])[0])

    def to_json(self) -> str:
        return json.dumps(
            {
                "params": {
                    "n_trees": self.params.n_trees,
                    "mtry": self.params.resolve_mtry(self.n_features),
                    "min_node_size": self.params.min_node_size,
                    "max_depth": self.params.max_depth,
                    "bootstrap": self.params.bootstrap,
                    "seed": self.params.seed,
                },
                "oob_mse": self.oob_mse,
                "importance": {
                    q: s for q, s in zip(self.feature_ids, self.importance_scores.tolist())
                },
            },
            sort_keys=True,
        )


def tree_rng(master_seed: int, tree_index: int) -> np.random.Generator:
    """Per-tree generator, a pure function of (master seed, tree index)."""
    return np.random.default_rng(np.random.SeedSequence([master_seed, tree_index]))


def fit_forest(
    X: np.ndarray,
    y: np.ndarray,
    params: ForestParams,
    feature_ids: list[str] | None = None,
) -> Forest:
    """Fit the bagged ensemble and compute OOB error and importances.

    Each tree trains on a with-replacement bootstrap of the rows (unless
    ``params.bootstrap`` is off); OOB predictions average the trees that did
    not see a row, and ``oob_mse`` covers rows with at least one such tree.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    params.validate(n, p)
    mtry = params.resolve_mtry(p)
    if feature_ids is None:
        feature_ids = [str(j) for j in range(p)]

    trees, boots = [], []
    oob_sum = np.zeros(n)
    oob_count = np.zeros(n, dtype=np.int64)
    raw_importance = np.zeros(p)
    for t in range(params.n_trees):
        rng = tree_rng(params.seed, t)
        if params.bootstrap:
            boot = rng.integers(0, n, size=n)
        else:
            boot = np.arange(n)
        tree = fit_tree(
            X, y, row_idx=boot, mtry=mtry,
            min_node_size=params.min_node_size,
            max_depth=params.max_depth, rng=rng,
        )
        trees.append(tree)
        boots.append(boot)
        raw_importance += tree.importance
        oob = np.bincount(boot, minlength=n) == 0
        if oob.any():
            oob_sum[oob] += tree.predict(X[oob])
            oob_count[oob] += 1

    covered = oob_count > 0
    if covered.any():
        oob_pred = oob_sum[covered] / oob_count[covered]
        oob_mse = float(np.mean((y[covered] - oob_pred) ** 2))
    else:
        oob_mse = float("nan")

    total = raw_importance.sum()
    scores = raw_importance / total if total > 0 else raw_importance
    return Forest(
        params=params,
        trees=trees,
        bootstrap_indices=boots,
        oob_mse=oob_mse,
        importance_scores=scores,
        feature_ids=feature_ids,
        n_features=p,
    )


def importance_ranking(forest: Forest) -> list[tuple[str, float]]:
    """Features sorted by importance descending, ties by feature id."""
    pairs = list(zip(forest.feature_ids, forest.importance_scores))
    pairs.sort(key=lambda e: (-e[1], e[0]))
    return [(q, float(s)) for q, s in pairs]
