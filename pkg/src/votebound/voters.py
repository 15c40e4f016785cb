"""Base classifiers (stump grids, bagged trees) and their error matrices.

The error matrix is the sufficient statistic for every risk computed in
this package: entry (i, j) is 1 iff voter j misclassifies example i.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError


@dataclass(frozen=True)
class Stump:
    """Axis-aligned threshold classifier for binary labels {0, 1}.

    With polarity +1 it predicts 1 when the feature is >= threshold;
    polarity -1 predicts the complement.
    """

    feature: int
    threshold: float
    polarity: int

    def predict(self, X: np.ndarray) -> np.ndarray:
        fires = X[:, self.feature] >= self.threshold
        if self.polarity >= 0:
            return fires.astype(np.int64)
        return (~fires).astype(np.int64)

    def max_feature(self) -> int:
        return self.feature


class DecisionTree:
    """CART-style tree stored as flat node arrays.

    ``feature[k] < 0`` marks node k as a leaf predicting ``label[k]``;
    otherwise examples with x[feature] <= threshold go to ``left[k]``.
    """

    def __init__(self, feature, threshold, left, right, label):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.label = np.asarray(label, dtype=np.int64)

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            feat = self.feature[node]
            pending = feat >= 0
            if not pending.any():
                return self.label[node]
            idx = np.flatnonzero(pending)
            go_left = X[idx, feat[idx]] <= self.threshold[node[idx]]
            node[idx] = np.where(go_left, self.left[node[idx]], self.right[node[idx]])

    def max_feature(self) -> int:
        return int(self.feature.max(initial=-1))


def build_stump_grid(feature_ranges, thresholds_per_feature: int = 10):
    """Evenly spaced stumps over each feature range, both polarities.

    Thresholds sit strictly inside (lo, hi) at lo + (hi-lo)*i/(k+1) for
    i = 1..k, so a single threshold lands on the midpoint. The returned
    list has 2 * n_features * thresholds_per_feature voters and is closed
    under label complement.
    """
    if thresholds_per_feature < 1:
        raise DomainError("thresholds_per_feature must be >= 1")
    stumps = []
    for j, (lo, hi) in enumerate(feature_ranges):
        lo, hi = float(lo), float(hi)
        if not lo < hi:
            raise DomainError(f"degenerate range for feature {j}: [{lo}, {hi}]")
        k = thresholds_per_feature
        for i in range(1, k + 1):
            t = lo + (hi - lo) * i / (k + 1)
            stumps.append(Stump(j, t, +1))
            stumps.append(Stump(j, t, -1))
    return stumps


def _gini_best_split(X, y, n_classes, features, min_leaf=1):
    """Best (feature, threshold, score) among candidate midpoint splits."""
    n = y.size
    best = (None, None, np.inf)
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), y] = 1.0
    for f in features:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        counts_left = np.cumsum(onehot[order], axis=0)
        valid = np.flatnonzero(np.diff(xs) > 0)
        if valid.size == 0:
            continue
        n_left = valid + 1.0
        n_right = n - n_left
        cl = counts_left[valid]
        cr = counts_left[-1] - cl
        gini_l = 1.0 - ((cl / n_left[:, None]) ** 2).sum(axis=1)
        gini_r = 1.0 - ((cr / n_right[:, None]) ** 2).sum(axis=1)
        score = (n_left * gini_l + n_right * gini_r) / n
        k = int(np.argmin(score))
        if score[k] < best[2]:
            thr = 0.5 * (xs[valid[k]] + xs[valid[k] + 1])
            best = (f, float(thr), float(score[k]))
    return best


def _grow_tree(X, y, n_classes, max_depth, n_split_features, rng):
    feature, threshold, left, right, label = [], [], [], [], []

    def leaf(sub_y):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        label.append(int(np.bincount(sub_y, minlength=n_classes).argmax()))
        return len(feature) - 1

    def recurse(idx, depth):
        sub_y = y[idx]
        if (max_depth is not None and depth >= max_depth) or np.all(sub_y == sub_y[0]):
            return leaf(sub_y)
        d = X.shape[1]
        feats = rng.choice(d, size=min(n_split_features, d), replace=False)
        f, thr, score = _gini_best_split(X[idx], sub_y, n_classes, feats)
        if f is None:
            return leaf(sub_y)
        node = len(feature)
        feature.append(int(f))
        threshold.append(thr)
        left.append(-1)
        right.append(-1)
        label.append(-1)
        go_left = X[idx, f] <= thr
        left_id = recurse(idx[go_left], depth + 1)
        right_id = recurse(idx[~go_left], depth + 1)
        left[node] = left_id
        right[node] = right_id
        return node

    recurse(np.arange(X.shape[0]), 0)
    return DecisionTree(feature, threshold, left, right, label)


def train_bagged_forest(data, n_trees: int, max_depth=None, rng=None):
    """Bagged decision trees: each tree sees floor(n/2) points drawn with
    replacement and considers ceil(sqrt(d)) random features per split,
    minimizing Gini impurity. Splits fall on midpoints between consecutive
    sorted feature values; leaves predict the bag-majority label.
    """
    if n_trees < 1:
        raise DomainError("n_trees must be >= 1")
    X, y = data.features, data.labels
    n, d = X.shape
    if n == 0:
        raise DomainError("cannot train a forest on empty data")
    if rng is None:
        rng = np.random.default_rng()
    bag_size = max(1, n // 2)
    n_split_features = int(np.ceil(np.sqrt(d)))
    trees = []
    for _ in range(n_trees):
        bag = rng.integers(0, n, size=bag_size)
        trees.append(
            _grow_tree(X[bag], y[bag], data.class_count, max_depth, n_split_features, rng)
        )
    return trees


@dataclass(frozen=True, eq=False)
class ErrorMatrix:
    """Boolean n-by-M table; entry (i, j) is True iff voter j errs on i."""

    matrix: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        arr = np.asarray(self.matrix, dtype=bool)
        if arr.ndim != 2:
            raise DimensionError("error matrix must be two-dimensional")
        object.__setattr__(self, "matrix", arr)

    @property
    def n_examples(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_voters(self) -> int:
        return self.matrix.shape[1]

    def wrong_indices(self, i: int) -> np.ndarray:
        """Indices of voters that err on example i."""
        return np.flatnonzero(self.matrix[i])

    def unique_rows(self):
        """Distinct error patterns and their multiplicities.

        Risks depend on examples only through the per-row wrong/correct
        masses, so collapsing duplicate rows makes evaluation cost scale
        with the number of distinct patterns rather than with n.
        """
        if "unique" not in self._cache:
            packed = np.packbits(self.matrix, axis=1)
            view = packed.view([("", packed.dtype)] * packed.shape[1]).ravel()
            _, first, counts = np.unique(view, return_index=True, return_counts=True)
            self._cache["unique"] = (self.matrix[first], counts.astype(float))
        return self._cache["unique"]


def predictions_tensor(voters, X: np.ndarray) -> np.ndarray:
    """Per-example, per-voter predicted labels (n-by-M integer table)."""
    d = X.shape[1]
    for j, v in enumerate(voters):
        if v.max_feature() >= d:
            raise DimensionError(
                f"voter {j} uses feature {v.max_feature()} but data has {d} features"
            )
    return np.column_stack([v.predict(X) for v in voters])


def error_matrix(voters, data) -> ErrorMatrix:
    """Evaluate every voter on every example of a dataset."""
    preds = predictions_tensor(voters, data.features)
    return ErrorMatrix(preds != data.labels[:, None])


def deterministic_mv_predict(theta, predictions: np.ndarray, n_classes: int) -> np.ndarray:
    """Label with the largest total weight among voters; ties go to the
    smallest label index."""
    theta = np.asarray(theta, dtype=float)
    if predictions.shape[1] != theta.size:
        raise DimensionError("weight vector and prediction tensor disagree on M")
    n = predictions.shape[0]
    scores = np.zeros((n, n_classes))
    for k in range(n_classes):
        scores[:, k] = (predictions == k) @ theta
    return scores.argmax(axis=1)


def informed_split_indices(n: int, rng: np.random.Generator):
    """Deterministic halving for informed-prior runs: a seeded permutation
    split into the first floor(n/2) indices and the rest."""
    perm = rng.permutation(n)
    m = n // 2
    return perm[:m], perm[m:]


def voters_to_json(voters) -> str:
    """Serialize a voter list to the documented JSON schema.

    Stump: {"kind": "stump", "feature": int, "threshold": float,
    "polarity": +1|-1}. Tree: {"kind": "tree", "nodes": [{"feature":
    int (-1 for leaf), "threshold": float, "left": int, "right": int,
    "label": int (-1 for internal)}]}.
    """
    out = []
    for v in voters:
        if isinstance(v, Stump):
            out.append(
                {
                    "kind": "stump",
                    "feature": v.feature,
                    "threshold": v.threshold,
                    "polarity": v.polarity,
                }
            )
        elif isinstance(v, DecisionTree):
            nodes = [
                {
                    "feature": int(v.feature[k]),
                    "threshold": float(v.threshold[k]),
                    "left": int(v.left[k]),
                    "right": int(v.right[k]),
                    "label": int(v.label[k]),
                }
                for k in range(v.feature.size)
            ]
            out.append({"kind": "tree", "nodes": nodes})
        else:
            raise DomainError(f"cannot serialize voter of type {type(v).__name__}")
    return json.dumps({"voters": out}, sort_keys=True)


def voters_from_json(text: str):
    """Inverse of voters_to_json."""
    payload = json.loads(text)
    voters = []
    for item in payload["voters"]:
        if item["kind"] == "stump":
            voters.append(Stump(item["feature"], item["threshold"], item["polarity"]))
        elif item["kind"] == "tree":
            nodes = item["nodes"]
            voters.append(
                DecisionTree(
                    [nd["feature"] for nd in nodes],
                    [nd["threshold"] for nd in nodes],
                    [nd["left"] for nd in nodes],
                    [nd["right"] for nd in nodes],
                    [nd["label"] for nd in nodes],
                )
            )
        else:
            raise DomainError(f"unknown voter kind {item['kind']!r}")
    return voters
