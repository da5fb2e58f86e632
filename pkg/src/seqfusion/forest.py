"""Random forest of Gini CART trees for binary classification.

Probability columns are always ordered ``(POS, NEG)``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError

LOG_PROB_FLOOR = 1e-9
_GAIN_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class CartTree:
    """Flat-array binary tree. ``feature[i] == -1`` marks a leaf.

    ``counts[i]`` holds the ``(POS, NEG)`` training counts reaching node ``i``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row of ``X``."""
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        active = self.feature[node] >= 0
        while active.any():
            r = rows[active]
            n = node[r]
            go_left = X[r, self.feature[n]] <= self.threshold[n]
            node[r] = np.where(go_left, self.left[n], self.right[n])
            active[r] = self.feature[node[r]] >= 0
        return node

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        c = self.counts[self.apply(X)]
        return c / c.sum(axis=1, keepdims=True)


def _best_split(Xsub: np.ndarray, y: np.ndarray):
    """Best ``(column, threshold, gain)`` over the columns of ``Xsub``, or None.

    ``y`` is 1.0 for POS, 0.0 for NEG. Equal gains resolve to the lowest
    column, then the lowest threshold.
    """
    n = len(y)
    order = np.argsort(Xsub, axis=0, kind="stable")
    xs = np.take_along_axis(Xsub, order, axis=0)
    left_pos = np.cumsum(y[order], axis=0)[:-1]
    n_left = np.arange(1, n, dtype=np.float64)[:, None]
    n_right = n - n_left
    p_left = left_pos / n_left
    p_right = (y.sum() - left_pos) / n_right
    p = y.mean()
    child = (n_left * 2 * p_left * (1 - p_left) + n_right * 2 * p_right * (1 - p_right)) / n
    gain = 2 * p * (1 - p) - child
    gain[xs[1:] <= xs[:-1]] = -np.inf
    best = gain.max()
    if not best > _GAIN_EPS:
        return None
    near = gain >= best - _GAIN_EPS
    col = int(np.flatnonzero(near.any(axis=0))[0])
    row = int(np.flatnonzero(near[:, col])[0])
    lo, hi = xs[row, col], xs[row + 1, col]
    thr = lo + (hi - lo) / 2
    if not lo < thr < hi:
        thr = lo
    return col, float(thr), float(gain[row, col])


def cart_split(X, y, candidate_features):
    """Gini-optimal ``(feature, threshold, gain)`` among ``candidate_features``.

    ``y`` is boolean (True = POS) or 0/1. Returns None when the node is pure
    or no threshold reduces impurity.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(y) < 2:
        raise ValueError("need at least 2 samples to split")
    feats = np.sort(np.asarray(list(candidate_features), dtype=np.int64))
    found = _best_split(X[:, feats], y)
    if found is None:
        return None
    col, thr, gain = found
    return int(feats[col]), thr, gain


def build_tree(X: np.ndarray, y: np.ndarray, mtry: int, rng: np.random.Generator) -> CartTree:
    """Grow an unpruned tree (min one sample per leaf), resampling candidates per node."""
    n_features = X.shape[1]
    feature, threshold, left, right, counts = [], [], [], [], []

    def new_node(idx):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        n_pos = float(y[idx].sum())
        counts.append((n_pos, len(idx) - n_pos))
        return len(feature) - 1

    stack = [(new_node(np.arange(len(y))), np.arange(len(y)))]
    while stack:
        node, idx = stack.pop()
        n_pos, n_neg = counts[node]
        if n_pos == 0 or n_neg == 0:
            continue
        feats = np.sort(rng.choice(n_features, size=mtry, replace=False))
        found = _best_split(X[np.ix_(idx, feats)], y[idx])
        if found is None:
            continue
        col, thr, _ = found
        f = int(feats[col])
        mask = X[idx, f] <= thr
        feature[node], threshold[node] = f, thr
        li, ri = idx[mask], idx[~mask]
        left[node] = new_node(li)
        right[node] = new_node(ri)
        stack.append((right[node], ri))
        stack.append((left[node], li))
    return CartTree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(counts, dtype=np.float64),
    )


def _fit_one(X, y, mtry, seed, index):
    rng = np.random.default_rng([seed, index])
    boot = rng.integers(0, len(y), len(y))
    return build_tree(X[boot], y[boot], mtry, rng)


@dataclass(frozen=True, eq=False)
class Forest:
    trees: list
    T: int
    feature_subsample: int
    seed: int
    classes: tuple
    n_features: int

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None]
        if X.shape[1] != self.n_features:
            raise DimensionError(f"forest expects {self.n_features} features, got {X.shape[1]}")
        return X

    def predict_proba(self, X) -> np.ndarray:
        X = self._check(X)
        return sum(t.predict_proba(X) for t in self.trees) / len(self.trees)

    def log_proba(self, X) -> np.ndarray:
        return np.log(np.maximum(self.predict_proba(X), LOG_PROB_FLOOR))

    def predict(self, X) -> np.ndarray:
        proba = self.predict_proba(X)
        return np.where(proba[:, 0] >= proba[:, 1], self.classes[0], self.classes[1])


def _resolve_classes(y: np.ndarray, classes):
    if classes is not None:
        return tuple(classes)
    if y.dtype == bool:
        return (True, False)
    return tuple(sorted(set(y.tolist()), reverse=True))


def _n_jobs() -> int:
    try:
        return max(1, int(os.environ.get("SEQFUSION_THREADS", "1")))
    except ValueError:
        return 1


def rf_fit(X, y, T: int = 500, seed: int = 0, classes=None, n_jobs: int | None = None) -> Forest:
    """Fit ``T`` bootstrap trees with ``round(sqrt(F))`` candidate features per split.

    ``classes`` is the ``(POS, NEG)`` pair; by default True/False for boolean
    ``y``, otherwise the larger label is POS. Tree ``i`` depends only on
    ``(seed, i)``, so serial and parallel builds agree and a ``T``-tree forest
    is a prefix of the ``T+1``-tree one.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != len(y):
        raise DimensionError(f"X must be (m, F) with m={len(y)}, got {X.shape}")
    if len(y) < 2:
        raise ValueError("need at least 2 samples")
    if T < 1:
        raise ValueError("T must be at least 1")
    classes = _resolve_classes(y, classes)
    if len(classes) != 2:
        raise ValueError(f"binary labels required, got {classes}")
    y_pos = (y == classes[0]).astype(np.float64)
    if y_pos.all() or not y_pos.any():
        raise ValueError("both classes must be present to fit a forest")
    if X.shape[1] == 0:
        raise DimensionError("X has no features")
    mtry = max(1, int(round(np.sqrt(X.shape[1]))))
    n_jobs = _n_jobs() if n_jobs is None else n_jobs
    if n_jobs > 1:
        from joblib import Parallel, delayed

        trees = Parallel(n_jobs=n_jobs, prefer="threads")(
            delayed(_fit_one)(X, y_pos, mtry, seed, i) for i in range(T)
        )
    else:
        trees = [_fit_one(X, y_pos, mtry, seed, i) for i in range(T)]
    return Forest(list(trees), T, mtry, seed, classes, X.shape[1])


def rf_predict_proba(forest: Forest, x) -> np.ndarray:
    """Class probabilities ``(p_POS, p_NEG)`` for one sample, or ``(m, 2)`` for a batch."""
    x = np.asarray(x, dtype=np.float64)
    proba = forest.predict_proba(x)
    return proba[0] if x.ndim == 1 else proba


def rf_predict(forest: Forest, x):
    """Argmax label; ties go to POS."""
    x = np.asarray(x, dtype=np.float64)
    pred = forest.predict(x)
    return pred[0] if x.ndim == 1 else pred
