"""Tree-ensemble regressors used as runtime surrogates.

Two models share one regression-tree builder: a bagged random forest whose
across-tree spread serves as the uncertainty estimate, and a least-squares
gradient-boosted ensemble.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np


@numba.njit(cache=True)
def _grow(X, y, sample, max_depth, min_samples_split):
    n = sample.shape[0]
    cap = 2 * n + 1
    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    value = np.zeros(cap)

    order = sample.copy()
    scratch = np.empty(n, np.int64)
    # stack of (node, start, end, depth)
    stack = np.empty((cap, 4), np.int64)
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n
    stack[0, 3] = 0
    top = 1
    n_nodes = 1
    d = X.shape[1]
    while top > 0:
        top -= 1
        node = stack[top, 0]
        start = stack[top, 1]
        end = stack[top, 2]
        depth = stack[top, 3]
        m = end - start

        s = 0.0
        ss = 0.0
        lo = np.inf
        hi = -np.inf
        for t in range(start, end):
            v = y[order[t]]
            s += v
            ss += v * v
            lo = min(lo, v)
            hi = max(hi, v)
        mean = min(max(s / m, lo), hi)
        value[node] = mean
        if depth >= max_depth or m < min_samples_split or hi == lo:
            continue
        parent_sse = ss - s * s / m

        best_sse = parent_sse
        best_f = -1
        best_thr = 0.0
        vals = np.empty(m)
        ys = np.empty(m)
        for f in range(d):
            for t in range(m):
                vals[t] = X[order[start + t], f]
            perm = np.argsort(vals, kind="mergesort")
            sl = 0.0
            ssl = 0.0
            for t in range(m - 1):
                v = y[order[start + perm[t]]]
                sl += v
                ssl += v * v
                a = vals[perm[t]]
                b = vals[perm[t + 1]]
                if a == b:
                    continue
                nl = t + 1
                nr = m - nl
                sr = s - sl
                total = (ssl - sl * sl / nl) + ((ss - ssl) - sr * sr / nr)
                if total < best_sse:
                    best_sse = total
                    best_f = f
                    best_thr = a + 0.5 * (b - a)
                    if not best_thr < b:  # adjacent floats
                        best_thr = a
        if best_f < 0:
            continue

        # stable partition of order[start:end]
        nl = 0
        for t in range(start, end):
            if X[order[t], best_f] <= best_thr:
                scratch[nl] = order[t]
                nl += 1
        if nl == 0 or nl == m:
            continue
        k = nl
        for t in range(start, end):
            if X[order[t], best_f] > best_thr:
                scratch[k] = order[t]
                k += 1
        for t in range(m):
            order[start + t] = scratch[t]

        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = n_nodes
        right[node] = n_nodes + 1
        stack[top, 0] = n_nodes + 1
        stack[top, 1] = start + nl
        stack[top, 2] = end
        stack[top, 3] = depth + 1
        stack[top + 1, 0] = n_nodes
        stack[top + 1, 1] = start
        stack[top + 1, 2] = start + nl
        stack[top + 1, 3] = depth + 1
        top += 2
        n_nodes += 2
    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
    )


@numba.njit(cache=True)
def _predict(feature, threshold, left, right, value, X):
    out = np.empty(X.shape[0])
    for r in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = value[node]
    return out


@dataclass(frozen=True, eq=False)
class Tree:
    """Array-encoded binary regression tree; node 0 is the root.

    A node is a leaf when ``feature[node] == -1``; otherwise samples with
    ``x[feature] <= threshold`` go left.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def leaf_values(self) -> np.ndarray:
        return self.value[self.feature < 0]

    def predict(self, X: np.ndarray) -> np.ndarray:
        return _predict(self.feature, self.threshold, self.left, self.right, self.value, X)

    def same_structure(self, other: "Tree") -> bool:
        return all(
            np.array_equal(getattr(self, k), getattr(other, k))
            for k in ("feature", "threshold", "left", "right", "value")
        )


def fit_tree(X, y, sample=None, max_depth: int = 12, min_samples_split: int = 2) -> Tree:
    """Variance-reduction regression tree.

    Splits consider every feature and midpoints between sorted unique values;
    the first strictly best split wins. Growth stops at ``max_depth``, below
    ``min_samples_split`` samples, or on a pure node.
    """
    X, y = _check_xy(X, y)
    if sample is None:
        sample = np.arange(len(y))
    arrays = _grow(X, y, np.asarray(sample, dtype=np.int64), max_depth, min_samples_split)
    return Tree(*arrays)


def _check_xy(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if len(y) == 0 or X.shape[0] == 0:
        raise ValueError("cannot fit a surrogate on empty data")
    if X.shape[0] != len(y):
        raise ValueError(f"X has {X.shape[0]} rows but y has {len(y)} values")
    return X, y


def _as_rows(x, n_features: int) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = np.ascontiguousarray(x[None, :] if single else x)
    if X.shape[1] != n_features:
        raise ValueError(f"model expects {n_features} features, got {X.shape[1]}")
    return X, single


# ---------------------------------------------------------------- forest


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 25
    max_depth: int = 12
    min_samples_split: int = 2
    bootstrap: bool = True


@dataclass(frozen=True, eq=False)
class Forest:
    trees: list[Tree]
    n_features: int
    params: ForestParams
    seed: int

    @property
    def n_trees(self) -> int:
        return len(self.trees)


def fit_forest(X, y, params: ForestParams = ForestParams(), seed: int = 0) -> Forest:
    if params.n_trees < 1:
        raise ValueError("a forest needs at least one tree")
    X, y = _check_xy(X, y)
    n = len(y)
    rng = np.random.default_rng(seed)
    trees = []
    for _ in range(params.n_trees):
        sample = rng.integers(0, n, n) if params.bootstrap else np.arange(n)
        trees.append(fit_tree(X, y, sample, params.max_depth, params.min_samples_split))
    return Forest(trees, X.shape[1], params, seed)


def predict_forest(forest: Forest, x):
    """Mean and population std of per-tree predictions.

    Accepts one feature vector (returns two floats) or a 2-D batch (returns
    two arrays).
    """
    X, single = _as_rows(x, forest.n_features)
    per_tree = np.stack([t.predict(X) for t in forest.trees])
    # offsets from the first tree: identical trees give exactly zero spread
    dev = per_tree - per_tree[0]
    mean = np.clip(per_tree[0] + dev.mean(axis=0), per_tree.min(axis=0), per_tree.max(axis=0))
    std = dev.std(axis=0)
    if single:
        return float(mean[0]), float(std[0])
    return mean, std


# ---------------------------------------------------------------- boosting


@dataclass(frozen=True)
class BoostParams:
    n_rounds: int = 50
    max_depth: int = 4
    learning_rate: float = 0.3
    min_samples_split: int = 2


@dataclass(frozen=True, eq=False)
class BoostedEnsemble:
    base_score: float
    trees: list[Tree]
    learning_rate: float
    n_features: int
    params: BoostParams
    train_rmse: list[float] = field(default_factory=list)

    @property
    def n_rounds(self) -> int:
        return len(self.trees)


def fit_boosted(X, y, params: BoostParams = BoostParams(), seed: int = 0) -> BoostedEnsemble:
    """Least-squares gradient boosting: each round fits a tree to residuals.

    ``train_rmse[r]`` is the in-sample RMSE after ``r`` rounds (index 0 is the
    base score alone). The fit uses every sample, so ``seed`` has no effect
    today; it is kept so callers treat both surrogates alike.
    """
    X, y = _check_xy(X, y)
    base = float(np.mean(y))
    pred = np.full(len(y), base)
    rmse = [float(np.sqrt(np.mean((y - pred) ** 2)))]
    trees = []
    for _ in range(params.n_rounds):
        tree = fit_tree(X, y - pred, None, params.max_depth, params.min_samples_split)
        pred = pred + params.learning_rate * tree.predict(X)
        trees.append(tree)
        rmse.append(float(np.sqrt(np.mean((y - pred) ** 2))))
    return BoostedEnsemble(base, trees, params.learning_rate, X.shape[1], params, rmse)


def predict_boosted(ensemble: BoostedEnsemble, x):
    X, single = _as_rows(x, ensemble.n_features)
    out = np.full(X.shape[0], ensemble.base_score)
    for t in ensemble.trees:
        out = out + ensemble.learning_rate * t.predict(X)
    return float(out[0]) if single else out


def lcb(mean, std, kappa: float = 1.96):
    """Lower confidence bound ``mean - kappa * std``; smaller is more promising."""
    return mean - kappa * std
