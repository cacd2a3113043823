"""Sample-weighted gradient-boosted regression trees for squared error.

Each tree is grown greedily on the current residuals with weighted variance
reduction as the split criterion. Leaf values are the L2-shrunk weighted mean
residual ``sum(w r) / (sum(w) + reg_lambda)`` scaled by the learning rate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from smh.errors import InsufficientData


@dataclass(frozen=True)
class TreeParams:
    n_estimators: int = 100
    learning_rate: float = 0.1
    max_depth: int = 3
    reg_lambda: float = 1.0
    min_child_weight: float = 1e-9

    def __post_init__(self):
        if self.n_estimators < 0 or self.max_depth < 0:
            raise ValueError("n_estimators and max_depth must be non-negative")
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning_rate must be in (0, 1]")
        if self.reg_lambda < 0:
            raise ValueError("reg_lambda must be non-negative")


# grid searched for the target-to-spectrum map
PARAM_GRID = {
    "n_estimators": (10, 50, 100, 250),
    "learning_rate": (0.001, 0.01, 0.1),
    "max_depth": (3, 5, 10),
}


@numba.njit(cache=True, nogil=True)
def _best_split(X, order, in_node, r, w, min_child_weight):
    n, d = X.shape
    tot_w = 0.0
    tot_s = 0.0
    for i in range(n):
        if in_node[i]:
            tot_w += w[i]
            tot_s += w[i] * r[i]
    parent = tot_s * tot_s / tot_w
    best_gain = 0.0
    best_f = -1
    best_thr = 0.0
    for f in range(d):
        cw = 0.0
        cs = 0.0
        prev = -1
        for jj in range(n):
            i = order[f, jj]
            if not in_node[i]:
                continue
            if prev >= 0 and X[i, f] > X[prev, f]:
                rw = tot_w - cw
                if cw >= min_child_weight and rw >= min_child_weight:
                    rs = tot_s - cs
                    gain = cs * cs / cw + rs * rs / rw - parent
                    if gain > best_gain:
                        best_gain = gain
                        best_f = f
                        best_thr = 0.5 * (X[prev, f] + X[i, f])
                        # adjacent floats: the midpoint can round up onto the right value
                        if best_thr >= X[i, f]:
                            best_thr = X[prev, f]
            cw += w[i]
            cs += w[i] * r[i]
            prev = i
    return best_f, best_thr, best_gain


@dataclass
class Tree:
    """Array-encoded binary tree; ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            idx = np.flatnonzero(active)
            nd = node[idx]
            go_left = X[idx, self.feature[nd]] <= self.threshold[nd]
            node[idx] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] >= 0
        return self.value[node]

    def to_dict(self):
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            np.asarray(d["feature"], dtype=np.int64),
            np.asarray(d["threshold"], dtype=float),
            np.asarray(d["left"], dtype=np.int64),
            np.asarray(d["right"], dtype=np.int64),
            np.asarray(d["value"], dtype=float),
        )


def grow_tree(X, order, r, w, params: TreeParams) -> Tree:
    n = len(r)
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(feature) - 1

    root = new_node()
    stack = [(root, np.ones(n, dtype=np.bool_), 0)]
    while stack:
        node, mask, depth = stack.pop()
        ws = w[mask]
        rs = r[mask]
        sw = ws.sum()
        swr = (ws * rs).sum()
        value[node] = params.learning_rate * swr / (sw + params.reg_lambda) if sw > 0 else 0.0
        if depth >= params.max_depth:
            continue
        node_sse = (ws * rs * rs).sum() - swr * swr / sw
        if not node_sse > 0:
            continue
        f, thr, gain = _best_split(X, order, mask, r, w, params.min_child_weight)
        if f < 0 or gain <= 1e-12 * node_sse:
            continue
        goes_left = X[:, f] <= thr
        lnode, rnode = new_node(), new_node()
        feature[node], threshold[node] = f, thr
        left[node], right[node] = lnode, rnode
        stack.append((rnode, mask & ~goes_left, depth + 1))
        stack.append((lnode, mask & goes_left, depth + 1))
    return Tree(
        np.asarray(feature, dtype=np.int64),
        np.asarray(threshold, dtype=float),
        np.asarray(left, dtype=np.int64),
        np.asarray(right, dtype=np.int64),
        np.asarray(value, dtype=float),
    )


@dataclass
class BoostedTrees:
    base_score: float
    trees: list
    params: TreeParams
    loss_history: list = field(default_factory=list)

    def predict(self, X) -> np.ndarray:
        X = _as_2d(X)
        out = np.full(len(X), self.base_score)
        for t in self.trees:
            out += t.predict(X)
        return out

    def penalty(self) -> float:
        """Half the squared leaf values summed over all trees."""
        return 0.5 * sum(float((t.value[t.feature < 0] ** 2).sum()) for t in self.trees)

    def to_dict(self):
        return {
            "base_score": self.base_score,
            "params": self.params.__dict__,
            "trees": [t.to_dict() for t in self.trees],
            "loss_history": list(self.loss_history),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            d["base_score"],
            [Tree.from_dict(t) for t in d["trees"]],
            TreeParams(**d["params"]),
            list(d.get("loss_history", [])),
        )


def _as_2d(X):
    X = np.asarray(X, dtype=float)
    return X[:, None] if X.ndim == 1 else X


def fit_boosted(X, y, weights=None, params: TreeParams = TreeParams()) -> BoostedTrees:
    """Fit a boosted ensemble minimizing ``sum(w (y - F)^2)``.

    Rows with zero weight are dropped before fitting, so they never influence
    split thresholds. ``loss_history[t]`` is the weighted data loss divided by
    the number of rows after ``t`` trees.
    """
    X = _as_2d(X)
    y = np.asarray(y, dtype=float)
    n = len(y)
    if n < 1 or len(X) != n:
        raise InsufficientData("need at least one row with matching features")
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and non-negative")
    keep = w > 0
    if not keep.any():
        raise InsufficientData("all sample weights are zero")
    Xk = np.ascontiguousarray(X[keep])
    yk, wk = y[keep], w[keep]
    order = np.ascontiguousarray(np.argsort(Xk, axis=0, kind="stable").T)
    base = float((wk * yk).sum() / wk.sum())
    F = np.full(len(yk), base)
    history = [float((wk * (yk - F) ** 2).sum() / n)]
    trees = []
    for _ in range(params.n_estimators):
        tree = grow_tree(Xk, order, yk - F, wk, params)
        trees.append(tree)
        F = F + tree.predict(Xk)
        history.append(float((wk * (yk - F) ** 2).sum() / n))
    return BoostedTrees(base, trees, params, history)
