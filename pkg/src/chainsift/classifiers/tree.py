"""Array-backed decision trees shared by the forest and boosting models.

Split search is exhaustive over candidate thresholds (midpoints between
consecutive distinct sorted values). Ties between equally good splits
resolve to the lowest feature index, then the lowest threshold, so
training is deterministic given the RNG stream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LEAF = -1


@dataclass
class TreeNodes:
    """Flat node arrays; feature == -1 marks a leaf holding `value`."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def __len__(self) -> int:
        return len(self.feature)

    def to_lists(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_lists(cls, d: dict) -> "TreeNodes":
        return cls(
            feature=np.asarray(d["feature"], dtype=np.int32),
            threshold=np.asarray(d["threshold"], dtype=np.float64),
            left=np.asarray(d["left"], dtype=np.int32),
            right=np.asarray(d["right"], dtype=np.int32),
            value=np.asarray(d["value"], dtype=np.float64),
        )


class _TreeBuilder:
    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []

    def add(self, feature=LEAF, threshold=0.0, value=0.0) -> int:
        self.feature.append(feature)
        self.threshold.append(threshold)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.value.append(value)
        return len(self.feature) - 1

    def finish(self) -> TreeNodes:
        return TreeNodes(
            feature=np.asarray(self.feature, dtype=np.int32),
            threshold=np.asarray(self.threshold, dtype=np.float64),
            left=np.asarray(self.left, dtype=np.int32),
            right=np.asarray(self.right, dtype=np.int32),
            value=np.asarray(self.value, dtype=np.float64),
        )


def _candidate_features(d: int, max_features, rng) -> np.ndarray:
    if max_features is None or max_features >= d:
        return np.arange(d)
    # ascending order keeps the lowest-feature-index tie rule meaningful
    return np.sort(rng.choice(d, size=max_features, replace=False))


def _best_split(Xs: np.ndarray, score_left_right, min_leaf: int):
    """Shared scan: Xs is (m, f) candidate-feature columns of node samples.

    score_left_right(order) must return an (m-1, f) matrix of split
    costs (lower is better) for splitting after sorted position i.
    Returns (col, threshold, left_mask) or None when no split is valid.
    """
    m = Xs.shape[0]
    order = np.argsort(Xs, axis=0, kind="stable")
    sortedX = np.take_along_axis(Xs, order, axis=0)
    cost = score_left_right(order)
    invalid = sortedX[:-1] >= sortedX[1:]  # equal adjacent values
    if min_leaf > 1:
        pos = np.arange(1, m)
        bad = (pos < min_leaf) | (m - pos < min_leaf)
        invalid |= bad[:, None]
    cost = np.where(invalid, np.inf, cost)
    # argmin over transposed flat order scans columns (features) first,
    # then rows (thresholds ascending): exactly the tie-break rule
    flat = np.argmin(cost.T)
    col, i = divmod(int(flat), m - 1)
    if not np.isfinite(cost[i, col]):
        return None
    threshold = 0.5 * (sortedX[i, col] + sortedX[i + 1, col])
    left_rows = order[: i + 1, col]
    left_mask = np.zeros(m, dtype=bool)
    left_mask[left_rows] = True
    return col, float(threshold), left_mask


def grow_classification_tree(X, y, *, max_depth=None, min_leaf=1,
                             max_features=None, rng=None) -> TreeNodes:
    """Gini-impurity binary classification tree; y in {0, 1}.

    Leaves hold the majority class (ties go to class 1). max_features,
    when set, subsamples candidate features independently at every split.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    b = _TreeBuilder()
    stack = [(np.arange(len(y)), 0, None, False)]
    while stack:
        idx, depth, parent, is_left = stack.pop()
        ysub = y[idx]
        m = len(idx)
        n_pos = int(ysub.sum())
        leaf_value = 1.0 if 2 * n_pos >= m else 0.0
        node = None
        if n_pos not in (0, m) and (max_depth is None or depth < max_depth) \
                and m >= 2 * min_leaf:
            feats = _candidate_features(X.shape[1], max_features, rng)
            Xs = X[np.ix_(idx, feats)]

            def gini_cost(order, _ysub=ysub, _m=m, _n_pos=n_pos):
                ysorted = _ysub[order]
                pos_left = np.cumsum(ysorted, axis=0)[:-1].astype(np.float64)
                n_left = np.arange(1, _m, dtype=np.float64)[:, None]
                n_right = _m - n_left
                pos_right = _n_pos - pos_left
                pl, pr = pos_left / n_left, pos_right / n_right
                g_left = 1.0 - pl**2 - (1.0 - pl) ** 2
                g_right = 1.0 - pr**2 - (1.0 - pr) ** 2
                return (n_left * g_left + n_right * g_right) / _m

            found = _best_split(Xs, gini_cost, min_leaf)
            if found is not None:
                col, threshold, left_mask = found
                node = b.add(feature=int(feats[col]), threshold=threshold,
                             value=leaf_value)
                stack.append((idx[~left_mask], depth + 1, node, False))
                stack.append((idx[left_mask], depth + 1, node, True))
        if node is None:
            node = b.add(value=leaf_value)
        if parent is not None:
            if is_left:
                b.left[parent] = node
            else:
                b.right[parent] = node
    return b.finish()


def grow_regression_tree(X, grad, hess, *, max_depth=3, min_leaf=1,
                         reg_lambda=1.0, max_features=None,
                         rng=None) -> TreeNodes:
    """Second-order (gradient/hessian) regression tree, XGBoost-style.

    Leaf value is -G / (H + lambda); split cost is the negated gain so
    the shared argmin scan applies.
    """
    X = np.asarray(X, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    hess = np.asarray(hess, dtype=np.float64)
    b = _TreeBuilder()
    stack = [(np.arange(len(grad)), 0, None, False)]
    while stack:
        idx, depth, parent, is_left = stack.pop()
        g, h = grad[idx], hess[idx]
        G, H = float(g.sum()), float(h.sum())
        leaf_value = -G / (H + reg_lambda)
        m = len(idx)
        node = None
        if (max_depth is None or depth < max_depth) and m >= 2 * min_leaf:
            feats = _candidate_features(X.shape[1], max_features, rng)
            Xs = X[np.ix_(idx, feats)]

            def gain_cost(order, _g=g, _h=h, _G=G, _H=H):
                gs = np.cumsum(_g[order], axis=0)[:-1]
                hs = np.cumsum(_h[order], axis=0)[:-1]
                gain = (gs**2 / (hs + reg_lambda)
                        + (_G - gs) ** 2 / (_H - hs + reg_lambda)
                        - _G**2 / (_H + reg_lambda))
                return -gain

            found = _best_split(Xs, gain_cost, min_leaf)
            if found is not None:
                col, threshold, left_mask = found
                node = b.add(feature=int(feats[col]), threshold=threshold,
                             value=leaf_value)
                stack.append((idx[~left_mask], depth + 1, node, False))
                stack.append((idx[left_mask], depth + 1, node, True))
        if node is None:
            node = b.add(value=leaf_value)
        if parent is not None:
            if is_left:
                b.left[parent] = node
            else:
                b.right[parent] = node
    return b.finish()


def tree_predict(tree: TreeNodes, X: np.ndarray) -> np.ndarray:
    """Vectorized root-to-leaf descent; rule is x[feature] <= threshold -> left."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    node = np.zeros(X.shape[0], dtype=np.int64)
    active = tree.feature[node] != LEAF
    rows = np.arange(X.shape[0])
    while active.any():
        cur = node[active]
        f = tree.feature[cur]
        go_left = X[rows[active], f] <= tree.threshold[cur]
        node[active] = np.where(go_left, tree.left[cur], tree.right[cur])
        active = tree.feature[node] != LEAF
    return tree.value[node]
