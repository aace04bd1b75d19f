"""Seeded regression trees and forests.

Plain CART regression: axis-aligned splits chosen by variance reduction,
bootstrap resampling per tree, and a fresh feature subsample at every
split.  All randomness flows from one integer seed through spawned
per-tree generators, so training is reproducible bit for bit regardless
of how many worker threads fit the trees.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyTrainingSet, SchemaMismatch

__all__ = ["TreeParams", "RegressionTree", "RegressionForest"]

_LEAF = -1


@dataclass(frozen=True)
class TreeParams:
    max_depth: int | None = 12
    min_leaf: int = 4
    feature_subsample: str | int | float | None = "sqrt"
    bootstrap: bool = True

    def mtry(self, n_features: int) -> int:
        fs = self.feature_subsample
        if fs is None or fs == "all":
            return n_features
        if fs == "sqrt":
            return max(1, int(round(np.sqrt(n_features))))
        if isinstance(fs, float):
            return max(1, min(n_features, int(round(fs * n_features))))
        return max(1, min(n_features, int(fs)))


class RegressionTree:
    """One CART regression tree stored as flat node arrays."""

    def __init__(self):
        self.feature: np.ndarray | None = None
        self.threshold: np.ndarray | None = None
        self.left: np.ndarray | None = None
        self.right: np.ndarray | None = None
        self.value: np.ndarray | None = None
        # Raw variance-reduction gain accumulated per feature.
        self.gains: np.ndarray | None = None

    def fit(self, X: np.ndarray, y: np.ndarray, rng: np.random.Generator, params: TreeParams) -> "RegressionTree":
        n, d = X.shape
        mtry = params.mtry(d)
        feature, threshold, left, right, value = [], [], [], [], []
        gains = np.zeros(d)

        # Depth-first, children pushed right-then-left so the left child
        # is processed next; node ids are assigned in visit order.
        stack = [(np.arange(n), 0, -1, False)]
        while stack:
            idx, depth, parent, is_right = stack.pop()
            node_id = len(feature)
            if parent >= 0:
                (right if is_right else left)[parent] = node_id

            y_node = y[idx]
            mean = float(y_node.mean())
            split = None
            if (params.max_depth is None or depth < params.max_depth) and idx.size >= 2 * params.min_leaf:
                split = self._best_split(X, y_node, idx, rng, mtry, params.min_leaf)

            if split is None:
                feature.append(_LEAF)
                threshold.append(0.0)
                left.append(_LEAF)
                right.append(_LEAF)
                value.append(mean)
                continue

            f, thr, gain, left_idx, right_idx = split
            gains[f] += gain
            feature.append(f)
            threshold.append(thr)
            left.append(_LEAF)
            right.append(_LEAF)
            value.append(mean)
            stack.append((right_idx, depth + 1, node_id, True))
            stack.append((left_idx, depth + 1, node_id, False))

        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=float)
        self.gains = gains
        return self

    @staticmethod
    def _best_split(X, y_node, idx, rng, mtry, min_leaf):
        n = idx.size
        total1 = y_node.sum()
        total2 = float(y_node @ y_node)
        parent_sse = total2 - total1 * total1 / n
        if parent_sse <= 0.0:
            return None

        d = X.shape[1]
        feats = rng.choice(d, size=mtry, replace=False) if mtry < d else np.arange(d)

        best = None  # (cost, feature, threshold)
        for f in feats:
            v = X[idx, f]
            order = np.argsort(v, kind="stable")
            sv = v[order]
            sy = y_node[order]
            # Valid cut positions: between distinct values, both children
            # at least min_leaf samples.
            pos = np.arange(min_leaf - 1, n - min_leaf)
            pos = pos[sv[pos] < sv[pos + 1]]
            if pos.size == 0:
                continue
            c1 = np.cumsum(sy)
            c2 = np.cumsum(sy * sy)
            nl = pos + 1.0
            nr = n - nl
            sse_l = c2[pos] - c1[pos] ** 2 / nl
            sse_r = (total2 - c2[pos]) - (total1 - c1[pos]) ** 2 / nr
            cost = sse_l + sse_r
            k = int(np.argmin(cost))
            if best is None or cost[k] < best[0]:
                thr = 0.5 * (sv[pos[k]] + sv[pos[k] + 1])
                best = (float(cost[k]), int(f), thr, order, pos[k])

        if best is None:
            return None
        cost, f, thr, order, cut = best
        gain = parent_sse - cost
        if gain <= 0.0:
            return None
        sorted_idx = idx[order]
        return f, thr, gain, np.sort(sorted_idx[: cut + 1]), np.sort(sorted_idx[cut + 1 :])

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            feats = self.feature[node]
            active = feats != _LEAF
            if not active.any():
                break
            rows = np.flatnonzero(active)
            f = feats[rows]
            go_left = X[rows, f] <= self.threshold[node[rows]]
            node[rows] = np.where(go_left, self.left[node[rows]], self.right[node[rows]])
        return self.value[node]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict, n_features: int) -> "RegressionTree":
        t = cls()
        t.feature = np.asarray(d["feature"], dtype=np.int64)
        t.threshold = np.asarray(d["threshold"], dtype=float)
        t.left = np.asarray(d["left"], dtype=np.int64)
        t.right = np.asarray(d["right"], dtype=np.int64)
        t.value = np.asarray(d["value"], dtype=float)
        t.gains = np.zeros(n_features)
        return t


@dataclass
class RegressionForest:
    n_trees: int = 100
    params: TreeParams = field(default_factory=TreeParams)
    seed: int = 0
    trees: list[RegressionTree] = field(default_factory=list)
    n_features: int = 0

    def fit(self, X: np.ndarray, y: np.ndarray, threads: int = 1) -> "RegressionForest":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise SchemaMismatch(f"X/y shapes do not align: {X.shape} vs {y.shape}")
        if X.shape[0] == 0:
            raise EmptyTrainingSet("no training samples")
        self.n_features = X.shape[1]
        n = X.shape[0]

        seeds = np.random.SeedSequence(self.seed).spawn(self.n_trees)

        def fit_one(seq):
            rng = np.random.default_rng(seq)
            idx = rng.integers(0, n, size=n) if self.params.bootstrap else np.arange(n)
            return RegressionTree().fit(X[idx], y[idx], rng, self.params)

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                self.trees = list(pool.map(fit_one, seeds))
        else:
            self.trees = [fit_one(s) for s in seeds]
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        if not self.trees:
            raise EmptyTrainingSet("forest has not been fitted")
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise SchemaMismatch(f"expected {self.n_features} features, got {X.shape}")
        out = np.zeros(X.shape[0])
        for t in self.trees:
            out += t.predict(X)
        return out / len(self.trees)

    def feature_importances(self) -> np.ndarray:
        """Variance-reduction gains summed over all splits, normalized to
        sum to 1 (all zeros if no tree ever split)."""
        total = np.zeros(self.n_features)
        for t in self.trees:
            total += t.gains
        s = total.sum()
        return total / s if s > 0 else total

    def to_dict(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "seed": self.seed,
            "n_features": self.n_features,
            "params": {
                "max_depth": self.params.max_depth,
                "min_leaf": self.params.min_leaf,
                "feature_subsample": self.params.feature_subsample,
                "bootstrap": self.params.bootstrap,
            },
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RegressionForest":
        params = TreeParams(
            max_depth=d["params"]["max_depth"],
            min_leaf=d["params"]["min_leaf"],
            feature_subsample=d["params"]["feature_subsample"],
            bootstrap=d["params"]["bootstrap"],
        )
        forest = cls(n_trees=d["n_trees"], params=params, seed=d["seed"])
        forest.n_features = d["n_features"]
        forest.trees = [RegressionTree.from_dict(t, forest.n_features) for t in d["trees"]]
        return forest
