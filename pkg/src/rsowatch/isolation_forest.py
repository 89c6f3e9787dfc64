"""Isolation forest baseline, built directly on the classic algorithm.

Trees split on a uniformly chosen feature at a split value drawn strictly
inside the node's observed range, down to a height limit of ceil(log2(psi)).
Scores follow s = 2^(-E[h]/c(psi)) with the harmonic-number approximation
H(i) = ln(i) + Euler-Mascheroni constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

EULER_MASCHERONI = 0.5772156649

#: Sentinel for score-threshold classification instead of a fixed contamination.
AUTO = "auto"


def average_path_length(n: int) -> float:
    """c(n): expected path length of an unsuccessful BST search among n points."""
    if n <= 1:
        return 0.0
    harmonic = math.log(n - 1) + EULER_MASCHERONI
    return 2.0 * harmonic - 2.0 * (n - 1) / n


@dataclass(frozen=True)
class IForestConfig:
    n_estimators: int = 100
    max_samples: float | int = 1.0
    contamination: float | str = AUTO
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_estimators <= 0:
            raise ValueError("n_estimators must be positive")
        if isinstance(self.max_samples, bool) or not isinstance(self.max_samples, (int, float)):
            raise ValueError(f"max_samples must be numeric, got {self.max_samples!r}")
        if isinstance(self.max_samples, float):
            if not 0.0 < self.max_samples <= 1.0:
                raise ValueError("fractional max_samples must lie in (0, 1]")
        elif self.max_samples < 1:
            raise ValueError("absolute max_samples must be at least 1")
        if self.contamination != AUTO:
            if not isinstance(self.contamination, (int, float)) or not 0 < self.contamination < 0.5:
                raise ValueError(
                    f"contamination must be '{AUTO}' or a fraction in (0, 0.5), "
                    f"got {self.contamination!r}"
                )

    def resolve_sample_size(self, n_rows: int) -> int:
        if isinstance(self.max_samples, float):
            return max(1, min(n_rows, int(round(self.max_samples * n_rows))))
        return min(n_rows, int(self.max_samples))


@dataclass
class _Node:
    feature: int = -1
    split: float = 0.0
    left: "_Node | None" = None
    right: "_Node | None" = None
    size: int = 0

    @property
    def is_leaf(self) -> bool:
        return self.left is None


@dataclass
class IsolationForest:
    config: IForestConfig
    trees: list[_Node] = field(default_factory=list)
    sample_size: int = 0
    n_features: int = 0

    @property
    def height_limit(self) -> int:
        return math.ceil(math.log2(max(self.sample_size, 2)))


def _grow(X: np.ndarray, rows: np.ndarray, depth: int, limit: int,
          rng: np.random.Generator) -> _Node:
    if depth >= limit or rows.size <= 1:
        return _Node(size=rows.size)
    values = X[rows]
    lo = values.min(axis=0)
    hi = values.max(axis=0)
    splittable = np.flatnonzero(hi > lo)
    if splittable.size == 0:
        return _Node(size=rows.size)
    feature = int(rng.choice(splittable))
    split = float(rng.uniform(lo[feature], hi[feature]))
    # uniform() can land on the boundary; nudge inside so both children are non-empty
    if split <= lo[feature] or split >= hi[feature]:
        split = float((lo[feature] + hi[feature]) / 2.0)
    left_mask = values[:, feature] < split
    return _Node(
        feature=feature,
        split=split,
        left=_grow(X, rows[left_mask], depth + 1, limit, rng),
        right=_grow(X, rows[~left_mask], depth + 1, limit, rng),
        size=rows.size,
    )


def fit(X: np.ndarray, config: IForestConfig) -> IsolationForest:
    """Fit a forest; each tree sees its own seeded subsample without replacement."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError(f"expected a non-empty 2-d matrix, got shape {X.shape}")
    if not np.isfinite(X).all():
        raise ValueError("training matrix contains non-finite values")
    n = X.shape[0]
    psi = config.resolve_sample_size(n)
    forest = IsolationForest(config=config, sample_size=psi, n_features=X.shape[1])
    rng = np.random.Generator(np.random.PCG64(config.seed))
    limit = forest.height_limit
    for _ in range(config.n_estimators):
        rows = rng.choice(n, size=psi, replace=False) if psi < n else np.arange(n)
        forest.trees.append(_grow(X, rows, 0, limit, rng))
    return forest


def path_length(node: _Node, x: np.ndarray, depth: int = 0) -> float:
    """Traversal depth plus the average-path adjustment at the terminal node."""
    while not node.is_leaf:
        node = node.left if x[node.feature] < node.split else node.right
        depth += 1
    return depth + average_path_length(node.size)


def score(forest: IsolationForest, X: np.ndarray) -> np.ndarray:
    """Anomaly scores in (0, 1]; higher is more isolated."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != forest.n_features:
        raise ValueError(
            f"expected an N x {forest.n_features} matrix, got shape {X.shape}"
        )
    denom = average_path_length(forest.sample_size)
    if denom <= 0.0:
        # psi == 1: every path has length 0 and scoring degenerates to 0.5
        return np.full(X.shape[0], 0.5)
    out = np.empty(X.shape[0], dtype=np.float64)
    for i, x in enumerate(X):
        mean_path = np.mean([path_length(tree, x) for tree in forest.trees])
        out[i] = 2.0 ** (-mean_path / denom)
    return out


def classify(forest: IsolationForest, X: np.ndarray) -> np.ndarray:
    """Boolean anomaly flags.

    A fixed contamination f flags exactly the top ceil(f * N) scores, ties
    broken by row order; AUTO flags scores strictly above 0.5.
    """
    scores = score(forest, X)
    if forest.config.contamination == AUTO:
        return scores > 0.5
    n = scores.size
    count = min(n, math.ceil(forest.config.contamination * n))
    flags = np.zeros(n, dtype=bool)
    if count > 0:
        order = np.argsort(-scores, kind="stable")
        flags[order[:count]] = True
    return flags
