"""Isolation forest: ensembles of randomized binary trees that score outliers by path length."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, FitError, ScoreError
from .stats import c_factor, c_factor_array

DEFAULT_N_TREES = 100
DEFAULT_PSI = 256


@dataclass(frozen=True)
class ForestConfig:
    """Construction parameters for an isolation forest."""

    dim: int
    n_trees: int = DEFAULT_N_TREES
    psi: int = DEFAULT_PSI
    seed: int = 0

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}")
        if self.n_trees < 1:
            raise ConfigError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.psi < 2:
            raise ConfigError(f"psi must be >= 2, got {self.psi}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")


@dataclass(eq=False)
class IsolationTree:
    """One isolation tree as flat node arrays.

    feature[i] >= 0 marks an internal node with children left[i]/right[i]
    and split value split[i]; feature[i] == -1 marks a leaf holding
    size[i] training instances. Node 0 is the root.
    """

    feature: np.ndarray  # int32, -1 at leaves
    split: np.ndarray    # float64, NaN at leaves
    left: np.ndarray     # int32, -1 at leaves
    right: np.ndarray    # int32, -1 at leaves
    size: np.ndarray     # int32, leaf instance count, 0 at internal nodes
    leaf_c: np.ndarray = field(init=False)

    def __post_init__(self):
        # Path-length compensation per leaf, precomputed so scoring never
        # recomputes c over node sizes.
        self.leaf_c = c_factor_array(self.size)

    @property
    def n_nodes(self) -> int:
        return int(self.feature.size)


@dataclass(eq=False)
class IsolationForest:
    """A fitted ensemble plus the normalization constant for its subsample size."""

    config: ForestConfig
    trees: list[IsolationTree]
    c_psi: float
    eff_psi: int


def height_limit_for(eff_psi: int) -> int:
    """Standard growth cap: ceil(log2 of the effective subsample size)."""
    return max(1, math.ceil(math.log2(eff_psi)))


def fit_tree(subsample, height_limit: int, rng: np.random.Generator) -> IsolationTree:
    """Grow one isolation tree over a subsample.

    Nodes split on a uniformly drawn feature at a uniform value strictly
    inside that feature's (min, max) at the node; rows route left when
    strictly below the split. Growth stops at single rows, the height
    limit, or an all-identical block.
    """
    X = np.asarray(subsample, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise FitError("subsample must be a non-empty 2-D matrix")
    dim = X.shape[1]

    features: list[int] = []
    splits: list[float] = []
    lefts: list[int] = []
    rights: list[int] = []
    sizes: list[int] = []

    def emit_leaf(n_rows: int) -> int:
        idx = len(features)
        features.append(-1)
        splits.append(math.nan)
        lefts.append(-1)
        rights.append(-1)
        sizes.append(n_rows)
        return idx

    def grow(rows: np.ndarray, depth: int) -> int:
        n = rows.size
        if n <= 1 or depth >= height_limit:
            return emit_leaf(n)

        # Redraw on constant features, up to dim tries; then fall back to a
        # uniform pick among the non-constant ones, or a leaf if the block
        # is fully identical.
        q = -1
        lo = hi = 0.0
        for _ in range(dim):
            cand = int(rng.integers(dim))
            col = X[rows, cand]
            lo, hi = float(col.min()), float(col.max())
            if lo < hi:
                q = cand
                break
        if q < 0:
            open_cols = [j for j in range(dim) if X[rows, j].min() < X[rows, j].max()]
            if not open_cols:
                return emit_leaf(n)
            q = open_cols[int(rng.integers(len(open_cols)))]
            col = X[rows, q]
            lo, hi = float(col.min()), float(col.max())

        p = float(rng.uniform(lo, hi))
        if not lo < p < hi:
            # (lo, hi) holds no representable interior float; nothing to split on.
            return emit_leaf(n)

        idx = len(features)
        features.append(q)
        splits.append(p)
        lefts.append(-1)
        rights.append(-1)
        sizes.append(0)
        go_left = X[rows, q] < p
        lefts[idx] = grow(rows[go_left], depth + 1)
        rights[idx] = grow(rows[~go_left], depth + 1)
        return idx

    grow(np.arange(X.shape[0]), 0)
    return IsolationTree(
        feature=np.asarray(features, dtype=np.int32),
        split=np.asarray(splits, dtype=np.float64),
        left=np.asarray(lefts, dtype=np.int32),
        right=np.asarray(rights, dtype=np.int32),
        size=np.asarray(sizes, dtype=np.int32),
    )


def _tree_rng(seed: int, tree_index: int) -> np.random.Generator:
    # Fixed mixing of (seed, tree index): trees are independent and the fit
    # parallelizes without changing results.
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(tree_index,)))


def fit_forest(train, config: ForestConfig, n_jobs: int = 1) -> IsolationForest:
    """Fit n_trees trees, each on an independent without-replacement subsample.

    Serial and parallel fits produce identical forests because every
    tree's random stream is derived only from (seed, tree index).
    """
    X = np.asarray(train, dtype=np.float64)
    if X.ndim != 2:
        raise FitError("training data must be a 2-D matrix")
    n_rows = X.shape[0]
    if n_rows < 2:
        raise FitError(f"need at least 2 training rows, got {n_rows}")
    if X.shape[1] != config.dim:
        raise FitError(f"training rows have {X.shape[1]} features, config.dim is {config.dim}")
    finite_rows = np.isfinite(X).all(axis=1)
    if not finite_rows.all():
        bad = int(np.nonzero(~finite_rows)[0][0])
        raise FitError(f"non-finite feature value in training row {bad}")

    eff_psi = min(config.psi, n_rows)
    limit = height_limit_for(eff_psi)

    def build(i: int) -> IsolationTree:
        rng = _tree_rng(config.seed, i)
        rows = rng.choice(n_rows, size=eff_psi, replace=False)
        return fit_tree(X[rows], limit, rng)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = list(pool.map(build, range(config.n_trees)))
    else:
        trees = [build(i) for i in range(config.n_trees)]

    return IsolationForest(config=config, trees=trees, c_psi=c_factor(eff_psi), eff_psi=eff_psi)


def path_length(tree: IsolationTree, x) -> float:
    """Edges from root to x's leaf, plus the leaf's size compensation."""
    x = np.asarray(x, dtype=np.float64).ravel()
    node = 0
    edges = 0
    while tree.feature[node] >= 0:
        f = tree.feature[node]
        node = int(tree.left[node]) if x[f] < tree.split[node] else int(tree.right[node])
        edges += 1
    return edges + float(tree.leaf_c[node])


def _tree_path_lengths(tree: IsolationTree, X: np.ndarray) -> np.ndarray:
    # Route all rows level by level; every row ends on a leaf within the
    # height limit.
    n = X.shape[0]
    node = np.zeros(n, dtype=np.int64)
    edges = np.zeros(n, dtype=np.float64)
    active = np.nonzero(tree.feature[node] >= 0)[0]
    while active.size:
        at = node[active]
        f = tree.feature[at]
        go_left = X[active, f] < tree.split[at]
        node[active] = np.where(go_left, tree.left[at], tree.right[at])
        edges[active] += 1.0
        active = active[tree.feature[node[active]] >= 0]
    return edges + tree.leaf_c[node]


def score_batch(forest: IsolationForest, xs) -> np.ndarray:
    """Anomaly scores 2^(-mean path length / c_psi), row order preserved.

    The exponent is applied once to the tree-averaged path length, never
    per tree.
    """
    X = np.asarray(xs, dtype=np.float64)
    if X.size == 0:
        return np.empty(0, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != forest.config.dim:
        raise ScoreError(f"expected rows of {forest.config.dim} features")
    finite_rows = np.isfinite(X).all(axis=1)
    if not finite_rows.all():
        bad = int(np.nonzero(~finite_rows)[0][0])
        raise ScoreError(f"non-finite feature value in row {bad}")
    total = np.zeros(X.shape[0], dtype=np.float64)
    for tree in forest.trees:
        total += _tree_path_lengths(tree, X)
    return np.exp2(-(total / len(forest.trees)) / forest.c_psi)


def score(forest: IsolationForest, x) -> float:
    """Anomaly score of a single vector; identical to a one-row score_batch."""
    x = np.asarray(x, dtype=np.float64).ravel()
    return float(score_batch(forest, x[np.newaxis, :])[0])
