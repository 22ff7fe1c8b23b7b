"""Model fitting: weighted L2 logistic regression and a seeded random forest.

The logistic fit minimizes the weighted mean negative log-likelihood plus an
L2 penalty on the coefficients (intercept unpenalized) by gradient descent
with backtracking line search. Features are z-scored internally; coefficients
live on the standardized scale with the transform stored on the model.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import DimensionMismatch, SingleClass

_ARMIJO_C = 1e-4
_STEP_SHRINK = 0.5
_STEP_GROW = 2.0
_MAX_STEP = 1e6
_MIN_STEP = 1e-18


@dataclass(frozen=True)
class LogisticConfig:
    l2: float = 1e-4
    tol: float = 1e-8
    max_iter: int = 1000
    track_history: bool = False


@dataclass(frozen=True)
class LogisticModel:
    """Fitted logistic regression on the standardized feature scale."""

    coef: np.ndarray
    intercept: float
    mean: np.ndarray
    scale: np.ndarray
    dropped: np.ndarray
    config: LogisticConfig
    n_iter: int
    grad_norm: float
    converged: bool
    history: tuple[float, ...] | None = None

    @property
    def n_features(self) -> int:
        return len(self.coef)


def _weighted_moments(X: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    total = w.sum()
    mean = (w @ X) / total
    var = (w @ (X - mean) ** 2) / total
    return mean, np.sqrt(var)


def logistic_objective(
    Z: np.ndarray, y: np.ndarray, beta: np.ndarray, intercept: float,
    w: np.ndarray, l2: float,
) -> float:
    """Weighted mean NLL plus L2 penalty, on standardized features."""
    z = Z @ beta + intercept
    sgn = 2.0 * y - 1.0
    nll = np.logaddexp(0.0, -sgn * z)
    return float((w @ nll) / w.sum() + 0.5 * l2 * (beta @ beta))


def logistic_gradient(
    Z: np.ndarray, y: np.ndarray, beta: np.ndarray, intercept: float,
    w: np.ndarray, l2: float,
) -> tuple[np.ndarray, float]:
    """Analytic gradient of :func:`logistic_objective` (coefficients, intercept)."""
    z = Z @ beta + intercept
    r = w * (expit(z) - y) / w.sum()
    return Z.T @ r + l2 * beta, float(r.sum())


def fit_logistic(
    X: np.ndarray,
    y: np.ndarray,
    w: np.ndarray | None = None,
    config: LogisticConfig | None = None,
) -> LogisticModel:
    """Fit by gradient descent with backtracking (Armijo) line search.

    Stops when the gradient norm drops to ``config.tol`` or after
    ``config.max_iter`` iterations. Constant features are dropped with a
    warning and reported with zero coefficients.
    """
    config = config or LogisticConfig()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatch(f"X must be 2-D, got shape {X.shape}")
    n, d = X.shape
    if len(y) != n:
        raise DimensionMismatch(f"len(y)={len(y)} != n rows {n}")
    if n < 2:
        raise SingleClass("need at least 2 rows")
    classes = np.unique(y)
    if not np.isin(classes, (0.0, 1.0)).all():
        raise ValueError("y must be binary 0/1")
    if len(classes) < 2:
        raise SingleClass("labels contain a single class")
    if w is None:
        w = np.ones(n)
    else:
        w = np.asarray(w, dtype=float)
        if len(w) != n:
            raise DimensionMismatch(f"len(w)={len(w)} != n rows {n}")
        if np.any(w <= 0):
            raise ValueError("sample weights must be strictly positive")

    mean, scale = _weighted_moments(X, w)
    dropped = scale < 1e-12 * np.maximum(1.0, np.abs(mean))
    if dropped.any():
        names = np.flatnonzero(dropped)
        warnings.warn(f"dropping constant feature columns {names.tolist()}", stacklevel=2)
    keep = ~dropped
    safe_scale = np.where(dropped, 1.0, scale)
    Z = (X[:, keep] - mean[keep]) / safe_scale[keep]

    l2, W = config.l2, w.sum()
    sgn = 2.0 * y - 1.0
    wn = w / W
    beta = np.zeros(keep.sum())
    b = 0.0
    z = np.zeros(n)
    obj = float(wn @ np.logaddexp(0.0, -sgn * z))
    history = [obj] if config.track_history else None
    step = 1.0
    grad_norm = np.inf
    n_iter = 0
    converged = False

    for n_iter in range(1, config.max_iter + 1):
        p = expit(z)
        r = wn * (p - y)
        g_beta = Z.T @ r + l2 * beta
        g_b = float(r.sum())
        grad_norm = float(np.sqrt(g_beta @ g_beta + g_b * g_b))
        if grad_norm <= config.tol:
            converged = True
            n_iter -= 1
            break
        Zg = Z @ g_beta
        gg = grad_norm * grad_norm
        step = min(step * _STEP_GROW, _MAX_STEP)
        while True:
            z_t = z - step * Zg - step * g_b
            beta_t = beta - step * g_beta
            obj_t = float(wn @ np.logaddexp(0.0, -sgn * z_t)) + 0.5 * l2 * float(
                beta_t @ beta_t
            )
            if obj_t <= obj - _ARMIJO_C * step * gg:
                break
            step *= _STEP_SHRINK
            if step < _MIN_STEP:
                break
        if step < _MIN_STEP:
            break  # no descent possible at machine precision
        beta, b, z, obj = beta_t, b - step * g_b, z_t, obj_t
        if history is not None:
            history.append(obj)
        if n_iter % 100 == 0:
            z = Z @ beta + b  # refresh against incremental drift

    coef = np.zeros(d)
    coef[keep] = beta
    return LogisticModel(
        coef=coef,
        intercept=float(b),
        mean=mean,
        scale=safe_scale,
        dropped=dropped,
        config=config,
        n_iter=n_iter,
        grad_norm=grad_norm,
        converged=converged,
        history=tuple(history) if history is not None else None,
    )


def predict_proba(model: LogisticModel, X: np.ndarray) -> np.ndarray:
    """Positive-class probabilities, strictly inside (0, 1) for finite inputs."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DimensionMismatch(
            f"X has shape {X.shape}, model expects {model.n_features} feature columns"
        )
    z = ((X - model.mean) / model.scale) @ model.coef + model.intercept
    p = expit(z)
    return np.clip(p, np.finfo(float).tiny, np.nextafter(1.0, 0.0))


def logistic_to_dict(model: LogisticModel) -> dict:
    """JSON-friendly dump for inspection (not a stability contract)."""
    return {
        "coef": model.coef.tolist(),
        "intercept": model.intercept,
        "mean": model.mean.tolist(),
        "scale": model.scale.tolist(),
        "dropped": model.dropped.tolist(),
        "n_iter": model.n_iter,
        "grad_norm": model.grad_norm,
        "converged": model.converged,
    }


# -- random forest --------------------------------------------------------------

@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    feature_subsample: int | None = None  # default: round(sqrt(d))
    min_leaf: int = 1
    bootstrap: bool = True
    max_depth: int | None = None


@dataclass(frozen=True)
class Tree:
    """Flat array representation: feature == -1 marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[Tree, ...]
    n_features: int
    config: ForestConfig
    seed: int


def _best_split(
    X: np.ndarray, y: np.ndarray, idx: np.ndarray, features: np.ndarray, min_leaf: int
) -> tuple[int, float] | None:
    """Lowest-Gini split over candidate features.

    Ties break to the lowest feature index, then the lowest threshold: features
    are scanned in ascending order and only strictly better costs replace the
    incumbent; within a feature the first (lowest-threshold) minimum wins.
    """
    n = len(idx)
    ys = y[idx]
    total_pos = ys.sum()
    best: tuple[float, int, float] | None = None
    for f in features:
        vals = X[idx, f]
        order = np.argsort(vals, kind="stable")
        v = vals[order]
        yo = ys[order]
        nl = np.arange(1, n)
        valid = v[1:] > v[:-1]
        if min_leaf > 1:
            valid &= (nl >= min_leaf) & (nl <= n - min_leaf)
        if not valid.any():
            continue
        pl = np.cumsum(yo)[:-1]
        pr = total_pos - pl
        nr = n - nl
        gini_l = 1.0 - (pl / nl) ** 2 - ((nl - pl) / nl) ** 2
        gini_r = 1.0 - (pr / nr) ** 2 - ((nr - pr) / nr) ** 2
        cost = (nl * gini_l + nr * gini_r) / n
        cost = np.where(valid, cost, np.inf)
        i = int(np.argmin(cost))
        if best is None or cost[i] < best[0]:
            thr = 0.5 * (v[i] + v[i + 1])
            if thr >= v[i + 1]:  # adjacent floats: keep the split separating
                thr = v[i]
            best = (float(cost[i]), int(f), float(thr))
    if best is None:
        return None
    return best[1], best[2]


def _grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    idx: np.ndarray,
    rng: np.random.Generator,
    m_features: int,
    min_leaf: int,
    max_depth: int | None,
) -> Tree:
    d = X.shape[1]
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(feature) - 1

    root = new_node()
    stack = [(root, idx, 0)]
    while stack:
        node, node_idx, depth = stack.pop()
        ys = y[node_idx]
        pos = ys.sum()
        n = len(node_idx)
        pure = pos == 0 or pos == n
        if pure or n < 2 * min_leaf or (max_depth is not None and depth >= max_depth):
            value[node] = pos / n
            continue
        if m_features < d:
            candidates = np.sort(rng.choice(d, size=m_features, replace=False))
        else:
            candidates = np.arange(d)
        split = _best_split(X, y, node_idx, candidates, min_leaf)
        if split is None and m_features < d:
            split = _best_split(X, y, node_idx, np.arange(d), min_leaf)
        if split is None:
            value[node] = pos / n
            continue
        f, thr = split
        mask = X[node_idx, f] <= thr
        feature[node] = f
        threshold[node] = thr
        l_id, r_id = new_node(), new_node()
        left[node], right[node] = l_id, r_id
        stack.append((r_id, node_idx[~mask], depth + 1))
        stack.append((l_id, node_idx[mask], depth + 1))
    return Tree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=float),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        value=np.asarray(value, dtype=float),
    )


def fit_forest(
    X: np.ndarray,
    y: np.ndarray,
    config: ForestConfig | None = None,
    rng_seed: int = 0,
) -> ForestModel:
    """Gini-split trees on bootstrap samples, deterministic under the seed.

    Per-tree generators are spawned from ``rng_seed``; each tree's bootstrap
    draws row positions with replacement from its own generator, so the
    seed-to-bootstrap mapping is fixed by (seed, tree index) alone.
    """
    config = config or ForestConfig()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatch(f"X must be 2-D, got shape {X.shape}")
    n, d = X.shape
    if len(y) != n:
        raise DimensionMismatch(f"len(y)={len(y)} != n rows {n}")
    if n < 2:
        raise DimensionMismatch("need at least 2 rows")
    m = config.feature_subsample or max(1, round(d**0.5))
    m = min(m, d)
    children = np.random.SeedSequence(rng_seed).spawn(config.n_trees)
    trees = []
    for child in children:
        rng = np.random.default_rng(child)
        idx = rng.integers(0, n, size=n) if config.bootstrap else np.arange(n)
        trees.append(_grow_tree(X, y, idx, rng, m, config.min_leaf, config.max_depth))
    return ForestModel(trees=tuple(trees), n_features=d, config=config, seed=rng_seed)


def _tree_predict(tree: Tree, X: np.ndarray) -> np.ndarray:
    node = np.zeros(len(X), dtype=np.int64)
    while True:
        f = tree.feature[node]
        internal = f >= 0
        if not internal.any():
            break
        rows = np.flatnonzero(internal)
        vals = X[rows, f[rows]]
        thr = tree.threshold[node[rows]]
        node[rows] = np.where(
            vals <= thr, tree.left[node[rows]], tree.right[node[rows]]
        )
    return tree.value[node]


def forest_predict_proba(model: ForestModel, X: np.ndarray) -> np.ndarray:
    """Mean of leaf class fractions across trees; values in [0, 1]."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DimensionMismatch(
            f"X has shape {X.shape}, model expects {model.n_features} feature columns"
        )
    out = np.zeros(len(X))
    for tree in model.trees:
        out += _tree_predict(tree, X)
    return out / len(model.trees)


def forest_to_dict(model: ForestModel) -> dict:
    """JSON-friendly dump for inspection (not a stability contract)."""
    return {
        "n_features": model.n_features,
        "seed": model.seed,
        "trees": [
            {
                "feature": t.feature.tolist(),
                "threshold": t.threshold.tolist(),
                "left": t.left.tolist(),
                "right": t.right.tolist(),
                "value": t.value.tolist(),
            }
            for t in model.trees
        ],
    }
