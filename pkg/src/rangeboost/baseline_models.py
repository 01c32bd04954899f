"""Comparison models: first-order GBDT, OLS, Bayesian ridge, and linear SVR.

All four share the same contract as the core learner: deterministic fit under
a fixed config, pure predict, output length equal to the input row count.
The GBDT baseline deliberately has no leaf or weight regularization so the
contrast with the second-order learner stays visible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boosted_trees import Ensemble, RegressionTree, TreeNode
from .errors import EmptyData, InvalidConfig, LayoutMismatch, NonFiniteInput


@dataclass(frozen=True)
class LinearModel:
    weights: tuple[float, ...]
    intercept: float

    def predict(self, matrix: np.ndarray) -> np.ndarray:
        return predict_linear(self, matrix)


def predict_linear(model: LinearModel, matrix: np.ndarray) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] != len(model.weights):
        raise LayoutMismatch(
            f"matrix has {matrix.shape[1] if matrix.ndim == 2 else '?'} columns, "
            f"model expects {len(model.weights)}"
        )
    return matrix @ np.asarray(model.weights, dtype=np.float64) + model.intercept


def _as_xy(matrix, targets) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(matrix, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise LayoutMismatch(f"incompatible shapes {X.shape} and {y.shape}")
    if X.shape[0] == 0:
        raise EmptyData("cannot fit on an empty dataset")
    if not np.isfinite(X).all() or not np.isfinite(y).all():
        raise NonFiniteInput("fit inputs must be finite")
    return X, y


def fit_ols(matrix, targets) -> LinearModel:
    """Least squares with an implicit intercept column; rank deficiency
    resolves to the minimum-norm solution instead of failing."""
    X, y = _as_xy(matrix, targets)
    augmented = np.hstack([X, np.ones((X.shape[0], 1))])
    solution, *_ = np.linalg.lstsq(augmented, y, rcond=None)
    return LinearModel(weights=tuple(float(w) for w in solution[:-1]), intercept=float(solution[-1]))


def ridge_posterior_mean(matrix, targets, alpha: float) -> np.ndarray:
    """Posterior-mean weights (X'X + alpha I)^-1 X'y of the Gaussian linear
    model with an isotropic prior of precision alpha."""
    X, y = _as_xy(matrix, targets)
    if alpha <= 0:
        raise InvalidConfig(f"prior precision must be positive, got {alpha}")
    gram = X.T @ X + alpha * np.eye(X.shape[1])
    return np.linalg.solve(gram, X.T @ y)


def fit_bayes_ridge(matrix, targets, alpha: float = 1.0) -> LinearModel:
    """Bayesian ridge posterior mean with an unpenalized intercept, obtained
    by centering the design and targets before the closed-form solve."""
    X, y = _as_xy(matrix, targets)
    if alpha <= 0:
        raise InvalidConfig(f"prior precision must be positive, got {alpha}")
    if X.shape[1] == 0:
        return LinearModel(weights=(), intercept=float(np.mean(y)))
    x_mean = X.mean(axis=0)
    y_mean = float(np.mean(y))
    weights = ridge_posterior_mean(X - x_mean, y - y_mean, alpha)
    intercept = y_mean - float(x_mean @ weights)
    return LinearModel(weights=tuple(float(w) for w in weights), intercept=intercept)


@dataclass(frozen=True)
class GbdtBaselineConfig:
    n_trees: int = 200
    learning_rate: float = 0.1
    max_depth: int = 6
    min_samples_leaf: int = 1

    def __post_init__(self):
        if self.n_trees < 0:
            raise InvalidConfig(f"n_trees must be >= 0, got {self.n_trees}")
        if not 0.0 < self.learning_rate <= 1.0:
            raise InvalidConfig(f"learning_rate must be in (0, 1], got {self.learning_rate}")
        if self.max_depth < 1:
            raise InvalidConfig(f"max_depth must be >= 1, got {self.max_depth}")
        if self.min_samples_leaf < 1:
            raise InvalidConfig(f"min_samples_leaf must be >= 1, got {self.min_samples_leaf}")


def _best_variance_split(matrix, rows, residuals, min_samples_leaf):
    """Squared-error-reduction scan: for residual sums S over n rows the
    reduction of a split is S_L^2/n_L + S_R^2/n_R - S^2/n.  First maximum in
    (feature, threshold) order wins."""
    n = rows.shape[0]
    if n < 2 * min_samples_leaf or n < 2:
        return None
    sub = matrix[rows]
    order = np.argsort(sub, axis=0, kind="stable")
    values = np.take_along_axis(sub, order, axis=0)
    r_sorted = residuals[rows][order]
    r_cum = np.cumsum(r_sorted, axis=0)
    total = r_cum[-1, :]
    left_sum = r_cum[:-1, :]
    left_n = np.arange(1, n, dtype=np.float64)[:, None]
    right_n = n - left_n
    usable = (
        (values[:-1, :] < values[1:, :])
        & (left_n >= min_samples_leaf)
        & (right_n >= min_samples_leaf)
    )
    right_sum = total - left_sum
    reductions = (
        left_sum * left_sum / left_n
        + right_sum * right_sum / right_n
        - (total * total) / n
    )
    reductions = np.where(usable, reductions, -np.inf)
    flat = reductions.T.ravel()
    best = int(np.argmax(flat))
    if not flat[best] > 0.0:
        return None
    col, boundary = divmod(best, n - 1)
    threshold = (values[boundary, col] + values[boundary + 1, col]) / 2.0
    return int(col), float(threshold)


def fit_gbdt_first_order(matrix, targets, config: GbdtBaselineConfig | None = None) -> Ensemble:
    """Plain gradient boosting: each tree fits the current residuals with
    mean-residual leaves and variance-reduction splits, scaled by the
    learning rate."""
    config = config or GbdtBaselineConfig()
    X, y = _as_xy(matrix, targets)
    base = float(np.mean(y))
    predictions = np.full(X.shape[0], base, dtype=np.float64)
    all_rows = np.arange(X.shape[0])

    def build(residuals):
        nodes: list[TreeNode] = []

        def grow(rows, depth):
            split = None
            if depth < config.max_depth:
                split = _best_variance_split(X, rows, residuals, config.min_samples_leaf)
            index = len(nodes)
            if split is None:
                value = config.learning_rate * float(np.mean(residuals[rows]))
                nodes.append(TreeNode(weight=value))
                return index
            feature, threshold = split
            nodes.append(TreeNode())
            mask = X[rows, feature] < threshold
            left = grow(rows[mask], depth + 1)
            right = grow(rows[~mask], depth + 1)
            nodes[index] = TreeNode(feature=feature, threshold=threshold, left=left, right=right)
            return index

        grow(all_rows, 0)
        return RegressionTree(nodes=tuple(nodes), root=0)

    trees = []
    for _ in range(config.n_trees):
        tree = build(y - predictions)
        trees.append(tree)
        predictions += tree.predict(X)
    return Ensemble(
        trees=tuple(trees),
        base_score=base,
        learning_rate=config.learning_rate,
        feature_layout=tuple(f"f{i}" for i in range(X.shape[1])),
    )


@dataclass(frozen=True)
class SvrConfig:
    """Linear epsilon-insensitive SVR trained by full-batch subgradient
    descent.  The step at epoch t is step_size / (1 + step_decay * t),
    applied to the mean subgradient; full-batch updates make the fit
    deterministic, the seed is carried for config-file compatibility."""

    epsilon: float = 0.1
    c: float = 1.0
    step_size: float = 1e-5
    step_decay: float = 0.02
    epochs: int = 300
    seed: int = 0

    def __post_init__(self):
        if self.epsilon < 0:
            raise InvalidConfig(f"epsilon must be >= 0, got {self.epsilon}")
        if self.c <= 0:
            raise InvalidConfig(f"regularization c must be > 0, got {self.c}")
        if self.step_size <= 0:
            raise InvalidConfig(f"step_size must be > 0, got {self.step_size}")
        if self.step_decay < 0:
            raise InvalidConfig(f"step_decay must be >= 0, got {self.step_decay}")
        if self.epochs < 0:
            raise InvalidConfig(f"epochs must be >= 0, got {self.epochs}")


def svr_objective(weights, intercept, matrix, targets, epsilon: float, c: float) -> float:
    """0.5 ||w||^2 / c plus the epsilon-insensitive hinge over all rows."""
    w = np.asarray(weights, dtype=np.float64)
    X = np.asarray(matrix, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    errors = X @ w + intercept - y
    hinge = np.maximum(0.0, np.abs(errors) - epsilon)
    return 0.5 * float(w @ w) / c + float(np.sum(hinge))


def fit_linear_svr(matrix, targets, config: SvrConfig | None = None) -> LinearModel:
    """Epoch-ordered subgradient descent; rows inside the epsilon tube
    contribute no loss subgradient, so a model already within the tube stays
    put."""
    config = config or SvrConfig()
    X, y = _as_xy(matrix, targets)
    n, m = X.shape
    w = np.zeros(m, dtype=np.float64)
    b = 0.0
    for epoch in range(config.epochs):
        step = config.step_size / (1.0 + config.step_decay * epoch)
        errors = X @ w + b - y
        signs = np.where(np.abs(errors) > config.epsilon, np.sign(errors), 0.0)
        grad_w = w / (config.c * n) + (X.T @ signs) / n
        grad_b = float(np.sum(signs)) / n
        w = w - step * grad_w
        b = b - step * grad_b
    return LinearModel(weights=tuple(float(v) for v in w), intercept=float(b))


def linear_to_json(model: LinearModel, feature_layout=None) -> dict:
    layout = list(feature_layout) if feature_layout is not None else [
        f"f{i}" for i in range(len(model.weights))
    ]
    return {
        "format_version": 1,
        "kind": "linear",
        "weights": list(model.weights),
        "intercept": model.intercept,
        "feature_layout": layout,
    }
