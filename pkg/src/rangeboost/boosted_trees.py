"""Second-order gradient boosting over regularized CART trees.

The model is an additive ensemble: a base score plus the routed leaf weight
of each tree.  Trees are grown by exact-greedy split search against the
second-order approximation of the regularized squared-error objective

    sum_i 1/2 (pred_i - y_i)^2  +  sum_k [ gamma * T_k + 1/2 lambda * ||w_k||^2 ]

where T_k counts tree k's leaves and w_k are its leaf weights.  For a leaf
collecting gradient sum G and hessian sum H the optimal weight is
-G / (H + lambda), and a split of that leaf into (L, R) is worth

    1/2 [ G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - G^2/(H+lambda) ] - gamma.

With the 1/2-scaled squared loss the hessian is exactly 1 per row, so the
second-order expansion is exact and the objective decreases monotonically
round over round for any shrinkage in (0, 1].
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateLeaf,
    EmptyData,
    InvalidConfig,
    LayoutMismatch,
    LengthMismatch,
    MalformedModel,
    NonFiniteInput,
)


@dataclass(frozen=True)
class GradHess:
    """First and second derivative of the per-sample loss at the current
    prediction."""

    g: float
    h: float


def grad_hess_squared(prediction: float, target: float) -> GradHess:
    """Derivatives of l(p, y) = 1/2 (p - y)^2 with respect to p."""
    return GradHess(g=prediction - target, h=1.0)


def leaf_weight(g_sum: float, h_sum: float, reg_lambda: float) -> float:
    """Minimizer of the per-leaf objective G*w + 1/2 (H + lambda) w^2."""
    denom = h_sum + reg_lambda
    if denom <= 0.0:
        raise DegenerateLeaf(f"hessian sum plus lambda must be positive, got {denom}")
    return -g_sum / denom


def split_gain(
    g_left: float,
    h_left: float,
    g_right: float,
    h_right: float,
    reg_lambda: float,
    gamma: float,
) -> float:
    """Objective reduction from splitting one leaf into two, net of the
    per-leaf penalty gamma.  May be negative."""
    if h_left + reg_lambda <= 0.0 or h_right + reg_lambda <= 0.0:
        raise DegenerateLeaf("each child needs a positive hessian sum plus lambda")
    g_parent = g_left + g_right
    h_parent = h_left + h_right
    return (
        0.5
        * (
            g_left * g_left / (h_left + reg_lambda)
            + g_right * g_right / (h_right + reg_lambda)
            - g_parent * g_parent / (h_parent + reg_lambda)
        )
        - gamma
    )


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for the second-order learner.

    ``base_score=None`` means "use the training-target mean".  ``seed`` is
    carried for config-file compatibility; training itself is deterministic.
    """

    n_trees: int = 200
    learning_rate: float = 0.1
    reg_lambda: float = 1.0
    gamma: float = 0.0
    max_depth: int = 6
    min_child_weight: float = 1.0
    base_score: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 0:
            raise InvalidConfig(f"n_trees must be >= 0, got {self.n_trees}")
        if not 0.0 < self.learning_rate <= 1.0:
            raise InvalidConfig(f"learning_rate must be in (0, 1], got {self.learning_rate}")
        if self.reg_lambda < 0.0:
            raise InvalidConfig(f"reg_lambda must be >= 0, got {self.reg_lambda}")
        if self.gamma < 0.0:
            raise InvalidConfig(f"gamma must be >= 0, got {self.gamma}")
        if self.max_depth < 1:
            raise InvalidConfig(f"max_depth must be >= 1, got {self.max_depth}")
        if self.min_child_weight < 0.0:
            raise InvalidConfig(f"min_child_weight must be >= 0, got {self.min_child_weight}")


@dataclass(frozen=True)
class TreeNode:
    """Either an internal test (feature, threshold, children) or a leaf
    (weight).  Rows with value < threshold route left, >= routes right."""

    feature: int | None = None
    threshold: float | None = None
    left: int | None = None
    right: int | None = None
    weight: float | None = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


@dataclass(frozen=True)
class RegressionTree:
    nodes: tuple[TreeNode, ...]
    root: int = 0

    def predict(self, matrix: np.ndarray) -> np.ndarray:
        out = np.empty(matrix.shape[0], dtype=np.float64)
        stack = [(self.root, np.arange(matrix.shape[0]))]
        while stack:
            idx, rows = stack.pop()
            node = self.nodes[idx]
            if node.is_leaf:
                out[rows] = node.weight
            else:
                mask = matrix[rows, node.feature] < node.threshold
                stack.append((node.left, rows[mask]))
                stack.append((node.right, rows[~mask]))
        return out

    def leaf_weights(self) -> np.ndarray:
        return np.asarray([n.weight for n in self.nodes if n.is_leaf], dtype=np.float64)

    @property
    def n_leaves(self) -> int:
        return sum(1 for n in self.nodes if n.is_leaf)


@dataclass(frozen=True)
class Ensemble:
    """Additive model: base score plus the sum of per-tree leaf weights.
    Leaf weights are stored post-shrinkage."""

    trees: tuple[RegressionTree, ...]
    base_score: float
    learning_rate: float
    feature_layout: tuple[str, ...]

    def predict(self, matrix: np.ndarray) -> np.ndarray:
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[1] != len(self.feature_layout):
            raise LayoutMismatch(
                f"matrix has {matrix.shape[1] if matrix.ndim == 2 else '?'} columns, "
                f"model expects {len(self.feature_layout)}"
            )
        out = np.full(matrix.shape[0], self.base_score, dtype=np.float64)
        for tree in self.trees:
            out += tree.predict(matrix)
        return out


def predict(ensemble: Ensemble, matrix: np.ndarray) -> np.ndarray:
    return ensemble.predict(matrix)


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    gain: float


def _scan_feature_block(
    matrix: np.ndarray,
    rows: np.ndarray,
    grad: np.ndarray,
    hess: np.ndarray,
    features: np.ndarray,
    config: TrainConfig,
) -> Split | None:
    """Best candidate over a block of feature columns, or None.

    Candidates are midpoints between adjacent distinct sorted values; a
    candidate must leave at least min_child_weight of hessian on each side
    and have strictly positive gain.  Within the block the first maximum in
    (feature, threshold) order wins, which realizes the tie-break."""
    n = rows.shape[0]
    if n < 2:
        return None
    sub = matrix[np.ix_(rows, features)]
    order = np.argsort(sub, axis=0, kind="stable")
    values = np.take_along_axis(sub, order, axis=0)
    g_sorted = grad[rows][order]
    h_sorted = hess[rows][order]
    g_cum = np.cumsum(g_sorted, axis=0)
    h_cum = np.cumsum(h_sorted, axis=0)
    g_total = g_cum[-1, :]
    h_total = h_cum[-1, :]
    g_left = g_cum[:-1, :]
    h_left = h_cum[:-1, :]
    g_right = g_total - g_left
    h_right = h_total - h_left

    lam = config.reg_lambda
    usable = (
        (values[:-1, :] < values[1:, :])
        & (h_left >= config.min_child_weight)
        & (h_right >= config.min_child_weight)
        & (h_left + lam > 0.0)
        & (h_right + lam > 0.0)
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        gains = (
            0.5
            * (
                g_left * g_left / (h_left + lam)
                + g_right * g_right / (h_right + lam)
                - (g_total * g_total) / (h_total + lam)
            )
            - config.gamma
        )
    gains = np.where(usable, gains, -np.inf)

    flat = gains.T.ravel()
    best = int(np.argmax(flat))
    if not flat[best] > 0.0:
        return None
    col, boundary = divmod(best, n - 1)
    threshold = (values[boundary, col] + values[boundary + 1, col]) / 2.0
    return Split(feature=int(features[col]), threshold=float(threshold), gain=float(flat[best]))


def find_best_split(
    rows: np.ndarray,
    matrix: np.ndarray,
    grad: np.ndarray,
    hess: np.ndarray,
    config: TrainConfig,
    executor: ThreadPoolExecutor | None = None,
    n_jobs: int = 1,
) -> Split | None:
    """Exact-greedy scan over every feature and boundary threshold.

    Ties on gain resolve to the lower feature index, then the lower
    threshold; the reduction over feature blocks applies the same order, so
    the result is independent of the worker count."""
    m = matrix.shape[1]
    if m == 0 or rows.shape[0] == 0:
        return None
    if executor is None or n_jobs <= 1 or m < 2:
        return _scan_feature_block(matrix, rows, grad, hess, np.arange(m), config)
    chunks = np.array_split(np.arange(m), min(n_jobs, m))
    results = executor.map(
        lambda block: _scan_feature_block(matrix, rows, grad, hess, block, config), chunks
    )
    best: Split | None = None
    for candidate in results:
        if candidate is not None and (best is None or candidate.gain > best.gain):
            best = candidate
    return best


def grow_tree(
    rows: np.ndarray,
    matrix: np.ndarray,
    grad: np.ndarray,
    hess: np.ndarray,
    config: TrainConfig,
    executor: ThreadPoolExecutor | None = None,
    n_jobs: int = 1,
) -> RegressionTree:
    """Depth-limited recursive growth; leaves store shrunken weights."""
    nodes: list[TreeNode] = []

    def build(node_rows: np.ndarray, depth: int) -> int:
        split = None
        if depth < config.max_depth:
            split = find_best_split(node_rows, matrix, grad, hess, config, executor, n_jobs)
        index = len(nodes)
        if split is None:
            g_sum = float(np.sum(grad[node_rows]))
            h_sum = float(np.sum(hess[node_rows]))
            weight = config.learning_rate * leaf_weight(g_sum, h_sum, config.reg_lambda)
            nodes.append(TreeNode(weight=weight))
            return index
        nodes.append(TreeNode())  # placeholder; children filled in below
        mask = matrix[node_rows, split.feature] < split.threshold
        left = build(node_rows[mask], depth + 1)
        right = build(node_rows[~mask], depth + 1)
        nodes[index] = TreeNode(
            feature=split.feature, threshold=split.threshold, left=left, right=right
        )
        return index

    build(np.asarray(rows), 0)
    return RegressionTree(nodes=tuple(nodes), root=0)


def _check_training_inputs(matrix: np.ndarray, targets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    matrix = np.ascontiguousarray(matrix, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if matrix.ndim != 2:
        raise LengthMismatch(f"feature matrix must be 2-D, got shape {matrix.shape}")
    if targets.ndim != 1 or matrix.shape[0] != targets.shape[0]:
        raise LengthMismatch(
            f"matrix has {matrix.shape[0]} rows but targets has {targets.shape}"
        )
    if matrix.shape[0] == 0:
        raise EmptyData("cannot train on an empty dataset")
    if not np.isfinite(matrix).all() or not np.isfinite(targets).all():
        raise NonFiniteInput("training inputs must be finite")
    return matrix, targets


def train(
    matrix: np.ndarray,
    targets: np.ndarray,
    config: TrainConfig | None = None,
    feature_names: Sequence[str] | None = None,
    n_jobs: int = 1,
) -> Ensemble:
    """Boost n_trees rounds of second-order tree fitting.

    Each round recomputes per-row gradients against the current predictions,
    grows one tree, and adds its (already shrunken) outputs to the
    prediction buffer.  Deterministic for a fixed config regardless of
    ``n_jobs``.
    """
    config = config or TrainConfig()
    matrix, targets = _check_training_inputs(matrix, targets)
    names = tuple(feature_names) if feature_names is not None else tuple(
        f"f{i}" for i in range(matrix.shape[1])
    )
    if len(names) != matrix.shape[1]:
        raise LayoutMismatch(
            f"{len(names)} feature names for {matrix.shape[1]} matrix columns"
        )

    base = float(np.mean(targets)) if config.base_score is None else float(config.base_score)
    predictions = np.full(matrix.shape[0], base, dtype=np.float64)
    rows = np.arange(matrix.shape[0])
    hess = np.ones(matrix.shape[0], dtype=np.float64)

    executor = ThreadPoolExecutor(max_workers=n_jobs) if n_jobs > 1 else None
    trees: list[RegressionTree] = []
    try:
        for _ in range(config.n_trees):
            grad = predictions - targets
            tree = grow_tree(rows, matrix, grad, hess, config, executor, n_jobs)
            trees.append(tree)
            predictions += tree.predict(matrix)
    finally:
        if executor is not None:
            executor.shutdown()
    return Ensemble(
        trees=tuple(trees),
        base_score=base,
        learning_rate=config.learning_rate,
        feature_layout=names,
    )


def objective_value(
    ensemble: Ensemble,
    matrix: np.ndarray,
    targets: np.ndarray,
    reg_lambda: float,
    gamma: float,
) -> float:
    """Regularized objective of the stored model on a dataset: squared loss
    plus gamma per leaf plus the L2 penalty on stored leaf weights."""
    predictions = ensemble.predict(matrix)
    targets = np.asarray(targets, dtype=np.float64)
    loss = 0.5 * float(np.sum((predictions - targets) ** 2))
    penalty = 0.0
    for tree in ensemble.trees:
        weights = tree.leaf_weights()
        penalty += gamma * tree.n_leaves + 0.5 * reg_lambda * float(np.sum(weights**2))
    return loss + penalty


FORMAT_VERSION = 1


def to_json(ensemble: Ensemble) -> dict:
    """Model document; floats survive bit-exactly via shortest-round-trip
    text."""
    trees = []
    for tree in ensemble.trees:
        nodes = []
        for node in tree.nodes:
            if node.is_leaf:
                nodes.append({"weight": node.weight})
            else:
                nodes.append(
                    {
                        "feature": node.feature,
                        "threshold": node.threshold,
                        "left": node.left,
                        "right": node.right,
                    }
                )
        trees.append({"root": tree.root, "nodes": nodes})
    return {
        "format_version": FORMAT_VERSION,
        "kind": "ensemble",
        "base_score": ensemble.base_score,
        "learning_rate": ensemble.learning_rate,
        "feature_layout": list(ensemble.feature_layout),
        "trees": trees,
    }


def _require(condition: bool, location: str, message: str) -> None:
    if not condition:
        raise MalformedModel(f"{location}: {message}")


def _check_tree(doc, layout_size: int, location: str) -> RegressionTree:
    _require(isinstance(doc, dict), location, "tree must be an object")
    nodes_doc = doc.get("nodes")
    _require(isinstance(nodes_doc, list) and nodes_doc, location, "tree needs a non-empty node list")
    root = doc.get("root", 0)
    _require(isinstance(root, int) and 0 <= root < len(nodes_doc), location, f"bad root index {root!r}")

    nodes: list[TreeNode] = []
    for i, node_doc in enumerate(nodes_doc):
        where = f"{location}.nodes[{i}]"
        _require(isinstance(node_doc, dict), where, "node must be an object")
        if "weight" in node_doc:
            _require(
                set(node_doc) == {"weight"}, where, "leaf nodes carry exactly a weight"
            )
            weight = node_doc["weight"]
            _require(
                isinstance(weight, (int, float)) and math.isfinite(weight),
                where,
                f"non-finite leaf weight {weight!r}",
            )
            nodes.append(TreeNode(weight=float(weight)))
        else:
            _require(
                set(node_doc) == {"feature", "threshold", "left", "right"},
                where,
                "internal nodes carry feature/threshold/left/right",
            )
            feature = node_doc["feature"]
            threshold = node_doc["threshold"]
            _require(
                isinstance(feature, int) and 0 <= feature < layout_size,
                where,
                f"feature index {feature!r} outside layout of size {layout_size}",
            )
            _require(
                isinstance(threshold, (int, float)) and math.isfinite(threshold),
                where,
                f"non-finite threshold {threshold!r}",
            )
            for side in ("left", "right"):
                child = node_doc[side]
                _require(
                    isinstance(child, int) and 0 <= child < len(nodes_doc),
                    where,
                    f"{side} child index {child!r} out of range",
                )
            nodes.append(
                TreeNode(
                    feature=feature,
                    threshold=float(threshold),
                    left=node_doc["left"],
                    right=node_doc["right"],
                )
            )

    seen: set[int] = set()
    stack = [root]
    while stack:
        idx = stack.pop()
        _require(idx not in seen, f"{location}.nodes[{idx}]", "node reached twice (cycle or shared child)")
        seen.add(idx)
        node = nodes[idx]
        if not node.is_leaf:
            stack.extend((node.left, node.right))
    _require(
        len(seen) == len(nodes),
        location,
        f"{len(nodes) - len(seen)} node(s) unreachable from the root",
    )
    return RegressionTree(nodes=tuple(nodes), root=root)


def from_json(doc) -> Ensemble:
    """Validate and decode a model document; the error names the first
    offending location."""
    _require(isinstance(doc, dict), "model", "document must be an object")
    _require(doc.get("format_version") == FORMAT_VERSION, "model.format_version",
             f"unsupported format version {doc.get('format_version')!r}")
    layout = doc.get("feature_layout")
    _require(
        isinstance(layout, list) and all(isinstance(x, str) for x in layout),
        "model.feature_layout",
        "must be a list of column names",
    )
    base = doc.get("base_score")
    _require(
        isinstance(base, (int, float)) and math.isfinite(base),
        "model.base_score",
        f"non-finite base score {base!r}",
    )
    rate = doc.get("learning_rate")
    _require(
        isinstance(rate, (int, float)) and math.isfinite(rate),
        "model.learning_rate",
        f"non-finite learning rate {rate!r}",
    )
    trees_doc = doc.get("trees")
    _require(isinstance(trees_doc, list), "model.trees", "must be a list")
    trees = tuple(
        _check_tree(tree_doc, len(layout), f"model.trees[{k}]")
        for k, tree_doc in enumerate(trees_doc)
    )
    return Ensemble(
        trees=trees,
        base_score=float(base),
        learning_rate=float(rate),
        feature_layout=tuple(layout),
    )


def save_model(document: dict, path) -> None:
    Path(path).write_text(json.dumps(document, indent=2) + "\n", encoding="utf-8")


def load_model(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise MalformedModel(f"cannot read model file {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedModel(f"model file {path} is not valid JSON: {exc}") from exc
