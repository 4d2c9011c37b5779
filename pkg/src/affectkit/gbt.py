"""Gradient-boosted regression trees for binary log-loss, exact greedy splits.

Each stage fits a depth-limited tree to the gradient and hessian of the
logistic loss at the current margin. Leaf values are the regularised Newton
step ``-G / (H + lambda)``; the model margin is
``base_score + learning_rate * sum(tree outputs)``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import DataError, ShapeError, TrainingError

log = logging.getLogger(__name__)

MODEL_FORMAT = "affectkit-gbt"
MODEL_VERSION = 1


@dataclass(frozen=True)
class GBTConfig:
    n_estimators: int = 250
    learning_rate: float = 0.05
    max_depth: int = 6
    reg_lambda: float = 1.0
    min_child_weight: float = 1.0


@dataclass
class Tree:
    """Flat binary tree; ``feature[i] == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def depth(self, node: int = 0) -> int:
        if self.feature[node] < 0:
            return 0
        return 1 + max(self.depth(self.left[node]), self.depth(self.right[node]))

    def to_nested(self, node: int = 0):
        """``("leaf", value)`` or ``("split", feature, threshold, left, right)``."""
        if self.feature[node] < 0:
            return ("leaf", float(self.value[node]))
        return (
            "split",
            int(self.feature[node]),
            float(self.threshold[node]),
            self.to_nested(int(self.left[node])),
            self.to_nested(int(self.right[node])),
        )

    def predict(self, X: np.ndarray) -> np.ndarray:
        return _kernels.predict_tree(
            np.ascontiguousarray(X, dtype=np.float64), self.feature, self.threshold, self.left, self.right, self.value
        )

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(
            np.asarray(d["feature"], dtype=np.intp),
            np.asarray(d["threshold"], dtype=np.float64),
            np.asarray(d["left"], dtype=np.intp),
            np.asarray(d["right"], dtype=np.intp),
            np.asarray(d["value"], dtype=np.float64),
        )


@dataclass
class GBTModel:
    trees: list[Tree]
    learning_rate: float
    base_score: float
    n_features: int
    config: GBTConfig = field(default_factory=GBTConfig)
    train_loss: list[float] = field(default_factory=list)

    def decision_function(self, X) -> np.ndarray:
        X = _check_X(X, self.n_features)
        raw = _kernels.predict_forest(X, self.trees) if self.trees else np.zeros(X.shape[0])
        return self.base_score + self.learning_rate * raw

    def predict_proba(self, X) -> np.ndarray:
        """Probability of the positive class for each row."""
        return _sigmoid(self.decision_function(X))

    def predict(self, X, threshold: float = 0.5) -> np.ndarray:
        return (self.predict_proba(X) >= threshold).astype(int)

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "config": asdict(self.config),
            "learning_rate": self.learning_rate,
            "base_score": self.base_score,
            "n_features": self.n_features,
            "train_loss": self.train_loss,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GBTModel":
        if d.get("format") != MODEL_FORMAT or d.get("version") != MODEL_VERSION:
            raise DataError("not a supported GBT model file")
        return cls(
            trees=[Tree.from_dict(t) for t in d["trees"]],
            learning_rate=d["learning_rate"],
            base_score=d["base_score"],
            n_features=d["n_features"],
            config=GBTConfig(**d["config"]),
            train_loss=list(d["train_loss"]),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "GBTModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _check_X(X, n_features: int | None = None) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeError(f"expected a 2-D feature matrix, got shape {X.shape}")
    if n_features is not None and X.shape[1] != n_features:
        raise ShapeError(f"expected {n_features} features, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise DataError("feature matrix contains non-finite values")
    return X


def _check_binary(y, n: int) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.shape[0] != n:
        raise ShapeError(f"{n} rows but {y.shape[0]} labels")
    if not np.all((y == 0) | (y == 1)):
        raise DataError("labels must be 0/1")
    if y.min() == y.max():
        raise TrainingError("training data contains a single class")
    return y


def log_loss(y: np.ndarray, margin: np.ndarray) -> float:
    """Mean logistic loss for 0/1 labels at raw margins."""
    return float(np.mean(np.logaddexp(0.0, margin) - y * margin))


def presort(Xt: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(np.argsort(Xt, axis=1, kind="stable").astype(np.intp))


def grow_tree(
    Xt: np.ndarray,
    order: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    max_depth: int,
    reg_lambda: float,
    min_child_weight: float,
    kernel=None,
) -> tuple[Tree, np.ndarray]:
    """Grow one tree level by level. Returns the tree and each row's leaf value."""
    find = (kernel or _kernels).find_best_splits
    n = Xt.shape[1]
    feature: list[int] = [-1]
    threshold: list[float] = [0.0]
    left: list[int] = [-1]
    right: list[int] = [-1]
    value: list[float] = [0.0]
    row_value = np.zeros(n)
    node_of = np.zeros(n, dtype=np.intp)
    level = [0]  # global ids of the nodes in the current level, indexed by slot
    rows = np.arange(n)
    for depth in range(max_depth + 1):
        n_slots = len(level)
        active = node_of >= 0
        G = np.bincount(node_of[active], weights=g[active], minlength=n_slots)
        H = np.bincount(node_of[active], weights=h[active], minlength=n_slots)
        if depth < max_depth:
            bf, bt, _ = find(Xt, order, node_of, g, h, n_slots, reg_lambda, min_child_weight)
        else:
            bf = np.full(n_slots, -1, dtype=np.intp)
            bt = np.zeros(n_slots)
        child_slot = np.full(n_slots, -1, dtype=np.intp)
        next_level: list[int] = []
        for slot, gid in enumerate(level):
            if bf[slot] >= 0:
                feature[gid] = int(bf[slot])
                threshold[gid] = float(bt[slot])
                child_slot[slot] = len(next_level)
                for side in (left, right):
                    side[gid] = len(feature)
                    next_level.append(len(feature))
                    feature.append(-1)
                    threshold.append(0.0)
                    left.append(-1)
                    right.append(-1)
                    value.append(0.0)
            else:
                v = -G[slot] / (H[slot] + reg_lambda)
                value[gid] = float(v)
                row_value[node_of == slot] = v
        r = rows[active]
        slot_r = node_of[active]
        splitting = bf[slot_r] >= 0
        new_slot = np.full(r.size, -1, dtype=np.intp)
        rs, ss = r[splitting], slot_r[splitting]
        go_right = ~(Xt[bf[ss], rs] < bt[ss])
        new_slot[splitting] = child_slot[ss] + go_right
        node_of = np.full(n, -1, dtype=np.intp)
        node_of[r] = new_slot
        level = next_level
        if not level:
            break
    tree = Tree(
        np.asarray(feature, dtype=np.intp),
        np.asarray(threshold, dtype=np.float64),
        np.asarray(left, dtype=np.intp),
        np.asarray(right, dtype=np.intp),
        np.asarray(value, dtype=np.float64),
    )
    return tree, row_value


def train_gbt(
    X,
    y,
    n_estimators: int = 250,
    learning_rate: float = 0.05,
    max_depth: int = 6,
    seed: int = 0,
    reg_lambda: float = 1.0,
    min_child_weight: float = 1.0,
    kernel=None,
) -> GBTModel:
    """Fit a boosted ensemble to 0/1 labels.

    There is no subsampling, so ``seed`` does not affect the result; it is
    accepted so every trainer shares one signature.
    """
    del seed
    X = _check_X(X)
    y = _check_binary(y, X.shape[0])
    config = GBTConfig(n_estimators, learning_rate, max_depth, reg_lambda, min_child_weight)
    p0 = y.mean()
    base = float(np.log(p0 / (1.0 - p0)))
    Xt = np.ascontiguousarray(X.T)
    order = presort(Xt)
    margin = np.full(X.shape[0], base)
    losses = [log_loss(y, margin)]
    trees = []
    for _ in range(n_estimators):
        p = _sigmoid(margin)
        g = p - y
        h = p * (1.0 - p)
        tree, leaf = grow_tree(Xt, order, g, h, max_depth, reg_lambda, min_child_weight, kernel)
        trees.append(tree)
        margin = margin + learning_rate * leaf
        losses.append(log_loss(y, margin))
    return GBTModel(trees, learning_rate, base, X.shape[1], config, losses)


def predict_gbt(model: GBTModel, x) -> np.ndarray | float:
    """Positive-class probability for one row (1-D) or many rows (2-D)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return float(model.predict_proba(x[None, :])[0])
    return model.predict_proba(x)


@dataclass
class OneVsRestGBT:
    """One binary model per class; the predicted class has the highest probability."""

    classes: list[str]
    models: dict[str, GBTModel]
    skipped: dict[str, str] = field(default_factory=dict)

    @property
    def n_features(self) -> int:
        return next(iter(self.models.values())).n_features

    def predict_proba(self, X) -> np.ndarray:
        """(n, len(classes)) matrix; classes without a model score 0."""
        X = _check_X(X)
        out = np.zeros((X.shape[0], len(self.classes)))
        for j, c in enumerate(self.classes):
            if c in self.models:
                out[:, j] = self.models[c].predict_proba(X)
        return out

    def predict(self, X) -> list[str]:
        proba = self.predict_proba(X)
        return [self.classes[j] for j in np.argmax(proba, axis=1)]

    def to_dict(self) -> dict:
        return {
            "format": "affectkit-gbt-ovr",
            "version": MODEL_VERSION,
            "classes": self.classes,
            "models": {c: m.to_dict() for c, m in self.models.items()},
            "skipped": self.skipped,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OneVsRestGBT":
        return cls(list(d["classes"]), {c: GBTModel.from_dict(m) for c, m in d["models"].items()}, dict(d["skipped"]))


def train_gbt_multiclass(
    X,
    y: Sequence[str],
    classes: Sequence[str] | None = None,
    config: GBTConfig | None = None,
    seed: int = 0,
) -> OneVsRestGBT:
    """One-vs-rest boosting over string class labels.

    Classes with no positive (or no negative) example cannot be trained;
    they are logged, recorded in ``skipped`` and score 0 at prediction time.
    """
    config = config or GBTConfig()
    X = _check_X(X)
    y = list(y)
    if len(y) != X.shape[0]:
        raise ShapeError(f"{X.shape[0]} rows but {len(y)} labels")
    classes = list(classes) if classes is not None else sorted(set(y))
    models, skipped = {}, {}
    labels = np.asarray(y, dtype=object)
    for c in classes:
        target = (labels == c).astype(float)
        try:
            models[c] = train_gbt(
                X,
                target,
                config.n_estimators,
                config.learning_rate,
                config.max_depth,
                seed,
                config.reg_lambda,
                config.min_child_weight,
            )
        except TrainingError as exc:
            log.warning("skipping class %s: %s", c, exc)
            skipped[c] = str(exc)
    if not models:
        raise TrainingError("no class could be trained")
    return OneVsRestGBT(classes, models, skipped)
