"""L2-regularised logistic regression with optional balanced class weights."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, ShapeError, TrainingError
from .gbt import _check_binary, _check_X, _sigmoid

log = logging.getLogger(__name__)

MODEL_FORMAT = "affectkit-logistic"
MODEL_VERSION = 1


@dataclass
class LogisticModel:
    weights: np.ndarray
    bias: float
    l2: float
    class_weights: tuple[float, float]  # (negative, positive)
    n_iter: int = 0

    @property
    def n_features(self) -> int:
        return len(self.weights)

    def decision_function(self, X) -> np.ndarray:
        X = _check_X(X, self.n_features)
        return X @ self.weights + self.bias

    def predict_proba(self, X) -> np.ndarray:
        return _sigmoid(self.decision_function(X))

    def predict(self, X, threshold: float = 0.5) -> np.ndarray:
        return (self.predict_proba(X) >= threshold).astype(int)

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "l2": self.l2,
            "class_weights": list(self.class_weights),
            "n_iter": self.n_iter,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LogisticModel":
        if d.get("format") != MODEL_FORMAT or d.get("version") != MODEL_VERSION:
            raise DataError("not a supported logistic model file")
        return cls(np.asarray(d["weights"], dtype=np.float64), d["bias"], d["l2"], tuple(d["class_weights"]), d["n_iter"])

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True), encoding="utf-8")


def balanced_class_weights(y: np.ndarray) -> tuple[float, float]:
    """n / (2 * n_c) for the negative and positive class."""
    n = len(y)
    n_pos = float(np.sum(y == 1))
    n_neg = n - n_pos
    return n / (2.0 * n_neg), n / (2.0 * n_pos)


def logistic_objective(params: np.ndarray, X: np.ndarray, y: np.ndarray, sample_weight: np.ndarray, l2: float):
    """Weighted log-loss sum plus ``l2/2 * |w|^2`` (bias unpenalised).

    ``params`` is ``[w..., b]``. Returns (value, gradient, hessian).
    """
    w, b = params[:-1], params[-1]
    z = X @ w + b
    value = float(np.sum(sample_weight * (np.logaddexp(0.0, z) - y * z)) + 0.5 * l2 * (w @ w))
    p = _sigmoid(z)
    r = sample_weight * (p - y)
    grad = np.empty_like(params)
    grad[:-1] = X.T @ r + l2 * w
    grad[-1] = r.sum()
    s = sample_weight * p * (1.0 - p)
    Xb = np.hstack([X, np.ones((X.shape[0], 1))])
    hess = (Xb * s[:, None]).T @ Xb
    hess[:-1, :-1] += l2 * np.eye(len(w))
    return value, grad, hess


def train_logistic(
    X,
    y,
    l2: float = 1.0,
    balanced: bool = True,
    seed: int = 0,
    tol: float = 1e-6,
    max_iter: int = 100,
) -> LogisticModel:
    """Newton iterations with backtracking until the gradient norm is below ``tol``.

    The solver is deterministic; ``seed`` only keeps the trainer signatures
    uniform.
    """
    del seed
    X = _check_X(X)
    y = _check_binary(y, X.shape[0])
    if l2 < 0:
        raise ValueError("l2 must be non-negative")
    cw = balanced_class_weights(y) if balanced else (1.0, 1.0)
    sw = np.where(y == 1, cw[1], cw[0])
    params = np.zeros(X.shape[1] + 1)
    value, grad, hess = logistic_objective(params, X, y, sw, l2)
    it = 0
    for it in range(1, max_iter + 1):
        if np.linalg.norm(grad) <= tol:
            break
        try:
            step = np.linalg.solve(hess + 1e-12 * np.eye(len(params)), grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(hess, grad, rcond=None)[0]
        t = 1.0
        while True:
            cand = params - t * step
            cval, cgrad, chess = logistic_objective(cand, X, y, sw, l2)
            if cval <= value - 1e-4 * t * (grad @ step) or t < 1e-10:
                break
            t *= 0.5
        if t < 1e-10 and cval >= value:
            break
        params, value, grad, hess = cand, cval, cgrad, chess
    if not np.all(np.isfinite(params)):
        raise TrainingError("logistic regression diverged")
    return LogisticModel(params[:-1].copy(), float(params[-1]), l2, cw, it)


def predict_logistic(model: LogisticModel, x) -> float | np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        if x.shape[0] != model.n_features:
            raise ShapeError(f"expected {model.n_features} features, got {x.shape[0]}")
        return float(_sigmoid(np.array([x @ model.weights + model.bias]))[0])
    return model.predict_proba(x)


@dataclass
class OneVsRestLogistic:
    """One binary logistic model per class; the predicted class has the highest probability."""

    classes: list[str]
    models: dict[str, LogisticModel]
    skipped: dict[str, str]

    def predict_proba(self, X) -> np.ndarray:
        X = _check_X(X)
        out = np.zeros((X.shape[0], len(self.classes)))
        for j, c in enumerate(self.classes):
            if c in self.models:
                out[:, j] = self.models[c].predict_proba(X)
        return out

    def predict(self, X) -> list[str]:
        return [self.classes[j] for j in np.argmax(self.predict_proba(X), axis=1)]

    def to_dict(self) -> dict:
        return {
            "format": "affectkit-logistic-ovr",
            "version": MODEL_VERSION,
            "classes": self.classes,
            "models": {c: m.to_dict() for c, m in self.models.items()},
            "skipped": self.skipped,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OneVsRestLogistic":
        models = {c: LogisticModel.from_dict(m) for c, m in d["models"].items()}
        return cls(list(d["classes"]), models, dict(d["skipped"]))


def train_logistic_multiclass(X, y, classes=None, l2: float = 1.0, balanced: bool = True) -> OneVsRestLogistic:
    X = _check_X(X)
    y = list(y)
    if len(y) != X.shape[0]:
        raise ShapeError(f"{X.shape[0]} rows but {len(y)} labels")
    classes = list(classes) if classes is not None else sorted(set(y))
    labels = np.asarray(y, dtype=object)
    models, skipped = {}, {}
    for c in classes:
        try:
            models[c] = train_logistic(X, (labels == c).astype(float), l2=l2, balanced=balanced)
        except TrainingError as exc:
            log.warning("skipping class %s: %s", c, exc)
            skipped[c] = str(exc)
    if not models:
        raise TrainingError("no class could be trained")
    return OneVsRestLogistic(classes, models, skipped)
