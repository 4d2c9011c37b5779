"""Convolutional sentence classifier with several region sizes and 1-max pooling.

For each region size ``r`` a bank of ``maps_per_region`` filters of height
``r`` slides over the (max_len, dim) embedded sentence; ReLU and a max over
positions leave one value per filter. Pooled values from all region sizes
are concatenated, optionally with an extra dense feature vector, and fed to
an affine output layer with a softmax (single label) or per-class sigmoid
(multi-label) head.

Everything is float64 NumPy; training is plain mini-batch SGD or Adam.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .embeddings import lookup_ids
from .errors import ConfigError, DataError, ShapeError, TrainingError

MAGIC = b"AKCNN"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class CnnConfig:
    region_sizes: tuple[int, ...] = (2, 3, 4)
    maps_per_region: int = 100
    embedding_dim: int = 100
    max_len: int = 50
    extra_dim: int = 0
    n_classes: int = 2
    head: str = "softmax"
    dropout: float = 0.5
    epochs: int = 10
    batch_size: int = 50
    learning_rate: float = 0.1
    optimizer: str = "sgd"
    update_embeddings: bool = False
    threshold: float = 0.5
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "region_sizes", tuple(int(r) for r in self.region_sizes))
        if not self.region_sizes:
            raise ConfigError("at least one region size is required")
        for r in self.region_sizes:
            if not 1 <= r <= self.max_len:
                raise ConfigError(f"region size {r} must be in [1, max_len={self.max_len}]")
        if self.maps_per_region < 1:
            raise ConfigError("maps_per_region must be >= 1")
        if self.head not in ("softmax", "sigmoid"):
            raise ConfigError(f"unknown head {self.head!r}")
        if self.optimizer not in ("sgd", "adam"):
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must be in [0, 1)")
        if self.n_classes < 1 or (self.head == "softmax" and self.n_classes < 2):
            raise ConfigError("softmax head needs at least 2 classes")
        if self.extra_dim < 0 or self.embedding_dim < 1:
            raise ConfigError("invalid embedding_dim or extra_dim")

    @property
    def pooled_dim(self) -> int:
        return self.maps_per_region * len(self.region_sizes)


@dataclass
class CnnParams:
    conv_W: list[np.ndarray]  # per region: (r, dim, maps)
    conv_b: list[np.ndarray]  # per region: (maps,)
    out_W: np.ndarray  # (pooled + extra, n_classes)
    out_b: np.ndarray  # (n_classes,)
    embedding: np.ndarray | None = None  # (vocab, dim) when inputs are token ids
    loss_history: list[float] = field(default_factory=list)

    def arrays(self) -> list[np.ndarray]:
        out = [*self.conv_W, *self.conv_b, self.out_W, self.out_b]
        if self.embedding is not None:
            out.append(self.embedding)
        return out

    def copy(self) -> "CnnParams":
        return CnnParams(
            [w.copy() for w in self.conv_W],
            [b.copy() for b in self.conv_b],
            self.out_W.copy(),
            self.out_b.copy(),
            None if self.embedding is None else self.embedding.copy(),
            list(self.loss_history),
        )


def glorot_bound(fan_in: int, fan_out: int) -> float:
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


def init_params(config: CnnConfig, embedding: np.ndarray | None = None) -> CnnParams:
    """Uniform(-a, a) weights with a = sqrt(6 / (fan_in + fan_out)); zero biases."""
    rng = np.random.default_rng(config.seed)
    D, M = config.embedding_dim, config.maps_per_region
    conv_W, conv_b = [], []
    for r in config.region_sizes:
        a = glorot_bound(r * D, M)
        conv_W.append(rng.uniform(-a, a, size=(r, D, M)))
        conv_b.append(np.zeros(M))
    fan_in = config.pooled_dim + config.extra_dim
    a = glorot_bound(fan_in, config.n_classes)
    out_W = rng.uniform(-a, a, size=(fan_in, config.n_classes))
    out_b = np.zeros(config.n_classes)
    if embedding is not None:
        embedding = np.array(embedding, dtype=np.float64)
        if embedding.ndim != 2 or embedding.shape[1] != D:
            raise ShapeError(f"embedding matrix must be (vocab, {D})")
    return CnnParams(conv_W, conv_b, out_W, out_b, embedding)


@dataclass
class CnnDataset:
    """Training examples.

    ``inputs`` is either embedded sentences (n, max_len, dim) or token ids
    (n, max_len) into the parameter embedding matrix, -1 for OOV/padding.
    ``targets`` is (n, n_classes): one-hot for softmax, multi-hot for sigmoid.
    """

    inputs: np.ndarray
    targets: np.ndarray
    extra: np.ndarray | None = None

    def __len__(self):
        return self.inputs.shape[0]

    @property
    def uses_ids(self) -> bool:
        return self.inputs.ndim == 2

    def subset(self, idx) -> "CnnDataset":
        return CnnDataset(self.inputs[idx], self.targets[idx], None if self.extra is None else self.extra[idx])


def _as_batch(params: CnnParams, config: CnnConfig, inputs: np.ndarray) -> np.ndarray:
    if inputs.ndim == 2:
        if params.embedding is None:
            raise ShapeError("token-id inputs need an embedding matrix in the parameters")
        X = lookup_ids(inputs, params.embedding)
    else:
        X = np.asarray(inputs, dtype=np.float64)
    if X.shape[1:] != (config.max_len, config.embedding_dim):
        raise ShapeError(f"expected inputs of shape (n, {config.max_len}, {config.embedding_dim}), got {X.shape}")
    return X


def _check_extra(config: CnnConfig, extra, n: int) -> np.ndarray:
    if config.extra_dim == 0:
        if extra is not None and np.size(extra) != 0:
            raise ShapeError("model takes no extra features")
        return np.zeros((n, 0))
    if extra is None:
        raise ShapeError(f"expected {config.extra_dim} extra features")
    extra = np.asarray(extra, dtype=np.float64).reshape(n, -1)
    if extra.shape[1] != config.extra_dim:
        raise ShapeError(f"expected {config.extra_dim} extra features, got {extra.shape[1]}")
    return extra


def _forward(params: CnnParams, config: CnnConfig, X: np.ndarray, extra: np.ndarray, mask=None):
    B, L, _ = X.shape
    pooled, cache = [], []
    for r, W, b in zip(config.region_sizes, params.conv_W, params.conv_b):
        T = L - r + 1
        conv = np.broadcast_to(b, (B, T, b.shape[0])).copy()
        for k in range(r):
            conv += X[:, k : k + T, :] @ W[k]
        act = np.maximum(conv, 0.0)
        arg = act.argmax(axis=1)  # (B, maps)
        pool = np.take_along_axis(act, arg[:, None, :], axis=1)[:, 0, :]
        pooled.append(pool)
        cache.append((arg, pool > 0.0))
    hp = np.concatenate(pooled, axis=1)
    if mask is not None:
        hp = hp * mask
    H = np.concatenate([hp, extra], axis=1)
    Z = H @ params.out_W + params.out_b
    if config.head == "softmax":
        Zs = Z - Z.max(axis=1, keepdims=True)
        E = np.exp(Zs)
        P = E / E.sum(axis=1, keepdims=True)
    else:
        P = 1.0 / (1.0 + np.exp(-Z))
    return Z, P, H, cache


def _loss_from_logits(config: CnnConfig, Z: np.ndarray, Y: np.ndarray) -> float:
    if config.head == "softmax":
        Zs = Z - Z.max(axis=1, keepdims=True)
        logp = Zs - np.log(np.exp(Zs).sum(axis=1, keepdims=True))
        return float(-np.sum(Y * logp) / Z.shape[0])
    return float(np.sum(np.logaddexp(0.0, Z) - Y * Z) / Z.shape[0])


def forward(params: CnnParams, config: CnnConfig, embedded, extra=None):
    """Class scores and probabilities for one sentence (2-D) or a batch (3-D)."""
    embedded = np.asarray(embedded)
    single = embedded.ndim == 2 and embedded.dtype.kind == "f"
    inputs = embedded[None] if single else embedded
    X = _as_batch(params, config, inputs)
    if extra is not None and single:
        extra = np.asarray(extra, dtype=np.float64)[None]
    ex = _check_extra(config, extra, X.shape[0])
    Z, P, _, _ = _forward(params, config, X, ex)
    return (Z[0], P[0]) if single else (Z, P)


def loss_and_grads(params: CnnParams, config: CnnConfig, inputs, extra, Y, mask=None):
    """Mean loss over the batch and gradients aligned with ``params.arrays()``."""
    X = _as_batch(params, config, inputs)
    B = X.shape[0]
    extra = _check_extra(config, extra, B)
    Y = np.asarray(Y, dtype=np.float64)
    Z, P, H, cache = _forward(params, config, X, extra, mask)
    loss = _loss_from_logits(config, Z, Y)
    dZ = (P - Y) / B
    d_out_W = H.T @ dZ
    d_out_b = dZ.sum(axis=0)
    dH = dZ @ params.out_W.T
    dhp = dH[:, : config.pooled_dim]
    if mask is not None:
        dhp = dhp * mask
    need_dx = inputs.ndim == 2 and params.embedding is not None and config.update_embeddings
    dX = np.zeros_like(X) if need_dx else None
    d_conv_W, d_conv_b = [], []
    bidx = np.arange(B)[:, None]
    M = config.maps_per_region
    for j, (r, W) in enumerate(zip(config.region_sizes, params.conv_W)):
        arg, alive = cache[j]
        d = dhp[:, j * M : (j + 1) * M] * alive  # (B, maps)
        dW = np.empty_like(W)
        for k in range(r):
            Xg = X[bidx, arg + k]  # (B, maps, dim)
            dW[k] = np.einsum("bmd,bm->dm", Xg, d)
            if need_dx:
                np.add.at(dX, (np.broadcast_to(bidx, arg.shape), arg + k), d[:, :, None] * W[k].T[None])
        d_conv_W.append(dW)
        d_conv_b.append(d.sum(axis=0))
    grads = [*d_conv_W, *d_conv_b, d_out_W, d_out_b]
    if params.embedding is not None:
        # None marks a frozen embedding matrix, saving a vocab-sized zero array per batch
        dE = None
        if need_dx:
            dE = np.zeros_like(params.embedding)
            known = inputs >= 0
            np.add.at(dE, inputs[known], dX[known])
        grads.append(dE)
    return loss, grads


def dataset_loss(params: CnnParams, config: CnnConfig, data: CnnDataset, batch_size: int = 256) -> float:
    total = 0.0
    for start in range(0, len(data), batch_size):
        part = data.subset(slice(start, start + batch_size))
        X = _as_batch(params, config, part.inputs)
        ex = _check_extra(config, part.extra, X.shape[0])
        Z, _, _, _ = _forward(params, config, X, ex)
        total += _loss_from_logits(config, Z, part.targets) * X.shape[0]
    return total / len(data)


def _check_targets(config: CnnConfig, data: CnnDataset) -> None:
    Y = data.targets
    if Y.ndim != 2 or Y.shape != (len(data), config.n_classes):
        raise ShapeError(f"targets must be (n, {config.n_classes})")
    if not np.all((Y == 0) | (Y == 1)):
        raise DataError("targets must be 0/1 indicators")
    if config.head == "softmax" and not np.all(Y.sum(axis=1) == 1):
        raise DataError("softmax head needs exactly one positive class per example")


def train_cnn(
    config: CnnConfig,
    dataset: CnnDataset,
    embedding: np.ndarray | None = None,
    params: CnnParams | None = None,
) -> CnnParams:
    """Mini-batch training; returns the parameters after the final epoch.

    ``params.loss_history`` holds the full-dataset loss (no dropout) at
    initialisation and after every epoch.
    """
    if len(dataset) == 0:
        raise TrainingError("cannot train on an empty dataset")
    _check_targets(config, dataset)
    if dataset.uses_ids and embedding is None and (params is None or params.embedding is None):
        raise ShapeError("token-id inputs need an embedding matrix")
    if params is None:
        params = init_params(config, embedding if dataset.uses_ids else None)
    else:
        params = params.copy()
    rng = np.random.default_rng(config.seed + 1)
    arrays = params.arrays()
    trainable = [True] * len(arrays)
    if params.embedding is not None and not config.update_embeddings:
        trainable[-1] = False
    adam_m = [np.zeros_like(a) for a in arrays]
    adam_v = [np.zeros_like(a) for a in arrays]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    step = 0
    history = [dataset_loss(params, config, dataset)]
    n = len(dataset)
    for _ in range(config.epochs):
        perm = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            batch = dataset.subset(idx)
            mask = None
            if config.dropout > 0:
                keep = 1.0 - config.dropout
                mask = (rng.random((len(idx), config.pooled_dim)) < keep) / keep
            _, grads = loss_and_grads(params, config, batch.inputs, batch.extra, batch.targets, mask)
            step += 1
            for i, (a, g) in enumerate(zip(arrays, grads)):
                if not trainable[i] or g is None:
                    continue
                if config.optimizer == "sgd":
                    a -= config.learning_rate * g
                else:
                    adam_m[i] = beta1 * adam_m[i] + (1 - beta1) * g
                    adam_v[i] = beta2 * adam_v[i] + (1 - beta2) * g * g
                    mhat = adam_m[i] / (1 - beta1**step)
                    vhat = adam_v[i] / (1 - beta2**step)
                    a -= config.learning_rate * mhat / (np.sqrt(vhat) + eps)
        history.append(dataset_loss(params, config, dataset))
    if not all(np.all(np.isfinite(a)) for a in arrays):
        raise TrainingError("CNN training diverged")
    params.loss_history = history
    return params


def predict_proba(params: CnnParams, config: CnnConfig, inputs, extra=None, batch_size: int = 256) -> np.ndarray:
    inputs = np.asarray(inputs)
    out = []
    for start in range(0, inputs.shape[0], batch_size):
        part = inputs[start : start + batch_size]
        X = _as_batch(params, config, part)
        ex = None if extra is None else np.asarray(extra)[start : start + batch_size]
        _, P, _, _ = _forward(params, config, X, _check_extra(config, ex, X.shape[0]))
        out.append(P)
    return np.concatenate(out, axis=0) if out else np.zeros((0, config.n_classes))


def decide(probs: np.ndarray, config: CnnConfig):
    """Softmax: argmax class index. Sigmoid: set of indices with p >= threshold."""
    probs = np.asarray(probs)
    if config.head == "softmax":
        return int(np.argmax(probs))
    return frozenset(int(i) for i in np.nonzero(probs >= config.threshold)[0])


def predict_cnn(params: CnnParams, config: CnnConfig, embedded, extra=None):
    _, probs = forward(params, config, embedded, extra)
    return decide(probs, config)


def gradient_check(
    config: CnnConfig,
    sample: CnnDataset,
    params: CnnParams | None = None,
    n_checks: int = 20,
    h: float = 1e-5,
    seed: int = 0,
    grad_fn: Callable | None = None,
) -> float:
    """Largest relative error between analytic and central-difference gradients.

    Checks ``n_checks`` entries drawn uniformly from all parameters plus
    ``n_checks`` drawn from entries with a nonzero analytic gradient. Relative
    error is ``|a - n| / max(|a| + |n|, 1e-6)``. Dropout is off.
    """
    grad_fn = grad_fn or loss_and_grads
    if params is None:
        params = init_params(config)
    params = params.copy()
    cfg = replace(config, dropout=0.0)
    _, grads = grad_fn(params, cfg, sample.inputs, sample.extra, sample.targets)
    arrays = params.arrays()
    grads = [np.zeros_like(a) if g is None else g for a, g in zip(arrays, grads)]
    sizes = np.array([a.size for a in arrays])
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    rng = np.random.default_rng(seed)
    flat_grad = np.concatenate([g.ravel() for g in grads])
    picks = list(rng.choice(offsets[-1], size=min(n_checks, offsets[-1]), replace=False))
    nonzero = np.nonzero(flat_grad)[0]
    if nonzero.size:
        picks += list(rng.choice(nonzero, size=min(n_checks, nonzero.size), replace=False))
    worst = 0.0
    for flat in picks:
        ai = int(np.searchsorted(offsets, flat, side="right") - 1)
        a = arrays[ai].reshape(-1)
        j = flat - offsets[ai]
        orig = a[j]
        a[j] = orig + h
        lp, _ = loss_and_grads(params, cfg, sample.inputs, sample.extra, sample.targets)
        a[j] = orig - h
        lm, _ = loss_and_grads(params, cfg, sample.inputs, sample.extra, sample.targets)
        a[j] = orig
        numeric = (lp - lm) / (2 * h)
        analytic = flat_grad[flat]
        err = abs(analytic - numeric) / max(abs(analytic) + abs(numeric), 1e-6)
        worst = max(worst, err)
    return float(worst)


# serialization -----------------------------------------------------------

def _array_names(config: CnnConfig, params: CnnParams) -> list[str]:
    names = [f"conv_W_{r}" for r in config.region_sizes]
    names += [f"conv_b_{r}" for r in config.region_sizes]
    names += ["out_W", "out_b"]
    if params.embedding is not None:
        names.append("embedding")
    return names


def cnn_to_bytes(config: CnnConfig, params: CnnParams) -> bytes:
    """Versioned binary: magic, JSON header, then raw little-endian float64 arrays."""
    arrays = params.arrays()
    header = {
        "version": FORMAT_VERSION,
        "config": asdict(config),
        "arrays": [[name, list(a.shape)] for name, a in zip(_array_names(config, params), arrays)],
        "loss_history": params.loss_history,
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    parts = [MAGIC, struct.pack("<I", len(blob)), blob]
    parts += [np.ascontiguousarray(a, dtype="<f8").tobytes() for a in arrays]
    return b"".join(parts)


def save_cnn(path: str | Path, config: CnnConfig, params: CnnParams) -> None:
    Path(path).write_bytes(cnn_to_bytes(config, params))


def load_cnn(path: str | Path) -> tuple[CnnConfig, CnnParams]:
    return cnn_from_bytes(Path(path).read_bytes(), str(path))


def cnn_from_bytes(raw: bytes, source: str = "<bytes>") -> tuple[CnnConfig, CnnParams]:
    path = source
    if raw[: len(MAGIC)] != MAGIC:
        raise DataError(f"{path}: not a CNN parameter file")
    (hlen,) = struct.unpack("<I", raw[len(MAGIC) : len(MAGIC) + 4])
    start = len(MAGIC) + 4
    header = json.loads(raw[start : start + hlen].decode("utf-8"))
    if header.get("version") != FORMAT_VERSION:
        raise DataError(f"{path}: unsupported CNN file version {header.get('version')}")
    cfg = header["config"]
    cfg["region_sizes"] = tuple(cfg["region_sizes"])
    config = CnnConfig(**cfg)
    pos = start + hlen
    arrays = {}
    for name, shape in header["arrays"]:
        count = int(np.prod(shape)) if shape else 1
        arrays[name] = np.frombuffer(raw, dtype="<f8", count=count, offset=pos).reshape(shape).astype(np.float64)
        pos += 8 * count
    params = CnnParams(
        [arrays[f"conv_W_{r}"] for r in config.region_sizes],
        [arrays[f"conv_b_{r}"] for r in config.region_sizes],
        arrays["out_W"],
        arrays["out_b"],
        arrays.get("embedding"),
        list(header.get("loss_history", [])),
    )
    return config, params


def targets_from_labels(labels: Sequence, n_classes: int, head: str) -> np.ndarray:
    """One-hot rows from class indices (softmax) or multi-hot rows from index sets (sigmoid)."""
    Y = np.zeros((len(labels), n_classes))
    for i, lab in enumerate(labels):
        if head == "softmax":
            Y[i, int(lab)] = 1.0
        else:
            for j in lab:
                Y[i, int(j)] = 1.0
    return Y
