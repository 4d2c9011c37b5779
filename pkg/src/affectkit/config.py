"""Run configuration: an INI file, validated into typed settings.

Every key is listed in ``KEYS``; unknown sections or keys are rejected so
that typos fail loudly. Paths are resolved relative to the config file.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from .cnn import CnnConfig
from .corpus import DEFAULT_PROFILE_SCHEMA, DEFAULT_SCHEMA
from .errors import ConfigError
from .gbt import GBTConfig
from .pipeline import FEATURE_BLOCKS, ExperimentSpec

OUTPUT_DIR_ENV = "AFFECTKIT_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "affectkit_out"

KEYS: dict[str, tuple[str, ...]] = {
    "paths": (
        "labeled",
        "unlabeled",
        "profiles",
        "emolex",
        "mpqa",
        "liwc",
        "embeddings",
        "language_table",
        "tagger",
        "pretagged",
        "output_dir",
        "model",
        "predict_input",
        "predict_output",
    ),
    "experiment": (
        "task",
        "model",
        "features",
        "folds",
        "seed",
        "confidence_threshold",
        "concept_eval",
        "train_fraction",
        "pos_extra",
        "unigram_size",
    ),
    "schema": tuple(DEFAULT_SCHEMA) + ("profile_id", "concept_separator"),
    "profile_schema": tuple(DEFAULT_PROFILE_SCHEMA),
    "gbt": ("n_estimators", "learning_rate", "max_depth", "reg_lambda", "min_child_weight"),
    "logistic": ("l2",),
    "cnn": (
        "region_sizes",
        "maps_per_region",
        "max_len",
        "dropout",
        "epochs",
        "batch_size",
        "learning_rate",
        "optimizer",
        "update_embeddings",
        "threshold",
    ),
    "patterns": ("top_n", "min_prob", "top_k"),
}

# Paths that must exist whenever they are set.
INPUT_PATHS = ("labeled", "unlabeled", "profiles", "emolex", "mpqa", "liwc", "embeddings", "language_table", "tagger", "pretagged")


@dataclass
class RunConfig:
    paths: dict[str, Path]
    spec: ExperimentSpec | None
    schema: dict[str, str]
    profile_schema: dict[str, str]
    concept_separator: str = "|"
    pos_extra: bool = False
    unigram_size: int = 1000
    patterns_top_n: int = 15
    patterns_min_prob: float = 0.10
    patterns_top_k: int = 3
    source: Path | None = None
    extra: dict = field(default_factory=dict)

    @property
    def output_dir(self) -> Path:
        return self.paths["output_dir"]

    def require(self, *keys: str) -> None:
        for key in keys:
            if key not in self.paths:
                raise ConfigError(f"[paths] {key} is required for this command")


def _get(section, key, conv, default, sec_name):
    if key not in section:
        return default
    raw = section[key].strip()
    try:
        return conv(raw)
    except ValueError:
        raise ConfigError(f"[{sec_name}] {key}: invalid value {raw!r}") from None


def _bool(raw: str) -> bool:
    low = raw.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(raw)


def _int_tuple(raw: str) -> tuple[int, ...]:
    return tuple(int(x) for x in raw.replace(" ", "").split(",") if x)


def parse_features(raw: str) -> tuple[str, ...]:
    blocks = tuple(b.strip().lower() for b in raw.replace("+", ",").split(",") if b.strip())
    bad = [b for b in blocks if b not in FEATURE_BLOCKS]
    if bad:
        raise ConfigError(f"unknown feature blocks {bad}; expected a subset of {FEATURE_BLOCKS}")
    return blocks


def load_config(path: str | Path, overrides: dict | None = None, need_spec: bool = True) -> RunConfig:
    """Read and validate ``path``; ``overrides`` (task, model, features, folds, seed) win.

    With ``need_spec=False`` an incomplete [experiment] section leaves
    ``spec`` as None instead of failing (commands that train nothing).
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    for sec in cp.sections():
        if sec not in KEYS:
            raise ConfigError(f"unknown section [{sec}]")
        for key in cp[sec]:
            if key not in KEYS[sec]:
                raise ConfigError(f"unknown key [{sec}] {key}")
    sec = {name: (cp[name] if cp.has_section(name) else {}) for name in KEYS}
    base = path.parent

    paths: dict[str, Path] = {}
    for key in KEYS["paths"]:
        raw = sec["paths"].get(key, "").strip() if key in sec["paths"] else ""
        if raw:
            p = Path(os.path.expanduser(raw))
            paths[key] = p if p.is_absolute() else base / p
    if "output_dir" not in paths:
        paths["output_dir"] = Path(os.environ.get(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR)
    for key in INPUT_PATHS:
        if key in paths and not paths[key].exists():
            raise ConfigError(f"[paths] {key}: file not found: {paths[key]}")

    exp = sec["experiment"]
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    task = overrides.get("task", exp.get("task", "").strip() if exp else "")
    model = overrides.get("model", exp.get("model", "").strip() if exp else "")
    feats_raw = overrides.get("features", exp.get("features", "") if exp else "")
    features = parse_features(feats_raw) if feats_raw else ()
    build_spec = need_spec or bool(task and model and features)
    if need_spec and not task:
        raise ConfigError("[experiment] task is required")
    if need_spec and not model:
        raise ConfigError("[experiment] model is required")

    g = sec["gbt"]
    gbt = GBTConfig(
        n_estimators=_get(g, "n_estimators", int, 250, "gbt"),
        learning_rate=_get(g, "learning_rate", float, 0.05, "gbt"),
        max_depth=_get(g, "max_depth", int, 6, "gbt"),
        reg_lambda=_get(g, "reg_lambda", float, 1.0, "gbt"),
        min_child_weight=_get(g, "min_child_weight", float, 1.0, "gbt"),
    )
    c = sec["cnn"]
    d = CnnConfig()
    try:
        cnn = replace(
            d,
            region_sizes=_get(c, "region_sizes", _int_tuple, d.region_sizes, "cnn"),
            maps_per_region=_get(c, "maps_per_region", int, d.maps_per_region, "cnn"),
            max_len=_get(c, "max_len", int, d.max_len, "cnn"),
            dropout=_get(c, "dropout", float, d.dropout, "cnn"),
            epochs=_get(c, "epochs", int, d.epochs, "cnn"),
            batch_size=_get(c, "batch_size", int, d.batch_size, "cnn"),
            learning_rate=_get(c, "learning_rate", float, d.learning_rate, "cnn"),
            optimizer=_get(c, "optimizer", str, d.optimizer, "cnn"),
            update_embeddings=_get(c, "update_embeddings", _bool, d.update_embeddings, "cnn"),
            threshold=_get(c, "threshold", float, d.threshold, "cnn"),
        )
        spec = None if not build_spec else ExperimentSpec(
            task=task,
            model=model,
            feature_blocks=features,
            folds=int(overrides.get("folds", _get(exp, "folds", int, 10, "experiment"))),
            seed=int(overrides.get("seed", _get(exp, "seed", int, 0, "experiment"))),
            gbt=gbt,
            logistic_l2=_get(sec["logistic"], "l2", float, 1.0, "logistic"),
            cnn=cnn,
            confidence_threshold=_get(exp, "confidence_threshold", float, 0.0, "experiment"),
            concept_eval=_get(exp, "concept_eval", str, "cv", "experiment"),
            train_fraction=_get(exp, "train_fraction", float, 0.67, "experiment"),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None

    schema = dict(DEFAULT_SCHEMA)
    separator = "|"
    for key in KEYS["schema"]:
        if key in sec["schema"]:
            if key == "concept_separator":
                separator = sec["schema"][key]
            else:
                schema[key] = sec["schema"][key].strip()
    profile_schema = dict(DEFAULT_PROFILE_SCHEMA)
    for key in KEYS["profile_schema"]:
        if key in sec["profile_schema"]:
            profile_schema[key] = sec["profile_schema"][key].strip()

    pt = sec["patterns"]
    return RunConfig(
        paths=paths,
        spec=spec,
        schema=schema,
        profile_schema=profile_schema,
        concept_separator=separator,
        pos_extra=_get(exp, "pos_extra", _bool, False, "experiment"),
        unigram_size=_get(exp, "unigram_size", int, 1000, "experiment"),
        patterns_top_n=_get(pt, "top_n", int, 15, "patterns"),
        patterns_min_prob=_get(pt, "min_prob", float, 0.10, "patterns"),
        patterns_top_k=_get(pt, "top_k", int, 3, "patterns"),
        source=path,
    )
