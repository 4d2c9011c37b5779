"""Experiment orchestration: featurization, supervised CV, self-training, prediction.

A run is described by an :class:`ExperimentSpec`. Features are computed once
per record and indexed per fold; every test fold holds gold records only.
"""

from __future__ import annotations

import base64
import csv
import hashlib
import io
import json
import logging
from collections import Counter
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from . import cnn as cnn_mod
from .corpus import (
    CONCEPTS,
    FoldPlan,
    MomentRecord,
    ProfileRecord,
    load_unlabeled,
    make_folds,
    split_train_test,
    with_pseudo_labels,
)
from .embeddings import DEFAULT_MAX_LEN, EmbeddingTable
from .errors import ConfigError, DataError, TrainingError
from .evaluation import (
    MetricsReport,
    aggregate,
    csv_text,
    evaluate,
    markdown_table,
    per_concept_report,
)
from .features import FeatureVector, pos_features
from .fileio import atomic_write_text
from .gbt import GBTConfig, GBTModel, OneVsRestGBT, train_gbt, train_gbt_multiclass
from .lexicon import Lexicon, emotional_features
from .logistic import LogisticModel, OneVsRestLogistic, train_logistic, train_logistic_multiclass
from .profile import ProfileEncoder, load_language_table
from .tagger import PerceptronTagger, PretaggedTagger, default_tagger
from .text import TaggedText

log = logging.getLogger(__name__)

TASKS = ("agency", "social", "concepts")
MODELS = ("logistic", "gbt", "cnn")
FEATURE_BLOCKS = ("pos", "emotional", "profile", "embedding", "unigrams")
DENSE_BLOCKS = ("pos", "emotional", "profile", "unigrams")

BUNDLE_FORMAT = "affectkit-model"
BUNDLE_VERSION = 1


@dataclass(frozen=True)
class ExperimentSpec:
    task: str
    model: str
    feature_blocks: tuple[str, ...]
    folds: int = 10
    seed: int = 0
    semi_supervised: bool = False
    gbt: GBTConfig = GBTConfig()
    logistic_l2: float = 1.0
    cnn: cnn_mod.CnnConfig = field(default_factory=cnn_mod.CnnConfig)
    confidence_threshold: float = 0.0
    concept_eval: str = "cv"  # or "holdout": one stratified-free 67/33 split
    train_fraction: float = 0.67

    def __post_init__(self):
        blocks = tuple(dict.fromkeys(self.feature_blocks))
        object.__setattr__(self, "feature_blocks", blocks)
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; expected one of {TASKS}")
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}; expected one of {MODELS}")
        bad = [b for b in blocks if b not in FEATURE_BLOCKS]
        if bad:
            raise ConfigError(f"unknown feature blocks {bad}; expected a subset of {FEATURE_BLOCKS}")
        if not blocks:
            raise ConfigError("at least one feature block is required")
        if self.model == "cnn" and "embedding" not in blocks:
            raise ConfigError("the cnn model needs the embedding block")
        if self.model != "cnn" and "embedding" in blocks:
            raise ConfigError(f"the {self.model} model takes dense blocks only, not embedding")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        if self.concept_eval not in ("cv", "holdout"):
            raise ConfigError("concept_eval must be 'cv' or 'holdout'")
        if not 0.0 <= self.confidence_threshold <= 1.0:
            raise ConfigError("confidence_threshold must be in [0, 1]")

    @property
    def dense_blocks(self) -> tuple[str, ...]:
        return tuple(b for b in self.feature_blocks if b in DENSE_BLOCKS)

    def describe(self) -> dict:
        d = {
            "task": self.task,
            "model": self.model,
            "feature_blocks": list(self.feature_blocks),
            "folds": self.folds,
            "seed": self.seed,
            "semi_supervised": self.semi_supervised,
            "confidence_threshold": self.confidence_threshold,
            "concept_eval": self.concept_eval,
        }
        if self.model == "gbt":
            d["gbt"] = asdict(self.gbt)
        elif self.model == "logistic":
            d["logistic_l2"] = self.logistic_l2
        else:
            d["cnn"] = asdict(self.cnn)
        return d


# featurization -------------------------------------------------------------

@dataclass
class Resources:
    """External inputs the feature blocks draw on."""

    tagger: PerceptronTagger | PretaggedTagger | None = None
    lexicons: Sequence[Lexicon] = ()
    profiles: Mapping[str, ProfileRecord] = field(default_factory=dict)
    language_table: Mapping[str, str] | None = None
    embeddings: EmbeddingTable | None = None
    fact_emotion: Callable[[Sequence[str]], float] | None = None


@dataclass
class Features:
    ids: list[str]
    dense: np.ndarray  # (n, d)
    tokens: list[list[str]]

    def subset(self, idx) -> "Features":
        idx = np.asarray(idx, dtype=np.intp)
        return Features([self.ids[i] for i in idx], self.dense[idx], [self.tokens[i] for i in idx])

    def __len__(self):
        return len(self.ids)


def fit_unigram_vocab(texts_tokens: Sequence[Sequence[str]], size: int = 1000) -> list[str]:
    """Most document-frequent lowercase alphabetic tokens, ties alphabetical."""
    df = Counter()
    for toks in texts_tokens:
        df.update({t.lower() for t in toks if t.isalpha()})
    ranked = sorted(df.items(), key=lambda kv: (-kv[1], kv[0]))
    return [w for w, _ in ranked[:size]]


class Featurizer:
    """Turns records into dense feature rows plus token lists.

    Tagging is cached per record id, so featurizing the same record twice
    costs one tagger pass.
    """

    def __init__(
        self,
        blocks: Sequence[str],
        resources: Resources,
        pos_extra: bool = False,
        unigram_vocab: Sequence[str] | None = None,
        max_len: int = DEFAULT_MAX_LEN,
    ):
        self.blocks = tuple(blocks)
        self.resources = resources
        self.pos_extra = pos_extra
        self.unigram_vocab = list(unigram_vocab) if unigram_vocab is not None else None
        self.max_len = max_len
        self.tagger = resources.tagger or default_tagger()
        if "emotional" in self.blocks and not resources.lexicons:
            raise ConfigError("the emotional block needs at least one lexicon")
        if "embedding" in self.blocks and resources.embeddings is None:
            raise ConfigError("the embedding block needs an embeddings file")
        if "unigrams" in self.blocks and self.unigram_vocab is None:
            raise ConfigError("the unigrams block needs a fitted vocabulary")
        self.profile_encoder = None
        if "profile" in self.blocks:
            table = resources.language_table if resources.language_table is not None else load_language_table()
            self.profile_encoder = ProfileEncoder.from_table(table)
        self._tag_cache: dict[tuple[str, str], object] = {}
        self._names: list[str] | None = None

    def tagged(self, record: MomentRecord):
        key = (record.id, record.text)
        hit = self._tag_cache.get(key)
        if hit is None:
            tag_record = getattr(self.tagger, "tag_record", None)
            hit = tag_record(record) if tag_record else self.tagger.tag(record.text)
            self._tag_cache[key] = hit
        return hit

    def _row(self, record: MomentRecord, tagged=None) -> FeatureVector:
        tagged = tagged if tagged is not None else self.tagged(record)
        parts = []
        for block in self.blocks:
            if block == "pos":
                parts.append(pos_features(tagged, extra=self.pos_extra))
            elif block == "emotional":
                parts.append(emotional_features(tagged.tokens, self.resources.lexicons, self.resources.fact_emotion))
            elif block == "profile":
                prof = self.resources.profiles.get(record.profile_id or record.id)
                parts.append(self.profile_encoder.encode(prof))
            elif block == "unigrams":
                present = {t.lower() for t in tagged.tokens}
                vals = [1.0 if w in present else 0.0 for w in self.unigram_vocab]
                parts.append(FeatureVector([f"uni:{w}" for w in self.unigram_vocab], vals))
        return FeatureVector.concat(*parts)

    @property
    def names(self) -> list[str]:
        if self._names is None:
            probe = MomentRecord(id="__probe__", text="probe")
            self._names = list(self._row(probe, TaggedText(("probe",), ("NN",))).names)
        return self._names

    def transform(self, records: Sequence[MomentRecord]) -> Features:
        width = len(self.names)
        dense = np.zeros((len(records), width))
        tokens = []
        for i, r in enumerate(records):
            fv = self._row(r)
            dense[i] = fv.values
            tokens.append(list(self.tagged(r).tokens))
        return Features([r.id for r in records], dense, tokens)

    def describe(self) -> dict:
        d = {
            "blocks": list(self.blocks),
            "pos_extra": self.pos_extra,
            "max_len": self.max_len,
            "feature_names": self.names,
            "lexicons": [[lex.name, lex.format, list(lex.categories)] for lex in self.resources.lexicons]
            if "emotional" in self.blocks
            else [],
            "unigrams": self.unigram_vocab if "unigrams" in self.blocks else None,
            "embedding_dim": self.resources.embeddings.dim if "embedding" in self.blocks else None,
        }
        return d

    def fingerprint(self) -> str:
        blob = json.dumps(self.describe(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


def build_featurizer(
    spec: ExperimentSpec,
    resources: Resources,
    fit_records: Sequence[MomentRecord] = (),
    pos_extra: bool = False,
    unigram_size: int = 1000,
) -> Featurizer:
    """Featurizer for ``spec``; the unigram vocabulary is fit on ``fit_records`` texts."""
    vocab = None
    if "unigrams" in spec.feature_blocks:
        probe = Featurizer(("pos",), resources)
        vocab = fit_unigram_vocab([probe.tagged(r).tokens for r in fit_records], unigram_size)
    return Featurizer(spec.feature_blocks, resources, pos_extra, vocab, spec.cnn.max_len)


# models --------------------------------------------------------------------

def _binary_targets(records: Sequence[MomentRecord], task: str) -> np.ndarray:
    return np.array([1.0 if r.label(task) else 0.0 for r in records])


def task_records(records: Sequence[MomentRecord], spec: ExperimentSpec) -> list[MomentRecord]:
    """Records usable for ``spec``: labeled for the task; one concept for non-CNN concept models."""
    out = [r for r in records if r.label(spec.task) is not None]
    if spec.task == "concepts":
        out = [r for r in out if r.concepts] if spec.model == "cnn" else [r for r in out if len(r.concepts) == 1]
    return out


@dataclass
class Prediction:
    labels: list  # bool per record (binary), concept name (one-vs-rest) or frozenset (cnn concepts)
    scores: np.ndarray  # (n,) positive probability, or (n, n_concepts)
    confidence: np.ndarray  # (n,) probability mass behind the decision


@dataclass
class TrainedModel:
    task: str
    kind: str
    model: object
    fingerprint: str = ""
    featurizer_description: dict = field(default_factory=dict)
    vocab: list[str] | None = None  # cnn: tokens aligned with the embedding rows
    classes: list[str] = field(default_factory=list)

    def _ids(self, tokens: Sequence[Sequence[str]], max_len: int) -> np.ndarray:
        index = {w: i for i, w in enumerate(self.vocab)}
        out = np.full((len(tokens), max_len), -1, dtype=np.int64)
        for r, toks in enumerate(tokens):
            for c, t in enumerate(toks[:max_len]):
                out[r, c] = index.get(t.lower(), -1)
        return out

    def predict(self, feats: Features) -> Prediction:
        n = len(feats)
        if self.kind == "cnn":
            config, params = self.model
            if n == 0:
                P = np.zeros((0, config.n_classes))
            else:
                extra = feats.dense if config.extra_dim else None
                P = cnn_mod.predict_proba(params, config, self._ids(feats.tokens, config.max_len), extra)
            if self.task == "concepts":
                labels = [frozenset(self.classes[j] for j in cnn_mod.decide(p, config)) for p in P]
                conf = np.min(np.maximum(P, 1.0 - P), axis=1) if n else np.zeros(0)
                return Prediction(labels, P, conf)
            scores = P[:, 1]
            labels = [bool(np.argmax(p) == 1) for p in P]
            return Prediction(labels, scores, np.max(P, axis=1) if n else np.zeros(0))
        if self.task == "concepts":
            P = self.model.predict_proba(feats.dense) if n else np.zeros((0, len(self.classes)))
            labels = [self.classes[j] for j in np.argmax(P, axis=1)] if n else []
            return Prediction(labels, P, P.max(axis=1) if n else np.zeros(0))
        p = self.model.predict_proba(feats.dense) if n else np.zeros(0)
        return Prediction([bool(v >= 0.5) for v in p], p, np.maximum(p, 1.0 - p))

    # serialization
    def to_dict(self) -> dict:
        if self.kind == "cnn":
            config, params = self.model
            payload = {
                "vocab": self.vocab,
                "params": base64.b64encode(cnn_mod.cnn_to_bytes(config, params)).decode("ascii"),
            }
        else:
            payload = self.model.to_dict()
        return {
            "format": BUNDLE_FORMAT,
            "version": BUNDLE_VERSION,
            "task": self.task,
            "kind": self.kind,
            "classes": self.classes,
            "fingerprint": self.fingerprint,
            "featurizer": self.featurizer_description,
            "payload": payload,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainedModel":
        if d.get("format") != BUNDLE_FORMAT or d.get("version") != BUNDLE_VERSION:
            raise DataError("not a supported model bundle")
        kind, task, payload = d["kind"], d["task"], d["payload"]
        vocab = None
        if kind == "cnn":
            model = cnn_mod.cnn_from_bytes(base64.b64decode(payload["params"]), "model bundle")
            vocab = list(payload["vocab"])
        elif kind == "gbt":
            model = OneVsRestGBT.from_dict(payload) if task == "concepts" else GBTModel.from_dict(payload)
        elif kind == "logistic":
            model = OneVsRestLogistic.from_dict(payload) if task == "concepts" else LogisticModel.from_dict(payload)
        else:
            raise DataError(f"unknown model kind {kind!r}")
        return cls(task, kind, model, d["fingerprint"], d["featurizer"], vocab, list(d["classes"]))

    @classmethod
    def load(cls, path: str | Path) -> "TrainedModel":
        path = Path(path)
        if not path.exists():
            raise DataError(f"model file not found: {path}")
        try:
            return cls.from_dict(json.loads(path.read_text("utf-8")))
        except (json.JSONDecodeError, KeyError) as exc:
            raise DataError(f"{path}: malformed model bundle ({exc})") from None


def fit_model(
    spec: ExperimentSpec,
    records: Sequence[MomentRecord],
    feats: Features,
    featurizer: Featurizer,
) -> TrainedModel:
    """Train the model named by ``spec`` on aligned records and features."""
    if not records:
        raise TrainingError("no training records")
    desc = featurizer.describe()
    fp = featurizer.fingerprint()
    if spec.model == "cnn":
        table = featurizer.resources.embeddings
        concepts = spec.task == "concepts"
        config = replace(
            spec.cnn,
            embedding_dim=table.dim,
            extra_dim=feats.dense.shape[1],
            n_classes=len(CONCEPTS) if concepts else 2,
            head="sigmoid" if concepts else "softmax",
            seed=spec.seed,
        )
        vocab = sorted(table.index, key=table.index.get)
        tm = TrainedModel(spec.task, "cnn", None, fp, desc, vocab, list(CONCEPTS) if concepts else [])
        ids = tm._ids(feats.tokens, config.max_len)
        if concepts:
            labels = [[CONCEPTS.index(c) for c in r.concepts] for r in records]
        else:
            labels = [int(bool(r.label(spec.task))) for r in records]
        Y = cnn_mod.targets_from_labels(labels, config.n_classes, config.head)
        data = cnn_mod.CnnDataset(ids, Y, feats.dense if config.extra_dim else None)
        params = cnn_mod.train_cnn(config, data, embedding=np.array(table.vectors))
        tm.model = (config, params)
        return tm
    if spec.task == "concepts":
        y = [next(iter(r.concepts)) for r in records]
        if spec.model == "gbt":
            model = train_gbt_multiclass(feats.dense, y, CONCEPTS, spec.gbt, spec.seed)
        else:
            model = train_logistic_multiclass(feats.dense, y, CONCEPTS, spec.logistic_l2)
        return TrainedModel(spec.task, spec.model, model, fp, desc, None, list(CONCEPTS))
    y = _binary_targets(records, spec.task)
    if spec.model == "gbt":
        g = spec.gbt
        model = train_gbt(
            feats.dense, y, g.n_estimators, g.learning_rate, g.max_depth, spec.seed, g.reg_lambda, g.min_child_weight
        )
    else:
        model = train_logistic(feats.dense, y, l2=spec.logistic_l2, balanced=True, seed=spec.seed)
    return TrainedModel(spec.task, spec.model, model, fp, desc)


def score_fold(spec: ExperimentSpec, pred: Prediction, gold_records: Sequence[MomentRecord]) -> MetricsReport:
    if spec.task == "concepts":
        if spec.model == "cnn":
            gold = [r.concepts for r in gold_records]
        else:
            gold = [next(iter(r.concepts)) for r in gold_records]
        return evaluate(pred.labels, gold)
    gold = [bool(r.label(spec.task)) for r in gold_records]
    scores = pred.scores if len(set(gold)) == 2 else None
    return evaluate(pred.labels, gold, scores=scores, classes=(False, True))


# cross-validation ----------------------------------------------------------

@dataclass
class CVResult:
    spec: ExperimentSpec
    folds: list[MetricsReport]
    aggregate: MetricsReport
    plan: FoldPlan | None = None
    concept_rows: list = field(default_factory=list)
    n_pseudo: int = 0


def plan_folds(spec: ExperimentSpec, gold: Sequence[MomentRecord]) -> FoldPlan:
    """Stratified on the task label where every stratum can fill all folds."""
    try:
        return make_folds(gold, spec.folds, spec.seed, stratify_on=spec.task)
    except DataError as exc:
        if len(gold) < spec.folds:
            raise
        log.warning("stratification not possible (%s); using unstratified folds", exc)
        return make_folds(gold, spec.folds, spec.seed, stratify_on=None)


def _splits(spec: ExperimentSpec, gold: Sequence[MomentRecord]):
    """(plan, list of (train index, test index)) over ``gold``."""
    pos = {r.id: i for i, r in enumerate(gold)}
    if spec.task == "concepts" and spec.concept_eval == "holdout":
        train, test = split_train_test(gold, spec.train_fraction, spec.seed)
        return None, [([pos[r.id] for r in train], [pos[r.id] for r in test])]
    plan = plan_folds(spec, gold)
    out = []
    for k in range(plan.k):
        test = sorted(pos[i] for i in plan.test_ids(k))
        train = sorted(pos[i] for i in plan.train_ids(k))
        out.append((train, test))
    return plan, out


def _run_folds(spec, gold, gold_feats, featurizer, extra_records=(), extra_feats=None) -> CVResult:
    plan, splits = _splits(spec, gold)
    reports, all_pred, all_gold = [], [], []
    for k, (train_idx, test_idx) in enumerate(splits):
        train_records = [gold[i] for i in train_idx] + list(extra_records)
        tr = gold_feats.subset(train_idx)
        if extra_feats is not None and len(extra_feats):
            tr = Features(tr.ids + extra_feats.ids, np.vstack([tr.dense, extra_feats.dense]), tr.tokens + extra_feats.tokens)
        test_records = [gold[i] for i in test_idx]
        if any(not r.is_gold for r in test_records):
            raise DataError("test fold contains non-gold records")
        model = fit_model(spec, train_records, tr, featurizer)
        pred = model.predict(gold_feats.subset(test_idx))
        reports.append(score_fold(spec, pred, test_records))
        all_pred.extend(pred.labels)
        all_gold.extend(r.concepts if spec.model == "cnn" else r.label(spec.task) for r in test_records)
        log.info("fold %d/%d: f1=%.4f", k + 1, len(splits), reports[-1].f1)
    rows = []
    if spec.task == "concepts":
        gold_sets = [g if isinstance(g, frozenset) else frozenset([next(iter(g))]) for g in all_gold]
        pred_sets = [p if isinstance(p, frozenset) else frozenset([p]) for p in all_pred]
        rows = per_concept_report(pred_sets, gold_sets)
    return CVResult(spec, reports, aggregate(reports), plan, rows)


def run_supervised_cv(
    spec: ExperimentSpec,
    labeled: Sequence[MomentRecord],
    featurizer: Featurizer,
) -> CVResult:
    """Train on k-1 folds, test on the held-out gold fold; aggregate is the fold mean."""
    gold = task_records([r for r in labeled if r.is_gold], spec)
    if not gold:
        raise DataError(f"no gold records labeled for task {spec.task!r}")
    feats = featurizer.transform(gold)
    return _run_folds(spec, gold, feats, featurizer)


def pseudo_label(
    spec: ExperimentSpec,
    model: TrainedModel,
    unlabeled: Sequence[MomentRecord],
    feats: Features,
) -> list[MomentRecord]:
    """Hard labels from ``model``; records below the confidence threshold are dropped."""
    pred = model.predict(feats)
    out = []
    for r, lab, conf in zip(unlabeled, pred.labels, pred.confidence):
        if conf < spec.confidence_threshold:
            continue
        if spec.task == "concepts":
            value = lab if isinstance(lab, frozenset) else frozenset([lab])
            out.append(with_pseudo_labels(r, concepts=value))
        else:
            out.append(with_pseudo_labels(r, **{spec.task: bool(lab)}))
    return out


def bootstrap_semi_supervised(
    spec: ExperimentSpec,
    labeled: Sequence[MomentRecord],
    unlabeled: Sequence[MomentRecord],
    featurizer: Featurizer,
) -> CVResult:
    """Self-training in one round.

    1. train on all gold records; 2. pseudo-label every unlabeled record;
    3. per CV fold, retrain on the gold training folds plus all pseudo
    records and test on the gold fold.
    """
    gold = task_records([r for r in labeled if r.is_gold], spec)
    if not gold:
        raise DataError(f"no gold records labeled for task {spec.task!r}")
    if not unlabeled:
        raise DataError("bootstrap needs a nonempty unlabeled set")
    clash = {r.id for r in gold} & {r.id for r in unlabeled}
    if clash:
        raise DataError(f"{len(clash)} unlabeled ids collide with gold ids, e.g. {sorted(clash)[0]!r}")
    gold_feats = featurizer.transform(gold)
    step1 = fit_model(spec, gold, gold_feats, featurizer)
    un_feats = featurizer.transform(unlabeled)
    pseudo = pseudo_label(spec, step1, unlabeled, un_feats)
    pseudo = task_records(pseudo, spec)
    keep = {r.id for r in pseudo}
    un_feats = un_feats.subset([i for i, rid in enumerate(un_feats.ids) if rid in keep])
    log.info("pseudo-labeled %d of %d unlabeled records", len(pseudo), len(unlabeled))
    result = _run_folds(spec, gold, gold_feats, featurizer, pseudo, un_feats)
    result.n_pseudo = len(pseudo)
    return result


def train_full(spec: ExperimentSpec, labeled: Sequence[MomentRecord], featurizer: Featurizer) -> TrainedModel:
    gold = task_records([r for r in labeled if r.is_gold], spec)
    if not gold:
        raise DataError(f"no gold records labeled for task {spec.task!r}")
    return fit_model(spec, gold, featurizer.transform(gold), featurizer)


# prediction ----------------------------------------------------------------

def prediction_csv(model: TrainedModel, ids: Sequence[str], pred: Prediction) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if model.task == "concepts":
        w.writerow(["id", "concepts"] + [f"prob_{c}" for c in model.classes])
        for rid, lab, probs in zip(ids, pred.labels, pred.scores):
            labs = lab if isinstance(lab, frozenset) else frozenset([lab])
            w.writerow([rid, "|".join(c for c in CONCEPTS if c in labs)] + [f"{p:.6f}" for p in probs])
    else:
        w.writerow(["id", model.task, f"prob_{model.task}"])
        for rid, lab, p in zip(ids, pred.labels, pred.scores):
            w.writerow([rid, "yes" if lab else "no", f"{p:.6f}"])
    return buf.getvalue()


def predict_file(
    model: TrainedModel,
    featurizer: Featurizer,
    input_path: str | Path,
    output_path: str | Path,
    schema: Mapping[str, str] | None = None,
) -> int:
    """Write id, predicted label(s) and probabilities for every input row.

    The featurizer must describe the same features the model was trained
    on; a mismatch raises ConfigError before anything is written.
    """
    if featurizer.fingerprint() != model.fingerprint:
        raise ConfigError("feature configuration differs from the one the model was trained with")
    records = load_unlabeled(input_path, schema)
    feats = featurizer.transform(records)
    pred = model.predict(feats)
    atomic_write_text(output_path, prediction_csv(model, feats.ids, pred))
    return len(records)


# reports -------------------------------------------------------------------

def _metric_headers(result: CVResult) -> list[str]:
    h = ["fold", "n", "precision", "recall", "f1", "accuracy"]
    if any(r.auc is not None for r in result.folds):
        h.append("auc")
    if result.aggregate.label_accuracy is not None:
        h.append("label_accuracy")
    return h


def _metric_rows(result: CVResult, headers):
    entries = [(str(i + 1), r) for i, r in enumerate(result.folds)] + [("mean", result.aggregate)]
    for name, r in entries:
        row = r.as_row()
        yield [name] + [row.get(h) if row.get(h) is not None else "" for h in headers[1:]]


def report_files(result: CVResult, kind: str) -> dict[str, str]:
    """File name -> content for a CV or bootstrap result. Content is deterministic."""
    spec = result.spec
    stem = f"{kind}_{spec.task}_{spec.model}"
    headers = _metric_headers(result)
    rows = list(_metric_rows(result, headers))
    title = f"# {kind}: task={spec.task} model={spec.model} features={'+'.join(spec.feature_blocks)}\n\n"
    files = {
        f"{stem}.csv": csv_text(headers, rows),
        f"{stem}.md": title + markdown_table(headers, rows),
    }
    summary = {"kind": kind, "spec": spec.describe(), "aggregate": result.aggregate.as_row(), "n_pseudo": result.n_pseudo}
    files[f"{stem}.json"] = json.dumps(summary, sort_keys=True, indent=1) + "\n"
    if result.concept_rows:
        ch = ["concept", "precision", "recall", "f1", "support"]
        crow = [[r.concept, r.precision, r.recall, r.f1, r.support] for r in result.concept_rows]
        files[f"{stem}_concepts.csv"] = csv_text(ch, crow)
        files[f"{stem}_concepts.md"] = title + markdown_table(ch, crow)
    return files


def write_reports(files: Mapping[str, str], out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    return [atomic_write_text(out_dir / name, text) for name, text in sorted(files.items())]


def summary_table(summaries: Sequence[dict]) -> str:
    """One Markdown table per task from report summaries, mirroring model x features rows."""
    out = []
    for task in TASKS:
        rows = [s for s in summaries if s["spec"]["task"] == task]
        if not rows:
            continue
        rows.sort(key=lambda s: (s["kind"], s["spec"]["model"], "+".join(s["spec"]["feature_blocks"])))
        headers = ["setting", "model", "features", "P", "R", "F1", "Acc", "AUC"]
        body = []
        for s in rows:
            a = s["aggregate"]
            body.append(
                [
                    s["kind"],
                    s["spec"]["model"],
                    " & ".join(s["spec"]["feature_blocks"]),
                    a["precision"],
                    a["recall"],
                    a["f1"],
                    a["accuracy"],
                    a.get("auc") if a.get("auc") is not None else "",
                ]
            )
        out.append(f"## {task}\n\n" + markdown_table(headers, body))
    return "\n".join(out)
