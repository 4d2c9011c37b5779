"""Classification metrics and report tables.

Conventions: any ratio with a zero denominator is 0; macro averages are the
unweighted mean over classes; multi-label predictions (sets) are counted
one-vs-rest per label and scored for accuracy by exact set match.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import DataError


@dataclass(frozen=True)
class ConfusionCounts:
    classes: tuple
    tp: tuple[int, ...]
    fp: tuple[int, ...]
    fn: tuple[int, ...]
    tn: tuple[int, ...]

    def __post_init__(self):
        k = len(self.classes)
        for name in ("tp", "fp", "fn", "tn"):
            v = getattr(self, name)
            if len(v) != k or any(int(c) < 0 for c in v):
                raise ValueError(f"{name} must hold {k} non-negative counts")

    @property
    def n(self) -> int:
        return self.tp[0] + self.fp[0] + self.fn[0] + self.tn[0] if self.classes else 0

    def row(self, cls) -> tuple[int, int, int, int]:
        i = self.classes.index(cls)
        return self.tp[i], self.fp[i], self.fn[i], self.tn[i]


def _is_multilabel(values: Sequence) -> bool:
    return any(isinstance(v, (set, frozenset)) for v in values)


def confusion(predictions: Sequence, gold: Sequence, classes: Sequence[Hashable] | None = None) -> ConfusionCounts:
    """Per-class one-vs-rest counts.

    Labels are scalars (single label) or sets (multi-label). ``classes``
    defaults to the sorted union of observed labels.
    """
    if len(predictions) != len(gold):
        raise DataError(f"length mismatch: {len(predictions)} predictions vs {len(gold)} gold")
    multi = _is_multilabel(predictions) or _is_multilabel(gold)
    as_set = (lambda v: frozenset(v)) if multi else (lambda v: frozenset([v]))
    pred_sets = [as_set(p) for p in predictions]
    gold_sets = [as_set(g) for g in gold]
    if classes is None:
        seen = set().union(*pred_sets, *gold_sets) if pred_sets else set()
        classes = sorted(seen, key=lambda c: (str(type(c)), c))
    classes = tuple(classes)
    n = len(gold_sets)
    tp, fp, fn, tn = [], [], [], []
    for c in classes:
        a = b = d = 0
        for p, g in zip(pred_sets, gold_sets):
            inp, ing = c in p, c in g
            a += inp and ing
            b += inp and not ing
            d += ing and not inp
        tp.append(a)
        fp.append(b)
        fn.append(d)
        tn.append(n - a - b - d)
    return ConfusionCounts(classes, tuple(tp), tuple(fp), tuple(fn), tuple(tn))


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    p = _ratio(tp, tp + fp)
    r = _ratio(tp, tp + fn)
    return p, r, _ratio(2 * p * r, p + r)


@dataclass(frozen=True)
class PRF:
    per_class: dict
    macro: tuple[float, float, float]


def precision_recall_f1(conf: ConfusionCounts) -> PRF:
    per_class = {c: prf(conf.tp[i], conf.fp[i], conf.fn[i]) for i, c in enumerate(conf.classes)}
    if not per_class:
        return PRF({}, (0.0, 0.0, 0.0))
    k = len(per_class)
    macro = tuple(sum(v[j] for v in per_class.values()) / k for j in range(3))
    return PRF(per_class, macro)


def accuracy(predictions: Sequence, gold: Sequence) -> float:
    """Exact-match fraction; multi-label sets must match exactly."""
    if len(predictions) != len(gold):
        raise DataError(f"length mismatch: {len(predictions)} predictions vs {len(gold)} gold")
    if not gold:
        return 0.0
    norm = (lambda v: frozenset(v) if isinstance(v, (set, frozenset)) else v)
    return sum(norm(p) == norm(g) for p, g in zip(predictions, gold)) / len(gold)


def label_accuracy(predictions: Sequence, gold: Sequence, classes: Sequence) -> float:
    """Per-label agreement averaged over all (record, label) cells."""
    conf = confusion(predictions, gold, classes)
    cells = conf.n * len(conf.classes)
    return _ratio(sum(conf.tp) + sum(conf.tn), cells)


def auc_roc(scores, gold) -> float:
    """Area under the ROC curve from average ranks (ties count one half)."""
    scores = np.asarray(scores, dtype=np.float64)
    y = np.asarray(gold).astype(bool)
    if scores.shape != y.shape or scores.ndim != 1:
        raise DataError("scores and labels must be 1-D and equally long")
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("AUC is undefined with a single class")
    ranks = rankdata(scores)  # average ranks, so every value is a multiple of 0.5
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def auc_pairwise(scores, gold) -> float:
    """Direct pair count; quadratic, kept as the reference for ``auc_roc``."""
    pos = [s for s, g in zip(scores, gold) if g]
    neg = [s for s, g in zip(scores, gold) if not g]
    if not pos or not neg:
        raise DataError("AUC is undefined with a single class")
    total = 0.0
    for p in pos:
        for q in neg:
            total += 1.0 if p > q else 0.5 if p == q else 0.0
    return total / (len(pos) * len(neg))


# reports -------------------------------------------------------------------

@dataclass
class MetricsReport:
    """Macro precision/recall/F1, accuracy and optional AUC for one evaluation."""

    precision: float
    recall: float
    f1: float
    accuracy: float
    auc: float | None = None
    n: int = 0
    label_accuracy: float | None = None
    per_class: dict = field(default_factory=dict)

    def as_row(self) -> dict:
        row = {
            "n": self.n,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "accuracy": self.accuracy,
        }
        if self.auc is not None:
            row["auc"] = self.auc
        if self.label_accuracy is not None:
            row["label_accuracy"] = self.label_accuracy
        return row


def evaluate(predictions: Sequence, gold: Sequence, scores=None, classes=None) -> MetricsReport:
    """Metrics for one prediction list; ``scores`` (positive-class) adds AUC."""
    conf = confusion(predictions, gold, classes)
    res = precision_recall_f1(conf)
    multi = _is_multilabel(predictions) or _is_multilabel(gold)
    auc = None
    if scores is not None:
        auc = auc_roc(scores, [bool(g) for g in gold])
    return MetricsReport(
        precision=res.macro[0],
        recall=res.macro[1],
        f1=res.macro[2],
        accuracy=accuracy(predictions, gold),
        auc=auc,
        n=len(gold),
        label_accuracy=label_accuracy(predictions, gold, conf.classes) if multi else None,
        per_class=res.per_class,
    )


def aggregate(reports: Sequence[MetricsReport]) -> MetricsReport:
    """Unweighted mean of fold metrics."""
    if not reports:
        raise DataError("nothing to aggregate")
    mean = lambda vals: float(sum(vals) / len(vals))  # noqa: E731
    aucs = [r.auc for r in reports]
    las = [r.label_accuracy for r in reports]
    return MetricsReport(
        precision=mean([r.precision for r in reports]),
        recall=mean([r.recall for r in reports]),
        f1=mean([r.f1 for r in reports]),
        accuracy=mean([r.accuracy for r in reports]),
        auc=mean(aucs) if all(a is not None for a in aucs) else None,
        n=sum(r.n for r in reports),
        label_accuracy=mean(las) if all(a is not None for a in las) else None,
    )


@dataclass(frozen=True)
class ConceptRow:
    concept: str
    precision: float
    recall: float
    f1: float
    support: int


def per_concept_report(predictions: Sequence, gold: Sequence) -> list[ConceptRow]:
    """One row per concept present in gold, sorted by F1 descending then name."""
    to_set = lambda v: frozenset(v) if isinstance(v, (set, frozenset)) else frozenset([v])  # noqa: E731
    preds = [to_set(p) for p in predictions]
    golds = [to_set(g) for g in gold]
    present = sorted(set().union(*golds)) if golds else []
    conf = confusion(preds, golds, present)
    rows = []
    for i, c in enumerate(present):
        p, r, f = prf(conf.tp[i], conf.fp[i], conf.fn[i])
        rows.append(ConceptRow(c, p, r, f, conf.tp[i] + conf.fn[i]))
    rows.sort(key=lambda row: (-row.f1, row.concept))
    return rows


def fmt(x) -> str:
    """Fixed 4-decimal rendering so reports are byte-stable."""
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return f"{float(x):.4f}"


def markdown_table(headers: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = ["| " + " | ".join(headers) + " |", "|" + "|".join("---" for _ in headers) + "|"]
    for row in rows:
        lines.append("| " + " | ".join(fmt(v) if not isinstance(v, str) else v for v in row) + " |")
    return "\n".join(lines) + "\n"


def csv_text(headers: Sequence[str], rows: Iterable[Sequence], delimiter: str = ",") -> str:
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    w.writerow(headers)
    for row in rows:
        w.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    return buf.getvalue()
