"""Feature vectors and the syntactic (POS frequency) block."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DataError
from .text import WORD_TAGS, TaggedText

PAST_TAGS = ("VBD", "VBN")
PROGRESSIVE_TAGS = ("VBG",)


@dataclass(frozen=True)
class FeatureVector:
    """Named dense feature values; names are unique and values finite."""

    names: tuple[str, ...]
    values: np.ndarray

    def __init__(self, names: Sequence[str], values):
        values = np.asarray(values, dtype=np.float64)
        names = tuple(names)
        if values.ndim != 1 or len(names) != values.shape[0]:
            raise DataError("feature names and values differ in length")
        if len(set(names)) != len(names):
            raise DataError("duplicate feature names")
        if not np.all(np.isfinite(values)):
            raise DataError("non-finite feature value")
        values.setflags(write=False)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.names)

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.names.index(name)])

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.values.tolist()))

    @staticmethod
    def concat(*vectors: "FeatureVector") -> "FeatureVector":
        names = [n for v in vectors for n in v.names]
        values = np.concatenate([v.values for v in vectors]) if vectors else np.zeros(0)
        return FeatureVector(names, values)


POS_FEATURE_NAMES = tuple(f"pos:{t}" for t in WORD_TAGS)
POS_EXTRA_NAMES = ("pos:question", "pos:past_share", "pos:progressive_share")
_TAG_INDEX = {t: i for i, t in enumerate(WORD_TAGS)}


def pos_features(tagged: TaggedText, extra: bool = False) -> FeatureVector:
    """Relative frequency of each of the 36 word-class tags.

    Punctuation tokens count in the denominator but have no slot. With
    ``extra=True`` three more values are appended: question-mark presence,
    past-tense tag share and progressive tag share.
    """
    if len(tagged) == 0:
        raise DataError("pos_features needs a nonempty tagged text")
    counts = np.zeros(len(WORD_TAGS))
    for tag in tagged.tags:
        idx = _TAG_INDEX.get(tag)
        if idx is not None:
            counts[idx] += 1
    n = len(tagged)
    values = counts / n
    if not extra:
        return FeatureVector(POS_FEATURE_NAMES, values)
    question = float("?" in tagged.tokens)
    past = sum(values[_TAG_INDEX[t]] for t in PAST_TAGS)
    prog = sum(values[_TAG_INDEX[t]] for t in PROGRESSIVE_TAGS)
    return FeatureVector(POS_FEATURE_NAMES + POS_EXTRA_NAMES, np.append(values, [question, past, prog]))
