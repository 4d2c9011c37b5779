"""Averaged-perceptron part-of-speech tagger."""

from __future__ import annotations

import gzip
import json
import random
from collections import Counter, defaultdict
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Sequence

from .errors import DataError, TrainingError
from .text import TaggedText, read_tagged_corpus, tokenize

MODEL_FORMAT = "affectkit-tagger"
MODEL_VERSION = 1

_START = ("-START-", "-START2-")
_END = ("-END-", "-END2-")


def _normalize(word: str) -> str:
    if "-" in word and word[0] != "-":
        return "!HYPHEN"
    if word.isdigit() and len(word) == 4:
        return "!YEAR"
    if word[:1].isdigit():
        return "!DIGITS"
    return word.lower()


def _features(i: int, word: str, context: Sequence[str], prev: str, prev2: str) -> list[str]:
    # i indexes into context, which is padded with two start symbols.
    i += len(_START)
    feats = [
        "bias",
        "i suffix " + word[-3:],
        "i suffix2 " + word[-2:],
        "i pref1 " + word[:1],
        "i-1 tag " + prev,
        "i-2 tag " + prev2,
        "i tag+i-2 tag " + prev + " " + prev2,
        "i word " + context[i],
        "i-1 tag+i word " + prev + " " + context[i],
        "i-1 word " + context[i - 1],
        "i-1 suffix " + context[i - 1][-3:],
        "i-2 word " + context[i - 2],
        "i+1 word " + context[i + 1],
        "i+1 suffix " + context[i + 1][-3:],
        "i+2 word " + context[i + 2],
    ]
    if word[:1].isupper():
        feats.append("i cap")
    if any(ch.isdigit() for ch in word):
        feats.append("i digit")
    return feats


class AveragedPerceptron:
    def __init__(self):
        self.weights: dict[str, dict[str, float]] = {}
        self.classes: list[str] = []
        self._totals: dict[tuple[str, str], float] = defaultdict(float)
        self._tstamps: dict[tuple[str, str], int] = defaultdict(int)
        self.i = 0

    def predict(self, features: Sequence[str]) -> str:
        scores: dict[str, float] = defaultdict(float)
        for feat in features:
            weights = self.weights.get(feat)
            if not weights:
                continue
            for label, w in weights.items():
                scores[label] += w
        # Ties resolve to the first class in sorted order.
        return max(self.classes, key=lambda c: (scores.get(c, 0.0), _neg_key(c)))

    def update(self, truth: str, guess: str, features: Sequence[str]) -> None:
        self.i += 1
        if truth == guess:
            return
        for f in features:
            weights = self.weights.setdefault(f, {})
            for c, v in ((truth, 1.0), (guess, -1.0)):
                w = weights.get(c, 0.0)
                param = (f, c)
                self._totals[param] += (self.i - self._tstamps[param]) * w
                self._tstamps[param] = self.i
                weights[c] = w + v

    def average(self) -> None:
        for feat, weights in self.weights.items():
            averaged = {}
            for c, w in weights.items():
                param = (feat, c)
                total = self._totals[param] + (self.i - self._tstamps[param]) * w
                avg = round(total / self.i, 6)
                if avg:
                    averaged[c] = avg
            self.weights[feat] = averaged
        self.weights = {f: w for f, w in self.weights.items() if w}


@lru_cache(maxsize=None)
def _neg_key(c: str) -> tuple:
    return tuple(-ord(ch) for ch in c)


class PerceptronTagger:
    """Greedy left-to-right averaged-perceptron tagger.

    Frequent unambiguous words are tagged from a lookup table and skip the
    model entirely.
    """

    def __init__(self, model: AveragedPerceptron | None = None, tagdict: dict[str, str] | None = None):
        self.model = model or AveragedPerceptron()
        self.tagdict = tagdict or {}

    def tag_tokens(self, tokens: Sequence[str]) -> TaggedText:
        if not tokens:
            raise DataError("cannot tag an empty token sequence")
        prev, prev2 = _START
        context = list(_START) + [_normalize(w) for w in tokens] + list(_END)
        tags = []
        for i, word in enumerate(tokens):
            tag = self.tagdict.get(word)
            if tag is None:
                tag = self.model.predict(_features(i, word, context, prev, prev2))
            tags.append(tag)
            prev2, prev = prev, tag
        return TaggedText(tuple(tokens), tuple(tags))

    def tag(self, text: str) -> TaggedText:
        return self.tag_tokens(tokenize(text))

    def accuracy(self, corpus: Sequence[TaggedText]) -> float:
        right = total = 0
        for sent in corpus:
            guess = self.tag_tokens(sent.tokens).tags
            right += sum(g == t for g, t in zip(guess, sent.tags))
            total += len(sent)
        return right / total if total else 0.0

    # serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "classes": self.model.classes,
            "tagdict": self.tagdict,
            "weights": self.model.weights,
        }

    def save(self, path: str | Path) -> None:
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")).encode("utf-8")
        # mtime=0 keeps the file byte-identical across saves.
        with open(path, "wb") as raw, gzip.GzipFile(fileobj=raw, mode="wb", mtime=0) as fh:
            fh.write(payload)

    @classmethod
    def load(cls, path: str | Path) -> "PerceptronTagger":
        with gzip.open(path, "rb") as fh:
            data = json.loads(fh.read().decode("utf-8"))
        if data.get("format") != MODEL_FORMAT:
            raise DataError(f"{path}: not a tagger model")
        if data.get("version") != MODEL_VERSION:
            raise DataError(f"{path}: unsupported tagger model version {data.get('version')}")
        model = AveragedPerceptron()
        model.classes = list(data["classes"])
        model.weights = {f: dict(w) for f, w in data["weights"].items()}
        return cls(model, dict(data["tagdict"]))


def _make_tagdict(corpus: Sequence[TaggedText], freq_thresh: int, ambiguity_thresh: float) -> dict[str, str]:
    counts: dict[str, Counter] = defaultdict(Counter)
    for sent in corpus:
        for word, tag in zip(sent.tokens, sent.tags):
            counts[word][tag] += 1
    tagdict = {}
    for word, tag_freqs in counts.items():
        tag, mode = max(sorted(tag_freqs.items()), key=lambda kv: kv[1])
        n = sum(tag_freqs.values())
        if n >= freq_thresh and (mode / n) >= ambiguity_thresh:
            tagdict[word] = tag
    return tagdict


def train_tagger(
    corpus: Sequence[TaggedText],
    epochs: int = 5,
    seed: int = 0,
    freq_thresh: int = 20,
    ambiguity_thresh: float = 0.97,
) -> PerceptronTagger:
    """Train an averaged-perceptron tagger; deterministic for a given seed."""
    if not corpus:
        raise TrainingError("cannot train a tagger on an empty corpus")
    model = AveragedPerceptron()
    model.classes = sorted({t for sent in corpus for t in sent.tags})
    tagger = PerceptronTagger(model, _make_tagdict(corpus, freq_thresh, ambiguity_thresh))
    sentences = list(corpus)
    rng = random.Random(seed)
    for _ in range(epochs):
        for sent in sentences:
            prev, prev2 = _START
            context = list(_START) + [_normalize(w) for w in sent.tokens] + list(_END)
            for i, (word, truth) in enumerate(zip(sent.tokens, sent.tags)):
                guess = tagger.tagdict.get(word)
                if guess is None:
                    feats = _features(i, word, context, prev, prev2)
                    guess = model.predict(feats)
                    model.update(truth, guess, feats)
                prev2, prev = prev, guess
        rng.shuffle(sentences)
    model.average()
    return tagger


def seed_corpus() -> list[TaggedText]:
    """The small hand-tagged corpus of happy-moment sentences shipped with the package."""
    with resources.as_file(resources.files("affectkit").joinpath("data/seed_tagged.txt")) as path:
        return read_tagged_corpus(path)


@lru_cache(maxsize=1)
def default_tagger() -> PerceptronTagger:
    """Tagger trained on the bundled seed corpus (cached per process)."""
    return train_tagger(seed_corpus(), epochs=10, seed=0, freq_thresh=3, ambiguity_thresh=0.97)


class PretaggedTagger:
    """Serves tags from a pre-tagged file keyed by record id.

    File format: one record per line, ``id<TAB>word/TAG word/TAG ...``.
    Records missing from the file fall back to ``fallback`` when given.
    """

    def __init__(self, tagged: dict[str, TaggedText], fallback: PerceptronTagger | None = None):
        self.tagged = dict(tagged)
        self.fallback = fallback

    @classmethod
    def from_file(cls, path: str | Path, fallback: PerceptronTagger | None = None) -> "PretaggedTagger":
        tagged = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                rid, sep, rest = line.partition("\t")
                if not sep:
                    raise DataError(f"{path} line {lineno}: expected 'id<TAB>tagged tokens'")
                try:
                    tagged[rid.strip()] = TaggedText.from_string(rest)
                except DataError as exc:
                    raise DataError(f"{path} line {lineno}: {exc}") from None
        return cls(tagged, fallback)

    def tag_record(self, record) -> TaggedText:
        hit = self.tagged.get(record.id)
        if hit is not None:
            return hit
        return self.tag(record.text)

    def tag(self, text: str) -> TaggedText:
        if self.fallback is None:
            raise DataError("record is not in the pre-tagged file and no fallback tagger is set")
        return self.fallback.tag(text)
