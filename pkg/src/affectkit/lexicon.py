"""Word-category lexicons (LIWC .dic, EmoLex, MPQA clues) and emotional features."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import DataError, ParseError
from .features import FeatureVector

FORMATS = ("liwc_dic", "emolex_tsv", "mpqa_clues")

EMOLEX_CATEGORIES = (
    "anger",
    "anticipation",
    "disgust",
    "fear",
    "joy",
    "negative",
    "positive",
    "sadness",
    "surprise",
    "trust",
)
MPQA_CATEGORIES = ("strong_subjective", "weak_subjective", "positive_polarity", "negative_polarity")


@dataclass(frozen=True)
class Lexicon:
    """Category-keyed word lists.

    ``entries`` maps lowercase words and ``wildcard_entries`` maps lowercase
    prefixes to sets of category indices into ``categories``.
    """

    name: str
    format: str
    categories: tuple[str, ...]
    entries: Mapping[str, frozenset[int]] = field(default_factory=dict)
    wildcard_entries: Mapping[str, frozenset[int]] = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.categories)
        for table in (self.entries, self.wildcard_entries):
            for word, cats in table.items():
                if any(not 0 <= c < n for c in cats):
                    raise DataError(f"lexicon {self.name}: category index out of range for {word!r}")

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(f"{self.name}:{c}" for c in self.categories)

    def lookup(self, token: str) -> frozenset[int]:
        """Categories matched by ``token`` (exact word or any wildcard prefix)."""
        word = token.lower()
        cats = set(self.entries.get(word, ()))
        if self.wildcard_entries:
            for end in range(1, len(word) + 1):
                hit = self.wildcard_entries.get(word[:end])
                if hit:
                    cats.update(hit)
        return frozenset(cats)


def _freeze(table: dict[str, set[int]]) -> dict[str, frozenset[int]]:
    return {k: frozenset(v) for k, v in table.items()}


def _parse_liwc(lines: list[str], name: str) -> Lexicon:
    it = iter(enumerate(lines, start=1))
    for lineno, line in it:
        if line.strip():
            if line.strip() != "%":
                raise ParseError(lineno, "LIWC dictionary must start with '%'")
            break
    else:
        raise ParseError(0, "empty LIWC dictionary")
    ids: dict[str, int] = {}
    categories: list[str] = []
    for lineno, line in it:
        s = line.strip()
        if not s:
            continue
        if s == "%":
            break
        parts = s.split(None, 1)
        if len(parts) != 2:
            raise ParseError(lineno, f"malformed category line {s!r}")
        ids[parts[0]] = len(categories)
        categories.append(parts[1].strip())
    else:
        raise ParseError(len(lines), "unterminated LIWC category header")
    entries: dict[str, set[int]] = {}
    wild: dict[str, set[int]] = {}
    for lineno, line in it:
        s = line.strip()
        if not s:
            continue
        parts = s.split()
        if len(parts) < 2:
            raise ParseError(lineno, f"entry without categories {s!r}")
        word = parts[0].lower()
        cats = set()
        for tok in parts[1:]:
            if tok.isdigit():
                if tok not in ids and str(int(tok)) not in ids:
                    raise ParseError(lineno, f"unknown category id {tok}")
                cats.add(ids.get(tok, ids.get(str(int(tok)))))
            elif re.fullmatch(r"[\d()/ ]+", tok) or "(" in tok or ")" in tok:
                # Conditional entries ("(02 134)125/464") depend on context; skipped.
                continue
            else:
                raise ParseError(lineno, f"bad category token {tok!r}")
        if not cats:
            continue
        if word.endswith("*"):
            wild.setdefault(word[:-1], set()).update(cats)
        else:
            entries.setdefault(word, set()).update(cats)
    return Lexicon(name, "liwc_dic", tuple(categories), _freeze(entries), _freeze(wild))


def _parse_emolex(lines: list[str], name: str) -> Lexicon:
    index = {c: i for i, c in enumerate(EMOLEX_CATEGORIES)}
    entries: dict[str, set[int]] = {}
    for lineno, line in enumerate(lines, start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split("\t")
        if len(parts) != 3:
            raise ParseError(lineno, "expected 'word<TAB>emotion<TAB>0|1'")
        word, emotion, flag = (p.strip() for p in parts)
        if emotion.lower() not in index:
            raise ParseError(lineno, f"unknown emotion {emotion!r}")
        if flag not in ("0", "1"):
            raise ParseError(lineno, f"association flag must be 0 or 1, got {flag!r}")
        cats = entries.setdefault(word.lower(), set())
        if flag == "1":
            cats.add(index[emotion.lower()])
    entries = {w: c for w, c in entries.items() if c}
    return Lexicon(name, "emolex_tsv", EMOLEX_CATEGORIES, _freeze(entries), {})


def _parse_mpqa(lines: list[str], name: str) -> Lexicon:
    index = {c: i for i, c in enumerate(MPQA_CATEGORIES)}
    entries: dict[str, set[int]] = {}
    wild: dict[str, set[int]] = {}
    for lineno, line in enumerate(lines, start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        fields = {}
        for item in s.split():
            key, sep, value = item.partition("=")
            if not sep:
                raise ParseError(lineno, f"expected key=value, got {item!r}")
            fields[key] = value
        if "type" not in fields or "word1" not in fields:
            raise ParseError(lineno, "clue needs 'type' and 'word1'")
        cats = set()
        if fields["type"] == "strongsubj":
            cats.add(index["strong_subjective"])
        elif fields["type"] == "weaksubj":
            cats.add(index["weak_subjective"])
        else:
            raise ParseError(lineno, f"unknown clue type {fields['type']!r}")
        polarity = fields.get("priorpolarity", fields.get("polarity", "neutral"))
        if polarity in ("positive", "both"):
            cats.add(index["positive_polarity"])
        if polarity in ("negative", "both"):
            cats.add(index["negative_polarity"])
        word = fields["word1"].lower()
        target = wild if fields.get("stemmed1") == "y" else entries
        target.setdefault(word, set()).update(cats)
    return Lexicon(name, "mpqa_clues", MPQA_CATEGORIES, _freeze(entries), _freeze(wild))


_PARSERS = {"liwc_dic": _parse_liwc, "emolex_tsv": _parse_emolex, "mpqa_clues": _parse_mpqa}
_DEFAULT_NAMES = {"liwc_dic": "liwc", "emolex_tsv": "emolex", "mpqa_clues": "mpqa"}


def load_lexicon(path: str | Path, format: str, name: str | None = None) -> Lexicon:
    """Load a lexicon file in one of :data:`FORMATS`."""
    if format not in _PARSERS:
        raise DataError(f"unknown lexicon format {format!r}; expected one of {FORMATS}")
    path = Path(path)
    if not path.exists():
        raise DataError(f"lexicon file not found: {path}")
    lines = path.read_text(encoding="utf-8", errors="replace").splitlines()
    try:
        return _PARSERS[format](lines, name or _DEFAULT_NAMES[format])
    except ParseError as exc:
        raise ParseError(exc.line, f"{path}: {exc}") from None


def lexicon_features(tokens: Sequence[str], lexicon: Lexicon) -> FeatureVector:
    """Per category, the share of tokens that match it."""
    counts = np.zeros(len(lexicon.categories))
    for tok in tokens:
        for c in lexicon.lookup(tok):
            counts[c] += 1
    n = max(len(tokens), 1)
    return FeatureVector(lexicon.feature_names, counts / n)


FACT_EMOTION_NAME = "fact_emotion"


def emotional_features(
    tokens: Sequence[str],
    lexicons: Sequence[Lexicon],
    fact_emotion_score: Callable[[Sequence[str]], float] | None = None,
) -> FeatureVector:
    """Concatenated lexicon blocks plus one fact/emotion score slot (0 by default)."""
    if not lexicons:
        raise DataError("emotional_features needs at least one lexicon")
    score = 0.0 if fact_emotion_score is None else float(fact_emotion_score(tokens))
    blocks = [lexicon_features(tokens, lex) for lex in lexicons]
    blocks.append(FeatureVector((FACT_EMOTION_NAME,), [score]))
    return FeatureVector.concat(*blocks)
