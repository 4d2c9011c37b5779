"""Tokenization and the POS tag inventory."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import DataError

# The 36 Penn Treebank word-class tags.
WORD_TAGS: tuple[str, ...] = (
    "CC", "CD", "DT", "EX", "FW", "IN", "JJ", "JJR", "JJS", "LS", "MD", "NN",
    "NNS", "NNP", "NNPS", "PDT", "POS", "PRP", "PRP$", "RB", "RBR", "RBS", "RP",
    "SYM", "TO", "UH", "VB", "VBD", "VBG", "VBN", "VBP", "VBZ", "WDT", "WP",
    "WP$", "WRB",
)
PUNCT_TAGS: tuple[str, ...] = (".", ",", ":", "``", "''", "-LRB-", "-RRB-", "#", "$")
TAG_INVENTORY: frozenset[str] = frozenset(WORD_TAGS + PUNCT_TAGS)
_TAG_ALIASES = {"(": "-LRB-", ")": "-RRB-", "-LCB-": "-LRB-", "-RCB-": "-RRB-", '"': "''"}


def normalize_tag(tag: str) -> str:
    tag = _TAG_ALIASES.get(tag, tag)
    if tag not in TAG_INVENTORY:
        raise DataError(f"tag {tag!r} is not in the tag inventory")
    return tag


@dataclass(frozen=True)
class TaggedText:
    tokens: tuple[str, ...]
    tags: tuple[str, ...]

    def __post_init__(self):
        if len(self.tokens) != len(self.tags):
            raise DataError("tokens and tags differ in length")
        for t in self.tags:
            if t not in TAG_INVENTORY:
                raise DataError(f"tag {t!r} is not in the tag inventory")

    def __len__(self):
        return len(self.tokens)

    @classmethod
    def from_string(cls, line: str) -> "TaggedText":
        """Parse ``word/TAG word/TAG ...`` (the last slash separates the tag)."""
        tokens, tags = [], []
        for item in line.split():
            word, sep, tag = item.rpartition("/")
            if not sep or not word:
                raise DataError(f"malformed tagged token {item!r}")
            tokens.append(word)
            tags.append(normalize_tag(tag))
        return cls(tuple(tokens), tuple(tags))

    def to_string(self) -> str:
        return " ".join(f"{w}/{t}" for w, t in zip(self.tokens, self.tags))


def read_tagged_corpus(path) -> list[TaggedText]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                out.append(TaggedText.from_string(line))
            except DataError as exc:
                raise DataError(f"{path} line {lineno}: {exc}") from None
    return out


_TOKEN_RE = re.compile(
    r"""
    \.\.\.+                        # ellipsis
    | (?:[A-Za-z]\.){2,}           # abbreviations like U.S.
    | (?:Mr|Mrs|Ms|Dr|Jr|Sr|St|Prof|vs)\.(?=\s+\w)  # titles before a following word
    | \d+(?:[.,:/]\d+)+            # 3.5  10,000  5:30  9/11
    | [^\W_]+(?:[-'][^\W_]+)*'?    # words, hyphenated words, contractions
    | --+
    | \S                           # any other single character
    """,
    re.VERBOSE,
)
_CLITICS = ("'s", "'re", "'ve", "'ll", "'d", "'m")
_NEG_SPECIAL = {"can't": ("ca", "n't"), "won't": ("wo", "n't"), "shan't": ("sha", "n't")}


def _split_contraction(tok: str) -> list[str]:
    low = tok.lower()
    if low in _NEG_SPECIAL:
        a, b = _NEG_SPECIAL[low]
        return [tok[: len(a)], tok[len(a):]]
    if low.endswith("n't") and len(tok) > 3:
        return [tok[:-3], tok[-3:]]
    for clitic in _CLITICS:
        if low.endswith(clitic) and len(tok) > len(clitic):
            return [tok[: -len(clitic)], tok[-len(clitic):]]
    if low.endswith("s'") and len(tok) > 2:
        return [tok[:-1], tok[-1:]]
    return [tok]


def tokenize(text: str, contractions: str = "split") -> list[str]:
    """Split ``text`` into word and punctuation tokens, preserving case.

    ``contractions="split"`` separates clitics Treebank-style
    (``didn't`` -> ``did n't``); ``"keep"`` leaves them attached.
    Double quotes become opening/closing quote tokens.
    """
    if contractions not in ("split", "keep"):
        raise ValueError("contractions must be 'split' or 'keep'")
    if text is None or not text.strip():
        raise DataError("cannot tokenize empty text")
    text = text.replace("’", "'").replace("‘", "'")
    text = text.replace("“", '"').replace("”", '"')
    tokens: list[str] = []
    open_quote = True
    for m in _TOKEN_RE.finditer(text):
        tok = m.group(0)
        if tok == '"':
            tokens.append("``" if open_quote else "''")
            open_quote = not open_quote
            continue
        if tok.endswith("'") and len(tok) > 1 and not tok.lower().endswith("s'"):
            tokens.extend([tok[:-1], "'"])
            continue
        if contractions == "split" and "'" in tok:
            tokens.extend(_split_contraction(tok))
        else:
            tokens.append(tok)
    return tokens
