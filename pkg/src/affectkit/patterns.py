"""Lexico-syntactic pattern extraction over tagged, shallow-chunked sentences.

Chunks come from tag rules alone (no parser):

* noun group: a run of determiners, possessives, numbers, adjectives and
  nouns ending in a noun, or a lone personal/existential/wh pronoun;
* adjective phrase: an adjective run with no noun after it;
* verb group: modals, verbs, adverbs and particles containing at least one
  verb; the last verb is the head and earlier verbs are auxiliaries.

A verb group whose head is a form of *be* or *have* is an auxiliary group;
any other head makes it active unless it is a past participle after *be*
(passive, ignored). Six templates are instantiated from the chunk sequence;
see ``TEMPLATES``.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .evaluation import csv_text, markdown_table
from .text import TaggedText

TEMPLATES = (
    "SUBJ_ACTVP",  # <subj> active verb: key = verb
    "SUBJ_AUXVP_DOBJ",  # <subj> have + object: key = HAVE <subject head>
    "SUBJ_AUXVP_ADJP",  # <subj> be + adjective: key = BE <adjective>
    "ACTVP_DOBJ",  # active verb + object: key = verb
    "ACTVP_PREP_NP",  # active verb + preposition + noun group: key = verb prep
    "ADJ_NOUN",  # possessive determiner + noun: key = MY WIFE
)

DISPLAY = {
    "SUBJ_ACTVP": "<subj> ActVp",
    "SUBJ_AUXVP_DOBJ": "Subj AuxVp <dobj>",
    "SUBJ_AUXVP_ADJP": "<subj> AuxVp Adjp",
    "ACTVP_DOBJ": "ActVp <dobj>",
    "ACTVP_PREP_NP": "ActVp Prep <np>",
    "ADJ_NOUN": "Adj Noun",
}

BE_FORMS = frozenset({"be", "am", "is", "are", "was", "were", "been", "being", "'s", "'re", "'m"})
HAVE_FORMS = frozenset({"have", "has", "had", "having", "'ve", "'d"})

_NOUNS = frozenset({"NN", "NNS", "NNP", "NNPS"})
_ADJS = frozenset({"JJ", "JJR", "JJS"})
_NP_TAGS = _NOUNS | _ADJS | {"DT", "PDT", "PRP$", "CD", "POS"}
_PRONOUNS = frozenset({"PRP", "EX", "WP"})
_VERBS = frozenset({"VB", "VBD", "VBG", "VBN", "VBP", "VBZ"})
_VG_TAGS = _VERBS | {"MD", "RB", "RBR", "RBS", "RP"}
_PREPS = frozenset({"IN", "TO"})


@dataclass(frozen=True)
class Chunk:
    kind: str  # NP, ADJP, VP, PREP or O
    start: int
    end: int  # exclusive
    head: int  # token index of the head word


@dataclass(frozen=True)
class PatternInstance:
    template: str
    key: str
    record_id: str = ""
    concepts: frozenset = frozenset()

    def __post_init__(self):
        if not self.key:
            raise ValueError("pattern key must be nonempty")

    @property
    def pattern(self) -> tuple[str, str]:
        return self.template, self.key


def _noun_run(tags: Sequence[str], i: int) -> int:
    j = i
    while j < len(tags) and tags[j] in _NP_TAGS:
        j += 1
    return j


def chunk(tagged: TaggedText) -> list[Chunk]:
    tags, n = tagged.tags, len(tagged)
    out: list[Chunk] = []
    i = 0
    while i < n:
        t = tags[i]
        if t in _PRONOUNS:
            out.append(Chunk("NP", i, i + 1, i))
            i += 1
        elif t in _NP_TAGS:
            j = _noun_run(tags, i)
            nouns = [k for k in range(i, j) if tags[k] in _NOUNS]
            if nouns:
                last = nouns[-1]
                out.append(Chunk("NP", i, last + 1, last))
                i = last + 1
                continue
            adjs = [k for k in range(i, j) if tags[k] in _ADJS]
            if adjs:
                out.append(Chunk("ADJP", i, j, adjs[-1]))
            else:
                # bare determiners / numbers ("this", "two") act as pronouns
                out.append(Chunk("NP", i, j, j - 1))
            i = j
        elif t in _VG_TAGS:
            j = i
            while j < n and tags[j] in _VG_TAGS:
                j += 1
            verbs = [k for k in range(i, j) if tags[k] in _VERBS]
            if verbs:
                # leading adverbs belong to the group, so "I finally got" keeps its subject adjacent
                out.append(Chunk("VP", i, j, verbs[-1]))
            elif all(tags[k] in ("RB", "RBR", "RBS") for k in range(i, j)) and j < n and tags[j] in _ADJS:
                k = _noun_run(tags, j)
                if not any(tags[m] in _NOUNS for m in range(j, k)):
                    adjs = [m for m in range(j, k) if tags[m] in _ADJS]
                    out.append(Chunk("ADJP", i, k, adjs[-1]))
                    i = k
                    continue
                out.append(Chunk("O", i, j, i))
            else:
                out.append(Chunk("O", i, j, i))
            i = j
        elif t in _PREPS:
            out.append(Chunk("PREP", i, i + 1, i))
            i += 1
        else:
            out.append(Chunk("O", i, i + 1, i))
            i += 1
    return out


def _verb_kind(tagged: TaggedText, vp: Chunk) -> str:
    """'be', 'have', 'passive' or 'active' for a verb group."""
    words = [w.lower() for w in tagged.tokens]
    head = words[vp.head]
    if head in BE_FORMS:
        return "be"
    if head in HAVE_FORMS:
        return "have"
    # a past form right after an auxiliary "be" is a participle even when tagged VBD
    if tagged.tags[vp.head] in ("VBN", "VBD"):
        aux = [words[k] for k in range(vp.start, vp.head) if tagged.tags[k] in _VERBS]
        if any(a in BE_FORMS for a in aux) or (
            tagged.tags[vp.head] == "VBN" and aux and aux[-1] in ("get", "got", "gets", "getting")
        ):
            return "passive"
    return "active"


def extract_patterns(tagged: TaggedText, record_id: str = "", concepts: Iterable[str] = ()) -> list[PatternInstance]:
    """All template matches in one tagged sentence or moment.

    Each template fires at most once per verb group or noun group site.
    """
    concepts = frozenset(concepts)
    words = tagged.tokens
    up = lambda k: words[k].upper()  # noqa: E731
    chunks = chunk(tagged)
    found: list[PatternInstance] = []
    seen: set = set()

    def emit(template: str, key: str, site: int):
        if (template, site) in seen:
            return
        seen.add((template, site))
        found.append(PatternInstance(template, key, record_id, concepts))

    for ci, c in enumerate(chunks):
        if c.kind == "NP":
            for k in range(c.start, c.end - 1):
                if tagged.tags[k] == "PRP$" and tagged.tags[k + 1] in _NOUNS:
                    emit("ADJ_NOUN", f"{up(k)} {up(k + 1)}", k)
                    break
            continue
        if c.kind != "VP":
            continue
        kind = _verb_kind(tagged, c)
        prev = chunks[ci - 1] if ci > 0 else None
        nxt = chunks[ci + 1] if ci + 1 < len(chunks) else None
        nxt2 = chunks[ci + 2] if ci + 2 < len(chunks) else None
        subj = prev if prev is not None and prev.kind == "NP" else None
        # the infinitive marker is not a subject: "to see" has none
        if prev is not None and prev.kind == "PREP" and tagged.tags[prev.start] == "TO":
            subj = None
        site = c.head
        if kind == "active":
            verb = up(c.head)
            if subj is not None:
                emit("SUBJ_ACTVP", verb, site)
            if nxt is not None and nxt.kind == "NP":
                emit("ACTVP_DOBJ", verb, site)
            elif nxt is not None and nxt.kind == "PREP" and nxt2 is not None and nxt2.kind == "NP":
                emit("ACTVP_PREP_NP", f"{verb} {up(nxt.start)}", site)
        elif kind == "have" and subj is not None and nxt is not None and nxt.kind == "NP":
            emit("SUBJ_AUXVP_DOBJ", f"HAVE {up(subj.head)}", site)
        elif kind == "be" and subj is not None and nxt is not None and nxt.kind == "ADJP":
            emit("SUBJ_AUXVP_ADJP", f"BE {up(nxt.head)}", site)
    return found


def extract_corpus(records, tagger) -> list[PatternInstance]:
    """Tag every record and extract its patterns, labeled with its concepts."""
    out: list[PatternInstance] = []
    tag_record = getattr(tagger, "tag_record", None)
    for r in records:
        tagged = tag_record(r) if tag_record else tagger.tag(r.text)
        out.extend(extract_patterns(tagged, r.id, r.concepts or ()))
    return out


# statistics ----------------------------------------------------------------

def _id_key(rid: str):
    return (0, int(rid), "") if rid.isdigit() else (1, 0, rid)


def pattern_counts(instances: Iterable[PatternInstance]) -> Counter:
    return Counter(inst.pattern for inst in instances)


def pattern_concept_counts(instances: Iterable[PatternInstance]) -> dict[tuple[str, str], Counter]:
    table: dict[tuple[str, str], Counter] = defaultdict(Counter)
    for inst in instances:
        table[inst.pattern].update(inst.concepts)
    return dict(table)


def pattern_concept_probs(
    instances: Sequence[PatternInstance], min_prob: float = 0.10, top_k: int = 3
) -> dict[tuple[str, str], list[tuple[str, float]]]:
    """P(concept | pattern) = occurrences with the concept / occurrences.

    Each pattern keeps its ``top_k`` concepts with probability >= ``min_prob``,
    highest first, ties by concept name.
    """
    totals = pattern_counts(instances)
    joint = pattern_concept_counts(instances)
    out = {}
    for pat, total in totals.items():
        probs = [(c, k / total) for c, k in joint.get(pat, Counter()).items()]
        probs = [p for p in probs if p[1] >= min_prob]
        probs.sort(key=lambda p: (-p[1], p[0]))
        out[pat] = probs[:top_k]
    return out


@dataclass(frozen=True)
class Diversity:
    unique: int
    total: int
    mean_freq: float
    std_freq: float
    diversity: float


def pattern_diversity(instances: Iterable[PatternInstance], concept: str) -> Diversity:
    """Unique patterns over total occurrences among records carrying ``concept``."""
    freqs = Counter(inst.pattern for inst in instances if concept in inst.concepts)
    if not freqs:
        raise ValueError(f"no pattern occurrences for concept {concept!r}")
    values = list(freqs.values())
    unique, total = len(values), sum(values)
    mean = total / unique
    std = math.sqrt(sum((v - mean) ** 2 for v in values) / unique)
    return Diversity(unique, total, mean, std, unique / total)


@dataclass
class PatternStats:
    counts: Counter
    probs: dict
    examples: dict = field(default_factory=dict)  # pattern -> (record id, text)

    def diversity(self, instances, concept: str) -> Diversity:
        return pattern_diversity(instances, concept)


def compute_stats(
    instances: Sequence[PatternInstance],
    texts: Mapping[str, str] | None = None,
    min_prob: float = 0.10,
    top_k: int = 3,
) -> PatternStats:
    examples: dict = {}
    for inst in instances:
        cur = examples.get(inst.pattern)
        if cur is None or _id_key(inst.record_id) < _id_key(cur):
            examples[inst.pattern] = inst.record_id
    texts = texts or {}
    examples = {p: (rid, texts.get(rid, "")) for p, rid in examples.items()}
    return PatternStats(pattern_counts(instances), pattern_concept_probs(instances, min_prob, top_k), examples)


@dataclass(frozen=True)
class PatternRow:
    freq: int
    template: str
    key: str
    concepts: tuple[tuple[str, float], ...]
    example: str


def top_patterns_report(stats: PatternStats, n: int) -> list[PatternRow]:
    """Top ``n`` patterns by frequency; ties by key, then template."""
    if n <= 0:
        raise ValueError("n must be positive")
    ranked = sorted(stats.counts.items(), key=lambda kv: (-kv[1], kv[0][1], kv[0][0]))
    rows = []
    for (template, key), freq in ranked[:n]:
        rows.append(
            PatternRow(
                freq,
                template,
                key,
                tuple(stats.probs.get((template, key), ())),
                stats.examples.get((template, key), ("", ""))[1],
            )
        )
    return rows


def _concept_cell(concepts) -> str:
    return ", ".join(f"{c} {p:.2f}" for c, p in concepts)


PATTERN_HEADERS = ("freq", "pattern", "concepts", "example")


def _rows(rows: Sequence[PatternRow]):
    for r in rows:
        yield [r.freq, f"{DISPLAY[r.template]} ({r.key})", _concept_cell(r.concepts), r.example]


def patterns_markdown(rows: Sequence[PatternRow]) -> str:
    return markdown_table(PATTERN_HEADERS, _rows(rows))


def patterns_tsv(rows: Sequence[PatternRow]) -> str:
    return csv_text(PATTERN_HEADERS, _rows(rows), delimiter="\t")


DIVERSITY_HEADERS = ("concept", "unique", "total", "mean_freq", "std_freq", "diversity")


def diversity_rows(instances: Sequence[PatternInstance], concepts: Iterable[str]):
    rows = []
    for c in concepts:
        try:
            d = pattern_diversity(instances, c)
        except ValueError:
            continue
        rows.append([c, d.unique, d.total, d.mean_freq, d.std_freq, d.diversity])
    return rows
