"""Template-generated happy moments with labels decided by their wording.

The agency label follows the main verb (chosen from disjoint agentive and
non-agentive pools), the social label follows whether a companion phrase is
present, and the concept follows the topic noun. The corpus is therefore
separable by lexical cues, which makes it a controlled test bed for the
training pipeline. ``noise`` flips each binary label with that probability.
"""

from __future__ import annotations

import numpy as np

from .corpus import MomentRecord

_TOPICS = {
    "Food": ["a delicious dinner", "a homemade pizza", "a chocolate cake", "a big breakfast", "some fresh pasta"],
    "Shopping": ["a new jacket", "some nice shoes", "a great deal at the mall", "a birthday present", "new furniture"],
    "Career": ["a big project at work", "a job interview", "a client presentation", "the quarterly report"],
    "Exercise": ["a long run in the park", "a hard workout at the gym", "a yoga class", "a bike ride"],
    "Technology": ["a new laptop", "a video game", "a phone app", "a computer upgrade"],
    "Religion": ["a church service", "a prayer meeting", "a temple visit", "a bible study"],
    "Entertainment": ["a funny movie", "a live concert", "a new TV show", "a comedy show"],
    "Animals": ["a puppy", "my cat", "a walk with the dog", "some birds at the lake"],
}

_AGENTIVE = {
    "Food": ["cooked", "baked", "prepared", "made"],
    "Shopping": ["bought", "picked", "ordered", "found"],
    "Career": ["finished", "completed", "planned", "organized"],
    "Exercise": ["finished", "completed", "started", "tried"],
    "Technology": ["bought", "built", "installed", "fixed"],
    "Religion": ["attended", "organized", "planned", "joined"],
    "Entertainment": ["watched", "planned", "picked", "chose"],
    "Animals": ["adopted", "fed", "trained", "rescued"],
}

_PASSIVE = [
    "I was surprised by",
    "I was invited to",
    "I was given",
    "It was nice to receive",
    "Out of the blue I received",
    "I was treated to",
]

_COMPANIONS = [
    "with my wife",
    "with my husband",
    "with my friends",
    "with my brother",
    "with my mom",
    "with my coworkers",
    "with my kids",
    "together with my family",
]
_ALONE = ["by myself", "on my own", "alone", "", "", "today", "this morning", "last night"]


def synthetic_record(rng: np.random.Generator, rid: str, noise: float = 0.0, labeled: bool = True) -> MomentRecord:
    concept = _TOPICS_KEYS[rng.integers(len(_TOPICS_KEYS))]
    obj = _TOPICS[concept][rng.integers(len(_TOPICS[concept]))]
    agency = bool(rng.random() < 0.7)
    social = bool(rng.random() < 0.5)
    if agency:
        verbs = _AGENTIVE[concept]
        head = f"I {verbs[rng.integers(len(verbs))]}"
    else:
        head = _PASSIVE[rng.integers(len(_PASSIVE))]
    tail = _COMPANIONS[rng.integers(len(_COMPANIONS))] if social else _ALONE[rng.integers(len(_ALONE))]
    text = " ".join(p for p in (head, obj, tail) if p) + "."
    if noise > 0:
        if rng.random() < noise:
            agency = not agency
        if rng.random() < noise:
            social = not social
    if not labeled:
        return MomentRecord(id=rid, text=text)
    return MomentRecord(id=rid, text=text, agency=agency, social=social, concepts=frozenset([concept]))


_TOPICS_KEYS = tuple(_TOPICS)


def synthetic_corpus(
    n: int,
    seed: int = 0,
    labeled: bool = True,
    noise: float = 0.0,
    id_prefix: str = "s",
) -> list[MomentRecord]:
    rng = np.random.default_rng(seed)
    return [synthetic_record(rng, f"{id_prefix}{i}", noise, labeled) for i in range(n)]
