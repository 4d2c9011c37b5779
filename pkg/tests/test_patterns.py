import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from affectkit.corpus import MomentRecord
from affectkit.patterns import (
    PatternInstance,
    compute_stats,
    diversity_rows,
    extract_corpus,
    extract_patterns,
    pattern_concept_probs,
    pattern_diversity,
    patterns_markdown,
    top_patterns_report,
)
from affectkit.tagger import default_tagger
from affectkit.text import TaggedText


def pats(text):
    return {(p.template, p.key) for p in extract_patterns(default_tagger().tag(text))}


def tagged_pats(line):
    return {(p.template, p.key) for p in extract_patterns(TaggedText.from_string(line))}


def test_walk_with_wife():
    found = pats("I went for a walk with my wife.")
    assert ("SUBJ_ACTVP", "WENT") in found
    assert ("ADJ_NOUN", "MY WIFE") in found


def test_bought_laptop():
    assert ("ACTVP_DOBJ", "BOUGHT") in pats("I bought a new laptop.")


def test_be_happy():
    assert ("SUBJ_AUXVP_ADJP", "BE HAPPY") in pats("I was happy to see some friends")


def test_hand_tagged_rules():
    assert ("SUBJ_AUXVP_DOBJ", "HAVE I") in tagged_pats("I/PRP had/VBD a/DT great/JJ dinner/NN ./.")
    assert ("ACTVP_PREP_NP", "WENT TO") in tagged_pats("We/PRP went/VBD to/TO church/NN ./.")
    passive = tagged_pats("I/PRP was/VBD promoted/VBN ./.")
    assert ("SUBJ_ACTVP", "PROMOTED") not in passive


def test_each_template_fires_once_per_site():
    inst = extract_patterns(TaggedText.from_string("I/PRP bought/VBD a/DT book/NN ./."))
    keys = [(p.template, p.key) for p in inst]
    assert len(keys) == len(set(keys))


def make(template, key, rid, *concepts):
    return PatternInstance(template, key, rid, frozenset(concepts))


def test_concept_probability_ratio():
    inst = [make("ACTVP_DOBJ", "BOUGHT", str(i), "Shopping" if i < 6 else "Food") for i in range(10)]
    probs = pattern_concept_probs(inst)
    assert probs[("ACTVP_DOBJ", "BOUGHT")] == [("Shopping", 0.6), ("Food", 0.4)]


def test_probabilities_below_threshold_dropped():
    concepts = ["Food", "Family", "Career", "Party", "Weather", "Religion", "Romance", "Animals", "Exercise", "Vacation", "Technology"]
    inst = [make("SUBJ_ACTVP", "WENT", str(i), c) for i, c in enumerate(concepts)]
    assert pattern_concept_probs(inst)[("SUBJ_ACTVP", "WENT")] == []


def test_diversity():
    inst = [make("T", "A", "1", "Food"), make("T", "A", "2", "Food"), make("T", "B", "3", "Food")]
    d = pattern_diversity(inst, "Food")
    assert (d.unique, d.total) == (2, 3)
    assert d.diversity == pytest.approx(2 / 3)
    assert d.mean_freq == 1.5 and d.std_freq == 0.5
    unique = [make("T", k, k, "Food") for k in "ABCD"]
    assert pattern_diversity(unique, "Food").diversity == 1.0
    with pytest.raises(ValueError):
        pattern_diversity(inst, "Religion")


def test_top_report_ordering_and_examples():
    inst = [
        make("SUBJ_ACTVP", "WENT", "10", "Family"),
        make("SUBJ_ACTVP", "WENT", "9", "Family"),
        make("ACTVP_DOBJ", "ATE", "3", "Food"),
        make("SUBJ_ACTVP", "ATE", "4", "Food"),
    ]
    texts = {"10": "ten", "9": "nine", "3": "three", "4": "four"}
    rows = top_patterns_report(compute_stats(inst, texts), 10)
    assert [(r.template, r.key, r.freq) for r in rows] == [
        ("SUBJ_ACTVP", "WENT", 2),
        ("ACTVP_DOBJ", "ATE", 1),
        ("SUBJ_ACTVP", "ATE", 1),
    ]
    assert rows[0].example == "nine"  # numeric ids compare as numbers
    assert len(top_patterns_report(compute_stats(inst, texts), 1)) == 1
    with pytest.raises(ValueError):
        top_patterns_report(compute_stats(inst), 0)
    assert "<subj> ActVp (WENT)" in patterns_markdown(rows)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("ABCD"), st.sampled_from(["Food", "Family", "Religion"])), min_size=1, max_size=40),
       st.integers(0, 1000))
def test_stats_insensitive_to_order(pairs, seed):
    inst = [make("T", k, str(i), c) for i, (k, c) in enumerate(pairs)]
    shuffled = inst[:]
    random.Random(seed).shuffle(shuffled)
    a, b = compute_stats(inst), compute_stats(shuffled)
    assert a.counts == b.counts and a.probs == b.probs and a.examples == b.examples
    assert top_patterns_report(a, 5) == top_patterns_report(b, 5)
    assert diversity_rows(inst, ["Food", "Family", "Religion"]) == diversity_rows(shuffled, ["Food", "Family", "Religion"])


def test_extract_corpus_carries_concepts():
    recs = [MomentRecord("1", "I bought a new laptop.", concepts=frozenset({"Technology", "Shopping"}))]
    inst = extract_corpus(recs, default_tagger())
    assert inst and all(i.concepts == frozenset({"Technology", "Shopping"}) and i.record_id == "1" for i in inst)


def test_diversity_std_is_population():
    inst = [make("T", "A", str(i), "Food") for i in range(3)] + [make("T", "B", "9", "Food")]
    d = pattern_diversity(inst, "Food")
    assert d.std_freq == pytest.approx(math.sqrt(((3 - 2) ** 2 + (1 - 2) ** 2) / 2))
