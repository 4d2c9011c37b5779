import random

import pytest

from affectkit.errors import DataError
from affectkit.tagger import PerceptronTagger, PretaggedTagger, default_tagger, seed_corpus, train_tagger
from affectkit.text import TaggedText, tokenize


def golden_cases(data_dir):
    cases = []
    for line in (data_dir / "tokenize_golden.tsv").read_text("utf-8").splitlines():
        if line and not line.startswith("#"):
            text, expected = line.split("\t")
            cases.append((text, expected.split(" ")))
    return cases


def test_golden_file_has_50_sentences(data_dir):
    assert len(golden_cases(data_dir)) == 50


def test_tokenize_golden(data_dir):
    mismatches = [(t, e, tokenize(t)) for t, e in golden_cases(data_dir) if tokenize(t) != e]
    assert not mismatches


def test_tokenize_simple():
    assert tokenize("I bought a new laptop.") == ["I", "bought", "a", "new", "laptop", "."]


def test_contraction_modes():
    assert tokenize("didn't") == ["did", "n't"]
    assert tokenize("didn't", contractions="keep") == ["didn't"]


@pytest.mark.parametrize("text", ["", "   ", None])
def test_tokenize_empty(text):
    with pytest.raises(DataError):
        tokenize(text)


def test_tagged_text_round_trip():
    t = TaggedText.from_string("I/PRP went/VBD ./.")
    assert t.tokens == ("I", "went", ".")
    assert TaggedText.from_string(t.to_string()) == t


def test_tagged_text_rejects_unknown_tag():
    with pytest.raises(DataError):
        TaggedText.from_string("I/XYZ")


def test_tagger_memorizes_one_sentence():
    sent = TaggedText.from_string("The/DT dog/NN barked/VBD loudly/RB ./.")
    tagger = train_tagger([sent], epochs=5, seed=0, freq_thresh=100)
    assert tagger.accuracy([sent]) == 1.0


def test_tagger_deterministic_and_serializable(tmp_path):
    corpus = seed_corpus()[:60]
    a = train_tagger(corpus, epochs=3, seed=7)
    b = train_tagger(corpus, epochs=3, seed=7)
    assert a.to_dict() == b.to_dict()
    a.save(tmp_path / "t.json")
    c = PerceptronTagger.load(tmp_path / "t.json")
    assert c.to_dict() == a.to_dict()
    text = "I went to the park with my daughter."
    assert c.tag(text) == a.tag(text)


def test_seed_tagger_held_out():
    # small bundled corpus, so the bar is lower than for a full treebank sample
    corpus = seed_corpus()
    rng = random.Random(0)
    idx = list(range(len(corpus)))
    rng.shuffle(idx)
    cut = int(0.8 * len(idx))
    train = [corpus[i] for i in idx[:cut]]
    test = [corpus[i] for i in idx[cut:]]
    tagger = train_tagger(train, epochs=10, seed=0, freq_thresh=3)
    assert tagger.accuracy(test) >= 0.85


def test_default_tagger_on_common_moment():
    tagged = default_tagger().tag("I went for a walk with my wife.")
    assert tagged.tags == ("PRP", "VBD", "IN", "DT", "NN", "IN", "PRP$", "NN", ".")


def test_pretagged_tagger(tmp_path):
    from affectkit.corpus import MomentRecord

    p = tmp_path / "tagged.txt"
    p.write_text("r1\tI/PRP ran/VBD ./.\n", encoding="utf-8")
    tagger = PretaggedTagger.from_file(p)
    assert tagger.tag_record(MomentRecord("r1", "whatever")).tags == ("PRP", "VBD", ".")
    with pytest.raises(DataError):
        tagger.tag_record(MomentRecord("r2", "I ran."))
    fallback = PretaggedTagger.from_file(p, fallback=default_tagger())
    assert len(fallback.tag_record(MomentRecord("r2", "I ran."))) == 3


def test_held_out_accuracy_on_external_corpus():
    """>= 0.90 on a held-out 10k-token sample of a public tagged corpus."""
    import os
    from pathlib import Path

    from affectkit.text import read_tagged_corpus

    path = os.environ.get("AFFECTKIT_TAGGER_CORPUS")
    if not path or not Path(path).exists():
        pytest.skip("set AFFECTKIT_TAGGER_CORPUS to a word/TAG corpus")
    corpus = read_tagged_corpus(path)
    rng = random.Random(0)
    rng.shuffle(corpus)
    test, n_tokens = [], 0
    while n_tokens < 10_000 and len(test) < len(corpus) // 2:
        test.append(corpus[len(test)])
        n_tokens += len(test[-1])
    train = corpus[len(test):]
    assert n_tokens >= 10_000, "corpus too small for a 10k-token held-out sample"
    assert train_tagger(train, epochs=5, seed=0).accuracy(test) >= 0.90
