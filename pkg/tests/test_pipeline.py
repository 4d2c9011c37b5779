import dataclasses

import numpy as np
import pytest

from affectkit import pipeline
from affectkit.cnn import CnnConfig
from affectkit.corpus import DEFAULT_SCHEMA, MomentRecord, save_records
from affectkit.embeddings import EmbeddingTable
from affectkit.errors import ConfigError, DataError
from affectkit.gbt import GBTConfig
from affectkit.pipeline import (
    ExperimentSpec,
    Prediction,
    Resources,
    TrainedModel,
    bootstrap_semi_supervised,
    build_featurizer,
    predict_file,
    pseudo_label,
    report_files,
    run_supervised_cv,
    train_full,
)
from affectkit.synthetic import synthetic_corpus
from affectkit.tagger import default_tagger

SMALL_GBT = GBTConfig(n_estimators=10, max_depth=3, learning_rate=0.3)


def spec(**kw):
    base = dict(task="social", model="logistic", feature_blocks=("pos", "unigrams"), folds=4, gbt=SMALL_GBT)
    base.update(kw)
    return ExperimentSpec(**base)


def featurizer(s, records, **res):
    return build_featurizer(s, Resources(tagger=default_tagger(), **res), records, unigram_size=80)


@pytest.fixture(scope="module")
def corpus():
    return synthetic_corpus(160, seed=11, noise=0.02)


@pytest.fixture(scope="module")
def unlabeled():
    return synthetic_corpus(200, seed=12, labeled=False, id_prefix="u")


class TestSpec:
    def test_valid(self):
        assert spec().dense_blocks == ("pos", "unigrams")

    @pytest.mark.parametrize(
        "kw",
        [
            {"task": "mood"},
            {"model": "svm"},
            {"feature_blocks": ()},
            {"feature_blocks": ("pos", "bogus")},
            {"model": "cnn", "feature_blocks": ("pos",)},
            {"model": "gbt", "feature_blocks": ("embedding",)},
            {"folds": 1},
            {"concept_eval": "loo"},
            {"confidence_threshold": 1.5},
        ],
    )
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            spec(**kw)


@pytest.mark.parametrize("model", ["logistic", "gbt"])
def test_supervised_cv_folds_reassemble_gold(corpus, model, monkeypatch):
    seen = []
    real = pipeline.score_fold

    def spy(s, pred, gold_records):
        seen.append([r.id for r in gold_records])
        return real(s, pred, gold_records)

    monkeypatch.setattr(pipeline, "score_fold", spy)
    s = spec(model=model)
    result = run_supervised_cv(s, corpus, featurizer(s, corpus))
    assert len(result.folds) == 4
    flat = [rid for fold in seen for rid in fold]
    assert sorted(flat) == sorted(r.id for r in corpus)
    assert result.aggregate.f1 > 0.8


def test_bootstrap_never_tests_on_pseudo(corpus, unlabeled, monkeypatch):
    seen = []
    real = pipeline.score_fold

    def spy(s, pred, gold_records):
        seen.extend(gold_records)
        return real(s, pred, gold_records)

    monkeypatch.setattr(pipeline, "score_fold", spy)
    s = spec()
    fz = featurizer(s, corpus)
    result = bootstrap_semi_supervised(s, corpus, unlabeled, fz)
    assert result.n_pseudo == len(unlabeled)
    assert all(r.is_gold for r in seen)
    assert not {r.id for r in seen} & {r.id for r in unlabeled}


def test_bootstrap_rejects_id_collision(corpus):
    s = spec()
    clash = [MomentRecord(corpus[0].id, "I went home.")]
    with pytest.raises(DataError, match="collide"):
        bootstrap_semi_supervised(s, corpus, clash, featurizer(s, corpus))


def test_confidence_threshold_drops_records(corpus, unlabeled):
    s = spec(confidence_threshold=0.99)
    fz = featurizer(s, corpus)
    model = train_full(s, corpus, fz)
    kept = pseudo_label(s, model, unlabeled, fz.transform(unlabeled))
    assert len(kept) < len(unlabeled)
    assert all(not r.is_gold for r in kept)


def test_perfect_model_pseudo_labels_equal_gold(corpus):
    class Oracle:
        def predict(self, feats):
            labels = [r.social for r in corpus]
            return Prediction(labels, np.array(labels, dtype=float), np.ones(len(labels)))

    s = spec()
    unl = [MomentRecord("u" + r.id, r.text) for r in corpus]
    fz = featurizer(s, corpus)
    out = pseudo_label(s, Oracle(), unl, fz.transform(unl))
    assert [r.social for r in out] == [r.social for r in corpus]


def test_concepts_gbt_with_per_concept_rows(corpus):
    s = spec(task="concepts", model="gbt")
    result = run_supervised_cv(s, corpus, featurizer(s, corpus))
    names = [r.concept for r in result.concept_rows]
    assert names and len(names) == len(set(names))
    f1s = [r.f1 for r in result.concept_rows]
    assert f1s == sorted(f1s, reverse=True)
    assert "cv_concepts_gbt_concepts.md" in report_files(result, "cv")


def test_concepts_holdout(corpus):
    s = spec(task="concepts", model="logistic", concept_eval="holdout")
    result = run_supervised_cv(s, corpus, featurizer(s, corpus))
    assert len(result.folds) == 1 and result.plan is None
    assert result.folds[0].n == 160 - 107


def random_embeddings(records, dim=8, seed=0):
    from affectkit.text import tokenize

    vocab = sorted({t.lower() for r in records for t in tokenize(r.text)})
    rng = np.random.default_rng(seed)
    return EmbeddingTable(dim, {w: i for i, w in enumerate(vocab)}, rng.normal(size=(len(vocab), dim)))


def test_cnn_bundle_round_trip(corpus, tmp_path):
    emb = random_embeddings(corpus)
    cnn = CnnConfig(region_sizes=(2, 3), maps_per_region=8, embedding_dim=8, max_len=20, epochs=3, batch_size=20)
    s = spec(model="cnn", feature_blocks=("embedding", "pos"), cnn=cnn)
    fz = featurizer(s, corpus, embeddings=emb)
    model = train_full(s, corpus, fz)
    path = tmp_path / "m.json"
    path.write_text(model.dumps())
    again = TrainedModel.load(path)
    feats = fz.transform(corpus[:30])
    a, b = model.predict(feats), again.predict(feats)
    assert a.labels == b.labels
    assert np.array_equal(a.scores, b.scores)


def test_predict_file(corpus, tmp_path):
    s = spec()
    fz = featurizer(s, corpus)
    model = train_full(s, corpus, fz)
    inp = tmp_path / "in.csv"
    save_records(synthetic_corpus(7, seed=5, labeled=False, id_prefix="x"), inp, DEFAULT_SCHEMA)
    out = tmp_path / "out.csv"
    assert predict_file(model, fz, inp, out) == 7
    lines = out.read_text().splitlines()
    assert lines[0] == "id,social,prob_social" and len(lines) == 8
    assert all(0 <= float(line.split(",")[2]) <= 1 for line in lines[1:])


def test_predict_file_empty_input(corpus, tmp_path):
    s = spec()
    fz = featurizer(s, corpus)
    model = train_full(s, corpus, fz)
    inp = tmp_path / "in.csv"
    inp.write_text("hmid,moment\n")
    out = tmp_path / "out.csv"
    assert predict_file(model, fz, inp, out) == 0
    assert out.read_text() == "id,social,prob_social\n"


def test_predict_file_fingerprint_mismatch(corpus, tmp_path):
    s = spec()
    model = train_full(s, corpus, featurizer(s, corpus))
    other = build_featurizer(s, Resources(tagger=default_tagger()), corpus, pos_extra=True, unigram_size=80)
    inp = tmp_path / "in.csv"
    save_records(corpus[:3], inp, DEFAULT_SCHEMA)
    out = tmp_path / "out.csv"
    with pytest.raises(ConfigError):
        predict_file(model, other, inp, out)
    assert not out.exists()


def test_reports_deterministic(corpus):
    s = spec(model="gbt")
    a = report_files(run_supervised_cv(s, corpus, featurizer(s, corpus)), "cv")
    b = report_files(run_supervised_cv(s, corpus, featurizer(s, corpus)), "cv")
    assert a == b


def test_fingerprint_tracks_configuration(corpus):
    s = spec()
    a = featurizer(s, corpus)
    b = featurizer(dataclasses.replace(s, feature_blocks=("pos",)), corpus)
    assert a.fingerprint() == featurizer(s, corpus).fingerprint()
    assert a.fingerprint() != b.fingerprint()
