import hashlib
import subprocess
import sys

import pytest

from affectkit.cli import main
from affectkit.config import load_config
from affectkit.errors import ConfigError

BASE = """
[paths]
labeled = {labeled}
output_dir = {out}

[experiment]
task = social
model = gbt
features = pos,unigrams
folds = 5
unigram_size = 100

[gbt]
n_estimators = 15
max_depth = 3
"""


def write_config(tmp_path, labeled, extra="", name="run.ini", **fmt):
    text = BASE.format(labeled=labeled, out=fmt.get("out", tmp_path / "out")) + extra
    path = tmp_path / name
    path.write_text(text)
    return path


def digest(directory):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(directory.iterdir())}


def test_cv_end_to_end(tmp_path, labeled_csv):
    cfg = write_config(tmp_path, labeled_csv)
    assert main(["cv", "--config", str(cfg), "--task", "social", "--model", "gbt"]) == 0
    out = tmp_path / "out"
    assert (out / "cv_social_gbt.md").exists()
    assert (out / "cv_social_gbt.json").exists()


def test_cv_is_byte_identical(tmp_path, labeled_csv):
    a = write_config(tmp_path, labeled_csv, name="a.ini", out=tmp_path / "a")
    b = write_config(tmp_path, labeled_csv, name="b.ini", out=tmp_path / "b")
    assert main(["cv", "--config", str(a)]) == 0
    assert main(["cv", "--config", str(b)]) == 0
    assert digest(tmp_path / "a") == digest(tmp_path / "b")


def test_unknown_subcommand_exits_1(capsys):
    assert main(["frobnicate", "--config", "x.ini"]) == 1
    assert "usage" in capsys.readouterr().err


def test_missing_lexicon_exits_2(tmp_path, labeled_csv, caplog):
    cfg = write_config(tmp_path, labeled_csv, extra="")
    text = cfg.read_text().replace("[experiment]", "emolex = missing.tsv\n\n[experiment]")
    cfg.write_text(text)
    assert main(["cv", "--config", str(cfg)]) == 2
    assert "emolex" in caplog.text


def test_emotional_without_lexicon_exits_2(tmp_path, labeled_csv):
    cfg = write_config(tmp_path, labeled_csv)
    assert main(["cv", "--config", str(cfg), "--features", "pos,emotional"]) == 2


def test_bad_data_exits_3(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("hmid,moment,agency,social,concepts\n1,hi,maybe,no,\n")
    cfg = write_config(tmp_path, bad)
    assert main(["cv", "--config", str(cfg)]) == 3


def test_full_command_set(tmp_path, labeled_csv, unlabeled_csv, data_dir):
    extra = """
[patterns]
top_n = 10
"""
    cfg = write_config(tmp_path, labeled_csv, extra=extra)
    text = cfg.read_text().replace(
        "[experiment]",
        f"unlabeled = {unlabeled_csv}\nemolex = {data_dir / 'emolex_small.tsv'}\nmpqa = {data_dir / 'mpqa_small.tff'}\n\n[experiment]",
    )
    cfg.write_text(text)
    c = str(cfg)
    out = tmp_path / "out"
    assert main(["featurize", "--config", c, "--features", "pos,emotional"]) == 0
    assert (out / "features.csv").read_text().startswith("id,pos:CC")
    assert main(["train", "--config", c]) == 0
    assert (out / "model_social_gbt.json").exists()
    assert main(["predict", "--config", c, "--input", str(unlabeled_csv), "--output", str(tmp_path / "p.csv")]) == 0
    assert len((tmp_path / "p.csv").read_text().splitlines()) == 301
    # features differ from the trained model: refused before writing
    assert main(["predict", "--config", c, "--features", "pos", "--input", str(unlabeled_csv)]) == 2
    assert main(["predict", "--config", c, "--model", "logistic", "--input", str(unlabeled_csv)]) == 3
    assert main(["bootstrap", "--config", c]) == 0
    assert main(["cv", "--config", c]) == 0
    assert main(["report", "--config", c]) == 0
    summary = (out / "summary.md").read_text()
    assert "bootstrap" in summary and "## social" in summary
    assert main(["patterns", "--config", c]) == 0
    assert (out / "patterns_top.md").exists() and (out / "patterns_diversity.tsv").exists()


def test_report_without_results_exits_3(tmp_path, labeled_csv):
    cfg = write_config(tmp_path, labeled_csv)
    assert main(["report", "--config", str(cfg)]) == 3


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "affectkit", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "featurize" in proc.stdout


class TestConfig:
    def test_relative_paths_resolve_against_config(self, tmp_path, labeled_csv):
        sub = tmp_path / "conf"
        sub.mkdir()
        (sub / "data.csv").write_bytes(labeled_csv.read_bytes())
        cfg = sub / "r.ini"
        cfg.write_text("[paths]\nlabeled = data.csv\n[experiment]\ntask=agency\nmodel=logistic\nfeatures=pos\n")
        rc = load_config(cfg)
        assert rc.paths["labeled"] == sub / "data.csv"
        assert rc.spec.task == "agency"

    def test_unknown_key_rejected(self, tmp_path):
        cfg = tmp_path / "r.ini"
        cfg.write_text("[experiment]\ntask=agency\nmodel=gbt\nfeatures=pos\ntrees=5\n")
        with pytest.raises(ConfigError, match="trees"):
            load_config(cfg)

    def test_unknown_section_rejected(self, tmp_path):
        cfg = tmp_path / "r.ini"
        cfg.write_text("[svm]\nc=1\n")
        with pytest.raises(ConfigError, match="svm"):
            load_config(cfg, need_spec=False)

    def test_bad_value(self, tmp_path):
        cfg = tmp_path / "r.ini"
        cfg.write_text("[experiment]\ntask=agency\nmodel=gbt\nfeatures=pos\nfolds=ten\n")
        with pytest.raises(ConfigError, match="folds"):
            load_config(cfg)

    def test_overrides_win(self, tmp_path):
        cfg = tmp_path / "r.ini"
        cfg.write_text("[experiment]\ntask=agency\nmodel=gbt\nfeatures=pos\n[cnn]\nregion_sizes=2,3,4,5\n")
        rc = load_config(cfg, {"task": "social", "folds": 3, "features": "pos+unigrams"})
        assert (rc.spec.task, rc.spec.folds, rc.spec.feature_blocks) == ("social", 3, ("pos", "unigrams"))
        assert rc.spec.cnn.region_sizes == (2, 3, 4, 5)

    def test_output_dir_env(self, tmp_path, monkeypatch):
        cfg = tmp_path / "r.ini"
        cfg.write_text("[experiment]\ntask=agency\nmodel=gbt\nfeatures=pos\n")
        monkeypatch.setenv("AFFECTKIT_OUTPUT_DIR", str(tmp_path / "envout"))
        assert load_config(cfg).output_dir == tmp_path / "envout"
