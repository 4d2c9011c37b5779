"""Command-line entry point: ``affectkit <command> --config run.ini [overrides]``.

Exit codes: 0 success, 1 usage, 2 configuration, 3 input data, 4 runtime.
Logs go to stderr; artifacts are written atomically under the output dir.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import RunConfig, load_config
from .corpus import CONCEPTS, load_labeled, load_profiles, load_unlabeled
from .embeddings import load_embeddings
from .errors import AffectError, ConfigError, DataError
from .evaluation import csv_text, markdown_table
from .fileio import atomic_write_text
from .lexicon import load_lexicon
from .patterns import (
    DIVERSITY_HEADERS,
    compute_stats,
    diversity_rows,
    extract_corpus,
    patterns_markdown,
    patterns_tsv,
    top_patterns_report,
)
from .pipeline import (
    Featurizer,
    Resources,
    TrainedModel,
    bootstrap_semi_supervised,
    build_featurizer,
    predict_file,
    report_files,
    run_supervised_cv,
    summary_table,
    train_full,
    write_reports,
)
from .profile import load_language_table
from .tagger import PerceptronTagger, PretaggedTagger, default_tagger
from .text import tokenize

log = logging.getLogger("affectkit")

COMMANDS = ("featurize", "train", "cv", "bootstrap", "predict", "patterns", "report")
EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_DATA, EXIT_RUNTIME = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="affectkit", description="Affect classification experiments on happy-moment texts.")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True
    helps = {
        "featurize": "write the dense feature matrix of the labeled records",
        "train": "train one model on all labeled records and save it",
        "cv": "k-fold cross-validation on gold records",
        "bootstrap": "self-training with pseudo-labeled unlabeled records",
        "predict": "label an input file with a saved model",
        "patterns": "extract syntactic patterns and their statistics",
        "report": "collect result summaries into one Markdown table",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", required=True, help="INI run configuration")
        p.add_argument("--seed", type=int)
        p.add_argument("--task", choices=("agency", "social", "concepts"))
        p.add_argument("--model", choices=("logistic", "gbt", "cnn"))
        p.add_argument("--features", help="comma-separated feature blocks")
        p.add_argument("--folds", type=int)
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "predict":
            p.add_argument("--input", help="records to label (overrides [paths] predict_input)")
            p.add_argument("--output", help="prediction CSV (overrides [paths] predict_output)")
    return parser


# resources -----------------------------------------------------------------

def _tagger(cfg: RunConfig):
    tagger = default_tagger()
    if "tagger" in cfg.paths:
        try:
            tagger = PerceptronTagger.load(cfg.paths["tagger"])
        except (OSError, ValueError) as exc:
            raise DataError(f"cannot load tagger {cfg.paths['tagger']}: {exc}") from None
    if "pretagged" in cfg.paths:
        return PretaggedTagger.from_file(cfg.paths["pretagged"], fallback=tagger)
    return tagger


def _labeled(cfg: RunConfig):
    cfg.require("labeled")
    schema = dict(cfg.schema)
    return load_labeled(cfg.paths["labeled"], schema, cfg.concept_separator)


def _resources(cfg: RunConfig, blocks, texts) -> Resources:
    res = Resources(tagger=_tagger(cfg))
    if "emotional" in blocks:
        lexicons = []
        for key, fmt in (("liwc", "liwc_dic"), ("emolex", "emolex_tsv"), ("mpqa", "mpqa_clues")):
            if key in cfg.paths:
                lexicons.append(load_lexicon(cfg.paths[key], fmt))
        if not lexicons:
            raise ConfigError("the emotional block needs [paths] emolex, mpqa or liwc")
        res.lexicons = lexicons
    if "profile" in blocks:
        source = cfg.paths.get("profiles") or cfg.paths.get("labeled")
        res.profiles = load_profiles(source, cfg.profile_schema) if source else {}
        res.language_table = load_language_table(cfg.paths.get("language_table"))
    if "embedding" in blocks:
        cfg.require("embeddings")
        vocab = {t.lower() for text in texts for t in tokenize(text)}
        res.embeddings = load_embeddings(cfg.paths["embeddings"], vocab=vocab)
        log.info("loaded %d embedding vectors of width %d", len(res.embeddings), res.embeddings.dim)
    return res


def _featurizer(cfg: RunConfig, records, extra_texts=()) -> Featurizer:
    spec = cfg.spec
    res = _resources(cfg, spec.feature_blocks, [r.text for r in records] + list(extra_texts))
    return build_featurizer(spec, res, records, cfg.pos_extra, cfg.unigram_size)


def _model_path(cfg: RunConfig) -> Path:
    return cfg.paths.get("model") or cfg.output_dir / f"model_{cfg.spec.task}_{cfg.spec.model}.json"


# commands ------------------------------------------------------------------

def cmd_featurize(cfg: RunConfig) -> None:
    records = _labeled(cfg)
    fz = _featurizer(cfg, records)
    feats = fz.transform(records)
    rows = [[rid] + [repr(float(v)) for v in row] for rid, row in zip(feats.ids, feats.dense)]
    out = cfg.output_dir
    atomic_write_text(out / "features.csv", csv_text(["id"] + fz.names, rows))
    meta = {"fingerprint": fz.fingerprint(), "featurizer": fz.describe(), "n": len(records)}
    atomic_write_text(out / "features.json", json.dumps(meta, sort_keys=True, indent=1) + "\n")
    log.info("wrote %d feature rows of width %d", len(records), len(fz.names))


def cmd_train(cfg: RunConfig) -> None:
    records = _labeled(cfg)
    model = train_full(cfg.spec, records, _featurizer(cfg, records))
    path = atomic_write_text(_model_path(cfg), model.dumps())
    log.info("saved model to %s", path)


def cmd_cv(cfg: RunConfig) -> None:
    records = _labeled(cfg)
    result = run_supervised_cv(cfg.spec, records, _featurizer(cfg, records))
    for p in write_reports(report_files(result, "cv"), cfg.output_dir):
        log.info("wrote %s", p)
    log.info("mean macro-F1 %.4f", result.aggregate.f1)


def cmd_bootstrap(cfg: RunConfig) -> None:
    records = _labeled(cfg)
    cfg.require("unlabeled")
    unlabeled = load_unlabeled(cfg.paths["unlabeled"], cfg.schema)
    fz = _featurizer(cfg, records, [r.text for r in unlabeled])
    result = bootstrap_semi_supervised(cfg.spec, records, unlabeled, fz)
    for p in write_reports(report_files(result, "bootstrap"), cfg.output_dir):
        log.info("wrote %s", p)
    log.info("mean macro-F1 %.4f with %d pseudo-labeled records", result.aggregate.f1, result.n_pseudo)


def cmd_predict(cfg: RunConfig, args) -> None:
    inp = Path(args.input) if args.input else cfg.paths.get("predict_input")
    if inp is None:
        raise ConfigError("[paths] predict_input (or --input) is required for predict")
    if not inp.exists():
        raise DataError(f"input file not found: {inp}")
    model = TrainedModel.load(_model_path(cfg))
    spec = cfg.spec
    if (model.task, model.kind) != (spec.task, spec.model):
        raise ConfigError(f"model file holds a {model.kind} {model.task} model, config asks for {spec.model} {spec.task}")
    records = load_unlabeled(inp, cfg.schema)
    res = _resources(cfg, spec.feature_blocks, [r.text for r in records])
    vocab = model.featurizer_description.get("unigrams")
    fz = Featurizer(spec.feature_blocks, res, cfg.pos_extra, vocab, spec.cnn.max_len)
    out = Path(args.output) if args.output else cfg.paths.get("predict_output")
    out = out or cfg.output_dir / f"predictions_{spec.task}_{spec.model}.csv"
    n = predict_file(model, fz, inp, out, cfg.schema)
    log.info("wrote %d predictions to %s", n, out)


def cmd_patterns(cfg: RunConfig) -> None:
    records = _labeled(cfg)
    instances = extract_corpus(records, _tagger(cfg))
    stats = compute_stats(instances, {r.id: r.text for r in records}, cfg.patterns_min_prob, cfg.patterns_top_k)
    rows = top_patterns_report(stats, cfg.patterns_top_n)
    out = cfg.output_dir
    atomic_write_text(out / "patterns_top.md", patterns_markdown(rows))
    atomic_write_text(out / "patterns_top.tsv", patterns_tsv(rows))
    drows = diversity_rows(instances, CONCEPTS)
    atomic_write_text(out / "patterns_diversity.md", markdown_table(DIVERSITY_HEADERS, drows))
    atomic_write_text(out / "patterns_diversity.tsv", csv_text(DIVERSITY_HEADERS, drows, delimiter="\t"))
    log.info("%d pattern occurrences, %d distinct", len(instances), len(stats.counts))


def cmd_report(cfg: RunConfig) -> None:
    out = cfg.output_dir
    summaries = []
    for p in sorted(out.glob("*.json")) if out.exists() else []:
        try:
            d = json.loads(p.read_text("utf-8"))
        except json.JSONDecodeError:
            continue
        if isinstance(d, dict) and d.get("kind") in ("cv", "bootstrap") and "aggregate" in d:
            summaries.append(d)
    if not summaries:
        raise DataError(f"no cv or bootstrap results found in {out}")
    atomic_write_text(out / "summary.md", summary_table(summaries))
    log.info("summarized %d results into %s", len(summaries), out / "summary.md")


def _setup_logging(verbose: bool) -> None:
    root = logging.getLogger()
    for h in list(root.handlers):
        if getattr(h, "_affectkit", False):
            root.removeHandler(h)
    handler = logging.StreamHandler(sys.stderr)
    handler._affectkit = True
    handler.setFormatter(logging.Formatter("level=%(levelname)s logger=%(name)s msg=%(message)s"))
    root.addHandler(handler)
    root.setLevel(logging.DEBUG if verbose else logging.INFO)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    _setup_logging(args.verbose)
    overrides = {"task": args.task, "model": args.model, "features": args.features, "folds": args.folds, "seed": args.seed}
    try:
        need_spec = args.command not in ("patterns", "report")
        cfg = load_config(args.config, overrides, need_spec=need_spec)
        if args.command == "predict":
            cmd_predict(cfg, args)
        else:
            globals()[f"cmd_{args.command}"](cfg)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except DataError as exc:
        log.error("data error: %s", exc)
        return EXIT_DATA
    except AffectError as exc:
        log.error("runtime error: %s", exc)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001
        log.exception("unexpected failure: %s", exc)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
