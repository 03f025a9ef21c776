"""Command-line interface.

Exit codes: 0 success, 1 runtime or data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import eda, linear
from .corpus import (ClassLabel, CorpusError, SynthConfig, class_balance, dumps_corpus,
                     load_corpus, synthesize, validate_corpus)
from .crossval import render_report, run_cv
from .pipeline import (MODEL_NAMES, TRANSFORMER_DEFAULTS, EnsembleClassifier,
                       LinearClassifier, TransformerClassifier, build_classifier)
from .textfeat import TfIdfModel
from .transformer import bpe
from .transformer import model as tfm

log = logging.getLogger("scamtext")

OUT_DIR_ENV = "SCAMTEXT_OUT_DIR"
class CommandError(RuntimeError):
    """A runtime failure reported to the user with exit code 1."""


def _fraction(raw: str) -> float:
    value = float(raw)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"must lie strictly between 0 and 1, got {raw}")
    return value


def _positive(raw: str) -> float:
    value = float(raw)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {raw}")
    return value


def _non_negative(raw: str) -> float:
    value = float(raw)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {raw}")
    return value


def _at_least(n: int):
    def parse(raw: str) -> int:
        value = int(raw)
        if value < n:
            raise argparse.ArgumentTypeError(f"must be >= {n}, got {raw}")
        return value
    return parse


def _default_out() -> Path:
    return Path(os.environ.get(OUT_DIR_ENV, "."))


def read_config_file(path) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment, keys use - or _."""
    settings = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CommandError(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        settings[key.replace("-", "_")] = value
    return settings


def _write_all(files: dict[Path, str]) -> None:
    for path, content in files.items():
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(content, encoding="utf-8", newline="")


# ---------------------------------------------------------------------------
# commands


def cmd_synth(args) -> int:
    cfg = SynthConfig(n_total=args.n, scam_fraction=args.scam_fraction, seed=args.seed)
    try:
        corpus = synthesize(cfg)
    except CorpusError as exc:
        raise CommandError(str(exc)) from exc
    out = Path(args.out) if args.out else _default_out() / "corpus.jsonl"
    fmt = "csv" if out.suffix.lower() == ".csv" else "jsonl"
    _write_all({out: dumps_corpus(corpus, fmt)})
    ham, scam = class_balance(corpus)
    print(f"wrote {len(corpus)} messages to {out} (ham={ham}, scam={scam})")
    return 0


def _load_checked(path, allow_single_class=True):
    corpus = load_corpus(path)
    report = validate_corpus(corpus)
    for w in report.warnings:
        log.warning("%s: %s", path, w)
    problems = [v for v in report.violations if not (allow_single_class and v == "single class")]
    if problems:
        raise CommandError(f"{path}: " + "; ".join(problems))
    return corpus


def cmd_eda(args) -> int:
    corpus = _load_checked(args.input)
    summary = eda.summarize(corpus)
    out_dir = Path(args.out_dir) if args.out_dir else _default_out()
    files = {out_dir / "eda.json": eda.summary_to_json(summary) + "\n"}
    for label, s in summary.items():
        files[out_dir / f"{label.value}_length_hist.csv"] = eda.histogram_csv(s.length_histogram)
        files[out_dir / f"{label.value}_digit_hist.csv"] = eda.histogram_csv(s.digit_histogram)
    _write_all(files)
    for label, s in summary.items():
        langs = ", ".join(f"{k}={v:.3f}" for k, v in s.language_composition.items())
        print(f"{label.value}: n={s.count} url_rate={s.url_rate:.4f} "
              f"phone_rate={s.phone_rate:.4f} mean_len={s.mean_length:.1f} ({langs})")
    return 0


def _transformer_options(args) -> dict:
    opts = dict(TRANSFORMER_DEFAULTS)
    for key, attr in (("learning_rate", "tf_lr"), ("epochs", "tf_epochs"),
                      ("optimizer", "tf_optimizer")):
        value = getattr(args, attr, None)
        if value is not None:
            opts[key] = value
    return opts


def _train_config(args) -> linear.TrainConfig:
    return linear.TrainConfig(learning_rate=args.lr, epochs=args.epochs, l2_lambda=args.l2,
                              seed=args.seed, class_weighting=args.class_weighting)


def cmd_crossval(args) -> int:
    models = [m.strip() for m in args.models.split(",") if m.strip()]
    unknown = [m for m in models if m not in MODEL_NAMES]
    if unknown or not models:
        raise _UsageError(f"--models: unknown model(s) {unknown}; choose from {', '.join(MODEL_NAMES)}")
    corpus = _load_checked(args.input, allow_single_class=False)
    summary = run_cv(corpus, k=args.k, seed=args.seed, roster=models, min_df=args.min_df,
                     train_config=_train_config(args),
                     transformer_options=_transformer_options(args))
    out_dir = Path(args.out_dir) if args.out_dir else _default_out()
    text = render_report(summary, "text")
    _write_all({
        out_dir / "cv_report.json": render_report(summary, "json") + "\n",
        out_dir / "cv_report.csv": render_report(summary, "csv"),
        out_dir / "cv_report.txt": text,
    })
    print(text, end="")
    return 0


def cmd_train(args) -> int:
    corpus = _load_checked(args.input, allow_single_class=False)
    clf = build_classifier(args.model, seed=args.seed, min_df=args.min_df,
                           train_config=_train_config(args),
                           transformer_options=_transformer_options(args))
    clf.fit(corpus.texts, corpus.labels)
    out_dir = Path(args.out_dir) if args.out_dir else _default_out()
    if isinstance(clf, TransformerClassifier):
        files = {out_dir / "tokenizer.json": clf.tokenizer.to_json(),
                 out_dir / "model.json": tfm.params_to_json(clf.params, clf.config)}
    else:
        files = {out_dir / "tfidf.json": clf.tfidf.to_json(),
                 out_dir / "model.json": clf.model.to_json()}
    _write_all(files)
    print(f"trained {args.model} on {len(corpus)} messages; wrote {', '.join(map(str, files))}")
    return 0


def load_classifier(model_dir):
    """Rebuild a fitted classifier from a directory written by ``train``."""
    model_dir = Path(model_dir)
    path = model_dir / "model.json"
    if not path.is_file():
        raise CommandError(f"model file not found: {path}")
    raw = path.read_text(encoding="utf-8")
    fmt = json.loads(raw).get("format")
    if fmt == "scamtext.transformer":
        clf = TransformerClassifier()
        clf.params, clf.config = tfm.params_from_json(raw)
        clf.tokenizer = bpe.BpeTokenizer.from_json((model_dir / "tokenizer.json").read_text(encoding="utf-8"))
        clf.max_len = clf.tokenizer.max_len
        return clf
    tfidf = TfIdfModel.from_json((model_dir / "tfidf.json").read_text(encoding="utf-8"))
    if fmt == "scamtext.ensemble":
        clf = EnsembleClassifier()
        clf.model = linear.EnsembleModel.from_json(raw)
        members = (clf.model.logreg, clf.model.svm)
    else:
        m = linear.LinearModel.from_json(raw)
        clf = LinearClassifier(m.kind)
        clf.model = m
        members = (m,)
    for m in members:
        _check_fingerprint(m, tfidf)
    clf.tfidf = tfidf
    return clf


def _check_fingerprint(m: linear.LinearModel, tfidf: TfIdfModel) -> None:
    expected = tfidf.vocabulary.fingerprint()
    if m.vocab_fingerprint is not None and m.vocab_fingerprint != expected:
        raise CommandError(f"vocabulary fingerprint mismatch: model expects "
                           f"{m.vocab_fingerprint}, vocabulary file has {expected}")
    if m.dimension != tfidf.dimension:
        raise CommandError(f"model dimension {m.dimension} != vocabulary size {tfidf.dimension}")


def _read_unlabeled(path) -> list[str]:
    path = Path(path)
    if not path.is_file():
        raise CommandError(f"input file not found: {path}")
    with open(path, encoding="utf-8-sig", newline="") as fh:
        lines = [line.rstrip("\r") for line in fh.read().split("\n")]
    if path.suffix.lower() != ".jsonl":
        return [line for line in lines if line.strip()]
    texts = []
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            texts.append(obj["text"] if isinstance(obj, dict) else str(obj))
        except (json.JSONDecodeError, KeyError) as exc:
            raise CommandError(f"{path}: line {lineno}: {exc}") from exc
    return texts


def cmd_predict(args) -> int:
    clf = load_classifier(args.model_dir)
    texts = _read_unlabeled(args.input)
    scores = clf.scores(texts)
    lines = []
    for text, score in zip(texts, scores):
        label = ClassLabel.SCAM if score >= clf.threshold else ClassLabel.HAM
        # keep one record per line even for multi-line JSONL messages
        shown = text.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n").replace("\r", "\\r")
        lines.append(f"{label.value}\t{float(score):.6f}\t{shown}\n")
    if args.output:
        _write_all({Path(args.output): "".join(lines)})
    else:
        sys.stdout.write("".join(lines))
    return 0


def cmd_inspect_weights(args) -> int:
    model_path, vocab_path = Path(args.model), Path(args.vocab)
    for p in (model_path, vocab_path):
        if not p.is_file():
            raise CommandError(f"file not found: {p}")
    raw = model_path.read_text(encoding="utf-8")
    fmt = json.loads(raw).get("format")
    if fmt == "scamtext.ensemble":
        m = linear.EnsembleModel.from_json(raw).svm
    elif fmt == "scamtext.linear":
        m = linear.LinearModel.from_json(raw)
    else:
        raise CommandError(f"{model_path}: weight inspection needs a linear or ensemble model")
    tfidf = TfIdfModel.from_json(vocab_path.read_text(encoding="utf-8"))
    _check_fingerprint(m, tfidf)
    rows = linear.top_features(m, tfidf.vocabulary, args.k, args.direction)
    lines = ["rank\tterm\tweight"] + [f"{i}\t{t}\t{w:.6f}" for i, (t, w) in enumerate(rows, 1)]
    if args.output:
        _write_all({Path(args.output): "\n".join(lines) + "\n"})
    print("\n".join(lines))
    return 0


# ---------------------------------------------------------------------------
# parser


class _UsageError(Exception):
    pass


def _add_linear_flags(p):
    p.add_argument("--min-df", type=_at_least(1), default=2)
    p.add_argument("--epochs", type=_at_least(1), default=30, help="linear model SGD epochs")
    p.add_argument("--lr", type=_positive, default=0.1, help="linear model learning rate")
    p.add_argument("--l2", type=_non_negative, default=1e-4, help="L2 penalty")
    p.add_argument("--class-weighting", action="store_true")
    p.add_argument("--tf-epochs", type=_at_least(1))
    p.add_argument("--tf-lr", type=_non_negative)
    p.add_argument("--tf-optimizer", choices=("sgd", "adam"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scamtext", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="flat key=value file supplying default flag values")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic labeled corpus")
    p.add_argument("--n", type=_at_least(10), default=SynthConfig.n_total)
    p.add_argument("--scam-fraction", type=_fraction, default=SynthConfig.scam_fraction)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help=f"output file (default ${OUT_DIR_ENV}/corpus.jsonl)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eda", help="structural summary per class")
    p.add_argument("--input")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_eda, required_settings=("input",))

    p = sub.add_parser("crossval", help="stratified k-fold cross-validation")
    p.add_argument("--input")
    p.add_argument("--k", type=_at_least(2), default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--models", default="logreg,svm,ensemble,transformer",
                   help=f"comma-separated subset of {','.join(MODEL_NAMES)}")
    p.add_argument("--out-dir")
    _add_linear_flags(p)
    p.set_defaults(func=cmd_crossval, required_settings=("input",))

    p = sub.add_parser("train", help="fit one model on a whole corpus")
    p.add_argument("--input")
    p.add_argument("--model", choices=("logreg", "svm", "ensemble", "transformer"), default="svm")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir")
    _add_linear_flags(p)
    p.set_defaults(func=cmd_train, required_settings=("input",))

    p = sub.add_parser("predict", help="label unlabeled messages with a trained model")
    p.add_argument("--model-dir")
    p.add_argument("--input")
    p.add_argument("--output")
    p.set_defaults(func=cmd_predict, required_settings=("model_dir", "input"))

    p = sub.add_parser("inspect-weights", help="top weighted TF-IDF terms of a linear model")
    p.add_argument("--model")
    p.add_argument("--vocab")
    p.add_argument("--k", type=_at_least(1), default=20)
    p.add_argument("--direction", choices=("scam", "ham"), default="scam")
    p.add_argument("--output")
    p.set_defaults(func=cmd_inspect_weights, required_settings=("model", "vocab"))
    return parser


def _apply_config(parser, argv) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if args.config:
        settings = read_config_file(args.config)
        explicit = {a.lstrip("-").split("=", 1)[0].replace("-", "_")
                    for a in argv if a.startswith("--")}
        sub = parser._subparsers._group_actions[0].choices[args.command]
        actions = {a.dest: a for a in sub._actions}
        for key, raw in settings.items():
            if key in explicit or key not in actions:
                continue
            action = actions[key]
            if isinstance(action, argparse._StoreTrueAction):
                value = raw.lower() in ("1", "true", "yes", "on")
            else:
                try:
                    value = action.type(raw) if action.type else raw
                except (argparse.ArgumentTypeError, ValueError) as exc:
                    parser.error(f"config {key}: {exc}")
                if action.choices and value not in action.choices:
                    parser.error(f"config {key}: invalid choice {value!r}")
            setattr(args, key, value)
    missing = [s for s in getattr(args, "required_settings", ()) if getattr(args, s, None) is None]
    if missing:
        parser.error("missing required setting(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))
    return args


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except CommandError as exc:
        print(f"scamtext: error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"scamtext: error: {exc}", file=sys.stderr)
        return 2
    except (CommandError, CorpusError, ValueError, OSError, RuntimeError, FloatingPointError) as exc:
        print(f"scamtext: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
