"""Command-line entry point wiring the pipeline into reproducible runs.

Every run writes its fully-resolved configuration and a checksum
manifest of its inputs into the output directory, so runs can be
compared and replayed byte for byte. Flag values win over config-file
values, which win over built-in defaults; all randomness flows from the
single ``--seed``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

from . import corpus, datagen, detect
from .annotation import (
    LabelStore,
    ServiceState,
    agreement_report,
    make_server,
    merge_label_files,
    read_tasks,
    sample_study,
    write_tasks,
)
from .embeddings import load_vectors
from .manipulate import DEFAULT_TARGET_POS, ManipulationConfig

log = logging.getLogger("lexswap")

DATA_DIR_ENV = "LEXSWAP_DATA_DIR"


class CliError(Exception):
    """Operational failure reported with exit code 1."""


# --------------------------------------------------------------------
# Small helpers
# --------------------------------------------------------------------

def resolve_input(path: str) -> Path:
    """Resolve an input path, falling back to $LEXSWAP_DATA_DIR."""
    p = Path(path)
    if p.is_absolute() or p.exists():
        return p
    base = os.environ.get(DATA_DIR_ENV)
    if base:
        candidate = Path(base) / p
        if candidate.exists():
            return candidate
    return p


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_run_metadata(out_dir: Path, config: dict, inputs: list[Path]) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.json").write_text(
        json.dumps(config, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    manifest = {
        "inputs": {
            str(p): {"sha256": _sha256(p), "bytes": p.stat().st_size}
            for p in sorted(set(inputs))
        }
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(
        json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8")


def _parse_ratios(raw: str) -> tuple[float, float, float]:
    parts = raw.split(",")
    if len(parts) != 3:
        raise CliError(f"ratios must be three comma-separated numbers: {raw!r}")
    try:
        return tuple(float(x) for x in parts)  # type: ignore[return-value]
    except ValueError:
        raise CliError(f"bad ratio value in {raw!r}") from None


def _parse_ngrams(raw: str) -> tuple[int, int]:
    parts = raw.split(",")
    if len(parts) != 2:
        raise CliError(f"ngrams must be 'low,high': {raw!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise CliError(f"bad ngram bound in {raw!r}") from None


def _merge_config(args: argparse.Namespace, defaults: dict) -> dict:
    """CLI flags > config file > defaults, per option name."""
    file_cfg: dict = {}
    if getattr(args, "config", None):
        cfg_path = resolve_input(args.config)
        try:
            file_cfg = json.loads(cfg_path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read config file {cfg_path}: {exc}")
        if not isinstance(file_cfg, dict):
            raise CliError("config file must contain a JSON object")
    resolved = {}
    for key, default in defaults.items():
        cli_value = getattr(args, key, None)
        if cli_value is not None:
            resolved[key] = cli_value
        elif key in file_cfg:
            resolved[key] = file_cfg[key]
        else:
            resolved[key] = default
    return resolved


def _manipulation_config(cfg: dict) -> ManipulationConfig:
    target = cfg["target_pos"]
    if isinstance(target, str):
        target = [t for t in target.split(",") if t]
    return ManipulationConfig(
        target_pos=frozenset(target),
        ratio_threshold=cfg["ratio_threshold"],
        candidates_per_token=cfg["candidates"],
        number_variants=cfg["number_variants"],
        max_variants_per_sentence=cfg["max_variants"],
        neighbor_scan_limit=cfg["scan_limit"],
        seed=cfg["seed"],
    )


# --------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------

GENERATE_DEFAULTS = {
    "seed": 0,
    "ratios": "0.8,0.1,0.1",
    "per_class": None,
    "exhaustive": False,
    "target_pos": ",".join(sorted(DEFAULT_TARGET_POS)),
    "ratio_threshold": 0.5,
    "candidates": 5,
    "number_variants": 3,
    "max_variants": 75,
    "scan_limit": 50,
    "workers": 1,
}


def cmd_generate(args: argparse.Namespace) -> int:
    cfg = _merge_config(args, GENERATE_DEFAULTS)
    corpus_path = resolve_input(args.corpus)
    vectors_path = resolve_input(args.vectors)
    out_dir = Path(args.out)
    ratios = _parse_ratios(cfg["ratios"])
    sentences = corpus.read_pos_corpus(corpus_path)
    index = load_vectors(vectors_path)
    manip = _manipulation_config(cfg)
    if cfg["exhaustive"]:
        records, stats = datagen.exhaustive_dataset(
            sentences, index, manip, ratios, workers=cfg["workers"])
    else:
        if cfg["per_class"] is None:
            raise CliError("either --per-class or --exhaustive is required")
        records, stats = datagen.build_dataset(
            sentences, index, manip, cfg["per_class"], ratios,
            workers=cfg["workers"])
    echo = dict(cfg, subcommand="generate", corpus=str(corpus_path),
                vectors=str(vectors_path), out=str(out_dir))
    _write_run_metadata(out_dir, echo, [corpus_path, vectors_path])
    datagen.write_jsonl(records, out_dir / "dataset.jsonl")
    _write_json(out_dir / "stats.json", stats.to_dict())
    log.info("wrote %d records to %s", len(records), out_dir / "dataset.jsonl")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    dataset_path = resolve_input(args.dataset)
    out_dir = Path(args.out)
    records = datagen.read_jsonl(dataset_path)
    stats = datagen.pos_stats(records)
    echo = {"subcommand": "stats", "dataset": str(dataset_path),
            "out": str(out_dir)}
    _write_run_metadata(out_dir, echo, [dataset_path])
    _write_json(out_dir / "stats.json", stats.to_dict())
    return 0


def cmd_split(args: argparse.Namespace) -> int:
    articles_path = resolve_input(args.articles)
    out_dir = Path(args.out)
    ratios = _parse_ratios(args.ratios or "0.8,0.1,0.1")
    seed = args.seed if args.seed is not None else 0
    articles = corpus.read_articles(articles_path)
    train, dev, test = corpus.split_articles(articles, ratios, seed)
    echo = {"subcommand": "split", "articles": str(articles_path),
            "ratios": list(ratios), "seed": seed, "out": str(out_dir)}
    _write_run_metadata(out_dir, echo, [articles_path])
    for name, subset in (("train", train), ("dev", dev), ("test", test)):
        corpus.write_articles(subset, out_dir / f"articles_{name}.jsonl")
    log.info("split %d articles into %d/%d/%d",
             len(articles), len(train), len(dev), len(test))
    return 0


def cmd_sample_study(args: argparse.Namespace) -> int:
    dataset_path = resolve_input(args.dataset)
    out_dir = Path(args.out)
    seed = args.seed if args.seed is not None else 0
    records = datagen.read_jsonl(dataset_path)
    tasks = sample_study(records, args.n_human, args.n_machine, seed)
    echo = {"subcommand": "sample-study", "dataset": str(dataset_path),
            "n_human": args.n_human, "n_machine": args.n_machine,
            "seed": seed, "out": str(out_dir)}
    _write_run_metadata(out_dir, echo, [dataset_path])
    write_tasks(tasks, out_dir / "tasks.json")
    log.info("sampled %d tasks", len(tasks))
    return 0


def cmd_serve_annotation(args: argparse.Namespace) -> int:
    tasks_path = resolve_input(args.tasks)
    tasks = read_tasks(tasks_path)
    store = LabelStore(args.store, tasks)
    pair = None
    if args.annotators:
        names = args.annotators.split(",")
        if len(names) != 2:
            raise CliError("--annotators expects exactly two ids: A,B")
        pair = (names[0], names[1])
    state = ServiceState(tasks, store, pair=pair, ui_dir=args.ui_dir)
    try:
        server = make_server(state, args.host, args.port)
    except OSError as exc:
        raise CliError(f"cannot bind {args.host}:{args.port}: {exc}")
    host, port = server.server_address[:2]
    log.info("serving %d tasks on http://%s:%s", len(tasks), host, port)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def cmd_agreement(args: argparse.Namespace) -> int:
    paths = [resolve_input(p) for p in args.labels]
    labels = merge_label_files(paths)
    pair = None
    if args.annotators:
        names = args.annotators.split(",")
        if len(names) != 2:
            raise CliError("--annotators expects exactly two ids: A,B")
        pair = (names[0], names[1])
    report = agreement_report(labels, pair=pair).to_dict()
    text = json.dumps(report, ensure_ascii=False, indent=2, sort_keys=True)
    print(text)
    if args.out:
        out_dir = Path(args.out)
        echo = {"subcommand": "agreement",
                "labels": [str(p) for p in paths],
                "annotators": args.annotators, "out": str(out_dir)}
        _write_run_metadata(out_dir, echo, paths)
        (out_dir / "agreement.json").write_text(text + "\n", encoding="utf-8")
    return 0


def _load_labeled_texts(path: Path, fmt: str, split: str | None) -> list[tuple[str, str]]:
    if fmt == "claims":
        return [(c.text, c.label) for c in detect.load_claims(path)]
    records = datagen.read_jsonl(path)
    if split and split != "all":
        records = [r for r in records if r.split == split]
    if not records:
        raise CliError(f"no records selected from {path} (split={split})")
    return [(r.text, r.label) for r in records]


TRAIN_DEFAULTS = {
    "seed": 0,
    "epochs": 10,
    "learning_rate": 0.1,
    "ngrams": "2,4",
    "split": "train",
}


def cmd_train_baseline(args: argparse.Namespace) -> int:
    cfg = _merge_config(args, TRAIN_DEFAULTS)
    data_path = resolve_input(args.data)
    out_dir = Path(args.out)
    fmt = args.format
    split = cfg["split"] if fmt == "dataset" else None
    examples = _load_labeled_texts(data_path, fmt, split)
    model = detect.train_linear(
        examples,
        epochs=cfg["epochs"],
        learning_rate=cfg["learning_rate"],
        seed=cfg["seed"],
        n_range=_parse_ngrams(cfg["ngrams"]),
    )
    echo = dict(cfg, subcommand="train-baseline", data=str(data_path),
                format=fmt, out=str(out_dir))
    _write_run_metadata(out_dir, echo, [data_path])
    detect.save_model(model, out_dir / "model.json")
    log.info("trained on %d examples; final loss %.4f",
             len(examples), model.loss_history[-1])
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    model_path = resolve_input(args.model)
    data_path = resolve_input(args.data)
    out_dir = Path(args.out)
    fmt = args.format
    split = (args.split or "test") if fmt == "dataset" else None
    pairs = _load_labeled_texts(data_path, fmt, split)
    model = detect.load_model(model_path)
    predictions = model.predict_many([text for text, _ in pairs])
    golds = [label for _, label in pairs]
    report = detect.evaluate(predictions, golds, classes=model.classes)
    echo = {"subcommand": "evaluate", "model": str(model_path),
            "data": str(data_path), "format": fmt, "split": split,
            "out": str(out_dir)}
    _write_run_metadata(out_dir, echo, [model_path, data_path])
    _write_json(out_dir / "report.json", report.to_dict())
    log.info("accuracy=%.4f macro_f1=%.4f on %d examples",
             report.accuracy, report.macro_f1, len(golds))
    return 0


def cmd_compose_training(args: argparse.Namespace) -> int:
    generated_path = resolve_input(args.generated)
    out_dir = Path(args.out)
    records = datagen.read_jsonl(generated_path)
    if args.generated_split and args.generated_split != "all":
        records = [r for r in records if r.split == args.generated_split]
    gold = None
    inputs = [generated_path]
    if args.gold:
        gold_path = resolve_input(args.gold)
        gold = detect.load_claims(gold_path)
        inputs.append(gold_path)
    try:
        composed = detect.compose_training(
            args.setting, gold, records, factor=args.factor or 1)
    except ValueError as exc:
        raise CliError(str(exc))
    echo = {"subcommand": "compose-training", "setting": args.setting,
            "gold": args.gold, "generated": str(generated_path),
            "generated_split": args.generated_split,
            "factor": args.factor or 1, "out": str(out_dir)}
    _write_run_metadata(out_dir, echo, inputs)
    with open(out_dir / "composed.tsv", "w", encoding="utf-8") as fh:
        for text, label in composed:
            fh.write(f"{label}\t{text}\n")
    log.info("composed %d training examples (%s)", len(composed), args.setting)
    return 0


# --------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lexswap",
        description="Lexical-substitution toolkit: generate manipulated news "
                    "text, run annotation studies, train detection baselines.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    gen = sub.add_parser("generate", help="build a manipulated dataset")
    gen.add_argument("--corpus", required=True, help="POS corpus TSV")
    gen.add_argument("--vectors", required=True, help="word vectors (.vec)")
    gen.add_argument("--out", required=True, help="run directory")
    gen.add_argument("--config", help="JSON config file")
    gen.add_argument("--seed", type=int)
    gen.add_argument("--ratios", help="train,dev,test fractions")
    gen.add_argument("--per-class", dest="per_class", type=int,
                     help="records per label in a balanced build")
    gen.add_argument("--exhaustive", action=argparse.BooleanOptionalAction,
                     help="keep every variant instead of sampling one per source")
    gen.add_argument("--target-pos", dest="target_pos",
                     help="comma-separated POS tags to substitute")
    gen.add_argument("--ratio-threshold", dest="ratio_threshold", type=float)
    gen.add_argument("--candidates", type=int,
                     help="embedding candidates kept per token")
    gen.add_argument("--number-variants", dest="number_variants", type=int)
    gen.add_argument("--max-variants", dest="max_variants", type=int)
    gen.add_argument("--scan-limit", dest="scan_limit", type=int)
    gen.add_argument("--workers", type=int)
    gen.set_defaults(func=cmd_generate)

    st = sub.add_parser("stats", help="recompute dataset statistics")
    st.add_argument("--dataset", required=True)
    st.add_argument("--out", required=True)
    st.set_defaults(func=cmd_stats)

    sp = sub.add_parser("split", help="split articles into train/dev/test")
    sp.add_argument("--articles", required=True, help="articles JSONL")
    sp.add_argument("--ratios")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_split)

    ss = sub.add_parser("sample-study", help="sample annotation tasks")
    ss.add_argument("--dataset", required=True)
    ss.add_argument("--n-human", dest="n_human", type=int, required=True)
    ss.add_argument("--n-machine", dest="n_machine", type=int, required=True)
    ss.add_argument("--seed", type=int)
    ss.add_argument("--out", required=True)
    ss.set_defaults(func=cmd_sample_study)

    sv = sub.add_parser("serve-annotation", help="run the annotation service")
    sv.add_argument("--tasks", required=True, help="tasks.json from sample-study")
    sv.add_argument("--store", required=True, help="label store JSONL path")
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--port", type=int, default=8765)
    sv.add_argument("--ui-dir", dest="ui_dir", help="static frontend directory")
    sv.add_argument("--annotators", help="kappa pair as A,B")
    sv.set_defaults(func=cmd_serve_annotation)

    ag = sub.add_parser("agreement", help="compute inter-annotator agreement")
    ag.add_argument("--labels", nargs="+", required=True,
                    help="one or more label store files")
    ag.add_argument("--annotators", help="kappa pair as A,B")
    ag.add_argument("--out", help="optional run directory")
    ag.set_defaults(func=cmd_agreement)

    tb = sub.add_parser("train-baseline", help="train the detection baseline")
    tb.add_argument("--data", required=True)
    tb.add_argument("--format", choices=("dataset", "claims"), default="dataset")
    tb.add_argument("--split", help="dataset split to train on (default train)")
    tb.add_argument("--config", help="JSON config file")
    tb.add_argument("--epochs", type=int)
    tb.add_argument("--learning-rate", dest="learning_rate", type=float)
    tb.add_argument("--seed", type=int)
    tb.add_argument("--ngrams", help="character n-gram range as low,high")
    tb.add_argument("--out", required=True)
    tb.set_defaults(func=cmd_train_baseline)

    ev = sub.add_parser("evaluate", help="evaluate a trained model")
    ev.add_argument("--model", required=True)
    ev.add_argument("--data", required=True)
    ev.add_argument("--format", choices=("dataset", "claims"), default="dataset")
    ev.add_argument("--split", help="dataset split to evaluate (default test)")
    ev.add_argument("--out", required=True)
    ev.set_defaults(func=cmd_evaluate)

    ct = sub.add_parser("compose-training",
                        help="assemble baseline/zero-shot/augment training data")
    ct.add_argument("--setting", required=True,
                    choices=(detect.SETTING_BASELINE, detect.SETTING_ZERO_SHOT,
                             detect.SETTING_AUGMENT))
    ct.add_argument("--gold", help="gold claims TSV")
    ct.add_argument("--generated", required=True, help="generated dataset JSONL")
    ct.add_argument("--generated-split", dest="generated_split",
                    help="restrict generated records to one split")
    ct.add_argument("--factor", type=int)
    ct.add_argument("--out", required=True)
    ct.set_defaults(func=cmd_compose_training)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except CliError as exc:
        log.error("%s", exc)
        return 1
    except (OSError, ValueError, KeyError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 1


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
