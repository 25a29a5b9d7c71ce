"""Command line interface.

Every subcommand reads a TOML config (paths in it resolve relative to
the config file) plus a few overriding flags, runs single-process, and
writes its outputs plus a JSON report embedding the resolved config,
the seed, and sha256 checksums of the resources it used.

Exit codes: 0 success, 2 bad input or configuration, 3 broken data,
4 any other pipeline failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from . import FEATURE_SCHEMA_VERSION
from .analysis import summarize_topics, write_topic_flair_csv
from .corpus import (
    Dataset,
    SynthConfig,
    dataset_stats,
    filter_short,
    generate_synthetic,
    load_jsonl,
    load_lexicon,
    message_to_json,
    save_jsonl,
)
from .ensemble import (
    AdaBoostConfig,
    GBoostConfig,
    TrainConfig,
    load_model,
    save_model,
)
from .errors import CodemixError, DataError, ValidationError
from .evaluation import (
    ALGORITHMS,
    crossval,
    fit_model,
    holdout_eval,
    krippendorff_alpha,
    load_agreement_csv,
    zero_shot_eval,
)
from .features import (
    Resources,
    StubScorer,
    assemble_many,
    load_soft_labels,
)
from .langdetect import MixedLanguageDetector, NgramModel
from .tokenization import bpe_load

_RESOURCE_FILE_KEYS = (
    "english_vocab",
    "english_merges",
    "local_vocab",
    "local_merges",
    "multilingual_vocab",
    "multilingual_merges",
    "english_langmodel",
    "local_langmodel",
)


def _load_config(path: Path) -> dict:
    if not path.is_file():
        raise ValidationError(f"config file not found: {path}")
    try:
        with path.open("rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as e:
        raise ValidationError(f"{path}: invalid TOML ({e})") from None


def _resolve(base: Path, p: str) -> Path:
    q = Path(p)
    return q if q.is_absolute() else base / q


def _require_files(paths: dict[str, Path]) -> None:
    missing = [f"{key}: {p}" for key, p in paths.items() if not p.is_file()]
    if missing:
        raise ValidationError("missing input files:\n  " + "\n  ".join(missing))


def _checksum(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _build_resources(
    cfg: dict, base: Path, stub_override: Optional[float]
) -> tuple[Resources, dict[str, str]]:
    section = cfg.get("resources")
    if not isinstance(section, dict):
        raise ValidationError("config needs a [resources] section")
    missing_keys = [k for k in _RESOURCE_FILE_KEYS if k not in section]
    if missing_keys:
        raise ValidationError(f"[resources] is missing keys: {', '.join(missing_keys)}")
    if "local_tag" not in section:
        raise ValidationError("[resources] needs a local_tag")
    paths = {k: _resolve(base, section[k]) for k in _RESOURCE_FILE_KEYS}
    soft_path: Optional[Path] = None
    if stub_override is None and section.get("soft_labels"):
        soft_path = _resolve(base, section["soft_labels"])
        paths["soft_labels"] = soft_path
    _require_files(paths)

    english_tag = section.get("english_tag", "en")
    local_tag = section["local_tag"]
    space_marker = section.get("space_marker") or None
    byte_fallback = bool(section.get("byte_fallback", False))
    english_tok = bpe_load(
        paths["english_vocab"], paths["english_merges"], name="english",
        space_marker=space_marker, byte_fallback=byte_fallback,
    )
    local_tok = bpe_load(
        paths["local_vocab"], paths["local_merges"], name="local",
        space_marker=space_marker, byte_fallback=byte_fallback,
    )
    multi_tok = bpe_load(
        paths["multilingual_vocab"], paths["multilingual_merges"], name="multilingual",
        space_marker=space_marker, byte_fallback=byte_fallback,
    )
    english_lm = NgramModel.load(paths["english_langmodel"])
    local_lm = NgramModel.load(paths["local_langmodel"])
    if english_lm.language != english_tag:
        raise ValidationError(
            f"english_langmodel is tagged {english_lm.language!r}, expected {english_tag!r}"
        )
    if local_lm.language != local_tag:
        raise ValidationError(
            f"local_langmodel is tagged {local_lm.language!r}, expected {local_tag!r}"
        )
    detector = MixedLanguageDetector(
        [english_lm, local_lm],
        english_tag=english_tag,
        local_tag=local_tag,
        min_word_len=int(section.get("min_word_len", 3)),
    )
    if stub_override is not None:
        scorer = StubScorer(stub_override)
    elif soft_path is not None:
        scorer = load_soft_labels(soft_path)
    else:
        scorer = StubScorer(float(section.get("stub_soft_label", 0.5)))
    resources = Resources(
        english_tokenizer=english_tok,
        local_tokenizer=local_tok,
        multilingual_tokenizer=multi_tok,
        detector=detector,
        scorer=scorer,
    )
    checksums = {key: _checksum(p) for key, p in sorted(paths.items())}
    return resources, checksums


def _io_section(cfg: dict, base: Path, args) -> dict:
    io = dict(cfg.get("io", {}))
    if getattr(args, "input", None):
        io["input"] = args.input
    if getattr(args, "output_dir", None):
        io["output_dir"] = args.output_dir
    if getattr(args, "model", None):
        io["model"] = args.model
    return io


def _output_dir(io: dict, base: Path) -> Path:
    out = _resolve(base, io.get("output_dir", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _input_dataset(io: dict, base: Path) -> Dataset:
    if "input" not in io:
        raise ValidationError("no input file; set [io].input or pass --input")
    path = _resolve(base, io["input"])
    _require_files({"input": path})
    return load_jsonl(path)


def _seed(cfg: dict, args) -> int:
    if args.seed is not None:
        return args.seed
    return int(cfg.get("seed", 0))


def _write_report(path: Path, payload: dict) -> None:
    with path.open("w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, sort_keys=True, indent=2)
        fh.write("\n")


def _base_report(command: str, cfg: dict, seed: int, checksums: Optional[dict]) -> dict:
    payload = {
        "command": command,
        "seed": seed,
        "feature_schema_version": FEATURE_SCHEMA_VERSION,
        "config": cfg,
    }
    if checksums is not None:
        payload["resource_checksums"] = checksums
    return payload


def _train_section(cfg: dict, seed: int):
    """Algorithm name and config object from [train]."""
    train = dict(cfg.get("train", {}))
    algorithm = train.get("algorithm", "random_forest")
    if algorithm not in ALGORITHMS:
        raise ValidationError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")
    if algorithm == "random_forest":
        fps = train.get("features_per_split", 0)
        config = TrainConfig(
            n_trees=int(train.get("n_trees", 100)),
            max_depth=int(train.get("max_depth", 8)),
            min_samples_split=int(train.get("min_samples_split", 2)),
            features_per_split=int(fps) if fps else None,
            bootstrap=bool(train.get("bootstrap", True)),
            seed=seed,
        )
    elif algorithm == "adaboost":
        config = AdaBoostConfig(rounds=int(train.get("rounds", 50)))
    else:
        config = GBoostConfig(
            rounds=int(train.get("rounds", 50)),
            learning_rate=float(train.get("learning_rate", 0.1)),
            max_depth=int(train.get("max_depth", 3)),
            min_samples_split=int(train.get("min_samples_split", 2)),
        )
    indices = train.get("feature_indices")
    if indices is not None:
        indices = [int(i) for i in indices]
    return algorithm, config, indices


def _apply_filter(cfg: dict, dataset: Dataset) -> Dataset:
    min_tokens = int(cfg.get("filter", {}).get("min_tokens", 5))
    return filter_short(dataset, min_tokens=min_tokens)


def cmd_synth(cfg: dict, args, base: Path) -> int:
    section = cfg.get("synth")
    if not isinstance(section, dict):
        raise ValidationError("config needs a [synth] section")
    for key in ("n_messages", "mix_rate", "english_lexicon", "local_lexicon", "local_tag"):
        if key not in section:
            raise ValidationError(f"[synth] is missing key {key!r}")
    seed = _seed(cfg, args)
    en_path = _resolve(base, section["english_lexicon"])
    local_path = _resolve(base, section["local_lexicon"])
    _require_files({"english_lexicon": en_path, "local_lexicon": local_path})
    synth_cfg = SynthConfig(
        n_messages=int(section["n_messages"]),
        mix_rate=float(section["mix_rate"]),
        english_words=load_lexicon(en_path),
        local_words=load_lexicon(local_path),
        local_tag=section["local_tag"],
        seed=seed,
        sentence_len_range=tuple(section.get("sentence_len", (8, 16))),
        span_len_range=tuple(section.get("span_len", (1, 3))),
        community=section.get("community", "synthetic"),
        flair=section.get("flair"),
        topic_id=section.get("topic_id"),
        id_prefix=section.get("id_prefix", "syn"),
    )
    dataset = generate_synthetic(synth_cfg)
    io = _io_section(cfg, base, args)
    out_dir = _output_dir(io, base)
    out_path = out_dir / io.get("output_name", "synthetic.jsonl")
    save_jsonl(dataset, out_path)
    counts = dataset_stats(dataset).totals
    report = _base_report("synth", cfg, seed, None)
    report.update({
        "output": str(out_path),
        "n_messages": len(dataset),
        "code_mixed": counts.code_mixed,
        "non_mixed": counts.non_mixed,
    })
    _write_report(out_dir / "synth_manifest.json", report)
    print(f"wrote {len(dataset)} messages ({counts.code_mixed} code-mixed) to {out_path}")
    return 0


def cmd_train(cfg: dict, args, base: Path) -> int:
    seed = _seed(cfg, args)
    resources, checksums = _build_resources(cfg, base, args.stub_soft_label)
    io = _io_section(cfg, base, args)
    dataset = _apply_filter(cfg, _input_dataset(io, base))
    labels = []
    for m in dataset:
        if m.label is None:
            raise ValidationError(f"training requires labels; message {m.id!r} is unlabeled")
        labels.append(m.label)
    algorithm, train_config, indices = _train_section(cfg, seed)
    vectors = assemble_many(dataset.messages, resources, feature_indices=indices)
    model = fit_model(
        algorithm, vectors, labels, config=train_config, seed=seed,
        meta={"local_tag": resources.local_tag},
    )
    out_dir = _output_dir(io, base)
    model_path = _resolve(base, io["model"]) if "model" in io else out_dir / "model.json"
    model_path.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, model_path)
    report = _base_report("train", cfg, seed, checksums)
    report.update({
        "algorithm": algorithm,
        "model": str(model_path),
        "n_train": len(dataset),
        "class_counts": {
            "non_mixed": labels.count(0),
            "code_mixed": labels.count(1),
        },
    })
    _write_report(out_dir / "train_manifest.json", report)
    print(f"trained {algorithm} on {len(dataset)} messages -> {model_path}")
    return 0


def cmd_predict(cfg: dict, args, base: Path) -> int:
    seed = _seed(cfg, args)
    resources, checksums = _build_resources(cfg, base, args.stub_soft_label)
    io = _io_section(cfg, base, args)
    if "model" not in io:
        raise ValidationError("no model file; set [io].model or pass --model")
    model_path = _resolve(base, io["model"])
    _require_files({"model": model_path})
    model = load_model(model_path)
    dataset = _input_dataset(io, base)
    _, _, indices = _train_section(cfg, seed)
    vectors = assemble_many(dataset.messages, resources, feature_indices=indices)
    out_dir = _output_dir(io, base)
    out_path = out_dir / io.get("output_name", "predictions.jsonl")
    n_mixed = 0
    with out_path.open("w", encoding="utf-8") as fh:
        for m, v in zip(dataset, vectors):
            proba = model.predict_proba(v)
            label = int(proba > 0.5)
            n_mixed += label
            row = json.loads(message_to_json(m))
            row["predicted_label"] = label
            row["probability"] = round(proba, 6)
            fh.write(json.dumps(row, ensure_ascii=False))
            fh.write("\n")
    report = _base_report("predict", cfg, seed, checksums)
    report.update({
        "model": str(model_path),
        "output": str(out_path),
        "n_messages": len(dataset),
        "predicted_code_mixed": n_mixed,
    })
    _write_report(out_dir / "predict_manifest.json", report)
    print(f"predicted {len(dataset)} messages ({n_mixed} code-mixed) -> {out_path}")
    return 0


def _format_crossval_table(reports: list) -> str:
    header = f"{'algorithm':<20}{'accuracy':<20}{'f1_macro':<20}{'auc':<20}"
    lines = [header]
    for rep in reports:
        cells = [
            f"{rep.means[key]:.4f} ± {rep.stds[key]:.4f}"
            for key in ("accuracy", "f1_macro", "auc")
        ]
        lines.append(f"{rep.algorithm:<20}{cells[0]:<20}{cells[1]:<20}{cells[2]:<20}")
    return "\n".join(line.rstrip() for line in lines)


def cmd_crossval(cfg: dict, args, base: Path) -> int:
    seed = _seed(cfg, args)
    resources, checksums = _build_resources(cfg, base, args.stub_soft_label)
    io = _io_section(cfg, base, args)
    dataset = _apply_filter(cfg, _input_dataset(io, base))
    section = dict(cfg.get("crossval", {}))
    k = int(section.get("k", 5))
    algorithms = section.get("algorithms")
    _, train_config, indices = _train_section(cfg, seed)
    if algorithms is None:
        algorithms = [cfg.get("train", {}).get("algorithm", "random_forest")]
    reports = []
    for algorithm in algorithms:
        config = train_config if algorithm == cfg.get("train", {}).get(
            "algorithm", "random_forest"
        ) else None
        reports.append(crossval(
            dataset, resources, k=k, seed=seed, algorithm=algorithm,
            config=config, feature_indices=indices,
        ))
    out_dir = _output_dir(io, base)
    report = _base_report("crossval", cfg, seed, checksums)
    report.update({
        "k": k,
        "n_messages": len(dataset),
        "results": [rep.to_dict() for rep in reports],
    })
    _write_report(out_dir / "report.json", report)
    print(_format_crossval_table(reports))
    return 0


def _eval_command(cfg: dict, args, base: Path, command: str) -> int:
    seed = _seed(cfg, args)
    resources, checksums = _build_resources(cfg, base, args.stub_soft_label)
    io = _io_section(cfg, base, args)
    if "model" not in io:
        raise ValidationError("no model file; set [io].model or pass --model")
    model_path = _resolve(base, io["model"])
    _require_files({"model": model_path})
    model = load_model(model_path)
    dataset = _apply_filter(cfg, _input_dataset(io, base))
    _, _, indices = _train_section(cfg, seed)
    if command == "xlingual":
        result = zero_shot_eval(model, dataset, resources, feature_indices=indices)
    else:
        result = holdout_eval(model, dataset, resources, feature_indices=indices)
    out_dir = _output_dir(io, base)
    report = _base_report(command, cfg, seed, checksums)
    report.update({
        "model": str(model_path),
        "model_local_tag": model.meta.get("local_tag"),
        "test_local_tag": resources.local_tag,
        "result": result.to_dict(),
    })
    _write_report(out_dir / "report.json", report)
    print(
        f"{command}: n={result.n} accuracy={result.accuracy:.4f} "
        f"f1_macro={result.f1_macro:.4f} auc={result.auc:.4f}"
    )
    return 0


def cmd_eval(cfg: dict, args, base: Path) -> int:
    return _eval_command(cfg, args, base, "eval")


def cmd_xlingual(cfg: dict, args, base: Path) -> int:
    return _eval_command(cfg, args, base, "xlingual")


def cmd_analyze(cfg: dict, args, base: Path) -> int:
    seed = _seed(cfg, args)
    io = _io_section(cfg, base, args)
    dataset = _input_dataset(io, base)
    section = dict(cfg.get("analyze", {}))
    predicted = None
    if section.get("predictions"):
        pred_path = _resolve(base, section["predictions"])
        _require_files({"predictions": pred_path})
        predicted = {}
        with pred_path.open(encoding="utf-8") as fh:
            for ln, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    row = json.loads(line)
                except json.JSONDecodeError as e:
                    raise ValidationError(
                        f"{pred_path.name}, line {ln}: invalid JSON ({e.msg})"
                    ) from None
                if "id" not in row or "predicted_label" not in row:
                    raise ValidationError(
                        f"{pred_path.name}, line {ln}: need id and predicted_label"
                    )
                predicted[row["id"]] = int(row["predicted_label"])
    summaries = summarize_topics(
        dataset,
        predicted=predicted,
        min_topic_fraction=float(section.get("min_topic_fraction", 0.003)),
        top_k=int(section.get("top_k", 10)),
        ngram_range=tuple(section.get("ngram_range", (1, 2))),
    )
    out_dir = _output_dir(io, base)
    report = _base_report("analyze", cfg, seed, None)
    report.update({
        "n_messages": len(dataset),
        "n_topics": len(summaries),
        "topics": [s.to_dict() for s in summaries],
    })
    _write_report(out_dir / "topics_report.json", report)
    write_topic_flair_csv(summaries, out_dir / "topics_matrix.csv")
    for s in summaries:
        terms = ", ".join(t for t, _ in s.top_terms[:5])
        print(
            f"topic {s.topic_id}: n={s.size} "
            f"code_mixed={s.codemix_proportion:.3f} terms: {terms}"
        )
    return 0


def cmd_agreement(cfg: dict, args, base: Path) -> int:
    seed = _seed(cfg, args)
    io = _io_section(cfg, base, args)
    section = dict(cfg.get("agreement", {}))
    input_path = section.get("input") or io.get("input")
    if not input_path:
        raise ValidationError("no annotations file; set [agreement].input or pass --input")
    path = _resolve(base, input_path)
    _require_files({"annotations": path})
    table = load_agreement_csv(path)
    alpha = krippendorff_alpha(table)
    out_dir = _output_dir(io, base)
    report = _base_report("agreement", cfg, seed, None)
    report.update({
        "annotations": str(path),
        "n_items": len(table.item_ids),
        "n_annotators": len(table.labels[0]),
        "alpha": alpha,
    })
    _write_report(out_dir / "agreement_report.json", report)
    print(f"krippendorff_alpha: {alpha:.4f}")
    return 0


_COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "predict": cmd_predict,
    "crossval": cmd_crossval,
    "eval": cmd_eval,
    "xlingual": cmd_xlingual,
    "analyze": cmd_analyze,
    "agreement": cmd_agreement,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="codemix",
        description="Code-mixing detection: corpus tools, training, evaluation, analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("--config", required=True, help="TOML config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument(
            "--stub-soft-label", type=float, default=None, metavar="C",
            help="use the constant C as soft label instead of a file",
        )
        p.add_argument("--input", default=None, help="override [io].input")
        p.add_argument("--output-dir", default=None, help="override [io].output_dir")
        p.add_argument("--model", default=None, help="override [io].model")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    config_path = Path(args.config)
    try:
        cfg = _load_config(config_path)
        return _COMMANDS[args.command](cfg, args, config_path.resolve().parent)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3
    except CodemixError as e:
        print(f"pipeline error: {e}", file=sys.stderr)
        return 4
    except OSError as e:
        print(f"pipeline error: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
