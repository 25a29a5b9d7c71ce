"""Command line interface.

Every subcommand reads a TOML config (paths in it resolve relative to
the config file) plus a few overriding flags and runs single-process.
train fine-tunes on a labeled messages.jsonl and writes a checkpoint
plus training_log.json; export-soft-labels and export-topics run an
existing checkpoint over a corpus and write the flat files the
detector pipeline consumes.

Exit codes: 0 success, 2 bad input or configuration, 3 broken data,
4 any other pipeline failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from .config import DEFAULT_GRID, FinetuneConfig, TopicConfig
from .data import read_messages
from .errors import DataError, FinetuneError, ValidationError
from .export import export_soft_labels, export_topics
from .train import finetune


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


def _seed(cfg: dict, args) -> int:
    if args.seed is not None:
        return args.seed
    seed = cfg.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ValidationError(f"config key 'seed' must be an integer, got {seed!r}")
    return seed


def _io_section(cfg: dict, args) -> dict:
    io = dict(cfg.get("io", {}))
    if args.input is not None:
        io["input"] = args.input
    if args.output_dir is not None:
        io["output_dir"] = args.output_dir
    return io


def _need(section: dict, key: str, where: str = "io") -> str:
    value = section.get(key)
    if not value or not isinstance(value, str):
        raise ValidationError(f"[{where}] needs a {key} path")
    return value


def _get_number(section: dict, key: str, default: float, where: str) -> float:
    value = section.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"[{where}] key {key!r} must be a number, got {value!r}")
    return float(value)


def _get_int(section: dict, key: str, default: int, where: str) -> int:
    value = section.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"[{where}] key {key!r} must be an integer, got {value!r}")
    return value


def _finetune_config(cfg: dict, seed: int, base: Path) -> FinetuneConfig:
    section = dict(cfg.get("finetune", {}))
    grid = section.get("grid", list(DEFAULT_GRID))
    if (
        not isinstance(grid, list)
        or not grid
        or any(isinstance(g, bool) or not isinstance(g, int) for g in grid)
    ):
        raise ValidationError("[finetune] key 'grid' must be a non-empty list of integers")
    frozen = section.get("frozen_layers")
    if frozen is not None and (isinstance(frozen, bool) or not isinstance(frozen, int)):
        raise ValidationError(
            f"[finetune] key 'frozen_layers' must be an integer, got {frozen!r}"
        )
    base_model = section.get("base_model")
    if base_model is not None:
        if not isinstance(base_model, str) or not base_model:
            raise ValidationError("[finetune] key 'base_model' must be a non-empty path")
        base_model = str(_resolve(base, base_model))
    ft = FinetuneConfig(
        learning_rate=_get_number(section, "learning_rate", 0.5e-5, "finetune"),
        epochs=_get_int(section, "epochs", 10, "finetune"),
        seed=seed,
        grid=tuple(grid),
        frozen_layers=frozen,
        base_model=base_model,
        batch_size=_get_int(section, "batch_size", 16, "finetune"),
        max_length=_get_int(section, "max_length", 64, "finetune"),
        dev_fraction=_get_number(section, "dev_fraction", 0.1, "finetune"),
        max_vocab=_get_int(section, "max_vocab", 2000, "finetune"),
        hidden_size=_get_int(section, "hidden_size", 32, "finetune"),
        num_layers=_get_int(section, "num_layers", 2, "finetune"),
        num_heads=_get_int(section, "num_heads", 2, "finetune"),
        intermediate_size=_get_int(section, "intermediate_size", 64, "finetune"),
    )
    ft.validate()
    return ft


def _topic_config(cfg: dict, seed: int) -> TopicConfig:
    section = dict(cfg.get("topics", {}))
    tc = TopicConfig(
        seed=seed,
        svd_components=_get_int(section, "svd_components", 16, "topics"),
        min_cluster_size=_get_int(section, "min_cluster_size", 0, "topics"),
        batch_size=_get_int(section, "batch_size", 32, "topics"),
    )
    tc.validate()
    return tc


def _checkpoint_path(io: dict, base: Path) -> Path:
    if io.get("checkpoint"):
        return _resolve(base, _need(io, "checkpoint"))
    if io.get("output_dir"):
        return _resolve(base, _need(io, "output_dir")) / "checkpoint"
    raise ValidationError("[io] needs a checkpoint path (or an output_dir containing one)")


def cmd_train(cfg: dict, args, base: Path) -> int:
    """Fine-tune on labeled messages and save a checkpoint."""
    seed = _seed(cfg, args)
    io = _io_section(cfg, args)
    input_path = _resolve(base, _need(io, "input"))
    out_dir = _resolve(base, _need(io, "output_dir"))
    ft = _finetune_config(cfg, seed, base)
    _require_files({"input": input_path})
    messages = read_messages(input_path)
    result = finetune(messages, ft, out_dir)
    print(f"fine-tuned on {len(messages) - len(result.dev_ids)} messages "
          f"({len(result.dev_ids)} held out for dev)")
    print(f"grid {list(result.grid)} -> frozen_layers {result.selected_frozen_layers}")
    print(f"checkpoint: {result.checkpoint_dir}")
    return 0


def cmd_export_soft_labels(cfg: dict, args, base: Path) -> int:
    """Run a checkpoint over messages and write soft_labels.tsv."""
    io = _io_section(cfg, args)
    input_path = _resolve(base, _need(io, "input"))
    out_path = _resolve(base, _need(io, "soft_labels"))
    checkpoint = _checkpoint_path(io, base)
    _require_files({"input": input_path})
    batch_size = _get_int(dict(cfg.get("export", {})), "batch_size", 32, "export")
    messages = read_messages(input_path)
    n = export_soft_labels(checkpoint, messages, out_path, batch_size=batch_size)
    print(f"wrote {n} soft labels to {out_path}")
    return 0


def cmd_export_topics(cfg: dict, args, base: Path) -> int:
    """Cluster message embeddings and write messages.jsonl with topic_id."""
    seed = _seed(cfg, args)
    io = _io_section(cfg, args)
    input_path = _resolve(base, _need(io, "input"))
    out_path = _resolve(base, _need(io, "topics_output"))
    checkpoint = _checkpoint_path(io, base)
    _require_files({"input": input_path})
    tc = _topic_config(cfg, seed)
    messages = read_messages(input_path)
    assignments = export_topics(checkpoint, messages, out_path, tc)
    sizes: dict[int, int] = {}
    for t in assignments:
        sizes[t] = sizes.get(t, 0) + 1
    for topic in sorted(k for k in sizes if k != -1):
        print(f"topic {topic}: n={sizes[topic]}")
    print(f"outliers: {sizes.get(-1, 0)}")
    print(f"wrote {len(assignments)} messages to {out_path}")
    return 0


_COMMANDS = {
    "train": cmd_train,
    "export-soft-labels": cmd_export_soft_labels,
    "export-topics": cmd_export_topics,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="finetune-glue",
        description="Fine-tune a transformer for code-mixing detection and "
                    "export soft labels and topic assignments as flat files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("--config", required=True, help="TOML config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--input", default=None, help="override [io].input")
        p.add_argument("--output-dir", default=None, help="override [io].output_dir")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(
        level=logging.INFO, stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        from transformers.utils import logging as hf_logging
        hf_logging.disable_progress_bar()
        hf_logging.set_verbosity_error()
    except ImportError:
        pass
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
    except FinetuneError as e:
        print(f"pipeline error: {e}", file=sys.stderr)
        return 4
    except OSError as e:
        print(f"pipeline error: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
