"""Fine-tuning with a frozen-layer grid search.

The corpus is split 90-10 into train and dev chunks, stratified by
label and deterministic in the seed. For every candidate frozen-layer
count the encoder is rebuilt from the same seed, its bottom layers are
frozen, and it is trained for the configured number of epochs; the
candidate with the best final dev macro-F1 wins (ties prefer fewer
frozen layers). Per-epoch train loss and dev metrics for every
candidate are written to training_log.json next to the checkpoint.

epochs=0 is the sanity path: no training and no grid search, the base
weights are saved as-is so exported probabilities reflect the raw
model.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import torch

from .config import FinetuneConfig
from .data import FtMessage, WordTokenizer, pad_batch
from .errors import DataError
from .model import (
    encoder_layers,
    freeze_layers,
    fresh_model,
    load_checkpoint,
    predict_proba,
    save_checkpoint,
)

logger = logging.getLogger(__name__)

CHECKPOINT_DIR = "checkpoint"
LOG_FILE = "training_log.json"


@dataclass(frozen=True)
class FinetuneResult:
    checkpoint_dir: Path
    selected_frozen_layers: int
    grid: tuple[int, ...]
    log: tuple[dict, ...]
    dev_ids: tuple[str, ...]


def _accuracy(gold: Sequence[int], pred: Sequence[int]) -> float:
    return sum(1 for g, p in zip(gold, pred) if g == p) / len(gold)


def _macro_f1(gold: Sequence[int], pred: Sequence[int]) -> float:
    f1s = []
    for cls in (0, 1):
        tp = sum(1 for g, p in zip(gold, pred) if g == cls and p == cls)
        fp = sum(1 for g, p in zip(gold, pred) if g != cls and p == cls)
        fn = sum(1 for g, p in zip(gold, pred) if g == cls and p != cls)
        denom = 2 * tp + fp + fn
        f1s.append(2 * tp / denom if denom else 0.0)
    return sum(f1s) / len(f1s)


def check_labeled(messages: Sequence[FtMessage]) -> None:
    """Reject corpora that cannot be fine-tuned on."""
    for m in messages:
        if m.label is None:
            raise DataError(
                f"message {m.id!r} has no label; fine-tuning needs labeled messages"
            )
    counts = {0: 0, 1: 0}
    for m in messages:
        counts[m.label] += 1
    for cls, n in counts.items():
        if n == 0:
            raise DataError(f"fine-tuning needs both classes; class {cls} has no messages")
        if n < 2:
            raise DataError(
                f"class {cls} has only {n} message(s); need at least 2 for a train/dev split"
            )


def stratified_split(
    messages: Sequence[FtMessage], dev_fraction: float, seed: int
) -> tuple[list[FtMessage], list[FtMessage]]:
    """Deterministic label-stratified split; dev gets ~dev_fraction per class."""
    by_class: dict[int, list[int]] = {0: [], 1: []}
    for i, m in enumerate(messages):
        by_class[m.label].append(i)
    rng = random.Random(seed)
    dev_idx: set[int] = set()
    for cls in (0, 1):
        idxs = list(by_class[cls])
        rng.shuffle(idxs)
        take = max(1, round(len(idxs) * dev_fraction))
        take = min(take, len(idxs) - 1)
        dev_idx.update(idxs[:take])
    train = [m for i, m in enumerate(messages) if i not in dev_idx]
    dev = [m for i, m in enumerate(messages) if i in dev_idx]
    return train, dev


def _encode_all(
    tokenizer: WordTokenizer, messages: Sequence[FtMessage]
) -> tuple[list[list[int]], int]:
    encoded = []
    truncated = 0
    for m in messages:
        ids, cut = tokenizer.encode(m.text)
        encoded.append(ids)
        truncated += int(cut)
    return encoded, truncated


def _build(cfg: FinetuneConfig, tokenizer: Optional[WordTokenizer]):
    """(Re)build the model from the seed; returns (model, tokenizer)."""
    torch.manual_seed(cfg.seed)
    if cfg.base_model is not None:
        return load_checkpoint(cfg.base_model)
    return fresh_model(cfg, tokenizer.vocab_size), tokenizer


def _dev_row(model, dev_encoded, dev_gold, cfg, frozen, epoch, train_loss):
    probs = predict_proba(model, dev_encoded, cfg.batch_size)
    pred = [int(p > 0.5) for p in probs]
    return {
        "frozen_layers": frozen,
        "epoch": epoch,
        "train_loss": train_loss,
        "dev_accuracy": _accuracy(dev_gold, pred),
        "dev_macro_f1": _macro_f1(dev_gold, pred),
    }


def _train_candidate(
    cfg: FinetuneConfig,
    tokenizer: Optional[WordTokenizer],
    frozen: int,
    train_encoded: list[list[int]],
    train_gold: list[int],
    dev_encoded: list[list[int]],
    dev_gold: list[int],
) -> tuple[object, list[dict]]:
    model, _ = _build(cfg, tokenizer)
    freeze_layers(model, frozen)
    params = [p for p in model.parameters() if p.requires_grad]
    optimizer = torch.optim.AdamW(params, lr=cfg.learning_rate)
    order_rng = random.Random(cfg.seed)
    rows = []
    n = len(train_encoded)
    for epoch in range(1, cfg.epochs + 1):
        model.train()
        indices = list(range(n))
        order_rng.shuffle(indices)
        total_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            batch = indices[start : start + cfg.batch_size]
            ids, mask = pad_batch([train_encoded[i] for i in batch])
            labels = torch.tensor([train_gold[i] for i in batch])
            out = model(
                input_ids=torch.tensor(ids),
                attention_mask=torch.tensor(mask),
                labels=labels,
            )
            optimizer.zero_grad()
            out.loss.backward()
            optimizer.step()
            total_loss += out.loss.item() * len(batch)
        rows.append(
            _dev_row(model, dev_encoded, dev_gold, cfg, frozen, epoch, total_loss / n)
        )
    return model, rows


def resolve_grid(cfg: FinetuneConfig, n_layers: int) -> tuple[int, ...]:
    """Candidate frozen-layer counts, capped at the encoder's depth."""
    if cfg.frozen_layers is not None:
        return (cfg.frozen_layers,)
    return tuple(sorted({min(g, n_layers) for g in cfg.grid}))


def finetune(
    messages: Sequence[FtMessage], cfg: FinetuneConfig, out_dir: str | Path
) -> FinetuneResult:
    """Fine-tune on a labeled corpus; writes checkpoint/ and training_log.json."""
    cfg.validate()
    check_labeled(messages)
    train_msgs, dev_msgs = stratified_split(messages, cfg.dev_fraction, cfg.seed)

    if cfg.base_model is not None:
        probe, tokenizer = _build(cfg, None)
    else:
        tokenizer = WordTokenizer.from_corpus(
            (m.text for m in train_msgs), max_vocab=cfg.max_vocab, max_length=cfg.max_length
        )
        probe, _ = _build(cfg, tokenizer)
    train_encoded, n_cut_train = _encode_all(tokenizer, train_msgs)
    dev_encoded, n_cut_dev = _encode_all(tokenizer, dev_msgs)
    if n_cut_train or n_cut_dev:
        logger.info(
            "truncated %d train and %d dev messages to %d tokens",
            n_cut_train, n_cut_dev, tokenizer.max_length,
        )
    train_gold = [m.label for m in train_msgs]
    dev_gold = [m.label for m in dev_msgs]

    n_layers = encoder_layers(probe)
    grid = resolve_grid(cfg, n_layers)

    rows: list[dict] = []
    if cfg.epochs == 0:
        best_model = probe
        selected = 0
        rows.append(_dev_row(best_model, dev_encoded, dev_gold, cfg, 0, 0, None))
    else:
        del probe
        best_model = None
        best_f1 = -1.0
        selected = grid[0]
        for frozen in grid:
            model, cand_rows = _train_candidate(
                cfg, tokenizer, frozen,
                train_encoded, train_gold, dev_encoded, dev_gold,
            )
            rows.extend(cand_rows)
            final_f1 = cand_rows[-1]["dev_macro_f1"]
            if final_f1 > best_f1:
                best_f1 = final_f1
                best_model = model
                selected = frozen
            logger.info("frozen_layers=%d final dev macro-F1 %.4f", frozen, final_f1)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ckpt = save_checkpoint(best_model, tokenizer, out_dir / CHECKPOINT_DIR)
    payload = {
        "config": cfg.to_dict(),
        "n_train": len(train_msgs),
        "n_dev": len(dev_msgs),
        "encoder_layers": n_layers,
        "grid": list(grid),
        "selected_frozen_layers": selected,
        "truncated_train_messages": n_cut_train,
        "truncated_dev_messages": n_cut_dev,
        "epochs": rows,
    }
    (out_dir / LOG_FILE).write_text(
        json.dumps(payload, indent=2) + "\n", encoding="utf-8"
    )
    return FinetuneResult(
        checkpoint_dir=ckpt,
        selected_frozen_layers=selected,
        grid=grid,
        log=tuple(rows),
        dev_ids=tuple(m.id for m in dev_msgs),
    )
