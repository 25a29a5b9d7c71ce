"""Encoder construction, checkpoint I/O, layer freezing, and batched inference.

All torch and transformers specifics live here. The encoder is an
XLM-RoBERTa sequence-classification model: either loaded from a local
checkpoint directory (weights plus the word tokenizer saved next to
them) or randomly initialized at the small dimensions in the config so
everything runs offline. Callers seed torch before building a model;
given that, construction, training, and inference are deterministic on
CPU.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np
import torch
from transformers import XLMRobertaConfig, XLMRobertaForSequenceClassification

from .config import FinetuneConfig
from .data import BOS_ID, EOS_ID, PAD_ID, WordTokenizer, pad_batch
from .errors import ValidationError

TOKENIZER_FILE = "tokenizer.json"


def fresh_model(cfg: FinetuneConfig, vocab_size: int) -> XLMRobertaForSequenceClassification:
    """Randomly initialize a small sequence-classification encoder."""
    model_cfg = XLMRobertaConfig(
        vocab_size=vocab_size,
        hidden_size=cfg.hidden_size,
        num_hidden_layers=cfg.num_layers,
        num_attention_heads=cfg.num_heads,
        intermediate_size=cfg.intermediate_size,
        max_position_embeddings=cfg.max_length + 2,
        type_vocab_size=1,
        pad_token_id=PAD_ID,
        bos_token_id=BOS_ID,
        eos_token_id=EOS_ID,
        num_labels=2,
    )
    return XLMRobertaForSequenceClassification(model_cfg)


def save_checkpoint(
    model: XLMRobertaForSequenceClassification,
    tokenizer: WordTokenizer,
    directory: str | Path,
) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(directory)
    tokenizer.save(directory / TOKENIZER_FILE)
    return directory


def load_checkpoint(
    directory: str | Path,
) -> tuple[XLMRobertaForSequenceClassification, WordTokenizer]:
    directory = Path(directory)
    if not directory.is_dir():
        raise ValidationError(f"checkpoint directory not found: {directory}")
    tok_path = directory / TOKENIZER_FILE
    if not tok_path.is_file():
        raise ValidationError(f"checkpoint has no {TOKENIZER_FILE}: {directory}")
    tokenizer = WordTokenizer.load(tok_path)
    try:
        model = XLMRobertaForSequenceClassification.from_pretrained(directory)
    except (OSError, ValueError, EnvironmentError) as e:
        raise ValidationError(f"cannot load model from {directory}: {e}") from None
    if model.config.vocab_size != tokenizer.vocab_size:
        raise ValidationError(
            f"checkpoint vocab size {model.config.vocab_size} does not match "
            f"its tokenizer ({tokenizer.vocab_size} entries)"
        )
    return model, tokenizer


def encoder_layers(model: XLMRobertaForSequenceClassification) -> int:
    return int(model.config.num_hidden_layers)


def freeze_layers(model: XLMRobertaForSequenceClassification, count: int) -> None:
    """Freeze the embeddings and the first `count` encoder layers.

    count 0 leaves the whole network trainable; any positive count also
    freezes the embedding tables, mirroring the usual bottom-up scheme.
    """
    n_layers = encoder_layers(model)
    if not 0 <= count <= n_layers:
        raise ValidationError(
            f"cannot freeze {count} layers of a {n_layers}-layer encoder"
        )
    for p in model.parameters():
        p.requires_grad = True
    if count == 0:
        return
    for p in model.roberta.embeddings.parameters():
        p.requires_grad = False
    for layer in model.roberta.encoder.layer[:count]:
        for p in layer.parameters():
            p.requires_grad = False


def _batches(n: int, batch_size: int) -> list[range]:
    return [range(i, min(i + batch_size, n)) for i in range(0, n, batch_size)]


def predict_proba(
    model: XLMRobertaForSequenceClassification,
    encoded: Sequence[Sequence[int]],
    batch_size: int,
) -> np.ndarray:
    """Probability of class 1 for each encoded sequence, in input order."""
    model.eval()
    out = np.empty(len(encoded), dtype=np.float64)
    with torch.no_grad():
        for batch in _batches(len(encoded), batch_size):
            ids, mask = pad_batch([encoded[i] for i in batch])
            logits = model(
                input_ids=torch.tensor(ids), attention_mask=torch.tensor(mask)
            ).logits
            probs = torch.softmax(logits, dim=-1)[:, 1]
            out[batch.start : batch.stop] = probs.numpy().astype(np.float64)
    return out


def mean_pooled(
    model: XLMRobertaForSequenceClassification,
    encoded: Sequence[Sequence[int]],
    batch_size: int,
) -> np.ndarray:
    """Mean-pooled final hidden states (mask-aware), one row per sequence."""
    model.eval()
    rows: list[np.ndarray] = []
    with torch.no_grad():
        for batch in _batches(len(encoded), batch_size):
            ids, mask = pad_batch([encoded[i] for i in batch])
            mask_t = torch.tensor(mask, dtype=torch.float32)
            hidden = model.roberta(
                input_ids=torch.tensor(ids), attention_mask=torch.tensor(mask)
            ).last_hidden_state
            summed = (hidden * mask_t.unsqueeze(-1)).sum(dim=1)
            counts = mask_t.sum(dim=1).clamp(min=1.0).unsqueeze(-1)
            rows.append((summed / counts).numpy().astype(np.float64))
    return np.vstack(rows)
