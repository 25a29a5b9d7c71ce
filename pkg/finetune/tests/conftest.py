"""Shared fixtures: tiny corpora and fast fine-tuning configs.

Corpora are built locally (plain dicts written as JSON Lines) so the
unit tests exercise this package's own reader instead of leaning on
the detector package; only the acceptance tests import the detector,
and only to verify the file boundary from the consuming side.
"""

import json
import random

import pytest

from codemix_finetune.config import FinetuneConfig
from codemix_finetune.data import FtMessage


def make_messages(n=40, mix_rate=0.3, seed=3, id_prefix="m", labeled=True):
    """Synthetic bilingual-looking messages; positives carry an inserted span."""
    rng = random.Random(seed)
    english = [f"word{i}" for i in range(30)]
    local = [f"verkko{i}" for i in range(30)]
    n_mixed = round(n * mix_rate)
    mixed_idx = set(rng.sample(range(n), n_mixed))
    out = []
    for i in range(n):
        words = [rng.choice(english) for _ in range(rng.randint(8, 14))]
        if i in mixed_idx:
            pos = rng.randint(0, len(words))
            words[pos:pos] = [rng.choice(local) for _ in range(rng.randint(1, 3))]
        out.append(FtMessage(
            id=f"{id_prefix}-{i:04d}",
            community="synthetic",
            flair=None,
            text=" ".join(words),
            label=(1 if i in mixed_idx else 0) if labeled else None,
            topic_id=None,
        ))
    return out


def write_jsonl(messages, path):
    with open(path, "w", encoding="utf-8") as fh:
        for m in messages:
            fh.write(json.dumps({
                "id": m.id, "community": m.community, "flair": m.flair,
                "text": m.text, "label": m.label, "topic_id": m.topic_id,
            }) + "\n")
    return path


def fast_config(**overrides):
    """A config small enough that a grid search finishes in seconds."""
    defaults = dict(
        learning_rate=1e-3,
        epochs=1,
        seed=0,
        grid=(0, 23),
        batch_size=16,
        max_length=32,
        hidden_size=16,
        num_layers=2,
        num_heads=2,
        intermediate_size=32,
        max_vocab=200,
    )
    defaults.update(overrides)
    return FinetuneConfig(**defaults)


@pytest.fixture()
def corpus():
    return make_messages()


@pytest.fixture()
def corpus_file(tmp_path, corpus):
    return write_jsonl(corpus, tmp_path / "messages.jsonl")
