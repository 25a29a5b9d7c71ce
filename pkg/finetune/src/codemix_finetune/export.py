"""Flat-file exports consumed by the detector pipeline.

export_soft_labels writes one id<TAB>probability row per input message
(six decimals, probabilities from the classifier's softmax) in input
order, matching the detector's soft-label reader byte for byte.
Messages longer than the encoder's maximum length are truncated and a
warning naming the message is logged.

export_topics embeds every message with the encoder (mask-aware mean
pooling of the final hidden states), reduces dimensionality with a
seeded truncated SVD, and clusters with HDBSCAN. The minimum cluster
size follows the 0.3% rule: max(2, ceil(0.003 * N)), raised further by
an explicit configured minimum. Outliers get topic -1; a corpus too
small to cluster gets -1 everywhere with a warning.
"""

from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.cluster import HDBSCAN
from sklearn.decomposition import TruncatedSVD

from .config import TopicConfig
from .data import FtMessage, WordTokenizer, write_messages
from .errors import DataError
from .model import load_checkpoint, mean_pooled, predict_proba

logger = logging.getLogger(__name__)


def _encode_logged(
    tokenizer: WordTokenizer, messages: Sequence[FtMessage]
) -> list[list[int]]:
    encoded = []
    for m in messages:
        ids, cut = tokenizer.encode(m.text)
        if cut:
            logger.warning(
                "message %r truncated to %d tokens", m.id, tokenizer.max_length
            )
        encoded.append(ids)
    return encoded


def export_soft_labels(
    checkpoint_dir: str | Path,
    messages: Sequence[FtMessage],
    out_path: str | Path,
    batch_size: int = 32,
) -> int:
    """Write soft_labels.tsv for the given messages; returns the row count."""
    if not messages:
        raise DataError("no messages to export soft labels for")
    model, tokenizer = load_checkpoint(checkpoint_dir)
    encoded = _encode_logged(tokenizer, messages)
    probs = predict_proba(model, encoded, batch_size)
    out_path = Path(out_path)
    with out_path.open("w", encoding="utf-8") as fh:
        for m, p in zip(messages, probs):
            p = min(1.0, max(0.0, float(p)))
            fh.write(f"{m.id}\t{p:.6f}\n")
    return len(messages)


def effective_min_cluster_size(n_messages: int, configured: int) -> int:
    """The 0.3% rule floor, raised by an explicit configured minimum."""
    return max(2, math.ceil(0.003 * n_messages), configured)


def assign_topics(
    embeddings: np.ndarray, cfg: TopicConfig
) -> list[int]:
    """Cluster embedding rows; returns one topic id per row, -1 for outliers."""
    cfg.validate()
    n = embeddings.shape[0]
    min_size = effective_min_cluster_size(n, cfg.min_cluster_size)
    if n < 2 or n <= min_size:
        logger.warning(
            "corpus of %d message(s) is too small to cluster "
            "(minimum cluster size %d); assigning -1 everywhere", n, min_size,
        )
        return [-1] * n
    n_components = min(cfg.svd_components, n - 1, embeddings.shape[1] - 1)
    if n_components >= 1:
        reduced = TruncatedSVD(
            n_components=n_components, random_state=cfg.seed
        ).fit_transform(embeddings)
    else:
        reduced = embeddings
    labels = HDBSCAN(min_cluster_size=min_size).fit_predict(reduced)
    assignments = [int(t) for t in labels]
    sizes: dict[int, int] = {}
    for t in assignments:
        if t != -1:
            sizes[t] = sizes.get(t, 0) + 1
    undersized = {t for t, size in sizes.items() if size < min_size}
    if undersized:
        logger.warning(
            "dissolving %d cluster(s) below the minimum size %d",
            len(undersized), min_size,
        )
        assignments = [-1 if t in undersized else t for t in assignments]
    return assignments


def export_topics(
    checkpoint_dir: str | Path,
    messages: Sequence[FtMessage],
    out_path: str | Path,
    cfg: TopicConfig,
) -> list[int]:
    """Assign topics and write the corpus back out with topic_id filled in."""
    if not messages:
        raise DataError("no messages to assign topics to")
    cfg.validate()
    model, tokenizer = load_checkpoint(checkpoint_dir)
    encoded = _encode_logged(tokenizer, messages)
    embeddings = mean_pooled(model, encoded, cfg.batch_size)
    assignments = assign_topics(embeddings, cfg)
    enriched = [
        FtMessage(
            id=m.id, community=m.community, flair=m.flair,
            text=m.text, label=m.label, topic_id=t,
        )
        for m, t in zip(messages, assignments)
    ]
    write_messages(enriched, out_path)
    return assignments
