"""Topic-level analysis of code-mixing.

Characterizes topics by class-based TF-IDF terms and reports, per
topic and per flair, what share of messages is code-mixed. Topic
assignments come with the data (topic_id); -1 and missing ids mean
unassigned and are excluded.
"""

from __future__ import annotations

import csv
import math
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

from .corpus import Dataset
from .errors import DataError, ValidationError

_WORD_RE = re.compile(r"[^\W_]+")

NO_FLAIR = "(none)"


def _words(text: str) -> list[str]:
    return _WORD_RE.findall(text.lower())


def _terms(text: str, ngram_range: tuple[int, int]) -> list[str]:
    words = _words(text)
    lo, hi = ngram_range
    out: list[str] = []
    for n in range(lo, hi + 1):
        out.extend(" ".join(words[i:i + n]) for i in range(len(words) - n + 1))
    return out


def ctfidf_terms(
    docs_by_topic: Mapping[int, Sequence[str]],
    top_k: int = 10,
    ngram_range: tuple[int, int] = (1, 2),
) -> dict[int, list[tuple[str, float]]]:
    """Top class-based TF-IDF terms per topic.

    Documents of one topic are pooled; a term scores
    tf * log(1 + A / f) where tf counts it inside the topic, f across
    all topics, and A is the mean unigram token count per topic. Ties
    break by term, ascending, for deterministic output.
    """
    if top_k < 1:
        raise ValidationError(f"top_k must be >= 1, got {top_k}")
    lo, hi = ngram_range
    if not (1 <= lo <= hi <= 3):
        raise ValidationError(f"ngram_range must satisfy 1 <= lo <= hi <= 3, got {ngram_range}")
    if not docs_by_topic:
        raise ValidationError("no topics to analyze")
    tf: dict[int, Counter] = {}
    word_counts: dict[int, int] = {}
    for topic, docs in docs_by_topic.items():
        counter: Counter = Counter()
        n_words = 0
        for doc in docs:
            counter.update(_terms(doc, ngram_range))
            n_words += len(_words(doc))
        if not counter:
            raise DataError(f"topic {topic} has no terms to score")
        tf[topic] = counter
        word_counts[topic] = n_words
    avg_words = sum(word_counts.values()) / len(word_counts)
    freq: Counter = Counter()
    for counter in tf.values():
        freq.update(counter)
    out: dict[int, list[tuple[str, float]]] = {}
    for topic, counter in tf.items():
        scored = [
            (term, count * math.log(1.0 + avg_words / freq[term]))
            for term, count in counter.items()
        ]
        scored.sort(key=lambda kv: (-kv[1], kv[0]))
        out[topic] = scored[:top_k]
    return out


def topic_size_filter(
    assignments: Sequence[Optional[int]], min_fraction: float = 0.003
) -> list[int]:
    """Topic ids covering at least min_fraction of assigned messages.

    The outlier topic -1 and unassigned (None) entries never pass.
    """
    if not 0.0 <= min_fraction <= 1.0:
        raise ValidationError(f"min_fraction must be in [0, 1], got {min_fraction}")
    sizes: Counter = Counter(t for t in assignments if t is not None and t >= 0)
    total = sum(sizes.values())
    if total == 0:
        return []
    cutoff = min_fraction * total
    return sorted(t for t, size in sizes.items() if size >= cutoff)


@dataclass(frozen=True)
class FlairCell:
    count: int
    mixed: int

    @property
    def proportion(self) -> float:
        return self.mixed / self.count if self.count else 0.0


@dataclass(frozen=True)
class TopicSummary:
    topic_id: int
    size: int
    mixed: int
    top_terms: tuple[tuple[str, float], ...]
    flair_breakdown: dict[str, FlairCell]

    @property
    def codemix_proportion(self) -> float:
        return self.mixed / self.size

    def to_dict(self) -> dict:
        return {
            "topic_id": self.topic_id,
            "size": self.size,
            "mixed": self.mixed,
            "codemix_proportion": self.codemix_proportion,
            "top_terms": [[t, s] for t, s in self.top_terms],
            "flair_breakdown": {
                flair: {
                    "count": cell.count,
                    "mixed": cell.mixed,
                    "proportion": cell.proportion,
                }
                for flair, cell in sorted(self.flair_breakdown.items())
            },
        }


def _label_of(m, predicted: Optional[Mapping[str, int]]) -> int:
    if m.label is not None:
        return m.label
    if predicted is not None and m.id in predicted:
        return predicted[m.id]
    raise DataError(f"message {m.id!r} has neither a gold nor a predicted label")


def summarize_topics(
    dataset: Dataset,
    predicted: Optional[Mapping[str, int]] = None,
    min_topic_fraction: float = 0.003,
    top_k: int = 10,
    ngram_range: tuple[int, int] = (1, 2),
) -> list[TopicSummary]:
    """Per-topic code-mixing summaries, ordered by topic id.

    Labels come from the message itself or, failing that, from the
    predicted mapping; a message with neither is an error.
    """
    assigned = [m for m in dataset if m.topic_id is not None and m.topic_id >= 0]
    if not assigned:
        raise DataError("no messages carry a topic assignment")
    kept = set(topic_size_filter([m.topic_id for m in assigned], min_topic_fraction))
    if not kept:
        raise DataError("no topic passes the size filter")
    docs_by_topic: dict[int, list[str]] = {t: [] for t in sorted(kept)}
    for m in assigned:
        if m.topic_id in kept:
            docs_by_topic[m.topic_id].append(m.text)
    top_terms = ctfidf_terms(docs_by_topic, top_k=top_k, ngram_range=ngram_range)
    summaries: list[TopicSummary] = []
    for topic in sorted(kept):
        members = [m for m in assigned if m.topic_id == topic]
        mixed = 0
        cells: dict[str, list[int]] = {}
        for m in members:
            label = _label_of(m, predicted)
            flair = m.flair if m.flair is not None else NO_FLAIR
            cell = cells.setdefault(flair, [0, 0])
            cell[0] += 1
            if label == 1:
                mixed += 1
                cell[1] += 1
        summaries.append(TopicSummary(
            topic_id=topic,
            size=len(members),
            mixed=mixed,
            top_terms=tuple(top_terms[topic]),
            flair_breakdown={
                flair: FlairCell(count=c, mixed=mx) for flair, (c, mx) in cells.items()
            },
        ))
    return summaries


def write_topic_flair_csv(summaries: Sequence[TopicSummary], path: str | Path) -> None:
    """Matrix of code-mixed proportions, topics as rows, flairs as columns."""
    flairs = sorted({f for s in summaries for f in s.flair_breakdown})
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["topic_id", "size", "overall"] + flairs)
        for s in summaries:
            row: list[str] = [str(s.topic_id), str(s.size), f"{s.codemix_proportion:.6f}"]
            for flair in flairs:
                cell = s.flair_breakdown.get(flair)
                row.append(f"{cell.proportion:.6f}" if cell else "")
            writer.writerow(row)
