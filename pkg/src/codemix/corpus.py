"""Corpus data model and I/O.

Messages travel between tools as JSON Lines with exactly these keys:
id, community, flair, text, label, topic_id. Unknown keys are ignored
on read and never emitted on write, so files written by newer tools
stay loadable. Text is NFC-normalized on load.
"""

from __future__ import annotations

import json
import random
import unicodedata
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator, Optional, Sequence

from .errors import DataError, ValidationError

JSONL_KEYS = ("id", "community", "flair", "text", "label", "topic_id")


@dataclass(frozen=True)
class Message:
    id: str
    community: str
    flair: Optional[str]
    text: str
    label: Optional[int]
    topic_id: Optional[int]

    def __post_init__(self) -> None:
        if not self.id:
            raise ValidationError("message id must be a non-empty string")
        if not self.text:
            raise ValidationError(f"message {self.id!r}: text must be non-empty")
        if self.label not in (None, 0, 1):
            raise ValidationError(
                f"message {self.id!r}: label must be 0, 1, or null, got {self.label!r}"
            )


@dataclass(frozen=True)
class Dataset:
    """An ordered collection of messages with unique ids."""

    messages: tuple[Message, ...]
    source_tag: str = ""

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for m in self.messages:
            if m.id in seen:
                raise ValidationError(f"duplicate message id {m.id!r}")
            seen.add(m.id)

    def __len__(self) -> int:
        return len(self.messages)

    def __iter__(self) -> Iterator[Message]:
        return iter(self.messages)

    def __getitem__(self, i: int) -> Message:
        return self.messages[i]

    def ids(self) -> tuple[str, ...]:
        return tuple(m.id for m in self.messages)


def _parse_message(obj: dict, where: str) -> Message:
    if not isinstance(obj, dict):
        raise ValidationError(f"{where}: expected a JSON object, got {type(obj).__name__}")
    for key, types in (("id", str), ("text", str)):
        if key not in obj:
            raise ValidationError(f"{where}: missing required key {key!r}")
        if not isinstance(obj[key], types):
            raise ValidationError(f"{where}: key {key!r} must be a string")
    community = obj.get("community", "")
    if not isinstance(community, str):
        raise ValidationError(f"{where}: key 'community' must be a string")
    flair = obj.get("flair")
    if flair is not None and not isinstance(flair, str):
        raise ValidationError(f"{where}: key 'flair' must be a string or null")
    label = obj.get("label")
    if label is not None and (isinstance(label, bool) or not isinstance(label, int)):
        raise ValidationError(f"{where}: key 'label' must be 0, 1, or null")
    topic_id = obj.get("topic_id")
    if topic_id is not None and (isinstance(topic_id, bool) or not isinstance(topic_id, int)):
        raise ValidationError(f"{where}: key 'topic_id' must be an integer or null")
    text = unicodedata.normalize("NFC", obj["text"])
    try:
        return Message(
            id=obj["id"], community=community, flair=flair,
            text=text, label=label, topic_id=topic_id,
        )
    except ValidationError as e:
        raise ValidationError(f"{where}: {e}") from None


def load_jsonl(path: str | Path, source_tag: str = "") -> Dataset:
    """Load a messages.jsonl file. Errors carry 1-based line numbers."""
    path = Path(path)
    messages: list[Message] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for ln, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            where = f"{path.name}, line {ln}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise ValidationError(f"{where}: invalid JSON ({e.msg})") from None
            msg = _parse_message(obj, where)
            if msg.id in seen:
                raise ValidationError(f"{where}: duplicate message id {msg.id!r}")
            seen.add(msg.id)
            messages.append(msg)
    return Dataset(tuple(messages), source_tag=source_tag or path.name)


def message_to_json(m: Message) -> str:
    payload = {k: getattr(m, k) for k in JSONL_KEYS}
    return json.dumps(payload, ensure_ascii=False)


def save_jsonl(dataset: Dataset, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for m in dataset:
            fh.write(message_to_json(m))
            fh.write("\n")


def whitespace_token_count(text: str) -> int:
    return len(text.split())


def filter_short(dataset: Dataset, min_tokens: int = 5) -> Dataset:
    """Drop messages with fewer than min_tokens whitespace tokens."""
    if min_tokens < 1:
        raise ValidationError(f"min_tokens must be >= 1, got {min_tokens}")
    kept = tuple(m for m in dataset if whitespace_token_count(m.text) >= min_tokens)
    return Dataset(kept, source_tag=dataset.source_tag)


@dataclass(frozen=True)
class CommunityCounts:
    non_mixed: int = 0
    code_mixed: int = 0
    unlabeled: int = 0

    @property
    def total(self) -> int:
        return self.non_mixed + self.code_mixed + self.unlabeled


@dataclass(frozen=True)
class CountsReport:
    per_community: dict[str, CommunityCounts]

    @property
    def totals(self) -> CommunityCounts:
        return CommunityCounts(
            non_mixed=sum(c.non_mixed for c in self.per_community.values()),
            code_mixed=sum(c.code_mixed for c in self.per_community.values()),
            unlabeled=sum(c.unlabeled for c in self.per_community.values()),
        )

    def to_dict(self) -> dict:
        out = {
            community: {
                "non_mixed": c.non_mixed,
                "code_mixed": c.code_mixed,
                "unlabeled": c.unlabeled,
                "total": c.total,
            }
            for community, c in sorted(self.per_community.items())
        }
        t = self.totals
        return {
            "per_community": out,
            "totals": {
                "non_mixed": t.non_mixed,
                "code_mixed": t.code_mixed,
                "unlabeled": t.unlabeled,
                "total": t.total,
            },
        }


def dataset_stats(dataset: Dataset) -> CountsReport:
    tallies: dict[str, list[int]] = {}
    for m in dataset:
        row = tallies.setdefault(m.community, [0, 0, 0])
        if m.label is None:
            row[2] += 1
        elif m.label == 1:
            row[1] += 1
        else:
            row[0] += 1
    return CountsReport({
        community: CommunityCounts(non_mixed=row[0], code_mixed=row[1], unlabeled=row[2])
        for community, row in tallies.items()
    })


@dataclass(frozen=True)
class SplitPlan:
    """Fold assignment per message index; folds partition the dataset."""

    k: int
    assignments: tuple[int, ...]
    seed: int

    def test_indices(self, fold: int) -> tuple[int, ...]:
        return tuple(i for i, f in enumerate(self.assignments) if f == fold)

    def train_indices(self, fold: int) -> tuple[int, ...]:
        return tuple(i for i, f in enumerate(self.assignments) if f != fold)


def stratified_kfold(dataset: Dataset, k: int, seed: int) -> SplitPlan:
    """Assign each message to one of k folds, stratified by label.

    Fold sizes differ by at most one, both globally and within each
    class: items are shuffled per class and dealt round-robin with a
    single cursor that persists across classes.
    """
    if k < 2:
        raise ValidationError(f"k must be >= 2, got {k}")
    by_class: dict[int, list[int]] = {0: [], 1: []}
    for i, m in enumerate(dataset):
        if m.label is None:
            raise ValidationError(f"stratified split requires labels; message {m.id!r} is unlabeled")
        by_class[m.label].append(i)
    for cls in (0, 1):
        if len(by_class[cls]) < k:
            raise DataError(
                f"class {cls} has {len(by_class[cls])} messages, fewer than k={k}"
            )
    rng = random.Random(seed)
    assignments = [0] * len(dataset)
    cursor = 0
    for cls in (0, 1):
        idxs = list(by_class[cls])
        rng.shuffle(idxs)
        for i in idxs:
            assignments[i] = cursor % k
            cursor += 1
    return SplitPlan(k=k, assignments=tuple(assignments), seed=seed)


def load_lexicon(path: str | Path) -> tuple[str, ...]:
    """Read one word per line; blank lines and '#' comments are skipped."""
    path = Path(path)
    words: list[str] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for ln, line in enumerate(fh, start=1):
            word = line.strip()
            if not word or word.startswith("#"):
                continue
            if any(ch.isspace() for ch in word):
                raise ValidationError(f"{path.name}, line {ln}: lexicon entries must be single words")
            word = unicodedata.normalize("NFC", word)
            if word not in seen:
                seen.add(word)
                words.append(word)
    if not words:
        raise DataError(f"lexicon {path.name} contains no words")
    return tuple(words)


@dataclass(frozen=True)
class SynthConfig:
    """Recipe for a deterministic synthetic bilingual corpus.

    Negatives are sentences drawn from the English lexicon; positives
    additionally carry one inserted span of local-language words.
    """

    n_messages: int
    mix_rate: float
    english_words: tuple[str, ...]
    local_words: tuple[str, ...]
    local_tag: str
    seed: int
    sentence_len_range: tuple[int, int] = (8, 16)
    span_len_range: tuple[int, int] = (1, 3)
    community: str = "synthetic"
    flair: Optional[str] = None
    topic_id: Optional[int] = None
    id_prefix: str = "syn"

    def validate(self) -> None:
        if self.n_messages < 1:
            raise ValidationError(f"n_messages must be >= 1, got {self.n_messages}")
        if not 0.0 <= self.mix_rate <= 1.0:
            raise ValidationError(f"mix_rate must be in [0, 1], got {self.mix_rate}")
        lo, hi = self.sentence_len_range
        if not 1 <= lo <= hi:
            raise ValidationError(f"bad sentence_len_range {self.sentence_len_range}")
        slo, shi = self.span_len_range
        if not (1 <= slo <= shi <= 5):
            raise ValidationError(f"span_len_range must lie within [1, 5], got {self.span_len_range}")
        if not self.english_words or not self.local_words:
            raise ValidationError("both lexicons must be non-empty")
        overlap = set(self.english_words) & set(self.local_words)
        if overlap:
            example = sorted(overlap)[0]
            raise ValidationError(
                f"lexicons must be disjoint; {len(overlap)} shared words, e.g. {example!r}"
            )


def generate_synthetic(cfg: SynthConfig) -> Dataset:
    """Generate a labeled corpus with exactly round(n * mix_rate) positives."""
    cfg.validate()
    rng = random.Random(cfg.seed)
    n_mixed = round(cfg.n_messages * cfg.mix_rate)
    mixed_idx = set(rng.sample(range(cfg.n_messages), n_mixed))
    messages: list[Message] = []
    for i in range(cfg.n_messages):
        length = rng.randint(*cfg.sentence_len_range)
        words = [rng.choice(cfg.english_words) for _ in range(length)]
        mixed = i in mixed_idx
        if mixed:
            span_len = rng.randint(*cfg.span_len_range)
            span = [rng.choice(cfg.local_words) for _ in range(span_len)]
            pos = rng.randint(0, length)
            words[pos:pos] = span
        messages.append(Message(
            id=f"{cfg.id_prefix}-{i:05d}",
            community=cfg.community,
            flair=cfg.flair,
            text=" ".join(words),
            label=1 if mixed else 0,
            topic_id=cfg.topic_id,
        ))
    return Dataset(tuple(messages), source_tag=f"synthetic:{cfg.local_tag}:seed{cfg.seed}")
