"""Message I/O and word-level tokenization.

This package exchanges data with the detector pipeline through flat
files only: messages.jsonl in (exactly the keys id, community, flair,
text, label, topic_id) and soft_labels.tsv / an enriched messages.jsonl
out. The reader here is an independent implementation of that format;
unknown keys are ignored on read and never emitted on write.

The tokenizer is a plain whitespace word-level vocabulary built from
the training corpus. It exists so the encoder can run fully offline on
synthetic data; it is saved next to the model checkpoint and reloaded
for export, so train and inference always agree on ids.
"""

from __future__ import annotations

import json
import unicodedata
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .errors import DataError, ValidationError

JSONL_KEYS = ("id", "community", "flair", "text", "label", "topic_id")

PAD, BOS, EOS, UNK = "<pad>", "<s>", "</s>", "<unk>"
SPECIALS = (PAD, BOS, EOS, UNK)
PAD_ID, BOS_ID, EOS_ID, UNK_ID = 0, 1, 2, 3


@dataclass(frozen=True)
class FtMessage:
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


def _parse_message(obj: object, where: str) -> FtMessage:
    if not isinstance(obj, dict):
        raise ValidationError(f"{where}: expected a JSON object, got {type(obj).__name__}")
    for key in ("id", "text"):
        if key not in obj:
            raise ValidationError(f"{where}: missing required key {key!r}")
        if not isinstance(obj[key], str):
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
        return FtMessage(
            id=obj["id"], community=community, flair=flair,
            text=text, label=label, topic_id=topic_id,
        )
    except ValidationError as e:
        raise ValidationError(f"{where}: {e}") from None


def read_messages(path: str | Path) -> list[FtMessage]:
    """Load a messages.jsonl file. Errors carry 1-based line numbers."""
    path = Path(path)
    messages: list[FtMessage] = []
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
    if not messages:
        raise DataError(f"{path.name} contains no messages")
    return messages


def write_messages(messages: Iterable[FtMessage], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for m in messages:
            payload = {k: getattr(m, k) for k in JSONL_KEYS}
            fh.write(json.dumps(payload, ensure_ascii=False))
            fh.write("\n")


class WordTokenizer:
    """Whitespace word-level tokenizer with pad/bos/eos/unk specials.

    Word ids start after the four specials and are assigned by corpus
    frequency (ties broken alphabetically), capped at max_vocab words,
    so the mapping is deterministic for a given corpus.
    """

    def __init__(self, words: Sequence[str], max_length: int) -> None:
        if max_length < 3:
            raise ValidationError(f"max_length must be >= 3, got {max_length}")
        self.words = tuple(words)
        self.max_length = max_length
        self._ids = {w: i + len(SPECIALS) for i, w in enumerate(self.words)}
        if len(self._ids) != len(self.words):
            raise ValidationError("tokenizer word list contains duplicates")
        for special in SPECIALS:
            if special in self._ids:
                raise ValidationError(f"tokenizer word list contains special token {special!r}")

    @property
    def vocab_size(self) -> int:
        return len(SPECIALS) + len(self.words)

    @classmethod
    def from_corpus(cls, texts: Iterable[str], max_vocab: int, max_length: int) -> "WordTokenizer":
        if max_vocab < 1:
            raise ValidationError(f"max_vocab must be >= 1, got {max_vocab}")
        counts: Counter[str] = Counter()
        for text in texts:
            counts.update(w for w in text.split() if w not in SPECIALS)
        ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        return cls([w for w, _ in ranked[:max_vocab]], max_length=max_length)

    def encode(self, text: str) -> tuple[list[int], bool]:
        """Return (ids with bos/eos, truncated flag).

        Sequences longer than max_length are cut so the final token is
        always eos; the flag lets callers log the overflow per message.
        """
        ids = [BOS_ID]
        ids.extend(self._ids.get(w, UNK_ID) for w in text.split())
        ids.append(EOS_ID)
        if len(ids) <= self.max_length:
            return ids, False
        return ids[: self.max_length - 1] + [EOS_ID], True

    def save(self, path: str | Path) -> None:
        payload = {
            "format": "word-tokenizer-v1",
            "specials": list(SPECIALS),
            "max_length": self.max_length,
            "words": list(self.words),
        }
        Path(path).write_text(
            json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "WordTokenizer":
        path = Path(path)
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ValidationError(f"{path.name}: invalid JSON ({e.msg})") from None
        if not isinstance(payload, dict) or payload.get("format") != "word-tokenizer-v1":
            raise ValidationError(f"{path.name}: not a word-tokenizer-v1 file")
        if payload.get("specials") != list(SPECIALS):
            raise ValidationError(f"{path.name}: unexpected special tokens")
        words = payload.get("words")
        max_length = payload.get("max_length")
        if not isinstance(words, list) or not all(isinstance(w, str) for w in words):
            raise ValidationError(f"{path.name}: 'words' must be a list of strings")
        if not isinstance(max_length, int):
            raise ValidationError(f"{path.name}: 'max_length' must be an integer")
        return cls(words, max_length=max_length)


def pad_batch(encoded: Sequence[Sequence[int]]) -> tuple[list[list[int]], list[list[int]]]:
    """Pad ragged id lists to a rectangle; returns (input_ids, attention_mask)."""
    if not encoded:
        raise DataError("cannot pad an empty batch")
    width = max(len(ids) for ids in encoded)
    input_ids = []
    attention = []
    for ids in encoded:
        gap = width - len(ids)
        input_ids.append(list(ids) + [PAD_ID] * gap)
        attention.append([1] * len(ids) + [0] * gap)
    return input_ids, attention
