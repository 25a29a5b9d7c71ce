"""Per-message feature assembly.

Feature schema v1 concatenates, in fixed order: five token statistics
for each of four tokenizers (english, local, multilingual, whitespace),
five language-evidence values, and one contextual soft label. Models
record the schema version they were trained on and refuse vectors that
do not match.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Protocol, Sequence

from .corpus import Message
from .errors import DataError, ValidationError
from .langdetect import MixedLanguageDetector
from .tokenization import BpeTokenizer, TokenStats, token_stats, whitespace_tokenize

_STAT_FIELDS = ("token_count", "fertility", "max_split", "frac_fragmented", "frac_unk")
_TOKENIZER_SLOTS = ("english", "local", "multilingual", "whitespace")
_EVIDENCE_FIELDS = (
    "english_present",
    "local_present",
    "local_fraction",
    "english_fraction",
    "local_span_count",
)


@dataclass(frozen=True)
class FeatureSchema:
    version: int
    names: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ValidationError(f"unknown feature name {name!r}") from None

    def subset(self, indices: Sequence[int]) -> "FeatureSchema":
        """Derived schema for ablations; keeps the version, narrows names."""
        if not indices:
            raise ValidationError("feature subset must keep at least one feature")
        if len(set(indices)) != len(indices):
            raise ValidationError("feature subset indices must be unique")
        for i in indices:
            if not 0 <= i < len(self.names):
                raise ValidationError(f"feature index {i} out of range 0..{len(self.names) - 1}")
        return FeatureSchema(self.version, tuple(self.names[i] for i in indices))


def _schema_v1_names() -> tuple[str, ...]:
    names = [f"{slot}_{stat}" for slot in _TOKENIZER_SLOTS for stat in _STAT_FIELDS]
    names.extend(_EVIDENCE_FIELDS)
    names.append("soft_label")
    return tuple(names)


SCHEMA_V1 = FeatureSchema(version=1, names=_schema_v1_names())


@dataclass(frozen=True)
class FeatureVector:
    message_id: str
    values: tuple[float, ...]
    schema_version: int = SCHEMA_V1.version


class ContextualScorer(Protocol):
    def score(self, message: Message) -> float: ...


class StubScorer:
    """Constant soft label, for runs without a contextual model."""

    def __init__(self, value: float) -> None:
        if not 0.0 <= value <= 1.0:
            raise ValidationError(f"stub soft label must be in [0, 1], got {value}")
        self.value = float(value)

    def score(self, message: Message) -> float:
        return self.value


class FileScorer:
    """Soft labels read from a TSV produced by an external model."""

    def __init__(self, by_id: dict[str, float], source: str = "") -> None:
        self.by_id = by_id
        self.source = source

    def score(self, message: Message) -> float:
        try:
            return self.by_id[message.id]
        except KeyError:
            raise DataError(
                f"no soft label for message {message.id!r}"
                + (f" in {self.source}" if self.source else "")
            ) from None


def load_soft_labels(path: str | Path) -> FileScorer:
    """Parse an id<TAB>probability file; errors carry 1-based row numbers."""
    path = Path(path)
    by_id: dict[str, float] = {}
    with path.open(encoding="utf-8") as fh:
        for ln, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValidationError(f"{path.name}, row {ln}: expected id<TAB>probability")
            msg_id, raw = parts
            if not msg_id:
                raise ValidationError(f"{path.name}, row {ln}: empty message id")
            try:
                prob = float(raw)
            except ValueError:
                raise ValidationError(
                    f"{path.name}, row {ln}: probability {raw!r} is not a number"
                ) from None
            if not math.isfinite(prob) or not 0.0 <= prob <= 1.0:
                raise ValidationError(
                    f"{path.name}, row {ln}: probability {raw} outside [0, 1]"
                )
            if msg_id in by_id:
                raise ValidationError(f"{path.name}, row {ln}: duplicate id {msg_id!r}")
            by_id[msg_id] = prob
    return FileScorer(by_id, source=path.name)


def write_soft_labels(rows: Sequence[tuple[str, float]], path: str | Path) -> None:
    """Write id<TAB>probability rows, probabilities printed to 6 decimals."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for msg_id, prob in rows:
            if not 0.0 <= prob <= 1.0:
                raise ValidationError(f"soft label for {msg_id!r} outside [0, 1]: {prob}")
            fh.write(f"{msg_id}\t{prob:.6f}\n")


@dataclass(frozen=True)
class Resources:
    """Everything feature assembly needs besides the message itself."""

    english_tokenizer: BpeTokenizer
    local_tokenizer: BpeTokenizer
    multilingual_tokenizer: BpeTokenizer
    detector: MixedLanguageDetector
    scorer: ContextualScorer

    @property
    def local_tag(self) -> str:
        return self.detector.local_tag


def _stats_block(stats: TokenStats) -> list[float]:
    return [
        float(stats.token_count),
        float(stats.fertility),
        float(stats.max_split),
        float(stats.frac_fragmented),
        float(stats.frac_unk),
    ]


def assemble_features(message: Message, resources: Resources) -> FeatureVector:
    """Build the schema v1 vector for one message.

    Raises DataError for messages with no whitespace words (they carry
    no signal and upstream filtering should have removed them) and
    ValidationError if any produced value is non-finite.
    """
    words = whitespace_tokenize(message.text)
    if not words:
        raise DataError(f"message {message.id!r} has no words to featurize")
    values: list[float] = []
    for tok in (
        resources.english_tokenizer,
        resources.local_tokenizer,
        resources.multilingual_tokenizer,
    ):
        values.extend(_stats_block(tok.stats(message.text)))
    values.extend(_stats_block(token_stats([[w] for w in words], words)))
    ev = resources.detector.evidence(message.text)
    values.extend([
        1.0 if ev.english_present else 0.0,
        1.0 if ev.local_present else 0.0,
        float(ev.local_fraction),
        float(ev.english_fraction),
        float(ev.local_span_count),
    ])
    soft = float(resources.scorer.score(message))
    if not 0.0 <= soft <= 1.0:
        raise ValidationError(
            f"soft label for message {message.id!r} outside [0, 1]: {soft}"
        )
    values.append(soft)
    for name, v in zip(SCHEMA_V1.names, values):
        if not math.isfinite(v):
            raise ValidationError(
                f"feature {name!r} for message {message.id!r} is not finite: {v}"
            )
    return FeatureVector(message_id=message.id, values=tuple(values))


def assemble_many(
    messages: Sequence[Message],
    resources: Resources,
    feature_indices: Optional[Sequence[int]] = None,
) -> list[FeatureVector]:
    """Assemble vectors for many messages, optionally projected for ablations."""
    vectors = [assemble_features(m, resources) for m in messages]
    if feature_indices is None:
        return vectors
    SCHEMA_V1.subset(feature_indices)
    return [
        FeatureVector(
            message_id=v.message_id,
            values=tuple(v.values[i] for i in feature_indices),
            schema_version=v.schema_version,
        )
        for v in vectors
    ]
