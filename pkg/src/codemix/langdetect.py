"""Character n-gram language models and mixed-language detection.

Each model counts character n-grams (orders n_range[0]..n_range[1])
over a cleaned corpus: words are lowercased and stripped of digits and
punctuation before counting. Scoring uses add-one smoothing over the
model's own inventory, so seen probabilities at each order sum to one
exactly; unseen grams score the floor 1 / (N_n + V_n). A word belongs
to the model with the highest summed log-likelihood; per-word tags
aggregate into message-level mixed-language evidence.
"""

from __future__ import annotations

import json
import math
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .errors import DataError, ValidationError
from .tokenization import whitespace_tokenize

LANGMODEL_FORMAT_VERSION = 1


def clean_word(word: str) -> str:
    """Lowercase and keep letters (and combining marks) only."""
    kept = [ch for ch in word if unicodedata.category(ch)[0] in ("L", "M")]
    return "".join(kept).lower()


def _grams(word: str, n: int) -> list[str]:
    return [word[i:i + n] for i in range(len(word) - n + 1)]


@dataclass
class NgramModel:
    language: str
    n_range: tuple[int, int]
    counts: dict[int, dict[str, int]]

    def __post_init__(self) -> None:
        lo, hi = self.n_range
        if not (1 <= lo <= hi):
            raise ValidationError(f"bad n_range {self.n_range}; need 1 <= lo <= hi")
        if not self.language:
            raise ValidationError("model language tag must be non-empty")
        self._totals = {n: sum(c.values()) for n, c in self.counts.items()}
        self._vocab_sizes = {n: len(c) for n, c in self.counts.items()}

    def orders(self) -> range:
        return range(self.n_range[0], self.n_range[1] + 1)

    def prob(self, gram: str) -> Optional[float]:
        """Smoothed probability of a gram, or None if the order has no data."""
        n = len(gram)
        if n not in self.counts:
            return None
        denom = self._totals[n] + self._vocab_sizes[n]
        if denom == 0:
            return None
        return (self.counts[n].get(gram, 0) + 1) / denom

    def log_likelihood(self, word: str) -> float:
        """Sum of log gram probabilities over every order with data."""
        total = 0.0
        for n in self.orders():
            for gram in _grams(word, n):
                p = self.prob(gram)
                if p is not None:
                    total += math.log(p)
        return total

    def to_dict(self) -> dict:
        return {
            "format_version": LANGMODEL_FORMAT_VERSION,
            "language": self.language,
            "n_range": list(self.n_range),
            "counts": {str(n): dict(sorted(c.items())) for n, c in sorted(self.counts.items())},
        }

    def save(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, ensure_ascii=False, sort_keys=True, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "NgramModel":
        path = Path(path)
        try:
            with path.open(encoding="utf-8") as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as e:
            raise ValidationError(f"{path}: invalid JSON ({e.msg})") from None
        if raw.get("format_version") != LANGMODEL_FORMAT_VERSION:
            raise ValidationError(
                f"{path}: unsupported language model format_version {raw.get('format_version')!r}"
            )
        for key in ("language", "n_range", "counts"):
            if key not in raw:
                raise ValidationError(f"{path}: missing key {key!r}")
        counts = {int(n): dict(c) for n, c in raw["counts"].items()}
        return cls(language=raw["language"], n_range=tuple(raw["n_range"]), counts=counts)


def train_ngram_model(
    texts: Sequence[str], language: str, n_range: tuple[int, int] = (1, 5)
) -> NgramModel:
    lo, hi = n_range
    if not (1 <= lo <= hi):
        raise ValidationError(f"bad n_range {n_range}; need 1 <= lo <= hi")
    counts: dict[int, dict[str, int]] = {n: {} for n in range(lo, hi + 1)}
    total = 0
    for text in texts:
        for word in whitespace_tokenize(text):
            w = clean_word(word)
            if not w:
                continue
            for n in range(lo, hi + 1):
                for gram in _grams(w, n):
                    counts[n][gram] = counts[n].get(gram, 0) + 1
                    total += 1
    if total == 0:
        raise DataError(f"no usable words to train the {language!r} model")
    return NgramModel(language=language, n_range=(lo, hi), counts=counts)


@dataclass(frozen=True)
class WordScore:
    word: str
    scores: tuple[tuple[str, float], ...]
    best: str


def score_word(models: Sequence[NgramModel], word: str) -> WordScore:
    """Log-likelihood per model; ties keep the earliest model in the list."""
    if not word:
        raise ValidationError("cannot score an empty word")
    if not models:
        raise ValidationError("need at least one language model")
    scores = tuple((m.language, m.log_likelihood(word)) for m in models)
    best = max(scores, key=lambda kv: kv[1])
    for tag, value in scores:
        if value == best[1]:
            best = (tag, value)
            break
    return WordScore(word=word, scores=scores, best=best[0])


@dataclass(frozen=True)
class LangEvidence:
    """Message-level aggregation of per-word language assignments.

    Fractions use the total whitespace word count as denominator, so
    unassigned words (shorter than min_word_len after cleaning) dilute
    both. local_span_count counts maximal runs of consecutive words
    assigned to the local language.
    """

    english_present: bool
    local_present: bool
    local_fraction: float
    english_fraction: float
    local_span_count: int


def detect_mixed(
    models: Sequence[NgramModel],
    text: str,
    english_tag: str,
    local_tag: str,
    min_word_len: int = 3,
) -> LangEvidence:
    words = whitespace_tokenize(text)
    if not words:
        raise ValidationError("cannot detect languages in an empty message")
    tags = {m.language for m in models}
    if len(tags) != len(models):
        raise ValidationError("language model tags must be unique")
    for tag in (english_tag, local_tag):
        if tag not in tags:
            raise ValidationError(f"no model with language tag {tag!r}")
    if english_tag == local_tag:
        raise ValidationError("english_tag and local_tag must differ")
    if min_word_len < 1:
        raise ValidationError(f"min_word_len must be >= 1, got {min_word_len}")
    n_words = len(words)
    n_english = 0
    n_local = 0
    spans = 0
    in_span = False
    for word in words:
        w = clean_word(word)
        if len(w) < min_word_len:
            in_span = False
            continue
        tag = score_word(models, w).best
        if tag == english_tag:
            n_english += 1
        if tag == local_tag:
            n_local += 1
            if not in_span:
                spans += 1
                in_span = True
        else:
            in_span = False
    return LangEvidence(
        english_present=n_english > 0,
        local_present=n_local > 0,
        local_fraction=n_local / n_words,
        english_fraction=n_english / n_words,
        local_span_count=spans,
    )


class MixedLanguageDetector:
    """Bundles the model set with the tag pair a pipeline run uses."""

    def __init__(
        self,
        models: Sequence[NgramModel],
        english_tag: str,
        local_tag: str,
        min_word_len: int = 3,
    ) -> None:
        tags = [m.language for m in models]
        if len(set(tags)) != len(tags):
            raise ValidationError("language model tags must be unique")
        for tag in (english_tag, local_tag):
            if tag not in tags:
                raise ValidationError(f"no model with language tag {tag!r}")
        if english_tag == local_tag:
            raise ValidationError("english_tag and local_tag must differ")
        self.models = tuple(models)
        self.english_tag = english_tag
        self.local_tag = local_tag
        self.min_word_len = min_word_len

    def evidence(self, text: str) -> LangEvidence:
        return detect_mixed(
            self.models, text, self.english_tag, self.local_tag, self.min_word_len
        )
