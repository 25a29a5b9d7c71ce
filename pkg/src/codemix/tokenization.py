"""Subword tokenization against fixed byte-pair merge tables.

A tokenizer is defined entirely by two files, vocab.json (token -> id)
and merges.txt (one merge per line, rank = line order). Encoding is
rank-greedy: the applicable merge with the lowest rank is applied at
its leftmost occurrence until no merge applies. Training merge tables
is out of scope; tables ship as resources.
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

from .errors import ValidationError


def whitespace_tokenize(text: str) -> list[str]:
    """Split on runs of unicode whitespace; never returns empty tokens."""
    return text.split()


def _char_class(ch: str) -> str:
    cat = unicodedata.category(ch)
    if cat[0] in ("L", "M"):
        return "L"
    if cat[0] == "N":
        return "N"
    return "P"


def pretokenize_word(word: str) -> list[str]:
    """Split a whitespace-free word at letter/digit/punctuation boundaries."""
    if not word:
        return []
    chunks: list[str] = []
    start = 0
    cls = _char_class(word[0])
    for i in range(1, len(word)):
        c = _char_class(word[i])
        if c != cls:
            chunks.append(word[start:i])
            start = i
            cls = c
    chunks.append(word[start:])
    return chunks


@dataclass(frozen=True)
class MergeTable:
    """An ordered merge list plus the vocabulary it may produce.

    Ranks are dense and unique by construction (position in the list).
    Validation rejects tables whose merges produce out-of-vocabulary
    tokens or reference symbols no earlier merge can build.
    """

    merges: tuple[tuple[str, str], ...]
    vocab: dict[str, int]
    name: str = ""
    ranks: dict[tuple[str, str], int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.vocab:
            raise ValidationError(f"tokenizer {self.name!r}: vocabulary is empty")
        ranks: dict[tuple[str, str], int] = {}
        produced: set[str] = set()
        for rank, (a, b) in enumerate(self.merges):
            if (a, b) in ranks:
                raise ValidationError(
                    f"tokenizer {self.name!r}: duplicate merge pair ({a!r}, {b!r}) at rank {rank}"
                )
            out = a + b
            if out not in self.vocab:
                raise ValidationError(
                    f"tokenizer {self.name!r}: merge at rank {rank} produces {out!r}, "
                    "which is not in the vocabulary"
                )
            for side in (a, b):
                if len(side) > 1 and side not in produced:
                    raise ValidationError(
                        f"tokenizer {self.name!r}: merge at rank {rank} references "
                        f"underivable symbol {side!r}"
                    )
            ranks[(a, b)] = rank
            produced.add(out)
        object.__setattr__(self, "ranks", ranks)


def _load_vocab(path: Path, name: str) -> dict[str, int]:
    try:
        with path.open(encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as e:
        raise ValidationError(f"{path}: invalid JSON ({e.msg})") from None
    if not isinstance(raw, dict):
        raise ValidationError(f"{path}: vocabulary must be a JSON object")
    ids: set[int] = set()
    for token, idx in raw.items():
        if isinstance(idx, bool) or not isinstance(idx, int):
            raise ValidationError(f"{path}: id for token {token!r} must be an integer")
        if idx in ids:
            raise ValidationError(f"{path}: duplicate token id {idx}")
        ids.add(idx)
    return raw


def _load_merges(path: Path) -> tuple[tuple[str, str], ...]:
    merges: list[tuple[str, str]] = []
    with path.open(encoding="utf-8") as fh:
        for ln, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split(" ")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise ValidationError(
                    f"{path}, line {ln}: expected two space-separated symbols"
                )
            merges.append((parts[0], parts[1]))
    return tuple(merges)


class BpeTokenizer:
    """Applies a MergeTable to text.

    Out-of-vocabulary handling: characters no merge reaches stay as
    single-character tokens (the default), or, with byte_fallback, any
    final single-character token missing from the vocabulary is
    expanded into the latin-1 rendering of its UTF-8 bytes.

    With a space_marker, the marker symbol is prepended to the first
    pre-token of every whitespace word before merging, matching the
    convention of published sentencepiece-style vocabularies.
    """

    def __init__(
        self,
        table: MergeTable,
        space_marker: Optional[str] = None,
        byte_fallback: bool = False,
    ) -> None:
        if space_marker is not None and len(space_marker) != 1:
            raise ValidationError("space_marker must be a single character")
        self.table = table
        self.name = table.name
        self.space_marker = space_marker
        self.byte_fallback = byte_fallback

    def in_vocab(self, token: str) -> bool:
        return token in self.table.vocab

    def merge_pretoken(
        self, pretoken: str, with_marker: bool = False
    ) -> tuple[list[str], list[tuple[int, int]]]:
        """Merge one pre-token; returns (tokens, log of (rank, position))."""
        if not pretoken:
            raise ValidationError("cannot encode an empty pre-token")
        symbols: list[str] = list(pretoken)
        if with_marker and self.space_marker is not None:
            symbols.insert(0, self.space_marker)
        ranks = self.table.ranks
        log: list[tuple[int, int]] = []
        while len(symbols) > 1:
            best: Optional[tuple[int, int]] = None
            for i in range(len(symbols) - 1):
                rank = ranks.get((symbols[i], symbols[i + 1]))
                if rank is not None and (best is None or (rank, i) < best):
                    best = (rank, i)
            if best is None:
                break
            rank, i = best
            symbols[i:i + 2] = [symbols[i] + symbols[i + 1]]
            log.append((rank, i))
        if self.byte_fallback:
            expanded: list[str] = []
            for tok in symbols:
                if len(tok) == 1 and tok not in self.table.vocab:
                    expanded.extend(tok.encode("utf-8").decode("latin-1"))
                else:
                    expanded.append(tok)
            symbols = expanded
        return symbols, log

    def encode_pretoken(self, pretoken: str, with_marker: bool = False) -> list[str]:
        return self.merge_pretoken(pretoken, with_marker=with_marker)[0]

    def reconstruct_pretoken(self, tokens: Sequence[str]) -> str:
        """Invert encode_pretoken (marker, if any, is kept by the caller)."""
        if not self.byte_fallback:
            return "".join(tokens)
        data = b"".join(
            t.encode("utf-8") if t in self.table.vocab else t.encode("latin-1")
            for t in tokens
        )
        return data.decode("utf-8")

    def encode_words(self, text: str) -> list[list[str]]:
        """Token lists grouped per whitespace word."""
        out: list[list[str]] = []
        for word in whitespace_tokenize(text):
            tokens: list[str] = []
            for j, pt in enumerate(pretokenize_word(word)):
                tokens.extend(self.encode_pretoken(pt, with_marker=(j == 0)))
            out.append(tokens)
        return out

    def encode(self, text: str) -> list[str]:
        return [tok for group in self.encode_words(text) for tok in group]

    def stats(self, text: str) -> "TokenStats":
        words = whitespace_tokenize(text)
        return token_stats(self.encode_words(text), words, known=self.in_vocab)


def bpe_load(
    vocab_path: str | Path,
    merges_path: str | Path,
    name: str = "",
    space_marker: Optional[str] = None,
    byte_fallback: bool = False,
) -> BpeTokenizer:
    vocab_path = Path(vocab_path)
    merges_path = Path(merges_path)
    vocab = _load_vocab(vocab_path, name)
    merges = _load_merges(merges_path)
    table = MergeTable(merges=merges, vocab=vocab, name=name or vocab_path.parent.name)
    return BpeTokenizer(table, space_marker=space_marker, byte_fallback=byte_fallback)


@dataclass(frozen=True)
class TokenStats:
    """Per-message statistics of one tokenization.

    fertility is tokens per whitespace word; max_split the largest
    per-word token count; frac_fragmented the fraction of words split
    into three or more tokens; frac_unk the fraction of tokens missing
    from the vocabulary. A message with no words yields the degenerate
    all-zero value with the flag set.
    """

    token_count: int
    word_count: int
    fertility: float
    max_split: int
    frac_fragmented: float
    frac_unk: float
    degenerate: bool = False


def token_stats(
    tokens_by_word: Sequence[Sequence[str]],
    words: Sequence[str],
    known: Optional[Callable[[str], bool]] = None,
) -> TokenStats:
    if len(tokens_by_word) != len(words):
        raise ValidationError(
            f"token groups ({len(tokens_by_word)}) do not align with words ({len(words)})"
        )
    word_count = len(words)
    if word_count == 0:
        return TokenStats(0, 0, 0.0, 0, 0.0, 0.0, degenerate=True)
    token_count = sum(len(g) for g in tokens_by_word)
    max_split = max(len(g) for g in tokens_by_word)
    fragmented = sum(1 for g in tokens_by_word if len(g) >= 3)
    if known is None:
        unk = 0
    else:
        unk = sum(1 for g in tokens_by_word for t in g if not known(t))
    return TokenStats(
        token_count=token_count,
        word_count=word_count,
        fertility=token_count / word_count,
        max_split=max_split,
        frac_fragmented=fragmented / word_count,
        frac_unk=(unk / token_count) if token_count else 0.0,
    )
