"""Run configuration for fine-tuning and topic export.

Defaults follow the reference setup: learning rate 0.5e-5, 10 epochs,
and the number of frozen encoder layers picked by grid search over
{0, 6, 12, 18, 23}. The frozen-layer count is validated against the
[0, 24] range of a 24-layer multilingual encoder; when the actual
encoder is smaller (the offline tiny model), grid entries are capped
at its layer count and deduplicated at train time.

base_model may point at a local checkpoint directory (saved by this
tool or any save_pretrained-compatible export plus a tokenizer.json).
When it is unset, a small randomly initialized encoder is built from
the *_size fields so the whole pipeline runs without network access.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import ValidationError

MAX_ENCODER_LAYERS = 24
DEFAULT_GRID = (0, 6, 12, 18, 23)


@dataclass(frozen=True)
class FinetuneConfig:
    learning_rate: float = 0.5e-5
    epochs: int = 10
    seed: int = 0
    grid: tuple[int, ...] = DEFAULT_GRID
    frozen_layers: Optional[int] = None
    base_model: Optional[str] = None
    batch_size: int = 16
    max_length: int = 64
    dev_fraction: float = 0.1
    max_vocab: int = 2000
    hidden_size: int = 32
    num_layers: int = 2
    num_heads: int = 2
    intermediate_size: int = 64

    def validate(self) -> None:
        if not self.learning_rate > 0:
            raise ValidationError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 0:
            raise ValidationError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ValidationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_length < 3:
            raise ValidationError(f"max_length must be >= 3, got {self.max_length}")
        if not 0.0 < self.dev_fraction < 1.0:
            raise ValidationError(f"dev_fraction must be in (0, 1), got {self.dev_fraction}")
        if self.max_vocab < 1:
            raise ValidationError(f"max_vocab must be >= 1, got {self.max_vocab}")
        if not self.grid:
            raise ValidationError("grid must list at least one frozen-layer count")
        for g in self.grid:
            self._check_frozen(g, "grid entry")
        if self.frozen_layers is not None:
            self._check_frozen(self.frozen_layers, "frozen_layers")
        if self.base_model is None:
            if self.num_layers < 1 or self.num_layers > MAX_ENCODER_LAYERS:
                raise ValidationError(
                    f"num_layers must be in [1, {MAX_ENCODER_LAYERS}], got {self.num_layers}"
                )
            if self.hidden_size < 1 or self.num_heads < 1 or self.intermediate_size < 1:
                raise ValidationError("model dimensions must be positive")
            if self.hidden_size % self.num_heads != 0:
                raise ValidationError(
                    f"hidden_size {self.hidden_size} is not divisible by num_heads {self.num_heads}"
                )

    @staticmethod
    def _check_frozen(value: int, what: str) -> None:
        if not 0 <= value <= MAX_ENCODER_LAYERS:
            raise ValidationError(
                f"{what} must be in [0, {MAX_ENCODER_LAYERS}], got {value}"
            )

    def to_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "seed": self.seed,
            "grid": list(self.grid),
            "frozen_layers": self.frozen_layers,
            "base_model": self.base_model,
            "batch_size": self.batch_size,
            "max_length": self.max_length,
            "dev_fraction": self.dev_fraction,
            "max_vocab": self.max_vocab,
            "hidden_size": self.hidden_size,
            "num_layers": self.num_layers,
            "num_heads": self.num_heads,
            "intermediate_size": self.intermediate_size,
        }


@dataclass(frozen=True)
class TopicConfig:
    """Clustering settings for topic export.

    min_cluster_size 0 means "apply the 0.3% rule": the effective
    minimum is max(2, ceil(0.003 * N)) for a corpus of N messages; an
    explicit positive value is still floored by that rule.
    """

    seed: int = 0
    svd_components: int = 16
    min_cluster_size: int = 0
    batch_size: int = 32

    def validate(self) -> None:
        if self.svd_components < 1:
            raise ValidationError(f"svd_components must be >= 1, got {self.svd_components}")
        if self.min_cluster_size < 0:
            raise ValidationError(
                f"min_cluster_size must be >= 0 (0 applies the 0.3% rule), "
                f"got {self.min_cluster_size}"
            )
        if self.batch_size < 1:
            raise ValidationError(f"batch_size must be >= 1, got {self.batch_size}")
