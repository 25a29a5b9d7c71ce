"""Transformer fine-tuning companion to the code-mixing detector.

Trains a sequence classifier on labeled messages.jsonl and hands
results back to the detector as flat files: soft_labels.tsv with one
probability per message, and messages.jsonl enriched with clustered
topic_id values. The two packages share file formats, never code.
"""

from .config import FinetuneConfig, TopicConfig
from .data import FtMessage, WordTokenizer, read_messages, write_messages
from .errors import DataError, FinetuneError, ValidationError
from .export import assign_topics, export_soft_labels, export_topics
from .train import FinetuneResult, finetune

__all__ = [
    "DataError",
    "FinetuneConfig",
    "FinetuneError",
    "FinetuneResult",
    "FtMessage",
    "TopicConfig",
    "ValidationError",
    "WordTokenizer",
    "assign_topics",
    "export_soft_labels",
    "export_topics",
    "finetune",
    "read_messages",
    "write_messages",
]
