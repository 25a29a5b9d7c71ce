"""Code-mixing detection for user-generated text.

The package builds per-message features from the disagreement between
language-specific subword tokenizers, adds character n-gram language
evidence and an optional contextual soft label, and trains small tree
ensembles on top. The `codemix` command line exposes the full pipeline:
synthetic corpus generation, training, prediction, cross-validation,
held-out and cross-lingual evaluation, topic analysis, and annotator
agreement.
"""

__version__ = "0.1.0"

FEATURE_SCHEMA_VERSION = 1
MODEL_FORMAT_VERSION = 1
