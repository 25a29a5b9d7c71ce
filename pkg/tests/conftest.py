import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from codemix.features import Resources, StubScorer
from codemix.langdetect import MixedLanguageDetector, NgramModel
from codemix.tokenization import BpeTokenizer, MergeTable, bpe_load

REPO_ROOT = Path(__file__).resolve().parent.parent
RESOURCES = REPO_ROOT / "resources"


@pytest.fixture(scope="session")
def repo_root() -> Path:
    return REPO_ROOT


@pytest.fixture(scope="session")
def resources_dir() -> Path:
    return RESOURCES


def _tokenizer(name: str) -> BpeTokenizer:
    d = RESOURCES / "tokenizers" / name
    return bpe_load(d / "vocab.json", d / "merges.txt", name=name)


@pytest.fixture(scope="session")
def english_tokenizer() -> BpeTokenizer:
    return _tokenizer("english")


@pytest.fixture(scope="session")
def finnish_tokenizer() -> BpeTokenizer:
    return _tokenizer("finnish")


@pytest.fixture(scope="session")
def spanish_tokenizer() -> BpeTokenizer:
    return _tokenizer("spanish")


@pytest.fixture(scope="session")
def multilingual_tokenizer() -> BpeTokenizer:
    return _tokenizer("multilingual")


@pytest.fixture(scope="session")
def english_lm() -> NgramModel:
    return NgramModel.load(RESOURCES / "langmodels" / "english.json")


@pytest.fixture(scope="session")
def finnish_lm() -> NgramModel:
    return NgramModel.load(RESOURCES / "langmodels" / "finnish.json")


@pytest.fixture(scope="session")
def spanish_lm() -> NgramModel:
    return NgramModel.load(RESOURCES / "langmodels" / "spanish.json")


@pytest.fixture(scope="session")
def fi_resources(
    english_tokenizer, finnish_tokenizer, multilingual_tokenizer, english_lm, finnish_lm
) -> Resources:
    return Resources(
        english_tokenizer=english_tokenizer,
        local_tokenizer=finnish_tokenizer,
        multilingual_tokenizer=multilingual_tokenizer,
        detector=MixedLanguageDetector([english_lm, finnish_lm], "en", "fi"),
        scorer=StubScorer(0.5),
    )


@pytest.fixture(scope="session")
def es_resources(
    english_tokenizer, spanish_tokenizer, multilingual_tokenizer, english_lm, spanish_lm
) -> Resources:
    return Resources(
        english_tokenizer=english_tokenizer,
        local_tokenizer=spanish_tokenizer,
        multilingual_tokenizer=multilingual_tokenizer,
        detector=MixedLanguageDetector([english_lm, spanish_lm], "en", "es"),
        scorer=StubScorer(0.5),
    )


@pytest.fixture()
def tiny_tokenizer() -> BpeTokenizer:
    """Hand-built table; merges: lo, ow, er, low, lower."""
    vocab = {t: i for i, t in enumerate(
        ["e", "l", "o", "r", "w", "lo", "ow", "er", "low", "lower"]
    )}
    merges = (("l", "o"), ("o", "w"), ("e", "r"), ("lo", "w"), ("low", "er"))
    return BpeTokenizer(MergeTable(merges=merges, vocab=vocab, name="tiny"))
