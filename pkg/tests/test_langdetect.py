import json
import math

import pytest

from codemix.errors import DataError, ValidationError
from codemix.langdetect import (
    MixedLanguageDetector,
    NgramModel,
    clean_word,
    detect_mixed,
    score_word,
    train_ngram_model,
)


class TestCleanWord:
    def test_strips_punctuation_and_digits(self):
        assert clean_word("Don't!") == "dont"
        assert clean_word("Moikka123") == "moikka"
        assert clean_word("42") == ""

    def test_keeps_combining_marks(self):
        assert clean_word("päivä") == "päivä"


class TestTraining:
    def test_counts_on_tiny_corpus(self):
        m = train_ngram_model(["ab", "ab b"], "x", n_range=(1, 2))
        assert m.counts[1] == {"a": 2, "b": 3}
        assert m.counts[2] == {"ab": 2}

    def test_cleaning_applied_before_counting(self):
        m = train_ngram_model(["AB! 42 a-b"], "x", n_range=(1, 1))
        assert m.counts[1] == {"a": 2, "b": 2}

    def test_empty_corpus_rejected(self):
        with pytest.raises(DataError):
            train_ngram_model(["123 !!!"], "x")

    def test_bad_n_range_rejected(self):
        with pytest.raises(ValidationError):
            train_ngram_model(["abc"], "x", n_range=(3, 2))


class TestSmoothing:
    def test_laplace_probabilities(self):
        # unigrams: a:2 b:3, N=5, V=2
        m = train_ngram_model(["ab", "ab b"], "x", n_range=(1, 2))
        assert m.prob("a") == pytest.approx(3 / 7)
        assert m.prob("b") == pytest.approx(4 / 7)
        assert m.prob("c") == pytest.approx(1 / 7)

    def test_seen_probabilities_sum_to_one(self):
        m = train_ngram_model(["ab", "ab b"], "x", n_range=(1, 2))
        for n, counts in m.counts.items():
            assert sum(m.prob(g) for g in counts) == pytest.approx(1.0, abs=1e-12)

    def test_unseen_floor_not_above_seen_minimum(self):
        m = train_ngram_model(["ab", "ab b"], "x", n_range=(1, 1))
        assert m.prob("q") <= min(m.prob("a"), m.prob("b"))

    def test_order_without_data_returns_none(self):
        m = train_ngram_model(["ab"], "x", n_range=(1, 5))
        assert m.prob("abcde") is None

    def test_shipped_models_sum_to_one_per_order(self, finnish_lm, english_lm, spanish_lm):
        for model in (finnish_lm, english_lm, spanish_lm):
            for n, counts in model.counts.items():
                total = sum(model.prob(g) for g in counts)
                assert total == pytest.approx(1.0, abs=1e-9), (model.language, n)


def make_models():
    a = train_ngram_model(["aaaa", "aaab", "abaa"], "A", n_range=(1, 3))
    b = train_ngram_model(["zzzz", "zzyz", "yzzz"], "B", n_range=(1, 3))
    return a, b


class TestScoreWord:
    def test_argmax_on_separable_words(self):
        a, b = make_models()
        assert score_word([a, b], "aaaa").best == "A"
        assert score_word([a, b], "zzzz").best == "B"

    def test_tie_keeps_first_model(self):
        a = train_ngram_model(["abc"], "first", n_range=(1, 2))
        b = train_ngram_model(["abc"], "second", n_range=(1, 2))
        assert score_word([a, b], "abc").best == "first"
        assert score_word([b, a], "abc").best == "second"

    def test_scores_listed_per_model(self):
        a, b = make_models()
        ws = score_word([a, b], "aaaa")
        assert [tag for tag, _ in ws.scores] == ["A", "B"]
        assert ws.scores[0][1] > ws.scores[1][1]

    def test_empty_word_rejected(self):
        a, b = make_models()
        with pytest.raises(ValidationError):
            score_word([a, b], "")

    def test_no_models_rejected(self):
        with pytest.raises(ValidationError):
            score_word([], "word")

    def test_toy_resource_models_classify_anchor_words(self, english_lm, finnish_lm, spanish_lm):
        assert score_word([english_lm, finnish_lm], "kiitos").best == "fi"
        assert score_word([english_lm, finnish_lm], "appointment").best == "en"
        assert score_word([english_lm, spanish_lm], "gracias").best == "es"


class TestDetectMixed:
    def test_fractions_and_spans(self):
        a, b = make_models()
        # xy is shorter than min_word_len and stays unassigned
        ev = detect_mixed([a, b], "aaaa zzzz xy aaaa zzzz zzzz", "A", "B")
        assert ev.english_present and ev.local_present
        assert ev.english_fraction == pytest.approx(2 / 6)
        assert ev.local_fraction == pytest.approx(3 / 6)
        assert ev.local_span_count == 2

    def test_pure_english_no_local_evidence(self):
        a, b = make_models()
        ev = detect_mixed([a, b], "aaaa abaa aaab", "A", "B")
        assert not ev.local_present
        assert ev.local_fraction == 0.0
        assert ev.local_span_count == 0

    def test_presence_iff_positive_fraction(self):
        a, b = make_models()
        for text in ("aaaa zzzz", "aaaa aaab", "zzzz yzzz"):
            ev = detect_mixed([a, b], text, "A", "B")
            assert ev.local_present == (ev.local_fraction > 0)
            assert ev.english_present == (ev.english_fraction > 0)

    def test_unassigned_word_breaks_span(self):
        a, b = make_models()
        ev = detect_mixed([a, b], "zzzz xy zzzz", "A", "B")
        assert ev.local_span_count == 2

    def test_consecutive_local_words_one_span(self):
        a, b = make_models()
        ev = detect_mixed([a, b], "aaaa zzzz zzyz yzzz aaab", "A", "B")
        assert ev.local_span_count == 1

    def test_empty_text_rejected(self):
        a, b = make_models()
        with pytest.raises(ValidationError):
            detect_mixed([a, b], "   ", "A", "B")

    def test_unknown_tag_rejected(self):
        a, b = make_models()
        with pytest.raises(ValidationError, match="'C'"):
            detect_mixed([a, b], "aaaa", "A", "C")

    def test_same_tags_rejected(self):
        a, b = make_models()
        with pytest.raises(ValidationError):
            detect_mixed([a, b], "aaaa", "A", "A")

    def test_min_word_len_validated(self):
        a, b = make_models()
        with pytest.raises(ValidationError):
            detect_mixed([a, b], "aaaa", "A", "B", min_word_len=0)

    def test_composed_bilingual_sentences(self, english_lm, finnish_lm):
        det = MixedLanguageDetector([english_lm, finnish_lm], "en", "fi")
        mixed = det.evidence("I got an appointment at the terveyskeskus kiitos")
        assert mixed.local_present and mixed.english_present
        assert mixed.local_span_count >= 1
        pure = det.evidence("the doctor gave me good advice today")
        assert not pure.local_present


class TestDetectorBundle:
    def test_duplicate_model_tags_rejected(self):
        a, _ = make_models()
        a2 = train_ngram_model(["aaa"], "A")
        with pytest.raises(ValidationError, match="unique"):
            MixedLanguageDetector([a, a2], "A", "B")

    def test_missing_tag_rejected(self):
        a, b = make_models()
        with pytest.raises(ValidationError):
            MixedLanguageDetector([a, b], "en", "B")


class TestSerialization:
    def test_round_trip(self, tmp_path):
        a, _ = make_models()
        p = tmp_path / "model.json"
        a.save(p)
        loaded = NgramModel.load(p)
        assert loaded.language == a.language
        assert loaded.n_range == a.n_range
        assert loaded.counts == a.counts
        assert loaded.log_likelihood("aaab") == pytest.approx(a.log_likelihood("aaab"))

    def test_unsupported_format_version(self, tmp_path):
        p = tmp_path / "model.json"
        p.write_text(json.dumps({"format_version": 99, "language": "x",
                                 "n_range": [1, 2], "counts": {}}), encoding="utf-8")
        with pytest.raises(ValidationError, match="format_version"):
            NgramModel.load(p)

    def test_missing_key(self, tmp_path):
        p = tmp_path / "model.json"
        p.write_text(json.dumps({"format_version": 1, "language": "x"}), encoding="utf-8")
        with pytest.raises(ValidationError, match="n_range"):
            NgramModel.load(p)

    def test_log_likelihood_finite_on_unseen_text(self, finnish_lm):
        ll = finnish_lm.log_likelihood("qqqqqq")
        assert math.isfinite(ll)
