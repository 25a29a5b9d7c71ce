import math
import random
from pathlib import Path

import pytest

from codemix.analysis import (
    NO_FLAIR,
    ctfidf_terms,
    summarize_topics,
    topic_size_filter,
    write_topic_flair_csv,
)
from codemix.corpus import (
    Dataset,
    Message,
    SynthConfig,
    generate_synthetic,
    load_lexicon,
)
from codemix.errors import DataError, ValidationError
from oracles import oracle_ctfidf

LEXICONS = Path(__file__).resolve().parent.parent / "resources" / "lexicons"


class TestCtfidf:
    def test_hand_computed_score(self):
        # unigrams only; "alpha" appears 3x in topic 0 and 1x in topic 1.
        docs = {0: ["alpha alpha alpha beta"], 1: ["alpha gamma"]}
        out = ctfidf_terms(docs, top_k=4, ngram_range=(1, 1))
        # A = mean unigram tokens per topic = (4 + 2) / 2 = 3
        expected = 3 * math.log(1 + 3 / 4)
        got = dict(out[0])["alpha"]
        assert got == pytest.approx(expected, abs=1e-12)

    def test_matches_oracle(self):
        rng = random.Random(55)
        vocab = ["red", "green", "blue", "cyan", "teal", "plum", "gold"]
        tokenized = {
            t: [rng.choices(vocab, k=rng.randint(3, 12)) for _ in range(4)]
            for t in range(3)
        }
        docs = {t: [" ".join(words) for words in ds] for t, ds in tokenized.items()}
        for hi in (1, 2, 3):
            mine = ctfidf_terms(docs, top_k=200, ngram_range=(1, hi))
            want = oracle_ctfidf(tokenized, ngram_hi=hi)
            for topic, pairs in mine.items():
                assert {t for t, _ in pairs} == set(want[topic])
                for term, score in pairs:
                    assert score == pytest.approx(want[topic][term], abs=1e-9)

    def test_ties_sort_by_term(self):
        docs = {0: ["bb aa"], 1: ["cc dd"]}
        out = ctfidf_terms(docs, top_k=2, ngram_range=(1, 1))
        assert [t for t, _ in out[0]] == ["aa", "bb"]
        assert [t for t, _ in out[1]] == ["cc", "dd"]

    def test_scores_descend(self):
        docs = {0: ["x x x y z", "x y"], 1: ["z z q"]}
        out = ctfidf_terms(docs, top_k=10, ngram_range=(1, 2))
        for pairs in out.values():
            scores = [s for _, s in pairs]
            assert scores == sorted(scores, reverse=True)

    def test_top_k_truncates(self):
        docs = {0: ["a b c d e f"], 1: ["g h"]}
        out = ctfidf_terms(docs, top_k=3, ngram_range=(1, 1))
        assert len(out[0]) == 3

    def test_empty_topic_named(self):
        with pytest.raises(DataError, match="topic 7"):
            ctfidf_terms({7: ["...", "!!"], 0: ["fine text"]}, ngram_range=(1, 1))

    def test_bigrams_cross_word_boundaries_only_within_doc(self):
        docs = {0: ["aa bb", "cc dd"], 1: ["ee ff"]}
        out = ctfidf_terms(docs, top_k=20, ngram_range=(2, 2))
        terms = {t for t, _ in out[0]}
        assert "aa bb" in terms and "cc dd" in terms
        assert "bb cc" not in terms

    def test_parameter_validation(self):
        with pytest.raises(ValidationError):
            ctfidf_terms({0: ["a"]}, top_k=0)
        with pytest.raises(ValidationError):
            ctfidf_terms({0: ["a"]}, ngram_range=(0, 2))
        with pytest.raises(ValidationError):
            ctfidf_terms({0: ["a"]}, ngram_range=(2, 1))
        with pytest.raises(ValidationError):
            ctfidf_terms({}, top_k=5)


class TestTopicSizeFilter:
    def test_outlier_and_none_excluded(self):
        assignments = [-1] * 50 + [0] * 30 + [1] * 20 + [None] * 10
        assert topic_size_filter(assignments, min_fraction=0.1) == [0, 1]

    def test_cutoff_boundary_inclusive(self):
        # topic 1 holds exactly 10% of the 50 assigned messages
        assignments = [0] * 45 + [1] * 5
        assert topic_size_filter(assignments, min_fraction=0.1) == [0, 1]
        assert topic_size_filter(assignments, min_fraction=0.11) == [0]

    def test_all_unassigned(self):
        assert topic_size_filter([None, -1, -1]) == []

    def test_bad_fraction(self):
        with pytest.raises(ValidationError):
            topic_size_filter([0], min_fraction=1.5)


def planted_dataset():
    en = load_lexicon(LEXICONS / "english.txt")
    fi = load_lexicon(LEXICONS / "finnish.txt")
    common = dict(english_words=en, local_words=fi, local_tag="fi", seed=7)
    heavy = generate_synthetic(SynthConfig(
        n_messages=50, mix_rate=0.8, id_prefix="hot", topic_id=0,
        flair="question", **common))
    light = generate_synthetic(SynthConfig(
        n_messages=50, mix_rate=0.2, id_prefix="cold", topic_id=1,
        flair="story", **common))
    return Dataset(messages=heavy.messages + light.messages, source_tag="planted")


class TestSummarizeTopics:
    def test_recovers_planted_rates_exactly(self):
        summaries = summarize_topics(planted_dataset())
        by_id = {s.topic_id: s for s in summaries}
        assert set(by_id) == {0, 1}
        assert by_id[0].size == 50 and by_id[1].size == 50
        assert by_id[0].codemix_proportion == pytest.approx(0.8, abs=1e-12)
        assert by_id[1].codemix_proportion == pytest.approx(0.2, abs=1e-12)

    def test_flair_breakdown(self):
        summaries = summarize_topics(planted_dataset())
        by_id = {s.topic_id: s for s in summaries}
        assert set(by_id[0].flair_breakdown) == {"question"}
        cell = by_id[0].flair_breakdown["question"]
        assert cell.count == 50 and cell.mixed == 40
        assert cell.proportion == pytest.approx(0.8)

    def test_missing_flair_bucketed(self):
        msgs = tuple(
            Message(id=f"m{i}", community="c", flair=None, text="hello world",
                    label=i % 2, topic_id=0)
            for i in range(4)
        )
        summaries = summarize_topics(Dataset(messages=msgs, source_tag="t"))
        assert set(summaries[0].flair_breakdown) == {NO_FLAIR}

    def test_predicted_labels_fill_gaps(self):
        msgs = tuple(
            Message(id=f"m{i}", community="c", flair=None, text="hello world",
                    label=None, topic_id=0)
            for i in range(4)
        )
        predicted = {f"m{i}": 1 for i in range(4)}
        summaries = summarize_topics(Dataset(messages=msgs, source_tag="t"),
                                     predicted=predicted)
        assert summaries[0].mixed == 4

    def test_gold_label_wins_over_predicted(self):
        msgs = (Message(id="m0", community="c", flair=None, text="hello world",
                        label=0, topic_id=0),
                Message(id="m1", community="c", flair=None, text="hello world",
                        label=1, topic_id=0))
        summaries = summarize_topics(Dataset(messages=msgs, source_tag="t"),
                                     predicted={"m0": 1, "m1": 0})
        assert summaries[0].mixed == 1

    def test_unlabeled_message_named(self):
        msgs = (Message(id="mystery", community="c", flair=None, text="hello world",
                        label=None, topic_id=0),
                Message(id="m1", community="c", flair=None, text="hello world",
                        label=1, topic_id=0))
        with pytest.raises(DataError, match="mystery"):
            summarize_topics(Dataset(messages=msgs, source_tag="t"))

    def test_no_topics_assigned(self):
        msgs = (Message(id="m0", community="c", flair=None, text="hi there",
                        label=0, topic_id=None),)
        with pytest.raises(DataError, match="topic"):
            summarize_topics(Dataset(messages=msgs, source_tag="t"))

    def test_small_topics_dropped_by_fraction(self):
        msgs = tuple(
            Message(id=f"a{i}", community="c", flair=None, text="hello world",
                    label=0, topic_id=0)
            for i in range(99)
        ) + (Message(id="lone", community="c", flair=None, text="hello world",
                     label=1, topic_id=5),)
        summaries = summarize_topics(Dataset(messages=msgs, source_tag="t"),
                                     min_topic_fraction=0.05)
        assert [s.topic_id for s in summaries] == [0]

    def test_outlier_topic_excluded(self):
        msgs = tuple(
            Message(id=f"a{i}", community="c", flair=None, text="hello world",
                    label=0, topic_id=(-1 if i % 2 else 0))
            for i in range(10)
        )
        summaries = summarize_topics(Dataset(messages=msgs, source_tag="t"))
        assert [s.topic_id for s in summaries] == [0]

    def test_to_dict_shape(self):
        summary = summarize_topics(planted_dataset())[0]
        d = summary.to_dict()
        assert set(d) == {"topic_id", "size", "mixed", "codemix_proportion",
                          "top_terms", "flair_breakdown"}
        assert all(isinstance(t, str) and isinstance(s, float)
                   for t, s in d["top_terms"])


class TestTopicFlairCsv:
    def test_matrix_layout(self, tmp_path):
        path = tmp_path / "matrix.csv"
        write_topic_flair_csv(summarize_topics(planted_dataset()), path)
        lines = path.read_text(encoding="utf-8").splitlines()
        header = lines[0].split(",")
        assert header[:3] == ["topic_id", "size", "overall"]
        assert header[3:] == sorted(["question", "story"])
        row0 = lines[1].split(",")
        assert row0[0] == "0" and row0[1] == "50"
        assert row0[2] == "0.800000"
        # topic 0 has no story messages; that cell stays empty
        q_col = header.index("question")
        s_col = header.index("story")
        assert row0[q_col] == "0.800000"
        assert row0[s_col] == ""
        row1 = lines[2].split(",")
        assert row1[2] == "0.200000"
        assert row1[s_col] == "0.200000"
        assert row1[q_col] == ""
