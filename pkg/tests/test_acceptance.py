"""Acceptance checks for the full pipeline.

Each test prints one PASS/FAIL line (run with -s for the checklist
view) and asserts both the quality target and the runtime budget, so
a red line always comes with the measured numbers attached.
"""

import json
import math
import random
import time
from pathlib import Path

import numpy as np
import pytest

from codemix.corpus import (
    Dataset,
    Message,
    SynthConfig,
    dataset_stats,
    filter_short,
    generate_synthetic,
    load_lexicon,
    stratified_kfold,
)
from codemix.analysis import ctfidf_terms, summarize_topics
from codemix.ensemble import TrainConfig, save_model, train_forest
from codemix.errors import DataError, SchemaMismatchError, ValidationError
from codemix.evaluation import (
    AgreementTable,
    accuracy,
    crossval,
    fit_model,
    krippendorff_alpha,
    macro_f1,
    roc_auc,
    zero_shot_eval,
)
from codemix.features import FeatureVector, SCHEMA_V1, assemble_features, assemble_many
from codemix.tokenization import BpeTokenizer, MergeTable, pretokenize_word, token_stats
from oracles import oracle_auc, oracle_bpe_encode, oracle_cart
from test_tokenization import random_table

REPO = Path(__file__).resolve().parent.parent
LEXICONS = REPO / "resources" / "lexicons"


def verdict(name, ok, detail):
    print(f"\n[acceptance] {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{name}: {detail}"


def test_bpe_oracle_equivalence_and_lossless_round_trip():
    start = time.monotonic()
    rng = random.Random(424242)
    table = random_table(rng, alphabet="abcdef", n_merges=24)
    tok = BpeTokenizer(table)
    mismatches = 0
    for _ in range(200):
        s = "".join(rng.choice("abcdef") for _ in range(rng.randint(1, 20)))
        if tok.encode_pretoken(s) != oracle_bpe_encode(table.merges, s):
            mismatches += 1

    byte_tok = BpeTokenizer(table, byte_fallback=True)
    pools = (
        "abcdef", "ghijkl", "äöåüéñ", "терве", "안녕하세요", "日本語漢字",
        "🙂🌍🚀", "áë", "!?.,:;()", "0123456789",
    )
    failures = 0
    for _ in range(10_000):
        n_words = rng.randint(1, 4)
        words = []
        for _ in range(n_words):
            pool = rng.choice(pools)
            words.append("".join(rng.choice(pool) for _ in range(rng.randint(1, 8))))
        text = " ".join(words)
        for t in (tok, byte_tok):
            for word, tokens in zip(words, t.encode_words(text)):
                if t.reconstruct_pretoken(tokens) != word:
                    failures += 1
    elapsed = time.monotonic() - start
    ok = mismatches == 0 and failures == 0 and elapsed < 5.0
    verdict(
        "bpe oracle + round trip",
        ok,
        f"mismatches={mismatches}/200, round-trip failures={failures}/10000, "
        f"{elapsed:.2f}s < 5s",
    )


def test_metric_oracles():
    rng = random.Random(31337)
    auc_mismatches = 0
    for _ in range(1000):
        n = rng.randint(4, 50)
        labels = [rng.randint(0, 1) for _ in range(n)]
        if len(set(labels)) < 2:
            labels[0] = 1 - labels[0]
        scores = [rng.choice([0.0, 0.25, 0.5, rng.random()]) for _ in range(n)]
        if roc_auc(labels, scores) != oracle_auc(labels, scores):
            auc_mismatches += 1

    gold, pred = [1, 1, 0, 0, 1], [1, 0, 0, 0, 1]
    acc_ok = accuracy(gold, pred) == pytest.approx(0.8)
    f1_ok = macro_f1(gold, pred) == pytest.approx(0.8)
    tie_auc_ok = roc_auc([1, 1, 0, 0], [0.9, 0.4, 0.3, 0.4]) == pytest.approx(0.875)

    table = AgreementTable(("i1", "i2", "i3", "i4"), ((1, 1), (1, 0), (0, 0), (0, 0)))
    alpha = krippendorff_alpha(table)
    alpha_ok = abs(alpha - 8.0 / 15.0) <= 1e-9

    ok = auc_mismatches == 0 and acc_ok and f1_ok and tie_auc_ok and alpha_ok
    verdict(
        "metric oracles",
        ok,
        f"auc mismatches={auc_mismatches}/1000, acc/f1 0.8/0.8 "
        f"{'ok' if acc_ok and f1_ok else 'WRONG'}, tied auc 0.875 "
        f"{'ok' if tie_auc_ok else 'WRONG'}, alpha={alpha:.9f} vs 0.533333333",
    )


def test_ensemble_determinism_and_cart_oracle(tmp_path):
    start = time.monotonic()
    lex_en = load_lexicon(LEXICONS / "english.txt")
    lex_fi = load_lexicon(LEXICONS / "finnish.txt")
    data = generate_synthetic(SynthConfig(
        n_messages=120, mix_rate=0.4, english_words=lex_en, local_words=lex_fi,
        local_tag="fi", seed=17))
    rows = np.random.default_rng(0).normal(size=(120, 6)).tolist()
    vecs = [FeatureVector(m.id, tuple(r)) for m, r in zip(data.messages, rows)]
    labels = [m.label for m in data.messages]
    cfg = TrainConfig(n_trees=12, max_depth=5, seed=99)
    p1, p2 = tmp_path / "m1.json", tmp_path / "m2.json"
    save_model(train_forest(vecs, labels, cfg), p1)
    save_model(train_forest(vecs, labels, cfg), p2)
    byte_identical = p1.read_bytes() == p2.read_bytes()

    rng = np.random.default_rng(2718)
    oracle_mismatches = 0
    for _ in range(100):
        n = int(rng.integers(6, 65))
        d = int(rng.integers(1, 5))
        depth = int(rng.integers(1, 6))
        grid = int(rng.integers(2, 6))
        xs = rng.integers(0, grid, size=(n, d)).astype(float).tolist()
        ys = rng.integers(0, 2, size=n).tolist()
        if len(set(ys)) < 2:
            ys[0] = 1 - ys[0]
        vectors = [FeatureVector(f"p{i:03d}", tuple(row)) for i, row in enumerate(xs)]
        model = train_forest(vectors, ys, TrainConfig(
            n_trees=1, max_depth=depth, features_per_split=d, bootstrap=False, seed=0))
        if model.trees[0] != oracle_cart(xs, ys, max_depth=depth):
            oracle_mismatches += 1
    elapsed = time.monotonic() - start
    ok = byte_identical and oracle_mismatches == 0 and elapsed < 60.0
    verdict(
        "ensemble determinism + cart oracle",
        ok,
        f"byte-identical={byte_identical}, oracle mismatches={oracle_mismatches}/100, "
        f"{elapsed:.1f}s < 60s",
    )


def fi_resources_with_stub():
    from codemix.features import Resources, StubScorer
    from codemix.langdetect import MixedLanguageDetector, NgramModel
    from codemix.tokenization import bpe_load

    res = REPO / "resources"

    def load(name):
        d = res / "tokenizers" / name
        return bpe_load(d / "vocab.json", d / "merges.txt", name=name)

    def detector(tag):
        english = NgramModel.load(res / "langmodels" / "english.json")
        local = NgramModel.load(res / "langmodels" / f"{tag}.json")
        return MixedLanguageDetector([english, local], english_tag="en",
                                     local_tag=local.language)

    fi = Resources(load("english"), load("finnish"), load("multilingual"),
                   detector("finnish"), StubScorer(0.5))
    es = Resources(load("english"), load("spanish"), load("multilingual"),
                   detector("spanish"), StubScorer(0.5))
    return fi, es


def test_end_to_end_synthetic_crossval_beats_ablation():
    start = time.monotonic()
    fi_res, _ = fi_resources_with_stub()
    data = generate_synthetic(SynthConfig(
        n_messages=2000, mix_rate=0.3,
        english_words=load_lexicon(LEXICONS / "english.txt"),
        local_words=load_lexicon(LEXICONS / "finnish.txt"),
        local_tag="fi", seed=42))
    full = crossval(data, fi_res, k=5, seed=42, algorithm="random_forest")
    ablation = crossval(data, fi_res, k=5, seed=42, algorithm="random_forest",
                        feature_indices=list(range(15, 20)))
    elapsed = time.monotonic() - start
    f1 = full.means["f1_macro"]
    f1_abl = ablation.means["f1_macro"]
    ok = f1 >= 0.90 and f1 > f1_abl and elapsed < 120.0
    verdict(
        "end-to-end synthetic crossval",
        ok,
        f"macro-F1={f1:.4f} >= 0.90, whitespace-only ablation={f1_abl:.4f}, "
        f"{elapsed:.1f}s < 120s",
    )


def test_cross_lingual_zero_shot_transfer():
    start = time.monotonic()
    fi_res, es_res = fi_resources_with_stub()
    en = load_lexicon(LEXICONS / "english.txt")
    train = generate_synthetic(SynthConfig(
        n_messages=2000, mix_rate=0.3, english_words=en,
        local_words=load_lexicon(LEXICONS / "finnish.txt"),
        local_tag="fi", seed=42))
    test = generate_synthetic(SynthConfig(
        n_messages=1000, mix_rate=0.3, english_words=en,
        local_words=load_lexicon(LEXICONS / "spanish.txt"),
        local_tag="es", seed=43, id_prefix="es"))
    vectors = assemble_many(train.messages, fi_res)
    model = fit_model("random_forest", vectors, [m.label for m in train.messages],
                      config=None, seed=42, meta={"local_tag": "fi"})
    report = zero_shot_eval(model, test, es_res)
    elapsed = time.monotonic() - start
    ok = report.f1_macro >= 0.70 and elapsed < 120.0
    verdict(
        "cross-lingual zero-shot",
        ok,
        f"macro-F1={report.f1_macro:.4f} >= 0.70 "
        f"(acc={report.accuracy:.4f}, auc={report.auc:.4f}), {elapsed:.1f}s < 120s",
    )


def message(i, text, label=0):
    return Message(id=f"inv-{i}", community="c", flair=None, text=text,
                   label=label, topic_id=None)


def test_pipeline_invariants_suite():
    checks = []

    def check(name, fn):
        try:
            fn()
            checks.append((name, True, ""))
        except Exception as e:
            checks.append((name, False, f"{type(e).__name__}: {e}"))

    def filter_both_branches():
        kept = message(1, "one two three four five")
        dropped = message(2, "one two three four")
        out = filter_short(Dataset(messages=(kept, dropped), source_tag="t"))
        assert out.ids() == (kept.id,), "boundary at 5 tokens"
        identity = filter_short(Dataset(messages=(kept, dropped), source_tag="t"),
                                min_tokens=1)
        assert len(identity) == 2, "min_tokens=1 keeps everything"
        try:
            filter_short(Dataset(messages=(), source_tag="t"), min_tokens=0)
            assert False, "min_tokens=0 accepted"
        except ValidationError:
            pass

    def stratification_both_branches():
        msgs = tuple(
            message(i, "w " * 8, label=(1 if i < 249 else 0))
            for i in range(2055 + 249)
        )
        plan = stratified_kfold(Dataset(messages=msgs, source_tag="t"), k=5, seed=7)
        pos_per_fold = sorted(
            sum(1 for i in plan.test_indices(f) if msgs[i].label == 1)
            for f in range(5)
        )
        assert pos_per_fold == [49, 50, 50, 50, 50], f"got {pos_per_fold}"
        sizes = {len(plan.test_indices(f)) for f in range(5)}
        assert max(sizes) - min(sizes) <= 1, "fold sizes unbalanced"
        try:
            small = tuple(message(i, "w " * 8, label=(1 if i < 2 else 0))
                          for i in range(12))
            stratified_kfold(Dataset(messages=small, source_tag="t"), k=5, seed=0)
            assert False, "class smaller than k accepted"
        except DataError as e:
            assert "class 1" in str(e), "error does not name the class"

    def schema_guard_both_branches():
        rows = [[float(i), float(i % 2)] for i in range(10)]
        vecs = [FeatureVector(f"s{i}", tuple(r)) for i, r in enumerate(rows)]
        labels = [int(i >= 5) for i in range(10)]
        model = train_forest(vecs, labels, TrainConfig(n_trees=2))
        assert 0.0 <= model.predict_proba(vecs[0]) <= 1.0, "matching vector refused"
        try:
            model.predict_proba(FeatureVector("bad", (1.0, 2.0), schema_version=2))
            assert False, "wrong schema version accepted"
        except SchemaMismatchError:
            pass
        try:
            model.predict_proba(FeatureVector("bad", (1.0,)))
            assert False, "wrong width accepted"
        except SchemaMismatchError:
            pass

    def whitespace_fertility_both_branches():
        fi_res, _ = fi_resources_with_stub()
        rng = random.Random(5)
        lex = load_lexicon(LEXICONS / "english.txt") + load_lexicon(
            LEXICONS / "finnish.txt")
        slot = SCHEMA_V1.index("whitespace_fertility")
        for i in range(25):
            text = " ".join(rng.choice(lex) for _ in range(rng.randint(1, 12)))
            vec = assemble_features(message(100 + i, text), fi_res)
            assert vec.values[slot] == 1.0, f"fertility {vec.values[slot]} on {text!r}"
        degenerate = token_stats([], [], known=lambda t: True)
        assert degenerate.degenerate and degenerate.fertility == 0.0
        try:
            assemble_features(message(999, " "), fi_res)
            assert False, "no-word message accepted"
        except DataError:
            pass

    def proportion_bookkeeping_both_branches():
        en = load_lexicon(LEXICONS / "english.txt")
        fi = load_lexicon(LEXICONS / "finnish.txt")
        for n, rate in ((40, 0.25), (33, 0.5), (10, 0.0), (10, 1.0)):
            d = generate_synthetic(SynthConfig(
                n_messages=n, mix_rate=rate, english_words=en, local_words=fi,
                local_tag="fi", seed=3))
            totals = dataset_stats(d).totals
            assert totals.code_mixed == round(n * rate), f"{n}x{rate}"
            assert totals.code_mixed + totals.non_mixed == n
        try:
            generate_synthetic(SynthConfig(
                n_messages=10, mix_rate=1.5, english_words=en, local_words=fi,
                local_tag="fi", seed=3))
            assert False, "mix_rate > 1 accepted"
        except ValidationError:
            pass

    check("filter_short", filter_both_branches)
    check("stratification", stratification_both_branches)
    check("schema guard", schema_guard_both_branches)
    check("whitespace fertility", whitespace_fertility_both_branches)
    check("proportion bookkeeping", proportion_bookkeeping_both_branches)

    failed = [f"{name}: {msg}" for name, good, msg in checks if not good]
    verdict(
        "pipeline invariants",
        not failed,
        "; ".join(failed) if failed else f"{len(checks)}/5 guards green on both branches",
    )


def test_analysis_recovery():
    en = load_lexicon(LEXICONS / "english.txt")
    fi = load_lexicon(LEXICONS / "finnish.txt")
    heavy = generate_synthetic(SynthConfig(
        n_messages=50, mix_rate=0.8, english_words=en, local_words=fi,
        local_tag="fi", seed=7, id_prefix="hot", topic_id=0))
    light = generate_synthetic(SynthConfig(
        n_messages=50, mix_rate=0.2, english_words=en, local_words=fi,
        local_tag="fi", seed=8, id_prefix="cold", topic_id=1))
    summaries = summarize_topics(
        Dataset(messages=heavy.messages + light.messages, source_tag="t"))
    props = {s.topic_id: s.codemix_proportion for s in summaries}
    rates_ok = props == {0: 0.8, 1: 0.2}

    docs = {0: ["alpha alpha alpha beta"], 1: ["alpha gamma"]}
    out = ctfidf_terms(docs, top_k=4, ngram_range=(1, 1))
    scored = {t: {term: s for term, s in pairs} for t, pairs in out.items()}
    hand = {
        0: {"alpha": 3 * math.log(1 + 3 / 4), "beta": 1 * math.log(1 + 3 / 1),
            "alpha alpha": None},
        1: {"alpha": 1 * math.log(1 + 3 / 4), "gamma": 1 * math.log(1 + 3 / 1)},
    }
    tfidf_errs = []
    for topic, terms in hand.items():
        for term, want in terms.items():
            if want is None:
                continue
            got = scored[topic].get(term)
            if got is None or abs(got - want) > 1e-9:
                tfidf_errs.append(f"{topic}/{term}: {got} vs {want}")

    ok = rates_ok and not tfidf_errs
    verdict(
        "analysis recovery",
        ok,
        f"planted rates {props} vs {{0: 0.8, 1: 0.2}}, "
        + ("c-TF-IDF hand arithmetic ok" if not tfidf_errs else "; ".join(tfidf_errs)),
    )
