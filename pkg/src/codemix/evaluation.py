"""Metrics, cross-validation, held-out and cross-lingual evaluation.

Metrics are self-contained: accuracy, macro F1 over the binary label
set, rank-based ROC AUC with mid-rank ties, and Krippendorff's alpha
(nominal) for annotator agreement.
"""

from __future__ import annotations

import csv
import statistics
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .corpus import Dataset, stratified_kfold
from .ensemble import (
    AdaBoostConfig,
    GBoostConfig,
    Model,
    TrainConfig,
    train_adaboost,
    train_forest,
    train_gboost,
)
from .errors import DataError, ValidationError
from .features import Resources, assemble_many

ALGORITHMS = ("random_forest", "adaboost", "gradient_boosting")


def _check_pair(y_true: Sequence[int], other: Sequence, what: str) -> None:
    if len(y_true) == 0:
        raise ValidationError(f"{what}: empty input")
    if len(y_true) != len(other):
        raise ValidationError(
            f"{what}: got {len(y_true)} labels but {len(other)} values"
        )


def accuracy(y_true: Sequence[int], y_pred: Sequence[int]) -> float:
    _check_pair(y_true, y_pred, "accuracy")
    return sum(1 for t, p in zip(y_true, y_pred) if t == p) / len(y_true)


def macro_f1(y_true: Sequence[int], y_pred: Sequence[int]) -> float:
    """Unweighted mean of per-class F1 over classes {0, 1}.

    A class with no true and no predicted instances contributes 0 and
    triggers a warning rather than an error.
    """
    _check_pair(y_true, y_pred, "macro_f1")
    f1s = []
    for cls in (0, 1):
        tp = sum(1 for t, p in zip(y_true, y_pred) if t == cls and p == cls)
        fp = sum(1 for t, p in zip(y_true, y_pred) if t != cls and p == cls)
        fn = sum(1 for t, p in zip(y_true, y_pred) if t == cls and p != cls)
        if tp == 0 and fp == 0 and fn == 0:
            warnings.warn(
                f"macro_f1: class {cls} absent from labels and predictions; scoring it 0"
            )
            f1s.append(0.0)
            continue
        f1s.append(2 * tp / (2 * tp + fp + fn))
    return sum(f1s) / 2


def roc_auc(y_true: Sequence[int], scores: Sequence[float]) -> float:
    """Rank-based AUC; tied scores receive mid-ranks."""
    _check_pair(y_true, scores, "roc_auc")
    n1 = sum(1 for t in y_true if t == 1)
    n0 = len(y_true) - n1
    if n1 == 0 or n0 == 0:
        raise DataError("roc_auc needs both classes present")
    order = sorted(range(len(scores)), key=lambda i: scores[i])
    ranks = [0.0] * len(scores)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        mid = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = mid
        i = j + 1
    rank_sum = sum(r for r, t in zip(ranks, y_true) if t == 1)
    return (rank_sum - n1 * (n1 + 1) / 2) / (n0 * n1)


@dataclass(frozen=True)
class EvalReport:
    n: int
    accuracy: float
    f1_macro: float
    auc: float

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "accuracy": self.accuracy,
            "f1_macro": self.f1_macro,
            "auc": self.auc,
        }


def evaluate_scores(y_true: Sequence[int], probas: Sequence[float]) -> EvalReport:
    preds = [int(p > 0.5) for p in probas]
    return EvalReport(
        n=len(y_true),
        accuracy=accuracy(y_true, preds),
        f1_macro=macro_f1(y_true, preds),
        auc=roc_auc(y_true, probas),
    )


@dataclass(frozen=True)
class CrossvalReport:
    """Per-fold metrics plus their mean and sample (n-1) std."""

    algorithm: str
    k: int
    seed: int
    per_fold: tuple[EvalReport, ...]
    means: dict[str, float]
    stds: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "k": self.k,
            "seed": self.seed,
            "per_fold": [r.to_dict() for r in self.per_fold],
            "means": dict(self.means),
            "stds": dict(self.stds),
        }


_METRIC_KEYS = ("accuracy", "f1_macro", "auc")


def _summarize(algorithm: str, k: int, seed: int, folds: list[EvalReport]) -> CrossvalReport:
    means = {}
    stds = {}
    for key in _METRIC_KEYS:
        vals = [getattr(r, key) for r in folds]
        means[key] = statistics.fmean(vals)
        stds[key] = statistics.stdev(vals) if len(vals) > 1 else 0.0
    return CrossvalReport(
        algorithm=algorithm, k=k, seed=seed, per_fold=tuple(folds), means=means, stds=stds
    )


def fit_model(
    algorithm: str,
    vectors,
    labels,
    config=None,
    seed: int = 0,
    meta: Optional[dict[str, str]] = None,
) -> Model:
    """Train one model; config=None uses the algorithm's defaults."""
    if algorithm == "random_forest":
        return train_forest(vectors, labels, config or TrainConfig(seed=seed), meta=meta)
    if algorithm == "adaboost":
        return train_adaboost(vectors, labels, config or AdaBoostConfig(), meta=meta)
    if algorithm == "gradient_boosting":
        return train_gboost(vectors, labels, config or GBoostConfig(), meta=meta)
    raise ValidationError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")


def crossval(
    dataset: Dataset,
    resources: Resources,
    k: int = 5,
    seed: int = 0,
    algorithm: str = "random_forest",
    config=None,
    feature_indices: Optional[Sequence[int]] = None,
) -> CrossvalReport:
    """Stratified k-fold cross-validation over one dataset.

    Features are assembled once; the split and (by default) the model
    derive all their randomness from the single seed.
    """
    if algorithm not in ALGORITHMS:
        raise ValidationError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")
    plan = stratified_kfold(dataset, k=k, seed=seed)
    vectors = assemble_many(dataset.messages, resources, feature_indices=feature_indices)
    labels = [m.label for m in dataset]
    meta = {"local_tag": resources.local_tag}
    folds: list[EvalReport] = []
    for fold in range(k):
        tr = plan.train_indices(fold)
        te = plan.test_indices(fold)
        model = fit_model(
            algorithm,
            [vectors[i] for i in tr],
            [labels[i] for i in tr],
            config=config,
            seed=seed,
            meta=meta,
        )
        probas = [model.predict_proba(vectors[i]) for i in te]
        folds.append(evaluate_scores([labels[i] for i in te], probas))
    return _summarize(algorithm, k, seed, folds)


def _labeled_or_die(dataset: Dataset) -> list[int]:
    labels = []
    for m in dataset:
        if m.label is None:
            raise ValidationError(f"evaluation requires labels; message {m.id!r} is unlabeled")
        labels.append(m.label)
    return labels


def holdout_eval(
    model: Model,
    dataset: Dataset,
    resources: Resources,
    feature_indices: Optional[Sequence[int]] = None,
) -> EvalReport:
    """Evaluate a trained model on held-out data; refuses train/test overlap."""
    labels = _labeled_or_die(dataset)
    overlap = set(model.train_ids) & set(dataset.ids())
    if overlap:
        example = sorted(overlap)[0]
        raise ValidationError(
            f"{len(overlap)} test messages were in the training set, e.g. {example!r}"
        )
    vectors = assemble_many(dataset.messages, resources, feature_indices=feature_indices)
    probas = [model.predict_proba(v) for v in vectors]
    return evaluate_scores(labels, probas)


def zero_shot_eval(
    model: Model,
    dataset: Dataset,
    resources: Resources,
    feature_indices: Optional[Sequence[int]] = None,
) -> EvalReport:
    """Cross-lingual transfer: the test local language must differ from training.

    The model's recorded local_tag is compared against the resources
    used to featurize the test set; matching tags mean this is plain
    held-out evaluation and the call is refused.
    """
    trained_tag = model.meta.get("local_tag")
    if not trained_tag:
        raise ValidationError(
            "model records no local_tag; cannot verify cross-lingual transfer"
        )
    if trained_tag == resources.local_tag:
        raise ValidationError(
            f"test local language {resources.local_tag!r} equals the training language; "
            "use holdout evaluation instead"
        )
    return holdout_eval(model, dataset, resources, feature_indices=feature_indices)


@dataclass(frozen=True)
class AgreementTable:
    """Items x annotators matrix of optional binary labels."""

    item_ids: tuple[str, ...]
    labels: tuple[tuple[Optional[int], ...], ...]

    def __post_init__(self) -> None:
        if not self.labels:
            raise ValidationError("agreement table has no items")
        if len(self.item_ids) != len(self.labels):
            raise ValidationError("item ids do not align with label rows")
        width = len(self.labels[0])
        if width < 2:
            raise ValidationError("agreement needs at least 2 annotators")
        for item_id, row in zip(self.item_ids, self.labels):
            if len(row) != width:
                raise ValidationError(f"item {item_id!r}: ragged row")
            for v in row:
                if v not in (None, 0, 1):
                    raise ValidationError(f"item {item_id!r}: labels must be 0, 1, or empty")


def load_agreement_csv(path: str | Path) -> AgreementTable:
    """CSV with header `id,<annotator>,...`; empty cells mean no label."""
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if len(rows) < 2:
        raise ValidationError(f"{path.name}: need a header and at least one item row")
    ids: list[str] = []
    labels: list[tuple[Optional[int], ...]] = []
    width = len(rows[0]) - 1
    for ln, row in enumerate(rows[1:], start=2):
        if len(row) != width + 1:
            raise ValidationError(f"{path.name}, line {ln}: expected {width + 1} columns")
        ids.append(row[0])
        parsed: list[Optional[int]] = []
        for cell in row[1:]:
            cell = cell.strip()
            if cell == "":
                parsed.append(None)
            elif cell in ("0", "1"):
                parsed.append(int(cell))
            else:
                raise ValidationError(f"{path.name}, line {ln}: bad label {cell!r}")
        labels.append(tuple(parsed))
    return AgreementTable(item_ids=tuple(ids), labels=tuple(labels))


def krippendorff_alpha(table: AgreementTable) -> float:
    """Nominal-data alpha via the coincidence matrix.

    Items with fewer than two labels are unpairable and skipped. If
    observed values never vary, expected disagreement is zero; that
    degenerate table scores 1.0 with a warning.
    """
    values = sorted({v for row in table.labels for v in row if v is not None})
    if not values:
        raise DataError("agreement table contains no labels")
    coin = {(a, b): 0.0 for a in values for b in values}
    pairable = 0
    for row in table.labels:
        present = [v for v in row if v is not None]
        m = len(present)
        if m < 2:
            continue
        pairable += 1
        for i, a in enumerate(present):
            for j, b in enumerate(present):
                if i != j:
                    coin[(a, b)] += 1.0 / (m - 1)
    if pairable == 0:
        raise DataError("no item has two or more labels; nothing is pairable")
    n_by_value = {a: sum(coin[(a, b)] for b in values) for a in values}
    n_total = sum(n_by_value.values())
    observed = sum(coin[(a, b)] for a in values for b in values if a != b) / n_total
    expected = sum(
        n_by_value[a] * n_by_value[b] for a in values for b in values if a != b
    ) / (n_total * (n_total - 1))
    if expected == 0.0:
        warnings.warn("all labels identical; expected disagreement is zero, alpha set to 1.0")
        return 1.0
    return 1.0 - observed / expected
