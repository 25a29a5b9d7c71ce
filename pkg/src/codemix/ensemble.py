"""Tree ensembles trained on feature vectors.

Three algorithms share one tree grower and one model file format:
bootstrap-aggregated CART forests, discrete AdaBoost over depth-1
stumps, and logistic-loss gradient boosting over shallow regression
trees.

Determinism contract: training is a pure function of (vectors, labels,
config). Rows are put in canonical order (sorted by message id) before
any randomness; tree i draws every random decision from its own
numpy Generator seeded with config.seed + i. Unweighted split selection
uses exact integer arithmetic, so equal-gain ties resolve identically
on every platform: lowest feature index first, then lowest threshold.

Trees are nested dicts, ready for JSON: internal nodes
{"f": feature, "t": threshold, "l": left, "r": right} route x[f] <= t
to the left child; classification leaves hold {"n": [count0, count1]},
regression leaves {"v": value}.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import MODEL_FORMAT_VERSION
from .errors import DataError, SchemaMismatchError, ValidationError
from .features import FeatureVector

# Float comparisons in the weighted/regression split paths use this
# absolute slack; the unweighted path is exact and needs none.
_FLOAT_TIE_TOL = 1e-12
# Shortlist slack for the vectorized prefilter before exact comparison.
_PREFILTER_TOL = 1e-6


@dataclass(frozen=True)
class TrainConfig:
    """Random forest hyperparameters.

    features_per_split=None means ceil(sqrt(n_features)), resolved at
    training time and echoed into the saved model.
    """

    n_trees: int = 100
    max_depth: int = 8
    min_samples_split: int = 2
    features_per_split: Optional[int] = None
    bootstrap: bool = True
    seed: int = 0

    def validate(self, n_features: int) -> None:
        if self.n_trees < 1:
            raise ValidationError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.max_depth < 1:
            raise ValidationError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.min_samples_split < 2:
            raise ValidationError(
                f"min_samples_split must be >= 2, got {self.min_samples_split}"
            )
        if self.features_per_split is not None and not (
            1 <= self.features_per_split <= n_features
        ):
            raise ValidationError(
                f"features_per_split must be in 1..{n_features}, got {self.features_per_split}"
            )

    def resolved_features_per_split(self, n_features: int) -> int:
        if self.features_per_split is not None:
            return self.features_per_split
        return math.isqrt(n_features) + (0 if math.isqrt(n_features) ** 2 == n_features else 1)

    def to_dict(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "min_samples_split": self.min_samples_split,
            "features_per_split": self.features_per_split,
            "bootstrap": self.bootstrap,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class AdaBoostConfig:
    rounds: int = 50

    def validate(self, n_features: int) -> None:
        if self.rounds < 1:
            raise ValidationError(f"rounds must be >= 1, got {self.rounds}")

    def to_dict(self) -> dict:
        return {"rounds": self.rounds}


@dataclass(frozen=True)
class GBoostConfig:
    rounds: int = 50
    learning_rate: float = 0.1
    max_depth: int = 3
    min_samples_split: int = 2

    def validate(self, n_features: int) -> None:
        if self.rounds < 1:
            raise ValidationError(f"rounds must be >= 1, got {self.rounds}")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValidationError(
                f"learning_rate must be in (0, 1], got {self.learning_rate}"
            )
        if self.max_depth < 1:
            raise ValidationError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.min_samples_split < 2:
            raise ValidationError(
                f"min_samples_split must be >= 2, got {self.min_samples_split}"
            )

    def to_dict(self) -> dict:
        return {
            "rounds": self.rounds,
            "learning_rate": self.learning_rate,
            "max_depth": self.max_depth,
            "min_samples_split": self.min_samples_split,
        }


def _midpoint(lo: float, hi: float) -> float:
    # Midpoint of consecutive distinct values; if rounding pushes it
    # onto the upper value (adjacent floats), fall back to the lower
    # value so `x <= t` still separates the two.
    t = (lo + hi) / 2.0
    if not (lo < t < hi):
        t = lo
    return float(t)


def _best_split_exact(
    X: np.ndarray, y: np.ndarray, feats: Sequence[int]
) -> Optional[tuple[int, int, int, float]]:
    """Best (gain_num, gain_den, feature, threshold) under exact Gini.

    Minimizing weighted child Gini is equivalent to maximizing
    S = sum_c nL_c^2 / nL + sum_c nR_c^2 / nR, a ratio of integers
    T / D with D = nL * nR. Candidates are prefiltered with float
    arithmetic, then compared exactly by integer cross-multiplication.
    """
    n = len(y)
    best: Optional[tuple[int, int, int, float]] = None
    for j in feats:
        col = X[:, j]
        order = np.argsort(col, kind="stable")
        v = col[order]
        ys = y[order].astype(np.int64)
        boundary = v[:-1] < v[1:]
        if not boundary.any():
            continue
        pre1 = np.cumsum(ys)
        nL = np.arange(1, n, dtype=np.int64)
        nL1 = pre1[:-1]
        nL0 = nL - nL1
        nR = n - nL
        nR1 = int(pre1[-1]) - nL1
        nR0 = nR - nR1
        T = (nL0 * nL0 + nL1 * nL1) * nR + (nR0 * nR0 + nR1 * nR1) * nL
        D = nL * nR
        pos = np.nonzero(boundary)[0]
        Tb = T[pos]
        Db = D[pos]
        ratio = Tb / Db
        cand = np.nonzero(ratio >= ratio.max() - _PREFILTER_TOL)[0]
        feat_best: Optional[tuple[int, int, int]] = None
        for c in cand:
            tc, dc = int(Tb[c]), int(Db[c])
            if feat_best is None or tc * feat_best[1] > feat_best[0] * dc:
                feat_best = (tc, dc, int(pos[c]))
        assert feat_best is not None
        tc, dc, p = feat_best
        thr = _midpoint(float(v[p]), float(v[p + 1]))
        if best is None or tc * best[1] > best[0] * dc:
            best = (tc, dc, j, thr)
    return best


def _grow_classification(
    X: np.ndarray,
    y: np.ndarray,
    depth: int,
    max_depth: int,
    min_samples_split: int,
    n_sample_feats: int,
    rng: Optional[np.random.Generator],
) -> dict:
    n = len(y)
    n1 = int(y.sum())
    n0 = n - n1
    leaf = {"n": [n0, n1]}
    if depth >= max_depth or n < min_samples_split or n0 == 0 or n1 == 0:
        return leaf
    d = X.shape[1]
    if rng is not None and n_sample_feats < d:
        feats = sorted(rng.choice(d, size=n_sample_feats, replace=False).tolist())
    else:
        feats = range(d)
    best = _best_split_exact(X, y, feats)
    if best is None:
        return leaf
    T, D, j, thr = best
    # Adopt only a strict impurity decrease: S_split > S_parent, i.e.
    # T * n > (n0^2 + n1^2) * D, compared in exact integers.
    if T * n <= (n0 * n0 + n1 * n1) * D:
        return leaf
    mask = X[:, j] <= thr
    node = {"f": int(j), "t": thr}
    node["l"] = _grow_classification(
        X[mask], y[mask], depth + 1, max_depth, min_samples_split, n_sample_feats, rng
    )
    node["r"] = _grow_classification(
        X[~mask], y[~mask], depth + 1, max_depth, min_samples_split, n_sample_feats, rng
    )
    # Each child is strictly smaller, so recursion terminates; the
    # adopted split never increases Gini along the path (debug check).
    assert _gini([n0, n1]) >= _weighted_child_gini(node) - 1e-12
    return node


def _gini(counts: Sequence[float]) -> float:
    tot = sum(counts)
    if tot == 0:
        return 0.0
    return 1.0 - sum((c / tot) ** 2 for c in counts)


def _node_counts(node: dict) -> list[float]:
    if "n" in node:
        return list(node["n"])
    left = _node_counts(node["l"])
    right = _node_counts(node["r"])
    return [a + b for a, b in zip(left, right)]


def _weighted_child_gini(node: dict) -> float:
    left = _node_counts(node["l"])
    right = _node_counts(node["r"])
    tot = sum(left) + sum(right)
    return (sum(left) * _gini(left) + sum(right) * _gini(right)) / tot


def _best_split_weighted(
    X: np.ndarray, y: np.ndarray, w: np.ndarray, feats: Sequence[int]
) -> Optional[tuple[float, int, float]]:
    """Best (S, feature, threshold) under weighted Gini, float path."""
    best: Optional[tuple[float, int, float]] = None
    for j in feats:
        col = X[:, j]
        order = np.argsort(col, kind="stable")
        v = col[order]
        boundary = v[:-1] < v[1:]
        if not boundary.any():
            continue
        w1 = np.cumsum((w * y)[order])[:-1]
        wa = np.cumsum(w[order])[:-1]
        w0 = wa - w1
        t1 = float((w * y).sum())
        ta = float(w.sum())
        r1 = t1 - w1
        ra = ta - wa
        r0 = ra - r1
        with np.errstate(divide="ignore", invalid="ignore"):
            S = (w0 * w0 + w1 * w1) / wa + (r0 * r0 + r1 * r1) / ra
        pos = np.nonzero(boundary)[0]
        Sb = S[pos]
        c = int(np.nonzero(Sb >= Sb.max() - _FLOAT_TIE_TOL)[0][0])
        s_val = float(Sb[c])
        p = int(pos[c])
        thr = _midpoint(float(v[p]), float(v[p + 1]))
        if best is None or s_val > best[0] + _FLOAT_TIE_TOL:
            best = (s_val, j, thr)
    return best


def _grow_weighted(
    X: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    depth: int,
    max_depth: int,
    min_samples_split: int,
) -> dict:
    w1 = float((w * y).sum())
    w0 = float(w.sum()) - w1
    leaf = {"n": [w0, w1]}
    n = len(y)
    if depth >= max_depth or n < min_samples_split or w0 == 0.0 or w1 == 0.0:
        return leaf
    best = _best_split_weighted(X, y, w, range(X.shape[1]))
    if best is None:
        return leaf
    s_val, j, thr = best
    wa = w0 + w1
    s_parent = (w0 * w0 + w1 * w1) / wa if wa > 0 else 0.0
    if s_val <= s_parent + _FLOAT_TIE_TOL:
        return leaf
    mask = X[:, j] <= thr
    return {
        "f": int(j),
        "t": thr,
        "l": _grow_weighted(X[mask], y[mask], w[mask], depth + 1, max_depth, min_samples_split),
        "r": _grow_weighted(X[~mask], y[~mask], w[~mask], depth + 1, max_depth, min_samples_split),
    }


def _best_split_sse(
    X: np.ndarray, r: np.ndarray, feats: Sequence[int]
) -> Optional[tuple[float, int, float]]:
    """Best (gain proxy, feature, threshold) for squared-error regression."""
    n = len(r)
    best: Optional[tuple[float, int, float]] = None
    for j in feats:
        col = X[:, j]
        order = np.argsort(col, kind="stable")
        v = col[order]
        boundary = v[:-1] < v[1:]
        if not boundary.any():
            continue
        preS = np.cumsum(r[order])[:-1]
        nL = np.arange(1, n)
        nR = n - nL
        totS = float(r.sum())
        S = preS * preS / nL + (totS - preS) * (totS - preS) / nR
        pos = np.nonzero(boundary)[0]
        Sb = S[pos]
        c = int(np.nonzero(Sb >= Sb.max() - _FLOAT_TIE_TOL)[0][0])
        s_val = float(Sb[c])
        p = int(pos[c])
        thr = _midpoint(float(v[p]), float(v[p + 1]))
        if best is None or s_val > best[0] + _FLOAT_TIE_TOL:
            best = (s_val, j, thr)
    return best


def _grow_regression(
    X: np.ndarray,
    resid: np.ndarray,
    hess: np.ndarray,
    depth: int,
    max_depth: int,
    min_samples_split: int,
) -> dict:
    n = len(resid)
    value = float(resid.sum() / max(float(hess.sum()), 1e-12))
    leaf = {"v": value}
    if depth >= max_depth or n < min_samples_split:
        return leaf
    best = _best_split_sse(X, resid, range(X.shape[1]))
    if best is None:
        return leaf
    s_val, j, thr = best
    tot = float(resid.sum())
    s_parent = tot * tot / n
    if s_val <= s_parent + _FLOAT_TIE_TOL:
        return leaf
    mask = X[:, j] <= thr
    return {
        "f": int(j),
        "t": thr,
        "l": _grow_regression(
            X[mask], resid[mask], hess[mask], depth + 1, max_depth, min_samples_split
        ),
        "r": _grow_regression(
            X[~mask], resid[~mask], hess[~mask], depth + 1, max_depth, min_samples_split
        ),
    }


def tree_apply(node: dict, row: Sequence[float]) -> dict:
    """Route a row to its leaf."""
    while "f" in node:
        node = node["l"] if row[node["f"]] <= node["t"] else node["r"]
    return node


def tree_depth(node: dict) -> int:
    if "f" not in node:
        return 0
    return 1 + max(tree_depth(node["l"]), tree_depth(node["r"]))


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-min(z, 700.0)))
    e = math.exp(max(z, -700.0))
    return e / (1.0 + e)


def _prepare_training(
    vectors: Sequence[FeatureVector], labels: Sequence[int]
) -> tuple[list[str], np.ndarray, np.ndarray, int, int]:
    """Validate inputs and put rows in canonical (id-sorted) order."""
    if len(vectors) != len(labels):
        raise ValidationError(
            f"{len(vectors)} vectors but {len(labels)} labels"
        )
    if len(vectors) < 2:
        raise ValidationError("training needs at least 2 examples")
    schema_version = vectors[0].schema_version
    n_features = len(vectors[0].values)
    ids_seen: set[str] = set()
    for v in vectors:
        if v.schema_version != schema_version or len(v.values) != n_features:
            raise SchemaMismatchError(
                f"vector {v.message_id!r} has schema v{v.schema_version} with "
                f"{len(v.values)} features; expected v{schema_version} with {n_features}"
            )
        if v.message_id in ids_seen:
            raise ValidationError(f"duplicate message id {v.message_id!r} in training data")
        ids_seen.add(v.message_id)
    classes = set()
    for v, lab in zip(vectors, labels):
        if lab not in (0, 1):
            raise ValidationError(f"label for {v.message_id!r} must be 0 or 1, got {lab!r}")
        classes.add(lab)
    for cls in (0, 1):
        if cls not in classes:
            raise DataError(f"training data contains no examples of class {cls}")
    order = sorted(range(len(vectors)), key=lambda i: vectors[i].message_id)
    X = np.array([vectors[i].values for i in order], dtype=np.float64)
    y = np.array([labels[i] for i in order], dtype=np.int64)
    ids = [vectors[i].message_id for i in order]
    return ids, X, y, schema_version, n_features


def _check_schema(model, vector: FeatureVector) -> None:
    if vector.schema_version != model.schema_version or len(vector.values) != model.n_features:
        raise SchemaMismatchError(
            f"model expects feature schema v{model.schema_version} with "
            f"{model.n_features} features; vector {vector.message_id!r} has "
            f"v{vector.schema_version} with {len(vector.values)}"
        )


@dataclass
class ForestModel:
    trees: list[dict]
    config: TrainConfig
    schema_version: int
    n_features: int
    train_ids: tuple[str, ...]
    meta: dict[str, str] = field(default_factory=dict)

    algorithm = "random_forest"

    def predict_proba(self, vector: FeatureVector) -> float:
        _check_schema(self, vector)
        total = 0.0
        for tree in self.trees:
            n0, n1 = tree_apply(tree, vector.values)["n"]
            total += n1 / (n0 + n1)
        return total / len(self.trees)

    def predict_label(self, vector: FeatureVector) -> int:
        return int(self.predict_proba(vector) > 0.5)

    def payload(self) -> dict:
        return {"trees": self.trees, "config": self.config.to_dict()}


def train_forest(
    vectors: Sequence[FeatureVector],
    labels: Sequence[int],
    config: TrainConfig = TrainConfig(),
    meta: Optional[dict[str, str]] = None,
) -> ForestModel:
    ids, X, y, schema_version, n_features = _prepare_training(vectors, labels)
    config.validate(n_features)
    n_sample_feats = config.resolved_features_per_split(n_features)
    n = len(y)
    trees: list[dict] = []
    for i in range(config.n_trees):
        rng = np.random.default_rng(config.seed + i)
        if config.bootstrap:
            idx = rng.integers(0, n, size=n)
            Xi, yi = X[idx], y[idx]
            if yi.min() == yi.max():
                # A one-class bootstrap sample yields a single leaf.
                trees.append({"n": [int(n - yi.sum()), int(yi.sum())]})
                continue
        else:
            Xi, yi = X, y
        trees.append(
            _grow_classification(
                Xi, yi, 0, config.max_depth, config.min_samples_split, n_sample_feats, rng
            )
        )
    return ForestModel(
        trees=trees,
        config=config,
        schema_version=schema_version,
        n_features=n_features,
        train_ids=tuple(ids),
        meta=dict(meta or {}),
    )


@dataclass
class AdaBoostModel:
    stumps: list[dict]
    alphas: list[float]
    config: AdaBoostConfig
    schema_version: int
    n_features: int
    train_ids: tuple[str, ...]
    meta: dict[str, str] = field(default_factory=dict)
    train_log: list[dict] = field(default_factory=list, repr=False, compare=False)

    algorithm = "adaboost"

    def margin(self, vector: FeatureVector) -> float:
        total = 0.0
        for stump, alpha in zip(self.stumps, self.alphas):
            w0, w1 = tree_apply(stump, vector.values)["n"]
            h = 1.0 if w1 > w0 else -1.0
            total += alpha * h
        return total

    def predict_proba(self, vector: FeatureVector) -> float:
        _check_schema(self, vector)
        return _sigmoid(2.0 * self.margin(vector))

    def predict_label(self, vector: FeatureVector) -> int:
        return int(self.predict_proba(vector) > 0.5)

    def payload(self) -> dict:
        return {
            "stumps": self.stumps,
            "alphas": self.alphas,
            "config": self.config.to_dict(),
        }


def train_adaboost(
    vectors: Sequence[FeatureVector],
    labels: Sequence[int],
    config: AdaBoostConfig = AdaBoostConfig(),
    meta: Optional[dict[str, str]] = None,
) -> AdaBoostModel:
    ids, X, y, schema_version, n_features = _prepare_training(vectors, labels)
    config.validate(n_features)
    n = len(y)
    w = np.full(n, 1.0 / n)
    stumps: list[dict] = []
    alphas: list[float] = []
    log: list[dict] = []
    for t in range(config.rounds):
        stump = _grow_weighted(X, y, w, 0, 1, 2)
        if "f" not in stump:
            log.append({"round": t, "stopped": "no usable split"})
            break
        pred = np.fromiter(
            (1 if tree_apply(stump, row)["n"][1] > tree_apply(stump, row)["n"][0] else 0
             for row in X),
            dtype=np.int64,
            count=n,
        )
        miss = pred != y
        eps = float(w[miss].sum())
        if eps >= 0.5:
            log.append({"round": t, "error": eps, "stopped": "error >= 0.5"})
            break
        clamped = max(eps, 1e-12)
        alpha = 0.5 * math.log((1.0 - clamped) / clamped)
        stumps.append(stump)
        alphas.append(alpha)
        log.append({"round": t, "error": eps, "alpha": alpha})
        if eps <= 1e-12:
            log.append({"round": t, "stopped": "perfect stump"})
            break
        w = w * np.exp(np.where(miss, alpha, -alpha))
        w = w / w.sum()
    if not stumps:
        raise DataError("boosting adopted no stump; data admits no usable split")
    return AdaBoostModel(
        stumps=stumps,
        alphas=alphas,
        config=config,
        schema_version=schema_version,
        n_features=n_features,
        train_ids=tuple(ids),
        meta=dict(meta or {}),
        train_log=log,
    )


@dataclass
class GradientBoostingModel:
    trees: list[dict]
    f0: float
    config: GBoostConfig
    schema_version: int
    n_features: int
    train_ids: tuple[str, ...]
    meta: dict[str, str] = field(default_factory=dict)

    algorithm = "gradient_boosting"

    def raw_score(self, vector: FeatureVector) -> float:
        total = self.f0
        for tree in self.trees:
            total += self.config.learning_rate * tree_apply(tree, vector.values)["v"]
        return total

    def predict_proba(self, vector: FeatureVector) -> float:
        _check_schema(self, vector)
        return _sigmoid(self.raw_score(vector))

    def predict_label(self, vector: FeatureVector) -> int:
        return int(self.predict_proba(vector) > 0.5)

    def payload(self) -> dict:
        return {"trees": self.trees, "f0": self.f0, "config": self.config.to_dict()}


def train_gboost(
    vectors: Sequence[FeatureVector],
    labels: Sequence[int],
    config: GBoostConfig = GBoostConfig(),
    meta: Optional[dict[str, str]] = None,
) -> GradientBoostingModel:
    ids, X, y, schema_version, n_features = _prepare_training(vectors, labels)
    config.validate(n_features)
    p_mean = float(y.mean())
    f0 = math.log(p_mean / (1.0 - p_mean))
    F = np.full(len(y), f0)
    trees: list[dict] = []
    for _ in range(config.rounds):
        p = 1.0 / (1.0 + np.exp(-np.clip(F, -700, 700)))
        resid = y - p
        hess = p * (1.0 - p)
        tree = _grow_regression(
            X, resid, hess, 0, config.max_depth, config.min_samples_split
        )
        if "f" not in tree:
            break
        trees.append(tree)
        updates = np.fromiter(
            (tree_apply(tree, row)["v"] for row in X), dtype=np.float64, count=len(y)
        )
        F = F + config.learning_rate * updates
    if not trees:
        raise DataError("gradient boosting adopted no tree; data admits no usable split")
    return GradientBoostingModel(
        trees=trees,
        f0=f0,
        config=config,
        schema_version=schema_version,
        n_features=n_features,
        train_ids=tuple(ids),
        meta=dict(meta or {}),
    )


Model = ForestModel | AdaBoostModel | GradientBoostingModel

_CONFIG_TYPES = {
    "random_forest": TrainConfig,
    "adaboost": AdaBoostConfig,
    "gradient_boosting": GBoostConfig,
}


def model_to_dict(model: Model) -> dict:
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "algorithm": model.algorithm,
        "feature_schema_version": model.schema_version,
        "n_features": model.n_features,
        "train_ids": list(model.train_ids),
        "meta": model.meta,
    }
    payload.update(model.payload())
    return payload


def save_model(model: Model, path: str | Path) -> None:
    """Serialize to JSON with sorted keys; identical runs give identical bytes."""
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, ensure_ascii=False, sort_keys=True)
        fh.write("\n")


def load_model(path: str | Path) -> Model:
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as e:
        raise ValidationError(f"{path}: invalid JSON ({e.msg})") from None
    version = raw.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ValidationError(
            f"{path}: unsupported model format_version {version!r}, "
            f"this build reads version {MODEL_FORMAT_VERSION}"
        )
    algorithm = raw.get("algorithm")
    if algorithm not in _CONFIG_TYPES:
        raise ValidationError(f"{path}: unknown algorithm {algorithm!r}")
    for key in ("config", "feature_schema_version", "n_features", "train_ids"):
        if key not in raw:
            raise ValidationError(f"{path}: missing key {key!r}")
    config = _CONFIG_TYPES[algorithm](**raw["config"])
    common = {
        "config": config,
        "schema_version": raw["feature_schema_version"],
        "n_features": raw["n_features"],
        "train_ids": tuple(raw["train_ids"]),
        "meta": dict(raw.get("meta", {})),
    }
    if algorithm == "random_forest":
        return ForestModel(trees=raw["trees"], **common)
    if algorithm == "adaboost":
        return AdaBoostModel(stumps=raw["stumps"], alphas=raw["alphas"], **common)
    return GradientBoostingModel(trees=raw["trees"], f0=raw["f0"], **common)
