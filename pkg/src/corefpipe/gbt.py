"""Gradient-boosted regression trees for binary classification.

Logistic loss, second-order (Newton) leaf weights and exact greedy split
search, in the style of the ``gbtree`` booster.  A node splits on
``x[feature] < threshold`` going left.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, logit
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.metrics import precision_recall_fscore_support
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .exceptions import SchemaVersionError

FORMAT_HEADER = "corefpipe-gbt v1"


@dataclass(frozen=True)
class GbtConfig:
    learning_rate: float = 0.1
    rounds: int = 200
    max_depth: int = 6
    lambda_l2: float = 1.0
    gamma_min_gain: float = 0.0
    min_child_hessian: float = 1.0
    base_score: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not 0.0 < self.base_score < 1.0:
            raise ValueError("base_score must be a probability in (0, 1)")
        if self.lambda_l2 < 0 or self.gamma_min_gain < 0 or self.min_child_hessian < 0:
            raise ValueError("regularization parameters must be non-negative")


@dataclass
class RegressionTree:
    """Flat array tree; ``feature[i] == -1`` marks a leaf holding ``value[i]``."""

    feature: list[int] = field(default_factory=list)
    threshold: list[float] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    value: list[float] = field(default_factory=list)

    def add_leaf(self, value):
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(float(value))
        return len(self.feature) - 1

    def add_split(self, feature, threshold):
        self.feature.append(int(feature))
        self.threshold.append(float(threshold))
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        return len(self.feature) - 1

    def __len__(self):
        return len(self.feature)

    def leaf_values(self):
        return [v for f, v in zip(self.feature, self.value) if f == -1]

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        out = np.empty(len(X))
        node = np.zeros(len(X), dtype=int)
        feature = np.asarray(self.feature)
        threshold = np.asarray(self.threshold)
        left = np.asarray(self.left)
        right = np.asarray(self.right)
        active = feature[node] != -1
        while active.any():
            idx = np.nonzero(active)[0]
            f = feature[node[idx]]
            go_left = X[idx, f] < threshold[node[idx]]
            node[idx] = np.where(go_left, left[node[idx]], right[node[idx]])
            active = feature[node] != -1
        out[:] = np.asarray(self.value)[node]
        return out


@dataclass
class GbtModel:
    trees: list[RegressionTree]
    base_score: float = 0.5
    n_features: int = 0
    schema_fingerprint: str = ""
    learning_rate: float = 0.1  # informational: leaf values already include it

    def margin(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        m = np.full(len(X), logit(self.base_score))
        for tree in self.trees:
            m += tree.predict(X)
        return m

    def to_text(self) -> str:
        lines = [FORMAT_HEADER,
                 "schema %s" % (self.schema_fingerprint or "-"),
                 "n_features %d" % self.n_features,
                 "base_score %r" % self.base_score,
                 "learning_rate %r" % self.learning_rate,
                 "trees %d" % len(self.trees)]
        for t, tree in enumerate(self.trees):
            lines.append("tree %d nodes %d" % (t, len(tree)))
            for i in range(len(tree)):
                if tree.feature[i] == -1:
                    lines.append("%d leaf %r" % (i, tree.value[i]))
                else:
                    lines.append("%d split %d %r %d %d" % (i, tree.feature[i], tree.threshold[i],
                                                           tree.left[i], tree.right[i]))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "GbtModel":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0] != FORMAT_HEADER:
            raise SchemaVersionError("not a %r model file" % FORMAT_HEADER)
        header = {}
        pos = 1
        while pos < len(lines) and not lines[pos].startswith("tree "):
            key, _, val = lines[pos].partition(" ")
            header[key] = val
            pos += 1
        trees = []
        while pos < len(lines):
            parts = lines[pos].split()
            n_nodes = int(parts[3])
            pos += 1
            tree = RegressionTree()
            for _ in range(n_nodes):
                p = lines[pos].split()
                pos += 1
                if p[1] == "leaf":
                    tree.add_leaf(float(p[2]))
                else:
                    i = tree.add_split(int(p[2]), float(p[3]))
                    tree.left[i], tree.right[i] = int(p[4]), int(p[5])
            trees.append(tree)
        if len(trees) != int(header.get("trees", len(trees))):
            raise SchemaVersionError("truncated model file")
        schema = header.get("schema", "-")
        return cls(trees=trees, base_score=float(header["base_score"]),
                   n_features=int(header["n_features"]),
                   schema_fingerprint="" if schema == "-" else schema,
                   learning_rate=float(header.get("learning_rate", 0.1)))

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_text())

    @classmethod
    def load(cls, path) -> "GbtModel":
        with open(path, encoding="utf-8") as f:
            return cls.from_text(f.read())


def split_gain(G_L, H_L, G_R, H_R, lam, gamma):
    """Loss reduction of a split (vectorized over arrays)."""
    G, H = G_L + G_R, H_L + H_R
    return 0.5 * (G_L ** 2 / (H_L + lam) + G_R ** 2 / (H_R + lam) - G ** 2 / (H + lam)) - gamma


def leaf_weight(G, H, lam):
    return -G / (H + lam)


def enumerate_splits(X, g, h, lam, gamma, min_child_hessian):
    """All admissible splits of the rows in ``X`` as (features, thresholds, gains).

    Candidate thresholds lie between consecutive distinct values of each
    feature.  Splits leaving a child with hessian below ``min_child_hessian``
    are dropped.
    """
    n, d = X.shape
    if n < 2:
        return np.zeros(0, int), np.zeros(0), np.zeros(0)
    order = np.argsort(X, axis=0, kind="stable")
    xs = np.take_along_axis(X, order, axis=0)
    GL = np.cumsum(g[order], axis=0)[:-1]
    HL = np.cumsum(h[order], axis=0)[:-1]
    G, H = g.sum(), h.sum()
    GR, HR = G - GL, H - HL
    valid = (xs[1:] > xs[:-1]) & (HL >= min_child_hessian) & (HR >= min_child_hessian)
    rows, feats = np.nonzero(valid)
    gains = split_gain(GL[rows, feats], HL[rows, feats], GR[rows, feats], HR[rows, feats], lam, gamma)
    lo, hi = xs[rows, feats], xs[rows + 1, feats]
    thr = (lo + hi) / 2.0
    # midpoint can round onto ``lo`` for adjacent floats
    thr = np.where(thr > lo, thr, hi)
    return feats, thr, gains


def best_split(X, g, h, lam, gamma, min_child_hessian):
    """Highest-gain split; ties go to the lowest feature, then lowest threshold.

    Returns ``None`` when no admissible split has positive gain.
    """
    feats, thr, gains = enumerate_splits(X, g, h, lam, gamma, min_child_hessian)
    if len(gains) == 0:
        return None
    top = gains.max()
    if not top > 0:
        return None
    cand = np.nonzero(gains == top)[0]
    k = cand[np.lexsort((thr[cand], feats[cand]))[0]]
    return int(feats[k]), float(thr[k]), float(gains[k])


def _grow(tree, X, g, h, idx, depth, cfg):
    G, H = g[idx].sum(), h[idx].sum()
    split = None
    if depth < cfg.max_depth and len(idx) >= 2:
        split = best_split(X[idx], g[idx], h[idx], cfg.lambda_l2, cfg.gamma_min_gain,
                           cfg.min_child_hessian)
    if split is None:
        return tree.add_leaf(cfg.learning_rate * leaf_weight(G, H, cfg.lambda_l2))
    f, thr, _ = split
    node = tree.add_split(f, thr)
    mask = X[idx, f] < thr
    tree.left[node] = _grow(tree, X, g, h, idx[mask], depth + 1, cfg)
    tree.right[node] = _grow(tree, X, g, h, idx[~mask], depth + 1, cfg)
    return node


def log_loss(y, margin) -> float:
    """Mean logistic loss for labels in {0, 1} at raw margins."""
    return float(np.mean(np.logaddexp(0.0, margin) - y * margin))


def train_gbt(X, y, cfg: GbtConfig = GbtConfig(), schema_fingerprint: str = "",
              loss_history: list | None = None) -> GbtModel:
    """Fit an additive tree ensemble by Newton boosting on the logistic loss.

    ``loss_history``, if given, receives the training log-loss before the
    first round and after every round.
    """
    X, y = check_X_y(X, y, dtype=float, ensure_all_finite=True, y_numeric=True)
    y = np.asarray(y, dtype=float)
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("labels must be boolean (0/1)")
    model = GbtModel([], cfg.base_score, X.shape[1], schema_fingerprint, cfg.learning_rate)
    margin = np.full(len(y), logit(cfg.base_score))
    if loss_history is not None:
        loss_history.append(log_loss(y, margin))
    all_idx = np.arange(len(y))
    for _ in range(cfg.rounds):
        p = expit(margin)
        g = p - y
        h = p * (1.0 - p)
        tree = RegressionTree()
        _grow(tree, X, g, h, all_idx, 0, cfg)
        model.trees.append(tree)
        margin = margin + tree.predict(X)
        if loss_history is not None:
            loss_history.append(log_loss(y, margin))
    return model


def predict_proba(model: GbtModel, X, schema_fingerprint: str | None = None) -> np.ndarray:
    """Positive-class probability for each row of ``X`` (or a single vector)."""
    if schema_fingerprint is not None and model.schema_fingerprint \
            and schema_fingerprint != model.schema_fingerprint:
        raise SchemaVersionError("model was trained on feature schema %s, got %s"
                                 % (model.schema_fingerprint, schema_fingerprint))
    single = np.ndim(X) == 1
    X = check_array(np.atleast_2d(np.asarray(X, dtype=float)), ensure_all_finite=True)
    if model.n_features and X.shape[1] != model.n_features:
        raise SchemaVersionError("expected %d features, got %d" % (model.n_features, X.shape[1]))
    p = expit(model.margin(X))
    return p[0] if single else p


@dataclass
class ClassReport:
    label: str
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class ClassificationReport:
    rows: list[ClassReport]

    def __getitem__(self, label):
        for r in self.rows:
            if r.label == str(label):
                return r
        raise KeyError(label)

    def format(self) -> str:
        out = ["%-10s %6s %6s %6s %8s" % ("Category", "P", "R", "F1", "Num.")]
        for r in self.rows:
            out.append("%-10s %6.2f %6.2f %6.2f %8s" % (r.label, r.precision, r.recall, r.f1,
                                                        format(r.support, ",")))
        return "\n".join(out)


def classification_report(y_true, y_pred) -> ClassificationReport:
    y_true = np.asarray(y_true, dtype=int)
    y_pred = np.asarray(y_pred, dtype=int)
    if len(y_true) == 0:
        return ClassificationReport([ClassReport("0", 0, 0, 0, 0), ClassReport("1", 0, 0, 0, 0),
                                     ClassReport("Micro Avg", 0, 0, 0, 0)])
    p, r, f, s = precision_recall_fscore_support(y_true, y_pred, labels=[0, 1], zero_division=0)
    mp, mr, mf, _ = precision_recall_fscore_support(y_true, y_pred, labels=[0, 1], average="micro",
                                                    zero_division=0)
    rows = [ClassReport(str(c), float(p[c]), float(r[c]), float(f[c]), int(s[c])) for c in (0, 1)]
    rows.append(ClassReport("Micro Avg", float(mp), float(mr), float(mf), int(s.sum())))
    return ClassificationReport(rows)


def evaluate_classifier(model: GbtModel, X, y, threshold: float = 0.5) -> ClassificationReport:
    """Per-class and micro-averaged P/R/F1 with supports."""
    y = np.asarray(y, dtype=int)
    if len(y) == 0:
        return classification_report(y, y)
    pred = (predict_proba(model, X) >= threshold).astype(int)
    return classification_report(y, pred)


class GBTClassifier(ClassifierMixin, BaseEstimator):
    """Estimator wrapper around :func:`train_gbt` for use in sklearn pipelines."""

    def __init__(self, learning_rate=0.1, rounds=200, max_depth=6, lambda_l2=1.0,
                 gamma_min_gain=0.0, min_child_hessian=1.0, base_score=0.5, seed=0,
                 schema_fingerprint=""):
        self.learning_rate = learning_rate
        self.rounds = rounds
        self.max_depth = max_depth
        self.lambda_l2 = lambda_l2
        self.gamma_min_gain = gamma_min_gain
        self.min_child_hessian = min_child_hessian
        self.base_score = base_score
        self.seed = seed
        self.schema_fingerprint = schema_fingerprint

    def _config(self):
        return GbtConfig(self.learning_rate, self.rounds, self.max_depth, self.lambda_l2,
                         self.gamma_min_gain, self.min_child_hessian, self.base_score, self.seed)

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        self.classes_ = np.array([0, 1])
        self.loss_history_ = []
        self.model_ = train_gbt(X, np.asarray(y).astype(int), self._config(), self.schema_fingerprint,
                                self.loss_history_)
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "model_")
        return self.model_.margin(check_array(X, dtype=float))

    def predict_proba(self, X):
        check_is_fitted(self, "model_")
        p = predict_proba(self.model_, X)
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        return (self.predict_proba(X)[:, 1] >= 0.5).astype(int)
