"""Experiment helpers: training-mention union, precision/recall perturbation
sweeps and heuristic error tagging.

Mention sets are dicts mapping a document key to a set of spans.  Random
choices are made per document in sorted key order from a single seeded
generator, so a seed fixes the output exactly.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.stats import spearmanr

from .conll import Document
from .features import PUNCT_POS
from .linker import LinkerConfig, LinkerModel, link_document, link_spans, train_linker
from .metrics import ScoreReport, prf_from_counts, score_chains


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _check_keys(a: Mapping, b: Mapping):
    missing = sorted(set(a) ^ set(b), key=str)
    if missing:
        raise KeyError("document ids present on one side only: %s" % ", ".join(map(str, missing)))


def augment_union(gold: Mapping, predicted: Mapping) -> dict:
    """Per-document union of gold markables and predicted positives."""
    _check_keys(gold, predicted)
    return {k: set(gold[k]) | set(predicted[k]) for k in gold}


def apportion(total: int, weights) -> list[int]:
    """Split ``total`` proportionally to ``weights`` by largest remainder.

    Ties in the remainder go to the earlier entry.
    """
    weights = [int(w) for w in weights]
    wsum = sum(weights)
    if total == 0 or wsum == 0:
        return [0] * len(weights)
    if total > wsum:
        raise ValueError("cannot take %d items from %d" % (total, wsum))
    quotas = [total * w / wsum for w in weights]
    out = [int(math.floor(q)) for q in quotas]
    left = total - sum(out)
    order = sorted(range(len(weights)), key=lambda i: (-(quotas[i] - out[i]), i))
    for i in order[:left]:
        out[i] += 1
    return out


def _counts(pred, gold):
    tp = sum(len(set(pred[k]) & set(gold[k])) for k in gold)
    n_pred = sum(len(pred[k]) for k in pred)
    n_gold = sum(len(gold[k]) for k in gold)
    return tp, n_pred, n_gold


def perturb_precision(pred: Mapping, gold: Mapping, target_p: float, seed: int = 0) -> dict:
    """Drop random false positives until precision reaches ``target_p`` percent.

    True positives are kept.  The number of false positives kept is
    ``round(TP * (1 - p) / p)``; drops are spread over documents in
    proportion to their false-positive counts.
    """
    _check_keys(pred, gold)
    if not 0 < target_p <= 100:
        raise ValueError("target precision must be in (0, 100]")
    keys = sorted(pred)
    tp, n_pred, _ = _counts(pred, gold)
    fp = {k: sorted(set(pred[k]) - set(gold[k])) for k in keys}
    fp_total = n_pred - tp
    current = tp / n_pred if n_pred else 1.0
    p = target_p / 100.0
    if p < current - 1e-12:
        raise ValueError("target precision %.2f is below the current precision %.2f; "
                         "perturbation only removes spans" % (target_p, 100 * current))
    keep = min(fp_total, _round_half_up(tp * (1.0 - p) / p))
    drops = apportion(fp_total - keep, [len(fp[k]) for k in keys])
    rng = np.random.default_rng(seed)
    out = {}
    for k, n_drop in zip(keys, drops):
        dropped = set()
        if n_drop:
            idx = rng.choice(len(fp[k]), size=n_drop, replace=False)
            dropped = {fp[k][i] for i in idx}
        out[k] = set(pred[k]) - dropped
    return out


def perturb_recall(pred: Mapping, gold: Mapping, target_r: float, seed: int = 0) -> dict:
    """Add random missed gold markables until recall reaches ``target_r`` percent.

    The recalled count becomes ``round(r * |gold|)``; additions are spread
    over documents in proportion to their missed counts.
    """
    _check_keys(pred, gold)
    if not 0 <= target_r <= 100:
        raise ValueError("target recall must be in [0, 100]")
    keys = sorted(pred)
    tp, _, n_gold = _counts(pred, gold)
    current = tp / n_gold if n_gold else 1.0
    r = target_r / 100.0
    if r < current - 1e-12:
        raise ValueError("target recall %.2f is below the current recall %.2f; "
                         "perturbation only adds spans" % (target_r, 100 * current))
    missed = {k: sorted(set(gold[k]) - set(pred[k])) for k in keys}
    n_add = max(0, min(n_gold - tp, _round_half_up(r * n_gold) - tp))
    adds = apportion(n_add, [len(missed[k]) for k in keys])
    rng = np.random.default_rng(seed)
    out = {}
    for k, n in zip(keys, adds):
        added = set()
        if n:
            idx = rng.choice(len(missed[k]), size=n, replace=False)
            added = {missed[k][i] for i in idx}
        out[k] = set(pred[k]) | added
    return out


@dataclass(frozen=True)
class PerturbSpec:
    axis: str  # "precision" or "recall"
    targets: tuple[float, ...]
    seed: int = 20240301

    def __post_init__(self):
        if self.axis not in ("precision", "recall"):
            raise ValueError("axis must be 'precision' or 'recall'")
        if list(self.targets) != sorted(self.targets):
            raise ValueError("targets must be sorted ascending")


@dataclass
class CurvePoint:
    target: float
    axis_value: float
    n_mentions: int
    mention_p: float
    mention_r: float
    report: ScoreReport
    mentions: dict = field(default_factory=dict, repr=False)


def gold_markables(docs, drop_singletons: bool = True) -> dict:
    """Gold mention sets per document; singleton chains excluded when asked."""
    return {d.key: {m for c in d.gold_chains if not (drop_singletons and len(c.mentions) == 1)
                    for m in c.mentions} for d in docs}


def _point_seed(seed, index):
    return np.random.SeedSequence([seed, index]).generate_state(1)[0]


def sweep_curve(docs: list[Document], mentions: Mapping, model: LinkerModel, spec: PerturbSpec,
                drop_singletons: bool = True,
                retrain: LinkerConfig | None = None) -> list[CurvePoint]:
    """Perturb, link and score once per target.

    With ``retrain`` a fresh linker is trained on each perturbed mention set
    (against the same documents' gold chains) instead of reusing ``model``.
    """
    gold = gold_markables(docs, drop_singletons)
    base = {d.key: set(mentions.get(d.key, ())) for d in docs}
    tp, n_pred, n_gold = _counts(base, gold)
    current = 100.0 * (tp / n_pred if spec.axis == "precision" else tp / n_gold)
    for t in spec.targets:
        if t < current - 1e-9:
            raise ValueError("sweep target %.2f is below the unperturbed %s %.2f"
                             % (t, spec.axis, current))
    perturb = perturb_precision if spec.axis == "precision" else perturb_recall
    points = []
    for i, target in enumerate(spec.targets):
        perturbed = perturb(base, gold, target, _point_seed(spec.seed, i))
        link_docs = [link_document(d, perturbed[d.key]) for d in docs]
        point_model = train_linker(link_docs, retrain) if retrain is not None else model
        pairs = []
        for d, ld in zip(docs, link_docs):
            key = [list(c.mentions) for c in d.gold_chains
                   if not (drop_singletons and len(c.mentions) == 1)]
            resp = [c for c in link_spans(point_model, ld) if not (drop_singletons and len(c) == 1)]
            pairs.append((key, resp))
        report = score_chains(pairs)
        ms = prf_from_counts(*_counts(perturbed, gold))
        axis_value = 100.0 * (ms.precision if spec.axis == "precision" else ms.recall)
        points.append(CurvePoint(target, axis_value, ms.pred_total, ms.precision, ms.recall,
                                 report, perturbed))
    return points


CURVE_COLUMNS = ("target", "axis_value", "n_mentions", "mention_P", "mention_R",
                 "muc_f", "b3_f", "ceaf_f", "avg_f1")


def curve_to_csv(points: list[CurvePoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CURVE_COLUMNS)
    for p in points:
        r = p.report
        w.writerow(["%g" % p.target, "%.2f" % p.axis_value, p.n_mentions,
                    "%.2f" % (100 * p.mention_p), "%.2f" % (100 * p.mention_r),
                    "%.2f" % (100 * r.muc.f1), "%.2f" % (100 * r.b3.f1),
                    "%.2f" % (100 * r.ceaf_phi4.f1), "%.2f" % (100 * r.avg_f1)])
    return buf.getvalue()


def curve_trend(points: list[CurvePoint]) -> float:
    """Spearman correlation between achieved axis value and average F1."""
    x = [p.axis_value for p in points]
    y = [p.report.avg_f1 for p in points]
    return float(spearmanr(x, y).statistic)


RECALL_TAGS = ("nested-missing", "boundary", "other")
PRECISION_TAGS = ("trailing-punctuation", "other")


@dataclass
class ErrorReport:
    recall: dict = field(default_factory=lambda: {t: [] for t in RECALL_TAGS})
    precision: dict = field(default_factory=lambda: {t: [] for t in PRECISION_TAGS})

    def counts(self) -> dict:
        out = {"recall/" + t: len(v) for t, v in self.recall.items()}
        out.update({"precision/" + t: len(v) for t, v in self.precision.items()})
        return out

    def format(self) -> str:
        return "\n".join("%-32s %d" % kv for kv in self.counts().items())


def diagnose_errors(pred: Mapping, gold: Mapping, documents: Mapping[tuple, Document]) -> ErrorReport:
    """Tag recall and precision errors with rough categories.

    A missed gold span lying strictly inside a predicted span is a missing
    nested entity; one that only partly overlaps predictions is a boundary
    error.  Predicted spans that end in punctuation are tagged as such.
    """
    report = ErrorReport()
    for key in sorted(gold, key=str):
        p, g = set(pred.get(key, ())), set(gold[key])
        for span in sorted(g - p):
            if any(q.contains(span) and q != span for q in p):
                tag = "nested-missing"
            elif any(q.overlaps(span) for q in p):
                tag = "boundary"
            else:
                tag = "other"
            report.recall[tag].append((key, span))
        doc = documents.get(key)
        for span in sorted(p - g):
            tag = "other"
            if doc is not None:
                last = doc.sentences[span.sentence_index][span.end]
                if last.pos in PUNCT_POS:
                    tag = "trailing-punctuation"
            report.precision[tag].append((key, span))
    return report
