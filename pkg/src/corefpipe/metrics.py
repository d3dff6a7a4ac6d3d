"""Mention detection and coreference scores: MUC, B-cubed, CEAF-phi4.

Chains are iterables of hashable mentions (usually :class:`~corefpipe.conll.Span`).
Corpus scores pool numerators and denominators over documents rather than
averaging per-document scores.
"""
from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
from scipy.optimize import linear_sum_assignment


def _f1(p, r):
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float

    def __iter__(self):
        return iter((self.precision, self.recall, self.f1))


@dataclass(frozen=True)
class MentionScore:
    precision: float
    recall: float
    f1: float
    tp: int
    pred_total: int
    gold_total: int

    def format(self) -> str:
        """Table-4 style: ``P (tp/pred)  R (tp/gold)  F1`` scaled by 100."""
        return "%.2f (%s/%s)  %.2f (%s/%s)  %.2f" % (
            100 * self.precision, format(self.tp, ","), format(self.pred_total, ","),
            100 * self.recall, format(self.tp, ","), format(self.gold_total, ","),
            100 * self.f1)


def prf_from_counts(tp: int, pred_total: int, gold_total: int) -> MentionScore:
    if tp > min(pred_total, gold_total) or tp < 0:
        raise ValueError("tp must lie in [0, min(pred_total, gold_total)]")
    if pred_total == 0 and gold_total == 0:
        return MentionScore(1.0, 1.0, 1.0, 0, 0, 0)
    p = tp / pred_total if pred_total else 0.0
    r = tp / gold_total if gold_total else 0.0
    return MentionScore(p, r, _f1(p, r), tp, pred_total, gold_total)


def mention_prf(pred, gold) -> MentionScore:
    """Exact-match mention precision/recall/F1 with raw counts.

    Takes two span collections, or two dicts mapping a document key to its
    spans; a document missing from one side counts as empty there.
    """
    if isinstance(pred, Mapping) or isinstance(gold, Mapping):
        pred, gold = dict(pred), dict(gold)
        keys = set(pred) | set(gold)
        pred = {(k, s) for k in keys for s in pred.get(k, ())}
        gold = {(k, s) for k in keys for s in gold.get(k, ())}
    pred, gold = set(pred), set(gold)
    return prf_from_counts(len(pred & gold), len(pred), len(gold))


# -- per-document counts -----------------------------------------------------
#
# Each metric returns (recall_num, recall_den, precision_num, precision_den);
# corpus scores sum these.


def _clusters(chains):
    out = [frozenset(c) for c in chains]
    return [c for c in out if c]


def _index(clusters):
    idx = {}
    for i, c in enumerate(clusters):
        for m in c:
            idx[m] = i
    return idx


def muc_counts(key, response):
    key, response = _clusters(key), _clusters(response)
    resp_idx, key_idx = _index(response), _index(key)

    def side(a, b_idx):
        num = den = 0
        for c in a:
            parts = set()
            singles = 0
            for m in c:
                if m in b_idx:
                    parts.add(b_idx[m])
                else:
                    singles += 1
            num += len(c) - (len(parts) + singles)
            den += len(c) - 1
        return num, den

    rn, rd = side(key, resp_idx)
    pn, pd = side(response, key_idx)
    return rn, rd, pn, pd


def b3_counts(key, response):
    key, response = _clusters(key), _clusters(response)
    resp_idx, key_idx = _index(response), _index(key)

    def side(a, b, b_idx):
        num = 0.0
        n = 0
        for c in a:
            for m in c:
                n += 1
                if m in b_idx:
                    num += len(c & b[b_idx[m]]) / len(c)
        return num, n

    rn, rd = side(key, response, resp_idx)
    pn, pd = side(response, key, key_idx)
    return rn, rd, pn, pd


def phi4(k, r) -> float:
    return 2.0 * len(k & r) / (len(k) + len(r))


def assignment_max(weights) -> list[tuple[int, int]]:
    """Maximum-weight one-to-one matching of rows to columns.

    Rectangular inputs behave as if zero-padded to square; only real
    row/column pairs are returned.
    """
    w = np.asarray(weights, dtype=float)
    if w.size == 0:
        return []
    if w.ndim != 2 or not np.isfinite(w).all():
        raise ValueError("weights must be a finite 2-D matrix")
    rows, cols = linear_sum_assignment(w, maximize=True)
    return [(int(i), int(j)) for i, j in zip(rows, cols)]


def ceaf_phi4_counts(key, response):
    key, response = _clusters(key), _clusters(response)
    if not key or not response:
        return 0.0, len(key), 0.0, len(response)
    sim = np.array([[phi4(k, r) for r in response] for k in key])
    total = float(sum(sim[i, j] for i, j in assignment_max(sim)))
    return total, len(key), total, len(response)


def _mentions(chains):
    return frozenset(m for c in chains for m in c)


def _score(counts, identical):
    rn, rd, pn, pd = counts
    if rd == 0 and pd == 0:
        v = 1.0 if identical else 0.0
        return PRF(v, v, v)
    r = rn / rd if rd else 0.0
    p = pn / pd if pd else 0.0
    return PRF(p, r, _f1(p, r))


def muc(key, response) -> PRF:
    key, response = list(key), list(response)
    return _score(muc_counts(key, response), _mentions(key) == _mentions(response))


def b3(key, response) -> PRF:
    key, response = list(key), list(response)
    return _score(b3_counts(key, response), _mentions(key) == _mentions(response))


def ceaf_phi4(key, response) -> PRF:
    key, response = list(key), list(response)
    return _score(ceaf_phi4_counts(key, response), _mentions(key) == _mentions(response))


# -- corpus level ------------------------------------------------------------

METRICS = ("muc", "b3", "ceaf_phi4")
_COUNTERS = {"muc": muc_counts, "b3": b3_counts, "ceaf_phi4": ceaf_phi4_counts}


@dataclass
class ScoreReport:
    mention: MentionScore
    muc: PRF
    b3: PRF
    ceaf_phi4: PRF
    n_documents: int = 0
    missing: list = field(default_factory=list)

    @property
    def avg_f1(self) -> float:
        return (self.muc.f1 + self.b3.f1 + self.ceaf_phi4.f1) / 3.0

    def as_row(self) -> dict:
        m = self.mention
        row = {"mention_p": m.precision, "mention_r": m.recall, "mention_f": m.f1}
        for name in METRICS:
            s = getattr(self, name)
            row.update({name + "_p": s.precision, name + "_r": s.recall, name + "_f": s.f1})
        row["avg_f1"] = self.avg_f1
        return row

    def format_table(self) -> str:
        """Scores x100 with two decimals, one row per metric."""
        lines = ["%-18s %7s %7s %7s" % ("", "P", "R", "F1")]
        m = self.mention
        lines.append("%-18s %7.2f %7.2f %7.2f   (%d/%d, %d/%d)" % (
            "Mention detection", 100 * m.precision, 100 * m.recall, 100 * m.f1,
            m.tp, m.pred_total, m.tp, m.gold_total))
        for label, name in (("MUC", "muc"), ("B3", "b3"), ("CEAF_phi4", "ceaf_phi4")):
            s = getattr(self, name)
            lines.append("%-18s %7.2f %7.2f %7.2f" % (label, 100 * s.precision, 100 * s.recall,
                                                      100 * s.f1))
        lines.append("%-18s %23.2f" % ("Avg. F1", 100 * self.avg_f1))
        return "\n".join(lines)

    def to_csv(self) -> str:
        row = self.as_row()
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(row))
        w.writerow(["%.4f" % (100 * v) for v in row.values()])
        return buf.getvalue()


def score_chains(pairs: Iterable[tuple[list, list]]) -> ScoreReport:
    """Pool scores over ``(key_chains, response_chains)`` document pairs."""
    totals = {name: [0.0, 0.0, 0.0, 0.0] for name in METRICS}
    tp = n_pred = n_gold = 0
    identical = True
    n_docs = 0
    for key, response in pairs:
        key, response = _clusters(key), _clusters(response)
        n_docs += 1
        km, rm = _mentions(key), _mentions(response)
        identical = identical and km == rm
        tp += len(km & rm)
        n_pred += len(rm)
        n_gold += len(km)
        for name in METRICS:
            counts = _COUNTERS[name](key, response)
            for i in range(4):
                totals[name][i] += counts[i]
    return ScoreReport(
        mention=prf_from_counts(tp, n_pred, n_gold),
        muc=_score(totals["muc"], identical),
        b3=_score(totals["b3"], identical),
        ceaf_phi4=_score(totals["ceaf_phi4"], identical),
        n_documents=n_docs,
    )


def _doc_chains(doc, drop_singletons):
    return [list(c.mentions) for c in doc.gold_chains
            if not (drop_singletons and len(c.mentions) == 1)]


def score_corpus(key_docs, response_docs, drop_singletons: bool = False) -> ScoreReport:
    """Score response documents against key documents, matched by (doc_id, part).

    A key document with no response counts as an empty response.
    """
    responses = {d.key: d for d in response_docs}
    key_docs = list(key_docs)
    missing = []
    pairs = []
    for doc in key_docs:
        resp = responses.get(doc.key)
        if resp is None:
            missing.append(doc.key)
            warnings.warn("no response for document %s part %d; scoring it as empty" % doc.key)
            resp_chains = []
        else:
            resp_chains = _doc_chains(resp, drop_singletons)
        pairs.append((_doc_chains(doc, drop_singletons), resp_chains))
    report = score_chains(pairs)
    report.missing = missing
    return report
