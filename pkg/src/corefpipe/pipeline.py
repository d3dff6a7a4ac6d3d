"""Two-step inference: propose mentions with the classifier, then link them.

Also holds the plain-text candidate and mention tables passed between the
command-line steps.
"""
from __future__ import annotations

import csv
import io
from typing import Iterable, Mapping

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .conll import Document, Span
from .corpus import CorpusDocument
from .exceptions import ConllFormatError
from .features import SCHEMA, featurize_corpus
from .gbt import GbtConfig, GbtModel, predict_proba, train_gbt
from .linker import LinkerModel, link_document, link_spans

CANDIDATE_COLUMNS = ("doc_id", "part", "sentence", "start", "end", "source", "label")
MENTION_COLUMNS = ("doc_id", "part", "sentence", "start", "end")


def labeled_matrix(docs: Iterable[CorpusDocument]):
    """Features and 0/1 labels of the labeled candidates only."""
    X, y = featurize_corpus(docs)
    keep = y >= 0
    return X[keep], y[keep]


def propose_mentions(model: GbtModel, docs: Iterable[CorpusDocument],
                     threshold: float = 0.5) -> tuple[dict, dict]:
    """Classify every candidate; return ``(mentions, probabilities)`` per document.

    ``probabilities`` maps a document key to one array aligned with
    ``doc.all_candidates``.
    """
    mentions, probs = {}, {}
    for doc in docs:
        X, _ = featurize_corpus([doc])
        p = predict_proba(model, X, SCHEMA.fingerprint) if len(X) else np.zeros(0)
        probs[doc.key] = p
        mentions[doc.key] = {c.span for c, pc in zip(doc.all_candidates, p) if pc >= threshold}
    return mentions, probs


def run_pipeline(classifier: GbtModel, linker: LinkerModel, docs: Iterable[CorpusDocument],
                 threshold: float = 0.5) -> list[Document]:
    """Step 1 proposes mentions, step 2 links them; returns response documents."""
    docs = list(docs)
    mentions, _ = propose_mentions(classifier, docs, threshold)
    out = []
    for doc in docs:
        ld = link_document(doc.document, mentions[doc.key])
        out.append(doc.document.with_chains(link_spans(linker, ld)))
    return out


class MentionDetector(BaseEstimator):
    """Candidate classifier producing one mention set per document.

    ``fit`` takes corpus documents with labeled candidates; ``predict``
    returns a dict from document key to the set of accepted spans.
    """

    def __init__(self, threshold=0.5, learning_rate=0.1, rounds=200, max_depth=6,
                 lambda_l2=1.0, gamma_min_gain=0.0, min_child_hessian=1.0):
        self.threshold = threshold
        self.learning_rate = learning_rate
        self.rounds = rounds
        self.max_depth = max_depth
        self.lambda_l2 = lambda_l2
        self.gamma_min_gain = gamma_min_gain
        self.min_child_hessian = min_child_hessian

    def fit(self, X, y=None):
        X = list(X)
        feats, labels = labeled_matrix(X)
        if not len(labels):
            raise ValueError("no labeled candidates to train on")
        cfg = GbtConfig(self.learning_rate, self.rounds, self.max_depth, self.lambda_l2,
                        self.gamma_min_gain, self.min_child_hessian)
        self.model_ = train_gbt(feats, labels, cfg, SCHEMA.fingerprint)
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "model_")
        return propose_mentions(self.model_, list(X), self.threshold)[1]

    def predict(self, X):
        check_is_fitted(self, "model_")
        return propose_mentions(self.model_, list(X), self.threshold)[0]


def _table(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, delimiter="\t", lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def candidate_table(docs: Iterable[CorpusDocument], probs: Mapping | None = None) -> str:
    """Tab-separated candidate table; a ``prob`` column is added when given."""
    cols = CANDIDATE_COLUMNS + (("prob",) if probs is not None else ())
    rows = []
    for doc in docs:
        p = probs[doc.key] if probs is not None else None
        for i, c in enumerate(doc.all_candidates):
            s = c.span
            row = [doc.document.doc_id, doc.document.part, s.sentence_index, s.start, s.end,
                   c.source.value, "" if c.label is None else int(c.label)]
            if p is not None:
                row.append("%.6f" % p[i])
            rows.append(row)
    return _table(cols, rows)


def mention_table(mentions: Mapping) -> str:
    rows = []
    for key in sorted(mentions):
        for s in sorted(mentions[key]):
            rows.append([key[0], key[1], s.sentence_index, s.start, s.end])
    return _table(MENTION_COLUMNS, rows)


def parse_mention_table(text: str, threshold: float = 0.5) -> dict:
    """Read a mention or candidate table into per-document span sets.

    Candidate tables are filtered: rows with a ``prob`` column are kept when
    ``prob >= threshold``, otherwise rows are kept when ``label`` is 1.
    """
    reader = csv.reader(io.StringIO(text), delimiter="\t")
    header = next(reader, None)
    if header is None or tuple(header[:5]) != MENTION_COLUMNS:
        raise ConllFormatError("mention table must start with columns %s"
                               % " ".join(MENTION_COLUMNS))
    prob_col = header.index("prob") if "prob" in header else None
    label_col = header.index("label") if "label" in header and prob_col is None else None
    out: dict = {}
    for line_no, row in enumerate(reader, 2):
        if not row:
            continue
        try:
            key = (row[0], int(row[1]))
            span = Span(int(row[2]), int(row[3]), int(row[4]))
            if prob_col is not None and float(row[prob_col]) < threshold:
                span = None
            elif label_col is not None and row[label_col] != "1":
                span = None
        except (IndexError, ValueError) as e:
            raise ConllFormatError("bad mention row at line %d: %s" % (line_no, e)) from None
        spans = out.setdefault(key, set())  # documents with no accepted rows still appear
        if span is not None:
            spans.add(span)
    return out
