"""Mention-pair coreference linking with a single shared mention score.

Every mention gets the same trainable mention score ``w_m``, so the pair
score is ``s(i, j) = 2 * w_m + w . f(i, j)`` against a dummy antecedent
fixed at 0.  Nothing is pruned by mention score, and mentions that pick the
dummy come out as singleton chains.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .conll import Document, Span
from .features import head_index
from .metrics import score_chains

log = logging.getLogger(__name__)

FORMAT_HEADER = "corefpipe-linker v1"

PRONOUN_FORMS = frozenset("""
i me my mine myself you your yours yourself yourselves he him his himself she her hers
herself it its itself we us our ours ourselves they them their theirs themselves
""".split())

SENT_BUCKETS = ((0, 0), (1, 1), (2, 2), (3, 4), (5, None))
MENTION_BUCKETS = ((1, 1), (2, 2), (3, 4), (5, 8), (9, 16), (17, None))


def _bucket_name(prefix, lo, hi):
    if hi == lo:
        return "%s=%d" % (prefix, lo)
    if hi is None:
        return "%s=%d+" % (prefix, lo)
    return "%s=%d-%d" % (prefix, lo, hi)


PAIR_FEATURES = tuple(
    [_bucket_name("sent_dist", lo, hi) for lo, hi in SENT_BUCKETS]
    + [_bucket_name("mention_dist", lo, hi) for lo, hi in MENTION_BUCKETS]
    + ["exact_match", "head_match", "anaphor_pronoun", "antecedent_pronoun",
       "both_pronoun", "same_speaker", "same_genre", "nested"]
)
N_PAIR_FEATURES = len(PAIR_FEATURES)


@dataclass(frozen=True)
class MentionMeta:
    genre: str
    speaker: str
    index: int


@dataclass(frozen=True)
class LinkMention:
    span: Span
    text: str  # lowercased surface string
    head: str
    is_pronoun: bool
    meta: MentionMeta


@dataclass
class LinkDocument:
    """Mentions of one document in order, plus optional gold clusters.

    ``gold_cluster[i]`` is the gold chain id of mention ``i`` or ``None``.
    ``key_chains`` holds the full gold chains (spans) for scoring.
    """

    key: tuple[str, int]
    mentions: list[LinkMention]
    gold_cluster: list[int | None] = field(default_factory=list)
    key_chains: list[list[Span]] = field(default_factory=list)


def _bucket(value, buckets):
    for i, (lo, hi) in enumerate(buckets):
        if value >= lo and (hi is None or value <= hi):
            return i
    return len(buckets) - 1


def link_document(doc: Document, spans: Iterable[Span]) -> LinkDocument:
    """Build a linking document from a CoNLL document and a mention set."""
    spans = sorted(set(spans), key=lambda s: (s.sentence_index, s.start, -s.end))
    chain_of = {}
    for c in doc.gold_chains:
        for m in c.mentions:
            chain_of[m] = c.chain_id
    mentions = []
    for i, span in enumerate(spans):
        rows = doc.sentences[span.sentence_index][span.start:span.end + 1]
        forms = [r.form for r in rows]
        pos = [r.pos for r in rows]
        h = head_index(pos)
        is_pron = len(rows) == 1 and (pos[0] in ("PRP", "PRP$") or forms[0].lower() in PRONOUN_FORMS)
        mentions.append(LinkMention(
            span=span, text=" ".join(forms).lower(), head=forms[h].lower(), is_pronoun=is_pron,
            meta=MentionMeta(doc.genre, rows[0].speaker, i)))
    return LinkDocument(doc.key, mentions, [chain_of.get(s) for s in spans],
                        [list(c.mentions) for c in doc.gold_chains])


def pair_features(anaphor: LinkMention, antecedent: LinkMention) -> np.ndarray:
    f = np.zeros(N_PAIR_FEATURES)
    sd = anaphor.span.sentence_index - antecedent.span.sentence_index
    md = anaphor.meta.index - antecedent.meta.index
    f[_bucket(sd, SENT_BUCKETS)] = 1.0
    f[len(SENT_BUCKETS) + _bucket(md, MENTION_BUCKETS)] = 1.0
    k = len(SENT_BUCKETS) + len(MENTION_BUCKETS)
    f[k] = float(anaphor.text == antecedent.text)
    f[k + 1] = float(anaphor.head == antecedent.head)
    f[k + 2] = float(anaphor.is_pronoun)
    f[k + 3] = float(antecedent.is_pronoun)
    f[k + 4] = float(anaphor.is_pronoun and antecedent.is_pronoun)
    f[k + 5] = float(anaphor.meta.speaker == antecedent.meta.speaker)
    f[k + 6] = float(anaphor.meta.genre == antecedent.meta.genre)
    f[k + 7] = float(anaphor.span.contains(antecedent.span) or antecedent.span.contains(anaphor.span))
    return f


@dataclass(frozen=True)
class LinkerConfig:
    learning_rate: float = 1.0
    epochs: int = 200
    l2: float = 1e-3
    w_m_init: float = 0.0
    max_antecedents: int | None = None


@dataclass
class LinkerModel:
    w: np.ndarray
    w_m: float
    config: LinkerConfig = LinkerConfig()

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)
        if self.w.shape != (N_PAIR_FEATURES,):
            raise ValueError("weight vector must have %d entries" % N_PAIR_FEATURES)

    @classmethod
    def zeros(cls, config: LinkerConfig = LinkerConfig()) -> "LinkerModel":
        return cls(np.zeros(N_PAIR_FEATURES), config.w_m_init, config)

    def to_text(self) -> str:
        c = self.config
        lines = [FORMAT_HEADER,
                 "config learning_rate=%r epochs=%d l2=%r w_m_init=%r max_antecedents=%s"
                 % (c.learning_rate, c.epochs, c.l2, c.w_m_init,
                    "-" if c.max_antecedents is None else c.max_antecedents),
                 "w_m %r" % float(self.w_m)]
        lines += ["w %s %r" % (name, float(v)) for name, v in zip(PAIR_FEATURES, self.w)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "LinkerModel":
        lines = text.splitlines()
        if not lines or lines[0] != FORMAT_HEADER:
            raise ValueError("not a %r model file" % FORMAT_HEADER)
        weights = {}
        w_m = 0.0
        config = LinkerConfig()
        for line in lines[1:]:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "config":
                kv = dict(p.split("=", 1) for p in parts[1:])
                config = LinkerConfig(
                    float(kv["learning_rate"]), int(kv["epochs"]), float(kv["l2"]),
                    float(kv["w_m_init"]),
                    None if kv["max_antecedents"] == "-" else int(kv["max_antecedents"]))
            elif parts[0] == "w_m":
                w_m = float(parts[1])
            elif parts[0] == "w":
                weights[parts[1]] = float(parts[2])
        if set(weights) != set(PAIR_FEATURES):
            raise ValueError("linker model features do not match %s" % ",".join(PAIR_FEATURES))
        return cls(np.array([weights[n] for n in PAIR_FEATURES]), w_m, config)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_text())

    @classmethod
    def load(cls, path) -> "LinkerModel":
        with open(path, encoding="utf-8") as f:
            return cls.from_text(f.read())


def pair_score(model: LinkerModel, doc: LinkDocument, i: int, j: int) -> float:
    """Score of mention ``j`` as antecedent of mention ``i`` (``j < i``)."""
    if not 0 <= j < i:
        raise ValueError("antecedent index %d must precede anaphor %d" % (j, i))
    return 2.0 * model.w_m + float(model.w @ pair_features(doc.mentions[i], doc.mentions[j]))


def _antecedent_range(i, max_antecedents):
    lo = 0 if max_antecedents is None else max(0, i - max_antecedents)
    return range(lo, i)


def doc_pair_matrix(doc: LinkDocument, max_antecedents=None):
    """Pair features for every (anaphor, antecedent) pair, anaphor-major.

    Returns ``(F, anaphor, antecedent)`` with one row per pair.
    """
    rows, ana, ante = [], [], []
    for i in range(1, len(doc.mentions)):
        for j in _antecedent_range(i, max_antecedents):
            rows.append(pair_features(doc.mentions[i], doc.mentions[j]))
            ana.append(i)
            ante.append(j)
    if not rows:
        return np.zeros((0, N_PAIR_FEATURES)), np.zeros(0, int), np.zeros(0, int)
    return np.vstack(rows), np.asarray(ana), np.asarray(ante)


@dataclass
class PairTable:
    """All training pairs of a corpus, grouped by anaphor.

    Rows of one anaphor are contiguous, starting at ``starts[k]``.  ``gold``
    flags rows whose antecedent is in the anaphor's gold chain and
    ``eps_gold[k]`` is set when no such antecedent exists.
    """

    F: np.ndarray
    gold: np.ndarray
    starts: np.ndarray
    counts: np.ndarray
    eps_gold: np.ndarray

    @property
    def n_anaphors(self):
        return len(self.starts)


def build_pair_table(docs: Iterable[LinkDocument], max_antecedents=None) -> PairTable:
    Fs, golds, counts, eps = [], [], [], []
    for doc in docs:
        if not doc.mentions:
            continue
        F, ana, ante = doc_pair_matrix(doc, max_antecedents)
        if not len(F):
            continue
        cl = np.array([-1 if c is None else c for c in doc.gold_cluster])
        g = (cl[ana] >= 0) & (cl[ana] == cl[ante])
        bounds = np.flatnonzero(np.diff(ana)) + 1
        for seg_g in np.split(g, bounds):
            counts.append(len(seg_g))
            eps.append(not seg_g.any())
        Fs.append(F)
        golds.append(g)
    if not Fs:
        z = np.zeros(0, int)
        return PairTable(np.zeros((0, N_PAIR_FEATURES)), np.zeros(0, bool), z, z, np.zeros(0, bool))
    counts = np.asarray(counts)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    return PairTable(np.vstack(Fs), np.concatenate(golds), starts, counts, np.asarray(eps))


def objective(theta: np.ndarray, table: PairTable, l2: float):
    """Mean negative marginal log-likelihood of gold antecedents, plus L2 on ``w``.

    ``theta`` is ``w`` followed by ``w_m``.  Returns ``(loss, gradient)``.
    """
    w, w_m = theta[:-1], theta[-1]
    n = table.n_anaphors
    reg = 0.5 * l2 * float(w @ w)
    if n == 0:
        return reg, np.concatenate([l2 * w, [0.0]])
    s = 2.0 * w_m + table.F @ w
    starts, counts = table.starts, table.counts

    # log partition over {dummy} + real antecedents
    m = np.maximum(np.maximum.reduceat(s, starts), 0.0)
    m_rep = np.repeat(m, counts)
    e = np.exp(s - m_rep)
    Z = np.exp(-m) + np.add.reduceat(e, starts)
    logZ = m + np.log(Z)

    # log mass on the gold set; the dummy alone when eps_gold
    s_gold = np.where(table.gold, s, -np.inf)
    mg = np.maximum.reduceat(s_gold, starts)
    mg = np.where(table.eps_gold, 0.0, mg)
    mg_rep = np.repeat(mg, counts)
    eg = np.where(table.gold, np.exp(s_gold - mg_rep), 0.0)
    lognum = np.where(table.eps_gold, 0.0, mg + np.log(np.where(table.eps_gold, 1.0,
                                                                np.add.reduceat(eg, starts))))
    loss = float(np.sum(logZ - lognum)) / n + reg

    p = np.exp(s - np.repeat(logZ, counts))
    q = np.where(table.gold, np.exp(s_gold - np.repeat(lognum, counts)), 0.0)
    d = (p - q) / n
    grad_w = table.F.T @ d + l2 * w
    grad_wm = 2.0 * d.sum()
    return loss, np.concatenate([grad_w, [grad_wm]])


def train_linker(docs: Sequence[LinkDocument], config: LinkerConfig = LinkerConfig(),
                 loss_history: list | None = None) -> LinkerModel:
    """Gradient descent with backtracking on the antecedent log-likelihood.

    The step starts at ``learning_rate``, halves until the Armijo condition
    holds and grows by half after each accepted step, so the loss never
    increases between epochs.
    """
    table = build_pair_table([d for d in docs if d.mentions], config.max_antecedents)
    theta = np.concatenate([np.zeros(N_PAIR_FEATURES), [config.w_m_init]])
    loss, grad = objective(theta, table, config.l2)
    if loss_history is not None:
        loss_history.append(loss)
    step = config.learning_rate
    for epoch in range(config.epochs):
        gnorm2 = float(grad @ grad)
        if gnorm2 < 1e-18:
            break
        while True:
            cand = theta - step * grad
            new_loss, new_grad = objective(cand, table, config.l2)
            if new_loss <= loss - 1e-4 * step * gnorm2:
                break
            step *= 0.5
            if step < 1e-12:
                new_loss, new_grad, cand = loss, grad, theta
                break
        if cand is theta:
            break
        theta, loss, grad = cand, new_loss, new_grad
        if loss_history is not None:
            loss_history.append(loss)
        step = min(step * 1.5, 64 * config.learning_rate)
    log.debug("linker trained: loss %.6f over %d anaphors", loss, table.n_anaphors)
    return LinkerModel(theta[:-1].copy(), float(theta[-1]), config)


def choose_antecedents(model: LinkerModel, doc: LinkDocument) -> list[int | None]:
    """Best antecedent index per mention, or ``None`` for the dummy.

    Ties between real antecedents go to the closest one; a real score tied
    with the dummy's 0 resolves to the dummy.
    """
    F, ana, ante = doc_pair_matrix(doc, model.config.max_antecedents)
    out: list[int | None] = [None] * len(doc.mentions)
    if not len(F):
        return out
    scores = 2.0 * model.w_m + F @ model.w
    bounds = np.flatnonzero(np.diff(ana)) + 1
    for seg_s, seg_a, seg_j in zip(np.split(scores, bounds), np.split(ana, bounds),
                                   np.split(ante, bounds)):
        k = len(seg_s) - 1 - int(np.argmax(seg_s[::-1]))
        if seg_s[k] > 0:
            out[int(seg_a[0])] = int(seg_j[k])
    return out


def link(model: LinkerModel, doc: LinkDocument) -> list[list[int]]:
    """Cluster mentions; every mention ends up in exactly one chain.

    Chains are lists of mention indices, ordered by their first mention.
    """
    n = len(doc.mentions)
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in enumerate(choose_antecedents(model, doc)):
        if j is not None:
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [groups[r] for r in sorted(groups)]


def link_spans(model: LinkerModel, doc: LinkDocument) -> list[list[Span]]:
    return [[doc.mentions[i].span for i in chain] for chain in link(model, doc)]


def tune(train_docs, dev_docs, w_m_grid=(-2.0, -1.0, 0.0, 1.0), l2_grid=(1e-4, 1e-3, 1e-2),
         config: LinkerConfig = LinkerConfig(), drop_singletons: bool = True):
    """Grid search over ``w_m`` initialisation and L2 strength on a dev split.

    Returns ``(best_model, results)`` with one ``(w_m_init, l2, avg_f1)``
    tuple per grid point.
    """
    best, best_f1, results = None, -1.0, []
    for w_m0 in w_m_grid:
        for l2 in l2_grid:
            cfg = replace(config, w_m_init=float(w_m0), l2=float(l2))
            model = train_linker(train_docs, cfg)
            f1 = score_chains(_scoring_pairs(model, dev_docs, drop_singletons)).avg_f1
            results.append((float(w_m0), float(l2), f1))
            if f1 > best_f1:
                best, best_f1 = model, f1
    return best, results


def _scoring_pairs(model, docs, drop_singletons):
    for doc in docs:
        key = [c for c in doc.key_chains if not (drop_singletons and len(c) == 1)]
        resp = [c for c in link_spans(model, doc) if not (drop_singletons and len(c) == 1)]
        yield key, resp


class MentionPairLinker(BaseEstimator):
    """Estimator interface: ``fit`` on linking documents, ``predict`` chains."""

    def __init__(self, learning_rate=1.0, epochs=200, l2=1e-3, w_m_init=0.0, max_antecedents=None):
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.l2 = l2
        self.w_m_init = w_m_init
        self.max_antecedents = max_antecedents

    def _config(self):
        return LinkerConfig(self.learning_rate, self.epochs, self.l2, self.w_m_init,
                            self.max_antecedents)

    def fit(self, X, y=None):
        self.loss_history_ = []
        self.model_ = train_linker(list(X), self._config(), self.loss_history_)
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        return [link_spans(self.model_, doc) for doc in X]

    def score(self, X, y=None, drop_singletons=True):
        """Average of MUC, B3 and CEAF-phi4 F1 against the documents' key chains."""
        return score_chains(_scoring_pairs(self.model_, list(X), drop_singletons)).avg_f1
