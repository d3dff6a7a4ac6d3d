"""Fixed-width numeric features for mention candidates.

Three groups: the candidate node itself, its parent and children, and the
other candidates it overlaps with.  Every categorical feature is one-hot
over a closed vocabulary with an out-of-vocabulary slot, so the width never
depends on the data.
"""
from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .candidates import Candidate, Source
from .exceptions import SchemaVersionError
from .treebank import EMPTY_POS, ParsedSentence, TreeNode

SCHEMA_VERSION = 1

OOV = "<OOV>"
NONE = "<NONE>"

CATEGORIES = (
    "NP", "PP", "VP", "S", "SBAR", "SINV", "SQ", "SBARQ", "ADJP", "ADVP",
    "QP", "NX", "NML", "WHNP", "WHPP", "WHADVP", "PRN", "FRAG", "UCP", "PRT",
    "CONJP", "INTJ", "LST", "RRC", "X", "TOP",
)
POS_TAGS = (
    "CC", "CD", "DT", "EX", "FW", "IN", "JJ", "JJR", "JJS", "LS", "MD", "NN",
    "NNS", "NNP", "NNPS", "PDT", "POS", "PRP", "PRP$", "RB", "RBR", "RBS",
    "RP", "SYM", "TO", "UH", "VB", "VBD", "VBG", "VBN", "VBP", "VBZ", "WDT",
    "WP", "WP$", "WRB", ".", ",", ":", "``", "''", "-LRB-", "-RRB-", "HYPH",
    "$", "#", "NFP", "ADD", "AFX", "XX",
)
FUNCTION_TAGS = (
    "SBJ", "OBJ", "PRD", "LGS", "DTV", "CLR", "BNF", "PUT", "VOC", "TPC",
    "TMP", "LOC", "ADV", "MNR", "PRP", "DIR", "EXT", "NOM", "HLN", "TTL",
)
PREPOSITIONS = (
    "of", "in", "to", "for", "with", "on", "at", "from", "by", "about", "as",
    "into", "like", "through", "after", "over", "between", "out", "against",
    "during", "without", "before", "under", "around", "among", "since",
)
SOURCES = tuple(s.value for s in Source)
DEFINITE = frozenset({"the", "this", "that", "these", "those"})
INDEFINITE = frozenset({"a", "an", "some", "any", "no", "every", "each", "another",
                        "many", "several", "few", "all", "both", "either", "neither"})
DETERMINER_CLASSES = ("definite", "indefinite", "none")
LENGTH_BUCKETS = ((1, 1), (2, 2), (3, 3), (4, 4), (5, 7), (8, 15), (16, None))
ROLES = ("subject", "object", "pp_object", "possessor", "other")
NOUN_POS = frozenset({"NN", "NNS", "NNP", "NNPS"})
PUNCT_POS = frozenset({".", ",", ":", "``", "''", "-LRB-", "-RRB-", "HYPH", "NFP"})


@dataclass(frozen=True)
class Feature:
    name: str
    kind: str  # boolean | count | bucket | onehot


@dataclass(frozen=True)
class FeatureSchema:
    features: tuple[Feature, ...]
    version: int = SCHEMA_VERSION

    @property
    def total_width(self) -> int:
        return len(self.features)

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.features]

    def index(self, name: str) -> int:
        return self._index[name]

    @property
    def _index(self):
        idx = getattr(self, "_cached_index", None)
        if idx is None:
            idx = {f.name: i for i, f in enumerate(self.features)}
            object.__setattr__(self, "_cached_index", idx)
        return idx

    @property
    def fingerprint(self) -> str:
        h = hashlib.sha256(("v%d\n" % self.version).encode())
        for f in self.features:
            h.update(("%s\t%s\n" % (f.name, f.kind)).encode())
        return h.hexdigest()[:16]

    def to_text(self) -> str:
        lines = ["# corefpipe feature schema", "version\t%d" % self.version,
                 "fingerprint\t%s" % self.fingerprint, "width\t%d" % self.total_width]
        lines += ["%d\t%s\t%s" % (i, f.name, f.kind) for i, f in enumerate(self.features)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "FeatureSchema":
        version, fingerprint, feats = None, None, []
        for line in text.splitlines():
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if parts[0] == "version":
                version = int(parts[1])
            elif parts[0] == "fingerprint":
                fingerprint = parts[1]
            elif parts[0] == "width":
                continue
            else:
                feats.append(Feature(parts[1], parts[2]))
        schema = cls(tuple(feats), version if version is not None else SCHEMA_VERSION)
        if fingerprint is not None and fingerprint != schema.fingerprint:
            raise SchemaVersionError("schema manifest fingerprint does not match its contents")
        return schema


def _onehot(prefix, vocab, extra=(OOV,)):
    return [Feature("%s=%s" % (prefix, v), "onehot") for v in tuple(vocab) + tuple(extra)]


def build_schema() -> FeatureSchema:
    f: list[Feature] = []
    # current node
    f += _onehot("source", SOURCES, ())
    f += _onehot("cat", CATEGORIES, (OOV, NONE))
    f += [Feature("ftag=%s" % t, "boolean") for t in FUNCTION_TAGS]
    f += [Feature("has_coindex", "boolean")]
    f += _onehot("role", ROLES, ())
    f += _onehot("first_pos", POS_TAGS)
    f += _onehot("last_pos", POS_TAGS)
    f += _onehot("head_pos", POS_TAGS)
    f += _onehot("det", DETERMINER_CLASSES, ())
    f += [Feature("len_bucket=%s" % (str(lo) if hi == lo else "%d+" % lo if hi is None else "%d-%d" % (lo, hi)),
                  "bucket") for lo, hi in LENGTH_BUCKETS]
    f += [Feature("length", "count"), Feature("is_pronoun", "boolean"),
          Feature("has_proper_noun", "boolean"), Feature("has_number", "boolean"),
          Feature("ends_with_punct", "boolean"), Feature("has_possessive", "boolean")]
    # parent and children
    f += _onehot("parent_cat", CATEGORIES, (OOV, NONE))
    f += [Feature("parent_ftag=%s" % t, "boolean") for t in FUNCTION_TAGS]
    f += [Feature("parent_is_pp", "boolean")]
    f += _onehot("prep", PREPOSITIONS, (OOV, NONE))
    f += [Feature("n_np_children", "count"), Feature("n_children", "count"),
          Feature("has_none_child", "boolean"), Feature("has_cc_child", "boolean"),
          Feature("has_pp_child", "boolean"), Feature("has_sbar_child", "boolean"),
          Feature("has_comma_child", "boolean"), Feature("has_pos_child", "boolean"),
          Feature("n_siblings", "count")]
    # overlap with other candidates
    f += [Feature("n_containing", "count"), Feature("n_contained", "count"),
          Feature("depth_rank", "count"), Feature("is_largest", "boolean"),
          Feature("is_smallest", "boolean"), Feature("n_overlapping", "count"),
          Feature("relative_index", "count"), Feature("relative_start", "count")]
    return FeatureSchema(tuple(f))


SCHEMA = build_schema()
_LENGTH_FEATURES = [name for name in SCHEMA.names if name.startswith("len_bucket=")]


def head_index(pos_tags: Sequence[str]) -> int:
    """Rightmost noun-tagged token, else the last token (relative index)."""
    for i in range(len(pos_tags) - 1, -1, -1):
        if pos_tags[i] in NOUN_POS:
            return i
    return len(pos_tags) - 1


def _set(vec, name, value=1.0):
    vec[SCHEMA.index(name)] = value


def _set_onehot(vec, prefix, value, vocab):
    if value is None:
        _set(vec, "%s=%s" % (prefix, NONE))
    elif value in vocab:
        _set(vec, "%s=%s" % (prefix, value))
    else:
        _set(vec, "%s=%s" % (prefix, OOV))


def _role(sentence, path, node):
    if not path:
        return "other"
    parent = sentence.node_at(path[:-1])
    if node.category == "NP" and node.children and node.children[-1].leaf_token is not None \
            and node.children[-1].leaf_token[0] == "POS":
        return "possessor"
    if "SBJ" in node.function_tags:
        return "subject"
    if parent.category in ("S", "SINV", "SQ"):
        later = parent.children[path[-1] + 1:]
        if any(c.category == "VP" for c in later):
            return "subject"
    if parent.category == "VP" and not node.function_tags:
        return "object"
    if parent.category == "PP":
        return "pp_object"
    return "other"


def _preposition(parent: TreeNode | None):
    if parent is None or parent.category != "PP":
        return None
    for child in parent.children:
        if child.leaf_token is not None and child.leaf_token[0] in ("IN", "TO"):
            return child.leaf_token[1].lower()
    return OOV


def featurize(cand: Candidate, sentence: ParsedSentence, all_cands: Sequence[Candidate]) -> np.ndarray:
    """Feature vector for one candidate; pure in its three arguments."""
    vec = np.zeros(SCHEMA.total_width)
    span = cand.span
    pos = sentence.pos_tags[span.start:span.end + 1]
    forms = sentence.forms[span.start:span.end + 1]
    path = cand.node_path if cand.node_path is not None else ()
    node = sentence.node_at(path)
    # post-processed spans are a prefix of their NP node, not the node itself
    own_node = cand.source is not Source.POST_PROCESS

    _set(vec, "source=%s" % cand.source.value)
    if own_node and not node.is_leaf:
        _set_onehot(vec, "cat", node.category, CATEGORIES)
        for t in node.function_tags:
            if t in FUNCTION_TAGS:
                _set(vec, "ftag=%s" % t)
        if node.coindex is not None:
            _set(vec, "has_coindex")
    else:
        _set_onehot(vec, "cat", None, CATEGORIES)
    _set(vec, "role=%s" % (_role(sentence, path, node) if own_node else "other"))

    _set_onehot(vec, "first_pos", pos[0], POS_TAGS)
    _set_onehot(vec, "last_pos", pos[-1], POS_TAGS)
    h = head_index(pos)
    _set_onehot(vec, "head_pos", pos[h], POS_TAGS)
    first = forms[0].lower()
    if pos[0] == "PRP$" or first in DEFINITE or (len(pos) > 1 and "POS" in pos[:-1]):
        det = "definite"
    elif first in INDEFINITE and pos[0] in ("DT", "PDT"):
        det = "indefinite"
    else:
        det = "none"
    _set(vec, "det=%s" % det)
    n = len(pos)
    for (lo, hi), feat in zip(LENGTH_BUCKETS, _LENGTH_FEATURES):
        if n >= lo and (hi is None or n <= hi):
            _set(vec, feat)
    _set(vec, "length", float(n))
    _set(vec, "is_pronoun", float(n == 1 and pos[0] in ("PRP", "PRP$")))
    _set(vec, "has_proper_noun", float(any(p in ("NNP", "NNPS") for p in pos)))
    _set(vec, "has_number", float("CD" in pos))
    _set(vec, "ends_with_punct", float(pos[-1] in PUNCT_POS))
    _set(vec, "has_possessive", float("POS" in pos))

    # parent / children
    if own_node:
        parent = sentence.node_at(path[:-1]) if path else None
    else:
        parent = node
    _set_onehot(vec, "parent_cat", parent.category if parent is not None else None, CATEGORIES)
    if parent is not None:
        for t in parent.function_tags:
            if t in FUNCTION_TAGS:
                _set(vec, "parent_ftag=%s" % t)
        _set(vec, "n_siblings", float(len(parent.children) - 1))
    _set(vec, "parent_is_pp", float(parent is not None and parent.category == "PP"))
    _set_onehot(vec, "prep", _preposition(parent), PREPOSITIONS)
    children = node.children if own_node else []
    _set(vec, "n_np_children", float(sum(1 for c in children if c.category == "NP")))
    _set(vec, "n_children", float(len(children)))
    _set(vec, "has_none_child", float(any(c.leaf_token is not None and c.leaf_token[0] == EMPTY_POS
                                          for c in children)))
    _set(vec, "has_cc_child", float(any(c.category in ("CC", "CONJP") for c in children)))
    _set(vec, "has_pp_child", float(any(c.category == "PP" for c in children)))
    _set(vec, "has_sbar_child", float(any(c.category in ("SBAR", "RRC") for c in children)))
    _set(vec, "has_comma_child", float(any(c.category == "," for c in children)))
    _set(vec, "has_pos_child", float(any(c.category == "POS" for c in children)))

    # overlap
    containing = contained = 0
    overlapping = []
    for other in all_cands:
        o = other.span
        if o == span or not o.overlaps(span):
            continue
        overlapping.append(o)
        if o.contains(span):
            containing += 1
        elif span.contains(o):
            contained += 1
    group = sorted(overlapping + [span], key=lambda s: (-(s.end - s.start), s.start))
    _set(vec, "n_containing", float(containing))
    _set(vec, "n_contained", float(contained))
    _set(vec, "depth_rank", float(group.index(span)))
    _set(vec, "is_largest", float(containing == 0))
    _set(vec, "is_smallest", float(contained == 0))
    _set(vec, "n_overlapping", float(len(overlapping)))
    ordered = [c.span for c in all_cands]
    rel = ordered.index(span) / max(1, len(ordered) - 1) if span in ordered else 0.0
    _set(vec, "relative_index", rel)
    _set(vec, "relative_start", span.start / max(1, len(sentence)))
    return vec


def featurize_sentence(sentence: ParsedSentence, cands: Sequence[Candidate]) -> np.ndarray:
    if not cands:
        return np.zeros((0, SCHEMA.total_width))
    return np.vstack([featurize(c, sentence, cands) for c in cands])


def check_schema(schema: FeatureSchema | str | None) -> None:
    """Raise ``SchemaVersionError`` unless ``schema`` matches the current one."""
    if schema is None:
        return
    fp = schema if isinstance(schema, str) else schema.fingerprint
    if fp != SCHEMA.fingerprint:
        raise SchemaVersionError("feature schema %s does not match current schema %s"
                                 % (fp, SCHEMA.fingerprint))


def featurize_corpus(corpus: Iterable, schema: FeatureSchema | str | None = None):
    """Stack features of every candidate in document then candidate order.

    ``corpus`` holds objects with ``sentences`` (ParsedSentence list) and
    ``candidates`` (one candidate list per sentence).  Returns ``(X, y)``
    where unlabeled candidates get ``y = -1``.
    """
    check_schema(schema)
    rows, labels = [], []
    for doc in corpus:
        for sentence, cands in zip(doc.sentences, doc.candidates):
            if cands:
                rows.append(featurize_sentence(sentence, cands))
                labels.extend(-1 if c.label is None else int(c.label) for c in cands)
    if not rows:
        return np.zeros((0, SCHEMA.total_width)), np.zeros(0, dtype=int)
    return np.vstack(rows), np.asarray(labels, dtype=int)


def write_matrix_csv(X, y, path, schema: FeatureSchema = SCHEMA):
    """Feature matrix with a ``label`` column; names like ``first_pos=,`` are quoted."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(schema.names + ["label"])
        for row, label in zip(np.asarray(X), np.asarray(y)):
            w.writerow(["%.10g" % v for v in row] + [int(label)])


class CandidateFeaturizer(TransformerMixin, BaseEstimator):
    """Transformer from corpus documents to the candidate feature matrix."""

    def __init__(self, schema_fingerprint=None):
        self.schema_fingerprint = schema_fingerprint

    def fit(self, X, y=None):
        check_schema(self.schema_fingerprint)
        self.schema_ = SCHEMA
        self.n_features_out_ = SCHEMA.total_width
        return self

    def transform(self, X):
        return featurize_corpus(X, self.schema_fingerprint)[0]

    def get_feature_names_out(self, input_features=None):
        return np.asarray(SCHEMA.names, dtype=object)
