"""Mention candidates from constituency trees.

Every overt NP node is a candidate, plus personal/possessive pronouns and
stand-alone demonstratives.  Only empty categories are filtered by rule;
deciding which NPs are real mentions is left to the classifier.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Iterable

from .conll import Span
from .treebank import ParsedSentence

PRONOUN_POS = frozenset({"PRP", "PRP$"})
DEMONSTRATIVES = frozenset({"this", "that", "these", "those"})
PROPER_NOUN_POS = frozenset({"NNP", "NNPS"})


class Source(str, enum.Enum):
    NP_NODE = "np_node"
    PRONOUN_RULE = "pronoun_rule"
    POST_PROCESS = "post_process"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Candidate:
    span: Span
    node_path: tuple[int, ...] | None
    source: Source
    label: bool | None = None

    @property
    def sort_key(self):
        return (self.span.sentence_index, self.span.start, -self.span.end)


def _ordered(cands):
    return sorted(cands, key=lambda c: c.sort_key)


def extract_candidates(sentence: ParsedSentence, sentence_index: int = 0) -> list[Candidate]:
    """NP nodes with a non-empty overt span, plus rule-based pronouns.

    Unary NP-over-NP chains yield one candidate, attached to the highest node.
    """
    by_span: dict[tuple[int, int], Candidate] = {}
    for path, node in sentence.iter_nodes():
        if node.is_leaf or node.category != "NP":
            continue
        start, end = sentence.node_spans[path]
        if start == end:
            continue
        # pre-order: the first node seen for a span is the highest one
        if (start, end) not in by_span:
            by_span[(start, end)] = Candidate(Span(sentence_index, start, end - 1), path,
                                              Source.NP_NODE)

    for path, node in sentence.iter_nodes():
        if not node.is_leaf:
            continue
        pos, form = node.leaf_token
        if pos in PRONOUN_POS:
            pass
        elif pos == "DT" and form.lower() in DEMONSTRATIVES:
            parent = sentence.node_at(path[:-1]) if path else None
            if parent is not None and parent.category == "NP":
                continue
        else:
            continue
        start, end = sentence.node_spans[path]
        if (start, end) not in by_span:
            by_span[(start, end)] = Candidate(Span(sentence_index, start, start), path,
                                              Source.PRONOUN_RULE)
    return _ordered(by_span.values())


def assign_gold_labels(cands: Iterable[Candidate], gold, *, pronouns_positive: bool = False,
                       exclude: Iterable[Span] = ()) -> list[Candidate]:
    """Label each candidate by exact span match against ``gold``.

    ``pronouns_positive`` marks every rule-extracted pronoun positive
    regardless of annotation.  Spans in ``exclude`` (e.g. non-referring
    markables) never become positives.
    """
    gold = set(gold) - set(exclude)
    out = []
    for c in cands:
        label = c.span in gold
        if pronouns_positive and c.source is Source.PRONOUN_RULE:
            label = True
        out.append(replace(c, label=label))
    return out


def uncovered_gold(cands: Iterable[Candidate], gold) -> set[Span]:
    """Gold spans that no candidate reproduces exactly."""
    return set(gold) - {c.span for c in cands}


def post_process_nonnp(sentence: ParsedSentence, cands: list[Candidate],
                       sentence_index: int = 0) -> list[Candidate]:
    """Recover proper-name premodifiers such as ``[Hong Kong] government``.

    Adds the maximal NNP/NNPS run that starts an NP and stops short of its
    end, unless an NP node or another candidate already covers that span.
    """
    taken = {(c.span.sentence_index, c.span.start, c.span.end) for c in cands}
    np_spans = {sentence.node_spans[p] for p, n in sentence.iter_nodes()
                if not n.is_leaf and n.category == "NP"}
    pos = sentence.pos_tags
    added = []
    for path, node in sentence.iter_nodes():
        if node.is_leaf or node.category != "NP":
            continue
        start, end = sentence.node_spans[path]
        stop = start
        while stop < end and pos[stop] in PROPER_NOUN_POS:
            stop += 1
        if stop == start or stop == end:
            continue
        if (start, stop) in np_spans:
            continue
        key = (sentence_index, start, stop - 1)
        if key in taken:
            continue
        taken.add(key)
        added.append(Candidate(Span(*key), path, Source.POST_PROCESS))
    return _ordered(list(cands) + added)


def sentence_candidates(sentence: ParsedSentence, sentence_index: int = 0,
                        post_process: bool = True) -> list[Candidate]:
    cands = extract_candidates(sentence, sentence_index)
    if post_process:
        cands = post_process_nonnp(sentence, cands, sentence_index)
    return cands
