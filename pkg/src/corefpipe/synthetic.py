"""Small synthetic corpora with trees and coreference chains.

Real evaluation data (OntoNotes, ARRAU, OntoGUM) is licensed and not
shipped.  These generators build documents where gold coreference holds
exactly between mentions with the same surface string, which gives the
linker a known target.  Temporal and predicative NPs, generic "you" and
expletive "it" are never gold mentions, which gives the classifier one.
"""
from __future__ import annotations

import numpy as np

from .conll import Chain, Document, Span, TokenRow
from .treebank import parse_tree, to_parse_bits

PEOPLE = ["Alice Smith", "Bob Jones", "Carol White", "Dan Brown", "Eve Black", "Mona Lisa",
          "Frank Green", "Grace Hall", "Henry Ford", "Ivy Lane"]
THINGS = ["lion", "fox", "bridge", "committee", "report", "river", "company", "museum",
          "teacher", "painting"]
ADJECTIVES = ["old", "new", "small", "famous"]
CITIES = ["Hong Kong", "New York", "San Diego", "Los Angeles"]
VERBS = ["saw", "met", "praised", "visited", "called", "found"]


def _entity_tree(entity):
    kind, words = entity
    if kind == "name":
        return "(NP %s)" % " ".join("(NNP %s)" % w for w in words.split())
    if kind == "adj":
        adj, noun = words.split()
        return "(NP (DT the) (JJ %s) (NN %s))" % (adj, noun)
    return "(NP (DT the) (NN %s))" % words


def _with_tag(tree, tag):
    return tree.replace("(NP ", "(NP-%s " % tag, 1)


def _sentence(rng, pick, gold_marks):
    """One bracketed tree; ``gold_marks`` collects the entity of each slot."""
    t = int(rng.integers(0, 8))
    verb = VERBS[int(rng.integers(len(VERBS)))]
    if t == 0:
        a, b = pick(), pick()
        gold_marks.extend([a, b])
        return "(TOP (S %s (VP (VBD %s) %s) (. .)))" % (_with_tag(_entity_tree(a), "SBJ"), verb,
                                                       _entity_tree(b))
    if t == 1:
        a, b, c = pick(), pick(), pick()
        gold_marks.extend([a, b, c])
        return "(TOP (S %s (VP (VBD %s) %s (PP-LOC (IN in) %s)) (. .)))" % (
            _with_tag(_entity_tree(a), "SBJ"), verb, _entity_tree(b), _entity_tree(c))
    if t == 2:
        a, b = pick(), pick()
        gold_marks.extend([a, b])
        return "(TOP (S (NP-TMP (NN today)) (, ,) %s (VP (VBD %s) %s) (. .)))" % (
            _with_tag(_entity_tree(a), "SBJ"), verb, _entity_tree(b))
    if t == 3:
        a = pick()
        gold_marks.append(a)
        return "(TOP (S %s (VP (VBZ is) (NP-PRD (DT a) (NN doctor))) (. .)))" % (
            _with_tag(_entity_tree(a), "SBJ"),)
    if t == 4:
        return "(TOP (S (NP-SBJ (PRP You)) (VP (MD can) (RB never) (VP (VB know))) (. .)))"
    if t == 5:
        return "(TOP (S (NP-SBJ (PRP It)) (VP (VBD rained) (NP-TMP (JJ last) (NN week))) (. .)))"
    if t == 6:
        city = CITIES[int(rng.integers(len(CITIES)))]
        b = pick()
        gold_marks.extend([("city", city), ("gov", city), b])
        words = " ".join("(NNP %s)" % w for w in city.split())
        return "(TOP (S (NP-SBJ %s (NN government)) (VP (VBD thanked) %s) (. .)))" % (
            words, _entity_tree(b))
    a = pick()
    gold_marks.append(a)
    return "(TOP (S %s (VP (VBD left) (PP-DIR (IN for) (NP (NNP Paris)))) (. .)))" % (
        _with_tag(_entity_tree(a), "SBJ"),)


def _entity_string(entity):
    kind, words = entity
    if kind == "name":
        return words
    if kind == "city":
        return words
    if kind == "gov":
        return words + " government"
    if kind == "adj":
        return "the " + words
    return "the " + words


def _gold_spans(tree_text, marks, sentence):
    """Locate each gold entity's span by matching NP nodes left to right."""
    spans = []
    forms = sentence.forms
    used = set()
    for ent in marks:
        target = _entity_string(ent).split()
        n = len(target)
        for start in range(len(forms) - n + 1):
            if forms[start:start + n] == target and (start, n) not in used:
                used.add((start, n))
                spans.append((start, start + n - 1, ent))
                break
    return spans


def make_document(doc_id: str, rng, n_sentences: int = 8, n_entities: int = 5,
                  with_singletons: bool = True) -> Document:
    """One document; gold chains group mentions with identical strings.

    ``Paris`` and "the ... government" phrases are gold too.  With
    ``with_singletons=False`` size-1 chains are dropped, as in OntoNotes.
    """
    pool = []
    for p in rng.choice(len(PEOPLE), size=min(n_entities, len(PEOPLE)), replace=False):
        pool.append(("name", PEOPLE[int(p)]))
    for t in rng.choice(len(THINGS), size=min(n_entities, len(THINGS)), replace=False):
        if rng.random() < 0.3:
            pool.append(("adj", "%s %s" % (ADJECTIVES[int(rng.integers(len(ADJECTIVES)))],
                                           THINGS[int(t)])))
        else:
            pool.append(("thing", THINGS[int(t)]))
    weights = rng.dirichlet(np.ones(len(pool)) * 0.7)

    def pick():
        return pool[int(rng.choice(len(pool), p=weights))]

    sentences = []
    by_string: dict[str, list[Span]] = {}
    for si in range(n_sentences):
        marks: list = []
        text = _sentence(rng, pick, marks)
        tree = parse_tree(text)
        if "(NNP Paris)" in text:
            marks.append(("name", "Paris"))
        for start, end, ent in _gold_spans(text, marks, tree):
            by_string.setdefault(_entity_string(ent).lower(), []).append(Span(si, start, end))
        bits = to_parse_bits(tree)
        rows = []
        for ti, ((form, pos), bit) in enumerate(zip(tree.tokens, bits)):
            cols = (doc_id, "0", str(ti), form, pos, bit, "-", "-", "-", "-", "*")
            rows.append(TokenRow(form=form, pos=pos, speaker="-", parse=bit, columns=cols))
        sentences.append(tuple(rows))
    chains = []
    for spans in sorted(by_string.values(), key=lambda ss: min(ss)):
        if len(spans) == 1 and not with_singletons:
            continue
        chains.append(Chain(len(chains), tuple(sorted(spans))))
    return Document(doc_id, 0, tuple(sentences), tuple(chains))


def make_corpus(n_docs: int, seed: int = 0, n_sentences: int = 8, n_entities: int = 5,
                with_singletons: bool = True, prefix: str = "nw/synth") -> list[Document]:
    rng = np.random.default_rng(seed)
    return [make_document("%s/%04d" % (prefix, i), rng, n_sentences, n_entities, with_singletons)
            for i in range(n_docs)]


def noised_mentions(docs: list[Document], recall: float = 0.94, n_false: float = 1.6,
                    seed: int = 0) -> dict:
    """A predicted mention set with controlled recall and many false positives.

    Keeps about ``recall`` of the gold markables (mentions of chains with two
    or more members) and adds ``n_false`` spurious spans per kept markable,
    drawn from short token windows that are not markables.  Repeated
    windows such as "the" or "saw" string-match each other, so a linker
    trained on clean data links them and loses precision.
    """
    rng = np.random.default_rng(seed)
    out = {}
    for d in docs:
        markables = sorted(m for c in d.gold_chains if len(c.mentions) > 1 for m in c.mentions)
        keep = [m for m in markables if rng.random() < recall]
        pool = []
        for si, sent in enumerate(d.sentences):
            for start in range(len(sent)):
                for length in (1, 2):
                    end = start + length - 1
                    if end < len(sent):
                        s = Span(si, start, end)
                        if s not in set(markables):
                            pool.append(s)
        n = min(len(pool), int(round(n_false * max(1, len(keep)))))
        idx = rng.choice(len(pool), size=n, replace=False) if n else []
        out[d.key] = set(keep) | {pool[int(i)] for i in idx}
    return out
