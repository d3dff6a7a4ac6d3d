"""Joining treebank and CoNLL coreference data into labeled candidate corpora."""
from __future__ import annotations

import hashlib
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

from .candidates import Candidate, assign_gold_labels, sentence_candidates, uncovered_gold
from .conll import Document, read_conll
from .exceptions import AlignmentError, ManifestError
from .treebank import ParsedSentence, parse_tree, read_trees, serialize_tree

log = logging.getLogger(__name__)

SPLITS = ("train", "dev", "test")

_ESCAPES = {"-LRB-": "(", "-RRB-": ")", "-LCB-": "{", "-RCB-": "}", "-LSB-": "[", "-RSB-": "]"}


@dataclass
class SplitManifest:
    name: str
    train_ids: list[str] = field(default_factory=list)
    test_ids: list[str] = field(default_factory=list)
    dev_ids: list[str] = field(default_factory=list)

    def __post_init__(self):
        seen = {}
        for split in SPLITS:
            for doc_id in self.ids(split):
                if doc_id in seen:
                    raise ManifestError("document %r listed in %s and %s"
                                        % (doc_id, seen[doc_id], split))
                seen[doc_id] = split

    def ids(self, split: str) -> list[str]:
        return getattr(self, split + "_ids")

    def split_of(self, doc_id: str) -> str | None:
        for split in SPLITS:
            if doc_id in self.ids(split):
                return split
        return None

    @property
    def all_ids(self) -> list[str]:
        return self.train_ids + self.dev_ids + self.test_ids

    def to_text(self) -> str:
        out = []
        for split in ("train", "dev", "test"):
            ids = self.ids(split)
            if ids or split != "dev":
                out.append("[%s]" % split)
                out.extend(ids)
        return "\n".join(out) + "\n"


def parse_manifest(text: str, name: str = "manifest") -> SplitManifest:
    lists = {s: [] for s in SPLITS}
    current = None
    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current not in lists:
                raise ManifestError("unknown section [%s] at line %d" % (current, line_no))
            continue
        if current is None:
            raise ManifestError("document id before any section header at line %d" % line_no)
        lists[current].append(line)
    return SplitManifest(name, lists["train"], lists["test"], lists["dev"])


def read_manifest(path) -> SplitManifest:
    path = Path(path)
    return parse_manifest(path.read_text(encoding="utf-8"), path.stem)


def write_manifest(manifest: SplitManifest, path) -> None:
    Path(path).write_text(manifest.to_text(), encoding="utf-8")


@dataclass
class CorpusDocument:
    document: Document
    sentences: list[ParsedSentence]
    candidates: list[list[Candidate]]
    uncovered: int = 0

    @property
    def key(self):
        return self.document.key

    @property
    def all_candidates(self) -> list[Candidate]:
        return [c for cands in self.candidates for c in cands]


@dataclass
class Corpus:
    splits: dict[str, list[CorpusDocument]]

    def __getitem__(self, split):
        return self.splits.get(split, [])

    def __len__(self):
        return sum(len(v) for v in self.splits.values())

    def content_hash(self) -> str:
        h = hashlib.sha256()
        for split in SPLITS:
            for doc in self[split]:
                h.update(("%s\t%s\t%d\n" % (split, doc.document.doc_id, doc.document.part)).encode())
                for s in doc.sentences:
                    h.update(serialize_tree(s).encode() + b"\n")
                for c in doc.all_candidates:
                    h.update(("%r\t%s\t%r\n" % (c.span, c.source.value, c.label)).encode())
                for chain in doc.document.gold_chains:
                    h.update(repr(chain).encode())
        return h.hexdigest()


def _norm(form: str) -> str:
    return _ESCAPES.get(form, form)


def align(doc: Document, trees: list[ParsedSentence]) -> None:
    """Raise ``AlignmentError`` at the first token where trees and CoNLL differ."""
    if len(trees) != len(doc.sentences):
        raise AlignmentError("document %s part %d: %d trees but %d CoNLL sentences"
                             % (doc.doc_id, doc.part, len(trees), len(doc.sentences)))
    for si, (tree, rows) in enumerate(zip(trees, doc.sentences)):
        forms = tree.forms
        for ti in range(max(len(forms), len(rows))):
            a = _norm(forms[ti]) if ti < len(forms) else None
            b = _norm(rows[ti].form) if ti < len(rows) else None
            if a != b:
                raise AlignmentError("document %s part %d: sentence %d diverges at token %d "
                                     "(tree %r, CoNLL %r)" % (doc.doc_id, doc.part, si, ti, a, b))


def trees_from_parse_column(doc: Document) -> list[ParsedSentence]:
    """Rebuild trees from the CoNLL parse-bit column (``(TOP(S(NP*)`` etc.)."""
    trees = []
    for si, rows in enumerate(doc.sentences):
        parts = []
        for row in rows:
            if row.parse is None or "*" not in row.parse:
                raise AlignmentError("document %s sentence %d has no parse column" % (doc.doc_id, si))
            leaf = "(%s %s)" % (row.pos, row.form.replace("(", "-LRB-").replace(")", "-RRB-"))
            parts.append(row.parse.replace("*", " " + leaf + " ", 1))
        trees.append(parse_tree(" ".join(parts)))
    return trees


def label_document(doc: Document, trees: list[ParsedSentence], post_process: bool = True,
                   pronouns_positive: bool = False) -> CorpusDocument:
    """Extract candidates sentence by sentence and label them against gold mentions."""
    gold = doc.gold_mentions
    cands = []
    for si, tree in enumerate(trees):
        sent = sentence_candidates(tree, si, post_process)
        cands.append(assign_gold_labels(sent, gold, pronouns_positive=pronouns_positive))
    missing = uncovered_gold([c for cs in cands for c in cs], gold)
    return CorpusDocument(doc, trees, cands, len(missing))


def _tree_path(tree_source, doc_id):
    if isinstance(tree_source, dict):
        return tree_source.get(doc_id)
    base = Path(tree_source)
    for ext in (".mrg", ".parse", ".tree"):
        p = base / (doc_id + ext)
        if p.exists():
            return p
    return None


def build_corpus(tree_source, conll_files, manifest: SplitManifest | None = None,
                 post_process: bool = True, pronouns_positive: bool = False) -> Corpus:
    """Load, align and label every manifest document.

    ``tree_source`` is a directory holding ``<doc_id>.mrg`` files, a dict of
    doc id to tree file, or ``None`` to read trees from the CoNLL parse
    column.  A tree file covers all parts of a document in order.  Without
    a manifest every document goes to the ``test`` split.
    """
    if isinstance(conll_files, (str, os.PathLike)):
        conll_files = [conll_files]
    docs: dict[str, list[Document]] = {}
    for path in conll_files:
        for d in read_conll(path):
            docs.setdefault(d.doc_id, []).append(d)
    if manifest is None:
        manifest = SplitManifest("all", test_ids=list(docs))
    if not manifest.all_ids:
        log.warning("manifest %s is empty; corpus will be empty", manifest.name)
    splits = {s: [] for s in SPLITS}
    for split in SPLITS:
        for doc_id in manifest.ids(split):
            if doc_id not in docs:
                raise ManifestError("document %r from manifest %s not found in CoNLL input"
                                    % (doc_id, manifest.name))
            parts = sorted(docs[doc_id], key=lambda d: d.part)
            if tree_source is None:
                per_part = [trees_from_parse_column(d) for d in parts]
            else:
                path = _tree_path(tree_source, doc_id)
                if path is None:
                    raise ManifestError("no tree file for document %r" % doc_id)
                trees = read_trees(path)
                per_part = []
                offset = 0
                for d in parts:
                    per_part.append(trees[offset:offset + len(d.sentences)])
                    offset += len(d.sentences)
                if offset != len(trees):
                    raise AlignmentError("document %s: %d trees but %d CoNLL sentences"
                                         % (doc_id, len(trees), offset))
            for d, trees in zip(parts, per_part):
                align(d, trees)
                splits[split].append(label_document(d, trees, post_process, pronouns_positive))
    return Corpus(splits)
