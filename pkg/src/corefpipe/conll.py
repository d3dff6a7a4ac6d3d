"""CoNLL-2012 coreference files: documents, token rows and chain brackets."""
from __future__ import annotations

import io
import re
from dataclasses import dataclass, field, replace
from typing import Iterable

from .exceptions import ConllFormatError, IntegrityError

_BEGIN_RE = re.compile(r"^#begin document \((.*)\);\s*part\s+(\d+)\s*$")
_END = "#end document"
_ITEM_RE = re.compile(r"^(\()?(\d+)(\))?$")


@dataclass(frozen=True, order=True)
class Span:
    """Token span inside one sentence; ``end`` is inclusive."""

    sentence_index: int
    start: int
    end: int

    def __post_init__(self):
        if not 0 <= self.start <= self.end:
            raise ValueError("invalid span %r" % (self,))

    def __len__(self):
        return self.end - self.start + 1

    def contains(self, other: "Span") -> bool:
        return (self.sentence_index == other.sentence_index
                and self.start <= other.start and other.end <= self.end)

    def overlaps(self, other: "Span") -> bool:
        return (self.sentence_index == other.sentence_index
                and self.start <= other.end and other.start <= self.end)


@dataclass(frozen=True)
class Chain:
    chain_id: int
    mentions: tuple[Span, ...]

    def __len__(self):
        return len(self.mentions)


@dataclass(frozen=True)
class TokenRow:
    form: str
    pos: str = "-"
    speaker: str = ""
    parse: str | None = None
    columns: tuple[str, ...] = ()  # every column except coreference, as read


@dataclass(frozen=True)
class Document:
    doc_id: str
    part: int
    sentences: tuple[tuple[TokenRow, ...], ...]
    gold_chains: tuple[Chain, ...] = ()

    @property
    def key(self) -> tuple[str, int]:
        return (self.doc_id, self.part)

    @property
    def genre(self) -> str:
        return self.doc_id.split("/", 1)[0]

    @property
    def gold_mentions(self) -> frozenset[Span]:
        return frozenset(m for c in self.gold_chains for m in c.mentions)

    def forms(self, sentence_index: int) -> list[str]:
        return [t.form for t in self.sentences[sentence_index]]

    def span_forms(self, span: Span) -> list[str]:
        return [t.form for t in self.sentences[span.sentence_index][span.start:span.end + 1]]

    def with_chains(self, chains) -> "Document":
        """Copy of this document carrying ``chains`` (lists of spans or Chain objects)."""
        out = []
        for i, c in enumerate(chains):
            if isinstance(c, Chain):
                out.append(c)
            else:
                out.append(Chain(i, tuple(sorted(c))))
        return replace(self, gold_chains=tuple(out))


def _row_from_columns(cols, coref_column):
    n = len(cols)
    ci = coref_column if coref_column >= 0 else n + coref_column
    rest = tuple(c for j, c in enumerate(cols) if j != ci)
    form = cols[3] if n > 3 else cols[0]
    pos = cols[4] if n > 5 else "-"
    parse = cols[5] if n > 6 else None
    speaker = cols[9] if n > 10 else ""
    return TokenRow(form=form, pos=pos, speaker=speaker, parse=parse, columns=rest), cols[ci]


class _DocBuilder:
    def __init__(self, doc_id, part, line_no):
        self.doc_id = doc_id
        self.part = part
        self.line_no = line_no
        self.sentences = []
        self.current = []
        self.open = {}  # chain id -> stack of (sentence, token, line)
        self.chains = {}

    def add_row(self, row, coref, line_no):
        s, t = len(self.sentences), len(self.current)
        self.current.append(row)
        if coref in ("-", "_", ""):
            return
        for item in coref.split("|"):
            m = _ITEM_RE.match(item)
            if not m or not (m.group(1) or m.group(3)):
                raise ConllFormatError("bad coreference item %r in document %s, line %d"
                                       % (item, self.doc_id, line_no))
            k = int(m.group(2))
            if m.group(1) and m.group(3):
                self.chains.setdefault(k, []).append(Span(s, t, t))
            elif m.group(1):
                self.open.setdefault(k, []).append((s, t, line_no))
            else:
                stack = self.open.get(k)
                if not stack:
                    raise ConllFormatError("closing bracket %r without opening in document %s, line %d"
                                           % (item, self.doc_id, line_no))
                s0, t0, open_line = stack.pop()
                if s0 != s:
                    raise ConllFormatError("mention of chain %d crosses a sentence boundary in document %s, line %d"
                                           % (k, self.doc_id, open_line))
                self.chains.setdefault(k, []).append(Span(s, t0, t))

    def end_sentence(self):
        if self.current:
            self.sentences.append(tuple(self.current))
            self.current = []

    def build(self):
        self.end_sentence()
        for k, stack in self.open.items():
            if stack:
                raise ConllFormatError("unmatched bracket '(%d' in document %s, line %d"
                                       % (k, self.doc_id, stack[-1][2]))
        chains = tuple(Chain(k, tuple(sorted(spans))) for k, spans in sorted(self.chains.items()))
        return Document(self.doc_id, self.part, tuple(self.sentences), chains)


def parse_conll(text: str, coref_column: int = -1) -> list[Document]:
    docs = []
    builder = None
    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("#begin document"):
            if builder is not None:
                raise ConllFormatError("nested '#begin document' at line %d" % line_no)
            m = _BEGIN_RE.match(line)
            if not m:
                raise ConllFormatError("malformed document header at line %d: %r" % (line_no, raw))
            builder = _DocBuilder(m.group(1), int(m.group(2)), line_no)
        elif line.startswith(_END):
            if builder is None:
                raise ConllFormatError("'#end document' without begin at line %d" % line_no)
            docs.append(builder.build())
            builder = None
        elif not line:
            if builder is not None:
                builder.end_sentence()
        elif line.startswith("#"):
            continue
        else:
            if builder is None:
                raise ConllFormatError("token row outside a document at line %d" % line_no)
            row, coref = _row_from_columns(line.split(), coref_column)
            builder.add_row(row, coref, line_no)
    if builder is not None:
        raise ConllFormatError("document %s not terminated by '#end document'" % builder.doc_id)
    return docs


def read_conll(path, coref_column: int = -1) -> list[Document]:
    with open(path, encoding="utf-8") as f:
        return parse_conll(f.read(), coref_column)


def _coref_cells(doc: Document, chains, drop_singletons: bool):
    cells = [[{"close": [], "open": [], "single": []} for _ in sent] for sent in doc.sentences]
    seen = {}
    for chain in chains:
        if drop_singletons and len(chain.mentions) == 1:
            continue
        for span in chain.mentions:
            if span in seen and seen[span] != chain.chain_id:
                raise IntegrityError("span %r appears in chains %d and %d of document %s"
                                     % (span, seen[span], chain.chain_id, doc.doc_id))
            seen[span] = chain.chain_id
            try:
                sent = cells[span.sentence_index]
                sent[span.end]
            except IndexError:
                raise IntegrityError("span %r outside document %s" % (span, doc.doc_id)) from None
            k = chain.chain_id
            if span.start == span.end:
                sent[span.start]["single"].append(k)
            else:
                sent[span.start]["open"].append((-span.end, k))
                sent[span.end]["close"].append((-span.start, k))
    out = []
    for sent in cells:
        row = []
        for c in sent:
            # closes before opens so that "k)" never pairs with a "(k" in the same cell
            items = ["%d)" % k for _, k in sorted(c["close"])]
            items += ["(%d" % k for _, k in sorted(c["open"])]
            items += ["(%d)" % k for k in sorted(c["single"])]
            row.append("|".join(items) if items else "-")
        out.append(row)
    return out


def format_document(doc: Document, chains=None, drop_singletons: bool = False) -> str:
    chains = doc.gold_chains if chains is None else chains
    cells = _coref_cells(doc, chains, drop_singletons)
    buf = io.StringIO()
    buf.write("#begin document (%s); part %03d\n" % (doc.doc_id, doc.part))
    for sent, sent_cells in zip(doc.sentences, cells):
        for t, (row, cell) in enumerate(zip(sent, sent_cells)):
            cols = list(row.columns) or [doc.doc_id, str(doc.part), str(t), row.form, row.pos]
            buf.write("\t".join(cols + [cell]) + "\n")
        buf.write("\n")
    buf.write(_END + "\n")
    return buf.getvalue()


def format_conll(docs: Iterable[Document], drop_singletons: bool = False) -> str:
    return "".join(format_document(d, drop_singletons=drop_singletons) for d in docs)


def write_conll(docs: Iterable[Document], path, drop_singletons: bool = False) -> None:
    """Write documents with their attached chains.

    With ``drop_singletons`` chains of one mention are left out, which is the
    OntoNotes scoring convention.  Two partly overlapping mentions of the
    same chain cannot be written unambiguously and will not read back as
    written.
    """
    text = format_conll(docs, drop_singletons)
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)


def chains_as_spans(doc: Document, drop_singletons: bool = False) -> list[list[Span]]:
    return [list(c.mentions) for c in doc.gold_chains
            if not (drop_singletons and len(c.mentions) == 1)]
