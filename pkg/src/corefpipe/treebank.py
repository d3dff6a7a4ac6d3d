"""Reading and writing Penn-Treebank-style bracketed constituency trees.

Labels keep their function tags and indices: ``NP-SBJ-1`` becomes category
``NP``, function tags ``["SBJ"]`` and coindex ``1``; ``NP=2`` carries a gap
index.  Empty categories (POS ``-NONE-``) stay in the tree but are not
overt tokens, so token offsets line up with CoNLL coreference spans.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator

from .exceptions import TreebankParseError

EMPTY_POS = "-NONE-"

_TOKEN_RE = re.compile(r"\(|\)|[^\s()]+")


@dataclass
class TreeNode:
    category: str
    function_tags: list[str] = field(default_factory=list)
    coindex: int | None = None
    gap_index: int | None = None
    children: list["TreeNode"] = field(default_factory=list)
    leaf_token: tuple[str, str] | None = None  # (pos, form)
    # set for the unlabeled outer bracket of .mrg files, written back as "( ...)"
    implicit_label: bool = field(default=False, compare=False)

    def __post_init__(self):
        if not self.category:
            raise ValueError("tree node category must be non-empty")
        if any(not t for t in self.function_tags):
            raise ValueError("empty function tag in %r" % self.category)
        if (self.leaf_token is None) == (not self.children):
            raise ValueError("a node has either children or a leaf token")

    @property
    def is_leaf(self) -> bool:
        return self.leaf_token is not None

    @property
    def is_empty_category(self) -> bool:
        return self.leaf_token is not None and self.leaf_token[0] == EMPTY_POS

    @property
    def label(self) -> str:
        """The label as written in bracketed form."""
        if self.leaf_token is not None:
            return self.category
        out = self.category
        for tag in self.function_tags:
            out += "-" + tag
        if self.coindex is not None:
            out += "-%d" % self.coindex
        if self.gap_index is not None:
            out += "=%d" % self.gap_index
        return out

    def leaves(self) -> Iterator["TreeNode"]:
        if self.leaf_token is not None:
            yield self
            return
        for child in self.children:
            yield from child.leaves()


def split_label(label: str) -> tuple[str, list[str], int | None, int | None]:
    """Decompose ``NP-SBJ-1`` / ``NP=2`` into (category, tags, coindex, gap).

    Bracket escapes such as ``-LRB-`` and ``-NONE-`` are returned verbatim.
    """
    if label.startswith("-") and label.endswith("-") and len(label) > 1:
        return label, [], None, None
    gap = None
    base, eq, tail = label.partition("=")
    if eq and tail.isdigit() and base:
        gap = int(tail)
    else:
        base = label
    parts = base.split("-")
    category = parts[0]
    if not category:
        return label, [], None, gap
    rest = parts[1:]
    coindex = None
    if rest and rest[-1].isdigit():
        coindex = int(rest.pop())
    if any(not p for p in rest):
        # odd labels like "NP--X": keep everything in the category
        return base, [], None, gap
    return category, rest, coindex, gap


@dataclass
class ParsedSentence:
    """A tree plus its overt tokens and per-node token intervals.

    ``node_spans`` maps a node path (tuple of child indices from the root)
    to a half-open ``(start, end)`` interval over overt tokens.  Nodes that
    only dominate empty categories get a zero-width interval.
    """

    root: TreeNode
    tokens: list[tuple[str, str]]
    node_spans: dict[tuple[int, ...], tuple[int, int]]

    @classmethod
    def from_root(cls, root: TreeNode) -> "ParsedSentence":
        tokens: list[tuple[str, str]] = []
        spans: dict[tuple[int, ...], tuple[int, int]] = {}

        def walk(node, path):
            start = len(tokens)
            if node.leaf_token is not None:
                pos, form = node.leaf_token
                if pos != EMPTY_POS:
                    tokens.append((form, pos))
            else:
                for i, child in enumerate(node.children):
                    walk(child, path + (i,))
            spans[path] = (start, len(tokens))

        walk(root, ())
        return cls(root, tokens, spans)

    def __len__(self):
        return len(self.tokens)

    def node_at(self, path: tuple[int, ...]) -> TreeNode:
        node = self.root
        for i in path:
            node = node.children[i]
        return node

    def iter_nodes(self) -> Iterator[tuple[tuple[int, ...], TreeNode]]:
        """Pre-order traversal yielding ``(path, node)``."""
        stack = [((), self.root)]
        while stack:
            path, node = stack.pop()
            yield path, node
            for i in range(len(node.children) - 1, -1, -1):
                stack.append((path + (i,), node.children[i]))

    @property
    def forms(self) -> list[str]:
        return [form for form, _ in self.tokens]

    @property
    def pos_tags(self) -> list[str]:
        return [pos for _, pos in self.tokens]


def _byte_offset(text: str, char_index: int) -> int:
    return len(text[:char_index].encode("utf-8"))


def _parse_from(text, tokens, i):
    """Parse one bracketed tree starting at token index ``i``.

    Returns ``(node, next_index)``.
    """
    n = len(tokens)
    m = tokens[i]
    if m.group() != "(":
        raise TreebankParseError("expected '('", _byte_offset(text, m.start()))
    open_at = m.start()
    i += 1
    if i >= n:
        raise TreebankParseError("unbalanced brackets: unexpected end of input",
                                 _byte_offset(text, open_at))
    label = None
    if tokens[i].group() not in "()":
        label = tokens[i].group()
        i += 1
    children = []
    word = None
    while True:
        if i >= n:
            raise TreebankParseError("unbalanced brackets: missing ')'",
                                     _byte_offset(text, open_at))
        tok = tokens[i].group()
        if tok == ")":
            i += 1
            break
        if tok == "(":
            if word is not None:
                raise TreebankParseError("word and subtree mixed in one node",
                                         _byte_offset(text, tokens[i].start()))
            child, i = _parse_from(text, tokens, i)
            children.append(child)
        else:
            if word is not None or children:
                raise TreebankParseError("unexpected token %r" % tok,
                                         _byte_offset(text, tokens[i].start()))
            word = tok
            i += 1

    if word is not None:
        if label is None:
            raise TreebankParseError("leaf without POS tag", _byte_offset(text, open_at))
        return TreeNode(category=label, leaf_token=(label, word)), i
    if not children:
        raise TreebankParseError("empty node", _byte_offset(text, open_at))
    if label is None:
        return TreeNode(category="TOP", children=children, implicit_label=True), i
    category, tags, coindex, gap = split_label(label)
    return TreeNode(category=category, function_tags=tags, coindex=coindex,
                    gap_index=gap, children=children), i


def _tokenize(text):
    return list(_TOKEN_RE.finditer(text))


def parse_trees(text: str) -> Iterator[ParsedSentence]:
    """Parse every whitespace-separated tree in ``text`` (an .mrg file body)."""
    tokens = _tokenize(text)
    i = 0
    while i < len(tokens):
        if tokens[i].group() == ")":
            raise TreebankParseError("unbalanced brackets: unexpected ')'",
                                     _byte_offset(text, tokens[i].start()))
        root, i = _parse_from(text, tokens, i)
        yield ParsedSentence.from_root(root)


def parse_tree(text: str) -> ParsedSentence:
    """Parse a single bracketed tree."""
    tokens = _tokenize(text)
    if not tokens:
        raise TreebankParseError("empty input", 0)
    root, i = _parse_from(text, tokens, 0)
    if i != len(tokens):
        raise TreebankParseError("trailing content after tree",
                                 _byte_offset(text, tokens[i].start()))
    return ParsedSentence.from_root(root)


def read_trees(path) -> list[ParsedSentence]:
    with open(path, encoding="utf-8") as f:
        return list(parse_trees(f.read()))


def serialize_node(node: TreeNode) -> str:
    if node.leaf_token is not None:
        pos, form = node.leaf_token
        return "(%s %s)" % (pos, form)
    label = "" if node.implicit_label else node.label
    return "(%s %s)" % (label, " ".join(serialize_node(c) for c in node.children))


def serialize_tree(sentence: ParsedSentence | TreeNode) -> str:
    """Canonical one-line bracketed form."""
    root = sentence.root if isinstance(sentence, ParsedSentence) else sentence
    return serialize_node(root)


def write_trees(sentences, path):
    with open(path, "w", encoding="utf-8") as f:
        for s in sentences:
            f.write(serialize_tree(s) + "\n")


def to_parse_bits(sentence: ParsedSentence) -> list[str]:
    """CoNLL parse-column cells, one per overt token (empty categories dropped)."""
    n = len(sentence.tokens)
    opens = [""] * n
    closes = [""] * n
    for path, node in sentence.iter_nodes():
        if node.is_leaf:
            continue
        start, end = sentence.node_spans[path]
        if start == end:
            continue
        opens[start] += "(" + node.label
        closes[end - 1] += ")"
    return [o + "*" + c for o, c in zip(opens, closes)]
