import re

import pytest
from hypothesis import given, strategies as st

from corefpipe.conll import (Chain, Document, Span, TokenRow, format_conll, format_document,
                             parse_conll, read_conll, write_conll)
from corefpipe.exceptions import ConllFormatError, IntegrityError


def _doc(cells, doc_id="bc/cctv/00/cctv_0001", part=0):
    lines = ["#begin document (%s); part %03d" % (doc_id, part)]
    for i, cell in enumerate(cells):
        if cell is None:
            lines.append("")
            continue
        lines.append("\t".join([doc_id, str(part), str(i), "w%d" % i, "NN", "*", "-", "-", "-",
                                "Speaker#1", "*", cell]))
    lines += ["", "#end document", ""]
    return "\n".join(lines)


def test_single_bracket_pair():
    (doc,) = parse_conll(_doc(["(5", "-", "5)"]))
    assert doc.gold_chains == (Chain(5, (Span(0, 0, 2),)),)


def test_nested_brackets_match_most_recent_open():
    (doc,) = parse_conll(_doc(["(2|(7", "7)", "2)"]))
    chains = {c.chain_id: c.mentions for c in doc.gold_chains}
    assert chains == {7: (Span(0, 0, 1),), 2: (Span(0, 0, 2),)}


def test_same_chain_nested():
    (doc,) = parse_conll(_doc(["(3|(3", "3)", "3)"]))
    assert doc.gold_chains[0].mentions == (Span(0, 0, 1), Span(0, 0, 2))


def test_single_token_items():
    (doc,) = parse_conll(_doc(["(1)|(4", "(1)", "4)"]))
    chains = {c.chain_id: c.mentions for c in doc.gold_chains}
    assert chains[1] == (Span(0, 0, 0), Span(0, 1, 1))
    assert chains[4] == (Span(0, 0, 2),)


def test_metadata():
    (doc,) = parse_conll(_doc(["-", None, "-"]))
    assert doc.genre == "bc"
    assert doc.key == ("bc/cctv/00/cctv_0001", 0)
    assert [len(s) for s in doc.sentences] == [1, 1]
    assert doc.sentences[0][0].speaker == "Speaker#1"
    assert doc.sentences[0][0].pos == "NN"


def test_unmatched_open_names_document_and_line():
    with pytest.raises(ConllFormatError, match=r"unmatched.*bc/cctv/00/cctv_0001.*line 3"):
        parse_conll(_doc(["-", "(9", "-"]))


def test_close_without_open():
    with pytest.raises(ConllFormatError, match="without opening"):
        parse_conll(_doc(["-", "9)"]))


def test_mention_cannot_cross_sentences():
    with pytest.raises(ConllFormatError, match="crosses"):
        parse_conll(_doc(["(1", None, "1)"]))


def test_unterminated_document():
    with pytest.raises(ConllFormatError):
        parse_conll(_doc(["-"]).replace("#end document", ""))


def test_configurable_coref_column():
    text = "#begin document (x); part 000\nx 0 0 a NN (0) extra\nx 0 1 b NN - extra\n#end document\n"
    (doc,) = parse_conll(text, coref_column=5)
    assert doc.gold_chains == (Chain(0, (Span(0, 0, 0),)),)


def _two_chain_doc():
    (doc,) = parse_conll(_doc(["(1", "1)", "(2)", "-", "(1)"]))
    return doc


def test_drop_singletons_flag():
    doc = _two_chain_doc()
    kept = format_document(doc, drop_singletons=True)
    assert "(2)" not in kept and "(1" in kept
    assert "(2)" in format_document(doc, drop_singletons=False)


def test_empty_chain_list_writes_dashes():
    doc = _two_chain_doc().with_chains([])
    rows = [l for l in format_document(doc).splitlines() if l and not l.startswith("#")]
    assert all(r.endswith("\t-") for r in rows)


def test_span_in_two_chains_is_integrity_error():
    doc = _two_chain_doc().with_chains([[Span(0, 0, 1)], [Span(0, 0, 1), Span(0, 4, 4)]])
    with pytest.raises(IntegrityError):
        format_document(doc)


def test_span_outside_document_is_integrity_error():
    doc = _two_chain_doc().with_chains([[Span(0, 3, 9)]])
    with pytest.raises(IntegrityError):
        format_document(doc)


def test_fixture_round_trip_is_byte_exact(fixtures, tmp_path):
    for name in ("wsj_0001.conll", "synthetic.conll"):
        text = (fixtures / name).read_text()
        docs = read_conll(fixtures / name)
        assert format_conll(docs) == text
        write_conll(docs, tmp_path / name)
        assert read_conll(tmp_path / name) == docs


def test_bracket_pairs_equal_mention_count(fixtures):
    text = (fixtures / "wsj_0001.conll").read_text()
    opens = len(re.findall(r"\(\d+", "\n".join(l.split("\t")[-1] for l in text.splitlines()
                                              if l and not l.startswith("#"))))
    assert sum(len(c) for d in read_conll(fixtures / "wsj_0001.conll") for c in d.gold_chains) == opens


def _crossing(a, b):
    return a.overlaps(b) and not a.contains(b) and not b.contains(a)


@st.composite
def documents(draw):
    lengths = draw(st.lists(st.integers(1, 6), min_size=1, max_size=4))
    sentences = tuple(tuple(TokenRow("w", "NN", columns=("d", "0", str(i), "w", "NN"))
                            for i in range(n)) for n in lengths)
    all_spans = [Span(s, a, b) for s, n in enumerate(lengths) for a in range(n) for b in range(a, n)]
    chosen = draw(st.lists(st.sampled_from(all_spans), unique=True, max_size=8))
    ids = draw(st.lists(st.integers(0, 3), min_size=len(chosen), max_size=len(chosen)))
    groups = {}
    for span, k in zip(chosen, ids):
        # crossing brackets of one chain id are ambiguous in the format itself
        if not any(_crossing(span, o) for o in groups.get(k, [])):
            groups.setdefault(k, []).append(span)
    chains = tuple(Chain(k, tuple(sorted(v))) for k, v in sorted(groups.items()))
    return Document("d", 0, sentences, chains)


@given(documents())
def test_read_write_read_property(doc):
    once = parse_conll(format_conll([doc]))
    assert once == [doc]
    assert parse_conll(format_conll(once)) == once
