import numpy as np

from corefpipe.conll import format_conll, parse_conll
from corefpipe.harness import gold_markables
from corefpipe.metrics import mention_prf
from corefpipe.synthetic import make_corpus, make_document, noised_mentions


def test_corpus_is_seeded():
    assert format_conll(make_corpus(3, seed=1)) == format_conll(make_corpus(3, seed=1))
    assert format_conll(make_corpus(3, seed=1)) != format_conll(make_corpus(3, seed=2))


def test_chains_group_identical_strings():
    doc = make_document("nw/x/0", np.random.default_rng(0), n_sentences=12)
    for chain in doc.gold_chains:
        texts = {" ".join(r.form for r in doc.sentences[m.sentence_index][m.start:m.end + 1]).lower()
                 for m in chain.mentions}
        assert len(texts) == 1
    assert all(len(c.mentions) > 1 for c in make_document(
        "nw/x/1", np.random.default_rng(0), with_singletons=False).gold_chains)


def test_documents_survive_conll_round_trip():
    docs = make_corpus(4, seed=3)
    assert parse_conll(format_conll(docs)) == docs


def test_noised_mentions_have_low_precision_high_recall():
    docs = make_corpus(30, seed=4)
    score = mention_prf(noised_mentions(docs, seed=0), gold_markables(docs))
    assert score.precision < 0.5 and 0.85 < score.recall < 0.97
