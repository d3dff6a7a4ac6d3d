import csv

import numpy as np
import pytest
from hypothesis import given

from corefpipe.candidates import extract_candidates, sentence_candidates
from corefpipe.conll import Span
from corefpipe.corpus import CorpusDocument
from corefpipe.exceptions import SchemaVersionError
from corefpipe.features import (SCHEMA, CandidateFeaturizer, FeatureSchema, check_schema, featurize,
                                featurize_corpus, featurize_sentence, head_index, write_matrix_csv)
from corefpipe.treebank import ParsedSentence, parse_tree

from conftest import trees


def _vec(sentence, text):
    cands = extract_candidates(sentence)
    (c,) = [c for c in cands if " ".join(sentence.forms[c.span.start:c.span.end + 1]) == text]
    v = featurize(c, sentence, cands)
    return lambda name: v[SCHEMA.index(name)]


def test_the_lion(lion_tree):
    f = _vec(lion_tree, "the lion")
    assert f("det=definite") == 1
    assert f("parent_is_pp") == 1
    assert f("parent_ftag=CLR") == 1
    assert f("prep=from") == 1
    assert f("n_containing") == 0


def test_you(lion_tree):
    f = _vec(lion_tree, "you")
    assert f("ftag=SBJ") == 1 and f("has_coindex") == 1
    assert f("first_pos=PRP") == 1 and f("head_pos=PRP") == 1
    assert f("len_bucket=1") == 1 and f("length") == 1
    assert f("is_pronoun") == 1
    assert f("role=subject") == 1


def test_isolated_candidate_is_largest_and_smallest(lion_tree):
    f = _vec(lion_tree, "it")
    assert f("is_largest") == 1 and f("is_smallest") == 1


def test_nested_stack():
    s = parse_tree("(NP (NP (NP (NNP Kim) (POS 's)) (NN dog)) (PP (IN of) (NP (NN note))))")
    cands = extract_candidates(s)
    X = featurize_sentence(s, cands)
    col = {n: X[:, SCHEMA.index(n)] for n in ("n_containing", "is_largest", "is_smallest")}
    spans = [(c.span.start, c.span.end) for c in cands]
    assert spans == [(0, 4), (0, 2), (0, 1), (4, 4)]
    assert list(col["n_containing"]) == [0, 1, 2, 1]
    assert list(col["is_largest"]) == [1, 0, 0, 0]
    assert list(col["is_smallest"]) == [0, 0, 1, 1]


def test_root_candidate_has_no_parent():
    s = parse_tree("(NP (DT a) (NN lion))")
    f = _vec(s, "a lion")
    assert f("parent_cat=<NONE>") == 1 and f("det=indefinite") == 1


def test_oov_slot():
    s = parse_tree("(ZZ (NP (XYZ blah)))")
    f = _vec(s, "blah")
    assert f("parent_cat=<OOV>") == 1 and f("first_pos=<OOV>") == 1


def test_head_index():
    assert head_index(["DT", "NN", "IN", "NNP"]) == 3
    assert head_index(["DT", "NN", "IN", "DT"]) == 1
    assert head_index(["DT", "JJ"]) == 1


def _doc(sentences):
    return CorpusDocument(None, sentences, [sentence_candidates(s, i) for i, s in enumerate(sentences)])


def test_corpus_matrix(lion_tree):
    X, y = featurize_corpus([_doc([lion_tree])])
    assert X.shape == (4, SCHEMA.total_width)
    assert (y == -1).all()
    again, _ = featurize_corpus([_doc([lion_tree])])
    assert again.tobytes() == X.tobytes()


def test_corpus_row_count(fixtures):
    from corefpipe.treebank import read_trees
    sents = read_trees(fixtures / "wsj_0001.mrg")
    docs = [_doc(sents), _doc(sents[:1])]
    X, _ = featurize_corpus(docs)
    assert len(X) == sum(len(sentence_candidates(s)) for s in sents + sents[:1])


def test_schema_manifest_round_trip(tmp_path):
    text = SCHEMA.to_text()
    assert FeatureSchema.from_text(text) == SCHEMA
    bad = text.replace("length\tcount", "length\tboolean")
    with pytest.raises(SchemaVersionError):
        FeatureSchema.from_text(bad)
    with pytest.raises(SchemaVersionError):
        check_schema("0" * 16)
    check_schema(SCHEMA.fingerprint)
    X = np.zeros((2, SCHEMA.total_width))
    write_matrix_csv(X, np.array([0, 1]), tmp_path / "m.csv")
    with open(tmp_path / "m.csv", newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == SCHEMA.names + ["label"]
    assert [r[-1] for r in rows[1:]] == ["0", "1"]


def test_transformer_api(lion_tree):
    t = CandidateFeaturizer().fit([_doc([lion_tree])])
    assert t.transform([_doc([lion_tree])]).shape == (4, SCHEMA.total_width)
    assert list(t.get_feature_names_out()) == SCHEMA.names
    assert t.get_params() == {"schema_fingerprint": None}
    with pytest.raises(SchemaVersionError):
        CandidateFeaturizer(schema_fingerprint="deadbeef").fit([])


@given(trees)
def test_feature_vectors_are_finite_and_pure(root):
    s = ParsedSentence.from_root(root)
    cands = sentence_candidates(s)
    X = featurize_sentence(s, cands)
    assert X.shape == (len(cands), SCHEMA.total_width)
    assert np.isfinite(X).all()
    booleans = [i for i, f in enumerate(SCHEMA.features) if f.kind in ("boolean", "onehot", "bucket")]
    assert np.isin(X[:, booleans], (0.0, 1.0)).all()
    assert np.array_equal(X, featurize_sentence(s, list(cands)))
    for i, a in enumerate(cands):
        for j, b in enumerate(cands):
            if a.span != b.span and a.span.contains(b.span):
                assert X[j, SCHEMA.index("n_containing")] >= X[i, SCHEMA.index("n_containing")]
