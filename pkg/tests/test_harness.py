import numpy as np
import pytest
from hypothesis import given, strategies as st

from corefpipe.conll import Span
from corefpipe.harness import (CURVE_COLUMNS, PerturbSpec, apportion, augment_union,
                               curve_to_csv, curve_trend, diagnose_errors, gold_markables,
                               perturb_precision, perturb_recall, sweep_curve)
from corefpipe.linker import LinkerConfig, link_document, train_linker
from corefpipe.synthetic import make_corpus, noised_mentions
from corefpipe.treebank import parse_tree
from corefpipe.conll import Document, TokenRow


def _spans(lo, hi):
    return {Span(0, i, i) for i in range(lo, hi)}


def _big_sets():
    """Per-document counts summing to TP 18,321 and 48,419 predicted spans."""
    tps = [6000, 5000, 4000, 3321]
    fps = [10000, 9000, 7098, 4000]
    missed = [300, 200, 200, 135]
    pred, gold = {}, {}
    for i, (tp, fp, miss) in enumerate(zip(tps, fps, missed)):
        k = ("doc%d" % i, 0)
        gold[k] = _spans(0, tp + miss)
        pred[k] = _spans(miss, tp + miss + fp)
    return pred, gold


def _count(pred, gold):
    tp = sum(len(pred[k] & gold[k]) for k in gold)
    return tp, sum(len(v) for v in pred.values())


def test_precision_perturbation_counts():
    pred, gold = _big_sets()
    assert _count(pred, gold) == (18321, 48419)
    out = perturb_precision(pred, gold, 50, seed=1)
    tp, n = _count(out, gold)
    assert tp == 18321 and n == 36642
    assert all(out[k] <= pred[k] for k in pred)


def test_recall_perturbation_counts():
    pred, gold = _big_sets()
    out = perturb_recall(pred, gold, 100, seed=1)
    assert _count(out, gold)[1] - _count(pred, gold)[1] == 835
    assert all(gold[k] <= out[k] for k in gold)


def test_target_100_precision_is_intersection():
    pred, gold = _big_sets()
    out = perturb_precision(pred, gold, 100, seed=3)
    assert out == {k: pred[k] & gold[k] for k in pred}


def test_perturbation_is_deterministic():
    pred, gold = _big_sets()
    assert perturb_precision(pred, gold, 60, 7) == perturb_precision(pred, gold, 60, 7)
    assert perturb_precision(pred, gold, 60, 7) != perturb_precision(pred, gold, 60, 8)
    assert perturb_recall(pred, gold, 98, 7) == perturb_recall(pred, gold, 98, 7)


def test_targets_below_current_rejected():
    pred, gold = _big_sets()
    with pytest.raises(ValueError):
        perturb_precision(pred, gold, 30)
    with pytest.raises(ValueError):
        perturb_recall(pred, gold, 90)
    with pytest.raises(ValueError):
        perturb_precision(pred, gold, 0)


@given(st.lists(st.tuples(st.integers(0, 30), st.integers(0, 30), st.integers(0, 30)),
                min_size=1, max_size=5),
       st.floats(0, 1), st.integers(0, 1000))
def test_perturbation_properties(docs, frac, seed):
    pred, gold = {}, {}
    for i, (tp, fp, miss) in enumerate(docs):
        k = ("d%d" % i, 0)
        gold[k] = _spans(0, tp + miss)
        pred[k] = _spans(miss, tp + miss + fp)
    tp, n = _count(pred, gold)
    n_gold = sum(len(v) for v in gold.values())
    if n and tp:
        cur = 100 * tp / n
        target = cur + frac * (100 - cur)
        out = perturb_precision(pred, gold, target, seed)
        assert all(out[k] <= pred[k] and (pred[k] & gold[k]) <= out[k] for k in pred)
        assert _count(out, gold)[1] == tp + min(n - tp, int(np.floor(tp * (100 - target) / target + 0.5)))
    if n_gold:
        cur = 100 * tp / n_gold
        target = cur + frac * (100 - cur)
        out = perturb_recall(pred, gold, target, seed)
        assert all(pred[k] <= out[k] <= pred[k] | gold[k] for k in pred)
        assert _count(out, gold)[0] == max(tp, int(np.floor(target / 100 * n_gold + 0.5)))


def test_apportion():
    assert apportion(10, [10, 10, 20]) == [3, 2, 5]
    assert apportion(0, [3, 4]) == [0, 0]
    assert apportion(3, [0, 5]) == [0, 3]
    assert apportion(1, [1, 1]) == [1, 0]
    with pytest.raises(ValueError):
        apportion(5, [1, 1])


def test_augment_union():
    g = {("a", 0): {Span(0, 0, 0)}, ("b", 0): set()}
    p = {("a", 0): {Span(0, 1, 1)}, ("b", 0): {Span(1, 0, 0)}}
    assert augment_union(g, p) == {("a", 0): {Span(0, 0, 0), Span(0, 1, 1)},
                                   ("b", 0): {Span(1, 0, 0)}}
    with pytest.raises(KeyError):
        augment_union(g, {("a", 0): set()})


@pytest.fixture(scope="module")
def sweep_setup():
    train = make_corpus(40, seed=3)
    test = make_corpus(20, seed=4)
    model = train_linker([link_document(d, d.gold_mentions) for d in train])
    return test, noised_mentions(test, seed=2), model


def test_sweep_points_and_csv(sweep_setup):
    docs, mentions, model = sweep_setup
    spec = PerturbSpec("precision", (45.0, 60.0, 80.0, 100.0))
    points = sweep_curve(docs, mentions, model, spec)
    assert [p.target for p in points] == [45.0, 60.0, 80.0, 100.0]
    assert all(abs(p.axis_value - p.target) < 0.5 for p in points)
    assert points[-1].report.avg_f1 > points[0].report.avg_f1
    assert curve_trend(points) > 0
    text = curve_to_csv(points)
    lines = text.splitlines()
    assert lines[0] == ",".join(CURVE_COLUMNS) and len(lines) == 5
    assert sweep_curve(docs, mentions, model, spec)[1].mentions == points[1].mentions


def test_recall_sweep_with_retraining(sweep_setup):
    docs, mentions, model = sweep_setup
    points = sweep_curve(docs, mentions, model, PerturbSpec("recall", (97.0, 100.0)),
                         retrain=LinkerConfig(epochs=30))
    assert points[1].mention_r == pytest.approx(1.0)


def test_sweep_rejects_unreachable_target(sweep_setup):
    docs, mentions, model = sweep_setup
    with pytest.raises(ValueError):
        sweep_curve(docs, mentions, model, PerturbSpec("precision", (10.0,)))
    with pytest.raises(ValueError):
        PerturbSpec("recall", (100.0, 90.0))


def test_gold_markables_drop_singletons():
    (doc,) = make_corpus(1, seed=1)
    with_single = gold_markables([doc], drop_singletons=False)[doc.key]
    without = gold_markables([doc])[doc.key]
    assert without <= with_single == set(doc.gold_mentions)


def _doc_from_tree(text):
    tree = parse_tree(text)
    rows = tuple(TokenRow(f, p, "-", None, ("d", "0", str(i), f, p)) for i, (f, p)
                 in enumerate(tree.tokens))
    return Document("d", 0, (rows,), ())


def test_diagnose_nested_missing_and_punctuation():
    doc = _doc_from_tree("(TOP (S (NP (NNP Hong) (NNP Kong) (NN government)) (VP (VBD said) "
                         "(NP (CD one))) (. .)))")
    key = doc.key
    gold = {key: {Span(0, 0, 1), Span(0, 0, 2), Span(0, 2, 3)}}
    pred = {key: {Span(0, 0, 2), Span(0, 4, 5)}}
    report = diagnose_errors(pred, gold, {key: doc})
    assert report.recall["nested-missing"] == [(key, Span(0, 0, 1))]
    assert report.recall["boundary"] == [(key, Span(0, 2, 3))]
    assert report.precision["trailing-punctuation"] == [(key, Span(0, 4, 5))]
    assert report.counts()["recall/other"] == 0
    assert "nested-missing" in report.format()
    clean = diagnose_errors(gold, gold, {key: doc})
    assert sum(clean.counts().values()) == 0
