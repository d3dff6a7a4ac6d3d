import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.special import expit
from sklearn.base import clone

from corefpipe.exceptions import SchemaVersionError
from corefpipe.gbt import (GBTClassifier, GbtConfig, GbtModel, RegressionTree, best_split,
                           classification_report, enumerate_splits, evaluate_classifier, log_loss,
                           predict_proba, train_gbt)


def brute_force_splits(X, g, h, lam, gamma, mch):
    """Every (feature, threshold) pair by direct partition, with its gain."""
    out = {}
    for f in range(X.shape[1]):
        values = sorted(set(X[:, f]))
        for lo, hi in zip(values, values[1:]):
            thr = (lo + hi) / 2 if (lo + hi) / 2 > lo else hi
            left = X[:, f] < thr
            GL, HL = g[left].sum(), h[left].sum()
            GR, HR = g[~left].sum(), h[~left].sum()
            if HL < mch or HR < mch:
                continue
            score = lambda G, H: G * G / (H + lam)
            out[(f, thr)] = 0.5 * (score(GL, HL) + score(GR, HR) - score(GL + GR, HL + HR)) - gamma
    return out


def test_hand_newton_step():
    X = np.ones((4, 1))
    y = np.ones(4)
    model = train_gbt(X, y, GbtConfig(learning_rate=0.1, rounds=1, lambda_l2=1.0))
    assert model.trees[0].leaf_values() == [pytest.approx(0.1, abs=1e-15)]
    assert model.margin(X)[0] == pytest.approx(0.1, abs=1e-12)
    assert predict_proba(model, X[0]) == pytest.approx(expit(0.1), abs=1e-12)
    assert float(expit(0.1)) == pytest.approx(0.52498, abs=1e-5)


def test_empty_model_predicts_base_score():
    model = GbtModel([], 0.5, 3)
    assert np.allclose(predict_proba(model, np.random.default_rng(0).random((5, 3))), 0.5)


def test_positive_tree_raises_every_probability():
    rng = np.random.default_rng(1)
    X = rng.random((50, 3))
    y = (X[:, 0] > 0.5).astype(int)
    model = train_gbt(X, y, GbtConfig(rounds=5))
    before = predict_proba(model, X)
    bump = RegressionTree()
    bump.add_leaf(0.3)
    model.trees.append(bump)
    assert (predict_proba(model, X) > before).all()


def test_separable_data_reaches_full_accuracy():
    X = np.arange(20, dtype=float)[:, None]
    y = (X[:, 0] >= 10).astype(int)
    model = train_gbt(X, y, GbtConfig(max_depth=1, rounds=30))
    assert ((predict_proba(model, X) >= 0.5) == y).all()


def test_heavy_regularization_keeps_base_score():
    rng = np.random.default_rng(2)
    X = rng.random((40, 2))
    y = rng.integers(0, 2, 40)
    model = train_gbt(X, y, GbtConfig(rounds=5, lambda_l2=1e12))
    assert np.allclose(predict_proba(model, X), 0.5, atol=1e-9)


def test_constant_labels_are_valid():
    X = np.random.default_rng(3).random((10, 2))
    model = train_gbt(X, np.zeros(10), GbtConfig(rounds=3))
    assert (predict_proba(model, X) < 0.5).all()


def test_input_errors():
    with pytest.raises(ValueError):
        train_gbt(np.array([[np.nan]]), [1])
    with pytest.raises(ValueError):
        train_gbt(np.ones((2, 1)), [0, 2])
    with pytest.raises(ValueError):
        GbtConfig(learning_rate=0)
    with pytest.raises(ValueError):
        GbtConfig(rounds=0)
    with pytest.raises(ValueError):
        GbtConfig(max_depth=0)


def test_log_loss_non_increasing_default_config():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(300, 5))
    y = (X[:, 0] + 0.5 * X[:, 1] ** 2 + rng.normal(scale=0.5, size=300) > 0.3).astype(int)
    history = []
    train_gbt(X, y, GbtConfig(rounds=60), loss_history=history)
    assert len(history) == 61
    assert all(b <= a + 1e-12 for a, b in zip(history, history[1:]))


def test_splits_match_brute_force():
    rng = np.random.default_rng(5)
    for _ in range(20):
        n, d = int(rng.integers(2, 60)), int(rng.integers(1, 5))
        X = rng.integers(0, 6, size=(n, d)).astype(float)
        p = rng.random(n)
        y = rng.integers(0, 2, n)
        g, h = p - y, p * (1 - p)
        feats, thr, gains = enumerate_splits(X, g, h, 1.0, 0.0, 0.0)
        ours = {}
        for f, t, v in zip(feats, thr, gains):
            ours[(int(f), float(t))] = v
        ref = brute_force_splits(X, g, h, 1.0, 0.0, 0.0)
        assert ours.keys() == ref.keys()
        for k in ref:
            assert ours[k] == pytest.approx(ref[k], abs=1e-12)


def test_split_tie_break_prefers_lowest_feature_then_threshold():
    X = np.array([[0, 0], [0, 0], [1, 1], [1, 1]], dtype=float)
    g = np.array([-1.0, -1.0, 1.0, 1.0])
    h = np.ones(4)
    f, thr, _ = best_split(X, g, h, 1.0, 0.0, 0.0)
    assert (f, thr) == (0, 0.5)


def test_serialization_round_trip(tmp_path):
    rng = np.random.default_rng(6)
    X = rng.random((80, 4))
    y = (X[:, 1] > X[:, 2]).astype(int)
    model = train_gbt(X, y, GbtConfig(rounds=10), schema_fingerprint="abc123")
    model.save(tmp_path / "m.txt")
    again = GbtModel.load(tmp_path / "m.txt")
    assert again.to_text() == model.to_text()
    assert np.array_equal(again.margin(X), model.margin(X))
    assert train_gbt(X, y, GbtConfig(rounds=10), "abc123").to_text() == model.to_text()


def test_fingerprint_and_width_checks():
    model = GbtModel([], 0.5, 3, "abc")
    with pytest.raises(SchemaVersionError):
        predict_proba(model, np.zeros(3), schema_fingerprint="xyz")
    with pytest.raises(SchemaVersionError):
        predict_proba(model, np.zeros((2, 4)))
    with pytest.raises(SchemaVersionError):
        GbtModel.from_text("something else\n")


def test_evaluation_report():
    report = classification_report([1, 1, 1, 0], [1, 1, 1, 1])
    assert report["1"].precision == 0.75 and report["1"].recall == 1.0
    assert report["0"].support == 1 and report["Micro Avg"].support == 4
    perfect = classification_report([0, 1, 1], [0, 1, 1])
    assert all(r.f1 == 1.0 for r in perfect.rows)
    empty = evaluate_classifier(GbtModel([], 0.5, 2), np.zeros((0, 2)), [])
    assert all(r.support == 0 for r in empty.rows)
    assert "Micro Avg" in report.format()


def test_estimator_api():
    rng = np.random.default_rng(7)
    X = rng.random((60, 3))
    y = (X[:, 0] > 0.4).astype(int)
    clf = GBTClassifier(rounds=15, max_depth=2)
    assert clone(clf).get_params()["rounds"] == 15
    clf.fit(X, y)
    proba = clf.predict_proba(X)
    assert proba.shape == (60, 2) and np.allclose(proba.sum(axis=1), 1)
    assert (clf.predict(X) == y).mean() > 0.9
    assert clf.score(X, y) > 0.9
    assert len(clf.loss_history_) == 16


@given(arrays(np.float64, st.tuples(st.integers(2, 25), st.integers(1, 3)),
              elements=st.sampled_from([0.0, 0.5, 1.0, 2.0, -1.0])),
       st.data())
def test_property_split_gains(X, data):
    n = len(X)
    y = np.array(data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n)))
    p = np.array(data.draw(st.lists(st.floats(0.05, 0.95), min_size=n, max_size=n)))
    g, h = p - y, p * (1 - p)
    feats, thr, gains = enumerate_splits(X, g, h, 1.0, 0.1, 0.0)
    ref = brute_force_splits(X, g, h, 1.0, 0.1, 0.0)
    assert len(gains) == len(ref)
    for f, t, v in zip(feats, thr, gains):
        assert v == pytest.approx(ref[(int(f), float(t))], abs=1e-12)


@given(st.integers(0, 2 ** 16))
def test_training_is_deterministic(seed):
    rng = np.random.default_rng(seed)
    X = rng.random((30, 2))
    y = rng.integers(0, 2, 30)
    cfg = GbtConfig(rounds=3, max_depth=2)
    assert train_gbt(X, y, cfg).to_text() == train_gbt(X, y, cfg).to_text()
