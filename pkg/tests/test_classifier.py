import numpy as np
import pytest
from sklearn.metrics import precision_recall_fscore_support

from peep.classifier import EvalReport, MlpClassifier, evaluate
from peep.exceptions import DimensionMismatch, SingleClass


def finite_difference_grads(clf, X, y_idx, coefs, intercepts, step=1e-5):
    """Oracle: central finite differences of the batch loss per parameter."""
    grads = []
    for p in coefs + intercepts:
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        while not it.finished:
            ix = it.multi_index
            orig = p[ix]
            p[ix] = orig + step
            lp, _, _ = clf._loss_and_grads(X, y_idx, coefs, intercepts)
            p[ix] = orig - step
            lm, _, _ = clf._loss_and_grads(X, y_idx, coefs, intercepts)
            p[ix] = orig
            g[ix] = (lp - lm) / (2 * step)
            it.iternext()
        grads.append(g)
    return grads


def init_params(rng, dims):
    coefs = [rng.standard_normal((a, b)) * 0.5 for a, b in zip(dims[:-1], dims[1:])]
    intercepts = [rng.standard_normal(b) * 0.5 for b in dims[1:]]
    return coefs, intercepts


def two_clusters(n=200, sep=5.0, seed=0):
    # linearly separable 2-D blobs, unit-ish spread, centers sep apart
    rng = np.random.default_rng(seed)
    half = n // 2
    a = rng.standard_normal((half, 2)) + [0.0, 0.0]
    b = rng.standard_normal((n - half, 2)) + [sep, sep]
    X = np.vstack([a, b])
    y = np.array([0] * half + [1] * (n - half))
    return X, y


class TestGradients:
    def test_analytic_matches_finite_differences(self):
        clf = MlpClassifier(hidden_layer_sizes=(8, 8), alpha=1e-4)
        rng = np.random.default_rng(0)
        for trial in range(5):
            dims = [4, 8, 8, 3]
            coefs, intercepts = init_params(rng, dims)
            X = rng.standard_normal((6, 4))
            y_idx = rng.integers(0, 3, size=6)
            _, gW, gb = clf._loss_and_grads(X, y_idx, coefs, intercepts)
            numeric = finite_difference_grads(clf, X, y_idx, coefs, intercepts)
            for a, nmr in zip(gW + gb, numeric):
                rel = np.abs(a - nmr) / np.maximum.reduce(
                    [np.abs(a), np.abs(nmr), np.full_like(a, 1.0)]
                )
                assert rel.max() <= 1e-4, f"trial {trial}: rel {rel.max():.2e}"


class TestTraining:
    def test_single_class_rejected(self):
        with pytest.raises(SingleClass):
            MlpClassifier().fit(np.zeros((4, 2)), np.zeros(4, dtype=int))

    def test_separable_clusters_learned_fast(self):
        X, y = two_clusters()
        clf = MlpClassifier(
            hidden_layer_sizes=(32,), max_epochs=50, batch_size=32, random_state=1
        ).fit(X, y)
        acc = (clf.predict(X) == y).mean()
        assert acc >= 0.99
        assert clf.n_epochs_ <= 50

    def test_loss_history_length_matches_epochs(self):
        X, y = two_clusters(n=60)
        clf = MlpClassifier(hidden_layer_sizes=(8,), max_epochs=7, tol=0.0).fit(X, y)
        assert len(clf.loss_curve_) == clf.n_epochs_ <= 7

    def test_plateau_rule_stops_training(self):
        X, y = two_clusters(n=60, sep=50.0)
        clf = MlpClassifier(
            hidden_layer_sizes=(8,), max_epochs=200, tol=0.5, n_iter_no_change=10
        ).fit(X, y)
        assert clf.n_epochs_ < 200

    def test_bit_exact_determinism(self):
        X, y = two_clusters(n=80, seed=3)
        kw = dict(hidden_layer_sizes=(12, 6), max_epochs=12, random_state=9)
        m1 = MlpClassifier(**kw).fit(X.copy(), y.copy())
        m2 = MlpClassifier(**kw).fit(X.copy(), y.copy())
        for a, b in zip(m1.coefs_ + m1.intercepts_, m2.coefs_ + m2.intercepts_):
            np.testing.assert_array_equal(a, b)

    def test_full_batch_convex_surrogate_monotone(self):
        # no hidden layer = softmax regression: full-batch loss must fall
        # strictly for the first 20 steps at the default step size
        X, y = two_clusters(n=100, sep=2.0, seed=5)
        clf = MlpClassifier(
            hidden_layer_sizes=(),
            batch_size=100,
            max_epochs=20,
            shuffle=False,
            tol=0.0,
            random_state=2,
        ).fit(X, y)
        diffs = np.diff(clf.loss_curve_)
        assert (diffs < 0).all()

    def test_early_stopping_uses_validation(self):
        X, y = two_clusters(n=120, sep=8.0, seed=6)
        clf = MlpClassifier(
            hidden_layer_sizes=(8,),
            max_epochs=100,
            early_stopping=True,
            validation_fraction=0.2,
            n_iter_no_change=5,
            random_state=3,
        ).fit(X, y)
        assert clf.n_epochs_ < 100


class TestPredict:
    def test_zero_weights_give_uniform_and_lowest_class(self):
        X, y = two_clusters(n=40)
        clf = MlpClassifier(hidden_layer_sizes=(5,), max_epochs=2).fit(X, y)
        for W in clf.coefs_:
            W[:] = 0.0
        for b in clf.intercepts_:
            b[:] = 0.0
        probs = clf.predict_proba([[1.0, 2.0]])
        np.testing.assert_allclose(probs, 0.5, atol=1e-15)
        assert clf.predict([[1.0, 2.0]])[0] == clf.classes_[0] == 0

    def test_probabilities_sum_to_one(self):
        X, y = two_clusters(n=50, seed=7)
        clf = MlpClassifier(hidden_layer_sizes=(6,), max_epochs=5).fit(X, y)
        rng = np.random.default_rng(8)
        probs = clf.predict_proba(rng.standard_normal((20, 2)) * 10)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)
        assert probs.min() >= 0.0 and probs.max() <= 1.0

    def test_held_out_cluster_point(self):
        X, y = two_clusters(n=200, seed=9)
        clf = MlpClassifier(hidden_layer_sizes=(16,), max_epochs=50, random_state=4)
        clf.fit(X, y)
        assert clf.predict([[5.0, 5.2]])[0] == 1
        assert clf.predict([[-0.2, 0.1]])[0] == 0

    def test_dimension_mismatch(self):
        X, y = two_clusters(n=30)
        clf = MlpClassifier(hidden_layer_sizes=(4,), max_epochs=2).fit(X, y)
        with pytest.raises(DimensionMismatch):
            clf.predict(np.zeros((2, 5)))


class _Stub:
    def __init__(self, classes, preds):
        self.classes_ = np.asarray(classes)
        self._preds = np.asarray(preds)

    def predict(self, X):
        return self._preds


class TestEvaluate:
    def test_perfect_predictions(self):
        stub = _Stub([0, 1], [0, 0, 1, 1])
        rep = evaluate(stub, np.zeros((4, 1)), [0, 0, 1, 1])
        assert rep.accuracy == 1.0
        assert rep.weighted_f1 == 1.0

    def test_hand_computed_collapse_case(self):
        # all predictions class 0 on truth {0,0,1,1}: accuracy .5,
        # class-0 P=.5 R=1 F1=2/3, class-1 zeros, weighted F1 = 1/3
        stub = _Stub([0, 1], [0, 0, 0, 0])
        rep = evaluate(stub, np.zeros((4, 1)), [0, 0, 1, 1])
        assert rep.accuracy == 0.5
        assert rep.precision[0] == 0.5 and rep.recall[0] == 1.0
        assert rep.precision[1] == 0.0 and rep.recall[1] == 0.0
        assert rep.weighted_f1 == pytest.approx(1 / 3)

    def test_confusion_rows_are_supports(self):
        rng = np.random.default_rng(10)
        y = rng.integers(0, 3, 40)
        preds = rng.integers(0, 3, 40)
        rep = evaluate(_Stub([0, 1, 2], preds), np.zeros((40, 1)), y)
        np.testing.assert_array_equal(rep.confusion.sum(axis=1), rep.support)
        np.testing.assert_array_equal(rep.support, np.bincount(y, minlength=3))

    def test_matches_sklearn_metrics(self):
        rng = np.random.default_rng(11)
        y = rng.integers(0, 4, 200)
        preds = rng.integers(0, 4, 200)
        rep = evaluate(_Stub([0, 1, 2, 3], preds), np.zeros((200, 1)), y)
        p, r, f, _ = precision_recall_fscore_support(
            y, preds, labels=[0, 1, 2, 3], average="weighted", zero_division=0
        )
        assert rep.weighted_precision == pytest.approx(p)
        assert rep.weighted_recall == pytest.approx(r)
        assert rep.weighted_f1 == pytest.approx(f)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(12)
        X, y = two_clusters(n=100, seed=13)
        clf = MlpClassifier(hidden_layer_sizes=(8,), max_epochs=10).fit(X, y)
        rep1 = evaluate(clf, X, y)
        perm = rng.permutation(len(y))
        rep2 = evaluate(clf, X[perm], y[perm])
        assert rep1.weighted_f1 == rep2.weighted_f1
        np.testing.assert_array_equal(rep1.confusion, rep2.confusion)

    def test_report_type(self):
        stub = _Stub([0, 1], [0, 1])
        assert isinstance(evaluate(stub, np.zeros((2, 1)), [0, 1]), EvalReport)
