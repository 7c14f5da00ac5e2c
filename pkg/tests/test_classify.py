"""kNN, discriminant analysis, and linear SVM classifiers."""

import csv

import numpy as np
import pytest

from uavrf.classify import (
    ArityMismatch,
    Empty,
    SingletonClass,
    TooFewSamples,
    _cv_folds,
    classifier_from_json,
    classifier_to_json,
    confusion_matrix,
    confusion_to_csv,
    predict,
    predict_batch,
    select_hyperparams,
    train,
)


def blobs(rng, n_per=50, shift=5.0):
    y = np.repeat([1, 2], n_per)
    X = rng.normal(size=(2 * n_per, 2))
    X[y == 1] -= shift
    X[y == 2] += shift
    return X, y


def brute_force_knn(train_x, train_y, query, k):
    """Exhaustive sort with the same tie rules, written independently."""
    d = [(float(np.linalg.norm(query - tx)), i) for i, tx in enumerate(train_x)]
    d.sort()  # distance, then original index
    neighbors = [train_y[i] for _, i in d[:k]]
    counts = {}
    for label in neighbors:
        counts[label] = counts.get(label, 0) + 1
    top = max(counts.values())
    winners = [label for label, c in counts.items() if c == top]
    if len(winners) == 1:
        return winners[0]
    return train_y[d[0][1]]


class TestTrain:
    def test_da_separable_blobs_perfect(self):
        X, y = blobs(np.random.default_rng(0))
        clf = train("da", X, y, hyperparams={"ridge": 1e-6})
        assert np.mean(predict_batch(clf, X) == y) == 1.0

    def test_svm_separable_zero_training_error(self):
        X, y = blobs(np.random.default_rng(1))
        clf = train("svm", X, y, hyperparams={"lam": 1e-2, "epochs": 500})
        assert np.mean(predict_batch(clf, X) == y) == 1.0

    def test_knn_k1_recovers_training_labels(self):
        X, y = blobs(np.random.default_rng(2), n_per=20)
        clf = train("knn", X, y, hyperparams={"k": 1})
        assert np.all(predict_batch(clf, X) == y)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            train("forest", np.ones((4, 2)), np.array([1, 1, 2, 2]))

    def test_single_class_rejected(self):
        with pytest.raises(TooFewSamples):
            train("knn", np.ones((4, 2)), np.ones(4, dtype=int))

    def test_da_singleton_class_rejected(self):
        X = np.random.default_rng(3).normal(size=(5, 2))
        y = np.array([1, 1, 1, 1, 2])
        with pytest.raises(SingletonClass):
            train("da", X, y, hyperparams={"ridge": 1e-4})

    def test_knn_needs_k_plus_one_samples(self):
        X = np.random.default_rng(4).normal(size=(4, 2))
        y = np.array([1, 1, 2, 2])
        with pytest.raises(TooFewSamples):
            train("knn", X, y, hyperparams={"k": 7})

    def test_feature_indices_metadata(self):
        X, y = blobs(np.random.default_rng(5), n_per=10)
        clf = train("knn", X, y, feature_indices=[1, 3],
                    hyperparams={"k": 1})
        np.testing.assert_array_equal(clf.feature_indices, [1, 3])


class TestPredict:
    def test_training_point_k1(self):
        X, y = blobs(np.random.default_rng(6), n_per=10)
        clf = train("knn", X, y, hyperparams={"k": 1})
        assert predict(clf, X[3]) == y[3]

    def test_arity_mismatch(self):
        X, y = blobs(np.random.default_rng(7), n_per=10)
        clf = train("knn", X, y, hyperparams={"k": 1})
        with pytest.raises(ArityMismatch):
            predict(clf, np.ones(3))

    def test_da_equal_means_tie_lowest_class(self):
        rng = np.random.default_rng(8)
        X = np.concatenate([rng.normal(size=(20, 2)), rng.normal(size=(20, 2))])
        y = np.repeat([3, 7], 20)
        clf = train("da", X, y, hyperparams={"ridge": 1e-4})
        # force exactly equal class means: identical discriminants, argmax
        # must fall back to the lowest class id
        clf.params["means"] = np.zeros_like(clf.params["means"])
        assert predict(clf, np.array([0.1, -0.2])) == 3

    def test_knn_tie_broken_by_nearest(self):
        X = np.array([[0.0, 1.0], [0.0, -1.0], [0.0, 2.0], [0.0, -2.0]])
        y = np.array([1, 2, 1, 2])
        clf = train("knn", X, y, hyperparams={"k": 2})
        # query at origin: the two nearest have different labels and equal
        # distance; the stable sort puts index 0 (label 1) first
        assert predict(clf, np.array([0.0, 0.0])) == brute_force_knn(
            (X - clf.mean) / clf.scale, y,
            (np.array([0.0, 0.0]) - clf.mean) / clf.scale, 2,
        )

    @pytest.mark.parametrize("k", [1, 3, 5])
    def test_knn_matches_brute_force(self, k):
        rng = np.random.default_rng(9)
        X = rng.integers(0, 4, size=(40, 3)).astype(float)  # many exact ties
        y = rng.integers(1, 4, size=40)
        clf = train("knn", X, y, hyperparams={"k": k})
        Xs = (X - clf.mean) / clf.scale
        queries = rng.integers(0, 4, size=(300, 3)).astype(float)
        got = predict_batch(clf, queries)
        for q, g in zip(queries, got):
            assert g == brute_force_knn(Xs, y, (q - clf.mean) / clf.scale, k)

    def test_rescaling_invariance(self):
        rng = np.random.default_rng(10)
        X, y = blobs(rng, n_per=15, shift=2.0)
        queries = rng.normal(size=(20, 2))
        for kind, hp in [("knn", {"k": 3}), ("da", {"ridge": 1e-4}),
                         ("svm", {"lam": 1e-2, "epochs": 200})]:
            a = 37.5
            p1 = predict_batch(train(kind, X, y, hyperparams=hp), queries)
            p2 = predict_batch(train(kind, a * X, y, hyperparams=hp), a * queries)
            if kind == "knn":  # standardization cancels the scale exactly
                np.testing.assert_array_equal(p1, p2)
            else:
                assert np.mean(p1 == p2) == 1.0


class TestHyperparams:
    def test_selected_from_grid(self):
        X, y = blobs(np.random.default_rng(11), n_per=20)
        assert select_hyperparams("knn", X, y)["k"] in (1, 3, 5, 7)
        assert select_hyperparams("da", X, y)["ridge"] in (1e-6, 1e-4, 1e-2)
        assert select_hyperparams("svm", X, y)["lam"] in (1e-1, 1e-2, 1e-3)

    def test_deterministic(self):
        X, y = blobs(np.random.default_rng(12), n_per=20)
        assert select_hyperparams("knn", X, y) == select_hyperparams("knn", X, y)

    def test_cv_folds_partition(self):
        folds = list(_cv_folds(23, 5))
        assert len(folds) == 5
        all_test = np.concatenate([t for _, t in folds])
        assert sorted(all_test) == list(range(23))
        for tr, te in folds:
            assert np.intersect1d(tr, te).size == 0
            assert np.union1d(tr, te).size == 23


class TestConfusionMatrix:
    def test_perfect_classifier_diagonal(self):
        X, y = blobs(np.random.default_rng(13))
        clf = train("knn", X, y, hyperparams={"k": 1})
        result = confusion_matrix(clf, X, y)
        assert result.accuracy == 1.0
        assert np.all(result.matrix == np.diag(np.diag(result.matrix)))
        np.testing.assert_array_equal(result.per_class_accuracy, [1.0, 1.0])

    def test_sums(self):
        rng = np.random.default_rng(14)
        X, y = blobs(rng, n_per=30, shift=0.1)  # heavily overlapping
        clf = train("knn", X, y, hyperparams={"k": 3})
        X_test = rng.normal(size=(40, 2))
        y_test = rng.integers(1, 3, size=40)
        result = confusion_matrix(clf, X_test, y_test)
        assert result.matrix.sum() == 40
        for i, c in enumerate(result.classes):
            assert result.matrix[:, i].sum() == np.sum(y_test == c)

    def test_empty_test_set(self):
        X, y = blobs(np.random.default_rng(15), n_per=5)
        clf = train("knn", X, y, hyperparams={"k": 1})
        with pytest.raises(Empty):
            confusion_matrix(clf, np.empty((0, 2)), np.array([], dtype=int))

    def test_csv_layout(self, tmp_path):
        X, y = blobs(np.random.default_rng(16), n_per=10)
        clf = train("knn", X, y, hyperparams={"k": 1})
        result = confusion_matrix(clf, X, y)
        path = tmp_path / "confusion.csv"
        confusion_to_csv(result, path)
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["predicted\\target", "1", "2"]
        assert rows[-1][0] == "target_accuracy"
        assert len(rows) == 1 + 2 + 1


class TestSerialization:
    @pytest.mark.parametrize("kind,hp", [
        ("knn", {"k": 3}),
        ("da", {"ridge": 1e-4}),
        ("svm", {"lam": 1e-2, "epochs": 200}),
    ])
    def test_json_round_trip_preserves_predictions(self, kind, hp):
        rng = np.random.default_rng(17)
        X, y = blobs(rng, n_per=15)
        clf = train(kind, X, y, feature_indices=[0, 1], hyperparams=hp)
        restored = classifier_from_json(classifier_to_json(clf))
        queries = rng.normal(size=(25, 2)) * 3
        np.testing.assert_array_equal(
            predict_batch(clf, queries), predict_batch(restored, queries)
        )
        np.testing.assert_array_equal(restored.feature_indices, [0, 1])
        assert restored.hyperparams == clf.hyperparams
