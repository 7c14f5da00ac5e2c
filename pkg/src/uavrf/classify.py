"""Multi-class classifiers over the selected fingerprints: kNN, DA, SVM.

All three standardize features internally with training-set statistics.
kNN votes over Euclidean neighbors; DA is a Gaussian discriminant with a
pooled ridge-regularized covariance; the SVM is a deterministic one-vs-one
linear machine trained by full-batch subgradient descent on the hinge loss.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

KINDS = ("knn", "da", "svm")

DEFAULT_KNN_GRID = (1, 3, 5, 7)
DEFAULT_RIDGE_GRID = (1e-6, 1e-4, 1e-2)


class TooFewSamples(ValueError):
    pass


class SingletonClass(ValueError):
    """A class with a single sample cannot contribute to a pooled covariance."""


class ArityMismatch(ValueError):
    pass


class Empty(ValueError):
    pass


@dataclass
class TrainedClassifier:
    kind: str
    classes: np.ndarray
    mean: np.ndarray  # per-feature standardization offset
    scale: np.ndarray  # per-feature standardization scale
    feature_indices: Optional[np.ndarray] = None  # columns of the original matrix
    params: dict = field(default_factory=dict)
    hyperparams: dict = field(default_factory=dict)

    def _prepare(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.mean.size:
            raise ArityMismatch(
                f"expected {self.mean.size} features, got {X.shape[1]}"
            )
        return (X - self.mean) / self.scale


def _standardization(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    return mean, scale


def _fit_da(Xs: np.ndarray, y: np.ndarray, classes: np.ndarray, ridge: float) -> dict:
    n, p = Xs.shape
    means = np.stack([Xs[y == c].mean(axis=0) for c in classes])
    scatter = np.zeros((p, p))
    for c, mu in zip(classes, means):
        if np.sum(y == c) < 2:
            raise SingletonClass(f"class {c} has fewer than 2 samples")
        diff = Xs[y == c] - mu
        scatter += diff.T @ diff
    cov = scatter / (n - classes.size) + ridge * np.eye(p)
    inv = np.linalg.inv(cov)
    return {"means": means, "cov_inv": inv, "ridge": ridge}


def _fit_svm_pair(
    Xs: np.ndarray, sign: np.ndarray, lam: float, epochs: int
) -> tuple[np.ndarray, float]:
    """Full-batch Pegasos-style subgradient descent; deterministic."""
    n, p = Xs.shape
    w = np.zeros(p)
    b = 0.0
    for t in range(1, epochs + 1):
        eta = 1.0 / (lam * (t + 1))
        margins = sign * (Xs @ w + b)
        viol = margins < 1.0
        grad_w = lam * w - (sign[viol, None] * Xs[viol]).sum(axis=0) / n
        grad_b = -sign[viol].sum() / n
        w = w - eta * grad_w
        b = b - eta * grad_b
    return w, b


def _fit_svm(Xs, y, classes, lam: float, epochs: int) -> dict:
    pairs = []
    for ia in range(classes.size):
        for ib in range(ia + 1, classes.size):
            a, b_cls = classes[ia], classes[ib]
            mask = (y == a) | (y == b_cls)
            sign = np.where(y[mask] == a, 1.0, -1.0)
            w, b = _fit_svm_pair(Xs[mask], sign, lam, epochs)
            pairs.append({"a": int(a), "b": int(b_cls), "w": w, "bias": b})
    return {"pairs": pairs, "lam": lam, "epochs": epochs}


def _cv_folds(n: int, k: int = 5):
    """Deterministic interleaved folds."""
    idx = np.arange(n)
    for fold in range(k):
        test = idx[fold::k]
        train = np.setdiff1d(idx, test)
        if test.size and train.size:
            yield train, test


def _cv_score(kind: str, X: np.ndarray, y: np.ndarray, hyperparams: dict) -> float:
    scores = []
    for train_idx, test_idx in _cv_folds(X.shape[0]):
        if np.unique(y[train_idx]).size < 2:
            continue
        try:
            clf = train(kind, X[train_idx], y[train_idx], hyperparams=hyperparams)
        except (SingletonClass, TooFewSamples):
            continue
        scores.append(np.mean(predict_batch(clf, X[test_idx]) == y[test_idx]))
    return float(np.mean(scores)) if scores else -1.0


def select_hyperparams(kind: str, X: np.ndarray, y: np.ndarray) -> dict:
    """Small deterministic grid search by 5-fold cross-validation."""
    if kind == "knn":
        grid = [{"k": k} for k in DEFAULT_KNN_GRID if k + 1 <= X.shape[0]]
    elif kind == "da":
        grid = [{"ridge": r} for r in DEFAULT_RIDGE_GRID]
    elif kind == "svm":
        grid = [{"lam": lam, "epochs": 300} for lam in (1e-1, 1e-2, 1e-3)]
    else:
        raise ValueError(f"unknown classifier kind {kind!r}")
    best, best_score = grid[0], -np.inf
    for hp in grid:
        score = _cv_score(kind, X, y, hp)
        if score > best_score:
            best, best_score = hp, score
    return best


def train(
    kind: str,
    X: np.ndarray,
    y: np.ndarray,
    feature_indices: Optional[Sequence[int]] = None,
    hyperparams: Optional[dict] = None,
) -> TrainedClassifier:
    """Fit one classifier; ``hyperparams=None`` runs the built-in CV search.

    ``feature_indices`` records which columns of the upstream feature matrix
    ``X`` was sliced from; it is metadata, not applied here.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown classifier kind {kind!r}")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=int)
    classes = np.unique(y)
    if classes.size < 2:
        raise TooFewSamples("need at least 2 classes")
    if hyperparams is None:
        hyperparams = select_hyperparams(kind, X, y)

    mean, scale = _standardization(X)
    Xs = (X - mean) / scale
    if kind == "knn":
        k = int(hyperparams.get("k", 3))
        if X.shape[0] < k + 1:
            raise TooFewSamples(f"kNN with k={k} needs at least {k + 1} samples")
        params = {"train_x": Xs, "train_y": y, "k": k}
    elif kind == "da":
        params = _fit_da(Xs, y, classes, float(hyperparams.get("ridge", 1e-4)))
    else:
        params = _fit_svm(
            Xs,
            y,
            classes,
            float(hyperparams.get("lam", 1e-2)),
            int(hyperparams.get("epochs", 300)),
        )
    return TrainedClassifier(
        kind=kind,
        classes=classes,
        mean=mean,
        scale=scale,
        feature_indices=None if feature_indices is None else np.asarray(feature_indices),
        params=params,
        hyperparams=dict(hyperparams),
    )


def _predict_knn(clf: TrainedClassifier, Xs: np.ndarray) -> np.ndarray:
    train_x = clf.params["train_x"]
    train_y = clf.params["train_y"]
    k = clf.params["k"]
    out = np.empty(Xs.shape[0], dtype=int)
    dist = np.sqrt(((Xs[:, None, :] - train_x[None, :, :]) ** 2).sum(axis=2))
    order = np.argsort(dist, axis=1, kind="stable")
    for i in range(Xs.shape[0]):
        neighbors = train_y[order[i, :k]]
        values, votes = np.unique(neighbors, return_counts=True)
        winners = values[votes == votes.max()]
        if winners.size == 1:
            out[i] = winners[0]
        else:
            out[i] = train_y[order[i, 0]]  # tie: single nearest neighbor decides
    return out


def _predict_da(clf: TrainedClassifier, Xs: np.ndarray) -> np.ndarray:
    means = clf.params["means"]
    inv = clf.params["cov_inv"]
    # affine discriminant per class: x' Sigma^-1 mu - mu' Sigma^-1 mu / 2
    lin = Xs @ inv @ means.T
    offset = 0.5 * np.einsum("cp,pq,cq->c", means, inv, means)
    scores = lin - offset[None, :]
    return clf.classes[np.argmax(scores, axis=1)]  # argmax ties -> lowest class id


def _predict_svm(clf: TrainedClassifier, Xs: np.ndarray) -> np.ndarray:
    classes = clf.classes
    index = {int(c): i for i, c in enumerate(classes)}
    votes = np.zeros((Xs.shape[0], classes.size))
    margins = np.zeros((Xs.shape[0], classes.size))
    for pair in clf.params["pairs"]:
        m = Xs @ pair["w"] + pair["bias"]
        ia, ib = index[pair["a"]], index[pair["b"]]
        toward_a = m >= 0
        votes[toward_a, ia] += 1
        votes[~toward_a, ib] += 1
        margins[:, ia] += m
        margins[:, ib] -= m
    out = np.empty(Xs.shape[0], dtype=int)
    for i in range(Xs.shape[0]):
        top = np.flatnonzero(votes[i] == votes[i].max())
        if top.size == 1:
            out[i] = classes[top[0]]
        else:
            out[i] = classes[top[np.argmax(margins[i, top])]]
    return out


_PREDICTORS = {"knn": _predict_knn, "da": _predict_da, "svm": _predict_svm}


def predict_batch(clf: TrainedClassifier, X: np.ndarray) -> np.ndarray:
    return _PREDICTORS[clf.kind](clf, clf._prepare(X))


def predict(clf: TrainedClassifier, x: np.ndarray) -> int:
    """Class id for a single feature row."""
    return int(predict_batch(clf, np.atleast_2d(x))[0])


@dataclass
class ConfusionResult:
    matrix: np.ndarray  # rows = predicted, columns = target
    classes: np.ndarray
    per_class_accuracy: np.ndarray  # per target class
    accuracy: float


def confusion_matrix(
    clf: TrainedClassifier, X_test: np.ndarray, y_test: np.ndarray
) -> ConfusionResult:
    y_test = np.asarray(y_test, dtype=int)
    if y_test.size == 0:
        raise Empty("empty test set")
    classes = np.unique(np.concatenate([clf.classes, y_test]))
    index = {int(c): i for i, c in enumerate(classes)}
    pred = predict_batch(clf, X_test)
    matrix = np.zeros((classes.size, classes.size), dtype=int)
    for p, t in zip(pred, y_test):
        matrix[index[int(p)], index[int(t)]] += 1
    col_sums = matrix.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        per_class = np.where(col_sums > 0, np.diag(matrix) / col_sums, 0.0)
    return ConfusionResult(
        matrix=matrix,
        classes=classes,
        per_class_accuracy=per_class,
        accuracy=float(np.trace(matrix) / matrix.sum()),
    )


def confusion_to_csv(result: ConfusionResult, path: str | Path) -> None:
    """Table layout: one row per predicted class, one column per target."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["predicted\\target", *[int(c) for c in result.classes]])
        for c, row in zip(result.classes, result.matrix):
            writer.writerow([int(c), *[int(v) for v in row]])
        writer.writerow(
            ["target_accuracy", *[repr(float(a)) for a in result.per_class_accuracy]]
        )


def classifier_to_json(clf: TrainedClassifier) -> str:
    params = {}
    for key, value in clf.params.items():
        if key == "pairs":
            params[key] = [
                {"a": p["a"], "b": p["b"], "w": p["w"].tolist(), "bias": p["bias"]}
                for p in value
            ]
        elif isinstance(value, np.ndarray):
            params[key] = value.tolist()
        else:
            params[key] = value
    return json.dumps(
        {
            "format_version": 1,
            "kind": clf.kind,
            "classes": clf.classes.tolist(),
            "mean": clf.mean.tolist(),
            "scale": clf.scale.tolist(),
            "feature_indices": None
            if clf.feature_indices is None
            else clf.feature_indices.tolist(),
            "params": params,
            "hyperparams": clf.hyperparams,
        },
        indent=2,
    )


def classifier_from_json(text: str) -> TrainedClassifier:
    doc = json.loads(text)
    params = {}
    for key, value in doc["params"].items():
        if key == "pairs":
            params[key] = [
                {"a": p["a"], "b": p["b"], "w": np.array(p["w"]), "bias": p["bias"]}
                for p in value
            ]
        elif key in ("train_x", "means", "cov_inv"):
            params[key] = np.array(value)
        elif key == "train_y":
            params[key] = np.array(value, dtype=int)
        else:
            params[key] = value
    return TrainedClassifier(
        kind=doc["kind"],
        classes=np.array(doc["classes"], dtype=int),
        mean=np.array(doc["mean"]),
        scale=np.array(doc["scale"]),
        feature_indices=None
        if doc["feature_indices"] is None
        else np.array(doc["feature_indices"], dtype=int),
        params=params,
        hyperparams=doc["hyperparams"],
    )
