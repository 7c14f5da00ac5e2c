"""Statistical fingerprints of the energy transient.

Four features per signal: skewness, variance, spectral entropy, kurtosis.
Moments are population (1/N) moments of the transient slice; entropy is the
Shannon entropy in bits of the slice renormalized to sum 1.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from uavrf.signals import SampledSignal
from uavrf.transient import DegenerateTransient, EnergyTransient, StftConfig, TooShort
from uavrf import transient as _transient

SIGMA_FLOOR = 1e-12

FEATURE_NAMES = ("skewness", "variance", "entropy", "kurtosis")


@dataclass(frozen=True)
class FeatureVector:
    skewness: float
    variance: float
    entropy: float  # bits
    kurtosis: float

    def as_array(self) -> np.ndarray:
        return np.array([self.skewness, self.variance, self.entropy, self.kurtosis])


def features_from_slice(values: np.ndarray) -> FeatureVector:
    """Compute all four fingerprints from a transient slice."""
    x = np.asarray(values, dtype=np.float64)
    n = x.size
    if n < 4:
        raise TooShort(f"transient slice needs >= 4 bins, got {n}")
    mu = x.mean()
    centered = x - mu
    variance = float(np.mean(centered**2))
    sigma = np.sqrt(variance)
    if sigma < SIGMA_FLOOR:
        raise DegenerateTransient("sigma below floor; skewness/kurtosis undefined")
    skewness = float(np.mean(centered**3) / sigma**3)
    kurtosis = float(np.mean(centered**4) / sigma**4)

    mass = x.sum()
    if mass <= 0:
        raise DegenerateTransient("non-positive slice mass; entropy undefined")
    q = x / mass
    nonzero = q > 0
    entropy = float(-np.sum(q[nonzero] * np.log2(q[nonzero])))
    return FeatureVector(
        skewness=skewness, variance=variance, entropy=entropy, kurtosis=kurtosis
    )


def extract_features(t: EnergyTransient) -> FeatureVector:
    return features_from_slice(t.slice)


@dataclass
class BatchResult:
    """Feature matrix with labels and per-frame extraction failures."""

    features: np.ndarray  # (n_ok, 4) ordered (skewness, variance, entropy, kurtosis)
    labels: np.ndarray  # (n_ok,) controller id, 0 for noise
    failures: list  # (frame_index, exception) pairs, never silently dropped


def batch_extract(
    frames: Sequence[SampledSignal],
    cfg: StftConfig = StftConfig(),
    statistic: str = "mean",
) -> BatchResult:
    """Transient extraction + fingerprints for every frame in a dataset."""
    rows, labels, failures = [], [], []
    for i, frame in enumerate(frames):
        try:
            fv = extract_features(_transient.extract_transient(frame, cfg, statistic))
        except (DegenerateTransient, TooShort, _transient.AllZero) as exc:
            failures.append((i, exc))
            continue
        rows.append(fv.as_array())
        label = frame.label
        labels.append(label.controller_id if label and label.kind == "uav" else 0)
    features = np.array(rows) if rows else np.empty((0, 4))
    return BatchResult(
        features=features, labels=np.array(labels, dtype=int), failures=failures
    )


def save_features_csv(result: BatchResult, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["class_id", *FEATURE_NAMES])
        for label, row in zip(result.labels, result.features):
            writer.writerow([int(label), *[repr(float(v)) for v in row]])


def load_features_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """(features, labels) from a CSV written by save_features_csv."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[1:] != list(FEATURE_NAMES):
            raise ValueError(f"unexpected feature CSV header: {header}")
        labels, rows = [], []
        for record in reader:
            labels.append(int(record[0]))
            rows.append([float(v) for v in record[1:]])
    return np.array(rows), np.array(labels, dtype=int)
