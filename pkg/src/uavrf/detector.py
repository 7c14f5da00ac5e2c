"""3-state Markov / naive-Bayes presence detector in the wavelet domain.

The wavelet signal is quantized into states S1 (above the upper threshold),
S2 (inside the band), S3 (below the lower threshold).  Each class is a 3x3
transition-probability matrix normalized jointly over all nine cells, and
the decision compares transition-count log-likelihoods under the UAV and
noise models with ties going to UAV.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from uavrf.signals import ClassLabel, SampledSignal
from uavrf.wavelet import WaveletSignal, decompose3

N_STATES = 3

S1, S2, S3 = 0, 1, 2  # above band / inside band / below band


class Empty(ValueError):
    """No data where at least one frame or transition is required."""


class TooShort(ValueError):
    pass


class ZeroProbabilityEntry(ValueError):
    """A zero-probability cell was hit by a nonzero transition count."""


@dataclass(frozen=True)
class StateThresholds:
    """Quantization band edges, in volts of the wavelet signal."""

    t1: float  # upper
    t2: float  # lower

    def __post_init__(self):
        if not self.t1 > self.t2:
            raise ValueError(f"t1 must exceed t2, got {self.t1} <= {self.t2}")


# Operating point reported for the reference capture rig (documented only;
# thresholds for synthetic corpora are estimated from noise frames).
REFERENCE_THRESHOLDS = StateThresholds(t1=0.0098, t2=-0.0098)


@dataclass
class StateSequence:
    states: np.ndarray  # int8 values in {S1, S2, S3}

    def __len__(self) -> int:
        return self.states.size


@dataclass
class TransitionCounts:
    counts: np.ndarray  # 3x3 non-negative ints

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass
class MarkovClassModel:
    """Per-class transition model with frozen quantization thresholds."""

    probs: np.ndarray  # 3x3, sums to 1 over all cells
    class_kind: str  # "uav" | "noise"
    thresholds: StateThresholds
    alpha: float
    n_training_transitions: int = 0


def estimate_noise_sigma(noise_frames: Sequence[WaveletSignal]) -> float:
    """Pooled standard deviation of all wavelet coefficients."""
    if not noise_frames:
        raise Empty("need at least one noise frame")
    pooled = np.concatenate([w.coeffs for w in noise_frames])
    return float(pooled.std())


def thresholds_from_sigma(sigma: float) -> StateThresholds:
    """+/- 3 sigma band of the wavelet-transformed noise."""
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    return StateThresholds(t1=3.0 * sigma, t2=-3.0 * sigma)


def quantize(signal: WaveletSignal, thresholds: StateThresholds) -> StateSequence:
    """Per-sample state assignment; both band edges belong to S2."""
    y = signal.coeffs
    states = np.full(y.size, S2, dtype=np.int8)
    states[y > thresholds.t1] = S1
    states[y < thresholds.t2] = S3
    return StateSequence(states=states)


def count_transitions(seq: StateSequence) -> TransitionCounts:
    """3x3 matrix of adjacent-pair transition counts."""
    s = seq.states
    if s.size < 2:
        raise TooShort("need at least 2 states to count transitions")
    flat = np.bincount(
        (s[:-1].astype(np.intp) * N_STATES + s[1:]), minlength=N_STATES * N_STATES
    )
    return TransitionCounts(counts=flat.reshape(N_STATES, N_STATES))


def fit_markov(
    sequences: Iterable[StateSequence],
    alpha: float = 1.0,
    thresholds: StateThresholds = REFERENCE_THRESHOLDS,
    class_kind: str = "uav",
) -> MarkovClassModel:
    """Pool transition counts over all sequences and normalize jointly.

    ``alpha`` is a per-cell pseudo-count; any positive value keeps every
    probability strictly positive so log-likelihoods stay finite.
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    counts = np.zeros((N_STATES, N_STATES), dtype=np.int64)
    for seq in sequences:
        counts += count_transitions(seq).counts
    total = counts.sum()
    if total < 1:
        raise Empty("no transitions in training sequences")
    smoothed = counts + alpha
    probs = smoothed / smoothed.sum()
    return MarkovClassModel(
        probs=probs,
        class_kind=class_kind,
        thresholds=thresholds,
        alpha=alpha,
        n_training_transitions=int(total),
    )


def log_likelihood(counts: TransitionCounts, model: MarkovClassModel) -> float:
    """Sum of N_ij * ln(p_ij); cells with zero count contribute nothing."""
    n = counts.counts
    p = model.probs
    hit = n > 0
    if np.any(p[hit] == 0):
        raise ZeroProbabilityEntry("zero-probability cell with nonzero count")
    return float(np.sum(n[hit] * np.log(p[hit])))


@dataclass
class DetectionResult:
    kind: str  # "uav" | "noise"
    ll_uav: float
    ll_noise: float

    @property
    def uav_present(self) -> bool:
        return self.kind == "uav"


def detect(
    frame: SampledSignal,
    uav_model: MarkovClassModel,
    noise_model: MarkovClassModel,
) -> DetectionResult:
    """UAV-present decision for one raw frame.

    Runs decompose -> quantize -> count, then compares log-likelihoods under
    both class models (equal priors); ties are resolved as UAV.
    """
    if uav_model.thresholds != noise_model.thresholds:
        raise ValueError("models must share quantization thresholds")
    seq = quantize(decompose3(frame), uav_model.thresholds)
    counts = count_transitions(seq)
    ll_uav = log_likelihood(counts, uav_model)
    ll_noise = log_likelihood(counts, noise_model)
    kind = "uav" if ll_uav >= ll_noise else "noise"
    return DetectionResult(kind=kind, ll_uav=ll_uav, ll_noise=ll_noise)


def train_detector(
    uav_frames: Sequence[SampledSignal],
    noise_frames: Sequence[SampledSignal],
    alpha: float = 1.0,
) -> tuple[MarkovClassModel, MarkovClassModel]:
    """Fit the UAV and noise models from labeled raw frames.

    Thresholds are frozen at +/- 3 sigma of the pooled wavelet-domain noise
    and shared by both models.
    """
    noise_wavelets = [decompose3(f) for f in noise_frames]
    thresholds = thresholds_from_sigma(estimate_noise_sigma(noise_wavelets))
    uav_seqs = [quantize(decompose3(f), thresholds) for f in uav_frames]
    noise_seqs = [quantize(w, thresholds) for w in noise_wavelets]
    uav_model = fit_markov(uav_seqs, alpha, thresholds, class_kind="uav")
    noise_model = fit_markov(noise_seqs, alpha, thresholds, class_kind="noise")
    return uav_model, noise_model


def model_to_json(model: MarkovClassModel) -> str:
    return json.dumps(
        {
            "format_version": 1,
            "class_kind": model.class_kind,
            "probs": [[repr(float(p)) for p in row] for row in model.probs],
            "thresholds": {"t1": model.thresholds.t1, "t2": model.thresholds.t2},
            "alpha": model.alpha,
            "n_training_transitions": model.n_training_transitions,
        },
        indent=2,
    )


def model_from_json(text: str) -> MarkovClassModel:
    doc = json.loads(text)
    probs = np.array([[float(p) for p in row] for row in doc["probs"]])
    return MarkovClassModel(
        probs=probs,
        class_kind=doc["class_kind"],
        thresholds=StateThresholds(**doc["thresholds"]),
        alpha=doc["alpha"],
        n_training_transitions=doc.get("n_training_transitions", 0),
    )


def save_models(
    uav_model: MarkovClassModel, noise_model: MarkovClassModel, path: str | Path
) -> None:
    doc = {
        "uav": json.loads(model_to_json(uav_model)),
        "noise": json.loads(model_to_json(noise_model)),
    }
    Path(path).write_text(json.dumps(doc, indent=2))


def load_models(path: str | Path) -> tuple[MarkovClassModel, MarkovClassModel]:
    doc = json.loads(Path(path).read_text())
    return (
        model_from_json(json.dumps(doc["uav"])),
        model_from_json(json.dumps(doc["noise"])),
    )
