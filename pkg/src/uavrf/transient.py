"""Spectrogram, normalized energy trajectory, and transient boundary search.

The energy trajectory is the per-time-bin maximum of the spectrogram power,
normalized to peak 1.  The transient is the middle segment of an exhaustive
two-breakpoint least-squares segmentation of that trajectory.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from uavrf.signals import SampledSignal


class TooShort(ValueError):
    pass


class BadConfig(ValueError):
    pass


class AllZero(ValueError):
    """Trajectory cannot be normalized because every bin is zero."""


class DegenerateTransient(ValueError):
    """Raised downstream when a transient slice has no usable spread."""


_WINDOWS = {
    "hann": np.hanning,
    "rect": np.ones,
}


@dataclass(frozen=True)
class StftConfig:
    window: str = "hann"
    window_len: int = 256
    hop: int = 128
    fft_size: int = 256

    def __post_init__(self):
        if self.window not in _WINDOWS:
            raise BadConfig(f"unknown window {self.window!r}")
        if not 0 < self.hop <= self.window_len <= self.fft_size:
            raise BadConfig("need 0 < hop <= window_len <= fft_size")

    def taper(self) -> np.ndarray:
        return _WINDOWS[self.window](self.window_len)


@dataclass
class Spectrogram:
    power: np.ndarray  # (time, freq), non-negative
    time_step: float  # seconds per bin
    freq_step: float  # Hz per bin


@dataclass
class EnergyTransient:
    """Full normalized trajectory with detected transient bounds (inclusive)."""

    trajectory: np.ndarray
    start_idx: int
    end_idx: int

    @property
    def slice(self) -> np.ndarray:
        return self.trajectory[self.start_idx : self.end_idx + 1]

    def __len__(self) -> int:
        return self.end_idx - self.start_idx + 1


def spectrogram(signal: SampledSignal, cfg: StftConfig = StftConfig()) -> Spectrogram:
    """Squared-magnitude STFT of a real frame, non-negative frequencies only."""
    x = np.asarray(signal.samples, dtype=np.float64)
    if x.size < cfg.window_len:
        raise TooShort(f"need at least {cfg.window_len} samples, got {x.size}")
    n_frames = (x.size - cfg.window_len) // cfg.hop + 1
    idx = np.arange(cfg.window_len)[None, :] + cfg.hop * np.arange(n_frames)[:, None]
    frames = x[idx] * cfg.taper()[None, :]
    power = np.abs(np.fft.rfft(frames, n=cfg.fft_size, axis=1)) ** 2
    return Spectrogram(
        power=power,
        time_step=cfg.hop / signal.sample_rate,
        freq_step=signal.sample_rate / cfg.fft_size,
    )


def energy_trajectory(spec: Spectrogram) -> np.ndarray:
    """Max power over frequency per time bin, scaled to peak 1."""
    if spec.power.size == 0:
        raise AllZero("empty spectrogram")
    traj = spec.power.max(axis=1)
    peak = traj.max()
    if peak == 0:
        raise AllZero("all-zero spectrogram cannot be normalized")
    return traj / peak


def _segment_cost(s1: np.ndarray, s2: np.ndarray, i: int, j: int) -> float:
    """Squared deviation from the mean over the half-open range [i, j)."""
    n = j - i
    sum1 = s1[j] - s1[i]
    return (s2[j] - s2[i]) - sum1 * sum1 / n


def find_transient(e: np.ndarray, statistic: str = "mean") -> tuple[int, int]:
    """Start and end indices (inclusive) of the most abrupt-change segment.

    Exhaustive search over all breakpoint pairs (b1, b2), b1 < b2, minimizing
    the total within-segment cost of the three segments [0,b1), [b1,b2),
    [b2,T); ties pick the lexicographically smallest pair.  If no change is
    present, or the optimal middle segment collapses to a single bin, the
    result degenerates: a single-changepoint start with end at the last bin,
    or the full range when even a single split gains nothing.

    ``statistic`` selects the per-segment cost: "mean" is squared deviation
    from the segment mean; "variance" applies the same cost to the squared
    deviations from the global mean, so it reacts to spread changes.
    """
    e = np.asarray(e, dtype=np.float64)
    t = e.size
    if t < 4:
        raise TooShort(f"need at least 4 bins, got {t}")
    if statistic == "variance":
        e = (e - e.mean()) ** 2
    elif statistic != "mean":
        raise BadConfig(f"unknown changepoint statistic {statistic!r}")

    s1 = np.concatenate(([0.0], np.cumsum(e)))
    s2 = np.concatenate(([0.0], np.cumsum(e * e)))
    total = _segment_cost(s1, s2, 0, t)
    eps = 1e-12 * max(total, 1.0)

    # cost of [i, j) for all i < j via broadcasting
    n_mat = np.arange(t + 1)[None, :] - np.arange(t + 1)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        sums = s1[None, :] - s1[:, None]
        cost = (s2[None, :] - s2[:, None]) - sums * sums / n_mat
    b = np.arange(1, t)
    # total 3-segment cost for breakpoints (b1, b2): rows b1, cols b2
    grid = cost[0, b][:, None] + cost[np.ix_(b, b)] + cost[b, t][None, :]
    grid[np.tril_indices(t - 1)] = np.inf  # keep b1 < b2 only
    flat = int(np.argmin(grid))  # row-major argmin = lexicographic tie-break
    b1 = b[flat // (t - 1)]
    b2 = b[flat % (t - 1)]

    if total - grid[flat // (t - 1), flat % (t - 1)] <= eps:
        return 0, t - 1
    if b2 - b1 >= 2:
        return int(b1), int(b2 - 1)

    # degenerate pair: fall back to the best single changepoint
    two_seg = cost[0, b] + cost[b, t]
    best = int(np.argmin(two_seg))
    if total - two_seg[best] <= eps:
        return 0, t - 1
    return int(b[best]), t - 1


def extract_transient(
    signal: SampledSignal,
    cfg: StftConfig = StftConfig(),
    statistic: str = "mean",
) -> EnergyTransient:
    """spectrogram -> energy trajectory -> changepoint bounds for one frame."""
    traj = energy_trajectory(spectrogram(signal, cfg))
    start, end = find_transient(traj, statistic=statistic)
    return EnergyTransient(trajectory=traj, start_idx=start, end_idx=end)


def dump_spectrogram_csv(spec: Spectrogram, path: str | Path) -> None:
    """(time_bin, freq_bin, power) rows for external plotting."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_bin", "freq_bin", "power"])
        for ti in range(spec.power.shape[0]):
            for fi in range(spec.power.shape[1]):
                writer.writerow([ti, fi, repr(float(spec.power[ti, fi]))])


def dump_trajectory_csv(transient: EnergyTransient, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_bin", "energy", "in_transient"])
        for ti, value in enumerate(transient.trajectory):
            inside = int(transient.start_idx <= ti <= transient.end_idx)
            writer.writerow([ti, repr(float(value)), inside])
