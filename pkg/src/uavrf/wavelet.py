"""Three-stage orthonormal Haar decomposition.

Only the approximation path is kept: three low-pass/downsample stages give a
de-trended, 8x shorter sequence that feeds the presence detector.  A trailing
odd sample is dropped at each stage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from uavrf.signals import SampledSignal

_SQRT2 = np.sqrt(2.0)

LEVELS = 3


class TooShort(ValueError):
    """Input shorter than one filter pair per remaining stage."""


@dataclass
class WaveletSignal:
    """Level-3 approximation coefficients of one frame."""

    coeffs: np.ndarray
    source_len: int
    levels: int = LEVELS


def haar_stage(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One orthonormal Haar analysis stage.

    approx[i] = (x[2i] + x[2i+1]) / sqrt(2)
    detail[i] = (x[2i] - x[2i+1]) / sqrt(2)
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size < 2:
        raise TooShort(f"need at least 2 samples, got {x.size}")
    n = (x.size // 2) * 2
    even, odd = x[0:n:2], x[1:n:2]
    return (even + odd) / _SQRT2, (even - odd) / _SQRT2


def decompose3(signal: SampledSignal | np.ndarray) -> WaveletSignal:
    """Apply three Haar stages, discarding the detail bands."""
    x = signal.samples if isinstance(signal, SampledSignal) else np.asarray(signal)
    source_len = x.size
    if source_len < 2**LEVELS:
        raise TooShort(f"need at least {2**LEVELS} samples, got {source_len}")
    approx = np.asarray(x, dtype=np.float64)
    for _ in range(LEVELS):
        approx, _detail = haar_stage(approx)
    return WaveletSignal(coeffs=approx, source_len=source_len)
