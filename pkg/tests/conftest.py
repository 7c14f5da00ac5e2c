"""Shared fixtures: small, fast corpora for unit tests.

The acceptance tests build their own full-size corpora; everything else uses
a shrunken generator (short frames, few classes) to stay fast.
"""

import numpy as np
import pytest

from uavrf.harness import ExperimentConfig
from uavrf.signals import ClassLabel, GeneratorConfig, generate_frame
from uavrf.transient import StftConfig

SMALL_STFT = StftConfig(window="hann", window_len=1024, hop=1024, fft_size=1024)


@pytest.fixture(scope="session")
def small_stft() -> StftConfig:
    return SMALL_STFT


@pytest.fixture(scope="session")
def small_gen() -> GeneratorConfig:
    return GeneratorConfig(n_classes=3, frame_len=2**14)


@pytest.fixture(scope="session")
def small_cfg(small_gen) -> ExperimentConfig:
    return ExperimentConfig(
        generator=small_gen,
        per_class=8,
        n_monte_carlo=2,
        snr_grid=(25.0,),
        controller_count_grid=(2, 3),
        grid_monte_carlo=1,
        stft=SMALL_STFT,
        detection_snr_grid=(0.0, 24.0),
        detection_trials=8,
        detection_train_per_class=2,
    )


@pytest.fixture(scope="session")
def small_frames(small_gen):
    """A handful of labeled frames: 3 classes x 4 frames + 4 noise frames."""
    frames = []
    for cid in range(1, small_gen.n_classes + 1):
        for i in range(4):
            rng = np.random.default_rng([0, cid, i])
            frames.append(generate_frame(small_gen, ClassLabel.uav(cid), 25.0, rng))
    for i in range(4):
        rng = np.random.default_rng([0, 99, i])
        frames.append(generate_frame(small_gen, ClassLabel.noise(), 25.0, rng))
    return frames
