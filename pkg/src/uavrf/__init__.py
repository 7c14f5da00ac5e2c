"""Micro-UAV controller detection and RF-fingerprint classification toolkit.

Pipeline: synthetic frame generation -> Haar wavelet preprocessing ->
Markov/naive-Bayes presence detection -> spectrogram energy transient ->
statistical fingerprints -> NCA feature selection -> kNN/DA/SVM
classification, with an experiment harness and CLI on top.
"""

__version__ = "0.1.0"

from uavrf.signals import (
    ClassLabel,
    GeneratorConfig,
    LinkBudgetParams,
    SampledSignal,
    generate_frame,
    intercept_range,
    load_dataset,
    save_dataset,
)
from uavrf.wavelet import WaveletSignal, decompose3, haar_stage

__all__ = [
    "ClassLabel",
    "GeneratorConfig",
    "LinkBudgetParams",
    "SampledSignal",
    "WaveletSignal",
    "decompose3",
    "generate_frame",
    "haar_stage",
    "intercept_range",
    "load_dataset",
    "save_dataset",
]
