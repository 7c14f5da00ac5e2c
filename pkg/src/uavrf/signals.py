"""Signal types, synthetic frame generation, dataset persistence, link budget.

Frames are real-valued amplitude captures at a fixed sample rate.  The
synthetic generator stands in for an RF capture rig: each controller class
is a deterministic packetized burst waveform (a constant-modulus FM sweep
under a blockwise packet envelope) and white Gaussian noise is injected at
an exact requested SNR.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
import zlib
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

BOLTZMANN = 1.38e-23  # J/K
NOISE_TEMP = 290.0  # K

_MAGIC = b"UVRF"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHBHdQ")  # magic, version, kind, controller, rate, length


class InvalidClass(ValueError):
    """Controller id out of range or inconsistent label."""


class NonPositiveParam(ValueError):
    """Link budget parameter that must be strictly positive is not."""


class DatasetError(Exception):
    """Base for dataset persistence failures."""


class FormatVersionMismatch(DatasetError):
    pass


class CorruptRecord(DatasetError):
    """Checksum failure, bad magic, or truncated frame record."""


@dataclass(frozen=True)
class ClassLabel:
    """Frame label: environmental noise or one of N controller classes."""

    kind: str  # "noise" | "uav"
    controller_id: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("noise", "uav"):
            raise InvalidClass(f"unknown label kind {self.kind!r}")
        if self.kind == "uav":
            if self.controller_id is None or self.controller_id < 1:
                raise InvalidClass("uav label requires controller_id >= 1")
        elif self.controller_id is not None:
            raise InvalidClass("noise label must not carry a controller_id")

    @classmethod
    def noise(cls) -> "ClassLabel":
        return cls("noise")

    @classmethod
    def uav(cls, controller_id: int) -> "ClassLabel":
        return cls("uav", controller_id)


@dataclass
class SampledSignal:
    """Fixed-rate real amplitude frame (volts)."""

    samples: np.ndarray
    sample_rate: float
    label: Optional[ClassLabel] = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples)
        if self.samples.size == 0:
            raise ValueError("samples must be non-empty")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be > 0")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("samples must be finite")

    def __len__(self) -> int:
        return self.samples.size


@dataclass(frozen=True)
class ClassParams:
    """Deterministic per-class waveform parameters."""

    center_freq: float  # cycles/sample
    bandwidth: float  # cycles/sample
    packet_period: int  # samples
    levels: tuple[float, ...]  # envelope amplitude per align block of a period


@dataclass(frozen=True)
class GeneratorConfig:
    """Synthetic corpus knobs.

    ``align`` quantizes packet periods and per-frame packet-train shifts so
    that frames of one class share the same envelope-to-window alignment in
    downstream short-time analysis (hop sizes dividing ``align``).
    """

    n_classes: int = 14
    frame_len: int = 2**16
    sample_rate: float = 1e6
    burst_duty: float = 0.7
    dc_bias: float = 0.02
    rng_seed: int = 0
    align: int = 1024
    # Lowest envelope amplitude inside a burst, as a fraction of the pulse
    # peak; keeps the energy trajectory well above the noise floor there.
    base_level: float = 0.35
    # Spacing of the per-class envelope-level grid; larger values separate
    # the classes more in feature space.
    level_step: float = 0.013

    def __post_init__(self):
        if self.n_classes < 2:
            raise ValueError("n_classes must be >= 2")
        if self.frame_len < 4096:
            raise ValueError("frame_len must be >= 4096")
        if not 0 < self.burst_duty <= 1:
            raise ValueError("burst_duty must be in (0, 1]")
        if self.align < 2 or self.frame_len % self.align:
            raise ValueError("align must divide frame_len")

    def class_params(self, controller_id: int) -> ClassParams:
        if not 1 <= controller_id <= self.n_classes:
            raise InvalidClass(
                f"controller_id {controller_id} out of range 1..{self.n_classes}"
            )
        k = controller_id - 1
        # Keep every class band well inside the wavelet low-pass passband so
        # the quantized-state activity is comparable across classes.
        f0 = 0.012 + 0.0015 * k
        bw = 0.018 + 0.004 * ((controller_id * 3) % 5)
        # Each packet period is one peak block plus three mid-level blocks.
        # The mid levels move on a per-class grid so the amplitude multisets
        # (and hence the trajectory statistics) are distinct for every class.
        lo = self.base_level
        levels = (
            1.0,
            min(lo + 0.05 + self.level_step * k, 0.95),
            max(0.85 - 0.011 * k, lo),
            lo + 0.20 + 0.010 * ((k * 5) % 7),
        )
        return ClassParams(
            center_freq=f0,
            bandwidth=bw,
            packet_period=self.align * len(levels),
            levels=levels,
        )

    def to_dict(self) -> dict:
        return {
            "n_classes": self.n_classes,
            "frame_len": self.frame_len,
            "sample_rate": self.sample_rate,
            "burst_duty": self.burst_duty,
            "dc_bias": self.dc_bias,
            "rng_seed": self.rng_seed,
            "align": self.align,
            "base_level": self.base_level,
            "level_step": self.level_step,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorConfig":
        return cls(**d)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclass(frozen=True)
class LinkBudgetParams:
    """Inputs to the passive-receiver maximum intercept range."""

    wavelength: float  # m
    transmit_power: float  # W
    transmit_gain: float  # linear
    intercept_gain: float  # linear
    losses: float  # linear
    noise_factor: float  # linear
    bandwidth: float  # Hz
    input_snr: float  # linear

    def __post_init__(self):
        for name, value in vars(self).items():
            if not value > 0:
                raise NonPositiveParam(f"{name} must be > 0, got {value}")


def intercept_range(p: LinkBudgetParams) -> float:
    """Maximum intercept range in meters of a passive RF sensing receiver.

    Receiver sensitivity is k*T0*F*B*rho_i; the range follows the standard
    one-way link budget for an intercept receiver.
    """
    sensitivity = BOLTZMANN * NOISE_TEMP * p.noise_factor * p.bandwidth * p.input_snr
    return (p.wavelength / (4 * math.pi)) * math.sqrt(
        p.transmit_power * p.transmit_gain * p.intercept_gain / (p.losses * sensitivity)
    )


@lru_cache(maxsize=64)
def _class_freqs(cfg: GeneratorConfig, controller_id: int) -> np.ndarray:
    """One period of the class's triangular FM sweep, cycles/sample.

    The sweep traverses the class band once up and once down per ``align``
    samples, so every analysis window of that length sees the whole band and
    the spectral energy spreads evenly over the band's bins.
    """
    params = cfg.class_params(controller_id)
    lo = max(params.center_freq - params.bandwidth / 2, 0.003)
    hi = params.center_freq + params.bandwidth / 2
    half = cfg.align // 2
    up = np.linspace(lo, hi, half, endpoint=False)
    down = np.linspace(hi, lo, cfg.align - half, endpoint=False)
    freqs = np.concatenate([up, down])
    freqs.setflags(write=False)
    return freqs


@lru_cache(maxsize=64)
def _class_envelope(cfg: GeneratorConfig, controller_id: int) -> np.ndarray:
    """One packet period of the class envelope.

    Piecewise constant over ``align`` blocks so that every analysis window of
    that length sees a single amplitude, which makes the per-window spectral
    peak independent of the sweep offset.
    """
    params = cfg.class_params(controller_id)
    env = np.repeat(params.levels, cfg.align).astype(float)
    env.setflags(write=False)
    return env


def _active_extent(cfg: GeneratorConfig, period: int) -> tuple[int, int]:
    """(start, length) of the burst region; both aligned to the packet grid."""
    target = int(round(cfg.burst_duty * cfg.frame_len))
    length = max(period, (target // period) * period)
    length = min(length, (cfg.frame_len // period) * period)
    start = ((cfg.frame_len - length) // 2 // cfg.align) * cfg.align
    return start, length


def clean_waveform(
    cfg: GeneratorConfig, controller_id: int, rng: np.random.Generator
) -> np.ndarray:
    """Noise-free class waveform, unit mean-square power plus DC bias.

    A constant-modulus FM carrier sweeps the class band under a blockwise
    packet envelope.  Per-frame randomness is the carrier phase and a
    circular offset of the sweep, so the envelope (and hence the energy
    trajectory) is frame-invariant.
    """
    params = cfg.class_params(controller_id)
    start, length = _active_extent(cfg, params.packet_period)
    n_periods = length // params.packet_period
    env = np.tile(_class_envelope(cfg, controller_id), n_periods)
    tau = int(rng.integers(cfg.align))
    freqs = np.tile(np.roll(_class_freqs(cfg, controller_id), tau),
                    length // cfg.align)
    phase = 2.0 * np.pi * np.cumsum(freqs) + rng.uniform(0.0, 2.0 * np.pi)
    frame = np.zeros(cfg.frame_len)
    frame[start : start + length] = env * np.cos(phase)
    frame /= math.sqrt(np.mean(frame**2))
    frame += cfg.dc_bias
    return frame


def generate_components(
    cfg: GeneratorConfig,
    label: ClassLabel,
    snr_db: float,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """(clean, noise) frame components before summation.

    For UAV labels the noise component is rescaled so the measured
    10*log10(P_clean / P_noise) equals ``snr_db`` exactly.  For the noise
    label the clean component is zero and the noise has unit reference
    power around the configured DC bias.
    """
    if label.kind == "noise":
        noise = rng.normal(cfg.dc_bias, 1.0, cfg.frame_len)
        return np.zeros(cfg.frame_len), noise
    if label.controller_id > cfg.n_classes:
        raise InvalidClass(
            f"controller_id {label.controller_id} exceeds n_classes {cfg.n_classes}"
        )
    if not (np.isfinite(snr_db) or snr_db > 0):
        raise ValueError("snr_db must be finite or +inf")
    clean = clean_waveform(cfg, label.controller_id, rng)
    if np.isinf(snr_db):
        return clean, np.zeros(cfg.frame_len)
    p_signal = np.mean(clean**2)
    p_noise = p_signal / 10 ** (snr_db / 10)
    noise = rng.standard_normal(cfg.frame_len)
    noise *= math.sqrt(p_noise / np.mean(noise**2))
    return clean, noise


def generate_frame(
    cfg: GeneratorConfig,
    label: ClassLabel,
    snr_db: float,
    rng: np.random.Generator,
) -> SampledSignal:
    """One synthetic capture frame at the requested SNR."""
    clean, noise = generate_components(cfg, label, snr_db, rng)
    samples = (clean + noise).astype(np.float32)
    return SampledSignal(samples=samples, sample_rate=cfg.sample_rate, label=label)


# ---------------------------------------------------------------------------
# Dataset persistence: one binary record per frame plus a JSON manifest.

def _frame_bytes(frame: SampledSignal) -> bytes:
    label = frame.label or ClassLabel.noise()
    kind = 1 if label.kind == "uav" else 0
    controller = label.controller_id or 0
    data = np.ascontiguousarray(frame.samples, dtype="<f4").tobytes()
    header = _HEADER.pack(
        _MAGIC, FORMAT_VERSION, kind, controller, frame.sample_rate, len(frame)
    )
    body = header + data
    return body + struct.pack("<I", zlib.crc32(body))


def _frame_from_bytes(blob: bytes) -> SampledSignal:
    if len(blob) < _HEADER.size + 4:
        raise CorruptRecord("record too short")
    body, (crc,) = blob[:-4], struct.unpack("<I", blob[-4:])
    if zlib.crc32(body) != crc:
        raise CorruptRecord("checksum mismatch")
    magic, version, kind, controller, rate, length = _HEADER.unpack(
        body[: _HEADER.size]
    )
    if magic != _MAGIC:
        raise CorruptRecord("bad magic")
    if version != FORMAT_VERSION:
        raise FormatVersionMismatch(f"format version {version} != {FORMAT_VERSION}")
    samples = np.frombuffer(body[_HEADER.size :], dtype="<f4")
    if samples.size != length:
        raise CorruptRecord(f"expected {length} samples, found {samples.size}")
    label = ClassLabel.uav(controller) if kind == 1 else ClassLabel.noise()
    return SampledSignal(samples=samples.copy(), sample_rate=rate, label=label)


def save_dataset(
    frames: Sequence[SampledSignal],
    path: str | Path,
    config: Optional[GeneratorConfig] = None,
    seed: Optional[int] = None,
) -> dict:
    """Write frames and a manifest into a directory; returns the manifest."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    counts: dict[str, int] = {}
    for i, frame in enumerate(frames):
        name = f"frame_{i:05d}.uvrf"
        (root / name).write_bytes(_frame_bytes(frame))
        label = frame.label or ClassLabel.noise()
        key = "noise" if label.kind == "noise" else f"uav_{label.controller_id}"
        counts[key] = counts.get(key, 0) + 1
        entries.append(
            {
                "file": name,
                "kind": label.kind,
                "controller_id": label.controller_id,
                "sample_rate": frame.sample_rate,
            }
        )
    manifest = {
        "format_version": FORMAT_VERSION,
        "seed": seed if seed is not None else (config.rng_seed if config else None),
        "config": config.to_dict() if config else None,
        "config_hash": config.digest() if config else None,
        "class_counts": counts,
        "frames": entries,
    }
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return manifest


def load_dataset(path: str | Path) -> list[SampledSignal]:
    """Load all frames listed in the directory manifest, in order."""
    root = Path(path)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise DatasetError(f"no manifest.json in {root}")
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("format_version") != FORMAT_VERSION:
        raise FormatVersionMismatch(
            f"manifest version {manifest.get('format_version')} != {FORMAT_VERSION}"
        )
    frames = []
    for entry in manifest["frames"]:
        frames.append(_frame_from_bytes((root / entry["file"]).read_bytes()))
    return frames
