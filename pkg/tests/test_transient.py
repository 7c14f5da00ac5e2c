"""Spectrogram, energy trajectory, and changepoint transient detection."""

import csv

import numpy as np
import pytest

from uavrf.signals import ClassLabel, GeneratorConfig, SampledSignal, generate_frame
from uavrf.signals import _active_extent
from uavrf.transient import (
    AllZero,
    BadConfig,
    EnergyTransient,
    Spectrogram,
    StftConfig,
    TooShort,
    dump_spectrogram_csv,
    dump_trajectory_csv,
    energy_trajectory,
    extract_transient,
    find_transient,
    spectrogram,
)

RATE = 1e6


def sig(x):
    return SampledSignal(samples=np.asarray(x, dtype=float), sample_rate=RATE)


from oracles import transient_oracle_results


class TestStftConfig:
    def test_validation(self):
        with pytest.raises(BadConfig):
            StftConfig(window="blackman")
        with pytest.raises(BadConfig):
            StftConfig(hop=0)
        with pytest.raises(BadConfig):
            StftConfig(window_len=512, fft_size=256)

    def test_taper_shapes(self):
        assert StftConfig(window="hann").taper().size == 256
        assert np.all(StftConfig(window="rect").taper() == 1.0)


class TestSpectrogram:
    def test_pure_tone_peaks_at_its_bin(self):
        cfg = StftConfig(window="rect", window_len=64, hop=32, fft_size=64)
        bin_idx = 7
        n = np.arange(1024)
        x = np.cos(2 * np.pi * bin_idx / 64 * n)
        spec = spectrogram(sig(x), cfg)
        assert np.all(np.argmax(spec.power, axis=1) == bin_idx)

    def test_all_zero_input(self):
        spec = spectrogram(sig(np.zeros(512)))
        assert np.all(spec.power == 0)

    def test_matches_direct_fft_and_parseval(self):
        cfg = StftConfig(window="hann", window_len=128, hop=64, fft_size=128)
        rng = np.random.default_rng(0)
        x = rng.normal(size=512)
        spec = spectrogram(sig(x), cfg)
        for t in range(spec.power.shape[0]):
            frame = x[t * 64 : t * 64 + 128] * np.hanning(128)
            full = np.fft.fft(frame)
            np.testing.assert_allclose(
                spec.power[t], np.abs(full[:65]) ** 2, rtol=1e-9, atol=1e-12
            )
            # Parseval on the full spectrum of the windowed frame
            assert np.sum(np.abs(full) ** 2) == pytest.approx(
                128 * np.sum(frame**2), rel=1e-9
            )

    def test_axis_steps(self):
        cfg = StftConfig(window="hann", window_len=256, hop=128, fft_size=256)
        spec = spectrogram(sig(np.ones(1024)), cfg)
        assert spec.time_step == 128 / RATE
        assert spec.freq_step == RATE / 256

    def test_too_short(self):
        with pytest.raises(TooShort):
            spectrogram(sig(np.ones(100)), StftConfig(window_len=256))


class TestEnergyTrajectory:
    def test_normalization_by_max(self):
        spec = Spectrogram(power=np.array([[4.0], [1.0], [0.25]]),
                           time_step=1.0, freq_step=1.0)
        np.testing.assert_allclose(energy_trajectory(spec), [1.0, 0.25, 0.0625])

    def test_constant_tone(self):
        cfg = StftConfig(window="rect", window_len=64, hop=64, fft_size=64)
        n = np.arange(1024)
        traj = energy_trajectory(spectrogram(sig(np.cos(2 * np.pi * 0.125 * n)), cfg))
        np.testing.assert_allclose(traj, 1.0, rtol=1e-9)

    def test_all_zero_rejected(self):
        spec = Spectrogram(power=np.zeros((4, 4)), time_step=1.0, freq_step=1.0)
        with pytest.raises(AllZero):
            energy_trajectory(spec)


class TestFindTransient:
    def test_clean_step(self):
        e = [0, 0, 0, 0, 1, 1, 1, 1, 0, 0, 0, 0]
        assert find_transient(np.array(e, dtype=float)) == (4, 7)

    def test_constant_degenerates_to_full_range(self):
        assert find_transient(np.full(10, 0.3)) == (0, 9)

    def test_too_short(self):
        with pytest.raises(TooShort):
            find_transient(np.ones(3))

    def test_unknown_statistic(self):
        with pytest.raises(BadConfig):
            find_transient(np.arange(10.0), statistic="median")

    def test_ramp_matches_oracle(self):
        e = np.linspace(0, 1, 100)
        assert find_transient(e) in transient_oracle_results(e)

    @pytest.mark.parametrize("case", range(60))
    def test_random_sequences_match_oracle(self, case):
        rng = np.random.default_rng(case)
        t = int(rng.integers(4, 65))
        kind = case % 3
        if kind == 0:
            e = rng.random(t)
        elif kind == 1:  # piecewise constant with integer levels: many exact ties
            e = rng.integers(0, 3, t).astype(float)
        else:
            e = np.repeat(rng.random(max(t // 4, 1)), 4)[:t]
        assert find_transient(e) in transient_oracle_results(e)

    def test_variance_statistic_detects_spread_change(self):
        rng = np.random.default_rng(5)
        e = np.concatenate([
            np.zeros(20), rng.choice([-1.0, 1.0], 20), np.zeros(20)
        ])
        start, end = find_transient(e, statistic="variance")
        assert abs(start - 20) <= 1
        assert abs(end - 39) <= 1


class TestExtractTransient:
    STFT = StftConfig(window="hann", window_len=1024, hop=1024, fft_size=1024)

    def test_burst_bounds_match_generator_ground_truth(self, small_gen):
        params = small_gen.class_params(1)
        start, length = _active_extent(small_gen, params.packet_period)
        expected = (start // 1024, (start + length) // 1024 - 1)
        frame = generate_frame(small_gen, ClassLabel.uav(1), 25.0,
                               np.random.default_rng(0))
        t = extract_transient(frame, self.STFT)
        assert abs(t.start_idx - expected[0]) <= 1
        assert abs(t.end_idx - expected[1]) <= 1

    def test_slice_and_len(self):
        t = EnergyTransient(trajectory=np.arange(10.0), start_idx=2, end_idx=5)
        np.testing.assert_array_equal(t.slice, [2, 3, 4, 5])
        assert len(t) == 4

    def test_amplitude_invariance(self):
        rng = np.random.default_rng(1)
        x = np.concatenate([0.01 * rng.normal(size=2048),
                            rng.normal(size=2048),
                            0.01 * rng.normal(size=2048)])
        cfg = StftConfig(window="hann", window_len=256, hop=256, fft_size=256)
        t1 = extract_transient(sig(x), cfg)
        t2 = extract_transient(sig(5.0 * x), cfg)
        np.testing.assert_allclose(t1.trajectory, t2.trajectory, rtol=1e-9)
        assert (t1.start_idx, t1.end_idx) == (t2.start_idx, t2.end_idx)

    def test_time_shift_covariance(self):
        rng = np.random.default_rng(2)
        burst = np.zeros(4096)
        burst[1024:2048] = rng.normal(size=1024)
        cfg = StftConfig(window="rect", window_len=256, hop=256, fft_size=256)
        base = extract_transient(sig(burst), cfg)
        k = 2
        shifted = extract_transient(sig(np.roll(burst, k * 256)), cfg)
        np.testing.assert_allclose(
            shifted.trajectory[k:], base.trajectory[:-k], rtol=1e-9
        )
        assert shifted.start_idx == base.start_idx + k
        assert shifted.end_idx == base.end_idx + k

    def test_trajectory_peak_is_one(self, small_frames):
        for frame in small_frames:
            t = extract_transient(frame, self.STFT)
            assert t.trajectory.max() == 1.0


class TestCsvDumps:
    def test_spectrogram_csv(self, tmp_path):
        spec = Spectrogram(power=np.arange(6.0).reshape(2, 3),
                           time_step=1.0, freq_step=1.0)
        path = tmp_path / "spec.csv"
        dump_spectrogram_csv(spec, path)
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["time_bin", "freq_bin", "power"]
        assert len(rows) == 1 + 6

    def test_trajectory_csv(self, tmp_path):
        t = EnergyTransient(trajectory=np.array([0.1, 1.0, 0.2]),
                            start_idx=1, end_idx=2)
        path = tmp_path / "traj.csv"
        dump_trajectory_csv(t, path)
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["time_bin", "energy", "in_transient"]
        assert [r[2] for r in rows[1:]] == ["0", "1", "1"]
