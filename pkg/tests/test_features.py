"""Statistical fingerprints of the energy transient."""

import csv
import math

import numpy as np
import pytest

from uavrf.features import (
    FEATURE_NAMES,
    BatchResult,
    batch_extract,
    extract_features,
    features_from_slice,
    load_features_csv,
    save_features_csv,
)
from uavrf.transient import DegenerateTransient, EnergyTransient, TooShort


def oracle_features(x):
    """Direct per-definition summation with math.fsum."""
    x = [float(v) for v in x]
    n = len(x)
    mu = math.fsum(x) / n
    var = math.fsum((v - mu) ** 2 for v in x) / n
    sigma = math.sqrt(var)
    skew = math.fsum((v - mu) ** 3 for v in x) / (n * sigma**3)
    kurt = math.fsum((v - mu) ** 4 for v in x) / (n * sigma**4)
    mass = math.fsum(x)
    entropy = -math.fsum(
        (v / mass) * math.log2(v / mass) for v in x if v / mass > 0
    )
    return skew, var, entropy, kurt


class TestFeaturesFromSlice:
    def test_reference_slice_against_oracle(self):
        fv = features_from_slice(np.array([0.1, 0.2, 0.3, 0.4]))
        # hand-derived: mu=0.25, var=0.0125, symmetric so skew=0, kurt=1.64,
        # H = -sum(q log2 q) over q=(0.1,0.2,0.3,0.4) = 1.8464393446710154
        assert fv.skewness == pytest.approx(0.0, abs=1e-12)
        assert fv.variance == pytest.approx(0.0125, abs=1e-12)
        assert fv.kurtosis == pytest.approx(1.64, abs=1e-12)
        assert fv.entropy == pytest.approx(1.8464393446710154, abs=1e-12)

    def test_symmetric_slice_zero_skewness(self):
        fv = features_from_slice(np.array([0.2, 0.8, 0.8, 0.2]))
        assert fv.skewness == pytest.approx(0.0, abs=1e-12)

    def test_constant_slice_degenerate(self):
        with pytest.raises(DegenerateTransient):
            features_from_slice(np.full(6, 0.4))

    def test_short_slice(self):
        with pytest.raises(TooShort):
            features_from_slice(np.array([0.1, 0.2]))

    @pytest.mark.parametrize("case", range(50))
    def test_random_slices_match_oracle(self, case):
        rng = np.random.default_rng(case)
        x = rng.random(int(rng.integers(4, 1025))) + 0.01
        fv = features_from_slice(x)
        skew, var, entropy, kurt = oracle_features(x)
        assert fv.skewness == pytest.approx(skew, abs=1e-12)
        assert fv.variance == pytest.approx(var, abs=1e-12)
        assert fv.entropy == pytest.approx(entropy, abs=1e-12)
        assert fv.kurtosis == pytest.approx(kurt, abs=1e-12)
        assert fv.kurtosis >= 1.0 + fv.skewness**2 - 1e-12

    def test_affine_invariances(self):
        rng = np.random.default_rng(99)
        x = rng.random(64) + 0.1
        a, b = 2.5, 0.3
        base = features_from_slice(x)
        scaled = features_from_slice(a * x)
        shifted = features_from_slice(a * x + b)
        # skewness and kurtosis invariant under positive affine maps
        assert shifted.skewness == pytest.approx(base.skewness, rel=1e-9)
        assert shifted.kurtosis == pytest.approx(base.kurtosis, rel=1e-9)
        # variance scales by a^2 and ignores the shift
        assert scaled.variance == pytest.approx(a**2 * base.variance, rel=1e-9)
        assert shifted.variance == pytest.approx(a**2 * base.variance, rel=1e-9)
        # entropy invariant under pure scaling (renormalization cancels a)
        assert scaled.entropy == pytest.approx(base.entropy, rel=1e-9)

    def test_extract_features_uses_transient_slice(self):
        traj = np.array([0.0, 0.0, 0.1, 0.5, 1.0, 0.4, 0.0, 0.0])
        t = EnergyTransient(trajectory=traj, start_idx=2, end_idx=5)
        fv = extract_features(t)
        direct = features_from_slice(traj[2:6])
        assert fv == direct


class TestBatchExtract:
    def test_labels_and_shape(self, small_frames, small_stft):
        result = batch_extract(small_frames, small_stft)
        kept = result.labels.size
        assert result.features.shape == (kept, 4)
        # every controller frame yields a row; noise frames without a usable
        # transient are reported as failures instead
        assert list(result.labels[:12]) == [1] * 4 + [2] * 4 + [3] * 4
        assert np.all(result.labels[12:] == 0)
        assert kept + len(result.failures) == 16

    def test_empty_dataset(self):
        result = batch_extract([])
        assert result.features.shape == (0, 4)
        assert result.labels.size == 0
        assert result.failures == []

    def test_degenerate_frame_flagged_not_dropped(self, small_frames, small_stft):
        from uavrf.signals import SampledSignal

        dc = SampledSignal(samples=np.full(2**14, 0.5), sample_rate=1e6)
        frames = [small_frames[0], dc, small_frames[1]]
        result = batch_extract(frames, small_stft)
        assert result.features.shape[0] == 2
        assert len(result.failures) == 1
        index, exc = result.failures[0]
        assert index == 1
        assert isinstance(exc, DegenerateTransient)


class TestFeatureCsv:
    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(4)
        result = BatchResult(
            features=rng.random((6, 4)),
            labels=np.array([1, 1, 2, 2, 0, 3]),
            failures=[],
        )
        path = tmp_path / "features.csv"
        save_features_csv(result, path)
        X, y = load_features_csv(path)
        np.testing.assert_array_equal(X, result.features)
        np.testing.assert_array_equal(y, result.labels)

    def test_header(self, tmp_path):
        path = tmp_path / "features.csv"
        save_features_csv(
            BatchResult(features=np.empty((0, 4)), labels=np.array([], dtype=int),
                        failures=[]),
            path,
        )
        header = next(csv.reader(path.open()))
        assert header == ["class_id", *FEATURE_NAMES]

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("class_id,a,b,c,d\n")
        with pytest.raises(ValueError):
            load_features_csv(path)
