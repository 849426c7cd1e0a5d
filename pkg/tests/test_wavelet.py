import math

import numpy as np
import pytest

from ensbook.reduction import (
    dequantize,
    haar_forward,
    haar_inverse,
    quantize,
    soft_threshold,
    universal_threshold,
)

POW2_SIZES = [(4, 4, 4), (8, 8, 8), (16, 16, 16), (8, 8, 1)]


class TestHaar:
    def test_constant_block(self):
        c = 3.25
        coeffs = haar_forward(np.full((2, 2, 2), c))
        assert coeffs[0, 0, 0] == pytest.approx(c * 2 ** 1.5, rel=1e-12)
        details = coeffs.ravel()[1:]
        assert np.abs(details).max() < 1e-12

    def test_single_pair(self):
        coeffs = haar_forward(np.array([3.0, 1.0]).reshape(2, 1, 1))
        assert coeffs[0, 0, 0] == pytest.approx(2 * math.sqrt(2), rel=1e-12)
        assert coeffs[1, 0, 0] == pytest.approx(math.sqrt(2), rel=1e-12)

    @pytest.mark.parametrize("dims", POW2_SIZES)
    def test_round_trip(self, dims):
        rng = np.random.default_rng(sum(dims))
        block = rng.standard_normal(dims)
        back = haar_inverse(haar_forward(block))
        scale = np.abs(block).max()
        assert np.abs(back - block).max() / scale < 1e-5

    @pytest.mark.parametrize("dims", POW2_SIZES)
    def test_parseval(self, dims):
        rng = np.random.default_rng(sum(dims) + 1)
        block = rng.standard_normal(dims)
        a = float((block**2).sum())
        b = float((haar_forward(block) ** 2).sum())
        assert abs(a - b) / a < 1e-4

    def test_rejects_non_power_of_two(self):
        with pytest.raises(ValueError, match="powers of two"):
            haar_forward(np.zeros((3, 4, 4)))
        with pytest.raises(ValueError, match="powers of two"):
            haar_inverse(np.zeros((4, 6, 4)))

    def test_degenerate_single_voxel(self):
        block = np.array([[[7.0]]])
        assert haar_forward(block)[0, 0, 0] == 7.0
        assert haar_inverse(block)[0, 0, 0] == 7.0


class TestThreshold:
    def test_quality_100_is_identity(self):
        rng = np.random.default_rng(2)
        coeffs = rng.standard_normal((4, 4, 4))
        out = soft_threshold(coeffs, 100.0)
        assert (out == coeffs).all()

    def test_soft_threshold_definition(self):
        # sign(c) * max(|c| - lambda, 0) with lambda = 2
        details = np.array([-3.0, 1.0, 5.0])
        shrunk = np.sign(details) * np.maximum(np.abs(details) - 2.0, 0.0)
        assert shrunk.tolist() == [-1.0, 0.0, 3.0]

    def test_lambda_formula_q50(self):
        lam = universal_threshold(64, 1.0, 50.0)
        assert lam == pytest.approx(math.sqrt(2 * math.log(64)), abs=1e-12)
        assert lam == pytest.approx(2.8841, abs=5e-5)

    def test_quality_zero_max_shrinkage(self):
        lam = universal_threshold(64, 1.0, 0.0)
        assert lam == pytest.approx(2.0 * math.sqrt(2 * math.log(64)), abs=1e-12)

    def test_matches_arithmetic_oracle(self):
        rng = np.random.default_rng(9)
        coeffs = rng.standard_normal((4, 4, 2)) * 3.0
        q = 37.5
        out = soft_threshold(coeffs, q)

        flat = coeffs.ravel()
        details = flat[1:]
        med = np.median(details)
        mad = np.median(np.abs(details - med))
        lam = math.sqrt(2 * math.log(flat.size)) * 2 * (100 - q) / 100 * mad
        expected = np.sign(details) * np.maximum(np.abs(details) - lam, 0.0)
        assert out.ravel()[0] == flat[0]
        assert np.abs(out.ravel()[1:] - expected).max() < 1e-12

    def test_approximation_coefficient_exempt(self):
        coeffs = np.zeros((4, 4, 4))
        coeffs[0, 0, 0] = 1000.0
        out = soft_threshold(coeffs, 0.0)
        assert out[0, 0, 0] == 1000.0

    def test_bad_quality(self):
        with pytest.raises(ValueError):
            universal_threshold(8, 1.0, 101.0)


class TestFullPathQ100:
    def test_per_voxel_bound_from_orthonormality(self):
        # q=100 disables thresholding; the only loss is quantization, whose
        # coefficient error (<= scale/2 each) maps through the orthonormal
        # inverse to a per-voxel error of at most scale * sqrt(n) / 2.
        import struct

        from ensbook.reduction import decode_wavelet_block, encode_wavelet_block

        rng = np.random.default_rng(40)
        for dims in POW2_SIZES:
            n = int(np.prod(dims))
            for _ in range(5):
                vec = rng.standard_normal(n).astype(np.float32)
                payload = encode_wavelet_block(vec, dims, 100.0)
                (scale,) = struct.unpack_from("<f", payload, 0)
                back = decode_wavelet_block(payload, dims)
                bound = scale * math.sqrt(n) / 2
                assert float(np.abs(back - vec).max()) <= bound * (1 + 1e-6)


class TestQuantize:
    def test_all_zero_lossless(self):
        scale, ints = quantize(np.zeros((4, 4, 4)))
        assert scale == 0.0
        assert not ints.any()
        assert (dequantize(scale, ints) == 0.0).all()

    def test_known_values(self):
        scale, ints = quantize(np.array([-1.0, 0.5, 1.0]))
        assert scale == pytest.approx(1.0 / 32767.0, rel=1e-12)
        assert ints.tolist() == [-32767, 16384, 32767]

    def test_round_trip_bound(self):
        rng = np.random.default_rng(14)
        for _ in range(50):
            coeffs = rng.standard_normal(64) * rng.uniform(0.01, 100)
            scale, ints = quantize(coeffs)
            err = np.abs(dequantize(scale, ints) - coeffs).max()
            assert err <= scale / 2 * (1 + 1e-9)

    def test_int16_range_respected(self):
        rng = np.random.default_rng(15)
        coeffs = rng.standard_normal(512) * 1e6
        _, ints = quantize(coeffs)
        assert ints.max() <= 32767 and ints.min() >= -32767
