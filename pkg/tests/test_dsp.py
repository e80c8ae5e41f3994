import numpy as np
import pytest

from taperlab import (ConfigError, InputError, ShapeError, frame_signal,
                      make_window, real_dft_power)


def naive_power_spectrum(frame, window, n_fft):
    """Direct O(N^2) evaluation of |sum_t w(t)x(t)exp(-i2pi t f/n_fft)|^2."""
    x = np.asarray(frame) * np.asarray(window)
    out = np.zeros(n_fft // 2 + 1)
    for f in range(n_fft // 2 + 1):
        acc = 0.0 + 0.0j
        for t in range(len(x)):
            acc += x[t] * np.exp(-2j * np.pi * t * f / n_fft)
        out[f] = abs(acc) ** 2
    return out


class TestMakeWindow:
    def test_hamming_endpoints(self):
        w = make_window("hamming", 400)
        assert w[0] == pytest.approx(0.08, abs=1e-15)
        assert w[200] == pytest.approx(1.0, abs=1e-12)

    def test_hamming_closed_form(self):
        n = 128
        w = make_window("hamming", n)
        t = np.arange(n)
        expected = 0.54 - 0.46 * np.cos(2 * np.pi * t / n)
        assert np.max(np.abs(w - expected)) < 1e-12

    def test_rectangular(self):
        assert np.array_equal(make_window("rectangular", 4), np.ones(4))

    def test_too_short(self):
        with pytest.raises(ConfigError):
            make_window("hamming", 1)

    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            make_window("hann", 64)


class TestFrameSignal:
    def test_frame_count_one_second(self):
        frames = frame_signal(np.zeros(16000), 400, 160)
        assert frames.shape == (98, 400)

    def test_exactly_one_frame(self):
        frames = frame_signal(np.arange(400.0), 400, 160)
        assert frames.shape == (1, 400)
        assert np.array_equal(frames[0], np.arange(400.0))

    def test_too_short(self):
        with pytest.raises(InputError):
            frame_signal(np.zeros(399), 400, 160)

    def test_trailing_partial_dropped(self):
        # 560 samples = one full frame plus one partial at shift 160
        frames = frame_signal(np.arange(560.0), 400, 160)
        assert frames.shape == (2, 400)
        assert frames[1][0] == 160.0

    def test_frames_match_manual_slices(self, rng):
        x = rng.standard_normal(2000)
        frames = frame_signal(x, 400, 160)
        for i in range(frames.shape[0]):
            assert np.array_equal(frames[i], x[i * 160:i * 160 + 400])

    def test_rejects_2d(self):
        with pytest.raises(ShapeError):
            frame_signal(np.zeros((2, 400)), 400, 160)

    def test_bad_params(self):
        with pytest.raises(ConfigError):
            frame_signal(np.zeros(800), 0, 160)
        with pytest.raises(ConfigError):
            frame_signal(np.zeros(800), 400, 0)

    def test_pre_emphasis(self, rng):
        x = rng.standard_normal(500)
        frames = frame_signal(x, 400, 160, pre_emphasis=0.97)
        expected = x.copy()
        expected[1:] -= 0.97 * x[:-1]
        assert np.array_equal(frames[0], expected[:400])

    def test_dither_seeded(self, rng):
        x = rng.standard_normal(500)
        a = frame_signal(x, 400, 160, dither=1e-3, dither_seed=5)
        b = frame_signal(x, 400, 160, dither=1e-3, dither_seed=5)
        c = frame_signal(x, 400, 160, dither=1e-3, dither_seed=6)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_dither_off_is_exact(self, rng):
        x = rng.standard_normal(500)
        assert np.array_equal(frame_signal(x, 400, 160),
                              frame_signal(x, 400, 160, dither=0.0))


class TestRealDftPower:
    def test_matches_naive_oracle(self, rng):
        x = rng.standard_normal(64)
        w = make_window("hamming", 64)
        got = real_dft_power(x, w, 128)
        want = naive_power_spectrum(x, w, 128)
        assert np.max(np.abs(got - want)) / np.max(want) < 1e-12

    def test_zero_frame(self):
        out = real_dft_power(np.zeros(400), make_window("hamming", 400), 512)
        assert out.shape == (257,)
        assert np.array_equal(out, np.zeros(257))

    def test_on_bin_cosine_peak(self):
        n = 512
        k = 32
        t = np.arange(n)
        x = np.cos(2 * np.pi * k * t / n)
        out = real_dft_power(x, np.ones(n), n)
        assert out[k] == pytest.approx((n / 2) ** 2, rel=1e-12)
        rest = np.delete(out, k)
        assert np.max(rest) < 1e-15 * out[k]

    def test_parseval(self, rng):
        x = rng.standard_normal(400)
        w = make_window("hamming", 400)
        spec = real_dft_power(x, w, 512)
        two_sided = spec[0] + spec[-1] + 2 * np.sum(spec[1:-1])
        energy = np.sum((x * w) ** 2)
        assert abs(two_sided / 512 - energy) / energy < 1e-9

    def test_conjugate_symmetry_fold(self, rng):
        x = rng.standard_normal(256)
        full = np.abs(np.fft.fft(x, 256)) ** 2
        half = real_dft_power(x, np.ones(256), 256)
        assert np.allclose(half, full[:129], rtol=1e-12, atol=1e-9)
        assert np.allclose(half[1:-1], full[255:128:-1], rtol=1e-9, atol=1e-9)

    def test_circular_shift_invariance(self, rng):
        x = rng.standard_normal(512)
        a = real_dft_power(x, np.ones(512), 512)
        b = real_dft_power(np.roll(x, 37), np.ones(512), 512)
        assert np.max(np.abs(a - b)) / np.max(a) < 1e-9

    def test_scale_equivariance(self, rng):
        x = rng.standard_normal(400)
        w = make_window("hamming", 400)
        a = real_dft_power(x, w, 512)
        b = real_dft_power(3.0 * x, w, 512)
        assert np.allclose(b, 9.0 * a, rtol=1e-12, atol=1e-12)

    def test_nonnegative(self, rng):
        x = rng.standard_normal(400)
        assert np.all(real_dft_power(x, make_window("hamming", 400), 512) >= 0)

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            real_dft_power(np.zeros(400), np.ones(401), 512)

    def test_nfft_too_small(self):
        with pytest.raises(ConfigError):
            real_dft_power(np.zeros(400), np.ones(400), 256)
