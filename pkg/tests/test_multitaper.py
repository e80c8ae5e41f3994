import json

import numpy as np
import pytest

from taperlab import (ConfigError, ShapeError, TaperBank, attenuation_width,
                      bank_at_frame_length, combine_sub_spectra, load_bank,
                      make_rectangular_bank, make_single_hamming_bank,
                      make_swce_bank, make_window, multitaper_power,
                      real_dft_power, save_bank, sub_spectra, swce_weights,
                      taper_orthonormality_check)

# frozen from direct evaluation of the closed form, K=8, N=400
SWCE8_WEIGHTS = [0.0278, 0.0556, 0.0834, 0.1112, 0.1390, 0.1667, 0.1943, 0.2220]


def oracle_weights(k, n):
    den = sum(np.sin(2 * np.pi * j / (n + 1)) for j in range(0, k + 1))
    return np.array([np.sin(2 * np.pi * j / (n + 1)) / den
                     for j in range(1, k + 1)])


def oracle_gram_deviation(tapers):
    k = tapers.shape[0]
    dev = 0.0
    for a in range(k):
        for b in range(k):
            ip = float(np.dot(tapers[a], tapers[b]))
            dev = max(dev, abs(ip - (1.0 if a == b else 0.0)))
    return dev


class TestSwceWeights:
    def test_frozen_values_k8(self):
        w = swce_weights(8, 400)
        assert np.allclose(w, SWCE8_WEIGHTS, atol=5e-5)

    @pytest.mark.parametrize("k", [1, 2, 8, 20])
    def test_matches_oracle(self, k):
        assert np.allclose(swce_weights(k, 400), oracle_weights(k, 400),
                           rtol=1e-14, atol=0)

    @pytest.mark.parametrize("k", [2, 8, 20])
    def test_positive_and_sum_one(self, k):
        w = swce_weights(k, 400)
        assert np.all(w > 0)
        assert abs(w.sum() - 1.0) < 1e-12

    def test_k1_is_exactly_one(self):
        assert swce_weights(1, 400)[0] == 1.0

    def test_increasing_for_small_k(self):
        # 2 pi j / (N+1) stays below pi/2 for all j <= 8 at N=400
        w = swce_weights(8, 400)
        assert np.all(np.diff(w) > 0)


class TestMakeSwceBank:
    @pytest.mark.parametrize("k", [1, 2, 8, 20])
    def test_orthonormality(self, k):
        bank = make_swce_bank(k, 400)
        assert taper_orthonormality_check(bank) < 1e-9
        assert oracle_gram_deviation(bank.tapers) < 1e-9

    def test_shapes(self):
        bank = make_swce_bank(8, 400)
        assert bank.tapers.shape == (8, 400)
        assert bank.weights.shape == (8,)
        assert bank.kind == "swce"

    def test_degenerate_k(self):
        with pytest.raises(ConfigError):
            make_swce_bank(250, 400)
        with pytest.raises(ConfigError):
            make_swce_bank(2, 3)

    def test_bad_params(self):
        with pytest.raises(ConfigError):
            make_swce_bank(0, 400)
        with pytest.raises(ConfigError):
            make_swce_bank(1, 1)

    def test_tiny_bank_hand_oracle(self):
        # K=2 at N=3 aliases (taper 2 is identically zero on the grid);
        # construct it by hand to document why make_swce_bank rejects it.
        n1 = 4.0
        tapers = np.array([
            [np.sqrt(2 / n1) * np.sin(2 * np.pi * 1 * i / n1) for i in (1, 2, 3)],
            [np.sqrt(2 / n1) * np.sin(2 * np.pi * 2 * i / n1) for i in (1, 2, 3)],
        ])
        assert np.allclose(tapers[0], [np.sqrt(0.5), 0.0, -np.sqrt(0.5)],
                           atol=1e-15)
        assert np.allclose(tapers[1], 0.0, atol=1e-15)
        bank = TaperBank("custom", tapers, [0.5, 0.5])
        # <w1,w1>=1, <w1,w2>=0, <w2,w2>=0, so the max deviation is exactly 1
        assert taper_orthonormality_check(bank) == pytest.approx(1.0, abs=1e-15)


class TestMultitaperPower:
    def test_k1_hamming_equals_windowed_dft(self, rng):
        bank = make_single_hamming_bank(400)
        w = make_window("hamming", 400)
        x = rng.standard_normal(400)
        a = multitaper_power(x, bank, 512)
        b = real_dft_power(x, w, 512)
        nz = b > 0
        assert np.max(np.abs(a[nz] - b[nz]) / b[nz]) < 1e-12

    def test_zero_frame(self):
        bank = make_swce_bank(4, 400)
        assert np.array_equal(multitaper_power(np.zeros(400), bank, 512),
                              np.zeros(257))

    def test_mean_of_two_subspectra(self, rng):
        base = make_swce_bank(2, 400)
        bank = TaperBank("custom", base.tapers, [0.5, 0.5])
        x = rng.standard_normal(400)
        subs = sub_spectra(x, bank, 512)
        assert np.allclose(multitaper_power(x, bank, 512),
                           (subs[0] + subs[1]) / 2, rtol=1e-15, atol=0)

    def test_linearity_in_lambda(self, rng):
        bank = make_swce_bank(8, 400)
        x = rng.standard_normal(400)
        direct = multitaper_power(x, bank, 512)
        by_parts = sum(lam * real_dft_power(x, taper, 512)
                       for lam, taper in zip(bank.weights, bank.tapers))
        assert np.max(np.abs(direct - by_parts)) / np.max(direct) < 1e-12

    def test_frame_length_mismatch(self):
        bank = make_swce_bank(4, 400)
        with pytest.raises(ShapeError):
            multitaper_power(np.zeros(512), bank, 512)

    def test_scale_equivariance(self, rng):
        bank = make_swce_bank(8, 400)
        x = rng.standard_normal(400)
        assert np.allclose(multitaper_power(2.0 * x, bank, 512),
                           4.0 * multitaper_power(x, bank, 512),
                           rtol=1e-12, atol=0)


class TestSubSpectra:
    def test_shape_and_recombination(self, rng):
        bank = make_swce_bank(8, 400)
        x = rng.standard_normal(400)
        subs = sub_spectra(x, bank, 512)
        assert subs.shape == (8, 257)
        combined = combine_sub_spectra(subs, bank.weights)
        # same accumulation order, so bit identical
        assert np.array_equal(combined, multitaper_power(x, bank, 512))

    def test_zero_frame(self):
        bank = make_swce_bank(3, 400)
        assert np.array_equal(sub_spectra(np.zeros(400), bank, 512),
                              np.zeros((3, 257)))


class TestBankValidation:
    def test_nonpositive_weight_rejected(self):
        tapers = make_swce_bank(2, 400).tapers
        with pytest.raises(ConfigError):
            TaperBank("custom", tapers, [0.5, 0.0])
        with pytest.raises(ConfigError):
            TaperBank("custom", tapers, [1.5, -0.5])

    def test_shape_mismatch(self):
        tapers = make_swce_bank(2, 400).tapers
        with pytest.raises(ShapeError):
            TaperBank("custom", tapers, [1.0])

    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            TaperBank("dpss", make_swce_bank(2, 400).tapers, [0.5, 0.5])

    def test_nonfinite_rejected(self):
        tapers = make_swce_bank(2, 400).tapers.copy()
        tapers[0, 0] = np.nan
        with pytest.raises(ConfigError):
            TaperBank("custom", tapers, [0.5, 0.5])


class TestSerialization:
    def test_round_trip_exact(self, tmp_path):
        bank = make_swce_bank(8, 400)
        path = tmp_path / "bank.json"
        save_bank(bank, path)
        loaded = load_bank(path)
        assert loaded.kind == bank.kind
        assert np.array_equal(loaded.tapers, bank.tapers)
        assert np.array_equal(loaded.weights, bank.weights)

    def test_document_fields(self, tmp_path):
        bank = make_swce_bank(2, 8)
        path = tmp_path / "bank.json"
        save_bank(bank, path)
        doc = json.loads(path.read_text())
        assert set(doc) == {"kind", "K", "N", "weights", "tapers"}
        assert doc["K"] == 2 and doc["N"] == 8

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_bank(path)

    def test_inconsistent_shape(self, tmp_path):
        bank = make_swce_bank(2, 8)
        doc = {"kind": "swce", "K": 3, "N": 8,
               "weights": bank.weights.tolist(), "tapers": bank.tapers.tolist()}
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(ConfigError):
            load_bank(path)


class TestBankAtFrameLength:
    def test_swce_rebuild_keeps_weights(self):
        bank = TaperBank("swce", make_swce_bank(4, 400).tapers,
                         [0.7, 0.1, 0.1, 0.1])
        rebuilt = bank_at_frame_length(bank, 512)
        assert rebuilt.frame_length == 512
        assert np.array_equal(rebuilt.weights, bank.weights)
        assert np.array_equal(rebuilt.tapers, make_swce_bank(4, 512).tapers)

    def test_baselines_rebuild(self):
        assert bank_at_frame_length(make_single_hamming_bank(400),
                                    512).frame_length == 512
        assert bank_at_frame_length(make_rectangular_bank(400),
                                    512).frame_length == 512

    def test_custom_cannot_rebuild(self):
        bank = TaperBank("custom", make_swce_bank(2, 400).tapers, [0.5, 0.5])
        with pytest.raises(ConfigError):
            bank_at_frame_length(bank, 512)


class TestStatisticalProperties:
    def test_variance_reduction_white_noise(self, rng):
        # smaller sibling of the acceptance run
        swce = make_swce_bank(8, 400)
        ham = make_single_hamming_bank(400)
        frames = rng.standard_normal((400, 400))
        s_swce = np.stack([multitaper_power(f, swce, 512) for f in frames])
        s_ham = np.stack([multitaper_power(f, ham, 512) for f in frames])

        def relvar(s):
            return s.var(axis=0) / s.mean(axis=0) ** 2

        interior = slice(1, 256)
        better = relvar(s_swce)[interior] < relvar(s_ham)[interior]
        assert better.mean() >= 0.95

    def test_smoothing_monotonicity_single_tone(self):
        # on-bin tone analyzed at frame = n_fft; mainlobe widens with K
        n = 512
        t = np.arange(n)
        x = np.sin(2 * np.pi * 64 * t / n)
        widths = []
        for k in (1, 2, 4, 8):
            spec = multitaper_power(x, make_swce_bank(k, n), n)
            widths.append(attenuation_width(spec, 2000.0, 80.0, 16000))
        ham = multitaper_power(x, make_single_hamming_bank(n), n)
        width_ham = attenuation_width(ham, 2000.0, 80.0, 16000)
        assert width_ham < widths[0]
        assert all(a <= b for a, b in zip(widths, widths[1:]))
        assert widths[0] < widths[-1]
