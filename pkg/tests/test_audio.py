import csv
import wave

import numpy as np
import pytest

from taperlab import (ConfigError, InputError, ToyCorpusSpec, load_manifest,
                      make_toy_corpus, read_wav, write_corpus, write_wav)
from taperlab.audio import quantize_to_int16_grid


def raw_wav(path, channels=1, width=2, rate=16000, num_frames=64):
    with wave.open(str(path), "wb") as wav:
        wav.setnchannels(channels)
        wav.setsampwidth(width)
        wav.setframerate(rate)
        wav.writeframes(bytes(num_frames * channels * width))


class TestWavIo:
    def test_round_trip_bit_exact(self, rng, tmp_path):
        x = quantize_to_int16_grid(rng.uniform(-1.0, 1.0, 1600))
        path = str(tmp_path / "a.wav")
        write_wav(path, x)
        back, rate = read_wav(path)
        assert rate == 16000
        assert np.array_equal(back, x)

    def test_write_clips(self, tmp_path):
        path = str(tmp_path / "c.wav")
        write_wav(path, np.array([2.0, -2.0, 0.0]))
        back, _ = read_wav(path)
        assert np.array_equal(back, [1.0, -1.0, 0.0])

    def test_rejects_stereo(self, tmp_path):
        path = tmp_path / "stereo.wav"
        raw_wav(path, channels=2)
        with pytest.raises(InputError, match="mono"):
            read_wav(str(path))

    def test_rejects_8_bit(self, tmp_path):
        path = tmp_path / "w8.wav"
        raw_wav(path, width=1)
        with pytest.raises(InputError, match="16-bit"):
            read_wav(str(path))

    def test_rejects_other_rates(self, tmp_path):
        path = tmp_path / "r8k.wav"
        raw_wav(path, rate=8000)
        with pytest.raises(InputError, match="16000"):
            read_wav(str(path))

    def test_rejects_non_wav(self, tmp_path):
        path = tmp_path / "x.wav"
        path.write_text("this is not audio")
        with pytest.raises(InputError):
            read_wav(str(path))

    def test_rejects_empty_file(self, tmp_path):
        path = tmp_path / "empty.wav"
        path.write_bytes(b"")
        with pytest.raises(InputError):
            read_wav(str(path))


class TestQuantize:
    def test_on_grid_and_idempotent(self, rng):
        x = rng.uniform(-1.0, 1.0, 500)
        q = quantize_to_int16_grid(x)
        assert np.array_equal(q, quantize_to_int16_grid(q))
        assert np.array_equal(np.round(q * 32767.0), q * 32767.0)

    def test_clips(self):
        assert np.array_equal(quantize_to_int16_grid([1.5, -1.5]), [1.0, -1.0])


class TestToyCorpus:
    def test_counts_ids_labels(self, toy_corpus):
        assert len(toy_corpus) == 40
        ids = [u for u, _, _ in toy_corpus]
        labels = [l for _, l, _ in toy_corpus]
        assert ids[0] == "spk0_utt00"
        assert ids[-1] == "spk3_utt09"
        assert len(set(ids)) == 40
        assert sorted(set(labels)) == ["spk0", "spk1", "spk2", "spk3"]
        assert all(labels.count(l) == 10 for l in set(labels))

    def test_duration(self):
        corpus = make_toy_corpus(ToyCorpusSpec(duration_seconds=0.5))
        assert corpus[0].samples.size == 8000

    def test_deterministic(self):
        a = make_toy_corpus(ToyCorpusSpec(seed=7))
        b = make_toy_corpus(ToyCorpusSpec(seed=7))
        for ua, ub in zip(a, b):
            assert np.array_equal(ua.samples, ub.samples)

    def test_seeds_differ(self):
        a = make_toy_corpus(ToyCorpusSpec(seed=0))
        b = make_toy_corpus(ToyCorpusSpec(seed=1))
        assert not np.array_equal(a[0].samples, b[0].samples)

    def test_samples_quantized_and_bounded(self, toy_corpus):
        for _, _, x in toy_corpus:
            assert np.max(np.abs(x)) <= 1.0
            assert np.array_equal(x, quantize_to_int16_grid(x))

    def test_snr_calibration(self, toy_corpus):
        # two 0.4-amplitude tones carry power 0.16; at 20 dB SNR the noise
        # variance is 0.0016, so the excess variance should sit near that
        excess = np.mean([np.var(x) for _, _, x in toy_corpus]) - 0.16
        assert 0.0008 < excess < 0.0032

    def test_snr_scales_noise(self):
        loud = make_toy_corpus(ToyCorpusSpec(num_speakers=2,
                                             utterances_per_speaker=2,
                                             duration_seconds=0.25, snr_db=0.0))
        quiet = make_toy_corpus(ToyCorpusSpec(num_speakers=2,
                                              utterances_per_speaker=2,
                                              duration_seconds=0.25,
                                              snr_db=20.0))
        assert (np.var(loud[0].samples) - 0.16
                > 10 * (np.var(quiet[0].samples) - 0.16))

    def test_spec_validation(self):
        with pytest.raises(ConfigError):
            ToyCorpusSpec(num_speakers=1)
        with pytest.raises(ConfigError):
            ToyCorpusSpec(utterances_per_speaker=0)
        with pytest.raises(ConfigError):
            ToyCorpusSpec(duration_seconds=0.0)


class TestManifest:
    def test_write_and_load_round_trip(self, tmp_path):
        corpus = make_toy_corpus(ToyCorpusSpec(num_speakers=2,
                                               utterances_per_speaker=2,
                                               duration_seconds=0.2))
        manifest = write_corpus(corpus, tmp_path / "corpus")
        with open(manifest) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["path", "label"]
        assert len(rows) == 5
        back = load_manifest(manifest)
        assert len(back) == 4
        for orig, loaded in zip(corpus, back):
            assert loaded.utt_id == orig.utt_id
            assert loaded.label == orig.label
            assert np.array_equal(loaded.samples, orig.samples)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "manifest.csv"
        path.write_text("file,speaker\na.wav,spk0\n")
        with pytest.raises(InputError, match="header"):
            load_manifest(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError):
            load_manifest(str(tmp_path / "nope.csv"))

    def test_malformed_row(self, tmp_path):
        path = tmp_path / "manifest.csv"
        path.write_text("path,label\nonlyonefield\n")
        with pytest.raises(InputError, match="row"):
            load_manifest(str(path))

    def test_empty_manifest(self, tmp_path):
        path = tmp_path / "manifest.csv"
        path.write_text("path,label\n")
        with pytest.raises(InputError, match="no utterances"):
            load_manifest(str(path))
