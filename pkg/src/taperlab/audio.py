"""WAV I/O and a synthetic two-formant toy corpus.

The package reads exactly one wire format: 16-bit PCM, mono, 16 kHz.
Anything else is rejected rather than resampled, so feature files never
silently mix sample rates.

The toy corpus gives each speaker a fixed pair of formant-like tones
(f1 in 300..900 Hz, f2 in 1000..2400 Hz); utterances jitter the tones by
up to 50 Hz, randomize phases, and add white noise at a target SNR.
Samples are quantized to the int16 grid at generation time, so a clip
written to WAV and read back is bit-identical to the in-memory version.
"""

import csv
import os
import wave
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InputError

REQUIRED_RATE = 16000


def read_wav(path):
    """Strict reader: returns (samples in [-1, 1], sample_rate).

    Raises InputError for anything but 16-bit PCM mono 16 kHz.
    """
    try:
        with wave.open(path, "rb") as wav:
            channels = wav.getnchannels()
            width = wav.getsampwidth()
            rate = wav.getframerate()
            frames = wav.readframes(wav.getnframes())
    except (wave.Error, EOFError) as exc:
        raise InputError(f"{path}: not a readable PCM WAV file ({exc})") from exc
    if channels != 1:
        raise InputError(f"{path}: expected mono, got {channels} channels")
    if width != 2:
        raise InputError(f"{path}: expected 16-bit samples, got {8 * width}-bit")
    if rate != REQUIRED_RATE:
        raise InputError(f"{path}: expected {REQUIRED_RATE} Hz, got {rate} Hz")
    samples = np.frombuffer(frames, dtype="<i2").astype(np.float64) / 32767.0
    return samples, rate


def write_wav(path, samples, sample_rate=REQUIRED_RATE):
    """Write float samples in [-1, 1] as 16-bit PCM mono."""
    x = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    ints = np.round(x * 32767.0).astype("<i2")
    with wave.open(path, "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(sample_rate)
        wav.writeframes(ints.tobytes())


def quantize_to_int16_grid(samples):
    x = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    return np.round(x * 32767.0) / 32767.0


@dataclass(frozen=True)
class ToyCorpusSpec:
    num_speakers: int = 4
    utterances_per_speaker: int = 10
    duration_seconds: float = 1.0
    sample_rate: int = REQUIRED_RATE
    snr_db: float = 20.0
    seed: int = 0

    def __post_init__(self):
        if self.num_speakers < 2:
            raise ConfigError(
                f"need at least 2 speakers, got {self.num_speakers}")
        if self.utterances_per_speaker < 1:
            raise ConfigError("need at least 1 utterance per speaker")
        if self.duration_seconds <= 0:
            raise ConfigError("duration must be positive")


@dataclass(frozen=True, eq=False)
class CorpusUtterance:
    utt_id: str
    label: str
    samples: np.ndarray

    def as_tuple(self):
        return self.utt_id, self.label, self.samples


def make_toy_corpus(spec):
    """Deterministic synthetic speakers; returns a list of CorpusUtterance."""
    rng = np.random.default_rng(spec.seed)
    f1 = rng.uniform(300.0, 900.0, spec.num_speakers)
    f2 = rng.uniform(1000.0, 2400.0, spec.num_speakers)
    n = int(round(spec.duration_seconds * spec.sample_rate))
    t = np.arange(n) / spec.sample_rate
    tone_amp = 0.4
    # two tones at amp 0.4 carry power 2 * amp^2 / 2 = 0.16
    noise_sigma = np.sqrt(2 * tone_amp ** 2 / 2 / 10.0 ** (spec.snr_db / 10.0))
    corpus = []
    for s in range(spec.num_speakers):
        for u in range(spec.utterances_per_speaker):
            jitter = rng.uniform(-50.0, 50.0, 2)
            phase = rng.uniform(0.0, 2.0 * np.pi, 2)
            x = tone_amp * np.sin(2 * np.pi * (f1[s] + jitter[0]) * t + phase[0])
            x += tone_amp * np.sin(2 * np.pi * (f2[s] + jitter[1]) * t + phase[1])
            x += noise_sigma * rng.standard_normal(n)
            corpus.append(CorpusUtterance(
                utt_id=f"spk{s}_utt{u:02d}", label=f"spk{s}",
                samples=quantize_to_int16_grid(x)))
    return corpus


def write_corpus(corpus, directory, sample_rate=REQUIRED_RATE):
    """Write one WAV per utterance plus manifest.csv (path,label header).

    Paths in the manifest are relative to the manifest's directory.
    Returns the manifest path.
    """
    os.makedirs(directory, exist_ok=True)
    manifest_path = os.path.join(directory, "manifest.csv")
    with open(manifest_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path", "label"])
        for utt in corpus:
            rel = f"{utt.utt_id}.wav"
            write_wav(os.path.join(directory, rel), utt.samples, sample_rate)
            writer.writerow([rel, utt.label])
    return manifest_path


def load_manifest(manifest_path):
    """Read a path,label manifest and its WAVs into CorpusUtterance objects."""
    base = os.path.dirname(os.path.abspath(manifest_path))
    try:
        with open(manifest_path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header[:2]] != ["path", "label"]:
                raise InputError(
                    f"{manifest_path}: expected a path,label header, got {header}")
            rows = [row for row in reader if row]
    except OSError as exc:
        raise InputError(f"cannot read manifest {manifest_path}: {exc}") from exc
    corpus = []
    for row in rows:
        if len(row) < 2:
            raise InputError(f"{manifest_path}: malformed row {row}")
        rel, label = row[0], row[1]
        samples, _ = read_wav(os.path.join(base, rel))
        utt_id = os.path.splitext(os.path.basename(rel))[0]
        corpus.append(CorpusUtterance(utt_id=utt_id, label=label, samples=samples))
    if not corpus:
        raise InputError(f"{manifest_path}: no utterances listed")
    return corpus
