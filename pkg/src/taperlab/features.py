"""Mel filterbank, log compression, and DCT: MFCCs from any power spectrum.

The pipeline is c = DCT-II_ortho(log(max(Fb @ S, log_floor)))[:num_ceps],
with coefficient 0 retained. The forward pass is differentiable with
respect to the spectrum values; the backward pass uses a zero subgradient
at floored filter energies.
"""

import hashlib
import json
import struct
from dataclasses import dataclass, replace

import numpy as np
import scipy.fft

from .dsp import frame_signal
from .errors import ConfigError, InputError, ShapeError
from .multitaper import bank_to_dict, make_single_hamming_bank, multitaper_power

TPLF_MAGIC = b"TPLF"
TPLF_VERSION = 1
_TPLF_HEADER = struct.Struct("<4sIII32s")


def hz_to_mel(f):
    """Mel scale, mel(f) = 2595 log10(1 + f/700)."""
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


@dataclass(frozen=True, eq=False)
class MelFilterbank:
    """Triangular mel filters sampled at the FFT bin centers.

    matrix is (num_filters, n_fft//2 + 1), nonnegative, each row with
    contiguous support; centers_hz are the triangle apexes.
    """

    matrix: np.ndarray
    centers_hz: np.ndarray
    f_low: float
    f_high: float

    @property
    def num_filters(self):
        return self.matrix.shape[0]

    @property
    def num_bins(self):
        return self.matrix.shape[1]


@dataclass(frozen=True)
class FeatureConfig:
    """Everything the front end needs, including which estimator to use.

    estimator=None means the single-Hamming baseline at frame_length.
    """

    sample_rate: int = 16000
    frame_length: int = 400
    frame_shift: int = 160
    n_fft: int = 512
    num_filters: int = 40
    num_ceps: int = 40
    f_low: float = 20.0
    f_high: float = 7600.0
    log_floor: float = 1e-10
    pre_emphasis: float = 0.0
    dither: float = 0.0
    dither_seed: int = 0
    estimator: object = None  # TaperBank or None

    def __post_init__(self):
        if self.num_ceps > self.num_filters:
            raise ConfigError(
                f"num_ceps {self.num_ceps} exceeds num_filters {self.num_filters}")
        if self.log_floor <= 0:
            raise ConfigError("log_floor must be positive")
        if self.n_fft < self.frame_length:
            raise ConfigError(
                f"n_fft {self.n_fft} shorter than frame_length {self.frame_length}")

    def resolve_bank(self):
        if self.estimator is None:
            return make_single_hamming_bank(self.frame_length)
        if self.estimator.frame_length != self.frame_length:
            raise ConfigError(
                f"estimator tapers have length {self.estimator.frame_length}, "
                f"config frame_length is {self.frame_length}")
        return self.estimator

    def with_estimator(self, bank):
        return replace(self, estimator=bank)


def config_hash(config):
    """Hex sha256 over the canonical JSON form of the config.

    The estimator is resolved first, so None and an explicit Hamming bank
    hash identically.
    """
    doc = {
        "sample_rate": config.sample_rate,
        "frame_length": config.frame_length,
        "frame_shift": config.frame_shift,
        "n_fft": config.n_fft,
        "num_filters": config.num_filters,
        "num_ceps": config.num_ceps,
        "f_low": config.f_low,
        "f_high": config.f_high,
        "log_floor": config.log_floor,
        "pre_emphasis": config.pre_emphasis,
        "dither": config.dither,
        "dither_seed": config.dither_seed,
        "estimator": bank_to_dict(config.resolve_bank()),
    }
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def make_mel_filterbank(config):
    """Triangular filters with centers uniformly spaced on the mel scale.

    Edges run from f_low to f_high with num_filters + 2 mel-uniform points;
    triangle m rises over (edge[m], edge[m+1]) and falls over
    (edge[m+1], edge[m+2]), evaluated at the FFT bin centers.

    Raises
    ------
    ConfigError
        Band edges out of range, or num_filters too large for n_fft
        (some filter covers no bin).
    """
    sr = config.sample_rate
    if not (0 <= config.f_low < config.f_high <= sr / 2):
        raise ConfigError(
            f"need 0 <= f_low < f_high <= sample_rate/2, "
            f"got f_low={config.f_low}, f_high={config.f_high}, sample_rate={sr}")
    num_bins = config.n_fft // 2 + 1
    edges = mel_to_hz(np.linspace(hz_to_mel(config.f_low), hz_to_mel(config.f_high),
                                  config.num_filters + 2))
    f_k = np.arange(num_bins) * (sr / config.n_fft)
    lo = edges[:-2, None]
    mid = edges[1:-1, None]
    hi = edges[2:, None]
    rising = (f_k[None, :] - lo) / (mid - lo)
    falling = (hi - f_k[None, :]) / (hi - mid)
    matrix = np.maximum(0.0, np.minimum(rising, falling))
    if np.any(matrix.sum(axis=1) <= 0):
        raise ConfigError(
            f"{config.num_filters} filters is too many for n_fft={config.n_fft} "
            "at this sample rate (empty filter)")
    return MelFilterbank(matrix, edges[1:-1].copy(), config.f_low, config.f_high)


@dataclass(frozen=True, eq=False)
class MfccCache:
    """Intermediates kept by mfcc_forward for the backward pass."""

    energies: np.ndarray  # floored filter energies, shape (..., num_filters)
    active: np.ndarray    # True where the energy was above the floor


def _check_spectrum(spectrum, fb):
    s = np.asarray(spectrum, dtype=np.float64)
    if s.ndim not in (1, 2) or s.shape[-1] != fb.num_bins:
        raise ShapeError(
            f"spectrum shape {s.shape} does not match filterbank bins {fb.num_bins}")
    return s


def mfcc_forward(spectrum, fb, num_ceps, log_floor):
    """MFCCs plus the cache needed to backpropagate to the spectrum.

    Accepts a single spectrum (num_bins,) or a stack (frames, num_bins).
    """
    if num_ceps > fb.num_filters:
        raise ConfigError(
            f"num_ceps {num_ceps} exceeds num_filters {fb.num_filters}")
    s = _check_spectrum(spectrum, fb)
    energies = s @ fb.matrix.T
    active = energies > log_floor
    energies = np.maximum(energies, log_floor)
    ceps = scipy.fft.dct(np.log(energies), type=2, norm="ortho", axis=-1)
    return ceps[..., :num_ceps], MfccCache(energies, active)


def mfcc(spectrum, fb, num_ceps=40, log_floor=1e-10):
    """Cepstra c = DCT-II_ortho(log(max(Fb @ S, log_floor)))[:num_ceps]."""
    return mfcc_forward(spectrum, fb, num_ceps, log_floor)[0]


def mfcc_backward(grad_ceps, cache, fb):
    """Pull a cepstral gradient back to the spectrum.

    The truncation adjoint zero-pads to num_filters, the orthonormal DCT
    adjoint is its inverse, log contributes 1/energy, and floored bins get
    a zero subgradient.
    """
    g = np.asarray(grad_ceps, dtype=np.float64)
    pad = fb.num_filters - g.shape[-1]
    if pad < 0:
        raise ShapeError(
            f"gradient has {g.shape[-1]} coefficients, filterbank {fb.num_filters}")
    if pad:
        width = [(0, 0)] * (g.ndim - 1) + [(0, pad)]
        g = np.pad(g, width)
    grad_log = scipy.fft.idct(g, type=2, norm="ortho", axis=-1)
    grad_energy = np.where(cache.active, grad_log / cache.energies, 0.0)
    return grad_energy @ fb.matrix


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Per-utterance MFCCs tagged with their source and producing config."""

    data: np.ndarray      # (frames, num_ceps)
    source_id: str
    config_hash: str      # hex sha256 of the producing FeatureConfig

    def __post_init__(self):
        object.__setattr__(self, "data", np.asarray(self.data, dtype=np.float64))
        if self.data.ndim != 2:
            raise ShapeError(f"feature matrix must be 2-D, got {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise InputError(f"non-finite features for {self.source_id!r}")

    @property
    def num_frames(self):
        return self.data.shape[0]

    @property
    def num_ceps(self):
        return self.data.shape[1]


def extract_utterance(signal, config, source_id=""):
    """Frame, estimate per-frame power spectra, and take MFCCs.

    Returns a FeatureMatrix of shape (frames, config.num_ceps). Framing
    errors (too-short signal, bad shapes) propagate.
    """
    bank = config.resolve_bank()
    fb = make_mel_filterbank(config)
    frames = frame_signal(signal, config.frame_length, config.frame_shift,
                          pre_emphasis=config.pre_emphasis,
                          dither=config.dither, dither_seed=config.dither_seed)
    spectra = np.stack([multitaper_power(f, bank, config.n_fft) for f in frames])
    ceps = mfcc(spectra, fb, config.num_ceps, config.log_floor)
    return FeatureMatrix(ceps, source_id, config_hash(config))


def save_features_csv(fm, path):
    """One frame per row, comma separated, no header; %.17g round-trips doubles."""
    np.savetxt(path, fm.data, fmt="%.17g", delimiter=",")


def load_features_csv(path, source_id="", config_hash=""):
    data = np.loadtxt(path, delimiter=",", ndmin=2)
    return FeatureMatrix(data, source_id, config_hash)


def save_features_tplf(fm, path):
    """Binary container: TPLF header then row-major float64, little-endian.

    Header fields: magic, version, frames, dims, raw 32-byte config hash.
    """
    digest = bytes.fromhex(fm.config_hash) if fm.config_hash else bytes(32)
    if len(digest) != 32:
        raise ConfigError("config_hash must be 32 bytes of hex (or empty)")
    header = _TPLF_HEADER.pack(TPLF_MAGIC, TPLF_VERSION,
                               fm.num_frames, fm.num_ceps, digest)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(fm.data.astype("<f8").tobytes(order="C"))


def load_features_tplf(path, source_id=""):
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _TPLF_HEADER.size:
        raise InputError(f"{path} is too short to be a TPLF file")
    magic, version, frames, dims, digest = _TPLF_HEADER.unpack_from(blob)
    if magic != TPLF_MAGIC:
        raise InputError(f"{path} has bad magic {magic!r}")
    if version != TPLF_VERSION:
        raise InputError(f"{path} has unsupported version {version}")
    body = blob[_TPLF_HEADER.size:]
    expected = frames * dims * 8
    if len(body) != expected:
        raise InputError(
            f"{path} payload is {len(body)} bytes, header implies {expected}")
    data = np.frombuffer(body, dtype="<f8").reshape(frames, dims)
    return FeatureMatrix(data.copy(), source_id, digest.hex())
