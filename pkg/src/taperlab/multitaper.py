"""Sine-taper banks and the weighted multi-taper power-spectrum estimator.

A taper bank holds K tapers w_j (fixed length-N sequences) and a weight
vector lambda. The estimate for a frame x is the weighted sum of the K
single-taper power spectra (sub-spectra)

    S(f) = sum_j lambda(j) * | sum_t w_j(t) x(t) exp(-i 2 pi t f / N_FFT) |^2.

The single-window estimator is the special case K=1, lambda=[1].

The sine bank uses tapers

    w_j[i] = sqrt(2/(N+1)) * sin(2 pi j (i+1) / (N+1)),   i = 0..N-1, j = 1..K,

an exactly orthonormal family (the sine's period-start point is zero, so the
grid i+1 = 1..N covers a full period minus a zero sample), with closed-form
weights

    lambda(j) = sin(2 pi j/(N+1)) / sum_{k=0..K} sin(2 pi k/(N+1)).

The k=0 denominator term is zero, so the weights sum to one by construction.
"""

import json
from dataclasses import dataclass

import numpy as np

from .dsp import make_window, real_dft_power
from .errors import ConfigError, ShapeError

BANK_KINDS = ("swce", "single_hamming", "rectangular", "custom")


@dataclass(frozen=True, eq=False)
class TaperBank:
    """K tapers of length N plus their combination weights.

    Immutable; weights must be strictly positive (estimates are convex-ish
    combinations of nonnegative sub-spectra, and serialized banks always
    carry positive weights).
    """

    kind: str
    tapers: np.ndarray   # (K, N)
    weights: np.ndarray  # (K,)

    def __post_init__(self):
        object.__setattr__(self, "tapers",
                           np.asarray(self.tapers, dtype=np.float64))
        object.__setattr__(self, "weights",
                           np.asarray(self.weights, dtype=np.float64))
        if self.kind not in BANK_KINDS:
            raise ConfigError(f"unknown bank kind {self.kind!r}")
        if self.tapers.ndim != 2 or self.weights.ndim != 1:
            raise ShapeError("tapers must be (K, N) and weights (K,)")
        if self.tapers.shape[0] != self.weights.shape[0]:
            raise ShapeError(
                f"{self.tapers.shape[0]} tapers but {self.weights.shape[0]} weights")
        if self.tapers.shape[0] < 1:
            raise ConfigError("bank needs at least one taper")
        if not (np.all(np.isfinite(self.tapers))
                and np.all(np.isfinite(self.weights))):
            raise ConfigError("tapers and weights must be finite")
        if np.any(self.weights <= 0):
            raise ConfigError("taper weights must be strictly positive")

    @property
    def num_tapers(self):
        return self.tapers.shape[0]

    @property
    def frame_length(self):
        return self.tapers.shape[1]


def swce_weights(num_tapers, frame_length):
    """Closed-form sine weights lambda(1..K); strictly positive, sum to 1."""
    k_all = np.arange(0, num_tapers + 1)
    den = np.sum(np.sin(2.0 * np.pi * k_all / (frame_length + 1)))
    j = np.arange(1, num_tapers + 1)
    return np.sin(2.0 * np.pi * j / (frame_length + 1)) / den


def make_swce_bank(num_tapers, frame_length):
    """Build the sine taper bank with closed-form weights.

    Parameters
    ----------
    num_tapers : int
        K >= 1. Must satisfy K < (N+1)/2; beyond that the sine tapers alias
        (taper j and N+1-j coincide up to sign) and the weights stop being
        positive.
    frame_length : int
        N >= 2.

    Returns
    -------
    TaperBank with kind 'swce'.
    """
    if frame_length < 2:
        raise ConfigError(f"frame_length must be >= 2, got {frame_length}")
    if num_tapers < 1:
        raise ConfigError(f"num_tapers must be >= 1, got {num_tapers}")
    if num_tapers >= (frame_length + 1) / 2:
        raise ConfigError(
            f"degenerate taper bank: K={num_tapers} >= (N+1)/2 with N={frame_length} "
            "(sine tapers alias)")
    n1 = frame_length + 1
    i = np.arange(1, frame_length + 1)          # grid 1..N; the 0 sample of the
    j = np.arange(1, num_tapers + 1)[:, None]   # sine family is identically zero
    tapers = np.sqrt(2.0 / n1) * np.sin(2.0 * np.pi * j * i / n1)
    return TaperBank("swce", tapers, swce_weights(num_tapers, frame_length))


def make_single_hamming_bank(frame_length):
    """Package the single Hamming window as a K=1 bank (the baseline estimator)."""
    return TaperBank("single_hamming",
                     make_window("hamming", frame_length)[None, :],
                     np.array([1.0]))


def make_rectangular_bank(frame_length):
    """K=1 bank with no windowing at all (plain periodogram)."""
    return TaperBank("rectangular",
                     make_window("rectangular", frame_length)[None, :],
                     np.array([1.0]))


def bank_at_frame_length(bank, frame_length):
    """Re-express a bank at a different taper length, keeping its weights.

    The kind names the taper family, so sine banks (including trained ones,
    whose weights are no longer the closed form) are regenerated at the new
    length; custom banks cannot be.
    """
    if bank.frame_length == frame_length:
        return bank
    if bank.kind == "swce":
        fresh = make_swce_bank(bank.num_tapers, frame_length)
        return TaperBank("swce", fresh.tapers, bank.weights)
    if bank.kind == "single_hamming":
        return make_single_hamming_bank(frame_length)
    if bank.kind == "rectangular":
        return make_rectangular_bank(frame_length)
    raise ConfigError(
        f"cannot rebuild a custom bank at frame length {frame_length}")


def taper_orthonormality_check(bank):
    """Max deviation of the bank's tapers from orthonormality.

    Returns max(|<w_j, w_k>| for j != k, |<w_j, w_j> - 1|), computed by
    direct inner products.
    """
    gram = bank.tapers @ bank.tapers.T
    dev_diag = np.max(np.abs(np.diag(gram) - 1.0))
    if bank.num_tapers == 1:
        return float(dev_diag)
    off = gram - np.diag(np.diag(gram))
    return float(max(dev_diag, np.max(np.abs(off))))


def sub_spectra(frame, bank, n_fft):
    """Per-taper power spectra P_j, uncombined.

    Returns
    -------
    ndarray, shape (K, n_fft//2 + 1)
        The linear basis the estimator (and the weight optimizer)
        combines: S = sum_j lambda(j) P_j.
    """
    x = np.asarray(frame, dtype=np.float64)
    if x.ndim != 1 or x.size != bank.frame_length:
        raise ShapeError(
            f"frame length {x.size} does not match bank taper length {bank.frame_length}")
    return np.stack([real_dft_power(x, t, n_fft) for t in bank.tapers])


def combine_sub_spectra(spectra, weights):
    """Weighted sum sum_j weights[j] * spectra[j].

    Accumulation runs in taper order so results are bit-identical to
    multitaper_power on the same sub-spectra. Weights may be any reals here;
    the training loop uses this with unconstrained weights.
    """
    spectra = np.asarray(spectra)
    out = weights[0] * spectra[0]
    for j in range(1, len(weights)):
        out = out + weights[j] * spectra[j]
    return out


def multitaper_power(frame, bank, n_fft):
    """Weighted multi-taper power-spectrum estimate of one frame.

    Parameters
    ----------
    frame : 1-D array_like, length matching the bank's tapers
    bank : TaperBank
    n_fft : int

    Returns
    -------
    ndarray, shape (n_fft//2 + 1,)
    """
    if np.any(bank.weights <= 0):
        raise ConfigError("estimator weights must be strictly positive")
    return combine_sub_spectra(sub_spectra(frame, bank, n_fft), bank.weights)


def bank_to_dict(bank):
    return {
        "kind": bank.kind,
        "K": int(bank.num_tapers),
        "N": int(bank.frame_length),
        "weights": bank.weights.tolist(),
        "tapers": bank.tapers.tolist(),
    }


def bank_from_dict(doc):
    try:
        kind = doc["kind"]
        k = int(doc["K"])
        n = int(doc["N"])
        weights = np.asarray(doc["weights"], dtype=np.float64)
        tapers = np.asarray(doc["tapers"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed taper bank document: {exc}") from exc
    if tapers.shape != (k, n):
        raise ConfigError(
            f"taper bank declares K={k}, N={n} but tapers have shape {tapers.shape}")
    return TaperBank(kind, tapers, weights)


def save_bank(bank, path):
    """Write a bank as JSON. Floats round-trip at full double precision."""
    with open(path, "w") as fh:
        json.dump(bank_to_dict(bank), fh)
        fh.write("\n")


def load_bank(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"taper bank file {path} is not valid JSON: {exc}") from exc
    return bank_from_dict(doc)
