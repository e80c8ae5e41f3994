"""Framing, window generation, and the single-window power spectrum.

The power spectrum of a length-N frame x windowed by w is

    S(f) = | sum_t w(t) x(t) exp(-i 2 pi t f / N_FFT) |^2,   f = 0 .. N_FFT/2,

with the windowed frame zero-padded from N to N_FFT. The transform is
computed with a fast algorithm; the contract is the mathematical definition
and is checked against a direct summation oracle in the tests.
"""

import numpy as np

from .errors import ConfigError, InputError, ShapeError

WINDOW_KINDS = ("hamming", "rectangular")


def make_window(kind, n):
    """Build an analysis window.

    Parameters
    ----------
    kind : str
        'hamming' for w(t) = 0.54 - 0.46 cos(2 pi t / N), t = 0..N-1
        (periodic form, denominator N), or 'rectangular' for all ones.
    n : int
        Window length N.

    Returns
    -------
    ndarray, shape (n,)
    """
    if n < 2:
        raise ConfigError(f"window length must be >= 2, got {n}")
    if kind == "hamming":
        t = np.arange(n)
        return 0.54 - 0.46 * np.cos(2.0 * np.pi * t / n)
    if kind == "rectangular":
        return np.ones(n)
    raise ConfigError(f"unknown window kind {kind!r}; expected one of {WINDOW_KINDS}")


def frame_signal(signal, frame_length, frame_shift, pre_emphasis=0.0,
                 dither=0.0, dither_seed=0):
    """Slice a signal into overlapping frames.

    Frames start every `frame_shift` samples and the trailing partial frame
    is dropped. Optional pre-emphasis (y[t] = x[t] - a x[t-1]) and dither
    (additive white noise of the given amplitude, seeded so extraction stays
    deterministic) are applied to the whole signal before slicing; both
    default to off.

    Parameters
    ----------
    signal : 1-D array_like
    frame_length, frame_shift : int
        In samples. frame_shift must be positive.
    pre_emphasis : float
        Coefficient a in [0, 1); 0 disables.
    dither : float
        Noise amplitude; 0 disables.
    dither_seed : int
        Seed for the dither noise stream.

    Returns
    -------
    ndarray, shape (num_frames, frame_length)
    """
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError(f"signal must be 1-D, got shape {x.shape}")
    if frame_length < 1 or frame_shift < 1:
        raise ConfigError("frame_length and frame_shift must be positive")
    if x.size < frame_length:
        raise InputError(
            f"signal has {x.size} samples, shorter than one frame ({frame_length})")
    if pre_emphasis:
        x = np.concatenate(([x[0]], x[1:] - pre_emphasis * x[:-1]))
    if dither:
        rng = np.random.default_rng(dither_seed)
        x = x + dither * rng.standard_normal(x.size)
    num_frames = (x.size - frame_length) // frame_shift + 1
    idx = (np.arange(num_frames)[:, None] * frame_shift
           + np.arange(frame_length)[None, :])
    return x[idx]


def real_dft_power(frame, window, n_fft):
    """Power spectrum of one windowed frame.

    Parameters
    ----------
    frame : 1-D array_like, length N
    window : 1-D array_like, length N
    n_fft : int
        DFT length; must be >= N. The windowed frame is zero-padded.

    Returns
    -------
    ndarray, shape (n_fft//2 + 1,)
        Nonnegative power at bins 0..n_fft/2 (real-input symmetry).
    """
    x = np.asarray(frame, dtype=np.float64)
    w = np.asarray(window, dtype=np.float64)
    if x.shape != w.shape or x.ndim != 1:
        raise ShapeError(
            f"frame and window must be 1-D with equal length, got {x.shape} vs {w.shape}")
    if n_fft < x.size:
        raise ConfigError(f"n_fft={n_fft} smaller than frame length {x.size}")
    spec = np.fft.rfft(x * w, n=n_fft)
    return np.abs(spec) ** 2
