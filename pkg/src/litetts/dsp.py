"""STFT analysis/synthesis and spectral features at 16 kHz.

Waveforms are 1-D float arrays at :data:`SAMPLE_RATE`.  With the default
configuration (1024-point FFT, 800-sample periodic Hann window, hop 200) the
squared window overlaps to a constant, so ``istft(stft(x))`` reconstructs the
signal up to float rounding.

Framing convention: with ``center=True`` the signal is reflect-padded by
``fft_size // 2`` on both sides and frame ``i`` is centered on sample
``i * hop``; a signal of ``L`` samples gives ``L // hop + 1`` frames (81 for one
second).  ``center=False`` frames start at sample ``i * hop`` and give
``1 + (L - fft_size) // hop`` frames.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .dual import value_of
from .numerics import as_tensor

SAMPLE_RATE = 16000
LOG_FLOOR = 1e-5


@dataclass(frozen=True)
class StftConfig:
    fft_size: int = 1024
    hop: int = 200
    win_length: int = 800
    center: bool = True

    def __post_init__(self):
        if not (0 < self.hop <= self.win_length <= self.fft_size):
            raise ValueError("need 0 < hop <= win_length <= fft_size")

    @property
    def n_bins(self) -> int:
        return self.fft_size // 2 + 1


@dataclass(frozen=True)
class MelConfig:
    n_mels: int = 80
    f_min: float = 0.0
    f_max: float = 8000.0


@dataclass
class ComplexSpectrum:
    real: np.ndarray   # [F, N]
    imag: np.ndarray   # [F, N]
    config: StftConfig

    def __post_init__(self):
        if self.real.shape != self.imag.shape:
            raise ValueError("real and imaginary parts differ in shape")
        if self.real.shape[0] != self.config.n_bins:
            raise ValueError(
                f"{self.real.shape[0]} bins inconsistent with fft_size {self.config.fft_size}"
            )

    @property
    def n_frames(self) -> int:
        return self.real.shape[1]


@functools.lru_cache(maxsize=32)
def window(cfg: StftConfig) -> np.ndarray:
    """Periodic Hann of ``win_length`` zero-padded (centered) to ``fft_size``; float64."""
    n = np.arange(cfg.win_length)
    w = 0.5 - 0.5 * np.cos(2.0 * np.pi * n / cfg.win_length)
    left = (cfg.fft_size - cfg.win_length) // 2
    out = np.zeros(cfg.fft_size)
    out[left:left + cfg.win_length] = w
    out.setflags(write=False)
    return out


def frame_count(n_samples: int, cfg: StftConfig) -> int:
    if cfg.center:
        return n_samples // cfg.hop + 1
    return 1 + (n_samples - cfg.fft_size) // cfg.hop


def stft(wave, cfg: StftConfig = StftConfig()) -> ComplexSpectrum:
    wave = as_tensor(wave)
    if wave.ndim != 1 or wave.shape[0] < 1:
        raise ValueError("stft needs a non-empty 1-D waveform")
    dtype = wave.dtype
    x = wave.astype(np.float64)
    if cfg.center:
        pad = cfg.fft_size // 2
        if x.shape[0] <= pad:
            # reflect needs more samples than the pad width; very short inputs get zeros
            x = np.pad(x, (pad, pad))
        else:
            x = np.pad(x, (pad, pad), mode="reflect")
    elif x.shape[0] < cfg.fft_size:
        raise ValueError(f"signal of {x.shape[0]} samples shorter than fft_size {cfg.fft_size}")
    frames = sliding_window_view(x, cfg.fft_size)[::cfg.hop]       # [N, fft]
    spec = np.fft.rfft(frames * window(cfg), axis=-1)                # [N, F]
    return ComplexSpectrum(np.real(spec).T.astype(dtype), np.imag(spec).T.astype(dtype), cfg)


def istft(spec: ComplexSpectrum, target_len: int | None = None):
    """Weighted overlap-add inverse of :func:`stft` (centered framing)."""
    cfg = spec.config
    if spec.real.shape[0] != cfg.n_bins:
        raise ValueError("spectrum bin count inconsistent with fft_size")
    dtype = spec.real.dtype
    n = spec.n_frames
    re = spec.real.astype(np.float64).T
    im = spec.imag.astype(np.float64).T
    frames = np.fft.irfft(re + 1j * im, n=cfg.fft_size, axis=-1)   # [N, fft]
    win = window(cfg)
    idx = (np.arange(n)[:, None] * cfg.hop + np.arange(cfg.fft_size)).ravel()
    full = (n - 1) * cfg.hop + cfg.fft_size
    y = np.bincount(idx, weights=(frames * win).ravel(), minlength=full)
    wsum = np.bincount(idx, weights=np.tile(win * win, n), minlength=full)
    ok = wsum > 1e-8
    y = np.where(ok, y / np.where(ok, wsum, 1.0), y)
    start = cfg.fft_size // 2 if cfg.center else 0
    if target_len is None:
        target_len = (n - 1) * cfg.hop if cfg.center else full
    y = y[start:start + target_len]
    if y.shape[0] < target_len:
        y = np.pad(y, (0, target_len - y.shape[0]))
    return y.astype(dtype)


def magnitude(spec: ComplexSpectrum):
    return np.sqrt(spec.real * spec.real + spec.imag * spec.imag)


def linear_spectrogram(wave, cfg: StftConfig = StftConfig()):
    return magnitude(stft(wave, cfg))


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m) / 2595.0) - 1.0)


@functools.lru_cache(maxsize=16)
def mel_filterbank(cfg: StftConfig = StftConfig(), mel: MelConfig = MelConfig()) -> np.ndarray:
    """HTK-scale triangular filters with unit peak, shape [n_mels, F] (float64)."""
    freqs = np.linspace(0.0, SAMPLE_RATE / 2, cfg.n_bins)
    pts = mel_to_hz(np.linspace(hz_to_mel(mel.f_min), hz_to_mel(mel.f_max), mel.n_mels + 2))
    lo, mid, hi = pts[:-2, None], pts[1:-1, None], pts[2:, None]
    up = (freqs - lo) / (mid - lo)
    down = (hi - freqs) / (hi - mid)
    fb = np.maximum(0.0, np.minimum(up, down))
    fb.setflags(write=False)
    return fb


def mel_spectrogram(wave, cfg: StftConfig = StftConfig(), mel: MelConfig = MelConfig()):
    """``log(max(M @ |stft|, 1e-5))``, shape [n_mels, N]."""
    mag = linear_spectrogram(wave, cfg)
    fb = mel_filterbank(cfg, mel).astype(value_of(mag).dtype)
    return np.log(np.maximum(fb @ mag, LOG_FLOOR))
