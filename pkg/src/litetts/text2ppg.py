"""Phoneme ids -> frame-level PPG.

embedding + sinusoidal positions -> FFT blocks -> duration predictor ->
length regulator -> residual post-net -> linear projection to ``ppg_dim``.
Nothing in this path depends on the speaker.
"""
from __future__ import annotations

import functools
from typing import Optional, Sequence

import numpy as np

from .config import ModelConfig
from .dual import value_of
from .nn_blocks import ParamView, fft_block
from .numerics import check_finite, conv1d, layer_norm, linear, relu


@functools.lru_cache(maxsize=8)
def position_table(n: int, d: int) -> np.ndarray:
    pos = np.arange(n)[:, None]
    i = np.arange(d)[None, :]
    angle = pos / np.power(10000.0, (2 * (i // 2)) / d)
    table = np.where(i % 2 == 0, np.sin(angle), np.cos(angle)).astype(np.float32)
    table.setflags(write=False)
    return table


def validate_ids(ids, vocab_size: int) -> np.ndarray:
    ids = np.asarray(ids)
    if ids.ndim != 1 or ids.size == 0:
        raise ValueError("phoneme sequence must be a non-empty 1-D list of ids")
    if not np.all(ids == np.round(ids)):
        raise ValueError("phoneme ids must be integers")
    ids = ids.astype(np.int64)
    if ids.min() < 0 or ids.max() >= vocab_size:
        raise ValueError(f"phoneme id out of range [0, {vocab_size})")
    return ids


def length_regulate(h, durations: Sequence[int]):
    """Repeat row ``i`` of ``h`` ``durations[i]`` times."""
    durations = np.asarray(durations, dtype=np.int64)
    if durations.shape != (h.shape[0],):
        raise ValueError(f"{durations.shape[0]} durations for {h.shape[0]} tokens")
    if np.any(durations < 0):
        raise ValueError("durations must be non-negative")
    if durations.sum() < 1:
        raise ValueError("durations sum to zero")
    return np.repeat(h, durations, axis=0)


def round_half_up(x):
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5).astype(np.int64)


def predict_durations(h, p: ParamView, cfg: ModelConfig):
    """Integer frame counts per token: ``max(1, round_half_up(exp(log_d)))``."""
    y = h.T
    for j in range(cfg.dur_layers):
        y = relu(conv1d(y, p[f"dur.{j}.weight"], p[f"dur.{j}.bias"]))
        y = layer_norm(y.T, p[f"dur.{j}.ln.gamma"], p[f"dur.{j}.ln.beta"]).T
    log_d = linear(y.T, p["dur.proj.weight"], p["dur.proj.bias"])[:, 0]
    d = round_half_up(np.exp(np.minimum(value_of(log_d).astype(np.float64), 20.0)))
    return [int(v) for v in np.maximum(d, 1)]


def encode(ids, p: ParamView, cfg: ModelConfig):
    ids = validate_ids(ids, cfg.vocab_size)
    x = p["embed"][ids] + position_table(len(ids), cfg.t2p_hidden)
    for i in range(cfg.t2p_layers):
        x = fft_block(x, p.sub(f"fft.{i}"), cfg.n_heads, cfg.attention_kind)
    return x


def postnet(h, p: ParamView, cfg: ModelConfig):
    y = h.T
    for j in range(cfg.postnet_layers):
        y = conv1d(y, p[f"postnet.{j}.weight"], p[f"postnet.{j}.bias"])
        if j < cfg.postnet_layers - 1:
            y = np.tanh(y)
    return h + y.T


def text2ppg_forward(ids, weights, cfg: ModelConfig,
                     durations_override: Optional[Sequence[int]] = None):
    """Returns ``(ppg [N, ppg_dim], durations)`` with ``N == sum(durations)``."""
    p = ParamView(weights, "t2p")
    h = encode(ids, p, cfg)
    if durations_override is None:
        durations = predict_durations(h, p, cfg)
    else:
        durations = [int(d) for d in durations_override]
    frames = length_regulate(h, durations)
    frames = postnet(frames, p, cfg)
    ppg = linear(frames, p["proj.weight"], p["proj.bias"])
    return check_finite(ppg, "text2ppg"), durations
