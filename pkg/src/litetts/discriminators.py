"""Multi-resolution magnitude (MSD) and complex-valued (MCD) spectrum discriminators.

Each sub-discriminator frames the waveform without center padding at its own
(fft, hop, win) resolution and runs a stack of 3x3 convolutions (stride 2 along
time on the middle layers, leaky ReLU) over the frequency x time image,
followed by a 1x1 projection to a score map.  The MCD feeds the real and
imaginary STFT parts through complex convolutions; its leaky ReLU acts on the
two parts separately and its score is the modulus of the final complex map.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List

import numpy as np

from .complexity import disc_strides
from .config import ModelConfig
from .dsp import StftConfig, magnitude, stft
from .nn_blocks import ParamView, complex_conv2d
from .numerics import as_tensor, conv2d, leaky_relu


@dataclass
class DiscOutput:
    scores: List = field(default_factory=list)          # one [H, W] map per sub-discriminator
    features: List[List] = field(default_factory=list)  # per sub-discriminator, per layer

    def __add__(self, other: "DiscOutput") -> "DiscOutput":
        return DiscOutput(self.scores + other.scores, self.features + other.features)

    @property
    def n_features(self) -> int:
        return sum(len(f) for f in self.features)


def _resolutions(cfg: ModelConfig):
    return [StftConfig(fft, hop, win, center=False) for fft, hop, win in cfg.disc_resolutions]


def _check_length(wave, cfg: ModelConfig):
    longest = max(r[0] for r in cfg.disc_resolutions)
    if wave.ndim != 1 or wave.shape[0] < longest:
        raise ValueError(f"waveform shorter than the largest discriminator window ({longest})")


def real_stack(x, p: ParamView, cfg: ModelConfig):
    """Real conv stack on a ``[1, F, N]`` image; returns (score map, features)."""
    feats = []
    pad = cfg.disc_kernel // 2
    for j, stride in enumerate(disc_strides(cfg)):
        x = leaky_relu(conv2d(x, p[f"conv.{j}.weight"], p[f"conv.{j}.bias"], stride=stride,
                              padding=(pad, pad)), cfg.disc_slope)
        feats.append(x)
    score = conv2d(x, p["out.weight"], p["out.bias"])
    feats.append(score)
    return score[0], feats


def complex_stack(x_re, x_im, p: ParamView, cfg: ModelConfig):
    """Complex conv stack; features hold real and imaginary parts stacked on channels."""
    feats = []
    pad = cfg.disc_kernel // 2
    for j, stride in enumerate(disc_strides(cfg)):
        x_re, x_im = complex_conv2d(x_re, x_im, p.sub(f"conv.{j}"), stride=stride,
                                    padding=(pad, pad))
        x_re, x_im = leaky_relu(x_re, cfg.disc_slope), leaky_relu(x_im, cfg.disc_slope)
        feats.append(np.concatenate([x_re, x_im], axis=0))
    s_re, s_im = complex_conv2d(x_re, x_im, p.sub("out"))
    feats.append(np.concatenate([s_re, s_im], axis=0))
    return np.sqrt(s_re[0] * s_re[0] + s_im[0] * s_im[0]), feats


def msd_forward(wave, weights, cfg: ModelConfig) -> DiscOutput:
    wave = as_tensor(wave)
    _check_length(wave, cfg)
    out = DiscOutput()
    for r, res in enumerate(_resolutions(cfg)):
        img = magnitude(stft(wave, res))[None]
        score, feats = real_stack(img, ParamView(weights, f"msd.{r}"), cfg)
        out.scores.append(score)
        out.features.append(feats)
    return out


def mcd_forward(wave, weights, cfg: ModelConfig) -> DiscOutput:
    wave = as_tensor(wave)
    _check_length(wave, cfg)
    out = DiscOutput()
    for r, res in enumerate(_resolutions(cfg)):
        spec = stft(wave, res)
        score, feats = complex_stack(spec.real[None], spec.imag[None],
                                     ParamView(weights, f"mcd.{r}"), cfg)
        out.scores.append(score)
        out.features.append(feats)
    return out
