"""Conditional-VAE core: encoders, FLE-shared flow, PPG predictor, iSTFT decoder.

Latents are channel-first ``[latent_dim, N]`` internally; public functions
take and return frame-major ``[N, latent_dim]`` like the PPG.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .config import ModelConfig
from .dsp import ComplexSpectrum, istft
from .dual import value_of
from .nn_blocks import ParamView, fft_block, wn_stack
from .numerics import Rng, check_finite, conv1d, leaky_relu, linear, relu


@dataclass
class GaussianParams:
    mu: np.ndarray          # [N, latent]
    log_sigma: np.ndarray   # [N, latent]

    @property
    def sigma(self):
        return np.exp(self.log_sigma)


def _check_dim(x, dim, what):
    if x.ndim != 2 or x.shape[1] != dim:
        raise ValueError(f"{what}: expected [N, {dim}], got {tuple(x.shape)}")


def _split_stats(stats, latent):
    return GaussianParams(stats[:, :latent], stats[:, latent:])


# ---------------------------------------------------------------------------
# encoders


def posterior_encode(linspec, weights, cfg: ModelConfig, rng: Optional[Rng] = None,
                     noise=None):
    """Linear spectrogram ``[F, N]`` -> ``(z [N, L], posterior)``.

    ``z = mu + sigma * eps`` with ``eps`` drawn from ``rng`` (or given as
    ``noise``); ``z == mu`` when neither is supplied.
    """
    if linspec.ndim != 2 or linspec.shape[0] != cfg.n_bins:
        raise ValueError(f"posterior_encode: expected {cfg.n_bins} bins, got {linspec.shape[0]}")
    p = ParamView(weights, "post")
    h = conv1d(linspec, p["pre.weight"], p["pre.bias"])
    h = wn_stack(h, None, p.sub("wn"), cfg.post_wn_layers)
    stats = conv1d(h, p["proj.weight"], p["proj.bias"]).T
    post = _split_stats(stats, cfg.latent_dim)
    if noise is None and rng is not None:
        noise = rng.normal(post.mu.shape, dtype=value_of(post.mu).dtype)
    z = post.mu if noise is None else post.mu + post.sigma * noise
    return check_finite(z, "posterior encoder"), post


def prior_encode(ppg, speaker, weights, cfg: ModelConfig) -> GaussianParams:
    _check_dim(ppg, cfg.ppg_dim, "prior_encode ppg")
    if speaker.shape != (cfg.speaker_dim,):
        raise ValueError(f"speaker embedding must have shape ({cfg.speaker_dim},)")
    p = ParamView(weights, "prior")
    x = linear(ppg, p["in.weight"], p["in.bias"]) + linear(speaker, p["spk.weight"], p["spk.bias"])
    for i in range(cfg.prior_layers):
        x = fft_block(x, p.sub(f"fft.{i}"), cfg.n_heads, cfg.attention_kind)
    stats = linear(x, p["out.weight"], p["out.bias"])
    return _split_stats(check_finite(stats, "prior encoder"), cfg.latent_dim)


def ppg_predict(z, weights, cfg: ModelConfig):
    _check_dim(z, cfg.latent_dim, "ppg_predict")
    p = ParamView(weights, "ppgp")
    y = z.T
    for j in range(cfg.ppgp_layers):
        y = relu(conv1d(y, p[f"conv.{j}.weight"], p[f"conv.{j}.bias"]))
    return check_finite(linear(y.T, p["proj.weight"], p["proj.bias"]), "ppg predictor")


# ---------------------------------------------------------------------------
# flow


def _coupling_view(weights, cfg: ModelConfig, k: int):
    if cfg.share_flow:
        return ParamView(weights, "flow.shared"), weights["flow.fle"][k]
    return ParamView(weights, f"flow.{k}"), None


def coupling_shift(x0, weights, cfg: ModelConfig, k: int):
    """Shift predicted for the second half from the first half ``x0`` ``[L/2, N]``."""
    p, fle = _coupling_view(weights, cfg, k)
    h = conv1d(x0, p["pre.weight"], p["pre.bias"])
    h = wn_stack(h, fle, p.sub("wn"), cfg.flow_wn_layers)
    return conv1d(h, p["post.weight"], p["post.bias"])


def coupling_step(x, weights, cfg: ModelConfig, k: int, reverse: bool = False):
    """One mean-only affine coupling on channel-first ``x`` ``[L, N]``."""
    half = cfg.latent_dim // 2
    x0, x1 = x[:half], x[half:]
    m = coupling_shift(x0, weights, cfg, k)
    x1 = x1 - m if reverse else x1 + m
    return np.concatenate([x0, x1], axis=0)


def _flip(x):
    return x[::-1]


def flow_forward(z, weights, cfg: ModelConfig, g=None, return_intermediates: bool = False):
    """``f(z)`` and its log-determinant (identically 0 for shift-only couplings).

    Layer ``k`` applies the coupling (sharing weights across layers when
    ``share_flow``, distinguished by FLE row ``k``) followed by a channel flip.
    ``g`` is accepted for interface symmetry; the flow is not
    speaker-conditioned.
    """
    _check_dim(z, cfg.latent_dim, "flow_forward")
    if g is not None:
        raise ValueError("the flow takes no speaker conditioning")
    x = z.T
    steps = []
    for k in range(cfg.n_couplings):
        x = _flip(coupling_step(x, weights, cfg, k))
        steps.append(x.T)
    log_det = 0.0
    if return_intermediates:
        return x.T, log_det, steps
    return x.T, log_det


def flow_inverse(fz, weights, cfg: ModelConfig, g=None):
    _check_dim(fz, cfg.latent_dim, "flow_inverse")
    if g is not None:
        raise ValueError("the flow takes no speaker conditioning")
    x = fz.T
    for k in reversed(range(cfg.n_couplings)):
        x = coupling_step(_flip(x), weights, cfg, k, reverse=True)
    return x.T


# ---------------------------------------------------------------------------
# decoder


def decode_spectrum(z, speaker, weights, cfg: ModelConfig) -> ComplexSpectrum:
    _check_dim(z, cfg.latent_dim, "decode")
    if speaker.shape != (cfg.speaker_dim,):
        raise ValueError(f"speaker embedding must have shape ({cfg.speaker_dim},)")
    if cfg.decoder_kind != "istft":
        raise NotImplementedError("the upsampling baseline decoder exists only as a cost model")
    p = ParamView(weights, "dec")
    x = (z + linear(speaker, p["spk.weight"], p["spk.bias"])).T       # [L, N]
    for i, (sg, rg) in enumerate(zip(cfg.dec_stage_groups, cfg.dec_res_groups)):
        if i > 0:
            x = leaky_relu(x, 0.1)
        x = conv1d(x, p[f"stage.{i}.weight"], p[f"stage.{i}.bias"], groups=sg)
        r = conv1d(leaky_relu(x, 0.1), p[f"res.{i}.conv1.weight"], p[f"res.{i}.conv1.bias"],
                   groups=rg)
        r = conv1d(leaky_relu(r, 0.1), p[f"res.{i}.conv2.weight"], p[f"res.{i}.conv2.bias"],
                   groups=rg)
        x = x + r
    f = cfg.n_bins
    return ComplexSpectrum(x[:f], x[f:], cfg.stft)


def decode(z, speaker, weights, cfg: ModelConfig):
    """Latent ``[N, L]`` -> waveform of exactly ``N * hop`` samples."""
    spec = decode_spectrum(z, speaker, weights, cfg)
    wave = istft(spec, target_len=z.shape[0] * cfg.hop)
    return check_finite(wave, "decoder")


# ---------------------------------------------------------------------------
# inference


def speaker_embedding(weights, speaker_id: int):
    table = weights["speaker.table"]
    if not 0 <= int(speaker_id) < table.shape[0]:
        raise ValueError(f"unknown speaker id {speaker_id} (table has {table.shape[0]})")
    return table[int(speaker_id)]


def synthesize(ppg, speaker_id: int, weights, cfg: ModelConfig, temperature: float = 0.667,
               seed: int = 0):
    """PPG ``[N, ppg_dim]`` -> waveform of ``N * hop`` samples.

    prior -> ``z_p = mu + temperature * sigma * eps`` -> inverse flow -> decoder.
    """
    if temperature < 0:
        raise ValueError("temperature must be >= 0")
    spk = speaker_embedding(weights, speaker_id)
    prior = prior_encode(ppg, spk, weights, cfg)
    if temperature == 0:
        z_p = prior.mu
    else:
        eps = Rng(seed).normal(prior.mu.shape, dtype=value_of(prior.mu).dtype)
        z_p = prior.mu + temperature * prior.sigma * eps
    z = flow_inverse(z_p, weights, cfg)
    return decode(z, spk, weights, cfg)
