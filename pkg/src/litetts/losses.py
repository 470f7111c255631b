"""Forward-only training objectives.

CVAE:  L_cvae = L_kl + 45 * L_recon + 10 * L_ppg
G:     L_G    = L_adv(G) + 2 * L_fm + L_cvae
D:     L_D    = L_adv(D)

Adversarial terms are least-squares GAN losses summed over all
sub-discriminators; L1 terms are element means, summed over sub-discriminators
and layers where several are involved.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, Tuple

import numpy as np

from .config import ModelConfig
from .discriminators import DiscOutput, mcd_forward, msd_forward
from .dsp import linear_spectrogram, mel_spectrogram
from .dual import Dual, value_of
from .numerics import Normal, Rng, rng_fill

LAMBDA_RECON = 45.0
LAMBDA_PPG = 10.0
LAMBDA_FM = 2.0


@dataclass(frozen=True)
class LossWeights:
    recon: float = LAMBDA_RECON
    ppg: float = LAMBDA_PPG
    fm: float = LAMBDA_FM


@dataclass
class LossReport:
    L_ppg: float
    L_kl: float
    L_recon: float
    L_cvae: float
    L_adv_G: float
    L_adv_D: float
    L_fm: float
    L_G: float
    L_D: float

    def as_dict(self) -> Dict[str, float]:
        return {k: float(v) for k, v in self.__dict__.items()}


def _mean_abs(a, b):
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return np.mean(np.abs(a - b))


def ppg_loss(ppg_hat, ppg):
    return _mean_abs(ppg_hat, ppg)


def _log_normal(x, mu, log_sigma):
    """Log-density without the shared ``-0.5 log(2 pi)`` constant (it cancels)."""
    return -log_sigma - 0.5 * np.square((x - mu) * np.exp(-log_sigma))


def kl_loss(post, z, fz, log_det, prior):
    """Single-sample KL estimate ``mean(log q(z|y) - log p(f(z)|c)) - log_det / numel``."""
    shapes = {z.shape, fz.shape, post.mu.shape, post.log_sigma.shape, prior.mu.shape,
              prior.log_sigma.shape}
    if len(shapes) != 1:
        raise ValueError(f"kl_loss: shape mismatch {shapes}")
    lq = _log_normal(z, post.mu, post.log_sigma)
    lp = _log_normal(fz, prior.mu, prior.log_sigma)
    return np.mean(lq - lp) - log_det / z.size


def recon_loss(wave_hat, wave_ref, cfg: ModelConfig):
    """Mean L1 between log-mel spectrograms; both waves trimmed to the shorter."""
    if wave_hat.shape[0] == 0 or wave_ref.shape[0] == 0:
        raise ValueError("recon_loss needs non-empty waveforms")
    n = min(wave_hat.shape[0], wave_ref.shape[0])
    a = mel_spectrogram(wave_hat[:n], cfg.stft, cfg.mel)
    b = mel_spectrogram(wave_ref[:n], cfg.stft, cfg.mel)
    return _mean_abs(a, b)


def adv_losses(real_out: DiscOutput, fake_out: DiscOutput):
    """Least-squares GAN terms ``(L_adv_G, L_adv_D)`` summed over sub-discriminators."""
    if len(real_out.scores) != len(fake_out.scores):
        raise ValueError("real and generated outputs have different sub-discriminator counts")
    loss_g, loss_d = 0.0, 0.0
    for dr, dg in zip(real_out.scores, fake_out.scores):
        loss_d = loss_d + np.mean(np.square(dr - 1.0)) + np.mean(np.square(dg))
        loss_g = loss_g + np.mean(np.square(dg - 1.0))
    return loss_g, loss_d


def fm_loss(real_out: DiscOutput, fake_out: DiscOutput):
    if len(real_out.features) != len(fake_out.features):
        raise ValueError("feature lists differ in sub-discriminator count")
    total = 0.0
    for fr, fg in zip(real_out.features, fake_out.features):
        if len(fr) != len(fg):
            raise ValueError("feature lists differ in layer count")
        for a, b in zip(fr, fg):
            total = total + _mean_abs(a, b)
    return total


def total_losses(L_kl, L_recon, L_ppg, L_adv_G, L_adv_D, L_fm,
                 weights: LossWeights = LossWeights()) -> LossReport:
    L_kl, L_recon, L_ppg = float(L_kl), float(L_recon), float(L_ppg)
    L_adv_G, L_adv_D, L_fm = float(L_adv_G), float(L_adv_D), float(L_fm)
    L_cvae = L_kl + weights.recon * L_recon + weights.ppg * L_ppg
    L_G = L_adv_G + weights.fm * L_fm + L_cvae
    return LossReport(L_ppg=L_ppg, L_kl=L_kl, L_recon=L_recon, L_cvae=L_cvae,
                      L_adv_G=L_adv_G, L_adv_D=L_adv_D, L_fm=L_fm, L_G=L_G, L_D=L_adv_D)


# ---------------------------------------------------------------------------
# full evaluation on one utterance


def evaluate_losses(wave, ppg, speaker_id: int, weights, cfg: ModelConfig, seed: int = 0,
                    noise_scale: float = 1.0) -> LossReport:
    """All loss terms for one (waveform, PPG, speaker) example.

    The posterior latent is sampled with ``seed``; the generated waveform is the
    decoder output for that latent.  ``wave`` is trimmed or zero-padded to
    ``len(ppg) * hop`` samples so that frame counts line up.
    """
    from . import ppg2wav

    n = ppg.shape[0]
    target = n * cfg.hop
    wave = wave[:target]
    if wave.shape[0] < target:
        wave = np.pad(wave, (0, target - wave.shape[0]))
    spk = ppg2wav.speaker_embedding(weights, speaker_id)
    linspec = linear_spectrogram(wave, cfg.stft)[:, :n]
    eps = Rng(seed).normal((n, cfg.latent_dim), dtype=value_of(linspec).dtype) * noise_scale
    z, post = ppg2wav.posterior_encode(linspec, weights, cfg, noise=eps)
    fz, log_det = ppg2wav.flow_forward(z, weights, cfg)
    prior = ppg2wav.prior_encode(ppg, spk, weights, cfg)
    wave_hat = ppg2wav.decode(z, spk, weights, cfg)
    real = msd_forward(wave, weights, cfg) + mcd_forward(wave, weights, cfg)
    fake = msd_forward(wave_hat, weights, cfg) + mcd_forward(wave_hat, weights, cfg)
    adv_g, adv_d = adv_losses(real, fake)
    return total_losses(
        L_kl=kl_loss(post, z, fz, log_det, prior),
        L_recon=recon_loss(wave_hat, wave, cfg),
        L_ppg=ppg_loss(ppg2wav.ppg_predict(z, weights, cfg), ppg),
        L_adv_G=adv_g, L_adv_D=adv_d, L_fm=fm_loss(real, fake),
    )


# ---------------------------------------------------------------------------
# directional derivative check

LOSS_IDS = ("recon", "kl", "ppg", "fm", "quadratic")


def _check_batch(cfg: ModelConfig, seed: int, n_frames: int):
    longest = max([r[0] for r in cfg.disc_resolutions] + [cfg.fft_size])
    n_frames = max(n_frames, -(-longest // cfg.hop) + 1)
    rng = Rng(seed)
    t = np.arange(n_frames * cfg.hop) / 16000.0
    wave = 0.3 * np.sin(2 * np.pi * 440.0 * t) + 0.05 * rng.normal(t.shape, dtype=np.float64)
    ppg = rng.normal((n_frames, cfg.ppg_dim), dtype=np.float64)
    noise = rng.normal((n_frames, cfg.latent_dim), dtype=np.float64)
    return wave, ppg, noise


def loss_path(loss_id: str, cfg: ModelConfig, data_seed: int = 0,
              n_frames: int = 12) -> Callable:
    """Scalar loss as a function of the weight mapping, on a fixed synthetic example."""
    from . import ppg2wav

    wave, ppg, noise = _check_batch(cfg, data_seed, n_frames)
    n = ppg.shape[0]

    def posterior(w):
        linspec = linear_spectrogram(wave, cfg.stft)[:, :n]
        return ppg2wav.posterior_encode(linspec, w, cfg, noise=noise)

    def spk(w):
        return w["speaker.table"][0]

    if loss_id == "quadratic":
        return lambda w: sum(np.sum(v * v) for v in w.values())
    if loss_id == "recon":
        def f(w):
            z, _ = posterior(w)
            return recon_loss(ppg2wav.decode(z, spk(w), w, cfg), wave, cfg)
        return f
    if loss_id == "kl":
        def f(w):
            z, post = posterior(w)
            fz, log_det = ppg2wav.flow_forward(z, w, cfg)
            return kl_loss(post, z, fz, log_det, ppg2wav.prior_encode(ppg, spk(w), w, cfg))
        return f
    if loss_id == "ppg":
        def f(w):
            z, _ = posterior(w)
            return ppg_loss(ppg2wav.ppg_predict(z, w, cfg), ppg)
        return f
    if loss_id == "fm":
        def f(w):
            z, _ = posterior(w)
            hat = ppg2wav.decode(z, spk(w), w, cfg)
            real = msd_forward(wave, w, cfg) + mcd_forward(wave, w, cfg)
            fake = msd_forward(hat, w, cfg) + mcd_forward(hat, w, cfg)
            return fm_loss(real, fake)
        return f
    raise ValueError(f"unknown loss id {loss_id!r}; expected one of {LOSS_IDS}")


def random_direction(weights, seed: int) -> Dict[str, np.ndarray]:
    """Seeded unit-norm direction over all weight tensors (float64)."""
    d = {}
    for i, (name, w) in enumerate(weights.items()):
        d[name] = rng_fill(w.shape, seed * 100003 + i, Normal(), dtype=np.float64)
    norm = math.sqrt(sum(float(np.sum(v * v)) for v in d.values()))
    return {k: v / norm for k, v in d.items()}


def directional_grad_check(loss_id, weights, cfg: ModelConfig, direction_seed: int = 0,
                           eps: float = 1e-4, data_seed: int = 0
                           ) -> Tuple[float, float, float]:
    """Compare the dual-number directional derivative with a central difference.

    Returns ``(ad, fd, rel_err)``.  Everything runs in float64.
    """
    if not 1e-5 <= eps <= 1e-2:
        raise ValueError("eps must lie in [1e-5, 1e-2]")
    f = loss_path(loss_id, cfg, data_seed) if isinstance(loss_id, str) else loss_id
    w64 = {k: np.asarray(v, dtype=np.float64) for k, v in weights.items()}
    d = random_direction(w64, direction_seed)
    dual = f({k: Dual(v, d[k]) for k, v in w64.items()})
    ad = float(dual.tangent) if isinstance(dual, Dual) else 0.0
    plus = float(value_of(f({k: v + eps * d[k] for k, v in w64.items()})))
    minus = float(value_of(f({k: v - eps * d[k] for k, v in w64.items()})))
    if not (math.isfinite(plus) and math.isfinite(minus)):
        raise FloatingPointError("non-finite loss at a perturbed point")
    fd = (plus - minus) / (2 * eps)
    rel = abs(ad - fd) / max(abs(ad), abs(fd), 1e-12)
    return ad, fd, rel
