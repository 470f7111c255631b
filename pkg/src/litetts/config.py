"""Model hyperparameters and the ``key = value`` config file format.

Config files are UTF-8 text with one ``key = value`` per line; ``#`` starts a
comment.  List values are comma-separated, discriminator resolutions are
written ``fft/hop/win``.  Keys not in :class:`ModelConfig` are rejected.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Tuple

from .dsp import MelConfig, StftConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    # signal
    fft_size: int = 1024
    hop: int = 200
    win_length: int = 800
    n_mels: int = 80
    f_min: float = 0.0
    f_max: float = 8000.0
    # text2ppg
    vocab_size: int = 128
    t2p_hidden: int = 128
    t2p_layers: int = 2
    ppg_dim: int = 256
    dur_channels: int = 128
    dur_kernel: int = 3
    dur_layers: int = 2
    postnet_channels: int = 256
    postnet_kernel: int = 5
    postnet_layers: int = 5
    # FFT blocks (shared by text2ppg and the prior encoder)
    fft_filter: int = 768
    fft_kernel1: int = 9
    fft_kernel2: int = 1
    n_heads: int = 4
    attention_kind: str = "linear"
    # prior encoder
    latent_dim: int = 192
    prior_hidden: int = 192
    prior_layers: int = 2
    speaker_dim: int = 256
    n_speakers: int = 16
    # flow
    n_couplings: int = 4
    flow_hidden: int = 192
    flow_wn_layers: int = 4
    flow_kernel: int = 3
    share_flow: bool = True
    # posterior encoder
    post_hidden: int = 192
    post_wn_layers: int = 16
    post_kernel: int = 5
    # ppg predictor
    ppgp_channels: int = 192
    ppgp_kernel: int = 5
    ppgp_layers: int = 2
    # decoder
    decoder_kind: str = "istft"
    dec_channels: Tuple[int, ...] = (256, 384, 1026)
    dec_kernel: int = 3
    dec_stage_groups: Tuple[int, ...] = (2, 4, 6)
    dec_res_groups: Tuple[int, ...] = (4, 8, 18)
    # analytic-only upsampling baseline decoder
    up_initial_channels: int = 128
    up_strides: Tuple[int, ...] = (5, 5, 4, 2)
    up_resblock_kernels: Tuple[int, ...] = (3, 7, 11)
    up_resblock_dilations: Tuple[int, ...] = (1, 3, 5)
    # discriminators
    disc_resolutions: Tuple[Tuple[int, int, int], ...] = (
        (512, 128, 512), (1024, 256, 1024), (2048, 512, 2048),
    )
    disc_channels: Tuple[int, ...] = (16, 32, 64, 64)
    disc_kernel: int = 3
    disc_slope: float = 0.2
    # cost model
    phonemes_per_second: float = 12.0

    def __post_init__(self):
        self.validate()

    @property
    def stft(self) -> StftConfig:
        return StftConfig(self.fft_size, self.hop, self.win_length)

    @property
    def mel(self) -> MelConfig:
        return MelConfig(self.n_mels, self.f_min, self.f_max)

    @property
    def n_bins(self) -> int:
        return self.fft_size // 2 + 1

    def replace(self, **changes) -> "ModelConfig":
        return dataclasses.replace(self, **changes)

    def validate(self) -> None:
        problems = []

        def need(cond, msg):
            if not cond:
                problems.append(msg)

        need(0 < self.hop <= self.win_length <= self.fft_size, "need hop <= win_length <= fft_size")
        need(self.fft_size % 2 == 0, "fft_size must be even")
        need(self.attention_kind in ("linear", "scaled_dot"), "attention_kind: linear|scaled_dot")
        need(self.decoder_kind in ("istft", "upsampling_baseline"),
             "decoder_kind: istft|upsampling_baseline")
        for d in ("t2p_hidden", "prior_hidden"):
            need(getattr(self, d) % self.n_heads == 0, f"{d} not divisible by n_heads")
        need(self.latent_dim % 2 == 0, "latent_dim must be even")
        for k in ("fft_kernel1", "fft_kernel2", "dur_kernel", "postnet_kernel", "flow_kernel",
                  "post_kernel", "ppgp_kernel", "dec_kernel", "disc_kernel"):
            need(getattr(self, k) % 2 == 1, f"{k} must be odd")
        need(len(self.dec_channels) == len(self.dec_stage_groups) == len(self.dec_res_groups),
             "decoder channel/group lists differ in length")
        need(self.dec_channels and self.dec_channels[-1] == 2 * self.n_bins,
             f"last decoder channel count must be 2*(fft_size/2+1) = {2 * self.n_bins}")
        prev = self.latent_dim
        for c, sg, rg in zip(self.dec_channels, self.dec_stage_groups, self.dec_res_groups):
            need(prev % sg == 0 and c % sg == 0, f"stage {prev}->{c} not divisible by groups {sg}")
            need(c % rg == 0, f"residual channels {c} not divisible by groups {rg}")
            prev = c
        need(self.postnet_layers >= 2, "postnet needs at least 2 layers")
        need(self.n_couplings >= 1 and self.flow_wn_layers >= 1 and self.post_wn_layers >= 1,
             "flow/posterior need at least one layer")
        need(len(self.disc_channels) >= 1, "disc_channels must be non-empty")
        for r in self.disc_resolutions:
            need(len(r) == 3 and 0 < r[1] <= r[2] <= r[0], f"bad disc resolution {r}")
        need(self.phonemes_per_second > 0, "phonemes_per_second must be positive")
        if problems:
            raise ConfigError("; ".join(problems))


def micro_config(**overrides) -> ModelConfig:
    """Desk-scale configuration (hidden size 8, two WN layers) for exhaustive checks."""
    base = dict(
        fft_size=64, hop=16, win_length=64, n_mels=8,
        vocab_size=12, t2p_hidden=8, t2p_layers=1, ppg_dim=6, dur_channels=8,
        postnet_channels=8, postnet_layers=2, fft_filter=16, fft_kernel1=3, n_heads=2,
        latent_dim=8, prior_hidden=8, prior_layers=1, speaker_dim=6, n_speakers=3,
        n_couplings=4, flow_hidden=8, flow_wn_layers=2,
        post_hidden=8, post_wn_layers=2, ppgp_channels=8, ppgp_layers=1, ppgp_kernel=3,
        dec_channels=(8, 12, 66), dec_stage_groups=(2, 2, 6), dec_res_groups=(2, 4, 6),
        disc_resolutions=((64, 16, 64), (128, 32, 128)), disc_channels=(4, 4),
    )
    base.update(overrides)
    return ModelConfig(**base)


# ---------------------------------------------------------------------------
# text format

_FIELDS = {f.name: f for f in fields(ModelConfig)}


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        if v and isinstance(v[0], tuple):
            return ", ".join("/".join(str(x) for x in r) for r in v)
        return ", ".join(str(x) for x in v)
    return str(v)


def _parse_value(name: str, text: str):
    default = _FIELDS[name].default
    text = text.strip()
    try:
        if isinstance(default, bool):
            low = text.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return low in ("true", "1", "yes")
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, str):
            return text
        if isinstance(default, tuple):
            items = [s.strip() for s in text.split(",") if s.strip()]
            if default and isinstance(default[0], tuple):
                return tuple(tuple(int(x) for x in s.split("/")) for s in items)
            return tuple(int(s) for s in items)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {text!r}") from exc
    raise ConfigError(f"unsupported key type for {name}")


def parse_config(text: str) -> ModelConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, val)
    return ModelConfig(**values)


def format_config(cfg: ModelConfig) -> str:
    lines = ["# litetts model configuration"]
    for f in fields(cfg):
        lines.append(f"{f.name} = {_format_value(getattr(cfg, f.name))}")
    return "\n".join(lines) + "\n"


def load_config(path) -> ModelConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def save_config(cfg: ModelConfig, path) -> None:
    Path(path).write_text(format_config(cfg), encoding="utf-8")
