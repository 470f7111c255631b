"""Parameter inventory and analytic cost model.

:func:`param_shapes` is the single list of every weight tensor a
configuration owns; weight initialization, loading validation and
:func:`count_params` all derive from it.  :func:`module_macs` gives the exact
number of dense multiply-accumulates each forward pass issues, matching what
the kernels report under :func:`litetts.numerics.count_macs`.

FLOP conventions: ``mac2`` counts one MAC as two FLOPs, ``mac1`` as one.  The
iSTFT is costed separately at ``5 * fft_size * log2(fft_size)`` FLOPs per frame
(radix-2 estimate) under both conventions; elementwise activations and
normalization are not counted.
"""
from __future__ import annotations

import json
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, Optional

from .config import ModelConfig

SCOPES = ("inference", "training", "all")
CONVENTIONS = ("mac2", "mac1")

INFERENCE_MODULES = ("text2ppg", "speaker_table", "prior_encoder", "flow", "decoder")
TRAINING_MODULES = INFERENCE_MODULES + ("posterior_encoder", "ppg_predictor", "msd", "mcd")

_PREFIX_TO_MODULE = OrderedDict([
    ("t2p.", "text2ppg"),
    ("speaker.", "speaker_table"),
    ("prior.", "prior_encoder"),
    ("flow.", "flow"),
    ("dec.", "decoder"),
    ("dec_up.", "decoder"),
    ("post.", "posterior_encoder"),
    ("ppgp.", "ppg_predictor"),
    ("msd.", "msd"),
    ("mcd.", "mcd"),
])


def module_of(name: str) -> str:
    for prefix, module in _PREFIX_TO_MODULE.items():
        if name.startswith(prefix):
            return module
    raise KeyError(f"tensor {name!r} belongs to no module")


def scope_modules(scope: str):
    if scope == "inference":
        return INFERENCE_MODULES
    if scope in ("training", "all"):
        return TRAINING_MODULES
    raise ValueError(f"unknown scope {scope!r}; expected one of {SCOPES}")


# ---------------------------------------------------------------------------
# tensor inventory


def _conv(out, name, c_out, c_in, k, bias=True):
    out[f"{name}.weight"] = (c_out, c_in, k)
    if bias:
        out[f"{name}.bias"] = (c_out,)


def _lin(out, name, d_out, d_in):
    out[f"{name}.weight"] = (d_out, d_in)
    out[f"{name}.bias"] = (d_out,)


def _ln(out, name, d):
    out[f"{name}.gamma"] = (d,)
    out[f"{name}.beta"] = (d,)


def _fft_block(out, name, cfg: ModelConfig, d):
    for p in ("q", "k", "v", "o"):
        _lin(out, f"{name}.attn.{p}", d, d)
    _ln(out, f"{name}.ln1", d)
    _ln(out, f"{name}.ln2", d)
    _conv(out, f"{name}.ff1", cfg.fft_filter, d, cfg.fft_kernel1)
    _conv(out, f"{name}.ff2", d, cfg.fft_filter, cfg.fft_kernel2)


def _wn(out, name, hidden, n_layers, kernel, gin=None):
    for j in range(n_layers):
        _conv(out, f"{name}.in.{j}", 2 * hidden, hidden, kernel)
        res_out = 2 * hidden if j < n_layers - 1 else hidden
        _conv(out, f"{name}.res_skip.{j}", res_out, hidden, 1)
    if gin is not None:
        _conv(out, f"{name}.cond", 2 * hidden * n_layers, gin, 1, bias=False)


def _coupling(out, name, cfg: ModelConfig, gin=None):
    half = cfg.latent_dim // 2
    _conv(out, f"{name}.pre", cfg.flow_hidden, half, 1)
    _wn(out, f"{name}.wn", cfg.flow_hidden, cfg.flow_wn_layers, cfg.flow_kernel, gin)
    _conv(out, f"{name}.post", half, cfg.flow_hidden, 1)


def _disc_layers(cfg: ModelConfig):
    chans = (1,) + tuple(cfg.disc_channels)
    return list(zip(chans[:-1], chans[1:]))


def _baseline_stage_channels(cfg: ModelConfig):
    c = cfg.up_initial_channels
    return [(c // 2 ** i, c // 2 ** (i + 1)) for i in range(len(cfg.up_strides))]


def param_shapes(cfg: ModelConfig, scope: str = "all") -> "OrderedDict[str, tuple]":
    """Ordered ``name -> shape`` of every parameter tensor in ``scope``."""
    modules = scope_modules(scope)
    out: "OrderedDict[str, tuple]" = OrderedDict()
    d, L, H = cfg.t2p_hidden, cfg.latent_dim, cfg.prior_hidden

    if "text2ppg" in modules:
        out["t2p.embed"] = (cfg.vocab_size, d)
        for i in range(cfg.t2p_layers):
            _fft_block(out, f"t2p.fft.{i}", cfg, d)
        c_prev = d
        for j in range(cfg.dur_layers):
            _conv(out, f"t2p.dur.{j}", cfg.dur_channels, c_prev, cfg.dur_kernel)
            _ln(out, f"t2p.dur.{j}.ln", cfg.dur_channels)
            c_prev = cfg.dur_channels
        _lin(out, "t2p.dur.proj", 1, c_prev)
        for j, (ci, co) in enumerate(_postnet_channels(cfg)):
            _conv(out, f"t2p.postnet.{j}", co, ci, cfg.postnet_kernel)
        _lin(out, "t2p.proj", cfg.ppg_dim, d)

    if "speaker_table" in modules:
        out["speaker.table"] = (cfg.n_speakers, cfg.speaker_dim)

    if "prior_encoder" in modules:
        _lin(out, "prior.in", H, cfg.ppg_dim)
        _lin(out, "prior.spk", H, cfg.speaker_dim)
        for i in range(cfg.prior_layers):
            _fft_block(out, f"prior.fft.{i}", cfg, H)
        _lin(out, "prior.out", 2 * L, H)

    if "flow" in modules:
        if cfg.share_flow:
            _coupling(out, "flow.shared", cfg, gin=cfg.flow_hidden)
            out["flow.fle"] = (cfg.n_couplings, cfg.flow_hidden)
        else:
            for k in range(cfg.n_couplings):
                _coupling(out, f"flow.{k}", cfg)

    if "decoder" in modules:
        _lin(out, "dec.spk", L, cfg.speaker_dim)
        if cfg.decoder_kind == "istft":
            prev = L
            for i, (c, sg, rg) in enumerate(zip(cfg.dec_channels, cfg.dec_stage_groups,
                                                cfg.dec_res_groups)):
                _conv(out, f"dec.stage.{i}", c, prev // sg, cfg.dec_kernel)
                _conv(out, f"dec.res.{i}.conv1", c, c // rg, cfg.dec_kernel)
                _conv(out, f"dec.res.{i}.conv2", c, c // rg, cfg.dec_kernel)
                prev = c
        else:
            c0 = cfg.up_initial_channels
            _conv(out, "dec_up.pre", c0, L, 7)
            for i, (ci, co) in enumerate(_baseline_stage_channels(cfg)):
                s = cfg.up_strides[i]
                _conv(out, f"dec_up.ups.{i}", ci, co, 2 * s)   # transposed: [C_in, C_out, K]
                for kk in cfg.up_resblock_kernels:
                    for dil in cfg.up_resblock_dilations:
                        _conv(out, f"dec_up.mrf.{i}.k{kk}.d{dil}.conv1", co, co, kk)
                        _conv(out, f"dec_up.mrf.{i}.k{kk}.d{dil}.conv2", co, co, kk)
            _conv(out, "dec_up.post", 1, _baseline_stage_channels(cfg)[-1][1], 7)

    if "posterior_encoder" in modules:
        _conv(out, "post.pre", cfg.post_hidden, cfg.n_bins, 1)
        _wn(out, "post.wn", cfg.post_hidden, cfg.post_wn_layers, cfg.post_kernel)
        _conv(out, "post.proj", 2 * L, cfg.post_hidden, 1)

    if "ppg_predictor" in modules:
        prev = L
        for j in range(cfg.ppgp_layers):
            _conv(out, f"ppgp.conv.{j}", cfg.ppgp_channels, prev, cfg.ppgp_kernel)
            prev = cfg.ppgp_channels
        _lin(out, "ppgp.proj", cfg.ppg_dim, prev)

    k = cfg.disc_kernel
    if "msd" in modules:
        for r in range(len(cfg.disc_resolutions)):
            for j, (ci, co) in enumerate(_disc_layers(cfg)):
                out[f"msd.{r}.conv.{j}.weight"] = (co, ci, k, k)
                out[f"msd.{r}.conv.{j}.bias"] = (co,)
            out[f"msd.{r}.out.weight"] = (1, cfg.disc_channels[-1], 1, 1)
            out[f"msd.{r}.out.bias"] = (1,)
    if "mcd" in modules:
        for r in range(len(cfg.disc_resolutions)):
            layers = [(f"conv.{j}", ci, co, k) for j, (ci, co) in enumerate(_disc_layers(cfg))]
            layers.append(("out", cfg.disc_channels[-1], 1, 1))
            for nm, ci, co, kk in layers:
                for part in ("re", "im"):
                    out[f"mcd.{r}.{nm}.weight_{part}"] = (co, ci, kk, kk)
                    out[f"mcd.{r}.{nm}.bias_{part}"] = (co,)
    return out


def _postnet_channels(cfg: ModelConfig):
    d, p = cfg.t2p_hidden, cfg.postnet_channels
    chans = [d] + [p] * (cfg.postnet_layers - 1) + [d]
    return list(zip(chans[:-1], chans[1:]))


def coupling_param_count(cfg: ModelConfig) -> int:
    """Parameters of one coupling without FLE conditioning."""
    shapes: "OrderedDict[str, tuple]" = OrderedDict()
    _coupling(shapes, "c", cfg)
    return sum(math.prod(s) for s in shapes.values())


def fle_param_count(cfg: ModelConfig) -> int:
    """FLE table plus the WN projection that injects it (absent without sharing)."""
    H = cfg.flow_hidden
    return cfg.n_couplings * H + 2 * H * cfg.flow_wn_layers * H


# ---------------------------------------------------------------------------
# analytic MAC model


def _fft_block_macs(cfg: ModelConfig, t: int, d: int, attention_kind: str) -> int:
    dh = d // cfg.n_heads
    macs = 4 * t * d * d
    if attention_kind == "scaled_dot":
        macs += cfg.n_heads * 2 * t * t * dh
    else:
        macs += cfg.n_heads * (2 * t * dh * dh + t * dh)
    macs += cfg.fft_filter * d * cfg.fft_kernel1 * t
    macs += d * cfg.fft_filter * cfg.fft_kernel2 * t
    return macs


def _wn_macs(hidden, n_layers, kernel, t, gin=None) -> int:
    macs = n_layers * 2 * hidden * hidden * kernel * t
    macs += (n_layers - 1) * 2 * hidden * hidden * t + hidden * hidden * t
    if gin is not None:
        macs += gin * 2 * hidden * n_layers
    return macs


def text2ppg_macs(cfg: ModelConfig, n_tokens: int, n_frames: int) -> int:
    d, t, n = cfg.t2p_hidden, n_tokens, n_frames
    macs = cfg.t2p_layers * _fft_block_macs(cfg, t, d, cfg.attention_kind)
    c_prev = d
    for _ in range(cfg.dur_layers):
        macs += cfg.dur_channels * c_prev * cfg.dur_kernel * t
        c_prev = cfg.dur_channels
    macs += c_prev * t
    for ci, co in _postnet_channels(cfg):
        macs += co * ci * cfg.postnet_kernel * n
    macs += n * d * cfg.ppg_dim
    return macs


def prior_macs(cfg: ModelConfig, n_frames: int) -> int:
    H, n = cfg.prior_hidden, n_frames
    macs = n * cfg.ppg_dim * H + cfg.speaker_dim * H
    macs += cfg.prior_layers * _fft_block_macs(cfg, n, H, cfg.attention_kind)
    macs += n * H * 2 * cfg.latent_dim
    return macs


def coupling_macs(cfg: ModelConfig, n_frames: int) -> int:
    half, H = cfg.latent_dim // 2, cfg.flow_hidden
    gin = H if cfg.share_flow else None
    return (2 * n_frames * half * H
            + _wn_macs(H, cfg.flow_wn_layers, cfg.flow_kernel, n_frames, gin))


def flow_macs(cfg: ModelConfig, n_frames: int) -> int:
    return cfg.n_couplings * coupling_macs(cfg, n_frames)


def decoder_macs(cfg: ModelConfig, n_frames: int) -> int:
    L, n = cfg.latent_dim, n_frames
    macs = cfg.speaker_dim * L
    if cfg.decoder_kind == "istft":
        prev = L
        for c, sg, rg in zip(cfg.dec_channels, cfg.dec_stage_groups, cfg.dec_res_groups):
            macs += c * (prev // sg) * cfg.dec_kernel * n
            macs += 2 * c * (c // rg) * cfg.dec_kernel * n
            prev = c
        return macs
    t = n
    macs += cfg.up_initial_channels * L * 7 * t
    for i, (ci, co) in enumerate(_baseline_stage_channels(cfg)):
        s = cfg.up_strides[i]
        macs += ci * co * 2 * s * t
        t *= s
        n_convs = 2 * len(cfg.up_resblock_dilations)
        macs += sum(n_convs * co * co * kk * t for kk in cfg.up_resblock_kernels)
    macs += _baseline_stage_channels(cfg)[-1][1] * 7 * t
    return macs


def decoder_extra_flops(cfg: ModelConfig, n_frames: int) -> float:
    if cfg.decoder_kind != "istft":
        return 0.0
    return 5.0 * cfg.fft_size * math.log2(cfg.fft_size) * n_frames


def posterior_macs(cfg: ModelConfig, n_frames: int) -> int:
    H, n = cfg.post_hidden, n_frames
    return (n * cfg.n_bins * H + _wn_macs(H, cfg.post_wn_layers, cfg.post_kernel, n)
            + n * H * 2 * cfg.latent_dim)


def ppg_predictor_macs(cfg: ModelConfig, n_frames: int) -> int:
    prev, macs = cfg.latent_dim, 0
    for _ in range(cfg.ppgp_layers):
        macs += cfg.ppgp_channels * prev * cfg.ppgp_kernel * n_frames
        prev = cfg.ppgp_channels
    return macs + n_frames * prev * cfg.ppg_dim


def disc_strides(cfg: ModelConfig):
    n = len(cfg.disc_channels)
    return [(1, 2) if 0 < j < n - 1 else (1, 1) for j in range(n)]


def disc_macs(cfg: ModelConfig, n_samples: int, complex_valued: bool) -> int:
    k, pad = cfg.disc_kernel, cfg.disc_kernel // 2
    total = 0
    for fft, hop, _ in cfg.disc_resolutions:
        h = fft // 2 + 1
        w = 1 + (n_samples - fft) // hop
        if w < 1:
            raise ValueError(f"{n_samples} samples shorter than discriminator window {fft}")
        for (ci, co), (sh, sw) in zip(_disc_layers(cfg), disc_strides(cfg)):
            h = (h + 2 * pad - k) // sh + 1
            w = (w + 2 * pad - k) // sw + 1
            total += co * ci * k * k * h * w
        total += cfg.disc_channels[-1] * h * w
    return 4 * total if complex_valued else total


def frames_for(cfg: ModelConfig, seconds: float) -> int:
    return max(1, int(round(seconds * 16000 / cfg.hop)))


def tokens_for(cfg: ModelConfig, seconds: float) -> int:
    return max(1, int(round(seconds * cfg.phonemes_per_second)))


def module_macs(cfg: ModelConfig, n_tokens: int, n_frames: int, scope: str = "inference"):
    """Exact MACs per module for one utterance of ``n_frames`` output frames."""
    modules = scope_modules(scope)
    n_samples = n_frames * cfg.hop
    table = {
        "text2ppg": lambda: text2ppg_macs(cfg, n_tokens, n_frames),
        "speaker_table": lambda: 0,
        "prior_encoder": lambda: prior_macs(cfg, n_frames),
        "flow": lambda: flow_macs(cfg, n_frames),
        "decoder": lambda: decoder_macs(cfg, n_frames),
        "posterior_encoder": lambda: posterior_macs(cfg, n_frames),
        "ppg_predictor": lambda: ppg_predictor_macs(cfg, n_frames),
        "msd": lambda: disc_macs(cfg, n_samples, False),
        "mcd": lambda: disc_macs(cfg, n_samples, True),
    }
    return OrderedDict((m, table[m]()) for m in modules)


# ---------------------------------------------------------------------------
# reports


@dataclass
class ComplexityReport:
    scope: str
    params: Dict[str, int]
    total_params: int
    convention: Optional[str] = None
    seconds: Optional[float] = None
    n_tokens: Optional[int] = None
    n_frames: Optional[int] = None
    macs: Dict[str, int] = field(default_factory=dict)
    flops: Dict[str, float] = field(default_factory=dict)
    total_flops: Optional[float] = None

    @property
    def gflops_per_second(self) -> Optional[float]:
        if self.total_flops is None:
            return None
        return self.total_flops / 1e9 / self.seconds

    def to_dict(self) -> dict:
        d = {
            "scope": self.scope,
            "params": dict(self.params),
            "total_params": self.total_params,
        }
        if self.total_flops is not None:
            d.update({
                "convention": self.convention,
                "seconds": self.seconds,
                "n_tokens": self.n_tokens,
                "n_frames": self.n_frames,
                "macs": dict(self.macs),
                "flops": dict(self.flops),
                "total_flops": self.total_flops,
                "gflops_per_second": self.gflops_per_second,
            })
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def format_table(self) -> str:
        with_flops = self.total_flops is not None
        head = f"{'module':<20}{'params':>14}"
        if with_flops:
            head += f"{'GFLOPs':>12}"
        lines = [head, "-" * len(head)]
        for m, p in self.params.items():
            row = f"{m:<20}{p:>14,}"
            if with_flops:
                row += f"{self.flops[m] / 1e9:>12.4f}"
            lines.append(row)
        lines.append("-" * len(head))
        total = f"{'total':<20}{self.total_params:>14,}"
        if with_flops:
            total += f"{self.total_flops / 1e9:>12.4f}"
        lines.append(total)
        lines.append(f"params: {self.total_params / 1e6:.2f} M (scope={self.scope})")
        if with_flops:
            lines.append(
                f"compute: {self.gflops_per_second:.3f} GFLOPs per second of speech "
                f"({self.convention}, {self.seconds:g} s, {self.n_tokens} phonemes, "
                f"{self.n_frames} frames)"
            )
        return "\n".join(lines)


def count_params(cfg: ModelConfig, scope: str = "inference") -> ComplexityReport:
    per = OrderedDict((m, 0) for m in scope_modules(scope))
    for name, shape in param_shapes(cfg, scope).items():
        per[module_of(name)] += math.prod(shape)
    return ComplexityReport(scope=scope, params=per, total_params=sum(per.values()))


def count_flops(cfg: ModelConfig, seconds: float = 1.0, scope: str = "inference",
                convention: str = "mac2") -> ComplexityReport:
    if not seconds > 0:
        raise ValueError("seconds must be positive")
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    rep = count_params(cfg, scope)
    n_tok, n_fr = tokens_for(cfg, seconds), frames_for(cfg, seconds)
    macs = module_macs(cfg, n_tok, n_fr, scope)
    factor = 2 if convention == "mac2" else 1
    flops = OrderedDict()
    for m, v in macs.items():
        flops[m] = float(factor * v)
    if "decoder" in flops:
        flops["decoder"] += decoder_extra_flops(cfg, n_fr)
    rep.convention = convention
    rep.seconds = seconds
    rep.n_tokens = n_tok
    rep.n_frames = n_fr
    rep.macs = macs
    rep.flops = flops
    rep.total_flops = sum(flops.values())
    return rep
