"""Attention, feed-forward Transformer blocks, WaveNet stacks and complex conv.

Sequence tensors for attention / FFT blocks are ``[T, D]``; convolutional
stacks use channel-first ``[C, T]``.  Parameters are read by name from a
:class:`ParamView` over a weight mapping.
"""
from __future__ import annotations

import math
from typing import Mapping

import numpy as np

from .dual import value_of
from .numerics import conv1d, conv2d, elu, layer_norm, linear, matmul, relu, sigmoid


class ParamView:
    """Read-only prefixed view: ``ParamView(w, "a.b")["c"]`` is ``w["a.b.c"]``."""

    def __init__(self, tensors: Mapping, prefix: str = ""):
        self._tensors = tensors
        self.prefix = prefix

    def _key(self, name: str) -> str:
        return f"{self.prefix}.{name}" if self.prefix else name

    def __getitem__(self, name: str):
        return self._tensors[self._key(name)]

    def __contains__(self, name: str) -> bool:
        return self._key(name) in self._tensors

    def get(self, name: str, default=None):
        return self._tensors.get(self._key(name), default)

    def sub(self, name: str) -> "ParamView":
        return ParamView(self._tensors, self._key(name))


def _heads(x, n_heads):
    t, d = x.shape
    return x.reshape(t, n_heads, d // n_heads).transpose(1, 0, 2)   # [h, T, dh]


def _merge(x):
    h, t, dh = x.shape
    return x.transpose(1, 0, 2).reshape(t, h * dh)


def _check_mask(mask, t):
    if mask is None:
        return None
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (t,):
        raise ValueError(f"mask length {mask.shape} does not match sequence length {t}")
    if not mask.any():
        raise ValueError("mask removes every position")
    return mask


def _qkv(x, p: ParamView, n_heads):
    if x.shape[1] % n_heads:
        raise ValueError("model dim not divisible by n_heads")
    q = linear(x, p["q.weight"], p["q.bias"])
    k = linear(x, p["k.weight"], p["k.bias"])
    v = linear(x, p["v.weight"], p["v.bias"])
    return _heads(q, n_heads), _heads(k, n_heads), _heads(v, n_heads)


def scaled_dot_attention(x, p: ParamView, n_heads: int, mask=None, return_weights=False):
    t = x.shape[0]
    mask = _check_mask(mask, t)
    q, k, v = _qkv(x, p, n_heads)
    dh = q.shape[-1]
    scores = matmul(q, k.transpose(0, 2, 1)) / math.sqrt(dh)         # [h, T, T]
    if mask is not None:
        scores = np.where(mask[None, None, :], scores, -1e30)
    shift = np.max(value_of(scores), axis=-1, keepdims=True)
    e = np.exp(scores - shift)
    w = e / np.sum(e, axis=-1, keepdims=True)
    out = linear(_merge(matmul(w, v)), p["o.weight"], p["o.bias"])
    return (out, w) if return_weights else out


def feature_map(u):
    """Positive feature map ``elu(u) + 1`` of the linear-attention kernel."""
    return elu(u) + 1.0


def linear_attention(x, p: ParamView, n_heads: int, mask=None):
    """Non-causal normalized linear attention, computed as ``phi(Q) (phi(K)^T V)``."""
    t = x.shape[0]
    mask = _check_mask(mask, t)
    q, k, v = _qkv(x, p, n_heads)
    fq, fk = feature_map(q), feature_map(k)
    if mask is not None:
        fk = fk * mask[None, :, None].astype(value_of(fk).dtype)
    kv = matmul(fk.transpose(0, 2, 1), v)                               # [h, dh, dh]
    ksum = np.sum(fk, axis=1)[:, :, None]                               # [h, dh, 1]
    num = matmul(fq, kv)                                                # [h, T, dh]
    den = matmul(fq, ksum)                                              # [h, T, 1]
    return linear(_merge(num / den), p["o.weight"], p["o.bias"])


def attention(x, p: ParamView, n_heads: int, kind: str, mask=None):
    if kind == "linear":
        return linear_attention(x, p, n_heads, mask)
    if kind == "scaled_dot":
        return scaled_dot_attention(x, p, n_heads, mask)
    raise ValueError(f"unknown attention kind {kind!r}")


def fft_block(x, p: ParamView, n_heads: int, kind: str = "linear", mask=None):
    """Pre-norm feed-forward Transformer block on ``[T, D]``."""
    if x.ndim != 2 or x.shape[1] != p["ln1.gamma"].shape[0]:
        raise ValueError(f"fft_block: input {x.shape} does not match block width")
    h = x + attention(layer_norm(x, p["ln1.gamma"], p["ln1.beta"]), p.sub("attn"), n_heads,
                      kind, mask)
    y = layer_norm(h, p["ln2.gamma"], p["ln2.beta"]).T                 # [D, T]
    y = relu(conv1d(y, p["ff1.weight"], p["ff1.bias"]))
    y = conv1d(y, p["ff2.weight"], p["ff2.bias"])
    return h + y.T


def wn_stack(x, cond, p: ParamView, n_layers: int):
    """Gated residual WaveNet stack on ``[H, T]``; returns the summed skip path.

    ``cond`` is a global vector added inside every gate through a bias-free
    projection, so ``cond=None`` and an all-zero vector are equivalent.
    """
    hidden = x.shape[0]
    if p["in.0.weight"].shape[1] != hidden:
        raise ValueError(f"wn_stack: expected {p['in.0.weight'].shape[1]} channels, got {hidden}")
    g = None
    if cond is not None:
        w = p["cond.weight"]
        if cond.shape != (w.shape[1],):
            raise ValueError(f"wn_stack: cond dim {cond.shape} != {w.shape[1]}")
        g = linear(cond, w[:, :, 0])                                    # [2H * n_layers]
    out = None
    for j in range(n_layers):
        a = conv1d(x, p[f"in.{j}.weight"], p[f"in.{j}.bias"])
        if g is not None:
            a = a + g[j * 2 * hidden:(j + 1) * 2 * hidden, None]
        acts = np.tanh(a[:hidden]) * sigmoid(a[hidden:])
        rs = conv1d(acts, p[f"res_skip.{j}.weight"], p[f"res_skip.{j}.bias"])
        if j < n_layers - 1:
            x = x + rs[:hidden]
            skip = rs[hidden:]
        else:
            skip = rs
        out = skip if out is None else out + skip
    return out


def complex_conv2d(x_re, x_im, p: ParamView, stride=(1, 1), padding=(0, 0)):
    """``(x_re + i x_im) * (w_re + i w_im) + (b_re + i b_im)`` with four real convs."""
    w_re, w_im = p["weight_re"], p["weight_im"]
    if w_re.shape != w_im.shape:
        raise ValueError("complex kernel parts differ in shape")
    if x_re.shape != x_im.shape:
        raise ValueError("complex input parts differ in shape")
    rr = conv2d(x_re, w_re, stride=stride, padding=padding)
    ii = conv2d(x_im, w_im, stride=stride, padding=padding)
    ri = conv2d(x_re, w_im, stride=stride, padding=padding)
    ir = conv2d(x_im, w_re, stride=stride, padding=padding)
    out_re = rr - ii + p["bias_re"][:, None, None]
    out_im = ri + ir + p["bias_im"][:, None, None]
    return out_re, out_im
