"""Deterministic numerical kernels shared by every model module.

Tensors are plain ``numpy.ndarray`` objects (float32 by default, row-major).
Kernels preserve the floating dtype of their inputs so the same code runs in
float64, and they accept :class:`~litetts.dual.Dual` arrays for forward-mode
derivatives.

Every dense multiply-accumulate performed by :func:`linear`, :func:`conv1d`,
:func:`conv2d` and :func:`matmul` is reported to the active
:func:`count_macs` context, which lets the analytic cost model be checked
against the real computation.
"""
from __future__ import annotations

import contextlib
import contextvars
import math
from dataclasses import dataclass
from typing import Iterator, Sequence, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .dual import Dual, value_of

__all__ = [
    "Rng", "Uniform", "Normal", "rng_fill", "as_tensor", "check_finite",
    "MacCounter", "count_macs", "linear", "matmul", "conv1d", "conv2d",
    "same_padding", "layer_norm", "relu", "leaky_relu", "elu", "sigmoid",
    "NonFiniteError",
]

DEFAULT_DTYPE = np.float32


class NonFiniteError(FloatingPointError):
    """A module produced NaN or Inf."""


# ---------------------------------------------------------------------------
# random numbers


@dataclass(frozen=True)
class Uniform:
    lo: float = 0.0
    hi: float = 1.0


@dataclass(frozen=True)
class Normal:
    mu: float = 0.0
    sigma: float = 1.0


class Rng:
    """Seeded generator: PCG64 (XSL-RR 128/64) bit stream.

    Uniforms are ``(next_uint64 >> 11) * 2**-53`` on [0, 1).  Normals use the
    Box-Muller transform on consecutive uniform pairs ``(u1, u2)``::

        r = sqrt(-2 log(1 - u1));  z0 = r cos(2 pi u2);  z1 = r sin(2 pi u2)

    so the normal stream is fully specified by the uniform stream.
    """

    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError("seed must be non-negative")
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def random(self, n: int) -> np.ndarray:
        return self._gen.random(n, dtype=np.float64)

    def uniform(self, shape, lo=0.0, hi=1.0, dtype=DEFAULT_DTYPE) -> np.ndarray:
        n = _numel(shape)
        u = self.random(n)
        return (lo + (hi - lo) * u).reshape(shape).astype(dtype)

    def normal(self, shape, mu=0.0, sigma=1.0, dtype=DEFAULT_DTYPE) -> np.ndarray:
        if sigma < 0:
            raise ValueError("sigma must be non-negative")
        n = _numel(shape)
        m = (n + 1) // 2
        u = self.random(2 * m)
        u1, u2 = u[0::2], u[1::2]
        r = np.sqrt(-2.0 * np.log1p(-u1))
        z = np.empty(2 * m)
        z[0::2] = r * np.cos(2.0 * np.pi * u2)
        z[1::2] = r * np.sin(2.0 * np.pi * u2)
        return (mu + sigma * z[:n]).reshape(shape).astype(dtype)


def _numel(shape) -> int:
    shape = tuple(int(s) for s in shape)
    if len(shape) == 0 or any(s < 1 for s in shape):
        raise ValueError(f"shape must be non-empty with positive dims, got {shape}")
    return math.prod(shape)


def rng_fill(shape, seed: int, dist: Union[Uniform, Normal] = Uniform(),
             dtype=DEFAULT_DTYPE) -> np.ndarray:
    rng = Rng(seed)
    if isinstance(dist, Uniform):
        return rng.uniform(shape, dist.lo, dist.hi, dtype=dtype)
    if isinstance(dist, Normal):
        return rng.normal(shape, dist.mu, dist.sigma, dtype=dtype)
    raise TypeError(f"unknown distribution {dist!r}")


# ---------------------------------------------------------------------------
# tensor helpers


def as_tensor(x, dtype=None):
    """Coerce to a floating ndarray; float32 unless already float64 or Dual."""
    if isinstance(x, Dual):
        return x
    x = np.asarray(x)
    if dtype is not None:
        return x.astype(dtype, copy=False)
    if x.dtype in (np.float32, np.float64):
        return x
    return x.astype(DEFAULT_DTYPE)


def check_finite(x, where: str):
    v = value_of(x)
    if not np.all(np.isfinite(v)):
        raise NonFiniteError(f"non-finite values produced by {where}")
    return x


# ---------------------------------------------------------------------------
# multiply-accumulate instrumentation


class MacCounter:
    def __init__(self):
        self.macs = 0

    def add(self, n: int) -> None:
        self.macs += int(n)


_COUNTER: contextvars.ContextVar = contextvars.ContextVar("litetts_mac_counter", default=None)


@contextlib.contextmanager
def count_macs() -> Iterator[MacCounter]:
    """Count dense multiply-accumulates issued by the kernels in this context."""
    counter = MacCounter()
    token = _COUNTER.set(counter)
    try:
        yield counter
    finally:
        _COUNTER.reset(token)


def _tally(n: int) -> None:
    c = _COUNTER.get()
    if c is not None:
        c.add(n)


# ---------------------------------------------------------------------------
# dense kernels


def matmul(a, b):
    """``a @ b`` for 2-D operands (or stacks thereof), with MAC accounting."""
    batch = math.prod(a.shape[:-2]) if a.ndim > 2 else 1
    _tally(batch * a.shape[-2] * a.shape[-1] * b.shape[-1])
    return a @ b


def linear(x, w, b=None):
    """Affine map over the last axis; ``w`` is ``[out, in]``."""
    if x.shape[-1] != w.shape[1]:
        raise ValueError(f"linear: input dim {x.shape[-1]} != weight in-dim {w.shape[1]}")
    rows = math.prod(x.shape[:-1]) if x.ndim > 1 else 1
    _tally(rows * w.shape[0] * w.shape[1])
    y = x @ w.T
    if b is not None:
        y = y + b
    return y


def same_padding(kernel: int, dilation: int = 1) -> tuple:
    total = (kernel - 1) * dilation
    return (total // 2, total - total // 2)


def conv1d(x, w, b=None, stride: int = 1, dilation: int = 1, groups: int = 1,
           padding: Union[str, int, Sequence[int]] = "same"):
    """1-D cross-correlation. ``x``: [C_in, T]; ``w``: [C_out, C_in/groups, K]."""
    c_in, _ = x.shape
    c_out, c_in_g, k = w.shape
    if k < 1:
        raise ValueError("kernel size must be >= 1")
    if c_in % groups or c_out % groups:
        raise ValueError(f"channels ({c_in}, {c_out}) not divisible by groups={groups}")
    if c_in // groups != c_in_g:
        raise ValueError(f"weight expects {c_in_g * groups} input channels, got {c_in}")
    if padding == "same":
        pad = same_padding(k, dilation)
    elif isinstance(padding, int):
        pad = (padding, padding)
    else:
        pad = tuple(padding)
    if pad != (0, 0):
        x = np.pad(x, ((0, 0), pad))
    span = (k - 1) * dilation + 1
    if x.shape[1] < span:
        raise ValueError("kernel larger than padded input")
    cols = sliding_window_view(x, span, axis=1)[:, ::stride, ::dilation]  # [C_in, T_out, K]
    t_out = cols.shape[1]
    _tally(c_out * c_in_g * k * t_out)
    if groups == 1:
        y = np.einsum("ctk,ock->ot", cols, w, optimize=True)
    else:
        cols = cols.reshape(groups, c_in_g, t_out, k)
        wg = w.reshape(groups, c_out // groups, c_in_g, k)
        y = np.einsum("gctk,gock->got", cols, wg, optimize=True).reshape(c_out, t_out)
    if b is not None:
        y = y + b[:, None]
    return y


def conv2d(x, w, b=None, stride=(1, 1), padding=(0, 0)):
    """2-D cross-correlation. ``x``: [C_in, H, W]; ``w``: [C_out, C_in, kh, kw]."""
    c_in = x.shape[0]
    c_out, c_in_w, kh, kw = w.shape
    if c_in != c_in_w:
        raise ValueError(f"conv2d: input has {c_in} channels, weight expects {c_in_w}")
    ph, pw = padding
    if ph or pw:
        x = np.pad(x, ((0, 0), (ph, ph), (pw, pw)))
    if x.shape[1] < kh or x.shape[2] < kw:
        raise ValueError("kernel larger than padded input")
    sh, sw = stride
    cols = sliding_window_view(x, (kh, kw), axis=(1, 2))[:, ::sh, ::sw]  # [C, H', W', kh, kw]
    h_out, w_out = cols.shape[1], cols.shape[2]
    _tally(c_out * c_in * kh * kw * h_out * w_out)
    y = np.einsum("chwij,ocij->ohw", cols, w, optimize=True)
    if b is not None:
        y = y + b[:, None, None]
    return y


def layer_norm(x, gamma, beta, eps: float = 1e-5):
    """Normalize over the last axis (statistics in float64), then scale and shift."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    d = x.shape[-1]
    if gamma.shape != (d,) or beta.shape != (d,):
        raise ValueError(f"layer_norm: expected affine params of shape ({d},)")
    dtype = x.dtype
    x64 = x.astype(np.float64)
    mu = np.mean(x64, axis=-1, keepdims=True)
    xc = x64 - mu
    var = np.mean(xc * xc, axis=-1, keepdims=True)
    y = (xc / np.sqrt(var + eps)).astype(dtype)
    return y * gamma + beta


# ---------------------------------------------------------------------------
# activations


def relu(x):
    return np.maximum(x, 0.0)


def leaky_relu(x, slope: float = 0.2):
    return np.where(value_of(x) > 0, x, x * slope)


def elu(x):
    # exp of the clipped value keeps the unused branch finite
    return np.where(value_of(x) > 0, x, np.exp(np.minimum(x, 0.0)) - 1.0)


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))
