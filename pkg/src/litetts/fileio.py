"""Tensor container files, weight stores and 16-bit WAV I/O.

Container layout (little-endian)::

    b"ADVT"  u32 version=1  u32 tensor_count
    per tensor: u16 name_len, name (UTF-8), u8 ndim, u32 dims[ndim],
                u8 dtype (0 = float32), float32 payload (prod(dims) values)

PPG inputs are containers holding a 2-D tensor named ``ppg``; phoneme inputs
hold a 1-D tensor named ``phoneme_ids`` with integer values stored as floats.
"""
from __future__ import annotations

import hashlib
import math
import struct
import wave as _wave
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Mapping, Optional

import numpy as np

from .complexity import param_shapes
from .config import ModelConfig
from .dsp import SAMPLE_RATE
from .numerics import Uniform, rng_fill

MAGIC = b"ADVT"
VERSION = 1
DTYPE_F32 = 0


class FormatError(ValueError):
    """Malformed or inconsistent file; ``kind`` is a short machine-readable tag."""

    def __init__(self, kind: str, message: str):
        super().__init__(f"{kind}: {message}")
        self.kind = kind


# ---------------------------------------------------------------------------
# container


def encode_tensors(tensors: Mapping[str, np.ndarray]) -> bytes:
    parts = [MAGIC, struct.pack("<II", VERSION, len(tensors))]
    for name, t in tensors.items():
        arr = np.ascontiguousarray(np.asarray(t, dtype="<f4"))
        raw = name.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise FormatError("name_too_long", name[:40])
        if arr.ndim > 255:
            raise FormatError("too_many_dims", name)
        parts.append(struct.pack("<H", len(raw)))
        parts.append(raw)
        parts.append(struct.pack("<B", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(struct.pack("<B", DTYPE_F32))
        parts.append(arr.tobytes())
    return b"".join(parts)


def decode_tensors(buf: bytes) -> "OrderedDict[str, np.ndarray]":
    view = memoryview(buf)
    pos = 0

    def take(n):
        nonlocal pos
        if pos + n > len(view):
            raise FormatError("truncated", f"need {n} bytes at offset {pos}, file has {len(view)}")
        chunk = view[pos:pos + n]
        pos += n
        return chunk

    if bytes(take(4)) != MAGIC:
        raise FormatError("bad_magic", "not a tensor container (bad magic)")
    version, count = struct.unpack("<II", take(8))
    if version != VERSION:
        raise FormatError("version_mismatch", f"unsupported version {version}")
    out: "OrderedDict[str, np.ndarray]" = OrderedDict()
    for _ in range(count):
        (name_len,) = struct.unpack("<H", take(2))
        try:
            name = bytes(take(name_len)).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError("bad_name", "tensor name is not UTF-8") from exc
        (ndim,) = struct.unpack("<B", take(1))
        dims = struct.unpack(f"<{ndim}I", take(4 * ndim))
        (dtype,) = struct.unpack("<B", take(1))
        if dtype != DTYPE_F32:
            raise FormatError("bad_dtype", f"{name}: unsupported dtype code {dtype}")
        n = math.prod(dims)
        data = np.frombuffer(take(4 * n), dtype="<f4").astype(np.float32).reshape(dims)
        if name in out:
            raise FormatError("duplicate_name", f"tensor {name!r} appears twice")
        out[name] = data
    if pos != len(view):
        raise FormatError("trailing_bytes", f"{len(view) - pos} unexpected bytes after last tensor")
    return out


def save_tensors(tensors: Mapping[str, np.ndarray], path) -> int:
    data = encode_tensors(tensors)
    Path(path).write_bytes(data)
    return len(data)


def load_tensors(path) -> "OrderedDict[str, np.ndarray]":
    return decode_tensors(Path(path).read_bytes())


# ---------------------------------------------------------------------------
# weight store


@dataclass
class WeightStore(Mapping):
    tensors: "OrderedDict[str, np.ndarray]" = field(default_factory=OrderedDict)
    provenance: str = ""

    def __getitem__(self, name):
        return self.tensors[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self.tensors)

    def __len__(self):
        return len(self.tensors)

    def validate(self, cfg: ModelConfig, scope: str = "inference") -> "WeightStore":
        """Fail unless every tensor ``cfg`` needs in ``scope`` is present with its shape."""
        for name, shape in param_shapes(cfg, scope).items():
            if name not in self.tensors:
                raise FormatError("missing_tensor", f"weights lack {name!r}")
            if tuple(self.tensors[name].shape) != tuple(shape):
                raise FormatError(
                    "shape_mismatch",
                    f"{name}: file has {tuple(self.tensors[name].shape)}, config needs {shape}",
                )
        return self

    def astype(self, dtype) -> "WeightStore":
        return WeightStore(OrderedDict((k, v.astype(dtype)) for k, v in self.tensors.items()),
                           self.provenance)


def save_weights(store: Mapping[str, np.ndarray], path) -> int:
    return save_tensors(store, path)


def load_weights(path, cfg: Optional[ModelConfig] = None, scope: str = "inference") -> WeightStore:
    store = WeightStore(load_tensors(path), provenance=str(path))
    if cfg is not None:
        store.validate(cfg, scope)
    return store


def sub_seed(seed: int, name: str) -> int:
    """64-bit sub-seed: first 8 bytes (little-endian) of SHA-256 of ``"{seed}:{name}"``."""
    digest = hashlib.sha256(f"{seed}:{name}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def _fan_in(name: str, shapes: Mapping[str, tuple]) -> int:
    shape = shapes[name]
    if len(shape) >= 2:
        return math.prod(shape[1:])
    stem = name.rsplit(".", 1)[0]
    for weight in (f"{stem}.weight", f"{stem}.weight_re"):
        if weight in shapes:
            return math.prod(shapes[weight][1:])
    return shape[0]


def init_weights(cfg: ModelConfig, seed: int = 0, scope: str = "all") -> WeightStore:
    """Seeded random weights for every tensor in ``scope``.

    Each tensor ``name`` is drawn from ``uniform(-a, a)`` with
    ``a = sqrt(1 / fan_in)`` using sub-seed :func:`sub_seed` ``(seed, name)``;
    layer-norm gains are drawn from ``uniform(1 - a, 1 + a)``.
    """
    shapes = param_shapes(cfg, scope)
    out: "OrderedDict[str, np.ndarray]" = OrderedDict()
    for name, shape in shapes.items():
        a = math.sqrt(1.0 / _fan_in(name, shapes))
        centre = 1.0 if name.endswith(".gamma") else 0.0
        out[name] = rng_fill(shape, sub_seed(seed, name), Uniform(centre - a, centre + a))
    return WeightStore(out, provenance=f"seed:{seed}")


# ---------------------------------------------------------------------------
# WAV


def write_wav(samples, path, sample_rate: int = SAMPLE_RATE):
    """Write PCM16 mono; returns ``(bytes_written, n_clipped)``.

    Samples are clipped to [-1, 1] and scaled by 32767 with round-half-even.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("write_wav expects a 1-D waveform")
    if not np.all(np.isfinite(x)):
        raise ValueError("waveform contains non-finite samples")
    n_clipped = int(np.count_nonzero(np.abs(x) > 1.0))
    pcm = np.round(np.clip(x, -1.0, 1.0) * 32767.0).astype("<i2")
    with _wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(sample_rate)
        w.writeframes(pcm.tobytes())
    return Path(path).stat().st_size, n_clipped


def read_wav(path) -> np.ndarray:
    """Read PCM16 mono at 16 kHz into float32 samples in [-1, 1]."""
    with _wave.open(str(path), "rb") as w:
        if w.getnchannels() != 1 or w.getsampwidth() != 2:
            raise FormatError("bad_wav", "expected 16-bit mono PCM")
        if w.getframerate() != SAMPLE_RATE:
            raise FormatError("bad_wav", f"expected {SAMPLE_RATE} Hz, got {w.getframerate()}")
        pcm = np.frombuffer(w.readframes(w.getnframes()), dtype="<i2")
    return (pcm.astype(np.float32) / 32767.0).astype(np.float32)


# ---------------------------------------------------------------------------
# PPG / phoneme files


def save_ppg(ppg, path) -> int:
    return save_tensors({"ppg": np.asarray(ppg, dtype=np.float32)}, path)


def load_ppg(path, ppg_dim: Optional[int] = None) -> np.ndarray:
    t = load_tensors(path)
    if "ppg" not in t:
        raise FormatError("missing_tensor", "file has no tensor named 'ppg'")
    ppg = t["ppg"]
    if ppg.ndim != 2 or ppg.shape[0] < 1 or (ppg_dim is not None and ppg.shape[1] != ppg_dim):
        raise FormatError("shape_mismatch", f"ppg has shape {ppg.shape}")
    return ppg


def save_phonemes(ids, path) -> int:
    return save_tensors({"phoneme_ids": np.asarray(ids, dtype=np.float32)}, path)


def load_phonemes(path) -> np.ndarray:
    t = load_tensors(path)
    if "phoneme_ids" not in t:
        raise FormatError("missing_tensor", "file has no tensor named 'phoneme_ids'")
    ids = t["phoneme_ids"]
    if ids.ndim != 1 or not np.all(ids == np.round(ids)):
        raise FormatError("bad_ids", "phoneme_ids must be a 1-D tensor of integers")
    return ids.astype(np.int64)
