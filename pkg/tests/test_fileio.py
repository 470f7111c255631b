import struct
import wave

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.io import wavfile

from litetts import fileio
from litetts.fileio import FormatError, decode_tensors, encode_tensors, init_weights
from litetts.numerics import Normal, rng_fill


def _store():
    return {"a.weight": rng_fill((3, 4), 0, Normal()), "b": rng_fill((5,), 1, Normal()),
            "c": rng_fill((2, 1, 3), 2, Normal())}


def test_container_roundtrip_and_layout(tmp_path):
    t = _store()
    n = fileio.save_tensors(t, tmp_path / "w.bin")
    raw = (tmp_path / "w.bin").read_bytes()
    assert n == len(raw)
    assert raw[:4] == b"ADVT" and struct.unpack("<II", raw[4:12]) == (1, 3)
    back = fileio.load_tensors(tmp_path / "w.bin")
    assert list(back) == list(t)
    for k in t:
        assert back[k].tobytes() == t[k].tobytes()
    assert encode_tensors(back) == raw


@settings(max_examples=30, deadline=None)
@given(shapes=st.lists(st.lists(st.integers(1, 4), min_size=1, max_size=3), min_size=1,
                       max_size=4), seed=st.integers(0, 1000))
def test_container_roundtrip_property(shapes, seed):
    t = {f"t{i}": rng_fill(s, seed + i, Normal()) for i, s in enumerate(shapes)}
    back = decode_tensors(encode_tensors(t))
    assert all(back[k].tobytes() == t[k].tobytes() for k in t)


def _kind(buf):
    with pytest.raises(FormatError) as e:
        decode_tensors(buf)
    return e.value.kind


def test_container_errors():
    good = encode_tensors(_store())
    assert _kind(b"XXXX" + good[4:]) == "bad_magic"
    assert _kind(good[:4] + struct.pack("<I", 2) + good[8:]) == "version_mismatch"
    assert _kind(good[:-3]) == "truncated"
    assert _kind(good + b"\0") == "trailing_bytes"
    one = encode_tensors({"x": np.zeros(2, np.float32)})
    dup = one[:8] + struct.pack("<I", 2) + one[12:] + one[12:]
    assert _kind(dup) == "duplicate_name"
    bad_dtype = bytearray(one)
    bad_dtype[12 + 2 + 1 + 1 + 4] = 7
    assert _kind(bytes(bad_dtype)) == "bad_dtype"


def test_weight_store_validation(tmp_path, micro):
    w = init_weights(micro, 0)
    fileio.save_weights(w, tmp_path / "w.bin")
    back = fileio.load_weights(tmp_path / "w.bin", micro, "all")
    assert list(back) == list(w)
    missing = {k: v for k, v in w.items() if k != "flow.fle"}
    fileio.save_weights(missing, tmp_path / "m.bin")
    with pytest.raises(FormatError) as e:
        fileio.load_weights(tmp_path / "m.bin", micro)
    assert e.value.kind == "missing_tensor"
    wrong = dict(w)
    wrong["flow.fle"] = np.zeros((1, 1), np.float32)
    fileio.save_weights(wrong, tmp_path / "s.bin")
    with pytest.raises(FormatError) as e:
        fileio.load_weights(tmp_path / "s.bin", micro)
    assert e.value.kind == "shape_mismatch"


def test_init_weights_contracts(micro):
    a, b = init_weights(micro, 1), init_weights(micro, 1)
    assert all(a[k].tobytes() == b[k].tobytes() for k in a)
    c = init_weights(micro, 2)
    assert any(a[k].tobytes() != c[k].tobytes() for k in a)
    w = a["flow.shared.wn.in.0.weight"]
    bound = (1.0 / (w.shape[1] * w.shape[2])) ** 0.5
    assert np.abs(w).max() <= bound
    assert fileio.sub_seed(1, "x") != fileio.sub_seed(1, "y")


def test_wav_header_scaling_and_independent_reader(tmp_path):
    size, clipped = fileio.write_wav(np.zeros(16000, np.float32), tmp_path / "z.wav")
    assert size == 44 + 32000 and clipped == 0
    x = np.array([1.0, -1.0, 0.5, 2.0, -3.0], np.float32)
    _, clipped = fileio.write_wav(x, tmp_path / "x.wav")
    assert clipped == 2
    rate, pcm = wavfile.read(tmp_path / "x.wav")
    assert rate == 16000 and pcm.dtype == np.int16
    assert list(pcm) == [32767, -32767, 16384, 32767, -32767]
    y = rng_fill((3000,), 3, Normal(0, 0.3))
    y = np.clip(y, -1, 1)
    fileio.write_wav(y, tmp_path / "y.wav")
    _, pcm = wavfile.read(tmp_path / "y.wav")
    assert np.abs(pcm / 32767.0 - y).max() <= 1 / 32768
    np.testing.assert_array_equal(fileio.read_wav(tmp_path / "y.wav"), pcm / np.float32(32767.0))
    with wave.open(str(tmp_path / "y.wav")) as w:
        assert (w.getnchannels(), w.getsampwidth(), w.getframerate()) == (1, 2, 16000)


def test_wav_rejects_non_finite(tmp_path):
    with pytest.raises(ValueError):
        fileio.write_wav(np.array([np.nan]), tmp_path / "n.wav")


def test_ppg_and_phoneme_files(tmp_path):
    fileio.save_ppg(np.ones((3, 4)), tmp_path / "p.bin")
    assert fileio.load_ppg(tmp_path / "p.bin", 4).shape == (3, 4)
    with pytest.raises(FormatError):
        fileio.load_ppg(tmp_path / "p.bin", 5)
    fileio.save_phonemes([3, 1, 2], tmp_path / "ids.bin")
    assert list(fileio.load_phonemes(tmp_path / "ids.bin")) == [3, 1, 2]
    fileio.save_tensors({"phoneme_ids": np.array([1.5], np.float32)}, tmp_path / "bad.bin")
    with pytest.raises(FormatError):
        fileio.load_phonemes(tmp_path / "bad.bin")
