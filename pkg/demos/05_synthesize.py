"""Phoneme ids to a 16 kHz WAV file with random weights (the audio is noise)."""
import sys
import tempfile
import time
from pathlib import Path

from litetts import ModelConfig, init_weights, ppg2wav
from litetts.fileio import write_wav
from litetts.text2ppg import text2ppg_forward

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.gettempdir()) / "demo.wav"

cfg = ModelConfig()
weights = init_weights(cfg, seed=0, scope="inference")

ids = [5, 17, 42, 8, 8, 63, 2, 90, 31, 12]
t0 = time.perf_counter()
ppg, durations = text2ppg_forward(ids, weights, cfg)
print("durations:", durations, "-> PPG", ppg.shape)

wave = ppg2wav.synthesize(ppg, speaker_id=3, weights=weights, cfg=cfg, temperature=0.667, seed=0)
elapsed = time.perf_counter() - t0
print(f"{wave.shape[0]} samples ({wave.shape[0] / 16000:.2f} s) in {elapsed:.2f} s")

size, clipped = write_wav(wave, out)
print(f"wrote {out} ({size} bytes, {clipped} samples clipped)")
