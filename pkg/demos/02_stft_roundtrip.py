"""The decoder predicts a complex spectrum, so the STFT pair must invert exactly."""
import numpy as np

from litetts import dsp
from litetts.numerics import Rng

cfg = dsp.StftConfig()           # 1024-point FFT, 200-sample hop, 800-sample Hann
x = Rng(0).uniform((16000,), -1, 1)

spec = dsp.stft(x, cfg)
print("bins x frames:", spec.real.shape)

y = dsp.istft(spec, target_len=x.size)
print("relative L2 error:", np.linalg.norm(y - x) / np.linalg.norm(x))

# a 1 kHz tone lands on bin 64
tone = np.sin(2 * np.pi * 1000 * np.arange(16000) / 16000)
print("peak bin of 1 kHz tone:", int(np.argmax(dsp.linear_spectrogram(tone)[:, 40])))

mel = dsp.mel_spectrogram(x)
print("log-mel shape:", mel.shape, "range:", float(mel.min()), float(mel.max()))
