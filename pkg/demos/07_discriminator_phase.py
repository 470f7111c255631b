"""Magnitude spectra ignore phase; the complex-valued discriminator does not."""
import numpy as np

from litetts import ModelConfig, init_weights
from litetts.discriminators import mcd_forward, msd_forward

cfg = ModelConfig()
w = init_weights(cfg, seed=1, scope="training")

t = np.arange(8192) / 16000
a = np.sin(2 * np.pi * 1000 * t).astype(np.float32)
for shift in (0.0, np.pi / 4, np.pi / 2, np.pi):
    b = np.sin(2 * np.pi * 1000 * t + shift).astype(np.float32)
    d_msd = max(float(np.abs(x - y).max())
                for x, y in zip(msd_forward(a, w, cfg).scores, msd_forward(b, w, cfg).scores))
    d_mcd = max(float(np.abs(x - y).max())
                for x, y in zip(mcd_forward(a, w, cfg).scores, mcd_forward(b, w, cfg).scores))
    print(f"phase shift {shift:.3f}: magnitude disc diff {d_msd:.2e}, complex disc diff {d_mcd:.2e}")
