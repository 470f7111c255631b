"""One coupling network reused four times, told apart by a per-layer embedding row."""
import numpy as np

from litetts import ModelConfig, init_weights, ppg2wav
from litetts.complexity import count_params, coupling_param_count, fle_param_count
from litetts.numerics import Normal, rng_fill

cfg = ModelConfig()
shared = count_params(cfg).params["flow"]
unshared = count_params(cfg.replace(share_flow=False)).params["flow"]
print(f"flow params shared {shared:,} vs unshared {unshared:,}")
print(f"one coupling {coupling_param_count(cfg):,}, embedding table + projection "
      f"{fle_param_count(cfg):,}")

w = init_weights(cfg, seed=0, scope="inference")
z = rng_fill((80, cfg.latent_dim), 1, Normal())
fz, log_det = ppg2wav.flow_forward(z, w, cfg)
back = ppg2wav.flow_inverse(fz, w, cfg)
print("log_det:", log_det, " round-trip error:", float(np.abs(back - z).max()))

# each layer applies a different function even though the weights are shared
x = z.T
outs = [ppg2wav.coupling_step(x, w, cfg, k) for k in range(cfg.n_couplings)]
print("layer k vs layer 0 max difference:",
      [round(float(np.abs(o - outs[0]).max()), 4) for o in outs])
