"""Every training objective on one example, then a derivative check along a random direction."""
from litetts import init_weights, micro_config
from litetts.losses import LOSS_IDS, directional_grad_check, evaluate_losses
from litetts.numerics import Normal, rng_fill

cfg = micro_config()
weights = init_weights(cfg, seed=0)

n = 24
wave = rng_fill((n * cfg.hop,), 1, Normal(0, 0.3))
ppg = rng_fill((n, cfg.ppg_dim), 2, Normal())
for k, v in evaluate_losses(wave, ppg, 0, weights, cfg, seed=0).as_dict().items():
    print(f"{k:<9}{v:10.4f}")

# dual numbers vs central differences
for lid in LOSS_IDS:
    ad, fd, rel = directional_grad_check(lid, weights, cfg, direction_seed=0, eps=1e-4)
    print(f"{lid:<10} dual {ad: .6e}  finite diff {fd: .6e}  rel err {rel:.1e}")
