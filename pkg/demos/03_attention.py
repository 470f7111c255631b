"""Linear attention reorders the product so cost grows linearly with length."""
import numpy as np

from litetts.nn_blocks import ParamView, linear_attention, scaled_dot_attention
from litetts.numerics import Normal, count_macs, rng_fill

d, heads = 64, 4
w = {}
for i, name in enumerate("qkvo"):
    w[f"{name}.weight"] = rng_fill((d, d), 2 * i, Normal(0, d ** -0.5))
    w[f"{name}.bias"] = np.zeros(d, np.float32)
p = ParamView(w)

# with a single position both reduce to the value projection
x1 = rng_fill((1, d), 9, Normal())
print("T=1 difference:", float(np.abs(linear_attention(x1, p, heads)
                                      - scaled_dot_attention(x1, p, heads)).max()))

for t in (16, 80, 320, 1280):
    x = rng_fill((t, d), t, Normal())
    with count_macs() as lin:
        linear_attention(x, p, heads)
    with count_macs() as sd:
        scaled_dot_attention(x, p, heads)
    print(f"T={t:>5}  linear {lin.macs:>11,} MACs   scaled-dot {sd.macs:>11,} MACs")
