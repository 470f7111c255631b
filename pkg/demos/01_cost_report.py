"""Parameter and FLOP accounting for the default model and a few what-if variants."""
from litetts import ModelConfig
from litetts.complexity import count_flops, count_params

cfg = ModelConfig()

# inference path: text -> PPG -> waveform
print(count_flops(cfg, seconds=1.0).format_table())
print()

# everything that exists only while training
train = count_params(cfg, "training")
extra = {m: n for m, n in train.params.items() if m not in count_params(cfg).params}
print("training-only modules:", {m: f"{n / 1e6:.2f} M" for m, n in extra.items()})
print()

# what each design choice buys
base = count_flops(cfg, 1.0)
variants = {
    "no flow sharing": cfg.replace(share_flow=False),
    "scaled-dot attention": cfg.replace(attention_kind="scaled_dot"),
    "upsampling decoder": cfg.replace(decoder_kind="upsampling_baseline"),
}
print(f"{'variant':<24}{'params (M)':>12}{'GFLOPs/s':>10}")
print(f"{'default':<24}{base.total_params / 1e6:>12.2f}{base.gflops_per_second:>10.3f}")
for name, v in variants.items():
    r = count_flops(v, 1.0)
    print(f"{name:<24}{r.total_params / 1e6:>12.2f}{r.gflops_per_second:>10.3f}")

# quadratic attention only hurts on long inputs
for s in (1, 4, 16):
    gap = (count_flops(variants["scaled-dot attention"], s).total_flops
           - count_flops(cfg, s).total_flops)
    print(f"{s:>3} s: scaled-dot costs {gap / 1e9:.4f} GFLOPs more")
