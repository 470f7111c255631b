"""Quick invariant checks runnable without pytest (``litetts selftest``)."""
from __future__ import annotations

from typing import Callable, Dict, Tuple

import numpy as np

from . import complexity, dsp, ppg2wav
from .config import ModelConfig, micro_config
from .fileio import decode_tensors, encode_tensors, init_weights
from .losses import directional_grad_check, total_losses
from .nn_blocks import ParamView, linear_attention, scaled_dot_attention
from .numerics import Normal, Rng, count_macs, rng_fill

CHECKS: Dict[str, Callable[[], Tuple[bool, str]]] = {}


def check(fn):
    CHECKS[fn.__name__] = fn
    return fn


@check
def cola():
    cfg = dsp.StftConfig()
    w2 = dsp.window(cfg) ** 2
    total = np.zeros(cfg.fft_size * 8)
    for i in range(0, total.size - cfg.fft_size + 1, cfg.hop):
        total[i:i + cfg.fft_size] += w2
    interior = total[cfg.fft_size:-cfg.fft_size]
    dev = float(np.max(np.abs(interior / interior.mean() - 1)))
    return dev < 1e-6, f"max relative deviation {dev:.2e}"


@check
def stft_roundtrip():
    x = Rng(0).uniform((16000,), -1, 1)
    y = dsp.istft(dsp.stft(x), target_len=x.size)
    err = float(np.linalg.norm(y - x) / np.linalg.norm(x))
    return err < 1e-6, f"relative L2 {err:.2e}"


@check
def attention():
    d, heads = 8, 2
    w = {f"{p}.{s}": rng_fill((d, d) if s == "weight" else (d,), i, Normal(0, 0.5))
         for i, (p, s) in enumerate((p, s) for p in "qkvo" for s in ("weight", "bias"))}
    x = rng_fill((1, d), 99, Normal())
    diff = np.max(np.abs(linear_attention(x, ParamView(w), heads)
                         - scaled_dot_attention(x, ParamView(w), heads)))
    return diff < 1e-6, f"T=1 scaled-dot vs linear {diff:.2e}"


@check
def flow_bijective():
    cfg = micro_config()
    w = init_weights(cfg, 3)
    z = rng_fill((20, cfg.latent_dim), 4, Normal())
    fz, log_det = ppg2wav.flow_forward(z, w, cfg)
    err = float(np.max(np.abs(ppg2wav.flow_inverse(fz, w, cfg) - z)))
    return err < 1e-5 and log_det == 0, f"round trip {err:.2e}, log_det {log_det}"


@check
def loss_identities():
    r = total_losses(L_kl=1, L_recon=1, L_ppg=1, L_adv_G=2, L_adv_D=0.5, L_fm=3)
    ok = r.L_cvae == 56 and r.L_G == 2 + 6 + 56 and r.L_D == 0.5
    return ok, f"L_cvae={r.L_cvae} L_G={r.L_G}"


@check
def mac_equality():
    cfg = micro_config()
    w = init_weights(cfg, 0)
    ppg = rng_fill((9, cfg.ppg_dim), 1, Normal())
    with count_macs() as c:
        ppg2wav.synthesize(ppg, 0, w, cfg, temperature=0.0)
    want = (complexity.prior_macs(cfg, 9) + complexity.flow_macs(cfg, 9)
            + complexity.decoder_macs(cfg, 9))
    return c.macs == want, f"runtime {c.macs} vs analytic {want}"


@check
def flow_sharing_identity():
    cfg = ModelConfig()
    delta = (complexity.count_params(cfg.replace(share_flow=False)).total_params
             - complexity.count_params(cfg).total_params)
    want = ((cfg.n_couplings - 1) * complexity.coupling_param_count(cfg)
            - complexity.fle_param_count(cfg))
    return delta == want, f"delta {delta} vs {want}"


@check
def grad_check():
    cfg = micro_config()
    w = init_weights(cfg, 0)
    worst = 0.0
    for lid in ("recon", "kl", "ppg", "fm"):
        worst = max(worst, directional_grad_check(lid, w, cfg, 0, 1e-4)[2])
    return worst < 1e-3, f"worst relative error {worst:.2e}"


@check
def container_roundtrip():
    t = {"a": rng_fill((3, 4), 0, Normal()), "b": rng_fill((5,), 1, Normal())}
    back = decode_tensors(encode_tensors(t))
    ok = list(back) == list(t) and all(np.array_equal(back[k], t[k]) for k in t)
    return ok, "bit-exact" if ok else "mismatch"


def run(name_filter: str | None = None, out=None) -> bool:
    import sys

    out = out or sys.stdout
    all_ok = True
    for name, fn in CHECKS.items():
        if name_filter and name_filter not in name:
            continue
        try:
            ok, detail = fn()
        except Exception as exc:  # report and continue with the next check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        all_ok &= ok
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}", file=out)
    return all_ok
