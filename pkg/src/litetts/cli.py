"""Command-line entry point: ``litetts <command> ...``.

Errors are reported on stderr as one line ``error: <kind>: <message>`` with a
non-zero exit status.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import complexity, fileio, losses, ppg2wav, selftest, text2ppg
from .config import ConfigError, ModelConfig, load_config


def _config(args) -> ModelConfig:
    return load_config(args.config) if args.config else ModelConfig()


def cmd_analyze(args) -> int:
    cfg = _config(args)
    rep = complexity.count_flops(cfg, args.seconds, args.scope, args.convention)
    print(rep.to_json() if args.json else rep.format_table())
    return 0


def cmd_init_weights(args) -> int:
    cfg = _config(args)
    store = fileio.init_weights(cfg, args.seed, args.scope)
    n = fileio.save_weights(store, args.out)
    print(f"wrote {len(store)} tensors ({n} bytes) to {args.out}")
    return 0


def cmd_text2ppg(args) -> int:
    cfg = _config(args)
    store = fileio.load_weights(args.weights, cfg, "inference")
    ids = fileio.load_phonemes(args.phonemes)
    ppg, durations = text2ppg.text2ppg_forward(ids, store, cfg)
    fileio.save_ppg(ppg, args.out)
    print(f"wrote ppg with {ppg.shape[0]} frames ({len(ids)} phonemes) to {args.out}")
    return 0


def cmd_synthesize(args) -> int:
    cfg = _config(args)
    store = fileio.load_weights(args.weights, cfg, "inference")
    ppg = fileio.load_ppg(args.ppg, cfg.ppg_dim)
    wave = ppg2wav.synthesize(ppg, args.speaker, store, cfg, args.temperature, args.seed)
    size, clipped = fileio.write_wav(wave, args.out)
    print(f"wrote {wave.shape[0]} samples ({size} bytes, {clipped} clipped) to {args.out}")
    return 0


def cmd_losses(args) -> int:
    cfg = _config(args)
    store = fileio.load_weights(args.weights, cfg, "training")
    ppg = fileio.load_ppg(args.ppg, cfg.ppg_dim)
    wave = fileio.read_wav(args.wav)
    rep = losses.evaluate_losses(wave, ppg, args.speaker, store, cfg, seed=args.seed)
    d = rep.as_dict()
    if args.json:
        print(json.dumps(d, indent=2))
    else:
        for k, v in d.items():
            print(f"{k:<10}{v: .6f}")
    return 0


def cmd_selftest(args) -> int:
    return 0 if selftest.run(args.filter) else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="litetts", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=fn)
        if name != "selftest":
            p.add_argument("--config", help="config file (default: built-in configuration)")
        return p

    p = add("analyze", cmd_analyze, "parameter and FLOP report")
    p.add_argument("--scope", choices=complexity.SCOPES, default="inference")
    p.add_argument("--seconds", type=float, default=1.0)
    p.add_argument("--convention", choices=complexity.CONVENTIONS, default="mac2")
    p.add_argument("--json", action="store_true")

    p = add("init-weights", cmd_init_weights, "write seeded random weights")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--scope", choices=complexity.SCOPES, default="all")
    p.add_argument("--out", required=True)

    p = add("text2ppg", cmd_text2ppg, "phoneme ids -> PPG container")
    p.add_argument("--weights", required=True)
    p.add_argument("--phonemes", required=True)
    p.add_argument("--out", required=True)

    p = add("synthesize", cmd_synthesize, "PPG + speaker -> 16 kHz WAV")
    p.add_argument("--weights", required=True)
    p.add_argument("--ppg", required=True)
    p.add_argument("--speaker", type=int, required=True)
    p.add_argument("--temperature", type=float, default=0.667)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = add("losses", cmd_losses, "evaluate every loss term on one example")
    p.add_argument("--weights", required=True)
    p.add_argument("--wav", required=True)
    p.add_argument("--ppg", required=True)
    p.add_argument("--speaker", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")

    p = add("selftest", cmd_selftest, "run the built-in invariant checks")
    p.add_argument("--filter", default=None, help="only checks whose name contains this")
    return ap


def _kind(exc: Exception) -> str:
    if isinstance(exc, fileio.FormatError):
        return exc.kind
    if isinstance(exc, ConfigError):
        return "config"
    if isinstance(exc, FileNotFoundError):
        return "not_found"
    if isinstance(exc, OSError):
        return "io"
    if type(exc) is ValueError:
        return "invalid_input"
    return type(exc).__name__


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, NotImplementedError, FloatingPointError, KeyError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        if isinstance(exc, fileio.FormatError):
            msg = msg.split(": ", 1)[-1]
        print(f"error: {_kind(exc)}: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
