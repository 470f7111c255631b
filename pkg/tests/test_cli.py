import json
import subprocess
import sys

import numpy as np
import pytest

from litetts import fileio
from litetts.cli import main
from litetts.config import micro_config, save_config


@pytest.fixture()
def workspace(tmp_path):
    cfg = micro_config()
    save_config(cfg, tmp_path / "micro.cfg")
    return tmp_path, cfg


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_analyze_json(capsys):
    code, out, _ = run(["analyze", "--scope", "inference", "--json"], capsys)
    d = json.loads(out)
    assert code == 0 and d["total_params"] == sum(d["params"].values())
    assert d["convention"] == "mac2" and d["n_frames"] == 80


def test_pipeline_is_deterministic(workspace, capsys):
    tmp, cfg = workspace
    c = tmp / "micro.cfg"
    assert run(["init-weights", "--config", c, "--seed", 3, "--out", tmp / "w.bin"], capsys)[0] == 0
    first = (tmp / "w.bin").read_bytes()
    run(["init-weights", "--config", c, "--seed", 3, "--out", tmp / "w.bin"], capsys)
    assert (tmp / "w.bin").read_bytes() == first

    fileio.save_phonemes([1, 4, 2, 7], tmp / "ids.bin")
    assert run(["text2ppg", "--config", c, "--weights", tmp / "w.bin", "--phonemes",
                tmp / "ids.bin", "--out", tmp / "p.bin"], capsys)[0] == 0
    ppg = fileio.load_ppg(tmp / "p.bin", cfg.ppg_dim)
    # the discriminators need at least one full window of their largest resolution
    ppg = np.concatenate([ppg] * 4)
    fileio.save_ppg(ppg, tmp / "p.bin")

    outs = []
    for name in ("a.wav", "b.wav"):
        code, text, _ = run(["synthesize", "--config", c, "--weights", tmp / "w.bin", "--ppg",
                             tmp / "p.bin", "--speaker", 1, "--seed", 5, "--out", tmp / name],
                            capsys)
        assert code == 0 and "samples" in text
        outs.append((tmp / name).read_bytes())
    assert outs[0] == outs[1]
    assert len(outs[0]) == 44 + 2 * ppg.shape[0] * cfg.hop

    code, text, _ = run(["losses", "--config", c, "--weights", tmp / "w.bin", "--wav",
                         tmp / "a.wav", "--ppg", tmp / "p.bin", "--speaker", 1, "--json"], capsys)
    d = json.loads(text)
    assert code == 0 and set(d) == {"L_ppg", "L_kl", "L_recon", "L_cvae", "L_adv_G", "L_adv_D",
                                    "L_fm", "L_G", "L_D"}
    assert d["L_cvae"] == d["L_kl"] + 45 * d["L_recon"] + 10 * d["L_ppg"]


def test_errors_are_one_line(workspace, capsys):
    tmp, _ = workspace
    (tmp / "bad.bin").write_bytes(b"NOPE" + bytes(20))
    code, _, err = run(["synthesize", "--config", tmp / "micro.cfg", "--weights", tmp / "bad.bin",
                        "--ppg", tmp / "bad.bin", "--speaker", 0, "--out", tmp / "o.wav"], capsys)
    assert code != 0 and err.count("\n") == 1 and err.startswith("error: bad_magic: ")
    (tmp / "typo.cfg").write_text("n_head = 2\n")
    code, _, err = run(["analyze", "--config", tmp / "typo.cfg"], capsys)
    assert code != 0 and err.startswith("error: config: ")
    fileio.save_ppg(np.zeros((2, 6)), tmp / "short.bin")
    run(["init-weights", "--config", tmp / "micro.cfg", "--seed", 0, "--out", tmp / "w.bin"],
        capsys)
    fileio.write_wav(np.zeros(32), tmp / "short.wav")
    code, _, err = run(["losses", "--config", tmp / "micro.cfg", "--weights", tmp / "w.bin",
                        "--wav", tmp / "short.wav", "--ppg", tmp / "short.bin", "--speaker", 0],
                       capsys)
    assert code == 1 and err.startswith("error: invalid_input: ")
    code, _, err = run(["analyze", "--config", tmp / "missing.cfg"], capsys)
    assert code != 0 and err.startswith("error: not_found: ")


def test_weights_missing_tensor_fail_before_compute(workspace, capsys):
    tmp, cfg = workspace
    from litetts import init_weights

    w = dict(init_weights(cfg, 0))
    del w["dec.stage.0.weight"]
    fileio.save_weights(w, tmp / "w.bin")
    fileio.save_ppg(np.zeros((4, cfg.ppg_dim)), tmp / "p.bin")
    code, _, err = run(["synthesize", "--config", tmp / "micro.cfg", "--weights", tmp / "w.bin",
                        "--ppg", tmp / "p.bin", "--speaker", 0, "--out", tmp / "o.wav"], capsys)
    assert code == 1 and err.startswith("error: missing_tensor: ")
    assert not (tmp / "o.wav").exists()


def test_selftest_subprocess():
    res = subprocess.run([sys.executable, "-m", "litetts", "selftest", "--filter", "cola"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("PASS cola")
