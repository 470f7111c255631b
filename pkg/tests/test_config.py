import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from litetts.config import (
    ConfigError, ModelConfig, format_config, load_config, micro_config, parse_config, save_config,
)


def test_defaults_roundtrip(tmp_path):
    cfg = ModelConfig()
    save_config(cfg, tmp_path / "c.cfg")
    assert load_config(tmp_path / "c.cfg") == cfg
    assert parse_config(format_config(micro_config())) == micro_config()


def test_partial_file_with_comments():
    cfg = parse_config("# comment\nshare_flow = false  # trailing\n\nn_heads = 2\n")
    assert cfg.share_flow is False and cfg.n_heads == 2
    assert cfg.latent_dim == ModelConfig().latent_dim


@pytest.mark.parametrize("text", [
    "no_such_key = 1",
    "n_heads = 2\nn_heads = 4",
    "n_heads 2",
    "n_heads = two",
    "share_flow = maybe",
    "n_heads = 5",                       # 128 not divisible by 5
    "dec_channels = 256, 384, 1000",     # last stage must be 2 * 513
    "flow_kernel = 4",
])
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        parse_config(text)


@settings(max_examples=25, deadline=None)
@given(heads=st.sampled_from([1, 2, 4, 8]), share=st.booleans(),
       kind=st.sampled_from(["linear", "scaled_dot"]), pps=st.floats(1, 30),
       spk=st.integers(1, 64))
def test_roundtrip_property(heads, share, kind, pps, spk):
    cfg = ModelConfig(n_heads=heads, share_flow=share, attention_kind=kind,
                      phonemes_per_second=pps, n_speakers=spk)
    assert parse_config(format_config(cfg)) == cfg
