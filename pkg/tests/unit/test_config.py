"""
Tests for run configuration and seed derivation.
"""

import numpy as np
import pytest

from spamcraft.config import (
    RunConfig,
    derive_seed,
    load_config,
    make_generator,
    make_random,
    parse_address,
    parse_config_text,
    seed_for,
)
from spamcraft.exceptions import ConfigurationError
from spamcraft.protocol import blinding


def test_defaults_validate():
    cfg = RunConfig().validate()
    assert cfg.key_bits == 1024
    assert cfg.scale == 10 ** 6
    assert cfg.eta == 0.001


def test_small_keys_need_permission():
    with pytest.raises(ConfigurationError, match="insecure"):
        RunConfig(key_bits=256).validate()
    RunConfig(key_bits=256, allow_insecure_keys=True).validate()
    RunConfig(key_bits=256).validate(under_test=True)


def test_key_too_small_for_the_plan():
    with pytest.raises(ConfigurationError):
        RunConfig(key_bits=128).validate(under_test=True)


@pytest.mark.parametrize("overrides", [
    dict(key_bits=255),
    dict(eta=0.0),
    dict(reg_lambda=-0.1),
    dict(block_size=0),
    dict(mode='stochastic'),
    dict(transport='carrier-pigeon'),
    dict(reduction='svd', reduction_dim=5),
    dict(reduction='lsh'),
    dict(rounds=0),
    dict(address='localhost'),
])
def test_invalid_values(overrides):
    with pytest.raises(ConfigurationError):
        RunConfig(**overrides).validate(under_test=True)


def test_parse_config_text():
    text = "# run\nkey_bits = 512\n\neta=0.01   # faster\nreduction = lsh\n"
    assert parse_config_text(text) == {'key_bits': '512', 'eta': '0.01', 'reduction': 'lsh'}
    with pytest.raises(ConfigurationError):
        parse_config_text("just words\n")


def test_load_config_coerces_types(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("key_bits=512\nscale=1e6\nseed=42\nallow_insecure_keys=yes\nreduction_dim=none\n")
    cfg = load_config(path)
    assert cfg.key_bits == 512
    assert cfg.scale == 1_000_000
    assert cfg.seed == 42
    assert cfg.allow_insecure_keys is True
    assert cfg.reduction_dim is None


def test_unknown_and_malformed_keys(tmp_path):
    with pytest.raises(ConfigurationError, match="Available"):
        RunConfig.from_mapping({'kee_bits': '512'})
    with pytest.raises(ConfigurationError):
        RunConfig.from_mapping({'eta': 'fast'})
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "missing.cfg")


def test_overrides_skip_none():
    cfg = RunConfig(eta=0.01).with_overrides(eta=None, block_size=7, reduction='lsh')
    assert cfg.eta == 0.01
    assert cfg.block_size == 7
    assert cfg.reduction == 'lsh'


def test_describe_is_all_strings():
    described = RunConfig(seed=5).describe()
    assert described['seed'] == '5'
    assert described['reduction'] == ''
    assert all(isinstance(v, str) for v in described.values())


def test_parse_address():
    assert parse_address('127.0.0.1:7007') == ('127.0.0.1', 7007)
    assert parse_address('bob-host:80') == ('bob-host', 80)
    with pytest.raises(ConfigurationError):
        parse_address(':80')


class TestSeeds:
    """One master seed fans out by label."""

    def test_derivation_is_stable_and_labeled(self):
        assert derive_seed(7, 'keygen') == derive_seed(7, 'keygen')
        assert derive_seed(7, 'keygen') != derive_seed(7, 'bob-train-1')
        assert derive_seed(7, 'keygen') != derive_seed(8, 'keygen')
        assert 0 <= derive_seed(7, 'keygen') < 1 << 64

    def test_generators_repeat(self):
        assert make_random(3, 'x').random() == make_random(3, 'x').random()
        assert make_generator(3, 'x').random() == make_generator(3, 'x').random()
        assert seed_for(3, 'x') == derive_seed(3, 'x')

    def test_unseeded_runs(self):
        assert seed_for(None, 'x') is None
        assert make_random(None, 'x').random() != make_random(None, 'x').random()
        assert make_generator(None, 'x').random() != make_generator(None, 'x').random()

    def test_unseeded_generator_draws_seed_from_secrets(self, monkeypatch):
        monkeypatch.setattr(blinding.secrets, 'randbits', lambda bits: 2 ** (bits - 1) + 11)
        expected = np.random.default_rng(2 ** 127 + 11).random(3)
        assert make_generator(None, 'blinds').random(3).tolist() == expected.tolist()
