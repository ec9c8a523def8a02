"""
Shared fixtures: toy keys for exhaustive oracles and small session keys.
"""

import random

import pytest

from spamcraft.config import RunConfig
from spamcraft.crypto.paillier import keygen, keypair_from_primes


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: acceptance-sized runs that take more than a few seconds")


@pytest.fixture
def toy_keys():
    """N = 15, g = 16, lambda = 4, mu = 4."""
    return keypair_from_primes(3, 5)


@pytest.fixture
def small_keys():
    """A 15-bit modulus (127 * 131 = 16637)."""
    return keypair_from_primes(127, 131)


@pytest.fixture(scope="session")
def keys64():
    return keygen(64, random.Random(64))


@pytest.fixture(scope="session")
def keys256():
    return keygen(256, random.Random(256))


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture
def session_config():
    """Small, fully seeded training/evaluation parameters on a 256-bit key."""
    return RunConfig(key_bits=256, block_size=10, seed=7, eta=0.01, timeout=30.0)
