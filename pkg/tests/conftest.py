import numpy as np
import pytest

from structmark import Nonce, SecretKey, TemplateParams, canonical_codebook


@pytest.fixture
def key():
    return SecretKey(bytes(range(32)))


@pytest.fixture
def other_key():
    return SecretKey(bytes(range(1, 33)))


@pytest.fixture
def nonce():
    return Nonce(bytes(range(16)))


@pytest.fixture
def cb():
    return canonical_codebook()


@pytest.fixture
def small_params():
    # D=256: 4 bins of 64, blocks of 8 -> 8 groups, 32 blocks, 32-bit payload
    return TemplateParams(size=256, num_bins=4, block_size=8)


@pytest.fixture
def tiny_params():
    # D=8: 4 bins of 2, singleton blocks -> 2 groups, 8-bit payload
    return TemplateParams(size=8, num_bins=4, block_size=1)


@pytest.fixture
def rng():
    return np.random.default_rng(0xC0FFEE)
