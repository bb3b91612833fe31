import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from lmzip.corpus import synthetic_corpus
from lmzip.tokenizer import Vocabulary, tokenize

settings.register_profile(
    "suite",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def byte_vocab():
    return Vocabulary.bytes_only()


@pytest.fixture(scope="session")
def small_corpus():
    """60 KB of English-like text for module-level tests."""
    return synthetic_corpus(60_000, seed=9)


@pytest.fixture(scope="session")
def small_stream(small_corpus, byte_vocab):
    stream, _ = tokenize(small_corpus, byte_vocab)
    return stream


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
