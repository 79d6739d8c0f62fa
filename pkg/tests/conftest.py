import numpy as np
import pytest

from p3photo.corpus import encode_rgb_jpeg, synthetic_rgb, write_corpus

CORPUS_SEED = 7


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    """The evaluation corpus: 12 synthetic photographs, mixed formats."""
    dest = tmp_path_factory.mktemp("corpus")
    write_corpus(dest, count=12, seed=CORPUS_SEED)
    return dest


@pytest.fixture(scope="session")
def corpus_paths(corpus_dir):
    return sorted(corpus_dir.glob("*.jpg"))


@pytest.fixture(scope="session")
def large_corpus_paths(tmp_path_factory):
    """Three photographs of at least 1 MB each (slow to build; session-wide)."""
    from p3photo.corpus import write_large_corpus
    dest = tmp_path_factory.mktemp("corpus_large")
    return write_large_corpus(dest, count=3, seed=99)


@pytest.fixture(scope="session")
def small_jpeg():
    """A quick 160x120 4:2:0 test photo."""
    rgb = synthetic_rgb(42, 160, 120)
    return encode_rgb_jpeg(rgb, sampling="420")


@pytest.fixture(scope="session")
def small_gray_jpeg():
    rgb = synthetic_rgb(43, 160, 120)
    return encode_rgb_jpeg(rgb, sampling="gray")


@pytest.fixture(scope="session")
def medium_jpeg():
    """One 512x512 4:2:0 photo for metric-level tests."""
    rgb = synthetic_rgb(44, 512, 512)
    return encode_rgb_jpeg(rgb, sampling="420")


@pytest.fixture()
def key():
    return bytes(range(32))


@pytest.fixture()
def server():
    """A live mock provider on an ephemeral port."""
    from p3photo.service import ServerThread
    with ServerThread() as st:
        yield st
