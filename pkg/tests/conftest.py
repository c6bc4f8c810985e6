import pytest

from scslab.eigenforms import build_eigenform


@pytest.fixture(scope='session')
def delta():
    """ Weight 12, enough coefficients for X = 100 sums and both L-value methods. """
    return build_eigenform(12, 4000)


@pytest.fixture(scope='session')
def large_delta():
    """ Weight 12 past N = 10^5, for the full-size L-value and small-alpha checks. """
    return build_eigenform(12, 2 ** 17 - 1)


@pytest.fixture(scope='session')
def small_forms():
    return {k: build_eigenform(k, 300) for k in (12, 16, 18, 20, 22, 26)}


@pytest.fixture
def cache_dir(tmp_path, monkeypatch):
    monkeypatch.delenv('SCSLAB_CACHE_DIR', raising=False)
    path = tmp_path / 'coeff_cache'
    path.mkdir()
    return path
