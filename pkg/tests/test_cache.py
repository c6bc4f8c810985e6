import pytest

from scslab.cache import CoefficientCache, read_coefficients, write_coefficients
from scslab.errors import CacheCorruptionError


def test_round_trip(tmp_path, small_forms):
    f = small_forms[16]
    path = tmp_path / 'coeffs.txt'
    write_coefficients(path, f.weight, f.coeffs)
    weight, coeffs = read_coefficients(path, f.weight, f.N)
    assert weight == 16
    assert coeffs == f.coeffs


@pytest.mark.parametrize('content', [
    'garbage\n1 1\n',
    'SCSLAB-COEFFS v1 weight=12 N=3\n1 1\n2 -24\n',
    'SCSLAB-COEFFS v1 weight=12 N=2\n1 1\n3 252\n',
    'SCSLAB-COEFFS v1 weight=12 N=2\n1 1\n2 x\n',
])
def test_corruption(tmp_path, content):
    path = tmp_path / 'bad.txt'
    path.write_text(content)
    with pytest.raises(CacheCorruptionError):
        read_coefficients(path)


def test_mismatched_header(tmp_path):
    path = tmp_path / 'coeffs.txt'
    write_coefficients(path, 12, (0, 1, -24))
    with pytest.raises(CacheCorruptionError):
        read_coefficients(path, weight=16)
    with pytest.raises(CacheCorruptionError):
        read_coefficients(path, N=3)


def test_load_or_build(cache_dir):
    cache = CoefficientCache(cache_dir)
    assert cache.load(12, 30) is None
    assert cache.cache_id(12, 30) is None

    f = cache.load_or_build(12, 30)
    assert cache.path_for(12, 30).exists()
    assert cache.load(12, 30).coeffs == f.coeffs
    assert cache.entries() == [(12, 30, cache.path_for(12, 30))]

    # only exact entries are reused
    assert cache.load(12, 20) is None
    assert cache.cache_id(12, 30).startswith('coeffs_k12_N30.txt:')


def test_env_overrides_cache_dir(tmp_path, monkeypatch):
    monkeypatch.setenv('SCSLAB_CACHE_DIR', str(tmp_path / 'env'))
    assert CoefficientCache('elsewhere').cache_dir == tmp_path / 'env'


def test_house_keeping(cache_dir):
    (cache_dir / 'coeffs_k12_N5.txt.tmp').write_text('partial')
    cache = CoefficientCache(cache_dir)
    cache.house_keeping()
    assert not list(cache_dir.glob('*.tmp'))
