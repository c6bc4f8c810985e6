import hashlib
import logging
import os
import re
from pathlib import Path

from .eigenforms import Eigenform, build_eigenform
from .errors import CacheCorruptionError

log = logging.getLogger(__name__)

CACHE_ENV = 'SCSLAB_CACHE_DIR'
DEFAULT_CACHE_DIR = 'coeff_cache'

HEADER_FORMAT = 'SCSLAB-COEFFS v1 weight={weight} N={N}'
_HEADER_RE = re.compile(r'^SCSLAB-COEFFS v1 weight=(\d+) N=(\d+)$')
_ENTRY_RE = re.compile(r'^coeffs_k(\d+)_N(\d+)\.txt$')


def write_coefficients(path, weight, coeffs):
    """ Writes a(1..N) in the cache text format, atomically (temp file + rename). """
    path = Path(path)
    N = len(coeffs) - 1
    tmp_path = path.with_name(path.name + '.tmp')
    with open(tmp_path, 'w') as fp:
        fp.write(HEADER_FORMAT.format(weight=weight, N=N) + '\n')
        for n in range(1, N + 1):
            fp.write(f'{n} {coeffs[n]}\n')
    os.replace(tmp_path, path)


def read_coefficients(path, weight=None, N=None):
    """ Reads a cache file and validates it.

    Args:
        path (str or Path): the cache file.
        weight (int): expected weight, not checked if None.
        N (int): expected truncation, not checked if None.

    Returns:
        tuple: (weight, coeffs) with coeffs = (0, a(1), ..., a(N)).

    Raises:
        CacheCorruptionError: on a malformed header, mismatching fields or a wrong line count.
    """
    path = Path(path)
    hint = f'delete {path} or run `verify.py build-cache --force`'

    with open(path) as fp:
        header = fp.readline().strip()
        match = _HEADER_RE.match(header)
        if match is None:
            raise CacheCorruptionError(f'{path}: bad header {header!r}; {hint}')

        file_weight, file_N = map(int, match.groups())
        if weight is not None and file_weight != weight:
            raise CacheCorruptionError(f'{path}: header weight={file_weight}, expected {weight}; {hint}')
        if N is not None and file_N != N:
            raise CacheCorruptionError(f'{path}: header N={file_N}, expected {N}; {hint}')

        coeffs = [0]
        for line in fp:
            line = line.strip()
            if not line:
                continue
            try:
                n, a = line.split()
                n, a = int(n), int(a)
            except ValueError:
                raise CacheCorruptionError(f'{path}: malformed line {len(coeffs) + 1}: {line!r}; {hint}')
            if n != len(coeffs):
                raise CacheCorruptionError(f'{path}: expected index {len(coeffs)}, found {n}; {hint}')
            coeffs.append(a)

    if len(coeffs) - 1 != file_N:
        raise CacheCorruptionError(f'{path}: header says N={file_N} but {len(coeffs) - 1} coefficients follow; {hint}')

    return file_weight, tuple(coeffs)


def default_cache_dir(cache_dir=None):
    """ SCSLAB_CACHE_DIR if set, else `cache_dir`, else ./coeff_cache. """
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path(cache_dir if cache_dir is not None else DEFAULT_CACHE_DIR)


class CoefficientCache:
    """ Directory of coefficient files keyed by (weight, N). """

    def __init__(self, cache_dir=None, entry_format=None):
        self.cache_dir = default_cache_dir(cache_dir)
        self.entry_format = entry_format if entry_format else self._default_entry_format

    @staticmethod
    def _default_entry_format(weight, N):
        return f'coeffs_k{weight}_N{N}.txt'

    def path_for(self, weight, N):
        return self.cache_dir / self.entry_format(weight, N)

    def entries(self):
        """ Cached (weight, N, path) triples, sorted. """
        if not self.cache_dir.exists():
            return []

        found = []
        for path in self.cache_dir.glob('coeffs_k*_N*.txt'):
            match = _ENTRY_RE.match(path.name)
            if match:
                weight, N = map(int, match.groups())
                found.append((weight, N, path))
        return sorted(found)

    def load(self, weight, N):
        """ Loads the exact (weight, N) entry, or returns None if absent. """
        path = self.path_for(weight, N)
        if not path.exists():
            return None
        _, coeffs = read_coefficients(path, weight=weight, N=N)
        log.info(f'[CACHE] loaded {path}')
        return Eigenform.from_coefficients(weight, coeffs)

    def save(self, f):
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        path = self.path_for(f.weight, f.N)
        write_coefficients(path, f.weight, f.coeffs)
        log.info(f'[CACHE] wrote {path}')
        self.house_keeping()
        return path

    def load_or_build(self, weight, N, force=False, threads=1):
        """ Returns the eigenform (weight, N), reading the cache or building and caching it.

        Only an exact (weight, N) entry is reused; a longer entry is never
        truncated silently.
        """
        if not force:
            f = self.load(weight, N)
            if f is not None:
                return f

        f = build_eigenform(weight, N, threads=threads)
        self.save(f)
        return f

    def cache_id(self, weight, N):
        """ Short content identifier of a cache entry, recorded in report provenance. """
        path = self.path_for(weight, N)
        if not path.exists():
            return None

        digest = hashlib.sha256()
        with open(path, 'rb') as fp:
            for chunk in iter(lambda: fp.read(1 << 20), b''):
                digest.update(chunk)
        return f'{path.name}:{digest.hexdigest()[:16]}'

    def house_keeping(self):
        """ Removes temp files left behind by interrupted writes. """
        for tmp in self.cache_dir.glob('*.txt.tmp'):
            tmp.unlink()


def load_or_build(weight, N, cache_dir=None, force=False, threads=1):
    return CoefficientCache(cache_dir).load_or_build(weight, N, force=force, threads=threads)
