import logging
from functools import lru_cache
from math import prod

import numpy as np
from joblib import Parallel, delayed
from sympy import isprime, primitive_root

from .errors import CRTCapacityError

log = logging.getLogger(__name__)

# primes p = c * 2^21 + 1 < 2^31: residues stay below 2^31, so products of two
# residues fit in uint64 without overflow.
TWO_ADICITY = 21
PRIME_BITS = 31
DEFAULT_POOL_SIZE = 16

SCHOOLBOOK_CUTOFF = 64


@lru_cache(maxsize=None)
def prime_pool(size=DEFAULT_POOL_SIZE):
    """ Returns the `size` largest NTT-friendly primes below 2^31 with a primitive root each.

    Args:
        size (int): number of primes in the pool.

    Returns:
        tuple: ((p, g), ...) sorted by decreasing p.
    """
    pool = []
    c = ((1 << PRIME_BITS) - 1) >> TWO_ADICITY
    while len(pool) < size and c > 0:
        p = (c << TWO_ADICITY) + 1
        if isprime(p):
            pool.append((p, int(primitive_root(p))))
        c -= 1

    if len(pool) < size:
        raise CRTCapacityError(f'only {len(pool)} primes of the form c*2^{TWO_ADICITY}+1 below 2^{PRIME_BITS}')

    return tuple(pool)


def _bit_reverse_permutation(n):
    bits = n.bit_length() - 1
    idx = np.arange(n, dtype=np.int64)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


def _powers(w, n, p):
    """ [w^0, ..., w^(n-1)] mod p, filled by doubling blocks. """
    P = np.uint64(p)
    out = np.ones(n, dtype=np.uint64)
    m, wm = 1, w % p
    while m < n:
        k = min(m, n - m)
        out[m:m + k] = out[:k] * np.uint64(wm) % P
        wm = wm * wm % p
        m *= 2
    return out


def _transform(a, p, roots, rev):
    """ Iterative radix-2 Cooley-Tukey transform of `a` modulo p.

    Args:
        a (ndarray): uint64 residues, length n (power of two).
        p (int): the prime modulus.
        roots (ndarray): powers of the principal n-th root of unity used, length n/2.
        rev (ndarray): bit-reversal permutation of length n.

    Returns:
        ndarray: the transformed residues.
    """
    n = a.shape[0]
    P = np.uint64(p)
    a = a[rev]

    length = 2
    while length <= n:
        half = length // 2
        w = roots[::n // length][:half]
        blocks = a.reshape(-1, length)
        u = blocks[:, :half].copy()
        v = blocks[:, half:] * w % P
        blocks[:, :half] = (u + v) % P
        blocks[:, half:] = (u + P - v) % P
        length *= 2

    return a


def _residues(values, p, n):
    out = np.zeros(n, dtype=np.uint64)
    out[:len(values)] = (values % p).astype(np.uint64)
    return out


def _convolve_mod(x, y, p, g, n, out_len, square):
    P = np.uint64(p)
    rev = _bit_reverse_permutation(n)
    w = pow(g, (p - 1) // n, p)
    roots = _powers(w, n // 2, p)
    inv_roots = _powers(pow(w, p - 2, p), n // 2, p)

    fx = _transform(_residues(x, p, n), p, roots, rev)
    fy = fx if square else _transform(_residues(y, p, n), p, roots, rev)

    c = _transform(fx * fy % P, p, inv_roots, rev)
    c = c * np.uint64(pow(n, p - 2, p)) % P
    return c[:out_len]


def _garner(residues, primes):
    """ Mixed-radix (Garner) reconstruction, centered to the symmetric range.

    Args:
        residues (list): one uint64 array per prime.
        primes (list): the moduli.

    Returns:
        ndarray: object array of signed Python integers.
    """
    digits = [residues[0]]
    for i in range(1, len(primes)):
        p_i = primes[i]
        P = np.uint64(p_i)

        acc = digits[i - 1] % P
        for j in range(i - 2, -1, -1):
            acc = (acc * np.uint64(primes[j] % p_i) + digits[j] % P) % P

        inv = pow(prod(primes[:i]) % p_i, p_i - 2, p_i)
        digits.append((residues[i] + P - acc) % P * np.uint64(inv) % P)

    value = digits[-1].astype(object)
    for j in range(len(primes) - 2, -1, -1):
        value = value * primes[j] + digits[j].astype(object)

    modulus = prod(primes)
    return np.where(value > modulus // 2, value - modulus, value)


def required_bits(x, y):
    """ A-priori bit bound on the magnitude of any coefficient of x*y. """
    mx = max((abs(int(v)) for v in x), default=0)
    my = max((abs(int(v)) for v in y), default=0)
    return mx.bit_length() + my.bit_length() + min(len(x), len(y)).bit_length()


def choose_primes(bits, pool_size=DEFAULT_POOL_SIZE):
    """ Smallest prefix of the pool whose product exceeds 2^(bits + 1).

    Raises:
        CRTCapacityError: if the whole pool is too small.
    """
    pool = prime_pool(pool_size)
    primes, capacity = [], 0
    for p, g in pool:
        primes.append((p, g))
        capacity += p.bit_length() - 1
        if capacity >= bits + 2:
            return primes

    raise CRTCapacityError(
        f'product coefficients need {bits + 2} bits, the pool of {pool_size} primes holds {capacity}; '
        f'increase pool_size')


def schoolbook_multiply(x, y, length=None):
    """ Exact Cauchy product by the quadratic algorithm (used as oracle and for short inputs). """
    if not len(x) or not len(y):
        return []

    n_out = len(x) + len(y) - 1 if length is None else length
    y = np.array([int(v) for v in y[:n_out]], dtype=object)
    out = np.zeros(n_out, dtype=object)
    for i, xi in enumerate(x[:n_out]):
        xi = int(xi)
        if xi == 0:
            continue
        lim = min(len(y), n_out - i)
        out[i:i + lim] += xi * y[:lim]

    return [int(v) for v in out]


def ntt_multiply(x, y, length=None, pool_size=DEFAULT_POOL_SIZE, threads=1):
    """ Exact Cauchy product through number-theoretic transforms and CRT.

    Args:
        x, y (sequence of int): coefficients indexed from 0.
        length (int): if given, only the first `length` product coefficients are returned.
        pool_size (int): number of primes available for the CRT.
        threads (int): residue primes transformed in parallel.

    Returns:
        list: the product coefficients as Python integers.
    """
    if not len(x) or not len(y):
        return []

    if length is not None:
        x, y = x[:length], y[:length]

    full_len = len(x) + len(y) - 1
    out_len = full_len if length is None else min(length, full_len)

    n = 1 << (full_len - 1).bit_length()
    if n > (1 << TWO_ADICITY):
        raise CRTCapacityError(f'transform length {n} exceeds the 2-adic order 2^{TWO_ADICITY} of the pool primes')

    bits = required_bits(x, y)
    primes = choose_primes(bits, pool_size)
    log.debug(f'[NTT] len={len(x)}x{len(y)} n={n} bits={bits} primes={len(primes)}')

    square = x is y
    x = np.array([int(v) for v in x], dtype=object)
    y = x if square else np.array([int(v) for v in y], dtype=object)

    jobs = [delayed(_convolve_mod)(x, y, p, g, n, out_len, square) for p, g in primes]
    residues = Parallel(n_jobs=threads, prefer='threads')(jobs)

    product = _garner(residues, [p for p, _ in primes])
    out = [int(v) for v in product]
    if length is not None and len(out) < length:
        out += [0] * (length - len(out))
    return out


def multiply(x, y, length=None, method='auto', threads=1):
    """ Exact product of two integer sequences; `method` is 'auto', 'ntt' or 'schoolbook'. """
    if method == 'auto':
        method = 'schoolbook' if min(len(x), len(y)) <= SCHOOLBOOK_CUTOFF else 'ntt'

    if method == 'schoolbook':
        out = schoolbook_multiply(x, y, length)
    elif method == 'ntt':
        out = ntt_multiply(x, y, length, threads=threads)
    else:
        raise ValueError(f'Unknown multiplication method: {method}')

    if length is not None and len(out) < length:
        out += [0] * (length - len(out))
    return out
