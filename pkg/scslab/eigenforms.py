import logging
from dataclasses import dataclass, field
from math import gcd, isqrt

import numpy as np
from sympy import primerange

from . import ntt
from .errors import DomainError, SeriesArithmeticError, UnsupportedWeightError

log = logging.getLogger(__name__)

SUPPORTED_WEIGHTS = (12, 16, 18, 20, 22, 26)

# cusp form of weight k = Delta * E4^a * E6^b
EISENSTEIN_FACTORS = {
    12: (),
    16: (4,),
    18: (6,),
    20: (4, 4),
    22: (4, 6),
    26: (4, 4, 6),
}

DELIGNE_SLACK = 1e-12


class IntegerSeries:
    """ Truncated power series with exact integer coefficients c(0), c(1), ...

    Ring operations truncate to the shorter operand, as for q-expansions known
    up to a fixed order. Use `series_multiply` for the untruncated product.
    """

    __slots__ = ('_coefficients',)

    def __init__(self, coefficients):
        self._coefficients = tuple(int(c) for c in coefficients)

    @property
    def coefficients(self):
        return self._coefficients

    def __len__(self):
        return len(self._coefficients)

    def __getitem__(self, index):
        return self._coefficients[index]

    def __iter__(self):
        return iter(self._coefficients)

    def __eq__(self, other):
        if isinstance(other, IntegerSeries):
            return self._coefficients == other._coefficients
        return NotImplemented

    def __hash__(self):
        return hash(self._coefficients)

    def __repr__(self):
        head = ', '.join(str(c) for c in self._coefficients[:6])
        tail = ', ...' if len(self) > 6 else ''
        return f'IntegerSeries([{head}{tail}], order={len(self) - 1})'

    def __neg__(self):
        return IntegerSeries(-c for c in self._coefficients)

    def __add__(self, other):
        n = min(len(self), len(other))
        return IntegerSeries(a + b for a, b in zip(self._coefficients[:n], other.coefficients[:n]))

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, int):
            return IntegerSeries(other * c for c in self._coefficients)
        n = min(len(self), len(other))
        return series_multiply(self, other, length=n)

    __rmul__ = __mul__

    def exact_div(self, d):
        """ Divides every coefficient by the integer d.

        Raises:
            SeriesArithmeticError: if some coefficient is not divisible by d.
        """
        out = []
        for n, c in enumerate(self._coefficients):
            q, r = divmod(c, d)
            if r:
                raise SeriesArithmeticError(f'coefficient of q^{n} ({c}) is not divisible by {d}')
            out.append(q)
        return IntegerSeries(out)

    def truncate(self, order):
        return IntegerSeries(self._coefficients[:order + 1])


def series_multiply(x, y, length=None, method='auto', threads=1):
    """ Exact Cauchy product of two integer series.

    Args:
        x, y (IntegerSeries or sequence of int): the factors.
        length (int): number of product coefficients to keep; full product if None.
        method (str): 'auto', 'ntt' or 'schoolbook'.
        threads (int): NTT residue primes transformed in parallel.

    Returns:
        IntegerSeries: the product.
    """
    x = x.coefficients if isinstance(x, IntegerSeries) else tuple(x)
    y = y.coefficients if isinstance(y, IntegerSeries) else tuple(y)
    return IntegerSeries(ntt.multiply(x, y, length=length, method=method, threads=threads))


def eisenstein_series(weight, N):
    """ q-expansion of E4 = 1 + 240 sum sigma_3(n) q^n or E6 = 1 - 504 sum sigma_5(n) q^n up to q^N. """
    if weight == 4:
        power, scale = 3, 240
    elif weight == 6:
        power, scale = 5, -504
    else:
        raise DomainError(f'eisenstein_series is implemented for weights 4 and 6, got {weight}')

    if N < 0:
        raise DomainError(f'N must be >= 0, got {N}')

    sigma = np.zeros(N + 1, dtype=object)
    for d in range(1, N + 1):
        sigma[d::d] += d ** power

    return IntegerSeries([1] + [scale * int(s) for s in sigma[1:]])


def _delta_from(E4, E6, threads=1):
    E4_sq = series_multiply(E4, E4, length=len(E4), threads=threads)
    E4_cube = series_multiply(E4_sq, E4, length=len(E4), threads=threads)
    E6_sq = series_multiply(E6, E6, length=len(E6), threads=threads)
    return (E4_cube - E6_sq).exact_div(1728)


def delta_series(N, threads=1):
    """ Ramanujan's Delta = (E4^3 - E6^2) / 1728 up to q^N; coefficients are tau(n). """
    return _delta_from(eisenstein_series(4, N), eisenstein_series(6, N), threads=threads)


def divisor_counts(N):
    """ d(n) for n = 0..N (d(0) = 0). """
    d = np.zeros(N + 1, dtype=np.int64)
    for i in range(1, N + 1):
        d[i::i] += 1
    return d


def smallest_prime_factors(N):
    spf = np.zeros(N + 1, dtype=np.int64)
    for p in primerange(2, N + 1):
        block = spf[p::p]
        block[block == 0] = p
    return spf


@dataclass(frozen=True, eq=False)
class Eigenform:
    """ Normalized level-1 Hecke eigenform of weight k, known up to q^N.

    Attributes:
        weight (int): the weight k.
        coeffs (tuple): exact a(0), ..., a(N), with a(0) = 0 and a(1) = 1.
        lam (ndarray): lambda(n) = a(n) / n^((k-1)/2) in binary64, lam[0] = 0.
    """
    weight: int
    coeffs: tuple
    lam: np.ndarray = field(repr=False)

    @classmethod
    def from_coefficients(cls, weight, coeffs):
        coeffs = tuple(int(c) for c in coeffs)
        if len(coeffs) < 2:
            raise DomainError(f'an eigenform needs at least a(0) and a(1), got {len(coeffs)} coefficients')
        if coeffs[0] != 0 or coeffs[1] != 1:
            raise DomainError(f'a normalized cusp form needs a(0) = 0 and a(1) = 1, got {coeffs[:2]}')

        N = len(coeffs) - 1
        n = np.arange(1, N + 1, dtype=np.float64)
        scale = np.exp(-0.5 * (weight - 1) * np.log(n))
        lam = np.zeros(N + 1, dtype=np.float64)
        lam[1:] = np.array([float(a) for a in coeffs[1:]]) * scale
        lam[1] = 1.0
        lam.setflags(write=False)
        return cls(weight, coeffs, lam)

    @property
    def N(self):
        return len(self.coeffs) - 1

    def __repr__(self):
        return f'Eigenform(k={self.weight}, N={self.N})'

    def truncate(self, N):
        if N > self.N:
            raise DomainError(f'cannot extend {self} to N={N}')
        return Eigenform.from_coefficients(self.weight, self.coeffs[:N + 1])

    def lambda_squares(self, M=None):
        """ lambda(n^2) for n = 0..M (M <= N), from lambda(p) by the Hecke recurrence.

        Uses lambda(p^(r+1)) = lambda(p) lambda(p^r) - lambda(p^(r-1)) and
        multiplicativity, so only lambda at primes p <= M is read.
        """
        M = self.N if M is None else M
        if M > self.N:
            raise DomainError(f'lambda_squares({M}) needs lambda(p) for p <= {M}, {self} is too short')

        out = np.zeros(M + 1, dtype=np.float64)
        if M < 1:
            return out
        out[1] = 1.0

        # lambda(p^(2e)) for every prime p <= M and every e with p^e <= M
        prime_power_squares = {}
        for p in primerange(2, M + 1):
            lp = self.lam[p]
            powers = [1.0, lp]
            e, pe = 1, p
            while pe * p <= M:
                pe *= p
                e += 1
            while len(powers) < 2 * e + 1:
                powers.append(lp * powers[-1] - powers[-2])
            prime_power_squares[p] = powers[::2]

        spf = smallest_prime_factors(M)
        for n in range(2, M + 1):
            p = int(spf[n])
            m, e = n, 0
            while m % p == 0:
                m //= p
                e += 1
            out[n] = out[m] * prime_power_squares[p][e]

        return out


def build_eigenform(k, N, threads=1):
    """ Builds the unique normalized cusp form of weight k and level 1 up to q^N.

    Args:
        k (int): weight, one of SUPPORTED_WEIGHTS (one-dimensional cusp form spaces).
        N (int): truncation, N >= 2.
        threads (int): NTT residue primes transformed in parallel.

    Returns:
        Eigenform: the eigenform with exact coefficients a(0..N).
    """
    if k not in SUPPORTED_WEIGHTS:
        raise UnsupportedWeightError(
            f'weight {k} is not supported; supported weights are {SUPPORTED_WEIGHTS} '
            f'(level 1, one-dimensional cusp form spaces)')

    if N < 2:
        raise DomainError(f'build_eigenform needs N >= 2, got {N}')

    log.info(f'[EIGENFORM] building weight {k} up to q^{N}')
    E = {4: eisenstein_series(4, N), 6: eisenstein_series(6, N)}
    series = _delta_from(E[4], E[6], threads=threads)
    for w in EISENSTEIN_FACTORS[k]:
        series = series_multiply(series, E[w], length=N + 1, threads=threads)

    return Eigenform.from_coefficients(k, series.coefficients)


@dataclass
class HeckeReport:
    """ Outcome of `check_hecke_relations`. """
    weight: int
    N: int
    multiplicative_checked: int = 0
    recurrence_checked: int = 0
    deligne_checked: int = 0
    failures: int = 0
    first_failure: str = None

    @property
    def passed(self):
        return self.failures == 0

    def _fail(self, message):
        if self.first_failure is None:
            self.first_failure = message
        self.failures += 1


def check_hecke_relations(f):
    """ Exhaustive integer checks of the Hecke relations up to N, plus the Deligne bound.

    Never raises: failures are counted and the first one is described.

    Returns:
        HeckeReport: counts of checked relations and failures.
    """
    a, N, k = f.coeffs, f.N, f.weight
    report = HeckeReport(weight=k, N=N)

    if N >= 1 and a[1] != 1:
        report._fail(f'a(1) = {a[1]}')

    # a(m) a(n) = a(mn) for coprime 2 <= m < n, mn <= N
    for m in range(2, isqrt(N) + 1):
        am = a[m]
        for n in range(m + 1, N // m + 1):
            if gcd(m, n) != 1:
                continue
            report.multiplicative_checked += 1
            if am * a[n] != a[m * n]:
                report._fail(f'multiplicativity a({m})a({n}) != a({m * n})')

    # a(p) a(p^r) = a(p^(r+1)) + p^(k-1) a(p^(r-1))
    for p in primerange(2, isqrt(N) + 1):
        pk = p ** (k - 1)
        prev, cur, r = 1, a[p], 1
        while p ** (r + 1) <= N:
            nxt = a[p ** (r + 1)]
            report.recurrence_checked += 1
            if a[p] * cur != nxt + pk * prev:
                report._fail(f'recurrence at p={p}, r={r}')
            prev, cur, r = cur, nxt, r + 1

    # |lambda(n)| <= d(n)
    if N >= 1:
        d = divisor_counts(N)
        bound = d[1:] * (1 + DELIGNE_SLACK)
        violations = np.flatnonzero(np.abs(f.lam[1:]) > bound)
        report.deligne_checked = N
        for idx in violations:
            report._fail(f'Deligne bound at n={idx + 1}: |lambda| = {abs(f.lam[idx + 1]):.6g} > d(n) = {d[idx + 1]}')

    log.debug(f'[HECKE] {report}')
    return report
