import logging
import math
from dataclasses import dataclass
from functools import partial

import numpy as np
from joblib import Parallel, delayed
from tqdm import tqdm

from .errors import DomainError, QuadratureError
from .specfun import oscillatory_tail, zeta_real

log = logging.getLogger(__name__)
tqdm = partial(tqdm, dynamic_ncols=True)

DEFAULT_KMAX = 10 ** 4
DEFAULT_QUAD_TOL = 1e-6
N_BLOCK = 256


@dataclass(frozen=True)
class CfsQuery:
    """ S(X, Y) = sum over odd m <= X, odd n <= Y of the Jacobi symbol (m/n). """
    X: int
    Y: int
    kmax: int = DEFAULT_KMAX
    quad_tol: float = DEFAULT_QUAD_TOL

    def __post_init__(self):
        if int(self.X) != self.X or int(self.Y) != self.Y or self.X < 1 or self.Y < 1:
            raise DomainError(f'CfsQuery needs integers X, Y >= 1, got X={self.X}, Y={self.Y}')
        if self.kmax < 10:
            raise DomainError(f'kmax must be >= 10, got {self.kmax}')

    @property
    def alpha(self):
        return self.Y / self.X


def jacobi(m, n):
    """ Jacobi symbol (m/n) for odd n > 0 by the binary reciprocity algorithm. """
    if n <= 0 or n % 2 == 0:
        raise DomainError(f'the Jacobi symbol needs an odd positive modulus, got {n}')

    m %= n
    result = 1
    while m:
        while m % 2 == 0:
            m //= 2
            if n % 8 in (3, 5):
                result = -result
        m, n = n, m
        if m % 4 == 3 and n % 4 == 3:
            result = -result
        m %= n

    return result if n == 1 else 0


def jacobi_array(m, n):
    """ Elementwise Jacobi symbol of broadcast int64 arrays m and n (n odd, positive). """
    m, n = np.broadcast_arrays(np.asarray(m, dtype=np.int64), np.asarray(n, dtype=np.int64))
    if np.any(n <= 0) or np.any(n % 2 == 0):
        raise DomainError('the Jacobi symbol needs odd positive moduli')

    n = n.copy()
    m = m % n
    result = np.ones(m.shape, dtype=np.int64)
    active = m != 0
    while np.any(active):
        even = active & (m % 2 == 0)
        while np.any(even):
            m = np.where(even, m // 2, m)
            result[even & ((n % 8 == 3) | (n % 8 == 5))] *= -1
            even = active & (m % 2 == 0)

        m, n = np.where(active, n, m), np.where(active, m, n)
        result[active & (m % 4 == 3) & (n % 4 == 3)] *= -1
        m = np.where(active, m % n, m)
        active = m != 0

    return np.where(n == 1, result, 0)


def _odd_m_sum(n, J):
    """ sum_{j < J} ((2j+1)/n), using the period n in j. """
    period = min(n, J)
    table = np.cumsum(jacobi_array(2 * np.arange(period, dtype=np.int64) + 1, n))
    if J <= n:
        return int(table[J - 1])
    full, rest = divmod(J, n)
    return int(full * table[-1] + (table[rest - 1] if rest else 0))


def _cfs_block(ns, J):
    return sum(_odd_m_sum(n, J) for n in ns)


def cfs_sum(q, threads=1):
    """ Exact S(X, Y) through the periodic character tables, parallel over blocks of n. """
    J = (int(q.X) + 1) // 2
    ns = list(range(1, int(q.Y) + 1, 2))
    blocks = [ns[i:i + N_BLOCK] for i in range(0, len(ns), N_BLOCK)]
    jobs = [delayed(_cfs_block)(block, J) for block in blocks]
    partials = Parallel(n_jobs=threads)(tqdm(jobs, desc='S(X,Y)', leave=False, disable=len(jobs) < 4))
    return int(sum(partials))


def cfs_sum_bruteforce(X, Y):
    """ S(X, Y) by the double loop over odd m, n with the scalar `jacobi` (oracle). """
    return sum(jacobi(m, n) for n in range(1, Y + 1, 2) for m in range(1, X + 1, 2))


def c_alpha_fresnel(alpha, kmax=DEFAULT_KMAX):
    """ First form: sqrt(a) + (1/2pi) sum_k k^-2 int_0^a sqrt(y) (1 - cos(2 pi k^2/y) + sin(2 pi k^2/y)) dy.

    With u = 1/y the k-th integral is (2/3) a^(3/2) plus w^(3/2) (Im E - Re E)(w/a),
    w = 2 pi k^2, where E(x) = int_x^inf t^(-5/2) e^(it) dt.
    """
    if alpha == 0:
        return 0.0
    k = np.arange(1, kmax + 1, dtype=np.float64)
    E = oscillatory_tail(2 * math.pi * k * k / alpha, 'fresnel')
    osc = math.sqrt(2 * math.pi) * math.fsum(k * (E.imag - E.real))
    return math.fsum([math.sqrt(alpha), zeta_real(2) * alpha ** 1.5 / (3 * math.pi), osc])


def c_alpha_filon(alpha, kmax=DEFAULT_KMAX):
    """ Alternate form: a + a^(3/2) (2/pi) sum_k k^-2 int_0^(1/a) sqrt(y) sin(pi k^2 / (2y)) dy.

    With u = 1/y the k-th integral is w^(3/2) Im E(w a), w = pi k^2 / 2.
    """
    if alpha == 0:
        return 0.0
    k = np.arange(1, kmax + 1, dtype=np.float64)
    E = oscillatory_tail(0.5 * math.pi * k * k * alpha, 'filon')
    osc = (2 / math.pi) * (0.5 * math.pi) ** 1.5 * math.fsum(k * E.imag)
    return alpha + alpha ** 1.5 * osc


@dataclass(frozen=True)
class CAlpha:
    value: float
    alternate: float

    @property
    def discrepancy(self):
        return abs(self.value - self.alternate) / max(1.0, abs(self.value))


def C_alpha(alpha, kmax=DEFAULT_KMAX, quad_tol=DEFAULT_QUAD_TOL):
    """ Transition function C(alpha) of the Jacobi-symbol sum, by both integral forms.

    Returns:
        CAlpha: the first form as `value`, the second as `alternate`.

    Raises:
        QuadratureError: if either form is not finite.
    """
    if alpha < 0:
        raise DomainError(f'C_alpha needs alpha >= 0, got {alpha}')

    result = CAlpha(c_alpha_fresnel(alpha, kmax), c_alpha_filon(alpha, kmax))
    if not (math.isfinite(result.value) and math.isfinite(result.alternate)):
        raise QuadratureError(f'C({alpha:g}) is not finite: {result}')
    if result.discrepancy > quad_tol:
        log.warning(f'[CFS] the two forms of C({alpha:g}) differ by {result.discrepancy:.2g} (tol {quad_tol:g})')
    return result


@dataclass(frozen=True)
class CfsRow:
    X: int
    Y: int
    alpha: float
    S: int
    prediction: float
    residual: float
    yardstick: float
    normalized_residual: float
    limit_prediction: float
    regime: str
    forms_agree: bool

    def as_row(self):
        return {
            'X': self.X, 'Y': self.Y, 'alpha': self.alpha, 'S': self.S, 'prediction': self.prediction,
            'residual': self.residual, 'normalized_residual': self.normalized_residual,
        }


def cfs_yardstick(X, Y):
    return (X * Y ** (7 / 16) + Y * X ** (7 / 16)) * math.log(X * Y)


def limit_prediction(X, Y):
    """ (2/pi^2) X Y^(1/2) for Y <= X, (2/pi^2) Y X^(1/2) otherwise. """
    if Y <= X:
        return 2 / math.pi ** 2 * X * math.sqrt(Y)
    return 2 / math.pi ** 2 * Y * math.sqrt(X)


def cfs_verify(q, threads=1):
    """ S(X, Y) against (2/pi^2) C(Y/X) X^(3/2), with the residual on the error-term scale. """
    S = cfs_sum(q, threads)
    c = C_alpha(q.alpha, q.kmax, q.quad_tol)
    prediction = 2 / math.pi ** 2 * c.value * q.X ** 1.5
    residual = S - prediction
    yardstick = cfs_yardstick(q.X, q.Y)
    normalized = residual / yardstick if yardstick > 0 else math.nan

    regime = 'small' if q.alpha < 0.1 else 'large' if q.alpha > 10 else 'transition'
    row = CfsRow(int(q.X), int(q.Y), q.alpha, S, prediction, residual, yardstick, normalized,
                 limit_prediction(q.X, q.Y), regime, c.discrepancy <= q.quad_tol)
    log.info(f'[ROW] X={q.X} Y={q.Y} S={S} prediction={prediction:.6g} normalized={normalized:.3g}')
    return row


def second_differences(alphas, h, kmax=DEFAULT_KMAX):
    """ (C(a+h) - 2C(a) + C(a-h)) / h^2 at each a; recorded, not asserted. """
    out = []
    for a in alphas:
        if a - h < 0:
            raise DomainError(f'second difference at {a} with step {h} leaves alpha >= 0')
        values = [c_alpha_fresnel(x, kmax) for x in (a - h, a, a + h)]
        out.append({'alpha': a, 'h': h, 'second_difference': (values[0] - 2 * values[1] + values[2]) / h ** 2})
    return out
