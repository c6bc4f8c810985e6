import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special
from scipy.special import logsumexp

from .errors import ContourDivergenceError, DomainError

log = logging.getLogger(__name__)

EM_CUTOFF = 20       # Euler-Maclaurin: explicit terms n < EM_CUTOFF
EM_ORDER = 10        # Bernoulli corrections B_2 .. B_20

GAMMA_EPS = 1e-16
GAMMA_ITMAX = 10000
GAMMA_FPMIN = 1e-300

ASYMPTOTIC_SWITCH = 40.0    # E(a) uses its asymptotic expansion for a >= this
FILON_POINTS = 257          # nodes per geometric panel (odd)


@dataclass(frozen=True)
class ContourSpec:
    """ Vertical line Re(s) = sigma sampled with step `step` on t in [-tmax, tmax]. """
    sigma: float = 1.5
    step: float = 0.05
    tmax: float = 60.0

    def __post_init__(self):
        if not self.step > 0:
            raise DomainError(f'contour step must be > 0, got {self.step}')
        if not self.tmax > 0:
            raise DomainError(f'contour tmax must be > 0, got {self.tmax}')

    @property
    def half_nodes(self):
        return int(round(self.tmax / self.step))

    def nodes(self):
        n = self.half_nodes
        return self.step * np.arange(-n, n + 1, dtype=np.float64)


DEFAULT_CONTOUR = ContourSpec()


@dataclass(frozen=True)
class QuadratureResult:
    value: complex
    error: float


def _is_pole(z):
    return z <= 0 and z == math.floor(z)


def ln_gamma(z):
    """ Principal branch of log Gamma(z) for complex z.

    Raises:
        DomainError: at the poles z = 0, -1, -2, ...
    """
    z = complex(z)
    if z.imag == 0 and _is_pole(z.real):
        raise DomainError(f'ln_gamma has a pole at z = {z.real:g}')
    return complex(special.loggamma(z))


def zeta_real(s):
    """ Riemann zeta on the real half-line s > 1 by Euler-Maclaurin corrected partial sums. """
    s = float(s)
    if not s > 1:
        raise DomainError(f'zeta_real needs s > 1, got {s}')

    N = EM_CUTOFF
    head = math.fsum(n ** -s for n in range(1, N))
    terms = [head, N ** (1 - s) / (s - 1), 0.5 * N ** -s]

    B = special.bernoulli(2 * EM_ORDER)
    for j in range(1, EM_ORDER + 1):
        coeff = B[2 * j] / math.factorial(2 * j)
        terms.append(coeff * special.poch(s, 2 * j - 1) * N ** (-s - 2 * j + 1))

    return math.fsum(terms)


def _lower_gamma_series(s, x):
    """ Regularized P(s, x) by its power series (x < s + 1). """
    ap, term = s, 1.0 / s
    total = term
    for _ in range(GAMMA_ITMAX):
        ap += 1
        term *= x / ap
        total += term
        if abs(term) < abs(total) * GAMMA_EPS:
            break
    return total * math.exp(-x + s * math.log(x) - math.lgamma(s))


def _upper_gamma_cf(s, x):
    """ Unregularized Gamma(s, x) by the modified Lentz continued fraction (x >= s + 1). """
    b = x + 1 - s
    c = 1 / GAMMA_FPMIN
    d = 1 / b
    h = d
    for i in range(1, GAMMA_ITMAX):
        an = -i * (i - s)
        b += 2
        d = an * d + b
        if abs(d) < GAMMA_FPMIN:
            d = GAMMA_FPMIN
        c = b + an / c
        if abs(c) < GAMMA_FPMIN:
            c = GAMMA_FPMIN
        d = 1 / d
        delta = d * c
        h *= delta
        if abs(delta - 1) < GAMMA_EPS:
            break
    return math.exp(-x + s * math.log(x)) * h


def upper_incomplete_gamma(s, x):
    """ Gamma(s, x) = int_x^inf t^(s-1) e^(-t) dt for s > 0, x >= 0.

    Power series of the lower function for x < s + 1, continued fraction otherwise.
    """
    s, x = float(s), float(x)
    if not s > 0:
        raise DomainError(f'upper_incomplete_gamma needs s > 0, got {s}')
    if x < 0:
        raise DomainError(f'upper_incomplete_gamma needs x >= 0, got {x}')

    if x == 0:
        return math.gamma(s)
    if x < s + 1:
        return math.gamma(s) * (1 - _lower_gamma_series(s, x))
    return _upper_gamma_cf(s, x)


def regularized_upper_gamma(s, x):
    """ Q(s, x) = Gamma(s, x) / Gamma(s), vectorized over x. """
    return special.gammaincc(s, x)


def contour_quadrature(integrand, spec=DEFAULT_CONTOUR, decay_tol=1e-10):
    """ (1 / 2 pi i) * integral of `integrand` over Re(s) = spec.sigma.

    Trapezoid rule in t with ds = i dt; the error estimate compares against
    the same rule on every other node (step doubled).

    Args:
        integrand (callable): maps a complex ndarray of nodes s to complex values.
        spec (ContourSpec): the line and its sampling.
        decay_tol (float): endpoint magnitude allowed relative to the maximum.

    Returns:
        QuadratureResult: value and error estimate.

    Raises:
        ContourDivergenceError: if the integrand has not decayed at |t| = tmax.
    """
    t = spec.nodes()
    s = spec.sigma + 1j * t
    f = np.asarray(integrand(s), dtype=np.complex128)

    mag = np.abs(f)
    if not np.all(np.isfinite(mag)):
        raise ContourDivergenceError(f'non-finite integrand on Re(s) = {spec.sigma}')

    peak = mag.max()
    edge = max(mag[0], mag[-1])
    if peak > 0 and edge > decay_tol * peak:
        raise ContourDivergenceError(
            f'integrand does not decay on Re(s) = {spec.sigma}: |f(tmax)| / max|f| = {edge / peak:.3g}; increase tmax')

    fine = spec.step * (f.sum() - 0.5 * (f[0] + f[-1]))
    fc = f[::2]
    coarse = 2 * spec.step * (fc.sum() - 0.5 * (fc[0] + fc[-1]))

    value = fine / (2 * np.pi)
    error = abs(fine - coarse) / (2 * np.pi)
    return QuadratureResult(complex(value), float(error))


def _wk_log_ratio(k, s):
    """ log[Gamma(s + k - 1) Gamma(s - 1/2) / Gamma(2 - s)] on an array of nodes. """
    s = np.asarray(s, dtype=np.complex128)
    out = special.loggamma(s + k - 1) + special.loggamma(s - 0.5)
    z = 2 - s
    at_pole = (z.imag == 0) & (z.real <= 0) & (z.real == np.floor(z.real))
    out = out - np.where(at_pole, 0, special.loggamma(np.where(at_pole, 1, z)))
    return np.where(at_pole, -np.inf + 0j, out)


def _check_wk_contour(spec):
    if not spec.sigma > 1:
        raise DomainError(f'W_k needs a contour with sigma > 1, got sigma = {spec.sigma}')


def wk_quadrature(k, x, spec=DEFAULT_CONTOUR):
    """ W_k(x) by contour quadrature, returned with its (complex) raw value and error. """
    _check_wk_contour(spec)
    if not x > 0:
        raise DomainError(f'W_k needs x > 0, got {x}')
    lx = math.log(x)
    return contour_quadrature(lambda s: np.exp(_wk_log_ratio(k, s) - s * lx), spec)


def W_k(k, x, spec=DEFAULT_CONTOUR):
    """ W_k(x) = (1 / 2 pi i) int_(sigma) Gamma(s+k-1) Gamma(s-1/2) / Gamma(2-s) x^(-s) ds, sigma > 1.

    Args:
        k (int): the weight.
        x (float): positive argument.
        spec (ContourSpec): integration line, sigma > 1.

    Returns:
        float: the real value of the integral.
    """
    return wk_quadrature(k, x, spec).value.real


def W_k_batch(k, xs, spec=DEFAULT_CONTOUR, chunk=512):
    """ W_k on many x at once, sharing the gamma ratio on the nodes.

    The integrand is conjugate-symmetric in t, so only t >= 0 is summed.
    """
    _check_wk_contour(spec)
    xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    if np.any(xs <= 0):
        raise DomainError('W_k_batch needs x > 0')

    t = spec.step * np.arange(spec.half_nodes + 1, dtype=np.float64)
    weights = np.full(t.shape, 2 * spec.step)
    weights[0] = spec.step
    weights[-1] = spec.step

    F = np.exp(_wk_log_ratio(k, spec.sigma + 1j * t)) * weights
    Fr, Fi = F.real, F.imag

    out = np.empty_like(xs)
    for start in range(0, xs.size, chunk):
        lx = np.log(xs[start:start + chunk])
        phase = np.outer(lx, t)
        acc = np.cos(phase) @ Fr + np.sin(phase) @ Fi
        out[start:start + chunk] = np.exp(-spec.sigma * lx) * acc / (2 * np.pi)

    return out


@dataclass(frozen=True)
class ResidueSeriesResult:
    value: float
    tail_estimate: float
    skipped: tuple = ()


def _signed_log_gamma(z):
    """ (log|Gamma(z)|, sign Gamma(z)), or None at a pole. """
    if _is_pole(z):
        return None
    return special.gammaln(z), special.gammasgn(z)


def _residue_term(m, num, den, power, lx):
    lg_num = _signed_log_gamma(num)
    if lg_num is None:
        return None
    if _is_pole(den):
        return 0.0      # 1 / Gamma at a pole vanishes
    lg_den, sgn_den = special.gammaln(den), special.gammasgn(den)
    sign = (-1) ** m * lg_num[1] * sgn_den
    return sign * math.exp(lg_num[0] - lg_den - special.gammaln(m + 1) + power * lx)


def W_k_residue_series(k, x, terms=40):
    """ W_k(x) by shifting the contour left and summing residues.

    Two pole families: s = 1/2 - m from Gamma(s - 1/2) and s = 1 - k - m from
    Gamma(s + k - 1). Convergent for every x > 0, but with growing cancellation
    for large x; used as a cross-check of the quadrature.

    Returns:
        ResidueSeriesResult: value, magnitude of the first omitted term of each
            family, and the indices of skipped (pole) terms.
    """
    if not x > 0:
        raise DomainError(f'W_k_residue_series needs x > 0, got {x}')

    lx = math.log(x)
    values, skipped = [], []
    tail = 0.0
    for m in range(terms + 1):
        pair = (
            ('half', _residue_term(m, k - 0.5 - m, 1.5 + m, m - 0.5, lx)),
            ('weight', _residue_term(m, 0.5 - k - m, 1 + k + m, k - 1 + m, lx)),
        )
        for family, term in pair:
            if term is None:
                skipped.append((family, m))
            elif m == terms:
                tail += abs(term)
            else:
                values.append(term)

    return ResidueSeriesResult(math.fsum(values), tail, tuple(skipped))


@lru_cache(maxsize=None)
def wk_mellin_bound(k, A, step=0.1):
    """ log M_A with M_A = (1 / 2 pi) int |F(A + it)| dt, so |W_k(x)| <= M_A x^(-A) for x > 0.

    Valid for A > 1/2, where no pole of the integrand lies to the right of the line.
    """
    if not A > 0.5:
        raise DomainError(f'wk_mellin_bound needs A > 1/2, got {A}')

    tmax = 60 + 4 * (3 * A + k)
    t = step * np.arange(int(round(tmax / step)) + 1)
    logF = _wk_log_ratio(k, A + 1j * t).real
    w = np.full(t.shape, 2 * step)
    w[0] = w[-1] = step
    return float(logsumexp(logF, b=w) - math.log(2 * math.pi))


# oscillatory tails E(a) = int_a^inf t^(-5/2) e^(it) dt

def _e52_asymptotic(a, max_terms=60):
    """ i e^(ia) a^(-5/2) sum_j (5/2)_j (-i/a)^j, stopped at the smallest term. """
    a = np.asarray(a, dtype=np.float64)
    term = np.ones(a.shape, dtype=np.complex128)
    total = term.copy()
    active = np.ones(a.shape, dtype=bool)
    for j in range(max_terms):
        new = term * (2.5 + j) * (-1j / a)
        active &= np.abs(new) < np.abs(term)
        total = np.where(active, total + new, total)
        term = new
    return 1j * np.exp(1j * a) * a ** -2.5 * total


def _e52_fresnel(a):
    """ E(a) from the Fresnel integrals and two integrations by parts. """
    a = np.asarray(a, dtype=np.float64)
    S, C = special.fresnel(np.sqrt(2 * a / np.pi))
    eia = np.exp(1j * a)
    e12 = np.sqrt(2 * np.pi) * ((0.5 - C) + 1j * (0.5 - S))
    e32 = 2 * (1j * e12 + a ** -0.5 * eia)
    return (1j * e32 + a ** -1.5 * eia) / 1.5


def _filon_coefficients(theta):
    if abs(theta) < 1 / 6:
        t2 = theta * theta
        alpha = theta * t2 * (2 / 45 - t2 * (2 / 315 - t2 * 2 / 4725))
        beta = 2 / 3 + t2 * (2 / 15 - t2 * (4 / 105 - t2 * 2 / 567))
        gamma = 4 / 3 - t2 * (2 / 15 - t2 * (1 / 210 - t2 / 11340))
        return alpha, beta, gamma

    sin, cos = math.sin(theta), math.cos(theta)
    t3 = theta ** 3
    alpha = (theta * theta + theta * sin * cos - 2 * sin * sin) / t3
    beta = 2 * (theta * (1 + cos * cos) - 2 * sin * cos) / t3
    gamma = 4 * (sin - theta * cos) / t3
    return alpha, beta, gamma


def filon_fourier(f, x0, h, omega):
    """ Filon-Simpson rule for int f(x) e^(i omega x) dx on [x0, x0 + 2nh].

    Args:
        f (ndarray): samples f(x0 + j h), j = 0..2n (odd length).
        x0 (float): left end.
        h (float): sample spacing.
        omega (float): angular frequency.

    Returns:
        complex: cosine integral + i * sine integral.
    """
    f = np.asarray(f, dtype=np.float64)
    if f.size % 2 == 0 or f.size < 3:
        raise DomainError(f'filon_fourier needs an odd number (>= 3) of samples, got {f.size}')

    alpha, beta, gamma = _filon_coefficients(omega * h)
    x = x0 + h * np.arange(f.size)
    c, s = np.cos(omega * x), np.sin(omega * x)

    fc, fs = f * c, f * s
    c_even = fc[::2].sum() - 0.5 * (fc[0] + fc[-1])
    c_odd = fc[1::2].sum()
    s_even = fs[::2].sum() - 0.5 * (fs[0] + fs[-1])
    s_odd = fs[1::2].sum()

    cos_part = h * (alpha * (fs[-1] - fs[0]) + beta * c_even + gamma * c_odd)
    sin_part = h * (alpha * (fc[0] - fc[-1]) + beta * s_even + gamma * s_odd)
    return complex(cos_part, sin_part)


def _e52_filon(a):
    """ E(a) by Filon panels [t, 2t] up to ASYMPTOTIC_SWITCH, then the asymptotic tail. """
    out = np.empty(np.shape(a), dtype=np.complex128)
    for i, ai in enumerate(np.atleast_1d(a)):
        parts, lo = [], float(ai)
        while lo < ASYMPTOTIC_SWITCH:
            hi = min(2 * lo, ASYMPTOTIC_SWITCH)
            h = (hi - lo) / (FILON_POINTS - 1)
            t = lo + h * np.arange(FILON_POINTS)
            parts.append(filon_fourier(t ** -2.5, lo, h, 1.0))
            lo = hi
        parts.append(complex(_e52_asymptotic(lo)))
        out.flat[i] = sum(parts)
    return out


def oscillatory_tail(a, method='fresnel'):
    """ E(a) = int_a^inf t^(-5/2) e^(it) dt for a > 0, vectorized.

    Args:
        a (float or ndarray): lower limits, a > 0.
        method (str): 'fresnel' (closed form through Fresnel integrals) or
            'filon' (Filon-Simpson panels); both use the asymptotic expansion
            for a >= ASYMPTOTIC_SWITCH.

    Returns:
        complex or ndarray: E(a).
    """
    a = np.asarray(a, dtype=np.float64)
    if np.any(a <= 0):
        raise DomainError('oscillatory_tail needs a > 0')

    large = a >= ASYMPTOTIC_SWITCH
    out = np.empty(a.shape, dtype=np.complex128)
    out[large] = _e52_asymptotic(a[large])

    small = ~large
    if method == 'fresnel':
        out[small] = _e52_fresnel(a[small])
    elif method == 'filon':
        out[small] = _e52_filon(a[small])
    else:
        raise ValueError(f'Unknown oscillatory tail method: {method}')

    return out if out.ndim else complex(out)
