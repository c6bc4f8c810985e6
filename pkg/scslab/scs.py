import logging
import math
from dataclasses import dataclass
from functools import partial

import numpy as np
from joblib import Parallel, delayed
from scipy import special
from tqdm import tqdm

from .errors import DomainError, InsufficientCoefficientsError

log = logging.getLogger(__name__)
tqdm = partial(tqdm, dynamic_ncols=True)

MAX_EPS_TRUNC = 1e-6
H_BLOCK = 64


def n_trunc(k, X, eps):
    """ Truncation of the n-sum: ceil(X ln(1/eps) + 2 (k-1) X). """
    return int(math.ceil(X * math.log(1 / eps) + 2 * (k - 1) * X))


@dataclass(frozen=True)
class SCSQuery:
    """ One shifted convolution sum: shifts h <= Y, exponential weight at scale X.

    Args:
        X (float): scale, X >= 1.
        Y (float): shift range, h = 1..floor(Y).
        eps_trunc (float): relative size of the dropped n-tail, in (0, 1e-6].
        h_taper (float): fraction of [0, Y] over which the h-weights fall to 0 (0 = sharp cutoff).
    """
    X: float
    Y: float
    eps_trunc: float = MAX_EPS_TRUNC
    h_taper: float = 0.0

    def __post_init__(self):
        if not self.X >= 1:
            raise DomainError(f'SCSQuery needs X >= 1, got {self.X}')
        if not self.Y >= 0:
            raise DomainError(f'SCSQuery needs Y >= 0, got {self.Y}')
        if not 0 < self.eps_trunc <= MAX_EPS_TRUNC:
            raise DomainError(f'eps_trunc must be in (0, {MAX_EPS_TRUNC}], got {self.eps_trunc}')
        if not 0 <= self.h_taper < 1:
            raise DomainError(f'h_taper must be in [0, 1), got {self.h_taper}')

    @property
    def H(self):
        return int(math.floor(self.Y))

    @property
    def ratio(self):
        return self.Y * self.Y / self.X

    def n_trunc(self, k):
        return n_trunc(k, self.X, self.eps_trunc)

    def check_corollary1(self):
        if not 1 <= self.Y <= self.X:
            raise DomainError(f'Corollary 1 is stated for 1 <= Y <= X, got X={self.X}, Y={self.Y}')


def h_weights(H, Y, taper):
    """ eta(h) for h = 1..H: 1 up to Y(1 - taper), then a cosine fall to 0 at Y. """
    h = np.arange(1, H + 1, dtype=np.float64)
    if taper == 0:
        return np.ones_like(h)
    start = Y * (1 - taper)
    u = np.clip((h - start) / (Y - start), 0, 1)
    return 0.5 * (1 + np.cos(np.pi * u))


def _require(f, N, what):
    if f.N < N:
        raise InsufficientCoefficientsError(N, f.N, what)


def _log_power(k, n, X):
    return 0.5 * (k - 1) * np.log(n / X)


def scs_factors(f, X, N):
    """ A(n) = lambda(n) (n/X)^((k-1)/2) and B(m) = A(m) e^(-m/X) for n, m = 1..N. """
    n = np.arange(1, N + 1, dtype=np.float64)
    lp = _log_power(f.weight, n, X)
    A = f.lam[1:N + 1] * np.exp(lp)
    B = f.lam[1:N + 1] * np.exp(lp - n / X)
    return A, B


def _balanced_factors(f, X, N):
    # A(n) B(n+h) = lambda(n) lambda(n+h) (n(n+h)/X^2)^((k-1)/2) e^(-(n+h)/X) e^(h/(2X))
    n = np.arange(1, N + 1, dtype=np.float64)
    lp = _log_power(f.weight, n, X) - n / (2 * X)
    factors = f.lam[1:N + 1] * np.exp(lp)
    return factors, factors


def correlation_direct(A, B, H, summation='compensated'):
    """ c(h) = sum_n A[n] B[n + h] for h = 1..H by per-shift dot products. """
    N = A.size
    out = np.zeros(H)
    for h in range(1, min(H, N - 1) + 1):
        terms = A[:N - h] * B[h:]
        out[h - 1] = math.fsum(terms) if summation == 'compensated' else np.sum(terms)
    return out


def correlation_fft(A, B, H):
    """ c(h) = sum_n A[n] B[n + h] for h = 1..H by one real FFT cross-correlation. """
    N = A.size
    size = 1 << (2 * N - 1).bit_length()
    FA = np.fft.rfft(A, size)
    FB = np.fft.rfft(B, size)
    c = np.fft.irfft(np.conj(FA) * FB, size)
    out = np.zeros(H)
    m = min(H, N - 1)
    out[:m] = c[1:m + 1]
    return out


def _direct_block(A, B, hs, summation):
    N = A.size
    out = []
    for h in hs:
        terms = A[:N - h] * B[h:]
        out.append(math.fsum(terms) if summation == 'compensated' else float(np.sum(terms)))
    return out


def scs_direct(f, q, threads=1, summation='compensated'):
    """ Corollary 1 left-hand side by per-shift compensated dot products.

    sum_{h <= Y} sum_n lambda(n) lambda(n+h) (n(n+h)/X^2)^((k-1)/2) e^(-(n+h)/X),
    with the n-sum truncated at q.n_trunc(k).

    Args:
        f (Eigenform): the eigenform, f.N >= q.n_trunc(k).
        q (SCSQuery): the sum to evaluate.
        threads (int): blocks of shifts evaluated in parallel.
        summation (str): 'compensated' (exactly rounded) or 'pairwise'.

    Returns:
        float: the sum.
    """
    if q.H < 1:
        return 0.0

    N = q.n_trunc(f.weight)
    _require(f, N, f'scs_direct(X={q.X:g})')
    A, B = scs_factors(f, q.X, N)
    log.debug(f'[SCS] direct X={q.X:g} Y={q.Y:g} N={N}')

    hs = list(range(1, min(q.H, N - 1) + 1))
    blocks = [hs[i:i + H_BLOCK] for i in range(0, len(hs), H_BLOCK)]
    jobs = [delayed(_direct_block)(A, B, block, summation) for block in blocks]
    per_h = Parallel(n_jobs=threads)(tqdm(jobs, desc='shifts', leave=False, disable=len(jobs) < 4))
    per_h = np.array([v for block in per_h for v in block])

    eta = h_weights(len(hs), q.Y, q.h_taper)
    terms = eta * per_h
    return math.fsum(terms) if summation == 'compensated' else float(np.sum(terms))


def scs_fast(f, q):
    """ Same sum as `scs_direct` through one FFT cross-correlation of balanced factors. """
    if q.H < 1:
        return 0.0

    N = q.n_trunc(f.weight)
    _require(f, N, f'scs_fast(X={q.X:g})')
    A, B = _balanced_factors(f, q.X, N)
    log.debug(f'[SCS] fft X={q.X:g} Y={q.Y:g} N={N}')

    c = correlation_fft(A, B, q.H)
    h = np.arange(1, q.H + 1, dtype=np.float64)
    c *= np.exp(-h / (2 * q.X))
    return math.fsum(h_weights(q.H, q.Y, q.h_taper) * c)


def corollary2_cutoff(k, X, eps=MAX_EPS_TRUNC):
    """ Smallest M with Q(k-1, (k-1) M / X) <= eps; larger m carry weights below eps. """
    x = special.gammainccinv(k - 1, eps)
    return int(math.ceil(X * x / (k - 1)))


def _corollary2_block(lam, Q, hs, s):
    N = lam.size - 1
    n = np.arange(1, N + 1, dtype=np.float64)
    out = []
    for h in hs:
        nn = n[:N - h]
        w = np.exp(s * (np.log(nn) - np.log(nn + h))) * Q[h + 1:]
        out.append(math.fsum(lam[1:N - h + 1] * lam[h + 1:] * w))
    return out


def corollary2_lhs(f, X, Y, eps=MAX_EPS_TRUNC, threads=1, h_taper=0.0):
    """ sum_{h <= Y} sum_n lambda(n) lambda(n+h) (n/(n+h))^((k-1)/2) Q(k-1, (k-1)(n+h)/X).

    Q is the regularized upper incomplete gamma; m = n + h stops at the cutoff
    where Q drops below eps. The weight (n/(n+h))^((k-1)/2) does not split into
    well-scaled factors of n and m, so every shift is summed directly.
    """
    H = int(math.floor(Y))
    if H < 1:
        return 0.0

    k = f.weight
    N = corollary2_cutoff(k, X, eps)
    _require(f, N, f'corollary2_lhs(X={X:g})')

    lam = np.asarray(f.lam[:N + 1])
    m = np.arange(0, N + 1, dtype=np.float64)
    Q = special.gammaincc(k - 1, (k - 1) * m / X)
    s = 0.5 * (k - 1)

    hs = list(range(1, min(H, N - 1) + 1))
    blocks = [hs[i:i + H_BLOCK] for i in range(0, len(hs), H_BLOCK)]
    jobs = [delayed(_corollary2_block)(lam, Q, block, s) for block in blocks]
    per_h = Parallel(n_jobs=threads)(jobs)
    per_h = np.array([v for block in per_h for v in block])
    return math.fsum(h_weights(len(hs), Y, h_taper) * per_h)


def corollary2_lhs_bruteforce(f, X, Y, eps=MAX_EPS_TRUNC):
    """ `corollary2_lhs` term by term over (h, n) with the sharp cutoff (oracle). """
    k = f.weight
    N = corollary2_cutoff(k, X, eps)
    _require(f, N, f'corollary2_lhs_bruteforce(X={X:g})')

    terms = []
    for h in range(1, int(math.floor(Y)) + 1):
        for n in range(1, N - h + 1):
            m = n + h
            terms.append(f.lam[n] * f.lam[m] * (n / m) ** (0.5 * (k - 1)) * special.gammaincc(k - 1, (k - 1) * m / X))
    return math.fsum(terms)


def scs_weighted(f, psi, Y, eps=MAX_EPS_TRUNC, h_taper=0.0, threads=1):
    """ S_f(psi, Y) = sum_{h <= Y} sum_n a(n) a(n+h) int psi(y) e^(-4 pi (n+h) y) y^(k-2) dy.

    The point mass and sampled kernels go through the FFT correlation with
    factors balanced by e^(-/+ m / 2X_e); the gamma cutoff reduces to
    (4 pi)^(-k) corollary2_lhs.

    Args:
        f (Eigenform): the eigenform.
        psi (SmoothingKernel): the averaging kernel.
        Y (float): shift range.
        eps (float): n-tail truncation at the kernel's effective scale.
        h_taper (float): optional cosine taper of the h-weights.
        threads (int): used by the gamma-cutoff route.

    Returns:
        float: the weighted sum.
    """
    H = int(math.floor(Y))
    if H < 1 or psi.is_zero:
        return 0.0

    k = f.weight
    if psi.kind == 'gamma-cutoff':
        return (4 * math.pi) ** -k * corollary2_lhs(f, psi.X, Y, eps, threads, h_taper)

    Xe = max(psi.effective_X, 1.0)
    N = n_trunc(k, Xe, eps)
    _require(f, N, f'scs_weighted({psi.kind})')

    n = np.arange(1, N + 1, dtype=np.float64)
    lp = _log_power(k, n, Xe)
    logw, sign = psi.log_weights(n, k)
    A = f.lam[1:N + 1] * np.exp(lp - n / (2 * Xe))
    B = f.lam[1:N + 1] * sign * np.exp(lp + logw + n / (2 * Xe))

    h = np.arange(1, H + 1, dtype=np.float64)
    c = correlation_fft(A, B, H) * np.exp(-h / (2 * Xe))
    return math.fsum(h_weights(H, Y, h_taper) * c)


def regime_of(ratio, small=0.1, large=10.0):
    if ratio < small:
        return 'small'
    if ratio > large:
        return 'large'
    return 'transition'
