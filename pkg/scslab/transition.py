import logging
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache, partial

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator
from tqdm import tqdm

from .errors import DomainError, InsufficientCoefficientsError, KernelError
from .specfun import DEFAULT_CONTOUR, W_k_batch, wk_mellin_bound, zeta_real

log = logging.getLogger(__name__)
tqdm = partial(tqdm, dynamic_ncols=True)

PREFACTOR = math.pi ** 1.5 / 2
ZETA2 = zeta_real(2)
THETA = 7 / 64

C_F_TOL = 1e-8
MELLIN_GRID = np.arange(2.75, 81.0, 1.0)   # abscissae A > 2 tried by the tail bounds

DIRICHLET_DEPTH = 40    # T = N / 40, so e^(-n/T) < e^(-40) beyond the table
RANKIN_POINTS = 17

GRID_PER_DECADE = 24
KERNEL_GRID_POINTS = 17
INTEGRAL_TAIL_TOL = 1e-10


@lru_cache(maxsize=None)
def _mellin_table(k):
    return np.array([wk_mellin_bound(k, float(A)) for A in MELLIN_GRID])


def _log_tail_bounds(k, alpha, nterms):
    """ log of the tail bound for each A of MELLIN_GRID. """
    A = MELLIN_GRID
    return (math.log(PREFACTOR * alpha) + _mellin_table(k) - A * math.log(math.pi ** 2 * alpha)
            + math.log(4) + (2 - A) * math.log(nterms) - np.log(A - 2))


def c_f_tail_bound(k, alpha, nterms):
    """ Bound on (pi^(3/2)/2) alpha sum_{n > nterms} |lambda(n)^2 W_k(pi^2 n alpha)|.

    Uses |W_k(x)| <= M_A x^(-A), lambda(n)^2 <= d(n)^2 <= 4n and the integral
    test, minimized over A.
    """
    return float(np.exp(_log_tail_bounds(k, alpha, max(nterms, 1)).min()))


@lru_cache(maxsize=None)
def _log_envelope(k):
    """ log(4 (pi^(3/2)/2) M_A zeta(A-1) pi^(-2A)) for each A of MELLIN_GRID. """
    A = MELLIN_GRID
    zeta = np.array([zeta_real(a - 1) for a in A])
    return math.log(4 * PREFACTOR) + _mellin_table(k) + np.log(zeta) - 2 * A * math.log(math.pi)


def c_f_envelope(k, alpha):
    """ Bound on |c_f(alpha)| for every alpha > 0, falling faster than any power of alpha.

    Sums |W_k(x)| <= M_A x^(-A) against lambda(n)^2 <= 4n:
    |c_f(alpha)| <= 4 (pi^(3/2)/2) M_A zeta(A-1) pi^(-2A) alpha^(1-A), minimized over A.
    """
    if not alpha > 0:
        raise DomainError(f'c_f_envelope needs alpha > 0, got {alpha}')
    return float(np.exp((_log_envelope(k) + (1 - MELLIN_GRID) * math.log(alpha)).min()))


def c_f_required_terms(k, alpha, target):
    """ Smallest truncation whose tail bound is below `target`. """
    A = MELLIN_GRID
    log_n = (math.log(PREFACTOR * alpha) + _mellin_table(k) - A * math.log(math.pi ** 2 * alpha)
             + math.log(4) - np.log(A - 2) - math.log(target)) / (A - 2)
    log_n = np.minimum(log_n, 60.0)
    return max(1, int(math.ceil(np.exp(log_n).min())))


@dataclass(frozen=True)
class TransitionSample:
    alpha: float
    value: float
    nterms: int
    tail_bound: float

    def as_row(self):
        return {'alpha': self.alpha, 'c_f': self.value, 'tail_bound': self.tail_bound, 'nterms': self.nterms}


def _c_f_sum(f, alpha, nterms, spec):
    n = np.arange(1, nterms + 1, dtype=np.float64)
    w = W_k_batch(f.weight, math.pi ** 2 * alpha * n, spec)
    return PREFACTOR * alpha * math.fsum(f.lam[1:nterms + 1] ** 2 * w)


def c_f(f, alpha, spec=DEFAULT_CONTOUR, tol=C_F_TOL, nterms=None, scale_hint=None):
    """ Transition function c_f(alpha) = (pi^(3/2)/2) alpha sum_n lambda(n)^2 W_k(pi^2 n alpha).

    Args:
        f (Eigenform): the eigenform.
        alpha (float): alpha > 0.
        spec (ContourSpec): contour used for W_k.
        tol (float): the tail bound must be below tol * max(1, |c_f|).
        nterms (int): explicit truncation; the tail bound is then reported, not enforced.
        scale_hint (float): expected magnitude of c_f, used to pick a first truncation.

    Returns:
        TransitionSample: value with its truncation and certified tail bound.

    Raises:
        InsufficientCoefficientsError: if f.N is too short for the tolerance.
    """
    if not alpha > 0:
        raise DomainError(f'c_f needs alpha > 0, got {alpha}')

    k = f.weight
    if nterms is not None:
        if nterms > f.N:
            raise InsufficientCoefficientsError(nterms, f.N, f'c_f({alpha:g})')
        value = _c_f_sum(f, alpha, nterms, spec)
        return TransitionSample(float(alpha), value, int(nterms), c_f_tail_bound(k, alpha, nterms))

    scale = max(1.0, 0.5 * abs(scale_hint)) if scale_hint else 1.0
    nterms = min(c_f_required_terms(k, alpha, tol * scale), f.N)
    for _ in range(4):
        value = _c_f_sum(f, alpha, nterms, spec)
        used = nterms
        target = tol * max(1.0, abs(value))
        tail = c_f_tail_bound(k, alpha, nterms)
        if tail < target:
            return TransitionSample(float(alpha), value, int(nterms), tail)

        required = max(c_f_required_terms(k, alpha, target), used + 1)
        if required > f.N:
            raise InsufficientCoefficientsError(required, f.N, f'c_f({alpha:g}) to tolerance {tol:g}')
        nterms = required

    raise InsufficientCoefficientsError(nterms, f.N, f'c_f({alpha:g}) to tolerance {tol:g}')


@dataclass(frozen=True)
class LValue:
    """ An estimate of L(1, sym^2 f) with its error estimate. """
    value: float
    error: float
    method: str
    details: dict = field(default_factory=dict, compare=False)


def _dirichlet_smoothed_sum(lam_sq, T):
    n = np.arange(1, lam_sq.size, dtype=np.float64)
    return math.fsum(lam_sq[1:] / n * np.exp(-n / T))


def _l1_from_smoothed(S, k, T):
    # S(T) = L (1/zeta(2) + (k-1)/(pi^2 T)) + O(T^(-3/4))
    return S / (1 / ZETA2 + (k - 1) / (math.pi ** 2 * T))


def _sym2_dirichlet(f):
    M = f.N
    T = M / DIRICHLET_DEPTH
    lam_sq = f.lambda_squares(M)
    L = _l1_from_smoothed(_dirichlet_smoothed_sum(lam_sq, T), f.weight, T)
    L_half = _l1_from_smoothed(_dirichlet_smoothed_sum(lam_sq, T / 2), f.weight, T / 2)
    return LValue(L, abs(L - L_half), 'dirichlet-smoothed', {'T': T})


def _rankin_fit(lam2, Ts):
    n = np.arange(1, lam2.size + 1, dtype=np.float64)
    S = np.array([math.fsum(lam2 * np.exp(-n / T)) for T in Ts])
    slope, intercept = np.polyfit(Ts, S, 1)
    return slope, intercept


def _sym2_rankin(f):
    T0 = f.N / DIRICHLET_DEPTH
    lam2 = f.lam[1:] ** 2
    Ts = T0 * 2.0 ** np.linspace(-1, 0, RANKIN_POINTS)
    slope, intercept = _rankin_fit(lam2, Ts)
    slope_prev, _ = _rankin_fit(lam2, Ts / 2)

    L = slope * ZETA2
    details = {
        'T': T0,
        'intercept': intercept,
        'predicted_intercept': (f.weight - 1) / (2 * math.pi ** 2) * L,
    }
    return LValue(L, abs(L - slope_prev * ZETA2), 'rankin-slope', details)


SYM2_METHODS = {
    'dirichlet-smoothed': _sym2_dirichlet,
    'rankin-slope': _sym2_rankin,
}


def sym2_L1(f, method='dirichlet-smoothed'):
    """ L(1, sym^2 f) by one of SYM2_METHODS, with an error estimate. """
    if method not in SYM2_METHODS:
        raise ValueError(f'Unknown method {method!r}, expected one of {tuple(SYM2_METHODS)}')
    if f.N < 4 * DIRICHLET_DEPTH:
        raise InsufficientCoefficientsError(4 * DIRICHLET_DEPTH, f.N, 'sym2_L1')

    result = SYM2_METHODS[method](f)
    log.debug(f'[L-VALUE] {method}: {result.value:.12g} +- {result.error:.2g}')
    return result


@dataclass(frozen=True)
class LCrossCheck:
    primary: LValue
    secondary: LValue

    @property
    def difference(self):
        return abs(self.primary.value - self.secondary.value)

    @property
    def consistent(self):
        return self.difference <= self.primary.error + self.secondary.error

    @property
    def positive(self):
        return self.primary.value > 0 and self.secondary.value > 0


@lru_cache(maxsize=16)
def sym2_crosscheck(f):
    """ Both L-value methods on the same eigenform; disagreement is flagged, not raised. """
    check = LCrossCheck(sym2_L1(f, 'dirichlet-smoothed'), sym2_L1(f, 'rankin-slope'))
    if not check.consistent:
        log.warning(f'[L-VALUE] methods disagree by {check.difference:.3g} '
                    f'(errors {check.primary.error:.2g}, {check.secondary.error:.2g})')
    return check


@dataclass(frozen=True)
class TransitionConstant:
    value: float
    error: float
    L: float


def transition_constant(f):
    """ Gamma(k) L(1, sym^2 f) / (2 zeta(2)), the limit of c_f at 0. """
    L = sym2_crosscheck(f).primary
    scale = math.gamma(f.weight) / (2 * ZETA2)
    return TransitionConstant(scale * L.value, scale * L.error, L.value)


@dataclass(frozen=True, eq=False)
class TransitionGrid:
    """ c_f sampled on a geometric alpha grid, interpolated monotonically in ln(alpha). """
    weight: int
    samples: tuple

    @classmethod
    def fill(cls, f, alpha_min, alpha_max, per_decade=GRID_PER_DECADE, spec=DEFAULT_CONTOUR,
             tol=C_F_TOL, threads=1, alphas=None):
        if alphas is None:
            if not 0 < alpha_min < alpha_max:
                raise DomainError(f'bad alpha range [{alpha_min}, {alpha_max}]')
            points = max(2, int(math.ceil(math.log10(alpha_max / alpha_min) * per_decade)) + 1)
            alphas = np.geomspace(alpha_min, alpha_max, points)

        hint = transition_constant(f).value
        jobs = [delayed(c_f)(f, float(a), spec, tol, None, hint) for a in alphas]
        samples = Parallel(n_jobs=threads, prefer='threads')(tqdm(jobs, desc='c_f grid', leave=False))
        return cls(f.weight, tuple(samples))

    @property
    def alphas(self):
        return np.array([s.alpha for s in self.samples])

    @property
    def values(self):
        return np.array([s.value for s in self.samples])

    @property
    def alpha_min(self):
        return self.samples[0].alpha

    @property
    def alpha_max(self):
        return self.samples[-1].alpha

    def covers(self, lo, hi):
        return self.alpha_min <= lo and hi <= self.alpha_max

    @cached_property
    def _interpolator(self):
        return PchipInterpolator(np.log(self.alphas), self.values)

    def __call__(self, alpha):
        return self._interpolator(np.log(alpha))

    def to_frame(self):
        return pd.DataFrame([s.as_row() for s in self.samples], columns=['alpha', 'c_f', 'tail_bound', 'nterms'])

    def to_csv(self, path):
        self.to_frame().to_csv(path, index=False)


def transition_diagnostics(grid, constant, small=0.5, large=10.0):
    """ Shape diagnostics of a c_f grid (reported, never asserted).

    Returns:
        dict: fitted small-alpha exponent of |c_f - constant|, the largest
            |c_f| / c_f_envelope beyond `large` (at most 1 up to the tail
            bounds), and the largest second divided difference in ln(alpha).
            c_f changes sign for large alpha, so successive ratios of c_f
            are not a decay measure.
    """
    alphas, values = grid.alphas, grid.values
    out = {}

    sel = (alphas <= small) & (np.abs(values - constant) > 0)
    if sel.sum() >= 3:
        slope, _ = np.polyfit(np.log(alphas[sel]), np.log(np.abs(values[sel] - constant)), 1)
        out['small_alpha_exponent'] = float(slope)

    sel = alphas >= large
    if sel.any():
        envelope = np.array([c_f_envelope(grid.weight, a) for a in alphas[sel]])
        out['large_alpha_envelope_ratio'] = float(np.max(np.abs(values[sel]) / envelope))

    if alphas.size >= 3:
        la = np.log(alphas)
        d1 = np.diff(values) / np.diff(la)
        d2 = np.diff(d1) / (0.5 * (la[2:] - la[:-2]))
        out['max_second_difference'] = float(np.max(np.abs(d2)))

    return out


@dataclass(frozen=True)
class Prediction:
    """ Main term of a right-hand side and the scale of its error term. """
    value: float
    yardstick: float
    c_value: float = float('nan')
    constant: float = float('nan')


def corollary1_yardstick(X, Y, theta=THETA):
    return X ** 0.5 * Y ** ((1 + theta) / 3)


def corollary1_rhs(f, X, Y, spec=DEFAULT_CONTOUR, theta=THETA, sample=None, constant=None):
    """ (c_f(Y^2/X) - Gamma(k) L(1, sym^2 f) / (2 zeta(2))) X.

    Args:
        sample (TransitionSample): precomputed c_f at Y^2/X, shared by rows of equal ratio.
        constant (float): precomputed transition constant.

    Returns:
        Prediction: the main term and the yardstick X^(1/2) Y^((1+theta)/3).
    """
    if not 1 <= Y <= X:
        raise DomainError(f'Corollary 1 is stated for 1 <= Y <= X, got X={X}, Y={Y}')

    if constant is None:
        constant = transition_constant(f).value
    if sample is None:
        sample = c_f(f, Y * Y / X, spec, scale_hint=constant)

    value = (sample.value - constant) * X
    return Prediction(value, corollary1_yardstick(X, Y, theta), sample.value, constant)


def _c_f_integral_tail(k, U):
    """ Bound on int_U^inf |c_f(u)| / u^2 du, integrating c_f_envelope term by term. """
    A = MELLIN_GRID
    logb = _log_envelope(k) - A * math.log(U) - np.log(A)
    return float(np.exp(logb.min()))


def corollary2_upper_limit(f, a):
    """ Upper limit U beyond which the c_f(u) / u^2 tail is below INTEGRAL_TAIL_TOL max(1, C / a). """
    target = INTEGRAL_TAIL_TOL * max(1.0, transition_constant(f).value / a)
    U = max(100.0, 10 * a)
    while _c_f_integral_tail(f.weight, U) > target:
        U *= 2
    return U


def corollary2_integral(f, a, spec=DEFAULT_CONTOUR, grid=None, threads=1):
    """ int_a^inf c_f(u) / u^2 du with PCHIP interpolation of c_f in ln u.

    Returns:
        tuple: (integral, truncated tail bound, grid used).
    """
    U = corollary2_upper_limit(f, a)
    tail = _c_f_integral_tail(f.weight, U)

    if grid is None or not grid.covers(a, U):
        grid = TransitionGrid.fill(f, a, U, spec=spec, threads=threads)

    value, abserr = quad(lambda t: float(grid(math.exp(t))) * math.exp(-t), math.log(a), math.log(U),
                         limit=400, epsabs=0, epsrel=1e-10)
    log.debug(f'[INTEGRAL] a={a:g} U={U:g} value={value:.10g} quad_err={abserr:.2g} tail<={tail:.2g}')
    return value, tail, grid


def corollary2_rhs(f, X, Y, spec=DEFAULT_CONTOUR, theta=THETA, grid=None, threads=1):
    """ -L(1, sym^2 f) / (2 zeta(2)) X + (Y^2 / Gamma(k-1)) int_{(k-1)Y^2/X}^inf c_f(u) / u^2 du. """
    if not Y >= 1 or not X >= 1:
        raise DomainError(f'corollary2_rhs needs X, Y >= 1, got X={X}, Y={Y}')

    k = f.weight
    L = transition_constant(f).L
    integral, _, _ = corollary2_integral(f, (k - 1) * Y * Y / X, spec, grid, threads)
    value = -L / (2 * ZETA2) * X + Y * Y / math.gamma(k - 1) * integral
    return Prediction(value, corollary1_yardstick(X, Y, theta), integral, L / (2 * ZETA2))


def main_theorem_yardstick(f, psi, Y, theta=THETA):
    return (4 * math.pi) ** -f.weight * Y ** ((1 + theta) / 3) * psi.yardstick_integral(f.weight)


def main_theorem_rhs(f, psi, Y, spec=DEFAULT_CONTOUR, theta=THETA, grid=None, threads=1):
    """ (4 pi)^(-k) int (c_f(4 pi y Y^2) - Gamma(k) L / (2 zeta(2))) psi(y) / y^2 dy.

    Closed forms for the point mass at 1/(4 pi X) and for the gamma cutoff;
    sampled kernels are integrated on their grid.
    """
    k = f.weight
    if psi.is_zero:
        return Prediction(0.0, 0.0)

    yardstick = main_theorem_yardstick(f, psi, Y, theta)
    constant = transition_constant(f).value

    if psi.kind == 'point-mass':
        X = psi.X
        sample = c_f(f, Y * Y / X, spec, scale_hint=constant)
        value = (4 * math.pi) ** (2 - k) * X * X * (sample.value - constant)
        return Prediction(value, yardstick, sample.value, constant)

    if psi.kind == 'gamma-cutoff':
        rhs = corollary2_rhs(f, psi.X, Y, spec, theta, grid, threads)
        return Prediction((4 * math.pi) ** -k * rhs.value, yardstick, rhs.c_value, constant)

    support = psi.y[psi.psi != 0]
    if support[0] <= 0:
        raise KernelError('psi(y) / y^2 is not integrable at y = 0')

    lo, hi = 4 * math.pi * support[0] * Y * Y, 4 * math.pi * support[-1] * Y * Y
    if grid is None or not grid.covers(lo, hi):
        hi = max(hi, lo * (1 + 1e-6))
        grid = TransitionGrid.fill(f, lo, hi, spec=spec, threads=threads,
                                   alphas=np.geomspace(lo, hi, KERNEL_GRID_POINTS))

    integral = psi.integrate(lambda y: (grid(4 * math.pi * y * Y * Y) - constant) / (y * y))
    return Prediction((4 * math.pi) ** -k * integral, yardstick, float('nan'), constant)
