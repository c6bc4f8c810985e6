import logging
import math
import tempfile
from pathlib import Path

import numpy as np
from scipy import special

from ..cache import read_coefficients, write_coefficients
from ..cfs import C_alpha, CfsQuery, cfs_sum, cfs_sum_bruteforce, jacobi
from ..eigenforms import SUPPORTED_WEIGHTS, build_eigenform, check_hecke_relations, delta_series, eisenstein_series
from ..harness import new_report
from ..kernels import SmoothingKernel
from ..ntt import ntt_multiply, schoolbook_multiply
from ..report import CHECK_COLUMNS
from ..scs import scs_weighted
from ..specfun import (ContourSpec, W_k, W_k_residue_series, contour_quadrature, ln_gamma, regularized_upper_gamma,
                       upper_incomplete_gamma, wk_quadrature, zeta_real)
from ..transition import PREFACTOR, c_f, main_theorem_rhs, sym2_crosscheck

log = logging.getLogger(__name__)

SELFTEST_N = 400
NTT_LENGTHS = (65, 300, 1024, 4096)


def _close(a, b, rel):
    return abs(a - b) <= rel * max(abs(b), 1e-300)


def _series(report, f, sizes=()):
    report.add_check('E4 to q^2', list(eisenstein_series(4, 2)) == [1, 240, 2160])
    report.add_check('E6 to q^1', list(eisenstein_series(6, 1)) == [1, -504])
    report.add_check('E4 to q^0', list(eisenstein_series(4, 0)) == [1])

    tau = delta_series(12)
    report.add_check('tau(1), tau(2), tau(3)', (tau[1], tau[2], tau[3]) == (1, -24, 252))
    report.add_check('tau(6) == tau(2) tau(3)', tau[6] == tau[2] * tau[3])

    report.add_check('a_16(2) == 216', build_eigenform(16, 2).coeffs[2] == 216)
    lam2 = build_eigenform(12, 10).lam[2]
    report.add_check('lambda_12(2) == -24 2^(-11/2)', _close(lam2, -24 * 2 ** -5.5, 1e-15), detail=f'{lam2!r}')

    for k in SUPPORTED_WEIGHTS:
        g = f if k == f.weight else build_eigenform(k, f.N)
        hecke = check_hecke_relations(g)
        report.add_check(f'Hecke relations k={k}', hecke.passed,
                         detail=f'{hecke.multiplicative_checked}+{hecke.recurrence_checked}+{hecke.deligne_checked} '
                                f'checked, first failure: {hecke.first_failure}')

    # acceptance sizes, e.g. N = 10^5 for k = 12
    for size in sizes:
        g = build_eigenform(int(size['weight']), int(size['N']))
        hecke = check_hecke_relations(g)
        report.add_check(f'Hecke relations k={g.weight} N={g.N}', hecke.passed,
                         detail=f'first failure: {hecke.first_failure}')


def _ntt(report, rng, trials=0, length=2048):
    report.add_check('(1+q)^2', ntt_multiply([1, 1], [1, 1]) == [1, 2, 1])
    for size in NTT_LENGTHS:
        x = [int(v) for v in rng.integers(-10 ** 12, 10 ** 12, size)]
        y = [int(v) for v in rng.integers(-10 ** 12, 10 ** 12, size)]
        report.add_check(f'ntt == schoolbook, length {size}', ntt_multiply(x, y) == schoolbook_multiply(x, y))

    failures = 0
    for _ in range(trials):
        x = [int(v) for v in rng.integers(-10 ** 12, 10 ** 12, length)]
        y = [int(v) for v in rng.integers(-10 ** 12, 10 ** 12, length)]
        failures += ntt_multiply(x, y) != schoolbook_multiply(x, y)
    if trials:
        report.add_check(f'ntt == schoolbook on {trials} random series of length {length}', failures == 0,
                         detail=f'{failures} mismatches')


def _specfun(report):
    report.add_check('ln Gamma(1) == 0', abs(ln_gamma(1)) <= 1e-15)
    report.add_check('ln Gamma(1/2) == ln sqrt(pi)', _close(ln_gamma(0.5).real, 0.5 * math.log(math.pi), 1e-13))
    report.add_check('ln Gamma(5) == ln 24', _close(ln_gamma(5).real, math.log(24), 1e-13))

    for s, expected in ((2, math.pi ** 2 / 6), (4, math.pi ** 4 / 90), (3, 1.2020569031595942)):
        report.add_check(f'zeta({s})', abs(zeta_real(s) - expected) <= 1e-12)

    report.add_check('Gamma(1, x) == e^-x', _close(upper_incomplete_gamma(1, 3.5), math.exp(-3.5), 1e-10))
    report.add_check('Gamma(2, 1) == 2/e', _close(upper_incomplete_gamma(2, 1), 2 / math.e, 1e-10))
    worst = 0.0
    for s in (0.5, 2.5, 11.0):
        for x in (0.1, 1.0, 5.0, 30.0):
            complete = upper_incomplete_gamma(s, x) + special.gammainc(s, x) * math.gamma(s)
            worst = max(worst, abs(complete / math.gamma(s) - 1),
                        abs(upper_incomplete_gamma(s, x) / math.gamma(s) - regularized_upper_gamma(s, x)))
    report.add_check('Gamma(s,x) + gamma(s,x) == Gamma(s)', worst <= 1e-10, detail=f'worst={worst:.3g}')

    spec = ContourSpec(sigma=2.0)
    value = contour_quadrature(lambda s: np.exp(special.loggamma(s)), spec).value
    report.add_check('(1/2pi i) int Gamma(s) ds == e^-1', abs(value - math.exp(-1)) <= 1e-10, detail=f'{value:.15g}')

    worst_sigma, worst_imag, worst_residue = 0.0, 0.0, 0.0
    for x in (0.1, 1.0, 10.0):
        values = [W_k(12, x, ContourSpec(sigma=s)) for s in (1.1, 1.5, 2.5)]
        worst_sigma = max(worst_sigma, (max(values) - min(values)) / abs(values[1]))
        raw = wk_quadrature(12, x).value
        worst_imag = max(worst_imag, abs(raw.imag) / abs(raw.real))
    for x in (0.1, 1.0, 5.0):
        residue = W_k_residue_series(12, x).value
        worst_residue = max(worst_residue, abs(residue - W_k(12, x)) / abs(residue))
    report.add_check('W_k independent of sigma', worst_sigma <= 1e-8, detail=f'worst={worst_sigma:.3g}')
    report.add_check('W_k real', worst_imag <= 1e-10, detail=f'worst={worst_imag:.3g}')
    report.add_check('W_k residue series == quadrature', worst_residue <= 1e-6, detail=f'worst={worst_residue:.3g}')


def _transition(report, f):
    alpha = 0.7
    single = c_f(f, alpha, nterms=1).value
    expected = PREFACTOR * alpha * W_k(f.weight, math.pi ** 2 * alpha)
    report.add_check('c_f with one term', _close(single, expected, 1e-9), detail=f'{single:.15g}')

    zero = SmoothingKernel.zero(100.0)
    report.add_check('psi = 0 gives 0', scs_weighted(f, zero, 5.0) == 0 and main_theorem_rhs(f, zero, 5.0).value == 0)


def _l_value(report, weight, N, tol):
    """ Both L(1, sym^2 f) methods at an acceptance size. """
    check = sym2_crosscheck(build_eigenform(weight, N))
    relative = check.difference / check.primary.value
    report.add_check(f'L-value methods agree to {tol:g} at N={N}', relative <= tol,
                     detail=f'{check.primary.value:.12g} vs {check.secondary.value:.12g}')


def _cfs(report):
    report.add_check('Jacobi examples', (jacobi(1, 1), jacobi(3, 3), jacobi(2, 15)) == (1, 0, 1))
    sums = tuple(cfs_sum(CfsQuery(n, n)) for n in (1, 3, 5))
    report.add_check('S(1,1), S(3,3), S(5,5)', sums == (1, 3, 3), detail=f'{sums}')
    pairs = ((37, 91), (120, 17), (64, 64))
    report.add_check('S(X,Y) == brute force', all(cfs_sum(CfsQuery(X, Y)) == cfs_sum_bruteforce(X, Y) for X, Y in pairs))

    report.add_check('C(0) == 0', C_alpha(0.0).value == 0)
    a = 1e-3
    small = C_alpha(a).value - math.sqrt(a) - math.pi / 18 * a ** 1.5
    report.add_check('C(alpha) ~ sqrt(alpha) + (pi/18) alpha^(3/2)', abs(small) <= a ** 2.5, detail=f'{small:.3g}')
    a = 50.0
    large = C_alpha(a).value - a
    report.add_check('C(alpha) ~ alpha + O(1/alpha)', abs(large) <= 0.5 / a, detail=f'{large:.3g}')


def _cache(report, f):
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / 'roundtrip.txt'
        write_coefficients(path, f.weight, f.coeffs)
        weight, coeffs = read_coefficients(path, f.weight, f.N)
    report.add_check('cache round trip', weight == f.weight and coeffs == f.coeffs)


def _guarded(report, name, fn, *args):
    """ A section that raises is recorded as one failed hard check. """
    try:
        fn(report, *args)
    except Exception as e:
        log.exception(f'[SELFTEST] {name} raised')
        report.add_check(f'{name} ran', False, detail=f'{type(e).__name__}: {e}')


def run(rc):
    """ Exact and oracle checks of every module at small sizes.

    The section may add acceptance sizes: `hecke` (list of weight and N),
    `ntt_trials` random series of length `ntt_length`, and `l_value` (N and tol).
    """
    N = int(rc.option('N', SELFTEST_N))
    rng = np.random.default_rng(rc.seed)
    report = new_report(rc, csv_name='selftest.csv', columns=list(CHECK_COLUMNS))

    f = build_eigenform(rc.weight, N, threads=rc.threads)
    _guarded(report, 'series', _series, f, rc.option('hecke', ()))
    _guarded(report, 'ntt', _ntt, rng, int(rc.option('ntt_trials', 0)), int(rc.option('ntt_length', 2048)))
    _guarded(report, 'specfun', _specfun)
    _guarded(report, 'transition', _transition, f)
    _guarded(report, 'cfs', _cfs)
    _guarded(report, 'cache', _cache, f)
    l_value = rc.option('l_value', None)
    if l_value:
        _guarded(report, 'l-value', _l_value, rc.weight, int(l_value['N']), float(l_value.get('tol', 1e-3)))

    report.rows = [{'name': c.name, 'label': c.label, 'hard': c.hard, 'detail': c.detail} for c in report.checks]
    return report
