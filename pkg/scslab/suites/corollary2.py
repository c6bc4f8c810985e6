import logging
from functools import partial

from tqdm import tqdm

from ..errors import DomainError
from ..harness import load_eigenform, new_report, verify_domain
from ..report import ReportRow
from ..scs import corollary2_cutoff, corollary2_lhs, corollary2_lhs_bruteforce
from ..transition import (C_F_TOL, TransitionGrid, ZETA2, c_f_required_terms, corollary2_rhs,
                          corollary2_upper_limit)
from .common import MIN_L_COEFFICIENTS, check_l_value, check_regimes, check_rows_finite, check_yardsticks

log = logging.getLogger(__name__)
tqdm = partial(tqdm, dynamic_ncols=True)

BRUTEFORCE_TOL = 1e-10


def _lower_limits(rc):
    k = rc.weight
    return [(k - 1) * Y * Y / X for X, Y in rc.points()]


def required_coefficients(rc):
    k = rc.weight
    lhs = max(corollary2_cutoff(k, X, rc.eps_trunc) for X, _ in rc.points())
    transition = c_f_required_terms(k, min(_lower_limits(rc)), C_F_TOL)
    return max(lhs, transition, MIN_L_COEFFICIENTS)


def _check_points(rc):
    for X, Y in rc.points():
        if not (X >= 1 and Y >= 1):
            raise DomainError(f'Corollary 2 needs X, Y >= 1, got X={X}, Y={Y}')


def run(rc):
    """ Corollary 2: incomplete-gamma weighted sums against the integral of c_f(u) / u^2. """
    verify_domain(_check_points, rc)

    f, cache_id = load_eigenform(rc, required_coefficients(rc), 'corollary2')
    report = new_report(rc)
    report.provenance['cache_id'] = cache_id

    constant = check_l_value(report, f)
    reference = -constant.L / (2 * ZETA2)

    # one c_f grid covers every lower limit of the run
    limits = _lower_limits(rc)
    upper = max(corollary2_upper_limit(f, a) for a in limits)
    grid = TransitionGrid.fill(f, min(limits), upper, spec=rc.contour, threads=rc.threads)
    log.info(f'[GRID] {len(grid.samples)} c_f samples on [{grid.alpha_min:.4g}, {grid.alpha_max:.4g}]')

    bruteforce_max_x = float(rc.option('bruteforce_max_x', 0))
    worst_brute, brute_rows = 0.0, 0
    for X, Y in tqdm(rc.points(), desc='corollary2'):
        lhs = corollary2_lhs(f, X, Y, rc.eps_trunc, threads=rc.threads)
        if X <= bruteforce_max_x:
            brute = corollary2_lhs_bruteforce(f, X, Y, rc.eps_trunc)
            worst_brute = max(worst_brute, abs(lhs - brute) / max(abs(brute), 1.0))
            brute_rows += 1
        prediction = corollary2_rhs(f, X, Y, rc.contour, rc.theta, grid, rc.threads)

        row = ReportRow(f.weight, X, Y, Y * Y / X, lhs, prediction.value, prediction.yardstick, reference)
        report.rows.append(row)
        log.info(f'[ROW] X={X:g} Y={Y:g} lhs={lhs:.10g} rhs={prediction.value:.10g} '
                 f'normalized={row.normalized_residual:.3g}')

    if brute_rows:
        report.add_check(f'lhs == brute force within {BRUTEFORCE_TOL:g}', worst_brute <= BRUTEFORCE_TOL,
                         detail=f'{brute_rows} rows, worst relative={worst_brute:.3g}')

    certified = all(s.tail_bound < C_F_TOL * max(1.0, abs(s.value)) for s in grid.samples)
    report.add_check('c_f grid tails certified', certified, detail=f'{len(grid.samples)} samples')

    check_rows_finite(report)
    check_yardsticks(report)
    check_regimes(report)
    report.extras['grid'] = {'alpha_min': grid.alpha_min, 'alpha_max': grid.alpha_max, 'samples': len(grid.samples)}
    return report
