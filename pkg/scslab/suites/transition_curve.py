import logging
import math

import numpy as np

from ..harness import load_eigenform, new_report
from ..report import CURVE_COLUMNS
from ..specfun import ContourSpec
from ..transition import (C_F_TOL, GRID_PER_DECADE, TransitionGrid, c_f, c_f_envelope, c_f_required_terms,
                          transition_diagnostics)
from .common import MIN_L_COEFFICIENTS, check_l_value

log = logging.getLogger(__name__)

ALPHA_MIN = 1e-2
ALPHA_MAX = 1e2
CONTOUR_SIGMAS = (1.2, 2.5)
LIMIT_ALPHAS = (20.0, 100.0)


def required_coefficients(rc):
    alpha_min = float(rc.option('alpha_min', ALPHA_MIN))
    return max(c_f_required_terms(rc.weight, alpha_min, C_F_TOL), MIN_L_COEFFICIENTS)


def run(rc):
    """ c_f on a geometric alpha grid, with its shape diagnostics. """
    alpha_min = float(rc.option('alpha_min', ALPHA_MIN))
    alpha_max = float(rc.option('alpha_max', ALPHA_MAX))
    per_decade = int(rc.option('per_decade', GRID_PER_DECADE))

    f, cache_id = load_eigenform(rc, required_coefficients(rc), 'transition-curve')
    report = new_report(rc, csv_name='transition_curve.csv', columns=list(CURVE_COLUMNS))
    report.provenance['cache_id'] = cache_id

    constant = check_l_value(report, f)
    grid = TransitionGrid.fill(f, alpha_min, alpha_max, per_decade, spec=rc.contour, threads=rc.threads)
    report.rows.extend(grid.samples)
    log.info(f'[GRID] {len(grid.samples)} samples on [{alpha_min:g}, {alpha_max:g}]')

    finite = all(math.isfinite(s.value) for s in grid.samples)
    certified = all(s.tail_bound < C_F_TOL * max(1.0, abs(s.value)) for s in grid.samples)
    report.add_check('c_f finite', finite)
    report.add_check('c_f tails certified', certified, detail=f'tol={C_F_TOL:g}')

    small = float(rc.option('small', 0.5))
    large = float(rc.option('large', 10.0))
    diagnostics = transition_diagnostics(grid, constant.value, small, large)
    report.extras['diagnostics'] = diagnostics
    if 'large_alpha_envelope_ratio' in diagnostics:
        ratio = diagnostics['large_alpha_envelope_ratio']
        report.add_check('c_f under its decay envelope', ratio <= 1 + C_F_TOL, hard=False,
                         detail=f'max |c_f| / envelope={ratio:.3g}')
    if 'small_alpha_exponent' in diagnostics:
        exponent = diagnostics['small_alpha_exponent']
        report.add_check('c_f - C vanishes like alpha^(1/2) or faster', exponent >= 0.5, hard=False,
                         detail=f'fitted exponent={exponent:.3g} for alpha <= {small:g}')

    # distance from the large-alpha limit at finite alpha, as a fraction of C
    limits = {}
    for alpha in rc.option('limit_alphas', LIMIT_ALPHAS):
        sample = c_f(f, float(alpha), rc.contour, scale_hint=constant.value)
        limits[float(alpha)] = {'c_f': sample.value, 'c_f_over_C': sample.value / constant.value,
                               'envelope': c_f_envelope(f.weight, float(alpha))}
        log.info(f'[LIMIT] c_f({alpha:g}) = {sample.value:.6g} = {sample.value / constant.value:.3%} of C')
    report.extras['limits'] = limits

    # c_f does not depend on the line of integration of W_k
    alpha = float(np.sqrt(alpha_min * alpha_max))
    reference = c_f(f, alpha, rc.contour, scale_hint=constant.value)
    worst = 0.0
    for sigma in rc.option('contour_sigmas', CONTOUR_SIGMAS):
        spec = ContourSpec(sigma, rc.contour.step, rc.contour.tmax)
        other = c_f(f, alpha, spec, nterms=reference.nterms)
        worst = max(worst, abs(other.value - reference.value) / max(1.0, abs(reference.value)))
    report.add_check('c_f independent of the contour', worst <= 1e-8, hard=False,
                     detail=f'alpha={alpha:.4g} worst={worst:.3g}')

    report.extras['constant'] = constant.value
    return report
