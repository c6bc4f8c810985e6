import logging
import math
from functools import partial

from tqdm import tqdm

from ..harness import load_eigenform, new_report
from ..kernels import SmoothingKernel
from ..report import KERNEL_COLUMNS, KernelRow
from ..scs import SCSQuery, corollary2_cutoff, n_trunc, scs_fast, scs_weighted
from ..transition import (C_F_TOL, TransitionGrid, c_f_required_terms, corollary1_rhs, corollary2_upper_limit,
                          main_theorem_rhs)
from .common import MIN_L_COEFFICIENTS, check_l_value, relative_difference

log = logging.getLogger(__name__)
tqdm = partial(tqdm, dynamic_ncols=True)

BUMP_WIDTHS = (0.04, 0.02, 0.01)
IDENTITY_TOL = 1e-9


def _widths(rc):
    return tuple(rc.option('bump_widths', BUMP_WIDTHS)) if 'bump' in rc.kernels else ()


def required_coefficients(rc):
    k, eps = rc.weight, rc.eps_trunc
    widest = max(_widths(rc), default=0.0)
    N = MIN_L_COEFFICIENTS
    for X, Y in rc.points():
        alpha = Y * Y / X
        N = max(N, n_trunc(k, X / (1 - widest), eps), c_f_required_terms(k, alpha * (1 - widest), C_F_TOL))
        if 'gamma_cutoff' in rc.kernels:
            N = max(N, corollary2_cutoff(k, X, eps), c_f_required_terms(k, (k - 1) * alpha, C_F_TOL))
    return N


def _gamma_grid(rc, f):
    limits = [(f.weight - 1) * Y * Y / X for X, Y in rc.points() if Y >= 1]
    if not limits:
        return None
    upper = max(corollary2_upper_limit(f, a) for a in limits)
    return TransitionGrid.fill(f, min(limits), upper, spec=rc.contour, threads=rc.threads)


def _decreasing(values):
    return all(b < a for a, b in zip(values, values[1:]))


def run(rc):
    """ Main theorem: S_f(psi, Y) against its prediction for the configured kernels.

    The point mass must reproduce Corollary 1 on both sides, and bumps of
    shrinking width around the same point must approach the point-mass values.
    """
    f, cache_id = load_eigenform(rc, required_coefficients(rc), 'main-theorem')
    report = new_report(rc, csv_name='main_theorem.csv', columns=list(KERNEL_COLUMNS))
    report.provenance['cache_id'] = cache_id

    constant = check_l_value(report, f)
    k, eps = f.weight, rc.eps_trunc
    grid = _gamma_grid(rc, f) if 'gamma_cutoff' in rc.kernels else None

    def add_row(name, psi, X, Y):
        lhs = scs_weighted(f, psi, Y, eps, threads=rc.threads)
        prediction = main_theorem_rhs(f, psi, Y, rc.contour, rc.theta, grid, rc.threads)
        row = KernelRow(k, X, Y, Y * Y / X, lhs, prediction.value, prediction.yardstick, kernel=name)
        report.rows.append(row)
        log.info(f'[ROW] {name} X={X:g} Y={Y:g} lhs={lhs:.10g} rhs={prediction.value:.10g} '
                 f'normalized={row.normalized_residual:.3g}')
        return row

    worst_lhs, worst_rhs, converging = 0.0, 0.0, []
    for X, Y in tqdm(rc.points(), desc='main-theorem'):
        if 'point_mass' in rc.kernels:
            point = add_row('point-mass', rc.kernel('point_mass', X=X), X, Y)

            scale = (4 * math.pi) ** (2 - k) * X
            lhs_c1 = scale * scs_fast(f, SCSQuery(X, Y, eps))
            worst_lhs = max(worst_lhs, abs(point.lhs - lhs_c1) / max(abs(lhs_c1), scale))
            if 1 <= Y <= X:
                rhs_c1 = scale * corollary1_rhs(f, X, Y, rc.contour, rc.theta, constant=constant.value).value
                worst_rhs = max(worst_rhs, relative_difference(point.rhs, rhs_c1))

            bumps = [add_row(f'bump-{w:g}', rc.kernel('bump', X=X, width=w), X, Y) for w in _widths(rc)]
            if len(bumps) >= 2:
                converging.append({
                    'X': X, 'Y': Y,
                    'lhs': [abs(b.lhs - point.lhs) for b in bumps],
                    'rhs': [abs(b.rhs - point.rhs) for b in bumps],
                })

        if 'gamma_cutoff' in rc.kernels and Y >= 1:
            add_row('gamma-cutoff', rc.kernel('gamma_cutoff', X=X), X, Y)

    if 'point_mass' in rc.kernels:
        report.add_check('point mass lhs == (4pi)^(2-k) X corollary1 lhs', worst_lhs <= IDENTITY_TOL,
                         detail=f'worst relative={worst_lhs:.3g}')
        report.add_check('point mass rhs == (4pi)^(2-k) X corollary1 rhs', worst_rhs <= 1e-12,
                         detail=f'worst relative={worst_rhs:.3g}')

    if converging:
        ok = all(_decreasing(c['lhs']) and _decreasing(c['rhs']) for c in converging)
        report.add_check('bumps converge to the point mass as the width halves', ok,
                         detail=f'widths={list(_widths(rc))}')
        report.extras['bump_convergence'] = converging

    zero = SmoothingKernel.zero(rc.x_grid[0])
    zero_lhs = scs_weighted(f, zero, rc.points()[0][1], eps)
    zero_rhs = main_theorem_rhs(f, zero, rc.points()[0][1]).value
    report.add_check('psi = 0 gives 0 on both sides', zero_lhs == 0 and zero_rhs == 0)

    bad = [(r.kernel, r.X, r.Y) for r in report.rows if not (math.isfinite(r.lhs) and math.isfinite(r.rhs))]
    report.add_check('rows finite', not bad, detail=f'non-finite at {bad}' if bad else f'{len(report.rows)} rows')

    normalized = [abs(r.normalized_residual) for r in report.rows if math.isfinite(r.normalized_residual)]
    if normalized:
        report.add_check('|residual| <= 10 yardstick', max(normalized) <= 10, hard=False,
                         detail=f'worst={max(normalized):.3g}')
    return report
