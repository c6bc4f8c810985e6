import logging
import math
from functools import partial

import numpy as np
from tqdm import tqdm

from ..cfs import (DEFAULT_KMAX, DEFAULT_QUAD_TOL, C_alpha, CfsQuery, cfs_sum_bruteforce, cfs_verify,
                   second_differences)
from ..harness import new_report, verify_domain
from ..report import CFS_COLUMNS

log = logging.getLogger(__name__)
tqdm = partial(tqdm, dynamic_ncols=True)

ORACLE_MAX = 200
NORMALIZED_BOUND = 5.0
LIMIT_TOL = 0.10


def _queries(rc):
    kmax = int(rc.option('kmax', DEFAULT_KMAX))
    quad_tol = float(rc.option('quad_tol', DEFAULT_QUAD_TOL))
    queries = []
    for X, Y in rc.points():
        queries.append(CfsQuery(int(round(X)), int(round(Y)), kmax, quad_tol))
    return queries


def run(rc):
    """ Jacobi-symbol sums S(X, Y) against (2/pi^2) C(Y/X) X^(3/2). """
    queries = verify_domain(_queries, rc)
    report = new_report(rc, csv_name='cfs.csv', columns=list(CFS_COLUMNS))

    oracle_max = int(rc.option('oracle_max', ORACLE_MAX))
    oracle_failures, oracle_checked = [], 0
    for q in tqdm(queries, desc='cfs'):
        row = cfs_verify(q, threads=rc.threads)
        report.rows.append(row)
        if q.X <= oracle_max and q.Y <= oracle_max:
            oracle_checked += 1
            if cfs_sum_bruteforce(q.X, q.Y) != row.S:
                oracle_failures.append((q.X, q.Y))

    report.add_check('S(X,Y) == brute force', not oracle_failures,
                     detail=f'{oracle_checked} checked' + (f', failed at {oracle_failures}' if oracle_failures else ''))

    disagree = [(r.X, r.Y) for r in report.rows if not r.forms_agree]
    report.add_check('both forms of C(alpha) agree', not disagree,
                     detail=f'disagree at {disagree}' if disagree else f'quad_tol={queries[0].quad_tol:g}')

    finite = all(math.isfinite(r.prediction) for r in report.rows)
    report.add_check('predictions finite', finite)

    bound = float(rc.option('normalized_bound', NORMALIZED_BOUND))
    worst = max(abs(r.normalized_residual) for r in report.rows)
    report.add_check(f'|normalized residual| <= {bound:g}', worst <= bound, hard=False, detail=f'worst={worst:.3g}')

    # rows whose X doubles at the same Y
    by_point = {(r.X, r.Y): r for r in report.rows}
    doubled = [(r, by_point[(2 * r.X, r.Y)]) for r in report.rows if (2 * r.X, r.Y) in by_point]
    if doubled:
        growth = max(abs(b.normalized_residual) / max(abs(a.normalized_residual), 1e-12) for a, b in doubled)
        stable = all(abs(b.normalized_residual) <= bound for _, b in doubled)
        report.add_check('normalized residual bounded when X doubles', stable, hard=False,
                         detail=f'{len(doubled)} pairs, max growth={growth:.3g}')

    tol = float(rc.option('limit_tol', LIMIT_TOL))
    limits = [abs(r.S - r.limit_prediction) / r.limit_prediction for r in report.rows if r.regime != 'transition']
    if limits:
        report.add_check(f'limiting regimes within {tol:.0%}', max(limits) <= tol, hard=False,
                         detail=f'worst={max(limits):.3g} over {len(limits)} rows')

    report.extras['rows'] = [
        {'X': r.X, 'Y': r.Y, 'regime': r.regime, 'limit_prediction': r.limit_prediction, 'yardstick': r.yardstick}
        for r in report.rows
    ]

    alpha_grid = rc.option('alpha_grid', None)
    if alpha_grid:
        alphas = np.geomspace(alpha_grid['min'], alpha_grid['max'], int(alpha_grid['points']))
        kmax = int(rc.option('kmax', DEFAULT_KMAX))
        worst_form = max(C_alpha(float(a), kmax).discrepancy for a in tqdm(alphas, desc='C(alpha)'))
        tol = float(rc.option('quad_tol', DEFAULT_QUAD_TOL))
        report.add_check(f'both forms of C(alpha) agree on {alphas.size} points', worst_form <= tol,
                         detail=f'[{alphas[0]:g}, {alphas[-1]:g}] worst={worst_form:.3g}')

    curvature = rc.option('second_differences', None)
    if curvature:
        report.extras['second_differences'] = second_differences(
            curvature['alphas'], curvature.get('h', 0.05), int(rc.option('kmax', DEFAULT_KMAX)))
    return report
