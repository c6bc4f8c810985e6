import math

from ..report import regime_summary
from ..transition import DIRICHLET_DEPTH, sym2_crosscheck, transition_constant

YARDSTICK_BOUND = 10.0
MIN_L_COEFFICIENTS = 4 * DIRICHLET_DEPTH


def relative_difference(a, b, floor=1e-300):
    return abs(a - b) / max(abs(b), floor)


def check_l_value(report, f):
    """ Records both L(1, sym^2 f) estimates; positivity is hard, agreement a diagnostic. """
    lc = sym2_crosscheck(f)
    constant = transition_constant(f)
    report.extras['L_values'] = {
        lc.primary.method: {'value': lc.primary.value, 'error': lc.primary.error},
        lc.secondary.method: {'value': lc.secondary.value, 'error': lc.secondary.error,
                              **{k: float(v) for k, v in lc.secondary.details.items()}},
    }
    report.extras['transition_constant'] = {'value': constant.value, 'error': constant.error}
    report.add_check('L(1,sym^2 f) > 0', lc.positive, detail=f'L={lc.primary.value:.12g}')
    report.add_check('L-value methods agree', lc.consistent, hard=False,
                     detail=f'|diff|={lc.difference:.3g} vs errors {lc.primary.error:.2g}+{lc.secondary.error:.2g}')
    return constant


def check_rows_finite(report):
    bad = [(r.X, r.Y) for r in report.rows if not (math.isfinite(r.lhs) and math.isfinite(r.rhs))]
    report.add_check('rows finite', not bad, detail=f'non-finite at {bad}' if bad else f'{len(report.rows)} rows')


def check_yardsticks(report, bound=YARDSTICK_BOUND):
    """ |residual| <= bound * yardstick on every row with a positive yardstick (diagnostic). """
    normalized = [abs(r.normalized_residual) for r in report.rows if math.isfinite(r.normalized_residual)]
    if not normalized:
        return
    worst = max(normalized)
    report.add_check(f'|residual| <= {bound:g} yardstick', worst <= bound, hard=False, detail=f'worst={worst:.3g}')


def check_regimes(report):
    """ One diagnostic per regime that carries a PASS/FAIL statement. """
    for name, entry in regime_summary(report).items():
        if entry['flag'] in ('PASS', 'FAIL'):
            report.add_check(f'regime {name}: {entry["statement"]}', entry['flag'] == 'PASS', hard=False,
                             detail=f'worst={entry["worst"]:.3g} over {entry["rows"]} rows')
