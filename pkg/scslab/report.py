import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .scs import regime_of

log = logging.getLogger(__name__)

REPORT_SCHEMA = 'scslab-report-1'

SCS_COLUMNS = ['k', 'X', 'Y', 'ratio', 'lhs', 'rhs', 'residual', 'yardstick']
CFS_COLUMNS = ['X', 'Y', 'alpha', 'S', 'prediction', 'residual', 'normalized_residual']
CURVE_COLUMNS = ['alpha', 'c_f', 'tail_bound', 'nterms']
KERNEL_COLUMNS = ['kernel'] + SCS_COLUMNS
CHECK_COLUMNS = ['name', 'label', 'hard', 'detail']

REGIME_TOL = 0.10


@dataclass
class ReportRow:
    """ One verification point; normalized_residual is residual / yardstick. """
    weight: int
    X: float
    Y: float
    ratio: float
    lhs: float
    rhs: float
    yardstick: float
    reference: float = math.nan     # limiting value of lhs / X in the large-ratio regime
    residual: float = field(init=False)
    normalized_residual: float = field(init=False)

    regimes = True

    def __post_init__(self):
        self.residual = self.lhs - self.rhs
        self.normalized_residual = self.residual / self.yardstick if self.yardstick else math.nan

    def as_row(self):
        return {
            'k': self.weight, 'X': self.X, 'Y': self.Y, 'ratio': self.ratio, 'lhs': self.lhs, 'rhs': self.rhs,
            'residual': self.residual, 'yardstick': self.yardstick,
        }


@dataclass
class KernelRow(ReportRow):
    """ A row of the averaged sum S_f(psi, Y); ratio-regime statements do not apply to it. """
    kernel: str = ''

    regimes = False

    def as_row(self):
        return {'kernel': self.kernel, **super().as_row()}


@dataclass
class Check:
    """ A named verification outcome; only hard checks decide the exit status unless strict. """
    name: str
    passed: bool
    hard: bool = True
    detail: str = ''

    @property
    def label(self):
        return 'PASS' if self.passed else 'FAIL'


@dataclass
class VerificationReport:
    mode: str
    rows: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)
    strict: bool = False
    csv_name: str = 'rows.csv'
    columns: list = field(default_factory=lambda: list(SCS_COLUMNS))

    def add_check(self, name, passed, hard=True, detail=''):
        check = Check(name, bool(passed), hard, detail)
        self.checks.append(check)
        level = logging.INFO if check.passed else logging.WARNING
        kind = 'hard' if hard else 'diagnostic'
        log.log(level, f'[CHECK] {check.label} {name} ({kind}) {detail}')
        return check

    @property
    def passed(self):
        """ True iff every hard check passed (every check when strict). """
        return all(c.passed for c in self.checks if c.hard or self.strict)

    def to_frame(self):
        return pd.DataFrame([r.as_row() if hasattr(r, 'as_row') else r for r in self.rows], columns=self.columns)

    def to_dict(self):
        return {
            'schema': REPORT_SCHEMA,
            'mode': self.mode,
            'passed': self.passed,
            'strict': self.strict,
            'provenance': self.provenance,
            'rows': [r if isinstance(r, dict) else asdict(r) for r in self.rows],
            'checks': [asdict(c) for c in self.checks],
            'regimes': regime_summary(self),
            'extras': self.extras,
        }

    def write(self, out_dir, frame=None):
        """ Writes <out_dir>/<csv_name> and <out_dir>/report.json; returns their paths. """
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

        csv_path = out_dir / self.csv_name
        frame = self.to_frame() if frame is None else frame
        frame.to_csv(csv_path, index=False, float_format='%.17g')

        json_path = out_dir / 'report.json'
        with open(json_path, 'w') as fp:
            json.dump(self.to_dict(), fp, indent=2, sort_keys=True, default=_jsonable)

        log.info(f'[OUTPUT] {csv_path}')
        log.info(f'[OUTPUT] {json_path}')
        return csv_path, json_path


def _jsonable(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    return repr(value)


def regime_summary(report, small=0.1, large=10.0, tol=REGIME_TOL):
    """ Buckets rows by ratio and evaluates the limiting statement of each regime.

    small (ratio < small): |lhs| <= |reference| X^(1/2) Y, the implied
        constant being the size of the main term (1 without a reference).
    transition: normalized residuals are reported.
    large (ratio > large): |lhs / X - reference| <= tol |reference| + gap,
        where gap = |rhs / X - reference| is how far the finite-ratio
        prediction itself still is from the limit.

    Returns:
        dict: one entry per non-empty bucket with its rows, flag and worst value.
    """
    buckets = {}
    for row in report.rows:
        if not isinstance(row, ReportRow) or not row.regimes:
            continue
        buckets.setdefault(regime_of(row.ratio, small, large), []).append(row)

    summary = {}
    for name, rows in buckets.items():
        entry = {'rows': len(rows), 'ratios': [r.ratio for r in rows]}
        if name == 'small':
            scales = [abs(r.reference) if math.isfinite(r.reference) else 1.0 for r in rows]
            worst = max(abs(r.lhs) / (s * r.X ** 0.5 * r.Y) for r, s in zip(rows, scales))
            entry.update(flag='PASS' if worst <= 1 else 'FAIL', worst=worst,
                         statement='|lhs| <= |limit| X^(1/2) Y')
        elif name == 'large':
            limited = [r for r in rows if math.isfinite(r.reference)]
            if limited:
                devs = [abs(r.lhs / r.X - r.reference) / abs(r.reference) for r in limited]
                gaps = [abs(r.rhs / r.X - r.reference) / abs(r.reference) for r in limited]
                worst = max(devs)
                passed = all(d <= tol + g for d, g in zip(devs, gaps))
                entry.update(flag='PASS' if passed else 'FAIL', worst=worst, limit_gap=max(gaps),
                             statement=f'|lhs/X - limit| <= {tol:g} |limit| + |rhs/X - limit|')
            else:
                entry.update(flag='INFO', statement='no limiting value recorded')
        else:
            normalized = [abs(r.normalized_residual) for r in rows]
            entry.update(flag='INFO', worst=max(normalized), statement='normalized residuals reported')
        summary[name] = entry

    return summary
