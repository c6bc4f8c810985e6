import json
import math

import pandas as pd
import pytest

from scslab.report import KernelRow, ReportRow, VerificationReport, regime_summary


def _row(X, Y, lhs, rhs, reference=math.nan):
    return ReportRow(12, X, Y, Y * Y / X, lhs, rhs, X ** 0.5 * Y ** (1 / 3), reference)


def test_row_residuals():
    row = _row(100.0, 10.0, 5.0, 3.0)
    assert row.residual == 2.0
    assert row.normalized_residual == pytest.approx(2.0 / (10.0 * 10 ** (1 / 3)))
    assert list(row.as_row()) == ['k', 'X', 'Y', 'ratio', 'lhs', 'rhs', 'residual', 'yardstick']

    kernel = KernelRow(12, 100.0, 10.0, 1.0, 1.0, 1.0, 1.0, kernel='bump-0.01')
    assert list(kernel.as_row())[0] == 'kernel'


def test_passed_depends_on_strict():
    report = VerificationReport('corollary1')
    report.add_check('exact', True)
    report.add_check('diagnostic', False, hard=False)
    assert report.passed
    report.strict = True
    assert not report.passed


def test_empty_regime_summary():
    assert regime_summary(VerificationReport('corollary1')) == {}


def test_regime_summary():
    report = VerificationReport('corollary1')
    report.rows = [
        _row(1000.0, 5.0, 10.0, 0.0),                       # small: |lhs| <= X^(1/2) Y
        _row(1000.0, 30.0, 1.0, 0.0),                       # transition
        _row(100.0, 50.0, -150.0, -100.0, reference=-1.0),  # large: lhs / X far from limit and prediction
        KernelRow(12, 100.0, 50.0, 25.0, 1.0, 1.0, 1.0, kernel='bump-0.01'),
    ]
    summary = regime_summary(report)
    assert summary['small']['flag'] == 'PASS'
    assert summary['transition']['flag'] == 'INFO'
    assert summary['large']['flag'] == 'FAIL'
    assert summary['large']['rows'] == 1
    assert summary['large']['worst'] == pytest.approx(0.5)
    assert summary['large']['limit_gap'] == pytest.approx(0.0)


def test_large_regime_allows_the_finite_ratio_gap():
    report = VerificationReport('corollary1')
    # the prediction sits 30% below the limit and lhs follows it
    report.rows = [_row(100.0, 50.0, -131.0, -130.0, reference=-1.0)]
    entry = regime_summary(report)['large']
    assert entry['worst'] == pytest.approx(0.31)
    assert entry['limit_gap'] == pytest.approx(0.3)
    assert entry['flag'] == 'PASS'

    report.rows = [_row(100.0, 50.0, -131.0, -100.0, reference=-1.0)]
    assert regime_summary(report)['large']['flag'] == 'FAIL'


def test_small_regime_scales_with_the_limit():
    report = VerificationReport('corollary1')
    # X^(1/2) Y = 500; lhs = 40000 is within 100 X^(1/2) Y
    report.rows = [_row(10000.0, 5.0, 40000.0, 0.0, reference=-100.0)]
    entry = regime_summary(report)['small']
    assert entry['worst'] == pytest.approx(0.8)
    assert entry['flag'] == 'PASS'

    report.rows = [_row(10000.0, 5.0, 40000.0, 0.0)]
    assert regime_summary(report)['small']['flag'] == 'FAIL'


def test_write(tmp_path):
    report = VerificationReport('corollary1', provenance={'config_hash': 'abc'})
    report.rows = [_row(100.0, 10.0, 5.0, 3.0)]
    report.add_check('exact', True)
    csv_path, json_path = report.write(tmp_path / 'out')

    frame = pd.read_csv(csv_path)
    assert list(frame.columns) == ['k', 'X', 'Y', 'ratio', 'lhs', 'rhs', 'residual', 'yardstick']
    assert frame['residual'][0] == 2.0

    data = json.loads(json_path.read_text())
    assert data['schema'] == 'scslab-report-1'
    assert data['passed'] is True
    assert data['provenance']['config_hash'] == 'abc'
    assert data['checks'][0]['name'] == 'exact'
    assert data['rows'][0]['normalized_residual'] == pytest.approx(report.rows[0].normalized_residual)
