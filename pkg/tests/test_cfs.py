import math

import numpy as np
import pytest

from scslab.cfs import (C_alpha, CfsQuery, cfs_sum, cfs_sum_bruteforce, cfs_verify, jacobi, jacobi_array,
                        limit_prediction, second_differences)
from scslab.errors import DomainError


def test_jacobi_examples():
    assert jacobi(1, 1) == 1
    assert jacobi(3, 3) == 0
    assert jacobi(2, 15) == 1
    assert jacobi(2, 3) == -1
    assert jacobi(-1, 7) == -1
    with pytest.raises(DomainError):
        jacobi(3, 8)


def test_jacobi_array_matches_scalar():
    m = np.arange(-20, 41)
    for n in range(1, 42, 2):
        expected = [jacobi(int(v), n) for v in m]
        assert jacobi_array(m, n).tolist() == expected
    with pytest.raises(DomainError):
        jacobi_array([1, 2], [3, 4])


@pytest.mark.parametrize('n, expected', [(1, 1), (3, 3), (5, 3)])
def test_small_sums(n, expected):
    assert cfs_sum(CfsQuery(n, n)) == expected


@pytest.mark.parametrize('X, Y', [(37, 91), (120, 17), (64, 64), (1, 200), (199, 1)])
def test_sum_matches_bruteforce(X, Y):
    assert cfs_sum(CfsQuery(X, Y)) == cfs_sum_bruteforce(X, Y)


def test_sum_is_thread_independent():
    q = CfsQuery(3000, 1500)
    assert cfs_sum(q, threads=2) == cfs_sum(q, threads=1)


@pytest.mark.parametrize('kwargs', [dict(X=0, Y=3), dict(X=2.5, Y=3), dict(X=3, Y=3, kmax=5)])
def test_query_validation(kwargs):
    with pytest.raises(DomainError):
        CfsQuery(**kwargs)


def test_C_alpha_limits():
    assert C_alpha(0.0).value == 0
    a = 1e-3
    assert abs(C_alpha(a).value - math.sqrt(a) - math.pi / 18 * a ** 1.5) <= a ** 2.5
    a = 50.0
    assert abs(C_alpha(a).value - a) <= 0.5 / a
    with pytest.raises(DomainError):
        C_alpha(-1.0)


@pytest.mark.parametrize('alpha', [0.3, 1.0, 3.0])
def test_C_alpha_forms_agree(alpha):
    assert C_alpha(alpha).discrepancy <= 1e-6


def test_verify_row():
    row = cfs_verify(CfsQuery(101, 55))
    assert row.S == cfs_sum_bruteforce(101, 55)
    assert row.residual == pytest.approx(row.S - row.prediction)
    assert row.normalized_residual == pytest.approx(row.residual / row.yardstick)
    assert row.regime == 'transition'
    assert row.forms_agree
    assert list(row.as_row()) == ['X', 'Y', 'alpha', 'S', 'prediction', 'residual', 'normalized_residual']


def test_limit_prediction():
    assert limit_prediction(100, 4) == pytest.approx(2 / math.pi ** 2 * 100 * 2)
    assert limit_prediction(4, 100) == pytest.approx(2 / math.pi ** 2 * 100 * 2)


def test_second_differences():
    rows = second_differences([0.5, 1.0], 0.05, kmax=200)
    assert [r['alpha'] for r in rows] == [0.5, 1.0]
    assert all(math.isfinite(r['second_difference']) for r in rows)
    with pytest.raises(DomainError):
        second_differences([0.01], 0.05)


def test_jacobi_multiplicativity():
    m = np.arange(1, 201)
    for n in range(1, 200, 2):
        row = jacobi_array(m, n)
        table = np.outer(row, row)
        product = jacobi_array(np.outer(m, m), n)
        assert np.array_equal(product, table)

    odd = np.arange(1, 200, 2)
    for a in (-3, 2, 5, 12, 199):
        values = jacobi_array(a, odd)
        assert np.array_equal(jacobi_array(a, np.outer(odd, odd)), np.outer(values, values))


@pytest.mark.slow
def test_C_alpha_forms_agree_on_a_grid():
    worst = max(C_alpha(float(a)).discrepancy for a in np.geomspace(0.1, 10, 30))
    assert worst <= 1e-6
