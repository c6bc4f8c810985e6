import math

import numpy as np
import pytest

from scslab.eigenforms import build_eigenform
from scslab.errors import DomainError, InsufficientCoefficientsError
from scslab.kernels import SmoothingKernel
from scslab.report import ReportRow, VerificationReport, regime_summary
from scslab.scs import SCSQuery, scs_fast
from scslab.specfun import W_k
from scslab.transition import (PREFACTOR, ZETA2, TransitionGrid, c_f, c_f_envelope, c_f_required_terms,
                               c_f_tail_bound, corollary1_rhs, corollary2_rhs, main_theorem_rhs, sym2_crosscheck,
                               sym2_L1, transition_constant, transition_diagnostics)


def test_c_f_single_term(delta):
    alpha = 0.7
    sample = c_f(delta, alpha, nterms=1)
    assert sample.value == pytest.approx(PREFACTOR * alpha * W_k(12, math.pi ** 2 * alpha), rel=1e-9)
    assert sample.nterms == 1


@pytest.mark.parametrize('alpha', [0.05, 0.5, 5.0])
def test_c_f_tail_is_certified(delta, alpha):
    sample = c_f(delta, alpha)
    assert math.isfinite(sample.value)
    assert sample.tail_bound < 1e-8 * max(1.0, abs(sample.value))
    assert c_f(delta, alpha).value == sample.value


def test_c_f_tail_bound_decreases():
    bounds = [c_f_tail_bound(12, 0.1, n) for n in (10, 100, 1000)]
    assert bounds[0] > bounds[1] > bounds[2]
    assert c_f_required_terms(12, 0.01, 1e-8) >= c_f_required_terms(12, 0.1, 1e-8)


def test_c_f_needs_enough_coefficients(small_forms, delta):
    with pytest.raises(InsufficientCoefficientsError):
        c_f(small_forms[12], 1e-4)
    with pytest.raises(InsufficientCoefficientsError):
        c_f(delta, 0.5, nterms=delta.N + 1)
    with pytest.raises(DomainError):
        c_f(delta, 0.0)


def test_l_value_methods(delta):
    check = sym2_crosscheck(delta)
    assert check.positive
    assert check.difference <= 1e-2 * check.primary.value
    with pytest.raises(ValueError):
        sym2_L1(delta, 'euler-product')
    with pytest.raises(InsufficientCoefficientsError):
        sym2_L1(build_eigenform(12, 100))


@pytest.mark.slow
def test_l_value_methods_at_full_size(large_delta):
    check = sym2_crosscheck(large_delta)
    assert check.difference <= 1e-3 * check.primary.value


@pytest.mark.slow
@pytest.mark.parametrize('alpha', [0.1, 0.03, 0.01])
def test_c_f_approaches_the_constant(large_delta, alpha):
    # c_f(alpha) - C = o(alpha^(1/2)); the leading corrections oscillate in ln(alpha)
    constant = transition_constant(large_delta).value
    sample = c_f(large_delta, alpha, scale_hint=constant)
    assert abs(sample.value - constant) <= alpha ** 0.5 * constant


@pytest.mark.parametrize('alpha', [2.0, 10.0, 30.0, 100.0, 300.0])
def test_c_f_under_its_envelope(delta, alpha):
    sample = c_f(delta, alpha)
    assert abs(sample.value) <= c_f_envelope(12, alpha) * (1 + 1e-6) + sample.tail_bound


def test_c_f_envelope_beats_any_power():
    scaled = [c_f_envelope(12, a) * a ** 10 for a in (1e3, 1e4, 1e5)]
    assert scaled[0] > scaled[1] > scaled[2]
    assert c_f_envelope(12, 100.0) > c_f_envelope(12, 1000.0)
    with pytest.raises(DomainError):
        c_f_envelope(12, 0.0)


def test_c_f_at_large_alpha_is_a_fraction_of_the_constant(delta):
    # at k = 12 c_f(100) is still about -5.6% of C; only the envelope goes to 0 fast
    constant = transition_constant(delta).value
    ratio = c_f(delta, 100.0).value / constant
    assert abs(ratio) <= 0.1


def test_transition_constant(delta):
    constant = transition_constant(delta)
    assert constant.value == pytest.approx(math.gamma(12) * constant.L / (2 * ZETA2))
    assert constant.value > 0


def test_corollary1_rhs(delta):
    constant = transition_constant(delta).value
    with pytest.raises(DomainError):
        corollary1_rhs(delta, 100.0, 200.0, constant=constant)

    # X (c_f(Y^2/X) - C) is linear in X at a fixed ratio
    first = corollary1_rhs(delta, 100.0, 10.0, constant=constant)
    second = corollary1_rhs(delta, 400.0, 20.0, constant=constant, sample=c_f(delta, 1.0, scale_hint=constant))
    assert second.value == pytest.approx(4 * first.value, rel=1e-12)
    assert first.yardstick == pytest.approx(100 ** 0.5 * 10 ** ((1 + 7 / 64) / 3))


def test_point_mass_rhs_identity(delta):
    X, Y = 100.0, 10.0
    rhs = main_theorem_rhs(delta, SmoothingKernel.point_mass(X), Y)
    expected = (4 * math.pi) ** -10 * X * corollary1_rhs(delta, X, Y).value
    assert rhs.value == pytest.approx(expected, rel=1e-12)


def test_gamma_cutoff_rhs(delta):
    X, Y = 100.0, 10.0
    direct = corollary2_rhs(delta, X, Y)
    weighted = main_theorem_rhs(delta, SmoothingKernel.gamma_cutoff(X), Y)
    assert math.isfinite(direct.value)
    assert weighted.value == pytest.approx((4 * math.pi) ** -12 * direct.value, rel=1e-12)
    with pytest.raises(DomainError):
        corollary2_rhs(delta, X, 0.5)


def test_narrow_bump_rhs_approaches_point_mass(delta):
    X, Y = 100.0, math.sqrt(50.0)
    point = main_theorem_rhs(delta, SmoothingKernel.point_mass(X), Y)
    bump = main_theorem_rhs(delta, SmoothingKernel.bump(X, 0.01), Y)
    assert bump.value == pytest.approx(point.value, rel=1e-2)


def test_zero_kernel_rhs(delta):
    assert main_theorem_rhs(delta, SmoothingKernel.zero(100.0), 5.0).value == 0


def test_grid_interpolates_its_samples(delta):
    grid = TransitionGrid.fill(delta, 0.1, 10.0, per_decade=8)
    assert grid.covers(0.1, 10.0)
    assert not grid.covers(0.05, 10.0)
    np.testing.assert_allclose(grid(grid.alphas), grid.values, rtol=1e-12, atol=1e-12)

    frame = grid.to_frame()
    assert list(frame.columns) == ['alpha', 'c_f', 'tail_bound', 'nterms']
    assert len(frame) == len(grid.samples)

    diagnostics = transition_diagnostics(grid, transition_constant(delta).value, small=0.5, large=2.0)
    assert 'max_second_difference' in diagnostics
    assert diagnostics['large_alpha_envelope_ratio'] <= 1 + 1e-6


@pytest.mark.slow
def test_corollary1_limiting_regimes(large_delta):
    # Y^2/X = 0.01 and 100 at X = 1000
    constant = transition_constant(large_delta).value
    report = VerificationReport('corollary1')
    for ratio in (0.01, 100.0):
        X = 1000.0
        Y = math.sqrt(ratio * X)
        rhs = corollary1_rhs(large_delta, X, Y, constant=constant)
        lhs = scs_fast(large_delta, SCSQuery(X, Y))
        report.rows.append(ReportRow(12, X, Y, ratio, lhs, rhs.value, rhs.yardstick, -constant))

    summary = regime_summary(report)
    assert summary['small']['flag'] == 'PASS', summary['small']
    assert summary['large']['flag'] == 'PASS', summary['large']

    large = report.rows[1]
    assert large.lhs / large.X == pytest.approx(-constant, rel=0.1 + summary['large']['limit_gap'])
    assert large.rhs / large.X == pytest.approx(-constant, rel=0.1)


@pytest.mark.slow
def test_corollary2_rhs_cancels_the_main_term(large_delta):
    # Y^2/X = 0.0025: the c_f integral removes most of -L X / (2 zeta(2))
    main = transition_constant(large_delta).L / (2 * ZETA2)
    X, Y = 10000.0, 5.0
    rhs = corollary2_rhs(large_delta, X, Y)
    assert abs(rhs.value) <= 0.5 * main * X


def test_corollary2_rhs_large_ratio_limit(delta):
    # Y^2/X = 25: the c_f term is a few percent of the main term
    main = transition_constant(delta).L / (2 * ZETA2)
    X = 1000.0
    Y = math.sqrt(25 * X)
    rhs = corollary2_rhs(delta, X, Y)
    assert rhs.value / X == pytest.approx(-main, rel=0.1)
