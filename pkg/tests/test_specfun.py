import math

import numpy as np
import pytest
from scipy import integrate, special

from scslab.errors import ContourDivergenceError, DomainError
from scslab.specfun import (ContourSpec, W_k, W_k_batch, W_k_residue_series, contour_quadrature, filon_fourier,
                            ln_gamma, oscillatory_tail, regularized_upper_gamma, upper_incomplete_gamma,
                            wk_mellin_bound, wk_quadrature, zeta_real)


def test_ln_gamma():
    assert abs(ln_gamma(1)) <= 1e-15
    assert ln_gamma(0.5).real == pytest.approx(0.5 * math.log(math.pi), rel=1e-13)
    assert ln_gamma(5).real == pytest.approx(math.log(24), rel=1e-13)
    with pytest.raises(DomainError):
        ln_gamma(-2)


@pytest.mark.parametrize('s, expected', [
    (2, math.pi ** 2 / 6),
    (3, 1.2020569031595942),
    (4, math.pi ** 4 / 90),
    (1.5, 2.612375348685488),
])
def test_zeta(s, expected):
    assert zeta_real(s) == pytest.approx(expected, abs=1e-12)


def test_zeta_domain():
    with pytest.raises(DomainError):
        zeta_real(1.0)


@pytest.mark.parametrize('s', [0.5, 2.5, 11.0])
@pytest.mark.parametrize('x', [0.1, 1.0, 5.0, 30.0])
def test_incomplete_gamma(s, x):
    expected = special.gammaincc(s, x) * math.gamma(s)
    assert upper_incomplete_gamma(s, x) == pytest.approx(expected, rel=1e-10)
    assert regularized_upper_gamma(s, x) == pytest.approx(special.gammaincc(s, x), rel=1e-14)


def test_incomplete_gamma_closed_forms():
    assert upper_incomplete_gamma(1, 3.5) == pytest.approx(math.exp(-3.5), rel=1e-10)
    assert upper_incomplete_gamma(2, 1) == pytest.approx(2 / math.e, rel=1e-10)


def test_contour_quadrature_inverse_mellin_of_gamma():
    result = contour_quadrature(lambda s: np.exp(special.loggamma(s)), ContourSpec(sigma=2.0))
    assert result.value.real == pytest.approx(math.exp(-1), abs=1e-10)
    assert abs(result.value.imag) <= 1e-10


def test_contour_divergence():
    with pytest.raises(ContourDivergenceError):
        contour_quadrature(lambda s: np.ones_like(s), ContourSpec(tmax=5.0))


def test_contour_spec_validation():
    with pytest.raises(DomainError):
        ContourSpec(step=0.0)
    with pytest.raises(DomainError):
        ContourSpec(tmax=-1.0)
    with pytest.raises(DomainError):
        W_k(12, 1.0, ContourSpec(sigma=1.0))
    with pytest.raises(DomainError):
        W_k(12, 0.0)


@pytest.mark.parametrize('x', [0.1, 1.0, 10.0])
def test_wk_independent_of_sigma(x):
    values = [W_k(12, x, ContourSpec(sigma=s)) for s in (1.1, 1.5, 2.5)]
    assert max(values) - min(values) <= 1e-8 * abs(values[1])


@pytest.mark.parametrize('x', [0.1, 1.0, 10.0])
def test_wk_is_real(x):
    raw = wk_quadrature(12, x).value
    assert abs(raw.imag) <= 1e-10 * abs(raw.real)


@pytest.mark.parametrize('k', [12, 26])
def test_wk_batch_matches_scalar(k):
    xs = np.array([0.05, 0.5, 3.0])
    expected = np.array([W_k(k, x) for x in xs])
    np.testing.assert_allclose(W_k_batch(k, xs), expected, rtol=1e-9)


@pytest.mark.parametrize('x', [0.1, 1.0, 5.0])
def test_residue_series_matches_quadrature(x):
    residue = W_k_residue_series(12, x)
    assert residue.value == pytest.approx(W_k(12, x), rel=1e-6)


def test_mellin_bound():
    for A in (2.75, 5.75):
        M = math.exp(wk_mellin_bound(12, A))
        for x in (0.5, 2.0, 10.0):
            assert abs(W_k(12, x)) <= M * x ** -A
    with pytest.raises(DomainError):
        wk_mellin_bound(12, 0.5)


def test_filon_fourier_polynomial_times_cosine():
    # int_0^1 x^2 e^(3ix) dx is integrated exactly for quadratic amplitudes
    h, n = 1 / 40, 41
    x = h * np.arange(n)
    value = filon_fourier(x ** 2, 0.0, h, 3.0)
    re = integrate.quad(lambda t: t * t * math.cos(3 * t), 0, 1)[0]
    im = integrate.quad(lambda t: t * t * math.sin(3 * t), 0, 1)[0]
    assert value.real == pytest.approx(re, abs=1e-12)
    assert value.imag == pytest.approx(im, abs=1e-12)


def test_filon_fourier_needs_odd_samples():
    with pytest.raises(DomainError):
        filon_fourier(np.ones(4), 0.0, 0.1, 1.0)


@pytest.mark.parametrize('a', [0.05, 1.0, 10.0, 39.0, 45.0, 200.0])
def test_oscillatory_tail_methods_agree(a):
    fresnel = oscillatory_tail(a, 'fresnel')
    filon = oscillatory_tail(a, 'filon')
    assert abs(fresnel - filon) <= 1e-8 * abs(fresnel)


def test_oscillatory_tail_against_quad():
    a = 2.0
    re = integrate.quad(lambda t: t ** -2.5, a, np.inf, weight='cos', wvar=1.0, epsabs=1e-13)[0]
    im = integrate.quad(lambda t: t ** -2.5, a, np.inf, weight='sin', wvar=1.0, epsabs=1e-13)[0]
    value = oscillatory_tail(a)
    assert value.real == pytest.approx(re, rel=1e-7)
    assert value.imag == pytest.approx(im, rel=1e-7)


def test_oscillatory_tail_vectorized_and_domain():
    values = oscillatory_tail(np.array([0.5, 50.0]))
    assert values.shape == (2,)
    with pytest.raises(DomainError):
        oscillatory_tail(0.0)
    with pytest.raises(ValueError):
        oscillatory_tail(1.0, 'simpson')


def test_incomplete_gamma_at_zero_and_monotone():
    assert upper_incomplete_gamma(2.5, 0.0) == pytest.approx(math.gamma(2.5))
    values = [upper_incomplete_gamma(3.0, x) for x in (0.5, 1.0, 4.0, 10.0)]
    assert all(b < a for a, b in zip(values, values[1:]))
    with pytest.raises(DomainError):
        upper_incomplete_gamma(-1.0, 1.0)
