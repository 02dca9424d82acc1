import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate as sp_integrate

from neumann_timemap.quadrature import (
    BracketError,
    QuadratureError,
    SingularitySpec,
    find_min,
    find_root,
    integrate,
    integrate_many,
    integrate_to_infinity,
    solve_bracketed,
)

LOWER = SingularitySpec(lower=True)
UPPER = SingularitySpec(upper=True)
BOTH = SingularitySpec(lower=True, upper=True)


@pytest.mark.parametrize(
    "f, spec, expected",
    [
        (lambda x: 1 / np.sqrt(x), LOWER, 2.0),
        (lambda x: 1 / np.sqrt(1 - x), UPPER, 2.0),
        (lambda x: 1 / np.sqrt(x * (1 - x)), BOTH, math.pi),
    ],
)
def test_singular_endpoints(f, spec, expected):
    assert integrate(f, 0.0, 1.0, spec, tol=1e-12) == pytest.approx(expected, rel=1e-11)


@pytest.mark.parametrize(
    "f, a, expected",
    [(lambda x: x**-1.5, 1.0, 2.0), (lambda x: x**-2.0, 2.0, 0.5)],
)
def test_to_infinity(f, a, expected):
    assert integrate_to_infinity(f, a, tol=1e-12) == pytest.approx(expected, rel=1e-10)


def test_to_infinity_singular_start_two_routes():
    def f(x):
        return 1 / np.sqrt((x**3 - 1) / 3)

    whole = integrate_to_infinity(f, 1.0, tol=1e-12)
    # Independent route: singular head on [1, 10] plus a binomial-series tail.
    head = integrate(f, 1.0, 10.0, LOWER, tol=1e-13)
    # f(x) = sqrt(3) x^(-3/2) (1 - x^-3)^(-1/2) = sqrt(3) sum_k c_k x^(-3/2 - 3k)
    tail, c = 0.0, 1.0
    for k in range(12):
        tail += math.sqrt(3) * c * 10.0 ** (-0.5 - 3 * k) / (0.5 + 3 * k)
        c *= (k + 0.5) / (k + 1)
    assert whole == pytest.approx(head + tail, rel=1e-8)


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=11), st.floats(-2, 0), st.floats(0.1, 3))
def test_polynomials_exact(coeffs, a, width):
    b = a + width
    poly = np.polynomial.Polynomial(coeffs)
    exact = poly.integ()(b) - poly.integ()(a)
    got = integrate(poly, a, b, tol=1e-14)
    assert got == pytest.approx(exact, rel=1e-12, abs=1e-12 * (1 + np.sum(np.abs(coeffs))) * width**11)


@given(st.floats(0.1, 5), st.floats(0.5, 3))
def test_flags_harmless_on_smooth_integrands(k, width):
    def f(x):
        return np.exp(-k * x) * np.cos(x)

    plain = integrate(f, 0.0, width, tol=1e-13)
    for spec in (LOWER, UPPER, BOTH):
        assert integrate(f, 0.0, width, spec, tol=1e-13) == pytest.approx(plain, rel=1e-10, abs=1e-13)


def test_reversed_interval():
    # flags name the a and b ends, so the singular end b = 0 is "upper" here
    assert integrate(lambda x: 1 / np.sqrt(x), 1.0, 0.0, UPPER) == pytest.approx(-2.0, rel=1e-10)


def test_matches_scipy_on_rough_integrand():
    def f(x):
        return np.log(1.0 + x) / np.sqrt(x) * np.exp(-x)

    ours = integrate(f, 0.0, 4.0, LOWER, tol=1e-12)
    ref, _ = sp_integrate.quad(lambda x: math.log1p(x) / math.sqrt(x) * math.exp(-x), 0, 4, epsabs=1e-14, epsrel=1e-13)
    assert ours == pytest.approx(ref, rel=1e-10)


def test_integrate_many_batches():
    a = np.zeros(4)
    b = np.array([1.0, 2.0, 3.0, 4.0])
    k = np.array([1.0, 2.0, 3.0, 4.0])
    vals, errs, ok = integrate_many(lambda x, i: np.exp(-k[i][:, None] * x), a, b, tol=1e-13)
    assert ok.all()
    np.testing.assert_allclose(vals, (1 - np.exp(-k * b)) / k, rtol=1e-12)


def test_non_convergence_reported():
    with pytest.raises(QuadratureError):
        integrate(lambda x: np.sin(1 / x) / x**2, 1e-6, 1.0, tol=1e-14)


@pytest.mark.parametrize(
    "f, a, b, expected",
    [(lambda x: x * x - 2, 1, 2, math.sqrt(2)), (math.cos, 1, 2, math.pi / 2), (lambda x: x, -1, 1, 0.0)],
)
def test_find_root(f, a, b, expected):
    assert find_root(f, a, b) == pytest.approx(expected, abs=1e-14)


def test_find_root_needs_bracket():
    with pytest.raises(BracketError):
        find_root(lambda x: x * x + 1, -1, 1)


@given(st.floats(-10, 10), st.floats(0.1, 10))
def test_find_root_brackets_zero(c, slope):
    def f(t):
        return slope * (t - c) + 0.1 * (t - c) ** 3

    tol = 1e-10
    x = find_root(f, c - 7, c + 11, tol=tol)
    assert f(x - tol) <= 0 <= f(x + tol)


@pytest.mark.parametrize(
    "f, a, b, xmin",
    [(lambda x: (x - 0.3) ** 2, 0, 1, 0.3), (abs, -1, 2, 0.0), (lambda x: x, 0, 1, 0.0)],
)
def test_find_min(f, a, b, xmin):
    x, fx = find_min(f, a, b)
    assert x == pytest.approx(xmin, abs=1e-6)
    assert fx == pytest.approx(0.0, abs=1e-11)


def test_solve_bracketed_vectorised():
    c = np.linspace(0.1, 0.9, 9)

    def func(x, idx):
        return np.tan(x) - c[idx]

    lo, hi = np.zeros(9), np.ones(9)
    roots = solve_bracketed(func, lo, hi, func(lo, np.arange(9)), func(hi, np.arange(9)))
    np.testing.assert_allclose(roots, np.arctan(c), rtol=1e-14)
