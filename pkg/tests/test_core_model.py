import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from neumann_timemap.core_model import (
    G,
    DomainError,
    G_from_one,
    ParameterError,
    Params,
    PhasePoint,
    energy_neg,
    energy_pos,
    g,
    mean_g,
    weight,
)

unit = st.floats(0.0, 1.0)
positive = st.floats(1e-3, 1e3)


@pytest.mark.parametrize("s, expected", [(0.0, 0.0), (1.0, 0.0), (0.5, 0.125)])
def test_g_values(s, expected):
    assert g(s) == pytest.approx(expected, abs=1e-16)


@pytest.mark.parametrize("s, expected", [(0.0, 0.0), (1.0, 1 / 12), (0.5, 5 / 192)])
def test_G_values(s, expected):
    assert G(s) == pytest.approx(expected, rel=1e-15, abs=1e-18)


@pytest.mark.parametrize("fn", [g, G])
@pytest.mark.parametrize("bad", [-0.1, 1.5])
def test_nonlinearity_domain(fn, bad):
    with pytest.raises(ParameterError):
        fn(bad)
    with pytest.raises(ParameterError):
        fn(np.array([0.2, bad]))


def test_g_is_derivative_of_G():
    # Richardson-extrapolated central differences are exact on a quartic up to
    # rounding, which extended precision keeps well below the tolerance.
    s = np.linspace(1e-3, 1 - 1e-3, 10_000).astype(np.longdouble)
    h = np.longdouble(1e-4)

    def central(step):
        return (G(s + step) - G(s - step)) / (2 * step)

    fd = (4 * central(h / 2) - central(h)) / 3
    assert float(np.max(np.abs(fd - g(s)) / g(s))) < 1e-8


def test_G_increasing():
    s = np.linspace(0, 1, 2001)
    assert np.all(np.diff(G(s)) > 0)


@given(unit, unit)
def test_mean_g_is_divided_difference(a, b):
    if abs(a - b) > 1e-3:
        assert mean_g(a, b) == pytest.approx((G(a) - G(b)) / (a - b), rel=1e-9, abs=1e-15)


@given(unit)
def test_mean_g_diagonal(a):
    assert mean_g(a, a) == pytest.approx(g(a), rel=1e-12, abs=1e-300)


@given(unit)
def test_G_from_one(u):
    assert G_from_one(u) == pytest.approx(1 / 12 - G(u), rel=1e-9, abs=1e-16)


def test_G_from_one_near_one_keeps_precision():
    d = 1e-9
    # G(1) - G(1 - d) = d^2/2 - d^3/3 + ...: plain subtraction would lose it all.
    assert G_from_one(1 - d, d) == pytest.approx(d * d / 2, rel=1e-8)


@pytest.mark.parametrize(
    "pt, lam, expected",
    [((0, 0), 1, 0.0), ((1, 0), 6, 1.0), ((0.5, 1), 1, 1 + 5 / 96)],
)
def test_energy_pos(pt, lam, expected):
    assert energy_pos(PhasePoint(*pt), lam) == pytest.approx(expected, rel=1e-14, abs=1e-300)


@pytest.mark.parametrize("pt, mu, expected", [((0, 0), 5, 0.0), ((1, 0), 6, -1.0)])
def test_energy_neg(pt, mu, expected):
    assert energy_neg(PhasePoint(*pt), mu) == pytest.approx(expected, rel=1e-14, abs=1e-300)


@given(unit, positive)
def test_energy_neg_vanishes_on_loop(u, mu):
    v = math.sqrt(2 * mu * G(u))
    assert abs(energy_neg(PhasePoint(u, v), mu)) <= 1e-13 * max(1.0, mu)


@given(unit, st.floats(-10, 10), positive, positive)
def test_energy_difference(u, v, lam, mu):
    pt = PhasePoint(u, v)
    diff = energy_pos(pt, lam) - energy_neg(pt, mu)
    assert diff == pytest.approx(2 * (lam + mu) * G(u), rel=1e-14, abs=1e-14 * (v * v + 1))


def test_phase_point_validates():
    with pytest.raises(ParameterError):
        PhasePoint(1.2, 0.0)
    assert PhasePoint(0.3, 0.2).mirror() == PhasePoint(0.3, -0.2)


@pytest.mark.parametrize("lam, mu, sigma", [(0, 1, 0.25), (1, -1, 0.25), (1, 1, 0.5), (1, 1, 0.0)])
def test_params_rejects(lam, mu, sigma):
    with pytest.raises(ParameterError):
        Params(lam, mu, sigma)


def test_weight_values():
    p = Params(2, 3, 0.25)
    assert weight(0.0, p) == 2
    assert weight(0.5, p) == -3
    assert weight(0.25, p) == 2
    assert weight(0.75, p) == 2
    with pytest.raises(DomainError):
        weight(1.5, p)


@given(positive, positive, st.floats(0.01, 0.49))
def test_weight_mean(lam, mu, sigma):
    p = Params(lam, mu, sigma)
    t = (np.arange(200_000) + 0.5) / 200_000
    mean = float(np.mean(weight(t, p)))
    exact = lam * 2 * sigma - mu * (1 - 2 * sigma)
    assert mean == pytest.approx(exact, abs=1e-4 * (lam + mu))
    if abs(exact) > 1e-3 * (lam + mu):
        assert np.sign(exact) == np.sign(2 * sigma / (1 - 2 * sigma) - mu / lam)
