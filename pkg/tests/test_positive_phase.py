import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from neumann_timemap.core_model import G, DomainError, ParameterError, Params, energy_positive
from neumann_timemap.positive_phase import (
    branch_points,
    compute_constants,
    descend,
    gamma0_point,
    gamma1_point,
    i_hat,
    lambda_star,
    positive_phase,
    s_star,
    time_T0,
)

SIGMA = 0.25

# sqrt(3) * B(1/3, 1/2) / 3 and the s = 1/2 integral, both from mpmath at 30 digits.
I_HAT_ZERO = 2.42865064788758159770376140292
I_HAT_HALF = 3.23179622190897030221738850799
LAMBDA_STAR = 164.6096914124254


def _ivp_point(s, lam, sigma):
    sol = solve_ivp(
        lambda t, y: [y[1], -lam * y[0] ** 2 * (1 - y[0])],
        [0, sigma], [s, 0.0], method="DOP853", rtol=1e-13, atol=1e-15,
    )
    return sol.y[0, -1], sol.y[1, -1]


def test_i_hat_oracles():
    mp.mp.dps = 30
    beta = mp.sqrt(3) * mp.beta(mp.mpf(1) / 3, mp.mpf(1) / 2) / 3
    assert float(beta) == pytest.approx(I_HAT_ZERO, rel=1e-15)
    assert i_hat(1e-12) == pytest.approx(I_HAT_ZERO, rel=1e-11)
    assert i_hat(0.5) == pytest.approx(I_HAT_HALF, rel=1e-12)


def test_i_hat_increasing_and_divergent():
    s = np.linspace(0.01, 0.999, 200)
    assert np.all(np.diff(i_hat(s)) > 0)
    assert i_hat(0.9) > i_hat(0.5)
    assert i_hat(1 - 1e-12) > 3 * i_hat(0.5)


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.2, 1.3])
def test_i_hat_domain(bad):
    with pytest.raises((DomainError, ParameterError)):
        i_hat(bad)


@given(st.floats(1e-6, 1 - 1e-6), st.floats(1e-2, 1e4))
def test_time_T0_scaling(s, lam):
    assert time_T0(s, 4 * lam) == pytest.approx(time_T0(s, lam) / 2, rel=1e-13)


def test_time_T0_divergence_and_fold():
    assert time_T0(1e-4, 1.0) > 10
    assert time_T0(s_star(), lambda_star(SIGMA)) == pytest.approx(SIGMA, rel=1e-12)


@pytest.mark.parametrize("factor", [0.5, 1.0, 3.0])
def test_T0_single_minimum(factor):
    s = np.linspace(0.005, 0.995, 200)
    t = time_T0(s, factor * LAMBDA_STAR)
    d = np.sign(np.diff(t))
    assert np.count_nonzero(d[:-1] != d[1:]) == 1


def test_constants():
    c = compute_constants(SIGMA)
    assert c.lambda_star == pytest.approx(LAMBDA_STAR, rel=1e-12)
    assert c.s0 is None and c.s1 is None
    assert compute_constants(SIGMA / 2).lambda_star == pytest.approx(4 * c.lambda_star, rel=1e-13)
    # s_star does not know about lam
    for lam in (0.5, 1.0, 2.0):
        assert compute_constants(SIGMA, lam).s_star == pytest.approx(c.s_star, abs=1e-8)
    at = compute_constants(SIGMA, c.lambda_star)
    assert at.s0 == pytest.approx(c.s_star, abs=1e-6) and at.s1 == pytest.approx(c.s_star, abs=1e-6)
    above = compute_constants(SIGMA, 2 * c.lambda_star)
    assert 0 < above.s0 < above.s_star < above.s1 < 1
    for s in (above.s0, above.s1):
        assert time_T0(s, 2 * c.lambda_star) == pytest.approx(SIGMA, rel=1e-10)


@pytest.mark.parametrize("lam", [2.0, 60.0, 400.0])
@pytest.mark.parametrize("s", [1e-3, 0.1, 0.3, 0.9, 0.999, 1 - 1e-7])
def test_gamma0_matches_ivp(lam, s):
    branch = branch_points(lam, SIGMA)
    if branch and branch[0] <= s <= branch[1]:
        pytest.skip("blocked level")
    pt = gamma0_point(s, Params(lam, 1.0, SIGMA))
    u, v = _ivp_point(s, lam, SIGMA)
    assert pt.u == pytest.approx(u, rel=1e-10, abs=1e-14)
    assert pt.v == pytest.approx(v, rel=1e-8, abs=1e-13)


@given(st.floats(1e-6, 1 - 1e-9), st.floats(0.1, 100.0))
def test_gamma0_conserves_energy(s, lam):
    pt = gamma0_point(s, lam, SIGMA)
    assert energy_positive(pt.u, pt.v, lam) == pytest.approx(2 * lam * G(s), rel=1e-9)
    assert pt.v <= 0


def test_gamma0_blocked_interval():
    lam = 2 * LAMBDA_STAR
    s0, s1 = branch_points(lam, SIGMA)
    with pytest.raises(DomainError):
        gamma0_point(0.5 * (s0 + s1), lam, SIGMA)


def _extrapolate(a, b):
    # two-point linear extrapolation in s with s_b = s_a / 10
    return b + (b - a) / 9


@pytest.mark.parametrize("lam", [1.0, 5.0])
def test_small_s_slope(lam):
    vals = []
    for s in (1e-3, 1e-4):
        pt = gamma0_point(s, lam, SIGMA)
        vals.append(pt.v / pt.u**2)
    assert _extrapolate(*vals) == pytest.approx(-lam * SIGMA, rel=1e-4)


@pytest.mark.parametrize("lam", [1.0, 5.0])
def test_near_one_slope(lam):
    limit = -math.sqrt(lam) * math.tanh(math.sqrt(lam) * SIGMA)
    vals = []
    for d in (1e-3, 1e-4):
        pt = gamma0_point(1 - d, lam, SIGMA)
        vals.append(pt.v / (d + pt.drop))
    assert _extrapolate(*vals) == pytest.approx(limit, rel=1e-4)


@pytest.mark.parametrize("lam", [1.0, 5.0, 300.0])
def test_parabola_and_line_bounds(lam):
    for s in (1e-4, 5e-4, 1e-3):
        pt = gamma0_point(s, lam, SIGMA)
        assert 0.95 < pt.v / (-lam * SIGMA * pt.u**2) < 1.05
    for d in (1e-4, 5e-4, 1e-3):
        pt = gamma0_point(1 - d, lam, SIGMA)
        assert 0.95 < pt.v / (-math.sqrt(lam) * math.tanh(math.sqrt(lam) * SIGMA) * (d + pt.drop)) < 1.05


def test_gamma1_mirror():
    p = Params(3.0, 1.0, SIGMA)
    a, b = gamma0_point(0.3, p), gamma1_point(0.3, p)
    assert (b.u, b.v) == (a.u, -a.v)
    for s in np.linspace(0.01, 0.99, 25):
        assert gamma1_point(float(s), p).v > 0


def test_gamma0_monotone_below_fold():
    pp = positive_phase(50.0, SIGMA)
    u, _, _ = pp.points(np.linspace(0, 1, 402)[1:-1])
    assert np.all(np.diff(u) > 0)


def test_gamma0_injective_above_fold():
    # On (0, s0) u_s(sigma) rises and falls back to 0 at s0, so injectivity
    # shows in v there; on (s1, 1) u itself is monotone.
    pp = positive_phase(2 * LAMBDA_STAR, SIGMA)
    (a0, b0), (a1, b1) = pp.intervals()
    _, v, _ = pp.points(np.linspace(a0, b0, 202)[1:-1])
    assert np.all(np.diff(v) < 0)
    u, _, _ = pp.points(np.linspace(a1, b1, 202)[1:-1])
    assert np.all(np.diff(u) > 0)


def test_descend_batch_consistency():
    s = np.array([0.2, 0.5, 0.8])
    u, v, drop = descend(s, SIGMA, 3.0)
    for k in range(3):
        pt = gamma0_point(float(s[k]), 3.0, SIGMA)
        assert (u[k], v[k], drop[k]) == pytest.approx((pt.u, pt.v, pt.drop), rel=1e-14)
