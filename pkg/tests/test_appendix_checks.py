import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from neumann_timemap.appendix_checks import (
    ExpansionCoeffs,
    certify_lemma_A1,
    certify_lemma_A2,
    discriminant_factors,
    expansion_check,
    lemma_polynomials,
    poly_Nl,
    poly_Np,
    slope_limit,
    slope_numeric,
    t1_limit_check,
    time_map_monotonicity,
)
from neumann_timemap.core_model import DomainError, Params

PARAMS = [Params(1, 1, 0.25), Params(1, 2, 0.25), Params(2, 1, 0.1)]


@pytest.mark.parametrize("certify", [certify_lemma_A1, certify_lemma_A2])
def test_certification_passes(certify):
    rep = certify(n_random=10_000, seed=0)
    assert rep.passed
    assert rep.n_samples > 10_000
    assert all(v == 0 for v in rep.violations.values())
    assert all(m is None or m < 0 for m in rep.margins.values())


def test_certification_deterministic():
    # the worst margins sit on the edge-hugging grid, so they do not depend on the seed
    a, b = certify_lemma_A1(n_random=2000, seed=1), certify_lemma_A1(n_random=2000, seed=1)
    assert a.to_dict() == b.to_dict()
    with pytest.raises(DomainError):
        certify_lemma_A2(grid_density=4)


@given(st.floats(1e-3, 1 - 1e-3), st.floats(1e-3, 1 - 1e-3))
def test_discriminant_factorisation(x, r):
    disc, factored = discriminant_factors(x, x * r)
    assert disc == pytest.approx(factored, rel=1e-9, abs=1e-14)


def test_lemma_polynomials_keys():
    assert {"f1", "f2", "f3", "f4", "delta1", "delta2"} <= set(lemma_polynomials(0.5, 0.2))


@pytest.mark.parametrize("poly", [poly_Np, poly_Nl])
def test_region_checked(poly):
    with pytest.raises(DomainError):
        poly(0.3, 0.5, 0.5)


@pytest.mark.parametrize("k, mu", [(1.0, 1.0), (3.0, 0.5), (0.2, 5.0)])
def test_time_map_monotone(k, mu):
    res = time_map_monotonicity(k, mu, n=100)
    assert res["Tp_increasing"] and res["Tl_decreasing"]


@pytest.mark.parametrize("p", PARAMS)
def test_expansion_limits(p):
    rep = expansion_check(p)
    co = rep["coefficients"]
    lim = rep["limits"]
    assert lim["u3"] == pytest.approx(co["alpha3"], rel=1e-6)
    assert lim["v3"] == pytest.approx(co["beta3"], rel=1e-6)
    assert lim["m2"] == pytest.approx(co["m2"], rel=1e-6)
    assert lim["m3"] == pytest.approx(co["m3"], rel=1e-6)
    # the uniform remainder is O(s^3), so the scaled column shrinks tenfold per decade
    unif = [r["uniform_u2"] for r in rep["rows"]]
    assert unif[2] < 0.2 * unif[1] < 0.04 * unif[0]


def test_expansion_coefficients_closed_form():
    co = ExpansionCoeffs.from_params(Params(1, 1, 0.25))
    assert (co.alpha2, co.beta2, co.m2) == pytest.approx((-1 / 32, -1 / 4, -1 / 16), rel=1e-15)


@pytest.mark.parametrize("p", PARAMS)
def test_slope_at_origin(p):
    assert slope_numeric(p, 1e-3) == pytest.approx(slope_limit(p), rel=0.02)


@pytest.mark.parametrize("p", PARAMS)
def test_expansion_route_limit(p):
    assert t1_limit_check(p)["rel_err"] < 1e-4
