"""Executable checks of the sign lemmas and small-s expansions.

Two families of statements are verified here:

* the monotonicity of the parabola and line time maps reduces to the sign
  of explicit polynomials in (x, m, xi); these are transcribed once and
  certified on structured plus random samples of 0 < m < x < 1,
  0 < xi < 1, with the worst margins reported;
* near s = 0 the Gamma_0 point, the turning abscissa and T_1 admit
  explicit expansions; the coefficients are compared with the computed
  quantities by two-point extrapolation in s.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .connection import connection_map, endpoint_limits
from .core_model import DomainError, Params, mean_g
from .negative_phase import time_Tl, time_Tp, turning_batch, x_l, x_p
from .positive_phase import descend, gamma0_point
from .quadrature import SingularitySpec, find_root, integrate

__all__ = [
    "poly_Np",
    "poly_Nl",
    "lemma_polynomials",
    "discriminant_factors",
    "certify_lemma_A1",
    "certify_lemma_A2",
    "CertificationReport",
    "time_map_monotonicity",
    "ExpansionCoeffs",
    "expansion_check",
    "slope_limit",
    "slope_numeric",
    "t1_from_expansion",
    "nd_coefficients",
    "t1_limit_check",
]


def _check_region(x, m, xi) -> None:
    x, m, xi = np.asarray(x), np.asarray(m), np.asarray(xi)
    if np.any(~((0 < m) & (m < x) & (x < 1))) or np.any(~((0 < xi) & (xi < 1))):
        raise DomainError("need 0 < m < x < 1 and 0 < xi < 1")


def lemma_polynomials(x, m) -> dict:
    """The auxiliary polynomials f1..f4, delta1 and delta2 of the parabola lemma."""
    x = np.asarray(x, float)
    m = np.asarray(m, float)
    return {
        "f1": 3 * m**3 - 4 * m**2 - m * x - x**2,
        "f2": 2 * m**2 - 3 * m**3 - m * x - 5 * m**2 * x + 6 * m**3 * x - x**2 + m * x**2 + x**3,
        "f3": -4 * m**2 + 3 * m**3 - m * x + 13 * m**2 * x - 12 * m**3 * x - x**2 + m * x**2 + x**3,
        "f4": -(m**2) + 3 * m**3 + 2 * m * x + 2 * x**2,
        "delta1": -4 * m**2 + 3 * m**3 - m * x + m**2 * x - x**2 + m * x**2 + x**3,
        "delta2": -4 * m**2 + 3 * m**3 - m * x + 9 * m**2 * x - x**2 + 9 * m * x**2 + 9 * x**3,
    }


def poly_Np(x, m, xi):
    """Coefficients and value of the parabola-case quadratic in xi.

    Returns:
        ``(a, b, c, N_hat)`` with ``N_hat = a xi^2 + b xi + c``.
    """
    _check_region(x, m, xi)
    x = np.asarray(x, float)
    m = np.asarray(m, float)
    xi = np.asarray(xi, float)
    a = 2 * (x - m) ** 2 * (3 * m**3 - 4 * m**2 - m * x - x**2)
    b = (x - m) * (-4 * m**2 + 3 * m**3 - m * x + 13 * m**2 * x - 12 * m**3 * x - x**2 + m * x**2 + x**3)
    c = x * (2 * m**2 - 3 * m**3 - m * x - 5 * m**2 * x + 6 * m**3 * x - x**2 + m * x**2 + x**3)
    return a, b, c, a * xi**2 + b * xi + c


def poly_Nl(x, m, xi):
    """Coefficients and value of the line-case quadratic in xi."""
    _check_region(x, m, xi)
    x = np.asarray(x, float)
    m = np.asarray(m, float)
    xi = np.asarray(xi, float)
    a = 2 * (x - m) ** 2 * (
        -6 * m + 2 * m**2 + 3 * m**3 - 6 * x + 8 * m * x - 3 * m**2 * x + 8 * x**2 - 3 * m * x**2 - 3 * x**3
    )
    b = (x - 1) * (x - m) * (
        6 * m + 16 * m**2 - 21 * m**3 + 6 * x - 8 * m * x + 3 * m**2 * x - 8 * x**2 + 3 * m * x**2 + 3 * x**3
    )
    c = (x - 1) * (
        12 * m**2 - 12 * m**3 + 6 * m * x - 20 * m**2 * x + 15 * m**3 * x + 6 * x**2 - 8 * m * x**2
        + 3 * m**2 * x**2 - 8 * x**3 + 3 * m * x**3 + 3 * x**4
    )
    return a, b, c, a * xi**2 + b * xi + c


def discriminant_factors(x, m):
    """(b^2 - 4ac, (x - m)^2 delta1 delta2) for the parabola case."""
    a, b, c, _ = poly_Np(x, m, 0.5)
    polys = lemma_polynomials(x, m)
    return b * b - 4 * a * c, (np.asarray(x) - np.asarray(m)) ** 2 * polys["delta1"] * polys["delta2"]


@dataclass
class CertificationReport:
    lemma: str
    passed: bool
    n_samples: int
    margins: dict = field(default_factory=dict)
    violations: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _samples(grid_density: int, n_random: int, seed: int):
    if grid_density < 10:
        raise DomainError("grid_density must be at least 10")
    # structured part: interior grid including points hugging every edge
    t = np.concatenate([np.geomspace(1e-6, 0.5, grid_density // 2), 1 - np.geomspace(1e-6, 0.5, grid_density // 2)[::-1]])
    t = np.unique(t)
    X, R = np.meshgrid(t, t, indexing="ij")
    x_grid, m_grid = X.ravel(), (X * R).ravel()
    rng = np.random.default_rng(seed)
    x_rand = rng.uniform(0, 1, n_random)
    m_rand = x_rand * rng.uniform(0, 1, n_random)
    x = np.concatenate([x_grid, x_rand])
    m = np.concatenate([m_grid, m_rand])
    keep = (0 < m) & (m < x) & (x < 1)
    return x[keep], m[keep], t, rng


def _worst_over_xi(poly, x, m, xis):
    worst = np.full(x.shape, -np.inf)
    for xi in xis:
        worst = np.maximum(worst, poly(x, m, xi)[3])
    return worst


def certify_lemma_A1(grid_density: int = 40, n_random: int = 10_000, seed: int = 0) -> CertificationReport:
    """Check a < 0, c < 0, (b > 0 implies discriminant < 0) and N_hat < 0."""
    x, m, t, _ = _samples(grid_density, n_random, seed)
    a, b, c, _ = poly_Np(x, m, 0.5)
    disc = b * b - 4 * a * c
    n_hat = _worst_over_xi(poly_Np, x, m, t)
    pos_b = b > 0
    margins = {
        "max_a": float(a.max()),
        "max_c": float(c.max()),
        "max_disc_where_b_pos": float(disc[pos_b].max()) if pos_b.any() else None,
        "max_N_hat": float(n_hat.max()),
    }
    violations = {
        "a": int(np.sum(a >= 0)),
        "c": int(np.sum(c >= 0)),
        "disc": int(np.sum(pos_b & (disc >= 0))),
        "N_hat": int(np.sum(n_hat >= 0)),
    }
    return CertificationReport("A1", not any(violations.values()), int(x.size), margins, violations)


def certify_lemma_A2(grid_density: int = 40, n_random: int = 10_000, seed: int = 0) -> CertificationReport:
    """Check that a, b, c and hence N_hat are all negative in the line case."""
    x, m, t, _ = _samples(grid_density, n_random, seed)
    a, b, c, _ = poly_Nl(x, m, 0.5)
    n_hat = _worst_over_xi(poly_Nl, x, m, t)
    margins = {"max_a": float(a.max()), "max_b": float(b.max()), "max_c": float(c.max()), "max_N_hat": float(n_hat.max())}
    violations = {k: int(np.sum(v >= 0)) for k, v in (("a", a), ("b", b), ("c", c), ("N_hat", n_hat))}
    return CertificationReport("A2", not any(violations.values()), int(x.size), margins, violations)


def time_map_monotonicity(k: float, mu: float, n: int = 200) -> dict:
    """Whether T_p increases on (0, x_p) and T_l decreases on (x_l, 1) on a grid."""
    xp, xl = x_p(k, mu), x_l(k, mu)
    xs_p = xp * np.linspace(0.02, 0.98, n)
    xs_l = xl + (1 - xl) * np.linspace(0.02, 0.98, n)
    tp = np.asarray(time_Tp(xs_p, k, mu), float)
    tl = np.asarray(time_Tl(xs_l, k, mu), float)
    return {
        "k": k,
        "mu": mu,
        "Tp_increasing": bool(np.all(np.diff(tp) > 0)),
        "Tl_decreasing": bool(np.all(np.diff(tl) < 0)),
    }


# -- small-s expansions ------------------------------------------------------


@dataclass(frozen=True)
class ExpansionCoeffs:
    """Coefficients of u_s(sigma), v_s(sigma) and m(u_s(sigma)) in powers of s."""

    alpha2: float
    alpha3: float
    beta2: float
    beta3: float
    m2: float
    m3: float

    @classmethod
    def from_params(cls, p: Params) -> "ExpansionCoeffs":
        lam, mu, sig = p.lam, p.mu, p.sigma
        ls2 = lam * sig * sig
        alpha2 = -ls2 / 2
        alpha3 = ls2 / 12 * (6 + ls2)
        beta2 = -lam * sig
        beta3 = lam * sig / 3 * (3 + ls2)
        m2 = -lam * (lam + mu) * sig * sig / (2 * mu)
        m3 = lam**2 * sig**2 / (12 * mu**2) * (6 * mu - 3 * lam**2 * sig**2 - 2 * lam * mu * sig**2) + alpha3
        return cls(alpha2, alpha3, beta2, beta3, m2, m3)


def _phase_quantities(p: Params, s: float):
    """(u - s, v, m - s) at t = sigma, each to full relative precision."""
    pt = gamma0_point(s, p.lam, p.sigma)
    _m, gap, _mc = turning_batch(pt.u, pt.v**2, p.mu, 1.0 - pt.u)
    return -pt.drop, pt.v, -pt.drop - float(gap[0])


def _extrapolate(s_vals, r_vals) -> float:
    """Linear-in-s extrapolation to s = 0 from the two smallest s."""
    (s1, r1), (s2, r2) = sorted(zip(s_vals, r_vals))[:2]
    return (r1 * s2 - r2 * s1) / (s2 - s1)


def expansion_check(p: Params, s_values=(1e-2, 1e-3, 1e-4), n_t: int = 41) -> dict:
    """Scaled remainders of the expansions and their extrapolated limits.

    For each s the report holds (u_s(sigma) - s - alpha2 s^2) / s^3,
    (v_s(sigma) - beta2 s^2) / s^3, (m - s) / s^2,
    (m - s - m2 s^2) / s^3 and the uniform second-order remainder
    max_t |u_s(t) - s + lam t^2 s^2 / 2| / s^2. The ``limit`` entries are
    two-point extrapolations and should match the closed forms.
    """
    co = ExpansionCoeffs.from_params(p)
    rows = []
    ts = np.linspace(0.0, p.sigma, n_t)
    for s in s_values:
        du, v, dm = _phase_quantities(p, s)
        _u, _v, drop_t = descend(np.full(ts.size, s), ts, p.lam)
        unif = float(np.max(np.abs(-drop_t + p.lam * ts**2 * s * s / 2))) / s**2
        rows.append({
            "s": s,
            "u3": (du - co.alpha2 * s * s) / s**3,
            "v3": (v - co.beta2 * s * s) / s**3,
            "m2": dm / s**2,
            "m3": (dm - co.m2 * s * s) / s**3,
            "uniform_u2": unif,
        })
    limits = {key: _extrapolate([r["s"] for r in rows], [r[key] for r in rows]) for key in ("u3", "v3", "m2", "m3")}
    return {"params": p.as_dict(), "coefficients": asdict(co), "rows": rows, "limits": limits}


def nd_coefficients(p: Params, xi):
    """(n4, n5, d4, d5): N(s, xi) = n4 s^4 + n5 s^5 + ..., D(s) = d4 s^4 + d5 s^5 + ...

    N and D are the numerator and denominator of the radicand of the
    xi-form of T_1.
    """
    co = ExpansionCoeffs.from_params(p)
    xi = np.asarray(xi, float)
    mu = p.mu
    slope = co.alpha2 - co.m2
    lin = slope * xi + co.m2
    n4 = 2.0 * mu * slope * xi
    n5 = (
        2.0 * co.beta2 * co.beta3
        + 2.0 * mu * (lin * lin - lin + (co.alpha3 - co.m3) * xi + co.m3)
        - 2.0 * mu * (co.alpha2**2 - co.alpha2 + co.alpha3)
    )
    return n4, n5, slope * slope, 2.0 * slope * (co.alpha3 - co.m3)


def t1_from_expansion(p: Params, s: float) -> float:
    """T_1(s) with the radicand N / D truncated after its s^5 terms.

    Where the truncated numerator is negative (xi of order s) the orbit
    would not reach the axis, so the integral starts at its root.
    """
    _, _, d4, d5 = nd_coefficients(p, 0.0)
    den = d4 + d5 * s

    def num(xi):
        n4, n5, _, _ = nd_coefficients(p, xi)
        return n4 + n5 * s

    lo = 0.0
    if num(0.0) < 0.0:
        lo = find_root(lambda x: float(num(x)), 0.0, 1.0)

    def integrand(xi):
        return np.sqrt(den / np.maximum(num(xi), 1e-300))

    return 2.0 * integrate(integrand, lo, 1.0, SingularitySpec(lower=True), tol=1e-12)


def slope_limit(p: Params) -> float:
    """Limit of T_1'(s) as s -> 0+: 4 lam^2 (lam + mu) sigma^3 / (3 mu^2)."""
    return 4.0 * p.lam**2 * (p.lam + p.mu) * p.sigma**3 / (3.0 * p.mu**2)


def slope_numeric(p: Params, s: float = 1e-3, h: float | None = None) -> float:
    """Central difference of T_1 at s from the connection time maps."""
    h = 0.1 * s if h is None else h
    cm = connection_map(p)
    t_plus = cm.times(s + h)[0]
    t_minus = cm.times(s - h)[0]
    return (t_plus - t_minus) / (2.0 * h)


def t1_limit_check(p: Params, s: float = 1e-4) -> dict:
    """T_1 near 0 from the expansion route against the closed-form limit L0."""
    l0, _ = endpoint_limits(p)
    val = t1_from_expansion(p, s)
    return {"s": s, "T1_expansion": val, "L0": l0, "rel_err": abs(val / l0 - 1.0)}

