"""Flow on the middle interval, where u'' = mu g(u).

Orbits inside the homoclinic loop v^2 = 2 mu G(u) (the zero level of the
energy v^2 - 2 mu G(u)) cross the u-axis at a turning abscissa m, where the
energy equals -2 mu G(m). The time spent between m and a point with
abscissa x on the same level is

    level_time(m, x) / sqrt(2 mu),
    level_time(m, x) = int_m^x du / sqrt(G(u) - G(m)).

``level_time`` does not depend on mu; it is evaluated after the change of
variables u = m exp(z^2), which absorbs both the inverse square root at m and
the u^(-3/2) decay that appears when m is tiny (orbits hugging the loop).
"""

from __future__ import annotations

import math

import numpy as np

from .core_model import DomainError, G, mean_g
from .quadrature import find_root, integrate_many, solve_bracketed

__all__ = [
    "NEAR_MANIFOLD",
    "manifold_v",
    "turning_abscissa",
    "turning_batch",
    "level_time",
    "half_time",
    "time_half",
    "time_Tp",
    "time_Tl",
    "x_p",
    "x_l",
    "tp_limit",
    "tl_limit",
]

#: Relative energy gap below which a point counts as lying on the loop.
NEAR_MANIFOLD = 1e-10
QUAD_TOL = 1e-13


def manifold_v(u, mu: float):
    """Upper branch sqrt(2 mu G(u)) of the homoclinic loop."""
    return np.sqrt(2.0 * mu * G(u))


def turning_batch(x, v2, mu: float, x_comp=None):
    """Turning abscissae for points (x, +-sqrt(v2)) inside the loop.

    Args:
        x: Abscissae in (0, 1].
        v2: Squared velocities.
        mu: Depth of the weight.
        x_comp: Optional accurate values of 1 - x.

    Returns:
        ``(m, gap, m_comp)`` with ``gap = x - m`` and ``m_comp = 1 - m``, all
        to full relative precision. Points on or outside the loop (relative
        energy gap below :data:`NEAR_MANIFOLD`) give NaN.
    """
    x = np.atleast_1d(np.asarray(x, float))
    v2 = np.broadcast_to(np.asarray(v2, float), x.shape).copy()
    xc = 1.0 - x if x_comp is None else np.broadcast_to(np.asarray(x_comp, float), x.shape)
    gx = G(x)
    a = v2 / (2.0 * mu)  # G(x) - G(m)
    inside = (x > 0) & (gx - a > NEAR_MANIFOLD * gx)
    m = np.full(x.shape, np.nan)
    gap = np.full(x.shape, np.nan)
    # Far from the loop m is close to x: solve gap * mean_g(x, x - gap) = a.
    near_x = inside & (a <= 0.5 * gx)
    if near_x.any():
        xs, xcs, aa = x[near_x], xc[near_x], a[near_x]

        def fgap(d, idx):
            return d * mean_g(xs[idx], xs[idx] - d, xcs[idx], xcs[idx] + d) - aa[idx]

        hi = xs.copy()
        d = solve_bracketed(fgap, np.zeros_like(xs), hi, -aa, fgap(hi, np.arange(xs.size)))
        gap[near_x] = d
        m[near_x] = xs - d
    # Close to the loop m is small: solve G(m) = G(x) - a directly.
    near_0 = inside & ~near_x
    if near_0.any():
        xs = x[near_0]
        target = gx[near_0] - a[near_0]

        def fm(mm, idx):
            return G(mm) - target[idx]

        mm = solve_bracketed(fm, np.zeros_like(xs), xs, -target, gx[near_0] - target)
        m[near_0] = mm
        gap[near_0] = xs - mm
    m_comp = xc + gap
    return m, gap, m_comp


def turning_abscissa(x: float, y: float, mu: float) -> float:
    """Abscissa where the middle-interval orbit through (x, y) meets v = 0.

    Raises:
        DomainError: if (x, y) is on or outside the homoclinic loop.
    """
    m, _gap, _mc = turning_batch(x, y * y, mu)
    if not np.isfinite(m[0]):
        raise DomainError(f"({x}, {y}) is not inside the loop for mu={mu}")
    return float(m[0])


def level_time(m, x, gap=None, m_comp=None, tol: float = QUAD_TOL):
    """Integral of 1/sqrt(G(u) - G(m)) over [m, x], vectorised.

    ``gap = x - m`` and ``m_comp = 1 - m`` may be supplied to avoid the
    rounding of those differences. NaN inputs propagate.
    """
    m = np.atleast_1d(np.asarray(m, float))
    x = np.broadcast_to(np.asarray(x, float), m.shape)
    gap = x - m if gap is None else np.broadcast_to(np.asarray(gap, float), m.shape)
    mc = 1.0 - m if m_comp is None else np.broadcast_to(np.asarray(m_comp, float), m.shape)
    out = np.full(m.shape, np.nan)
    ok = np.isfinite(m) & np.isfinite(gap) & (m > 0) & (gap >= 0)
    if not ok.any():
        return out
    mo, go, mco = m[ok], gap[ok], mc[ok]
    upper = np.sqrt(np.log1p(go / mo))

    def f(z, item):
        mi = mo[item][:, None]
        y = z * z
        d = mi * np.expm1(y)  # u - m
        u = mi + d
        ratio = np.where(y > 0, z / np.sqrt(np.expm1(y)), 1.0)
        q = mean_g(u, mi, mco[item][:, None] - d, mco[item][:, None])
        return 2.0 * u * ratio / np.sqrt(mi * q)

    vals, _err, conv = integrate_many(f, np.zeros_like(upper), upper, tol=tol)
    vals[~conv] = np.nan
    out[ok] = vals
    return out


def half_time(x: float, y: float, mu: float) -> float:
    """Time from (x, y) to the turning point (m, 0) under u'' = mu g(u)."""
    m, gap, mc = turning_batch(x, y * y, mu)
    if not np.isfinite(m[0]):
        raise DomainError(f"({x}, {y}) is not inside the loop for mu={mu}")
    return float(level_time(m, x, gap, mc)[0] / math.sqrt(2.0 * mu))


time_half = half_time


def x_p(k: float, mu: float) -> float:
    """Abscissa where the parabola v = -k u^2 meets the loop (capped at 1)."""
    return min(1.0, 4.0 * mu / (6.0 * k * k + 3.0 * mu))


def x_l(k: float, mu: float) -> float:
    """Abscissa where the line v = -k (1 - u) meets the loop."""
    return find_root(lambda x: k * k * (1.0 - x) ** 2 - 2.0 * mu * G(x), 0.0, 1.0, tol=1e-16)


def _check_k_mu(k: float, mu: float) -> None:
    if k <= 0 or mu <= 0:
        raise DomainError("need k > 0 and mu > 0")


def time_Tp(x, k: float, mu: float):
    """Time to reach the u-axis from (x, -k x^2), for 0 < x < x_p(k, mu)."""
    _check_k_mu(k, mu)
    scalar = np.ndim(x) == 0
    xa = np.atleast_1d(np.asarray(x, float))
    if np.any((xa <= 0) | (xa >= x_p(k, mu))):
        raise DomainError("time_Tp needs 0 < x < x_p")
    m, gap, mc = turning_batch(xa, (k * xa * xa) ** 2, mu)
    out = level_time(m, xa, gap, mc) / math.sqrt(2.0 * mu)
    return float(out[0]) if scalar else out


def time_Tl(x, k: float, mu: float):
    """Time to reach the u-axis from (x, -k (1 - x)), for x_l(k, mu) < x < 1."""
    _check_k_mu(k, mu)
    scalar = np.ndim(x) == 0
    xa = np.atleast_1d(np.asarray(x, float))
    if np.any((xa <= x_l(k, mu)) | (xa >= 1.0)):
        raise DomainError("time_Tl needs x_l < x < 1")
    xc = 1.0 - xa
    m, gap, mc = turning_batch(xa, (k * xc) ** 2, mu, xc)
    out = level_time(m, xa, gap, mc) / math.sqrt(2.0 * mu)
    return float(out[0]) if scalar else out


def tp_limit(k: float, mu: float) -> float:
    """Limit of time_Tp as x tends to 0."""
    return k / mu


def tl_limit(k: float, mu: float) -> float:
    """Limit of time_Tl as x tends to 1."""
    return math.atan(k / math.sqrt(mu)) / math.sqrt(mu)
