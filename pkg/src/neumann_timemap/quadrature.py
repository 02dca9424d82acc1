"""Adaptive quadrature, bracketing root finding and bounded minimisation.

All time maps in the package reduce to one dimensional integrals whose
integrands have, at worst, an inverse square root singularity at an end of
the interval. :func:`integrate` removes such singularities with the
substitution ``x = a + w**2`` (or ``x = b - w**2``) and then runs a globally
adaptive Gauss-Kronrod (7/15 point) rule. :func:`integrate_many` is the
batched engine behind it: integrands are evaluated for many independent
integrals at once, which is what makes scanning time maps over grids cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import optimize

from .core_model import NumericError

__all__ = [
    "QuadratureError",
    "BracketError",
    "SingularitySpec",
    "integrate",
    "integrate_many",
    "integrate_to_infinity",
    "find_root",
    "find_min",
    "solve_bracketed",
]

DEFAULT_TOL = 1e-10
MAX_SUBDIVISIONS = 60
MAX_PANELS = 4096


class QuadratureError(NumericError):
    """Adaptive quadrature did not reach the requested tolerance."""


class BracketError(NumericError):
    """A root was requested on an interval without a sign change."""


@dataclass(frozen=True)
class SingularitySpec:
    """Marks interval ends where the integrand behaves like |x - end|^(-1/2)."""

    lower: bool = False
    upper: bool = False


# Kronrod 15 point abscissae (non-negative half) and weights; the Gauss 7
# point rule uses every other abscissa.
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
_KRONROD = np.concatenate([_WK[:-1], _WK[::-1]])
_GAUSS = np.zeros(15)
_GAUSS[1:7:2] = _WG[:3]
_GAUSS[7] = _WG[3]
_GAUSS[9:15:2] = _WG[2::-1]

_EPS = np.finfo(float).eps


def integrate_many(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    a,
    b,
    tol: float = DEFAULT_TOL,
    atol: float = 0.0,
    max_subdivisions: int = MAX_SUBDIVISIONS,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Integrate a family of functions over their own finite intervals.

    Args:
        f: Called as ``f(x, item)`` with ``x`` of shape (R, 15) and ``item``
            an integer array of shape (R,) telling which integral each row
            of nodes belongs to. Must return an array shaped like ``x``.
        a, b: Interval ends, arrays of shape (N,).
        tol: Relative tolerance on each integral.
        atol: Absolute tolerance floor.
        max_subdivisions: Deepest bisection level allowed for any panel.

    Returns:
        ``(values, errors, converged)``, each of shape (N,).
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    n = a.size
    values = np.zeros(n)
    errors = np.zeros(n)
    converged = np.ones(n, dtype=bool)
    total_half = 0.5 * np.abs(b - a)

    item = np.flatnonzero(b != a)
    lo = a[item]
    hi = b[item]
    depth = np.zeros(item.size, dtype=int)
    while item.size:
        centre = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        x = centre[:, None] + half[:, None] * _NODES[None, :]
        fx = np.asarray(f(x, item), dtype=float)
        kron = half * (fx @ _KRONROD)
        err, floor = _error_estimate(fx, half, kron)
        bad = ~np.isfinite(kron)
        if bad.any():
            converged[np.unique(item[bad])] = False
            err = np.where(bad, 0.0, err)

        estimate = values.copy()
        np.add.at(estimate, item, kron)
        threshold = np.maximum(tol * np.abs(estimate), atol)
        share = threshold[item] * np.abs(half) / np.where(total_half[item] > 0, total_half[item], 1.0)
        accept = (err <= np.maximum(share, floor)) | bad
        live = np.bincount(item, minlength=n)[item]
        exhausted = (depth >= max_subdivisions) | (live > MAX_PANELS)
        if exhausted.any():
            converged[np.unique(item[exhausted & ~accept])] = False
            accept |= exhausted

        np.add.at(values, item[accept], kron[accept])
        np.add.at(errors, item[accept], np.maximum(err, floor)[accept])

        keep = ~accept
        item_k = item[keep]
        lo_k, hi_k, mid_k = lo[keep], hi[keep], centre[keep]
        depth_k = depth[keep] + 1
        item = np.concatenate([item_k, item_k])
        lo = np.concatenate([lo_k, mid_k])
        hi = np.concatenate([mid_k, hi_k])
        depth = np.concatenate([depth_k, depth_k])
    return values, errors, converged


def _error_estimate(fx: np.ndarray, half: np.ndarray, kron: np.ndarray) -> np.ndarray:
    """QUADPACK style error estimate for each Kronrod panel."""
    raw = np.abs(kron - half * (fx @ _GAUSS))
    mean = (fx @ _KRONROD) / 2.0
    resasc = np.abs(half) * (np.abs(fx - mean[:, None]) @ _KRONROD)
    resabs = np.abs(half) * (np.abs(fx) @ _KRONROD)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = np.where(
            (resasc > 0) & (raw > 0), resasc * np.minimum(1.0, (200.0 * raw / resasc) ** 1.5), raw
        )
    return scaled, 50.0 * _EPS * resabs


def _substituted(f, a: float, b: float, spec: SingularitySpec):
    """Return pieces ``(g, w0, w1)`` whose integrals sum to the original one."""
    if spec.lower and spec.upper:
        mid = 0.5 * (a + b)
        return _substituted(f, a, mid, SingularitySpec(lower=True)) + _substituted(
            f, mid, b, SingularitySpec(upper=True)
        )
    if spec.lower:
        return [(lambda w: f(a + w * w) * 2.0 * w, 0.0, math.sqrt(b - a))]
    if spec.upper:
        return [(lambda w: f(b - w * w) * 2.0 * w, 0.0, math.sqrt(b - a))]
    return [(f, a, b)]


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    spec: SingularitySpec | None = None,
    tol: float = DEFAULT_TOL,
    atol: float = 0.0,
) -> float:
    """Integrate a vectorised function over [a, b].

    Ends flagged in ``spec`` may carry an inverse square root singularity;
    they are removed by a square root change of variables before the
    adaptive rule runs.

    Raises:
        QuadratureError: if the tolerance is not met within the subdivision
            budget, or the integrand produced non-finite values.
    """
    if b == a:
        return 0.0
    if b < a:
        flipped = SingularitySpec(lower=bool(spec and spec.upper), upper=bool(spec and spec.lower))
        return -integrate(f, b, a, flipped, tol, atol)
    total = 0.0
    for piece, w0, w1 in _substituted(f, float(a), float(b), spec or SingularitySpec()):
        val, err, ok = integrate_many(lambda x, _i, piece=piece: piece(x), [w0], [w1], tol, atol)
        if not ok[0] or not np.isfinite(val[0]):
            raise QuadratureError(
                f"no convergence on [{a}, {b}] (estimate {val[0]!r}, error {err[0]:.3g})"
            )
        total += float(val[0])
    return total


def integrate_to_infinity(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    spec: SingularitySpec | None = None,
    tol: float = DEFAULT_TOL,
    atol: float = 0.0,
) -> float:
    """Integrate over [a, inf) through the map x = a + w^2 / (1 - w)^2.

    The map already behaves like a square root substitution at ``a`` so an
    inverse square root singularity there needs no extra treatment; ``spec``
    is accepted for symmetry with :func:`integrate`.
    """
    del spec

    def mapped(w):
        one_minus = 1.0 - w
        return f(a + (w / one_minus) ** 2) * 2.0 * w / one_minus**3

    val, err, ok = integrate_many(lambda x, _i: mapped(x), [0.0], [1.0], tol, atol)
    if not ok[0] or not np.isfinite(val[0]):
        raise QuadratureError(f"no convergence on [{a}, inf) (error {err[0]:.3g})")
    return float(val[0])


def find_root(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-14,
    rtol: float = 4 * _EPS,
) -> float:
    """Brent root of ``f`` on a sign-changing bracket.

    Raises:
        BracketError: if ``f(lo)`` and ``f(hi)`` have the same strict sign.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return float(lo)
    if fhi == 0.0:
        return float(hi)
    if not (np.isfinite(flo) and np.isfinite(fhi)) or flo * fhi > 0.0:
        raise BracketError(f"no sign change on [{lo}, {hi}]: f = ({flo}, {fhi})")
    return float(optimize.brentq(f, lo, hi, xtol=tol, rtol=rtol, maxiter=300))


def find_min(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-12,
) -> tuple[float, float]:
    """Minimise a unimodal function on [lo, hi].

    Uses golden section with parabolic steps, then compares against the two
    end values so that boundary minima are reported exactly.

    Returns:
        ``(x_min, f_min)``.
    """
    res = optimize.minimize_scalar(
        f, bounds=(lo, hi), method="bounded", options={"xatol": tol, "maxiter": 500}
    )
    best_x, best_f = float(res.x), float(res.fun)
    for end in (lo, hi):
        fe = f(end)
        if fe < best_f:
            best_x, best_f = float(end), float(fe)
    return best_x, best_f


def solve_bracketed(
    func: Callable[[np.ndarray, np.ndarray], np.ndarray],
    lo,
    hi,
    f_lo,
    f_hi,
    xtol: float = 0.0,
    rtol: float = 4 * _EPS,
    maxiter: int = 200,
) -> np.ndarray:
    """Vectorised Illinois (modified false position) solver.

    Solves ``func(x, idx) = 0`` for every bracket simultaneously; ``idx``
    holds the positions of the brackets still being iterated so that
    ``func`` can gather its own per-bracket data. Each bracket must have a
    sign change; a bisection step is forced whenever false position stalls.
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    f_lo = np.array(f_lo, dtype=float)
    f_hi = np.array(f_hi, dtype=float)
    if np.any(f_lo * f_hi > 0):
        raise BracketError("solve_bracketed needs a sign change on every bracket")
    root = np.where(f_lo == 0, lo, np.where(f_hi == 0, hi, np.nan))
    active = np.isnan(root)
    side = np.zeros(lo.shape, dtype=int)
    width0 = np.abs(hi - lo)
    for it in range(maxiter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        a, b, fa, fb = lo[idx], hi[idx], f_lo[idx], f_hi[idx]
        x = (a * fb - b * fa) / (fb - fa)
        stalled = (np.abs(b - a) > 0.5 * width0[idx]) & (it % 3 == 2)
        x = np.where(~np.isfinite(x) | (x <= np.minimum(a, b)) | (x >= np.maximum(a, b)) | stalled,
                     0.5 * (a + b), x)
        fx = np.asarray(func(x, idx), dtype=float)
        width0[idx] = np.abs(b - a)
        same_as_lo = np.sign(fx) == np.sign(fa)
        # Illinois: halve the retained end value when the same end survives twice.
        new_lo = np.where(same_as_lo, x, a)
        new_hi = np.where(same_as_lo, b, x)
        new_flo = np.where(same_as_lo, fx, np.where(side[idx] == -1, 0.5 * fa, fa))
        new_fhi = np.where(same_as_lo, np.where(side[idx] == 1, 0.5 * fb, fb), fx)
        side[idx] = np.where(same_as_lo, 1, -1)
        lo[idx], hi[idx], f_lo[idx], f_hi[idx] = new_lo, new_hi, new_flo, new_fhi
        done = (fx == 0) | (np.abs(new_hi - new_lo) <= xtol + rtol * np.abs(x))
        root[idx[done]] = np.where(fx[done] == 0, x[done], 0.5 * (new_lo[done] + new_hi[done]))
        active[idx[done]] = False
    left = np.flatnonzero(active)
    root[left] = 0.5 * (lo[left] + hi[left])
    return root
