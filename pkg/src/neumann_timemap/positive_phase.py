"""Flow on the outer intervals, where u'' = -lam g(u).

Starting from (s, 0) at t = 0 the orbit slides down its level set of the
energy v^2 + 2 lam G(u). The time to descend from s to u is

    t(u) = (2 lam)^(-1/2) * int_u^s dx / sqrt(G(s) - G(x)).

Writing G(s) - G(x) = (s - x) * mean_g(s, x) and substituting
x = s - c^2 sinh(z)^2 with c = sqrt(2 (1 - s)) turns this into the integral
of a smooth, bounded function of z, even when s is close to 1 where the
orbit creeps away from the saddle. Everything in this module is built on
that representation:

* ``i_hat(s)`` and ``time_T0`` measure the full descent to u = 0,
* ``lambda_star`` / ``s_star`` locate the fold of the descent time,
* ``gamma0_*`` invert the descent time at t = sigma, giving the curve of
  states reached at the end of the first positive interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ._grids import clustered_grid
from .core_model import DomainError, ParameterError, Params, PhasePoint, mean_g
from .quadrature import BracketError, find_min, find_root, integrate_many

__all__ = [
    "Gamma0Point",
    "PositivePhaseConstants",
    "compute_constants",
    "gamma1_point",
    "PositivePhase",
    "i_hat",
    "time_T0",
    "s_star",
    "lambda_star",
    "branch_points",
    "descend",
    "gamma0_point",
    "positive_phase",
]

QUAD_TOL = 1e-13


@dataclass(frozen=True)
class Gamma0Point:
    """State (u, v) reached at t = sigma from (s, 0).

    ``drop`` is s - u, kept separately because it is known to full relative
    precision even when u is close to s.
    """

    s: float
    u: float
    v: float
    drop: float

    @property
    def phase(self) -> PhasePoint:
        return PhasePoint(self.u, self.v)


def _scale(s):
    return np.sqrt(2.0 * (1.0 - s))


def _integrand(z, s, c):
    w = c * np.sinh(z)
    d = w * w
    # c^2 / 2 is exactly 1 - s, so 1 - (s - d) is formed without cancellation.
    return 2.0 * c * np.cosh(z) / np.sqrt(mean_g(s, s - d, 0.5 * c * c, 0.5 * c * c + d))


def _descent_integrals(s, c, z0, z1, tol: float = QUAD_TOL) -> np.ndarray:
    """Unscaled descent integrals over [z0, z1] for arrays of levels s."""

    def f(x, item):
        return _integrand(x, s[item][:, None], c[item][:, None])

    vals, _err, ok = integrate_many(f, z0, z1, tol=tol)
    vals[~ok] = np.nan
    return vals


def _full_depth(s, c):
    return np.arcsinh(np.sqrt(s) / c)


def _check_levels(s) -> np.ndarray:
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any((s <= 0.0) | (s >= 1.0)):
        raise DomainError("levels must lie strictly inside (0, 1)")
    return s


def i_hat(s):
    """Scale-free descent integral int_0^1 dxi / sqrt((1-xi^3)/3 - s (1-xi^4)/4).

    Accepts a scalar or an array of levels in (0, 1).
    """
    scalar = np.ndim(s) == 0
    s_arr = _check_levels(s)
    c = _scale(s_arr)
    out = np.sqrt(s_arr) * _descent_integrals(s_arr, c, np.zeros_like(s_arr), _full_depth(s_arr, c))
    return float(out[0]) if scalar else out


def time_T0(s, lam: float):
    """Time for the orbit started at (s, 0) to reach u = 0."""
    if lam <= 0:
        raise ParameterError("lam must be positive")
    scalar = np.ndim(s) == 0
    s_arr = _check_levels(s)
    out = i_hat(s_arr) / np.sqrt(2.0 * lam * s_arr)
    return float(out[0]) if scalar else out


@lru_cache(maxsize=1)
def _fold() -> tuple[float, float]:
    """Minimiser and minimum of i_hat(s)/sqrt(s); independent of lam, sigma."""
    x, fx = find_min(lambda s: i_hat(s) / math.sqrt(s), 0.05, 0.95, tol=1e-11)
    return x, fx


def s_star() -> float:
    """Level at which the descent time, scaled by sqrt(lam), is smallest."""
    return _fold()[0]


def lambda_star(sigma: float) -> float:
    """Smallest lam for which some orbit of the first interval reaches u = 0."""
    if not 0.0 < sigma < 0.5:
        raise ParameterError("sigma must lie in (0, 1/2)")
    return _fold()[1] ** 2 / (2.0 * sigma * sigma)


def branch_points(lam: float, sigma: float) -> tuple[float, float] | None:
    """Levels s0 < s1 whose descent to 0 takes exactly sigma.

    Returns None when lam < lambda_star(sigma); both values coincide with
    s_star() at the critical lam.
    """
    lam_c = lambda_star(sigma)
    if lam < lam_c * (1.0 - 1e-12):
        return None
    if lam <= lam_c * (1.0 + 1e-12):
        return s_star(), s_star()
    target = sigma * math.sqrt(2.0 * lam)

    def excess(s: float) -> float:
        return i_hat(s) / math.sqrt(s) - target

    try:
        s0 = find_root(excess, 1e-300 ** 0.5, s_star(), tol=1e-17)
        s1 = find_root(excess, s_star(), 1.0 - 2.0**-52, tol=1e-17)
    except BracketError as exc:  # pragma: no cover - only for absurdly large lam
        raise DomainError(f"branch points not bracketed for lam={lam}") from exc
    return s0, s1


@dataclass(frozen=True)
class PositivePhaseConstants:
    s_star: float
    lambda_star: float
    s0: float | None = None
    s1: float | None = None


def compute_constants(sigma: float, lam: float | None = None) -> PositivePhaseConstants:
    """s_star, lambda_star(sigma) and, when lam >= lambda_star, the branch points."""
    lam_c = lambda_star(sigma)
    branch = branch_points(lam, sigma) if lam is not None else None
    s0, s1 = branch if branch is not None else (None, None)
    return PositivePhaseConstants(s_star(), lam_c, s0, s1)


def descend(s, t, lam: float, tol: float = QUAD_TOL):
    """State after time t on the orbit from (s, 0) under u'' = -lam g(u).

    Args:
        s: Levels in (0, 1), scalar or array.
        t: Elapsed time(s), broadcast against ``s``.
        lam: Weight height.

    Returns:
        ``(u, v, drop)`` arrays; entries whose orbit reaches u = 0 before t
        are NaN.
    """
    s_arr, t_arr = np.broadcast_arrays(np.atleast_1d(np.asarray(s, float)), np.asarray(t, float))
    s_arr = _check_levels(s_arr).astype(float)
    target = t_arr * math.sqrt(2.0 * lam)
    c = _scale(s_arr)
    z_hi = _full_depth(s_arr, c)
    k_hi = _descent_integrals(s_arr, c, np.zeros_like(s_arr), z_hi, tol)
    ok = k_hi >= target
    z_lo = np.zeros_like(s_arr)
    k_lo = np.zeros_like(s_arr)

    # Safeguarded Newton on z; the descent integral is increasing in z and
    # its derivative is the integrand itself.
    z = np.where(ok, z_hi * np.minimum(target / np.where(ok, k_hi, 1.0), 1.0), 0.0)
    k_z = np.where(ok, _descent_integrals(s_arr, c, np.zeros_like(z), z, tol), 0.0)
    active = ok & (target > 0)
    for _ in range(60):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        zi, ki, tgt = z[idx], k_z[idx], target[idx]
        resid = ki - tgt
        above = resid > 0
        z_hi[idx] = np.where(above, zi, z_hi[idx])
        k_hi[idx] = np.where(above, ki, k_hi[idx])
        z_lo[idx] = np.where(above, z_lo[idx], zi)
        k_lo[idx] = np.where(above, k_lo[idx], ki)
        slope = _integrand(zi, s_arr[idx], c[idx])
        step = zi - resid / slope
        inside = (step > z_lo[idx]) & (step < z_hi[idx]) & np.isfinite(step)
        step = np.where(inside, step, 0.5 * (z_lo[idx] + z_hi[idx]))
        # Integrate from whichever known point is closest to the new iterate.
        base_z = np.where(np.abs(step - zi) <= np.abs(step - z_lo[idx]), zi, z_lo[idx])
        base_k = np.where(base_z == zi, ki, k_lo[idx])
        new_k = base_k + _descent_integrals(s_arr[idx], c[idx], base_z, step, tol)
        converged = (np.abs(step - zi) <= 4e-16 * np.maximum(step, 1e-300)) | (
            np.abs(new_k - tgt) <= 2e-16 * tgt
        )
        z[idx], k_z[idx] = step, new_k
        active[idx[converged]] = False

    w = c * np.sinh(z)
    # At the fold the orbit just touches u = 0; rounding may overshoot it.
    drop = np.minimum(w * w, s_arr)
    u = s_arr - drop
    v = -np.sqrt(2.0 * lam * drop * mean_g(s_arr, u, 1.0 - s_arr, 1.0 - s_arr + drop))
    bad = ~ok
    u[bad] = v[bad] = drop[bad] = np.nan
    return u, v, drop


def descent_time(s: float, u: float, lam: float) -> float:
    """Time taken to descend from (s, 0) to the point of the orbit at u."""
    if not 0.0 <= u <= s < 1.0:
        raise DomainError("need 0 <= u <= s < 1")
    s_arr = np.array([s], float)
    c = _scale(s_arr)
    z = np.arcsinh(np.sqrt(s - u) / c)
    return float(_descent_integrals(s_arr, c, np.zeros(1), z)[0] / math.sqrt(2.0 * lam))


def gamma0_point(s: float, lam: float | Params, sigma: float | None = None) -> Gamma0Point:
    """Point of the curve Gamma_0 reached at t = sigma from (s, 0).

    Accepts either ``(s, lam, sigma)`` or ``(s, params)``.

    Raises:
        DomainError: if the orbit reaches u = 0 before sigma.
    """
    if isinstance(lam, Params):
        lam, sigma = lam.lam, lam.sigma
    if not 0.0 <= s <= 1.0:
        raise DomainError(f"s must lie in [0, 1], got {s}")
    if s == 0.0:
        return Gamma0Point(0.0, 0.0, 0.0, 0.0)
    if s == 1.0:
        return Gamma0Point(1.0, 1.0, 0.0, 0.0)
    u, v, drop = descend(s, sigma, lam)
    if not np.isfinite(u[0]):
        raise DomainError(f"s={s} is outside the admissible set for lam={lam}, sigma={sigma}")
    return Gamma0Point(float(s), float(u[0]), float(v[0]), float(drop[0]))


def gamma1_point(s: float, p: Params) -> PhasePoint:
    """Mirror image (u, -v) of the Gamma_0 point; the curve entering the last interval."""
    return gamma0_point(s, p).phase.mirror()


@dataclass
class PositivePhase:
    """Cached description of the first positive interval for fixed (lam, sigma)."""

    lam: float
    sigma: float
    branch: tuple[float, float] | None = field(init=False)
    _grid: tuple[np.ndarray, ...] | None = field(init=False, default=None, repr=False)

    def __post_init__(self) -> None:
        if self.lam <= 0 or not 0 < self.sigma < 0.5:
            raise ParameterError("need lam > 0 and 0 < sigma < 1/2")
        self.branch = branch_points(self.lam, self.sigma)

    @property
    def critical(self) -> bool:
        """True when lam >= lambda_star(sigma)."""
        return self.branch is not None

    def intervals(self) -> list[tuple[float, float]]:
        """Admissible s-intervals; their inner ends map to u(sigma) = 0."""
        if self.branch is None:
            return [(0.0, 1.0)]
        s0, s1 = self.branch
        return [(0.0, s0), (s1, 1.0)]

    def points(self, s) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Vectorised Gamma_0 evaluation returning ``(u, v, drop)``."""
        s = np.atleast_1d(np.asarray(s, float))
        u = np.empty_like(s)
        v = np.empty_like(s)
        drop = np.empty_like(s)
        inner = (s > 0) & (s < 1)
        u[~inner] = np.where(s[~inner] >= 1.0, 1.0, 0.0)
        v[~inner] = 0.0
        drop[~inner] = 0.0
        if inner.any():
            u[inner], v[inner], drop[inner] = descend(s[inner], self.sigma, self.lam)
        return u, v, drop

    def point(self, s: float) -> Gamma0Point:
        return _cached_point(float(s), self.lam, self.sigma)

    def grid(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Dense sample ``(s, u, v, drop)`` of Gamma_0 over the admissible set."""
        if self._grid is None:
            pieces = [clustered_grid(lo, hi, 200, 70) for lo, hi in self.intervals()]
            s = np.concatenate(pieces)
            u, v, drop = self.points(s)
            keep = np.isfinite(u)
            self._grid = (s[keep], u[keep], v[keep], drop[keep])
        return self._grid


@lru_cache(maxsize=65536)
def _cached_point(s: float, lam: float, sigma: float) -> Gamma0Point:
    return gamma0_point(s, lam, sigma)


@lru_cache(maxsize=64)
def positive_phase(lam: float, sigma: float) -> PositivePhase:
    """Shared :class:`PositivePhase` instance for (lam, sigma)."""
    return PositivePhase(float(lam), float(sigma))
