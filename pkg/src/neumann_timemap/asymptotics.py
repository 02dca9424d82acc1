"""Large-lambda limits along the ray mu = K * lam.

After rescaling u by the initial value, the positive phase collapses onto
the cubic problem u'' = -u^2 whose time integral is

    I(r) = sqrt(3) * int_r^1 dxi / sqrt(1 - xi^3),

and every limit object of the connection maps (the scaled manifold point,
the tangency point, the limits Theta_1 and Theta_2 of the landmark times)
is an explicit functional of I. Both Thetas are linear in sigma,
``Theta_i(K, sigma) = sigma * theta_i(K)``, which is what the K- and
sigma-thresholds below exploit.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .core_model import DomainError, G, ParameterError
from .quadrature import SingularitySpec, find_min, find_root, integrate, integrate_to_infinity

__all__ = [
    "AsymKey",
    "AsymptoticConstants",
    "I_of",
    "I_prime",
    "f_K",
    "landmarks",
    "theta_ratios",
    "Theta1",
    "Theta2",
    "K4_K8",
    "sigma4_sigma8",
    "hat_L",
    "fK_level_pair",
    "L_bar",
    "conjecture_scan",
    "f_K_argmin",
]

SQRT3 = math.sqrt(3.0)
_GL_X, _GL_W = np.polynomial.legendre.leggauss(48)


@dataclass(frozen=True)
class AsymKey:
    K: float
    sigma: float = 0.25

    def __post_init__(self) -> None:
        if not (self.K > 0 and math.isfinite(self.K)):
            raise ParameterError(f"K must be positive, got {self.K}")
        if not 0.0 < self.sigma < 0.5:
            raise ParameterError(f"sigma must lie in (0, 1/2), got {self.sigma}")


@dataclass(frozen=True)
class AsymptoticConstants:
    K: float
    sigma: float
    L0M: float
    l0M: float
    L0tau: float
    l0tau: float
    M0tau: float
    L1tau: float
    Theta1: float
    Theta2: float

    def to_dict(self) -> dict:
        return asdict(self)


def _I_from_gap(d):
    """I(1 - d); with xi = 1 - w^2 the integrand is analytic on [0, sqrt(d)]."""
    d = np.asarray(d, float)
    top = np.sqrt(d)
    w = 0.5 * top[..., None] * (_GL_X + 1.0)
    xi = 1.0 - w * w
    vals = 2.0 / np.sqrt(1.0 + xi + xi * xi)
    return SQRT3 * 0.5 * top * (vals @ _GL_W)


def I_of(r):
    """The cubic time integral I(r) for r in [0, 1]."""
    r_arr = np.asarray(r, float)
    if np.any((r_arr < 0) | (r_arr > 1)) or np.any(np.isnan(r_arr)):
        raise DomainError(f"I(r) needs 0 <= r <= 1, got {r}")
    out = _I_from_gap(1.0 - r_arr)
    return float(out) if np.ndim(r) == 0 else out


def I_prime(r):
    r = np.asarray(r, float)
    return -SQRT3 / np.sqrt(1.0 - r**3)


def f_K(r, K: float):
    """I(r)^6 (1 - (1 + K) r^3)."""
    r = np.asarray(r, float)
    val = I_of(r) ** 6 * (1.0 - (1.0 + K) * r**3)
    return float(val) if val.ndim == 0 else val


def _stationarity(d: float, K: float) -> float:
    """f_K'(r) up to a positive factor, written in d = 1 - r for accuracy near 1."""
    r = 1.0 - d
    one_r3 = d * (3.0 - 3.0 * d + d * d)
    return -2.0 * SQRT3 * (one_r3 - K * r**3) - _I_from_gap(d) * (1.0 + K) * r * r * math.sqrt(one_r3)


def _L0tau(K: float) -> float:
    d_hi = 1.0 - (1.0 + K) ** (-1.0 / 3.0)
    return 1.0 - find_root(lambda d: _stationarity(d, K), d_hi * 1e-12 if d_hi > 0 else 0.0, d_hi, tol=1e-300)


def _cube_root_gap_integral(M: float, L: float) -> float:
    """int_M^L du / sqrt((u^3 - M^3) / 3).

    With u = M + w^2 the factor u - M cancels exactly against du, leaving
    an integrand that is smooth on [0, sqrt(L - M)].
    """

    def f(w):
        u = M + w * w
        return 2.0 * SQRT3 / np.sqrt(u * u + u * M + M * M)

    return integrate(f, 0.0, math.sqrt(L - M), tol=1e-12)


def _cube_tail_integral(M: float, L: float) -> float:
    """int_L^inf du / sqrt((u^3 - M^3) / 3)."""
    return integrate_to_infinity(lambda u: SQRT3 / np.sqrt(u**3 - M**3), L, tol=1e-12)


def theta_ratios(K: float) -> tuple[float, float]:
    """(Theta_1, Theta_2) divided by sigma; both depend on K only."""
    AsymKey(K)
    L = _L0tau(K)
    M = _M0tau(K, L)
    scale = 1.0 / (I_of(L) * math.sqrt(K))
    j1 = _cube_root_gap_integral(M, L)
    j2 = _cube_tail_integral(M, L)
    return 2.0 * scale * j1, scale * (2.0 * j1 + j2)


def _M0tau(K: float, L: float) -> float:
    # (1 + K) L^3 - 1 cancels badly for small K; with L^3 = 1 - e it is
    # K - (1 + K) e.
    e = 1.0 - L**3
    return max((K - (1.0 + K) * e) / K, 0.0) ** (1.0 / 3.0)


def Theta1(K: float, sigma: float = 0.25) -> float:
    return sigma * theta_ratios(K)[0]


def Theta2(K: float, sigma: float = 0.25) -> float:
    return sigma * theta_ratios(K)[1]


def landmarks(key: AsymKey) -> AsymptoticConstants:
    """Every large-lambda limit for the ray mu = K lam."""
    K, sigma = key.K, key.sigma
    L0M = (1.0 + K) ** (-1.0 / 3.0)
    L = _L0tau(K)
    M = _M0tau(K, L)
    th1, th2 = theta_ratios(K)
    g1 = float(G(1.0)) / (1.0 + K)
    L1 = find_root(lambda r: float(G(r)) - g1, 0.0, 1.0)
    return AsymptoticConstants(
        K=K,
        sigma=sigma,
        L0M=L0M,
        l0M=(I_of(L0M) / (math.sqrt(2.0) * sigma)) ** 2,
        L0tau=L,
        l0tau=(I_of(L) / (math.sqrt(2.0) * sigma)) ** 2,
        M0tau=M,
        L1tau=L1,
        Theta1=sigma * th1,
        Theta2=sigma * th2,
    )


def L_bar() -> float:
    """Limit of L0tau as K -> inf: the root of 2 I'(r) / I(r) = -1 / r."""
    return find_root(lambda r: 2.0 * r * float(I_prime(r)) + I_of(r), 1e-9, 1.0 - 1e-15)


def _largest_crossing(fn, level: float, k_lo: float = 1e-4, k_hi: float = 1e5, n: int = 90):
    """Largest K with fn(K) = level, for fn decreasing to 0 at infinity."""
    ks = np.geomspace(k_lo, k_hi, n)
    vals = np.array([fn(k) - level for k in ks])
    if vals[-1] >= 0:
        raise DomainError(f"no crossing below K = {k_hi}")
    above = np.flatnonzero(vals > 0)
    if above.size == 0:
        raise DomainError(f"no crossing above K = {k_lo}")
    j = above[-1]
    return find_root(lambda k: fn(k) - level, ks[j], ks[j + 1], tol=1e-300, rtol=1e-14)


def K4_K8(sigma: float) -> tuple[float, float]:
    """Largest K with Theta_1(K) = 1 - 2 sigma, and the same for Theta_2."""
    AsymKey(1.0, sigma)
    level = (1.0 - 2.0 * sigma) / sigma
    k4 = _largest_crossing(lambda k: theta_ratios(k)[0], level)
    k8 = _largest_crossing(lambda k: theta_ratios(k)[1], level)
    return k4, k8


def sigma4_sigma8(K: float) -> tuple[float, float]:
    """sigma where Theta_i(sigma) = 1 - 2 sigma; linearity in sigma makes it explicit."""
    th1, th2 = theta_ratios(K)
    return 1.0 / (th1 + 2.0), 1.0 / (th2 + 2.0)


def hat_L(theta: float, key: AsymKey) -> float:
    """Scaled value at sigma of the start point theta * s0M, theta in (0, 1)."""
    if not 0.0 < theta < 1.0:
        raise DomainError(f"theta must lie in (0, 1), got {theta}")
    L0M = (1.0 + key.K) ** (-1.0 / 3.0)
    target = math.sqrt(theta) * I_of(L0M)
    return find_root(lambda r: I_of(r) - target, L0M, 1.0)


def fK_level_pair(K: float, rho: float) -> tuple[float, float]:
    """The two solutions of f_K(r) = rho on either side of L0tau."""
    L0M = (1.0 + K) ** (-1.0 / 3.0)
    L = _L0tau(K)
    fmin = f_K(L, K)
    if not fmin <= rho < 0.0:
        raise DomainError(f"rho must lie in [{fmin}, 0), got {rho}")
    if rho == fmin:
        return L, L
    return (
        find_root(lambda r: f_K(r, K) - rho, L0M, L),
        find_root(lambda r: f_K(r, K) - rho, L, 1.0),
    )


def f_K_argmin(K: float) -> float:
    """Direct minimisation of f_K; a cross-check for the stationarity root."""
    L0M = (1.0 + K) ** (-1.0 / 3.0)
    return find_min(lambda r: f_K(r, K), L0M, 1.0, tol=1e-13)[0]


def conjecture_scan(sigma: float = 0.25, Ks=None) -> list[dict]:
    """Compare Theta_1(K) with 2 sigma / K over a K grid (no claim is assumed)."""
    Ks = np.geomspace(1e-2, 1e3, 26) if Ks is None else Ks
    rows = []
    for k in Ks:
        t1 = Theta1(float(k), sigma)
        bound = 2.0 * sigma / float(k)
        rows.append({"K": float(k), "Theta1": t1, "bound": bound, "holds": bool(t1 > bound)})
    return rows
