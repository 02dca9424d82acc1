"""Parameters, nonlinearity and energies of the indefinite Neumann problem.

The boundary value problem is

    -u'' = a(t) g(u)  on (0, 1),   u'(0) = u'(1) = 0,

with g(u) = u^2 (1 - u) and a piecewise constant weight that equals
``lam`` on the two outer intervals [0, sigma] and [1 - sigma, 1] and
``-mu`` on the middle interval (sigma, 1 - sigma).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "G_AT_ONE",
    "ParameterError",
    "NumericError",
    "DomainError",
    "Params",
    "PhasePoint",
    "weight",
    "g",
    "G",
    "G_poly",
    "G_from_one",
    "mean_g",
    "energy_positive",
    "energy_negative",
    "energy_pos",
    "energy_neg",
]

#: Value of the primitive G at the nontrivial equilibrium u = 1.
G_AT_ONE = 1.0 / 12.0


class ParameterError(ValueError):
    """Raised for parameters outside lam > 0, mu > 0, 0 < sigma < 1/2."""


class NumericError(RuntimeError):
    """Base class for failures of the numerical machinery."""


class DomainError(NumericError):
    """Raised when a quantity is requested outside its domain of definition."""


@dataclass(frozen=True)
class Params:
    """Weight parameters of the problem.

    Attributes:
        lam: Height of the positive part of the weight.
        mu: Depth of the negative part of the weight.
        sigma: Length of each positive outer interval, in (0, 1/2).
    """

    lam: float
    mu: float
    sigma: float = 0.25

    def __post_init__(self) -> None:
        for name in ("lam", "mu", "sigma"):
            value = getattr(self, name)
            if not isinstance(value, (int, float, np.floating, np.integer)) or not math.isfinite(value):
                raise ParameterError(f"{name} must be a finite number, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.lam <= 0.0:
            raise ParameterError(f"lam must be positive, got {self.lam}")
        if self.mu <= 0.0:
            raise ParameterError(f"mu must be positive, got {self.mu}")
        if not 0.0 < self.sigma < 0.5:
            raise ParameterError(f"sigma must lie in (0, 1/2), got {self.sigma}")

    @property
    def middle_length(self) -> float:
        """Length 1 - 2 sigma of the interval where the weight is negative."""
        return 1.0 - 2.0 * self.sigma

    def as_dict(self) -> dict[str, float]:
        return {"lam": self.lam, "mu": self.mu, "sigma": self.sigma}


@dataclass(frozen=True)
class PhasePoint:
    """State (u, v) = (u, u') with 0 <= u <= 1."""

    u: float
    v: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.u <= 1.0:
            raise ParameterError(f"u must lie in [0, 1], got {self.u}")

    def mirror(self) -> "PhasePoint":
        return PhasePoint(self.u, -self.v)


def weight(t, p: Params):
    """Piecewise constant weight evaluated at ``t`` (scalar or array).

    Breakpoints belong to the positive part, matching the closed outer
    intervals.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any((t_arr < 0.0) | (t_arr > 1.0)):
        raise DomainError("weight is only defined on [0, 1]")
    inner = (t_arr > p.sigma) & (t_arr < 1.0 - p.sigma)
    out = np.where(inner, -p.mu, p.lam)
    return float(out) if out.ndim == 0 else out


def _check_unit(u) -> None:
    # NaN slots pass through: batched callers use them as "undefined".
    arr = np.asarray(u)
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        bad = arr[(arr < 0.0) | (arr > 1.0)].ravel()
        raise ParameterError(f"argument must lie in [0, 1], got {bad[0]!r}" + (f" and {bad.size - 1} more" if bad.size > 1 else ""))


def g(u):
    """Nonlinearity u^2 (1 - u) on [0, 1]."""
    _check_unit(u)
    return u * u * (1.0 - u)


def G(u):
    """Primitive of g vanishing at zero: u^3/3 - u^4/4."""
    _check_unit(u)
    return G_poly(u)


def G_poly(u):
    """The quartic u^3/3 - u^4/4 on all of R, for states that may leave [0, 1]."""
    u2 = u * u
    return u2 * u * (1.0 / 3.0 - u / 4.0)


def G_from_one(u, u_comp=None):
    """G(1) - G(u), written in p = 1 - u so it stays accurate near u = 1.

    ``u_comp`` may carry an accurate value of 1 - u.
    """
    p = 1.0 - u if u_comp is None else u_comp
    p2 = p * p
    return p2 * (0.5 - 2.0 * p / 3.0 + p2 / 4.0)


def mean_g(a, b, a_comp=None, b_comp=None):
    """Divided difference (G(a) - G(b)) / (a - b), the mean of g over [b, a].

    Symmetric in its arguments and equal to g(a) when a == b. Two algebraic
    forms are blended: one expanded about 0 and one about 1, so the result
    keeps relative accuracy when both arguments are close to either
    equilibrium. Callers that know 1 - a and 1 - b more accurately than the
    rounded differences can pass them as ``a_comp`` and ``b_comp``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    p = 1.0 - a if a_comp is None else np.asarray(a_comp, dtype=float)
    q = 1.0 - b if b_comp is None else np.asarray(b_comp, dtype=float)
    near_zero = (a * a + a * b + b * b) / 3.0 - (a + b) * (a * a + b * b) / 4.0
    near_one = (p + q) / 2.0 - 2.0 * (p * p + p * q + q * q) / 3.0 + (p + q) * (p * p + q * q) / 4.0
    out = np.where(a + b > 1.0, near_one, near_zero)
    return float(out) if out.ndim == 0 else out


def energy_positive(u, v, lam: float):
    """First integral v^2 + 2 lam G(u) of u'' = -lam g(u)."""
    return v * v + 2.0 * lam * G(u)


def energy_negative(u, v, mu: float):
    """First integral v^2 - 2 mu G(u) of u'' = mu g(u)."""
    return v * v - 2.0 * mu * G(u)


def energy_pos(pt: PhasePoint, lam: float) -> float:
    return float(energy_positive(pt.u, pt.v, lam))


def energy_neg(pt: PhasePoint, mu: float) -> float:
    return float(energy_negative(pt.u, pt.v, mu))
