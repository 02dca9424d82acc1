"""Connection times across the middle interval.

A state on Gamma_0 (the curve reached at t = sigma from the left boundary)
enters the middle interval on the energy level

    h(s) = v^2 - 2 mu G(u),   (u, v) = Gamma_0(s).

When h(s) < 0 the middle-interval orbit turns at m(s) and climbs back along
v > 0. It meets the mirror curve Gamma_1 = {(u, -v)} exactly at the points
of Gamma_0's reflection that share its level, that is at every xi with
h(xi) = h(s). Ordering those crossings by abscissa gives the time maps

    T_i(s) = [level_time(m, u_s) + level_time(m, u_{xi_i})] / sqrt(2 mu),

and a solution of the boundary value problem is a root of
T_i(s) = 1 - 2 sigma, its reflection ending at u(1) = xi_i.

The construction here is generic: the graph of h is cut into monotone
pieces, every level set is resolved piece by piece, and the time maps are
continuous on the segments delimited by the critical levels of h. Named
landmarks (asymptotes s0M, s1M, tangency points s0tau, s1tau, loop points
s0omega, s1omega) are read off that structure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np

from ._grids import clustered_grid
from .core_model import DomainError, G, G_from_one, Params
from .negative_phase import level_time, turning_batch
from .positive_phase import PositivePhase, lambda_star, positive_phase
from .quadrature import find_min, find_root, solve_bracketed

__all__ = [
    "Regime",
    "Piece",
    "Landmarks",
    "ConnectionLimits",
    "ConnectionMap",
    "connection_map",
    "energy_on_gamma0",
    "time_functions",
    "time_sym",
    "time_max",
    "endpoint_limits",
    "mu_tilde",
    "ConnectionStructure",
    "h_mu",
    "classify",
    "level_crossings",
    "connect_times",
    "limits",
    "t_sym",
    "t_max",
]


#: Largest |T_i - target| accepted at a refined root; larger values mean the
#: bracket straddled a jump (for instance at s1tau) rather than a crossing.
ROOT_ACCEPT = 1e-6


class Regime(str, Enum):
    """Shape of the energy profile h along Gamma_0."""

    TWO_ASYMPTOTES = "TwoAsymptotes"
    TANGENT = "Tangent"
    BOUNDED_PLAIN = "BoundedPlain"
    BOUNDED_LOOP = "BoundedWithLoop"


def _levels(u, v, u_comp, mu: float):
    """Energy h and its excess e = h + mu/6 over the bottom level."""
    v2 = v * v
    return v2 - 2.0 * mu * G(u), v2 + 2.0 * mu * G_from_one(u, u_comp)


def _level_diff(h1, e1, h2, e2):
    """h1 - h2 computed from whichever representation is better conditioned."""
    use_e = np.maximum(np.abs(e1), np.abs(e2)) < np.maximum(np.abs(h1), np.abs(h2))
    return np.where(use_e, e1 - e2, h1 - h2)


@dataclass(frozen=True)
class Piece:
    """Closed s-interval on which h is strictly monotone."""

    lo: float
    hi: float
    h_lo: float
    h_hi: float
    e_lo: float
    e_hi: float

    @property
    def increasing(self) -> bool:
        return self.h_hi > self.h_lo

    def contains(self, h, e):
        """Mask of levels lying strictly inside the range of h on the piece."""
        d_lo = _level_diff(h, e, self.h_lo, self.e_lo)
        d_hi = _level_diff(h, e, self.h_hi, self.e_hi)
        return d_lo * d_hi < 0


@dataclass(frozen=True)
class Landmarks:
    """Distinguished points of Gamma_0 for fixed parameters (None if absent)."""

    s0M: float | None = None
    s1M: float | None = None
    s0tau: float | None = None
    s1tau: float | None = None
    s0omega: float | None = None
    s1omega: float | None = None


@dataclass(frozen=True)
class ConnectionLimits:
    """Limit and landmark values of the time maps.

    ``ell*`` belong to the two-asymptote regime, ``kappa*`` to the bounded
    regime with a loop. ``kappa2`` is taken on the tangency level (the value
    of T_3 at s0tau, which equals T_1 and T_2 just before s1tau);
    ``kappa2_omega`` is the companion value on the loop level.
    """

    L0: float
    L1: float
    ell0_12: float | None = None
    ell0_3: float | None = None
    ell1_12: float | None = None
    ell1_3: float | None = None
    kappa0: float | None = None
    kappa1: float | None = None
    kappa2: float | None = None
    kappa3: float | None = None
    kappa4: float | None = None
    kappa2_omega: float | None = None


def endpoint_limits(p: Params) -> tuple[float, float]:
    """Limits of T_1 as s tends to 0 and to 1."""
    root_lam = math.sqrt(p.lam)
    root_mu = math.sqrt(p.mu)
    l0 = 2.0 * p.lam * p.sigma / p.mu
    l1 = 2.0 / root_mu * math.atan(root_lam * math.tanh(root_lam * p.sigma) / root_mu)
    return l0, l1


@dataclass
class ConnectionMap:
    """Time maps T_i for one parameter set.

    Build through :func:`connection_map` to share the cached instance.
    """

    p: Params
    pp: PositivePhase = field(init=False, repr=False)
    pieces: list[Piece] = field(init=False)
    intervals: list[tuple[float, float]] = field(init=False)
    extrema: list[tuple[float, str]] = field(init=False)
    segments: list[tuple[float, float]] = field(init=False)
    regime: Regime = field(init=False)
    landmarks: Landmarks = field(init=False)
    minimal_config: bool = field(init=False)

    def __post_init__(self) -> None:
        self.pp = positive_phase(self.p.lam, self.p.sigma)
        self._build()

    # -- point evaluations -------------------------------------------------

    def level(self, s: float) -> tuple[float, float]:
        """Exact (h, e) at a single s."""
        if s <= 0.0:
            return 0.0, self.p.mu / 6.0
        if s >= 1.0:
            return -self.p.mu / 6.0, 0.0
        pt = self.pp.point(s)
        h, e = _levels(pt.u, pt.v, 1.0 - pt.s + pt.drop, self.p.mu)
        return float(h), float(e)

    def h(self, s: float) -> float:
        return self.level(s)[0]

    def levels_batch(self, s):
        s = np.atleast_1d(np.asarray(s, float))
        u, v, drop = self.pp.points(s)
        uc = 1.0 - s + drop
        h, e = _levels(u, v, uc, self.p.mu)
        return h, e, u, v, uc

    # -- structure -------------------------------------------------------

    def _build(self) -> None:
        mu = self.p.mu
        s_g, u_g, v_g, d_g = self.pp.grid()
        h_g, e_g = _levels(u_g, v_g, 1.0 - s_g + d_g, mu)
        self._grid_levels = (s_g, h_g, e_g)
        self._sample_cache: dict = {}

        intervals: list[tuple[float, float]] = []
        extrema: list[tuple[float, str]] = []
        pieces: list[Piece] = []
        for lo, hi in self.pp.intervals():
            inside = (s_g > lo) & (s_g < hi)
            s = np.concatenate([[lo], s_g[inside], [hi]])
            hh = np.concatenate([[self._end_level(lo)[0]], h_g[inside], [self._end_level(hi)[0]]])
            ee = np.concatenate([[self._end_level(lo)[1]], e_g[inside], [self._end_level(hi)[1]]])
            neg = hh < 0
            # The end values at s = 0 and at the admissible-set ends are >= 0, at s = 1 < 0.
            k = 0
            while k < s.size:
                if not neg[k]:
                    k += 1
                    continue
                j = k
                while j + 1 < s.size and neg[j + 1]:
                    j += 1
                left = s[k] if k == 0 else self._refine_zero(s[k - 1], s[k])
                right = s[j] if j == s.size - 1 else self._refine_zero(s[j], s[j + 1])
                if k == 0 and s[0] > 0:
                    left = s[0]
                intervals.append((left, right))
                rs, rh, re = s[k : j + 1], hh[k : j + 1], ee[k : j + 1]
                if rs.size < 100:
                    # A run much narrower than its interval: the shared grid is too coarse there.
                    rs, rh, re = self._resample_run(left, right)
                run_ext = self._run_extrema(rs, rh, re, left, right)
                extrema.extend(run_ext)
                pieces.extend(self._run_pieces(left, right, [x for x, _ in run_ext]))
                k = j + 1
        self.intervals = intervals
        self.extrema = extrema
        self.pieces = pieces
        self.segments = self._segment_bounds()
        self._classify()

    def _end_level(self, s: float) -> tuple[float, float]:
        if s <= 0.0 or s >= 1.0:
            return self.level(s)
        # Inner ends of the admissible set map to u(sigma) = 0.
        h = 2.0 * self.p.lam * G(s)
        return h, h + self.p.mu / 6.0

    def _refine_zero(self, a: float, b: float) -> float:
        return find_root(self.h, a, b, tol=1e-300)

    def _resample_run(self, left: float, right: float):
        inner = clustered_grid(left, right, 200, 70)
        h, e = self.levels_batch(inner)[:2]
        ends = [self._boundary_level(x, i, 2) for i, x in enumerate((left, right))]
        s = np.concatenate([[left], inner, [right]])
        hh = np.concatenate([[ends[0][0]], h, [ends[1][0]]])
        ee = np.concatenate([[ends[0][1]], e, [ends[1][1]]])
        return s, hh, ee

    def _run_extrema(self, s, hh, ee, left, right) -> list[tuple[float, str]]:
        """Refined interior extrema of h over one run of negative values."""
        if s.size < 3:
            return []
        d = _level_diff(hh[1:], ee[1:], hh[:-1], ee[:-1])
        out = []
        for k in range(1, s.size - 1):
            if d[k - 1] < 0 < d[k]:
                kind = "min"
            elif d[k - 1] > 0 > d[k]:
                kind = "max"
            else:
                continue
            a, b = max(s[k - 1], left), min(s[k + 1], right)
            sign = 1.0 if kind == "min" else -1.0
            x, _ = find_min(lambda t: sign * self.h(t), a, b, tol=1e-12 * (b - a) + 1e-300)
            out.append((x, kind))
        return out

    def _run_pieces(self, left: float, right: float, cuts: list[float]) -> list[Piece]:
        bounds = [left, *cuts, right]
        levels = [self._boundary_level(x, i, len(bounds)) for i, x in enumerate(bounds)]
        return [
            Piece(bounds[i], bounds[i + 1], levels[i][0], levels[i + 1][0], levels[i][1], levels[i + 1][1])
            for i in range(len(bounds) - 1)
        ]

    def _boundary_level(self, x: float, i: int, n: int) -> tuple[float, float]:
        if (i == 0 or i == n - 1) and 0.0 < x < 1.0:
            return 0.0, self.p.mu / 6.0  # zero of h
        return self.level(x)

    def _segment_bounds(self) -> list[tuple[float, float]]:
        crit = [(x, self.level(x)) for x, _ in self.extrema]
        segments = []
        for lo, hi in self.intervals:
            cuts = {lo, hi}
            cuts.update(x for x, _ in crit if lo < x < hi)
            for x0, (hc, ec) in crit:
                for piece in self.pieces:
                    if piece.lo >= lo and piece.hi <= hi and piece.contains(hc, ec):
                        cuts.add(float(self._solve_on_piece(piece, np.array([hc]), np.array([ec]))[0]))
            b = sorted(cuts)
            segments.extend((b[i], b[i + 1]) for i in range(len(b) - 1) if b[i + 1] > b[i])
        return segments

    def _classify(self) -> None:
        mins = [x for x, k in self.extrema if k == "min"]
        maxs = [x for x, k in self.extrema if k == "max"]
        if len(self.intervals) >= 2:
            self.regime = Regime.TWO_ASYMPTOTES
            first, last = self.intervals[0], self.intervals[-1]
            left_min = [x for x in mins if first[0] < x < first[1]]
            s0tau = left_min[0] if left_min else None
            s1tau = None
            if s0tau is not None:
                s1tau = self._first_crossing(s0tau, last)
            self.landmarks = Landmarks(s0M=first[1], s1M=last[0], s0tau=s0tau, s1tau=s1tau)
            n_first = sum(1 for x, _ in self.extrema if first[0] < x < first[1])
            n_last = sum(1 for x, _ in self.extrema if last[0] < x < last[1])
            self.minimal_config = len(self.intervals) == 2 and n_first == 1 and n_last == 0 and s1tau is not None
            return
        hmax = max((self.h(x) for x in maxs), default=-math.inf)
        if maxs and abs(hmax) <= 1e-10 * self.p.mu / 6.0:
            self.regime = Regime.TANGENT
        elif maxs:
            self.regime = Regime.BOUNDED_LOOP
        else:
            self.regime = Regime.BOUNDED_PLAIN
        if self.regime is Regime.BOUNDED_LOOP and mins and maxs and mins[0] < maxs[0]:
            s0tau, s1omega = mins[0], maxs[0]
            s0omega = self._first_crossing(s1omega, (0.0, s0tau))
            s1tau = self._first_crossing(s0tau, (s1omega, 1.0))
            self.landmarks = Landmarks(s0tau=s0tau, s1tau=s1tau, s0omega=s0omega, s1omega=s1omega)
            self.minimal_config = len(self.extrema) == 2
        else:
            self.landmarks = Landmarks(s0tau=mins[0] if mins else None, s1omega=maxs[0] if maxs else None)
            self.minimal_config = not self.extrema
        if self.regime is Regime.TANGENT:
            self.landmarks = Landmarks(s0M=maxs[0], s1M=maxs[0])

    def _first_crossing(self, s_level: float, window: tuple[float, float]) -> float | None:
        hc, ec = self.level(s_level)
        for piece in self.pieces:
            if piece.lo >= window[0] and piece.hi <= window[1] and piece.contains(hc, ec):
                return float(self._solve_on_piece(piece, np.array([hc]), np.array([ec]))[0])
        return None

    def _solve_on_piece(self, piece: Piece, h_t: np.ndarray, e_t: np.ndarray) -> np.ndarray:
        """Abscissae xi in the piece with h(xi) equal to each target level."""

        def func(x, idx):
            h, e, *_ = self.levels_batch(x)
            return _level_diff(h, e, h_t[idx], e_t[idx])

        # Start from the pair of cached samples that straddles each level.
        s_k, h_k, e_k = self._samples(piece)
        d = _level_diff(h_k[None, :], e_k[None, :], h_t[:, None], e_t[:, None])
        change = d[:, :-1] * d[:, 1:] <= 0
        j = np.argmax(change, axis=1)
        rows = np.arange(h_t.size)
        return solve_bracketed(func, s_k[j], s_k[j + 1], d[rows, j], d[rows, j + 1])

    def _samples(self, piece: Piece):
        """Grid samples of (s, h, e) on a piece, ends included."""
        key = (piece.lo, piece.hi)
        if key not in self._sample_cache:
            s_g, h_g, e_g = self._grid_levels
            inside = (s_g > piece.lo) & (s_g < piece.hi)
            self._sample_cache[key] = (
                np.concatenate([[piece.lo], s_g[inside], [piece.hi]]),
                np.concatenate([[piece.h_lo], h_g[inside], [piece.h_hi]]),
                np.concatenate([[piece.e_lo], e_g[inside], [piece.e_hi]]),
            )
        return self._sample_cache[key]

    # -- time maps -------------------------------------------------------

    def times_batch(self, s) -> tuple[np.ndarray, np.ndarray]:
        """Time maps at many points.

        Returns:
            ``(T, xi)`` of shape (N, P + 1): ``T[:, i]`` is T_{i+1} and
            ``xi[:, i]`` the level crossing it ends on. Unused slots, and
            points too close to the loop to resolve, are NaN.
        """
        s = np.atleast_1d(np.asarray(s, float))
        mu = self.p.mu
        n, npieces = s.size, len(self.pieces)
        h, e, u, v, uc = self.levels_batch(s)
        X = np.full((n, npieces + 1), np.nan)
        V2 = np.full_like(X, np.nan)
        XC = np.full_like(X, np.nan)
        XI = np.full_like(X, np.nan)
        X[:, 0], V2[:, 0], XC[:, 0], XI[:, 0] = u, v * v, uc, s
        neg = h < 0
        for j, piece in enumerate(self.pieces):
            own = (s >= piece.lo) & (s <= piece.hi)
            mask = neg & ~own & piece.contains(h, e)
            if not mask.any():
                continue
            xi = self._solve_on_piece(piece, h[mask], e[mask])
            uu, vv, dd = self.pp.points(xi)
            X[mask, j + 1], V2[mask, j + 1] = uu, vv * vv
            XC[mask, j + 1], XI[mask, j + 1] = 1.0 - xi + dd, xi
        flat = np.isfinite(X.ravel()) & np.repeat(neg, npieces + 1)
        phi = np.full(X.size, np.nan)
        if flat.any():
            m, gap, mc = turning_batch(X.ravel()[flat], V2.ravel()[flat], mu, XC.ravel()[flat])
            phi[flat] = level_time(m, X.ravel()[flat], gap, mc)
        phi = phi.reshape(X.shape)
        order = np.argsort(np.where(np.isfinite(X), X, np.inf), axis=1, kind="stable")
        phi_sorted = np.take_along_axis(phi, order, axis=1)
        xi_sorted = np.take_along_axis(XI, order, axis=1)
        xi_sorted[~np.isfinite(phi_sorted)] = np.nan
        T = (phi[:, :1] + phi_sorted) / math.sqrt(2.0 * mu)
        return T, xi_sorted

    def times(self, s: float) -> list[float]:
        """[T_1(s), ..., T_n(s)] at a single point (empty outside the domain)."""
        T, _ = self.times_batch([s])
        return [float(t) for t in T[0] if np.isfinite(t)]

    def sym_batch(self, s) -> np.ndarray:
        """Symmetric time 2 level_time(m, u_s) / sqrt(2 mu)."""
        h, e, u, v, uc = self.levels_batch(s)
        m, gap, mc = turning_batch(u, v * v, self.p.mu, uc)
        return 2.0 * level_time(m, u, gap, mc) / math.sqrt(2.0 * self.p.mu)

    def _phi(self, s: float, other: float | None = None) -> float:
        """level_time on the level of s, from its turning point to u_other."""
        pt = self.pp.point(s)
        m, gap, mc = turning_batch(pt.u, pt.v**2, self.p.mu, 1.0 - pt.s + pt.drop)
        if other is None:
            return float(level_time(m, pt.u, gap, mc)[0])
        q = self.pp.point(other)
        return float(level_time(m, q.u, q.u - m, mc)[0])

    def limits(self) -> ConnectionLimits:
        """Endpoint limits plus the landmark values of the time maps."""
        l0, l1 = endpoint_limits(self.p)
        lm = self.landmarks
        scale = 1.0 / math.sqrt(2.0 * self.p.mu)
        if self.regime is Regime.TWO_ASYMPTOTES and lm.s0tau is not None and lm.s1tau is not None:
            a, b = self._phi(lm.s0tau), self._phi(lm.s1tau)
            return ConnectionLimits(
                l0,
                l1,
                ell0_12=2 * a * scale,
                ell0_3=(a + self._phi(lm.s0tau, lm.s1tau)) * scale,
                ell1_12=(b + self._phi(lm.s1tau, lm.s0tau)) * scale,
                ell1_3=2 * b * scale,
            )
        if self.regime is Regime.BOUNDED_LOOP and None not in (lm.s0omega, lm.s1tau):
            a, b = self._phi(lm.s0tau), self._phi(lm.s1tau)
            wa, wb = self._phi(lm.s0omega), self._phi(lm.s1omega)
            return ConnectionLimits(
                l0,
                l1,
                kappa0=2 * wa * scale,
                kappa1=2 * b * scale,
                kappa2=(a + self._phi(lm.s0tau, lm.s1tau)) * scale,
                kappa3=2 * a * scale,
                kappa4=2 * wb * scale,
                kappa2_omega=(wa + self._phi(lm.s0omega, lm.s1omega)) * scale,
            )
        return ConnectionLimits(l0, l1)

    def scan_grid(self, n_uniform: int = 200, n_geometric: int = 50) -> list[np.ndarray]:
        """Sample points for every segment, refined toward the segment ends."""
        return [clustered_grid(lo, hi, n_uniform, n_geometric) for lo, hi in self.segments]

    def solve(
        self,
        target: float | None = None,
        n_uniform: int = 200,
        n_geometric: int = 50,
        rtol: float = 4 * np.finfo(float).eps,
    ):
        """All roots of T_i(s) = target (default 1 - 2 sigma).

        Returns:
            List of ``(s, i, xi)`` with 1-based index i and terminal level xi,
            sorted by s.
        """
        target = self.p.middle_length if target is None else target
        brackets = []
        for grid in self.scan_grid(n_uniform, n_geometric):
            if grid.size < 2:
                continue
            T, _ = self.times_batch(grid)
            # The crossing count is constant on a segment; rows that lost a
            # crossing to rounding would shift the column meaning.
            count = np.sum(np.isfinite(T), axis=1)
            width = int(np.argmax(np.bincount(count))) if count.size else 0
            T[count != width] = np.nan
            F = np.where(np.isfinite(T), T - target, np.inf)
            for col in range(width):
                f = F[:, col]
                for k in np.flatnonzero(np.sign(f[:-1]) * np.sign(f[1:]) < 0):
                    if np.isfinite(f[k]) and np.isfinite(f[k + 1]):
                        brackets.append((grid[k], grid[k + 1], col, f[k], f[k + 1]))
                for k in np.flatnonzero(f == 0):
                    brackets.append((grid[k], grid[k], col, 0.0, 0.0))
        if not brackets:
            return []
        lo = np.array([b[0] for b in brackets])
        hi = np.array([b[1] for b in brackets])
        cols = np.array([b[2] for b in brackets])

        def func(x, idx):
            T, _ = self.times_batch(x)
            val = T[np.arange(x.size), cols[idx]] - target
            return np.where(np.isfinite(val), val, np.inf)

        roots = solve_bracketed(func, lo, hi, [b[3] for b in brackets], [b[4] for b in brackets], rtol=rtol)
        T, XI = self.times_batch(roots)
        resid = np.abs(T[np.arange(roots.size), cols] - target)
        out = [
            (float(r), int(c) + 1, float(XI[k, c]))
            for k, (r, c) in enumerate(zip(roots, cols))
            if resid[k] <= ROOT_ACCEPT * max(1.0, target)
        ]
        return sorted(out)


@lru_cache(maxsize=256)
def _cached_map(lam: float, mu: float, sigma: float) -> ConnectionMap:
    return ConnectionMap(Params(lam, mu, sigma))


def connection_map(p: Params) -> ConnectionMap:
    """Cached :class:`ConnectionMap` for the parameters."""
    return _cached_map(p.lam, p.mu, p.sigma)


def energy_on_gamma0(s, p: Params):
    """h_mu along Gamma_0: 2 lam G(s) - 2 (lam + mu) G(u_s(sigma))."""
    h, *_ = connection_map(p).levels_batch(s)
    return float(h[0]) if np.ndim(s) == 0 else h


def time_functions(p: Params, s: float) -> list[float]:
    """[T_1(s), ..., T_n(s)]; empty when Gamma_0(s) is not inside the loop."""
    return connection_map(p).times(s)


def time_sym(p: Params, s: float) -> float:
    """Time of the orbit returning to its own mirror image."""
    return float(connection_map(p).sym_batch([s])[0])


def time_max(p: Params, s: float) -> float:
    """Largest of the time maps at s (T_max)."""
    t = time_functions(p, s)
    if not t:
        raise DomainError(f"s={s} is not in the connection domain")
    return max(t)


def mu_tilde(lam: float, sigma: float) -> float | None:
    """Smallest mu for which h_mu < 0 on all of (0, 1), when lam < lambda_star.

    h_mu(s) <= 0 exactly when mu >= v_s^2 / (2 G(u_s)), so the threshold is
    the maximum of that ratio along Gamma_0.
    """
    if lam >= lambda_star(sigma):
        return None
    pp = positive_phase(lam, sigma)
    s, u, v, _ = pp.grid()
    ratio = v * v / (2.0 * G(u))
    k = int(np.argmax(ratio))
    a, b = s[max(k - 1, 0)], s[min(k + 1, s.size - 1)]

    def neg_ratio(t: float) -> float:
        pt = pp.point(t)
        return -pt.v**2 / (2.0 * G(pt.u))

    _, fmin = find_min(neg_ratio, a, b, tol=1e-13 * (b - a))
    return -fmin


# -- single-point interface ----------------------------------------------

#: A built connection map carries the regime, landmarks and configuration flag.
ConnectionStructure = ConnectionMap


def classify(p: Params) -> ConnectionStructure:
    return connection_map(p)


def h_mu(s: float, p: Params) -> float:
    """Energy of Gamma_0(s) for the middle-interval flow."""
    cs = connection_map(p)
    if not 0.0 <= s <= 1.0 or not any(lo <= s <= hi for lo, hi in cs.pp.intervals()):
        raise DomainError(f"s={s} is outside the admissible set")
    return cs.h(s)


def level_crossings(s: float, p: Params, cs: ConnectionStructure | None = None) -> list[float]:
    """Every xi (s included) with h(xi) = h(s), ordered by the abscissa u_xi."""
    cs = cs or connection_map(p)
    _, xi = cs.times_batch([s])
    return [float(x) for x in xi[0] if np.isfinite(x)]


def connect_times(s: float, p: Params, cs: ConnectionStructure | None = None) -> list[tuple[int, float]]:
    """Pairs (i, T_i(s)) for every defined connection time."""
    cs = cs or connection_map(p)
    return list(enumerate(cs.times(s), start=1))


def limits(p: Params, cs: ConnectionStructure | None = None) -> ConnectionLimits:
    return (cs or connection_map(p)).limits()


def t_sym(s: float, p: Params) -> float:
    return time_sym(p, s)


def t_max(s: float, p: Params, cs: ConnectionStructure | None = None) -> float:
    t = [x for _, x in connect_times(s, p, cs)]
    if not t:
        raise DomainError(f"s={s} is not in the connection domain")
    return max(t)
