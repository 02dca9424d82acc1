"""Solutions of the boundary value problem and the existence thresholds.

Solutions are roots of T_i(s) = 1 - 2 sigma located through the connection
time maps. Every candidate is then checked independently by fixed-step RK4
shooting from (s, 0), which also yields the profile stored with the
solution. :func:`shooting_scan` is a completely separate route to the same
set: it never touches the time maps and relies only on direct integration.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ._grids import clustered_grid
from .connection import Regime, connection_map, mu_tilde
from .core_model import G_poly, Params
from .positive_phase import lambda_star
from .quadrature import BracketError, find_min, find_root

__all__ = [
    "VERIFY_DT",
    "RESIDUAL_TOL",
    "Shot",
    "Verification",
    "Solution",
    "Thresholds",
    "PlaneMap",
    "shoot",
    "verify_solution",
    "verify_batch",
    "find_solutions",
    "solve_report",
    "shooting_scan",
    "reflect",
    "min_T1",
    "max_Tmax",
    "min_T3_left",
    "thresholds",
    "region_label",
    "plane_map",
    "worker_count",
]

log = logging.getLogger(__name__)

VERIFY_DT = 1e-5
SCAN_DT = 1e-3
ORACLE_DT = 1e-4
RESIDUAL_TOL = 1e-6
DEDUP_TOL = 1e-7
BLOW_UP = 50.0
WORKERS_ENV = "NEUMANN_TIMEMAP_WORKERS"


def worker_count(requested: int | None = None) -> int:
    """Worker pool size: explicit request, else the environment, else 1."""
    if requested is not None:
        return max(1, int(requested))
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


# -- direct integration ----------------------------------------------------


def _pieces(p: Params, dt: float):
    """(weight, steps, step size) for each interval of constant weight."""
    out = []
    for length, w in ((p.sigma, p.lam), (p.middle_length, -p.mu), (p.sigma, p.lam)):
        n = max(1, int(math.ceil(length / dt - 1e-9)))
        out.append((w, n, length / n))
    return out


def _rk4(u, v, w: float, h: float):
    """One RK4 step of u' = v, v' = -w u^2 (1 - u)."""
    def acc(x):
        return -w * x * x * (1.0 - x)

    k1v = acc(u)
    k2u = v + 0.5 * h * k1v
    k2v = acc(u + 0.5 * h * v)
    k3u = v + 0.5 * h * k2v
    k3v = acc(u + 0.5 * h * k2u)
    k4u = v + h * k3v
    k4v = acc(u + h * k3u)
    return u + h / 6.0 * (v + 2.0 * k2u + 2.0 * k3u + k4u), v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)


@dataclass
class Shot:
    """End states of a batch of shots from (s, 0).

    Trajectories leaving |u| < BLOW_UP are frozen; their ``v`` is +-inf with
    the sign of the velocity at escape, which keeps sign scans meaningful.
    """

    u: np.ndarray
    v: np.ndarray
    alive: np.ndarray
    u_min: np.ndarray
    u_max: np.ndarray


def shoot(s, p: Params, dt: float = SCAN_DT, n_pieces: int = 3) -> Shot:
    """Integrate u'' = -a(t) g(u) from (s, 0) over the first ``n_pieces`` intervals."""
    u = np.array(np.atleast_1d(s), dtype=float)
    v = np.zeros_like(u)
    alive = np.ones(u.shape, bool)
    esc = np.zeros_like(u)
    u_min, u_max = u.copy(), u.copy()
    for w, n, h in _pieces(p, dt)[:n_pieces]:
        for _ in range(n):
            u, v = _rk4(u, v, w, h)
            blown = alive & ~(np.abs(u) < BLOW_UP)
            if blown.any():
                # Park escaped rows at the equilibrium u = 0, remembering the sign.
                alive &= ~blown
                esc[blown] = np.where(v[blown] < 0, -np.inf, np.inf)
                u[blown] = 0.0
                v[blown] = 0.0
            np.fmin(u_min, np.where(alive, u, np.nan), out=u_min)
            np.fmax(u_max, np.where(alive, u, np.nan), out=u_max)
    u = np.where(alive, u, np.nan)
    v = np.where(alive, v, esc)
    return Shot(u, v, alive, u_min, u_max)


@dataclass
class Verification:
    """Outcome of re-integrating a candidate with RK4.

    ``residual`` is the Neumann defect max(|u'(0)|, |u'(1)|) of the profile;
    ``energy_drift`` the largest relative change of the piecewise first
    integral, measured against the size of its terms.
    """

    s_init: float
    residual: float
    inside: bool
    escape_t: float | None
    energy_drift: float
    t: np.ndarray = field(repr=False)
    u: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)

    def ok(self, tol: float = RESIDUAL_TOL) -> bool:
        return self.inside and self.residual < tol


def _energy_drift(t, u, v, p: Params) -> float:
    worst = 0.0
    bounds = [(0.0, p.sigma, p.lam), (p.sigma, 1.0 - p.sigma, -p.mu), (1.0 - p.sigma, 1.0, p.lam)]
    for a, b, w in bounds:
        sel = (t >= a - 1e-12) & (t <= b + 1e-12)
        if sel.sum() < 2:
            continue
        uu, vv = u[sel], v[sel]
        H = vv * vv + 2.0 * w * G_poly(uu)
        scale = np.max(vv * vv + 2.0 * abs(w) * np.abs(G_poly(uu)))
        if scale > 0:
            worst = max(worst, float(np.max(np.abs(H - H[0])) / scale))
    return worst


def verify_batch(s, p: Params, dt: float = VERIFY_DT, n_profile: int = 4000) -> list[Verification]:
    """Shoot every candidate with RK4 and keep a subsampled profile.

    The stored profile keeps about ``n_profile`` points, always including
    both weight switches, so energy checks can be repeated on it.
    """
    s = np.array(np.atleast_1d(s), dtype=float)
    u, v = s.copy(), np.zeros_like(s)
    ts, us, vs = [np.zeros(1)], [u[:, None].copy()], [v[:, None].copy()]
    escape = np.full(s.shape, np.nan)
    t0 = 0.0
    for w, n, h in _pieces(p, dt):
        stride = max(1, n * 3 // n_profile)
        keep = set(range(stride, n + 1, stride)) | {n}
        tt, uu, vv = [], [], []
        for k in range(1, n + 1):
            u, v = _rk4(u, v, w, h)
            bad = np.isnan(escape) & ~((u > 0.0) & (u < 1.0))
            if bad.any():
                escape[bad] = t0 + k * h
            if k in keep:
                tt.append(t0 + k * h)
                uu.append(u.copy())
                vv.append(v.copy())
        ts.append(np.array(tt))
        us.append(np.array(uu).T)
        vs.append(np.array(vv).T)
        t0 += n * h
    t = np.concatenate(ts)
    U = np.concatenate(us, axis=1)
    V = np.concatenate(vs, axis=1)
    # Snap the switch times onto their exact values.
    t[np.argmin(np.abs(t - p.sigma))] = p.sigma
    t[np.argmin(np.abs(t - (1.0 - p.sigma)))] = 1.0 - p.sigma
    t[-1] = 1.0
    out = []
    for k in range(s.size):
        uk, vk = U[k], V[k]
        finite = np.all(np.isfinite(uk)) and np.all(np.isfinite(vk))
        residual = float(max(abs(vk[0]), abs(vk[-1]))) if finite else math.inf
        drift = _energy_drift(t, uk, vk, p) if finite else math.inf
        esc = None if np.isnan(escape[k]) else float(escape[k])
        out.append(Verification(float(s[k]), residual, esc is None and finite, esc, drift, t, uk, vk))
    return out


def verify_solution(s_init: float, p: Params, tol: float = RESIDUAL_TOL, dt: float = VERIFY_DT) -> Verification:
    """Independent RK4 check of a candidate initial value.

    Acceptance is ``result.ok(tol)``: the profile stays in (0, 1) and the
    Neumann defect is below ``tol``; ``escape_t`` reports where it left.
    """
    return verify_batch([s_init], p, dt)[0]


# -- solutions ---------------------------------------------------------------


@dataclass(eq=False)
class Solution:
    """A verified solution with its RK4 profile."""

    s_init: float
    s_term: float
    crossing_index: int
    residual: float
    energy_drift: float
    params: Params
    t: np.ndarray = field(repr=False)
    u: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)

    @property
    def symmetric(self) -> bool:
        return abs(self.s_init - self.s_term) <= 1e-9

    def to_dict(self) -> dict:
        return {
            "s_init": self.s_init,
            "s_term": self.s_term,
            "crossing_index": self.crossing_index,
            "residual": self.residual,
            "energy_drift": self.energy_drift,
            "params": self.params.as_dict(),
            "profile": {"t": self.t.tolist(), "u": self.u.tolist(), "v": self.v.tolist()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Solution":
        prof = d["profile"]
        return cls(
            float(d["s_init"]),
            float(d["s_term"]),
            int(d["crossing_index"]),
            float(d["residual"]),
            float(d["energy_drift"]),
            Params(**d["params"]),
            np.asarray(prof["t"], float),
            np.asarray(prof["u"], float),
            np.asarray(prof["v"], float),
        )


def reflect(sol: Solution) -> Solution:
    """The solution t -> u(1 - t), which solves the same problem."""
    return Solution(
        sol.s_term,
        sol.s_init,
        sol.crossing_index,
        sol.residual,
        sol.energy_drift,
        sol.params,
        (1.0 - sol.t[::-1]).copy(),
        sol.u[::-1].copy(),
        -sol.v[::-1].copy(),
    )


def _dedupe(roots, tol: float = DEDUP_TOL):
    out = []
    for r in sorted(roots):
        if out and abs(r[0] - out[-1][0]) <= tol:
            continue
        out.append(r)
    return out


def solve_report(p: Params, tol: float = RESIDUAL_TOL, dt: float = VERIFY_DT):
    """Time-map solutions of the problem plus the rejected candidates.

    Returns:
        ``(solutions, rejected)``; ``rejected`` lists the
        :class:`Verification` of every candidate that failed the RK4 check.
    """
    roots = _dedupe(connection_map(p).solve())
    if not roots:
        return [], []
    checks = verify_batch([r[0] for r in roots], p, dt)
    sols, rejected = [], []
    for (s, idx, xi), chk in zip(roots, checks):
        if chk.ok(tol):
            sols.append(Solution(s, xi, idx, chk.residual, chk.energy_drift, p, chk.t, chk.u, chk.v))
        else:
            log.warning("candidate s=%.17g (T_%d) failed verification: residual=%g escape=%s",
                        s, idx, chk.residual, chk.escape_t)
            rejected.append(chk)
    return sols, rejected


def find_solutions(p: Params, tol: float = RESIDUAL_TOL, dt: float = VERIFY_DT) -> list[Solution]:
    """All verified positive solutions, sorted by u(0)."""
    return solve_report(p, tol, dt)[0]


# -- shooting oracle --------------------------------------------------------


def _multisect(fn, a, b, k: int = 32, rounds: int = 8):
    """Shrink sign-change brackets by evaluating k points per round."""
    a, b = a.copy(), b.copy()
    rows = np.arange(a.size)
    for _ in range(rounds):
        grid = a[:, None] + (b - a)[:, None] * np.linspace(0.0, 1.0, k)[None, :]
        sg = np.sign(fn(grid.ravel())).reshape(grid.shape)
        change = sg[:, :-1] * sg[:, 1:] <= 0
        has = change.any(axis=1)
        j = np.argmax(change, axis=1)
        a = np.where(has, grid[rows, j], a)
        b = np.where(has, grid[rows, j + 1], b)
    return a, b


def _sign_changes(x, y):
    sg = np.sign(y)
    k = np.flatnonzero(sg[:-1] * sg[1:] < 0)
    return x[k], x[k + 1]


def shooting_scan(
    p: Params,
    n: int = 2000,
    dt_scan: float = SCAN_DT,
    dt_refine: float = ORACLE_DT,
    tol: float = RESIDUAL_TOL,
) -> list[float]:
    """Initial values of positive solutions found by direct shooting only.

    The scan grid is refined around the points where the state reached at
    t = sigma crosses the middle-interval separatrix or the axis u = 0,
    both located by RK4 as well, since solutions accumulate there. Sign
    changes of u'(1) are narrowed by multisection at ``dt_refine`` and a
    root is kept when its trajectory stays in (0, 1) with |u'(1)| < tol.
    """
    n_geo = max(20, n // 10)
    base = clustered_grid(0.0, 1.0, n - 2 * n_geo, n_geo, smallest=1e-13)

    def at_sigma(x):
        sh = shoot(x, p, dt_refine, n_pieces=1)
        return sh.u, sh.v

    u_s, v_s = at_sigma(base)
    sep = v_s * v_s - 2.0 * p.mu * G_poly(u_s)
    marks = []
    for vals in (sep, u_s):
        a, b = _sign_changes(base, vals)
        if a.size:
            fn = (lambda x: (lambda uu, vv: vv * vv - 2.0 * p.mu * G_poly(uu))(*at_sigma(x))) if vals is sep \
                else (lambda x: at_sigma(x)[0])
            a, b = _multisect(fn, a, b)
            marks.extend(0.5 * (a + b))
    offsets = np.logspace(-15, -1.5, 110)
    extra = [m + sgn * offsets for m in marks for sgn in (-1.0, 1.0)]
    grid = np.unique(np.concatenate([base, *extra]))
    grid = grid[(grid > 0) & (grid < 1)]

    shot = shoot(grid, p, dt_scan)
    a, b = _sign_changes(grid, shot.v)
    if a.size == 0:
        return []
    a, b = _multisect(lambda x: shoot(x, p, dt_refine).v, a, b)
    mid = 0.5 * (a + b)
    fin = shoot(mid, p, dt_refine)
    good = fin.alive & (fin.u_min > 0) & (fin.u_max < 1) & (np.abs(fin.v) < tol)
    return _dedupe_values(mid[good])


def _dedupe_values(x, tol: float = DEDUP_TOL) -> list[float]:
    out: list[float] = []
    for r in np.sort(x):
        if not out or r - out[-1] > tol:
            out.append(float(r))
    return out


# -- thresholds --------------------------------------------------------------


def _segment_extreme(cm, column, sign: float, n_uniform: int, n_geometric: int, within=None, best=math.inf):
    """min over s of sign * column(T), refined with find_min.

    Segments whose sampled minimum is clearly above ``best`` are not refined;
    only the value matters, so the location tolerance is loose.
    """
    for (lo, hi), grid in zip(cm.segments, cm.scan_grid(n_uniform, n_geometric)):
        if within is not None and not (lo >= within[0] and hi <= within[1]):
            continue
        if grid.size < 3:
            continue
        T, _ = cm.times_batch(grid)
        vals = sign * column(T)
        if not np.any(np.isfinite(vals)):
            continue
        k = int(np.nanargmin(np.where(np.isfinite(vals), vals, np.nan)))
        if vals[k] - best > 1e-2 * abs(best):
            continue
        a, b = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]

        def f(x, _c=column):
            t, _ = cm.times_batch([x])
            val = sign * _c(t)[0]
            return float(val) if np.isfinite(val) else math.inf

        _, fv = find_min(f, a, b, tol=1e-7 * max(b - a, 1e-300))
        best = min(best, vals[k], fv)
    return best


def _first_col(T):
    return T[:, 0]


def _last_col(T):
    finite = np.isfinite(T)
    idx = np.where(finite.any(axis=1), T.shape[1] - 1 - np.argmax(finite[:, ::-1], axis=1), 0)
    return T[np.arange(T.shape[0]), idx]


def _third_col(T):
    return T[:, 2] if T.shape[1] > 2 else np.full(T.shape[0], np.nan)


def min_T1(p: Params, n_uniform: int = 60, n_geometric: int = 20) -> float:
    """Infimum of T_1 over its domain, endpoint limits included."""
    cm = connection_map(p)
    lim = cm.limits()
    cands = [lim.L0, lim.L1] + [x for x in (lim.ell0_12, lim.ell1_12) if x is not None]
    best = min(cands)
    return min(best, _segment_extreme(cm, _first_col, 1.0, n_uniform, n_geometric, best=best))


def max_Tmax(p: Params, n_uniform: int = 60, n_geometric: int = 20) -> float:
    """Supremum of the largest connection time; infinite with asymptotes."""
    cm = connection_map(p)
    if cm.regime is Regime.TWO_ASYMPTOTES:
        return math.inf
    lim = cm.limits()
    cands = [lim.L0, lim.L1] + [x for x in (lim.kappa0, lim.kappa1, lim.kappa2, lim.kappa3, lim.kappa4) if x]
    best = max(cands)
    return max(best, -_segment_extreme(cm, _last_col, -1.0, n_uniform, n_geometric, best=-best))


def min_T3_left(p: Params, n_uniform: int = 60, n_geometric: int = 20) -> float:
    """Minimum of T_3 on the first connection interval (0, s0M)."""
    cm = connection_map(p)
    if cm.regime is not Regime.TWO_ASYMPTOTES:
        return math.nan
    lim = cm.limits()
    best = math.inf if lim.ell0_3 is None else lim.ell0_3
    return min(best, _segment_extreme(cm, _third_col, 1.0, n_uniform, n_geometric, cm.intervals[0], best))


@dataclass
class Thresholds:
    """Existence and multiplicity thresholds in mu for fixed (lam, sigma).

    ``mu8_fold`` is the sharper eight-solution threshold where min T_3 on
    (0, s0M) reaches 1 - 2 sigma (the fold of the b2/b3 pair).
    """

    lam: float
    sigma: float
    mu0_star: float | None = None
    mu1_star: float | None = None
    mu2_star: float | None = None
    mu2_dstar: float | None = None
    mu0_dstar: float | None = None
    mu4_star: float | None = None
    mu8_star: float | None = None
    mu8_fold: float | None = None
    mu_tilde: float | None = None
    unresolved: dict[str, list[float]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _scan_roots(F, mus):
    """Sign changes of F over an increasing mu grid, each refined by Brent."""
    vals = np.array([F(m) for m in mus])
    sg = np.sign(np.where(np.isfinite(vals), vals, 1.0))
    roots = []
    for k in np.flatnonzero(sg[:-1] * sg[1:] < 0):
        try:
            roots.append(find_root(F, mus[k], mus[k + 1], tol=1e-300, rtol=1e-10))
        except BracketError:
            pass
    return roots, vals


def _upper_end(F, start: float, factor: float = 2.0, confirm: int = 2, limit: float = 1e12):
    """A mu above which F stays negative over ``confirm`` further steps."""
    mu = start
    neg = 0
    while mu < limit:
        mu *= factor
        neg = neg + 1 if F(mu) < 0 else 0
        if neg > confirm:
            return mu
    return None


def thresholds(lam: float, sigma: float = 0.25, n_scan: int = 16, fold: bool = False) -> Thresholds:
    """Compute every mu-threshold relevant for ``lam``.

    ``fold=True`` also locates ``mu8_fold``, which costs about as much as
    all the other thresholds together.
    """
    target = 1.0 - 2.0 * sigma
    th = Thresholds(lam, sigma)
    th.mu2_star = 2.0 * lam * sigma / target

    def f_min(mu):
        return min_T1(Params(lam, mu, sigma)) - target

    mus = np.geomspace(th.mu2_star * 1e-4, th.mu2_star, n_scan)
    roots, _ = _scan_roots(f_min, mus)
    if roots:
        th.mu0_star, th.mu1_star = roots[0], roots[-1]
    else:
        th.unresolved["mu1_star"] = [mus[0], mus[-1]]

    if lam < lambda_star(sigma):
        th.mu_tilde = mu_tilde(lam, sigma)

        def f_max(mu):
            return max_Tmax(Params(lam, mu, sigma)) - target

        start = th.mu_tilde * (1.0 + 1e-6)
        hi = _upper_end(f_max, start)
        if hi is None:
            th.unresolved["mu2_dstar"] = [start, 1e12]
        else:
            mus = start + (hi - start) * np.geomspace(1e-6, 1.0, n_scan)
            roots, _ = _scan_roots(f_max, mus)
            if roots:
                th.mu2_dstar, th.mu0_dstar = roots[0], roots[-1]
            else:
                th.unresolved["mu2_dstar"] = [start, hi]
        return th

    def largest_root(name, fn):
        hi = _upper_end(fn, th.mu2_star)
        if hi is None:
            th.unresolved[name] = [th.mu2_star, 1e12]
            return None
        roots, vals = _scan_roots(fn, np.geomspace(th.mu2_star, hi, n_scan))
        return max(th.mu2_star, roots[-1]) if roots else th.mu2_star

    def limit_fn(attr):
        def fn(mu):
            val = getattr(connection_map(Params(lam, mu, sigma)).limits(), attr)
            return math.inf if val is None else val - target
        return fn

    th.mu4_star = largest_root("mu4_star", limit_fn("ell0_12"))
    th.mu8_star = largest_root("mu8_star", limit_fn("ell0_3"))
    if fold:
        th.mu8_fold = largest_root("mu8_fold", lambda mu: min_T3_left(Params(lam, mu, sigma)) - target)
    return th


def region_label(mu: float, th: Thresholds) -> str:
    """Guaranteed-multiplicity label of (lam, mu) from the thresholds."""
    if th.mu0_star is not None and mu < th.mu0_star:
        return "none"
    if th.mu_tilde is not None:
        if th.mu0_dstar is not None and mu > th.mu0_dstar:
            return "none"
        if th.mu2_dstar is not None and th.mu2_star < mu < th.mu2_dstar:
            return ">=2"
        if th.mu1_star is not None and mu > th.mu1_star and (th.mu2_dstar is None or mu < th.mu2_dstar):
            return ">=1"
        return "undetermined"
    for key, label in (("mu8_star", ">=8"), ("mu4_star", ">=4"), ("mu2_star", ">=2"), ("mu1_star", ">=1")):
        val = getattr(th, key)
        if val is not None and mu > val:
            return label
    return "undetermined"


@dataclass
class PlaneMap:
    """Solution counts and region labels over a (lam, mu) grid."""

    lam: np.ndarray
    mu: np.ndarray
    sigma: float
    counts: np.ndarray
    labels: np.ndarray
    failures: dict[tuple[int, int], str] = field(default_factory=dict)


def _count_cell(args) -> tuple[int, int, int, str | None]:
    i, j, lam, mu, sigma = args
    try:
        return i, j, len(find_solutions(Params(lam, mu, sigma))), None
    except Exception as exc:  # recorded per cell, the map is still returned
        return i, j, -1, f"{type(exc).__name__}: {exc}"


def plane_map(lam_grid, mu_grid, sigma: float = 0.25, workers: int | None = None) -> PlaneMap:
    """Verified solution counts and threshold labels on a (lam, mu) grid.

    Rows follow ``lam_grid``, columns ``mu_grid``. Cells run in a process
    pool sized by ``workers`` or the NEUMANN_TIMEMAP_WORKERS variable.
    """
    lams = np.asarray(lam_grid, float)
    mus = np.asarray(mu_grid, float)
    counts = np.full((lams.size, mus.size), -1, dtype=int)
    labels = np.full((lams.size, mus.size), "", dtype=object)
    failures: dict[tuple[int, int], str] = {}
    jobs = [(i, j, lam, mu, sigma) for i, lam in enumerate(lams) for j, mu in enumerate(mus)]
    nw = worker_count(workers)
    if nw > 1:
        with ProcessPoolExecutor(nw) as pool:
            ths = list(pool.map(thresholds, lams, [sigma] * lams.size))
            results = list(pool.map(_count_cell, jobs))
    else:
        ths = [thresholds(lam, sigma) for lam in lams]
        results = [_count_cell(job) for job in jobs]
    for i, j, count, err in sorted(results, key=lambda r: (r[0], r[1])):
        counts[i, j] = count
        labels[i, j] = region_label(mus[j], ths[i])
        if err:
            failures[(i, j)] = err
    return PlaneMap(lams, mus, sigma, counts, labels, failures)
