"""Solution branches in the mu direction and the topology of the diagram.

Branches are built by sampling: the full root set of the time maps is
computed on a geometric mu grid, consecutive root sets are linked by a
minimum-cost assignment, and every gap where the linking breaks (a count
change or an unusually long link) is bisected geometrically. Each root
set is complete, so no branch can be lost between samples the way a
predictor-corrector can jump across a fold; births and deaths are read
off the linking and classified by where they happen.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import linear_sum_assignment

from .connection import connection_map
from .core_model import Params
from .positive_phase import lambda_star
from .solver import Thresholds, _dedupe, thresholds, worker_count

__all__ = [
    "Diagram",
    "Branch",
    "BranchList",
    "trace",
    "classify_diagram",
    "branch_count",
    "default_mu_range",
]

LINK_TOL = 1.5
TRACE_RTOL = 1e-11


class Diagram(str, Enum):
    UNBOUNDED_EIGHT = "UnboundedEight"
    BOUNDED_ARC = "BoundedArc"
    BOUNDED_ARC_WITH_LOOP = "BoundedArcWithLoop"


@dataclass
class Branch:
    """One continuous branch ``mu -> s_init``.

    ``landmark`` marks samples taken from an analytic end point (a
    bifurcation from a constant state or the pitchfork point) rather than
    from a computed root; those are not solutions of the problem.
    """

    id: str
    mu: np.ndarray
    s: np.ndarray
    s_term: np.ndarray
    index: np.ndarray
    landmark: np.ndarray
    origin: str
    terminus: str = "unbounded"
    truncated: bool = False

    @property
    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.mu.tolist(), self.s.tolist()))

    def at(self, mu: float) -> float | None:
        """Computed sample at exactly ``mu``, if there is one."""
        hit = np.flatnonzero((self.mu == mu) & ~self.landmark)
        return float(self.s[hit[0]]) if hit.size else None

    def rows(self):
        for k in range(self.mu.size):
            yield (self.id, self.mu[k], self.s[k], self.s_term[k], int(self.index[k]), bool(self.landmark[k]))


class BranchList(list):
    """List of branches plus the mu grid that produced them."""

    def __init__(self, branches, lam: float, sigma: float, mu_grid, counts, th: Thresholds | None):
        super().__init__(branches)
        self.lam = lam
        self.sigma = sigma
        self.mu_grid = np.asarray(mu_grid, float)
        self.counts = np.asarray(counts, int)
        self.thresholds = th

    def by_id(self, name: str) -> Branch:
        for b in self:
            if b.id == name:
                return b
        raise KeyError(name)


def branch_count(branches, mu: float) -> int:
    """Number of computed branch samples lying at exactly ``mu``."""
    return sum(b.at(mu) is not None for b in branches)


def _roots_job(args):
    lam, mu, sigma = args
    return _dedupe(connection_map(Params(lam, mu, sigma)).solve(rtol=TRACE_RTOL))


def _logit(x):
    x = np.clip(np.asarray(x, float), 1e-300, 1.0 - 1e-16)
    return np.log(x) - np.log1p(-x)


def _link(ra, rb):
    """Minimum-cost matching of two root lists; returns (pairs, costs)."""
    if not ra or not rb:
        return [], []
    a = np.array([(r[0], r[2]) for r in ra])
    b = np.array([(r[0], r[2]) for r in rb])
    cost = (np.abs(_logit(a[:, None, 0]) - _logit(b[None, :, 0]))
            + np.abs(_logit(a[:, None, 1]) - _logit(b[None, :, 1])))
    rows, cols = linear_sum_assignment(cost)
    return list(zip(rows.tolist(), cols.tolist())), cost[rows, cols].tolist()


def _needs_refinement(ra, rb) -> bool:
    if len(ra) != len(rb):
        return True
    _, costs = _link(ra, rb)
    return bool(costs) and max(costs) > LINK_TOL


def default_mu_range(th: Thresholds) -> tuple[float, float]:
    """A mu window containing every branch event for ``th.lam``."""
    lo = 0.5 * (th.mu0_star or th.mu2_star * 1e-2)
    if th.mu_tilde is not None:
        hi = 1.2 * (th.mu0_dstar or 10.0 * th.mu_tilde)
    else:
        hi = 2.0 * max(th.mu8_star or th.mu2_star, th.mu4_star or th.mu2_star)
    return lo, hi


class _Chain:
    def __init__(self, mu, root):
        self.pts = [(mu, root[0], root[2], root[1], False)]
        self.birth = None
        self.death = None
        self.partner_birth = None
        self.partner_death = None

    @property
    def first(self):
        return self.pts[0]

    @property
    def last(self):
        return self.pts[-1]


def _group_events(chains, side: str, gap_mu) -> list[list[_Chain]]:
    """Chains born (side='start') or dying (side='end') in the same gap."""
    groups: dict[float, list[_Chain]] = {}
    for c in chains:
        mu = c.first[0] if side == "start" else c.last[0]
        if mu in gap_mu:
            groups.setdefault(mu, []).append(c)
    return [sorted(g, key=lambda c: c.first[1] if side == "start" else c.last[1]) for _, g in sorted(groups.items())]


def _pair_up(group, side: str):
    """Split a group into nearest pairs (in logit s) and leftover singles."""
    s = [c.first[1] if side == "start" else c.last[1] for c in group]
    z = _logit(s)
    pairs, singles = [], []
    k = 0
    while k < len(group):
        if k + 1 < len(group) and (k + 2 >= len(group) or z[k + 1] - z[k] <= z[k + 2] - z[k + 1]):
            pairs.append((group[k], group[k + 1]))
            k += 2
        else:
            singles.append(group[k])
            k += 1
    return pairs, singles


def _near_continuing(pair, others, mu: float, side: str) -> _Chain | None:
    """A branch alive on both sides of the event sitting between the pair."""
    s = [c.first[1] if side == "start" else c.last[1] for c in pair]
    z = _logit(s)
    lo, hi = min(z), max(z)
    pad = 0.25 * (hi - lo)
    best, dist = None, math.inf
    for c in others:
        for mu_c, s_c, *_ in c.pts:
            if mu_c == mu:
                zc = float(_logit(s_c))
                if lo - pad <= zc <= hi + pad:
                    d = abs(zc - 0.5 * (lo + hi))
                    if d < dist:
                        best, dist = c, d
    return best


def trace(
    lam: float,
    sigma: float = 0.25,
    mu_max: float | None = None,
    mu_min: float | None = None,
    n_mu: int = 24,
    max_depth: int = 5,
    th: Thresholds | None = None,
    workers: int | None = None,
) -> BranchList:
    """Trace every solution branch of the problem for fixed ``lam``.

    Args:
        mu_max, mu_min: mu window; by default it is derived from the
            thresholds so that it covers all births and deaths.
        n_mu: initial geometric grid size.
        max_depth: number of geometric bisection rounds at events.
        th: precomputed thresholds (computed here when missing).
        workers: process pool size for the root solves.
    """
    if th is None:
        th = thresholds(lam, sigma)
    lo, hi = default_mu_range(th)
    mu_min = lo if mu_min is None else mu_min
    mu_max = hi if mu_max is None else mu_max
    nw = worker_count(workers)
    pool = ProcessPoolExecutor(nw) if nw > 1 else None

    def solve_all(mus):
        jobs = [(lam, float(m), sigma) for m in mus]
        return list(pool.map(_roots_job, jobs)) if pool else [_roots_job(j) for j in jobs]

    try:
        mus = [float(m) for m in np.geomspace(mu_min, mu_max, n_mu)]
        roots = dict(zip(mus, solve_all(mus)))
        for _ in range(max_depth):
            new = [math.sqrt(a * b) for a, b in zip(mus, mus[1:]) if _needs_refinement(roots[a], roots[b])]
            if not new:
                break
            roots.update(zip(new, solve_all(new)))
            mus = sorted(roots)
    finally:
        if pool:
            pool.shutdown()

    # link consecutive root sets into chains
    alive: dict[int, _Chain] = {k: _Chain(mus[0], r) for k, r in enumerate(roots[mus[0]])}
    chains = list(alive.values())
    for a, b in zip(mus, mus[1:]):
        pairs, costs = _link(roots[a], roots[b])
        nxt: dict[int, _Chain] = {}
        for (i, j), c in zip(pairs, costs):
            # equal counts on both sides: keep every link, since a birth and a
            # death inside the same gap is far less likely than a fast branch
            if c <= 3.0 * LINK_TOL or len(roots[a]) == len(roots[b]):
                r = roots[b][j]
                alive[i].pts.append((b, r[0], r[2], r[1], False))
                nxt[j] = alive[i]
        for j, r in enumerate(roots[b]):
            if j not in nxt:
                nxt[j] = _Chain(b, r)
                chains.append(nxt[j])
        alive = nxt

    branches = _classify_chains(chains, mus, lam, sigma, th)
    return BranchList(branches, lam, sigma, mus, [len(roots[m]) for m in mus], th)


def _classify_chains(chains, mus, lam, sigma, th: Thresholds) -> list[Branch]:
    below = lam < lambda_star(sigma)
    mu_lo, mu_hi = mus[0], mus[-1]
    prev = dict(zip(mus[1:], mus[:-1]))
    nxt = dict(zip(mus[:-1], mus[1:]))

    births = [c for c in chains if c.first[0] > mu_lo]
    deaths = [c for c in chains if c.last[0] < mu_hi]
    for c in chains:
        if c.first[0] == mu_lo:
            c.birth = "truncated"

    for group in _group_events(births, "start", set(mus[1:])):
        mu = group[0].first[0]
        others = [c for c in chains if c.first[0] < mu and c.last[0] >= mu]
        pairs, singles = _pair_up(group, "start")
        for c1, c2 in pairs:
            host = _near_continuing((c1, c2), others, mu, "start")
            kind = "pitchfork" if host is not None else "turning-point"
            for c, partner in ((c1, c2), (c2, c1)):
                c.birth = kind
                c.partner_birth = host if host is not None else partner
            if kind == "pitchfork":
                _seed_pitchfork((c1, c2), prev[mu], mu, lam, sigma, th)
        for c in singles:
            from_zero = c.first[1] < 0.5
            c.birth = "bifurcation-from-0" if from_zero else "bifurcation-from-1"
            mark = th.mu2_star if from_zero else th.mu1_star
            if mark is not None and prev[mu] <= mark <= mu:
                c.pts.insert(0, (mark, 0.0 if from_zero else 1.0, 0.0 if from_zero else 1.0, 0, True))

    for group in _group_events(deaths, "end", set(mus[:-1])):
        mu = group[0].last[0]
        others = [c for c in chains if c.last[0] > mu and c.first[0] <= mu]
        pairs, singles = _pair_up(group, "end")
        for c1, c2 in pairs:
            host = _near_continuing((c1, c2), others, mu, "end")
            for c, partner in ((c1, c2), (c2, c1)):
                c.death = "merge"
                c.partner_death = host if host is not None else partner
        for c in singles:
            c.death = "to-0" if c.last[1] < 0.5 else "to-1"

    # naming
    names: dict[int, str] = {}
    if below:
        zero = [c for c in chains if c.birth == "bifurcation-from-0"]
        one = [c for c in chains if c.birth == "bifurcation-from-1"]
        if zero:
            names[id(zero[0])] = "tilde-1"
        if one:
            names[id(one[0])] = "tilde-2"
        rest = sorted((c for c in chains if id(c) not in names), key=lambda c: (c.first[0], c.first[1]))
        for k, c in enumerate(rest, 1):
            names[id(c)] = f"loop-{k}"
    else:
        final = sorted((c for c in chains if c.last[0] == mu_hi), key=lambda c: c.last[1])
        for k, c in enumerate(final, 1):
            names[id(c)] = str(k)
        rest = sorted((c for c in chains if id(c) not in names), key=lambda c: (c.first[0], c.first[1]))
        for k, c in enumerate(rest, 1):
            names[id(c)] = f"extra-{k}"

    out = []
    for c in chains:
        origin = c.birth
        if below and origin == "turning-point" and c.death == "merge":
            origin = "loop-closure"
        if c.death == "merge":
            terminus = f"merges-with({names[id(c.partner_death)]})"
        elif c.death in ("to-0", "to-1"):
            terminus = f"merges-with({c.death[-1]})"
        else:
            terminus = "unbounded"
        pts = c.pts
        out.append(Branch(
            id=names[id(c)],
            mu=np.array([p[0] for p in pts]),
            s=np.array([p[1] for p in pts]),
            s_term=np.array([p[2] for p in pts]),
            index=np.array([p[3] for p in pts], dtype=int),
            landmark=np.array([p[4] for p in pts], dtype=bool),
            origin=origin or "truncated",
            terminus=terminus,
            truncated=c.birth == "truncated" or (below and c.last[0] == mu_hi),
        ))
    return sorted(out, key=lambda b: (not b.id.isdigit(), int(b.id) if b.id.isdigit() else 0, b.id))


def _seed_pitchfork(pair, mu_a: float, mu_b: float, lam: float, sigma: float, th: Thresholds) -> None:
    """Start both new branches at the pitchfork point when it lies in the gap."""
    mark = th.mu4_star
    if mark is None or not (mu_a <= mark <= mu_b):
        return
    s0 = connection_map(Params(lam, mark, sigma)).landmarks.s0tau
    if s0 is None:
        return
    for c in pair:
        c.pts.insert(0, (mark, s0, s0, 0, True))


def classify_diagram(lam: float, sigma: float = 0.25, n_mu: int = 24, th: Thresholds | None = None) -> Diagram:
    """Topology of the bifurcation diagram in mu for fixed ``lam``.

    Below lambda*, the diagram carries a loop exactly when some mu has
    more than the two solutions of the bounded arc; the scan covers the
    whole existence window plus a cluster around mu_tilde, where the loop
    in the time maps is born.
    """
    if lam >= lambda_star(sigma):
        return Diagram.UNBOUNDED_EIGHT
    if th is None:
        th = thresholds(lam, sigma)
    lo, hi = default_mu_range(th)
    mus = list(np.geomspace(lo, hi, n_mu))
    if th.mu_tilde is not None:
        mus += [th.mu_tilde * (1.0 + d) for d in (-0.1, -1e-2, -1e-3, 1e-3, 1e-2, 0.1)]
    for mu in sorted(mus):
        if len(_roots_job((lam, float(mu), sigma))) > 2:
            return Diagram.BOUNDED_ARC_WITH_LOOP
    return Diagram.BOUNDED_ARC
