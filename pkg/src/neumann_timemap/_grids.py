"""Sampling grids refined geometrically toward interval ends."""

from __future__ import annotations

import numpy as np


def clustered_grid(
    lo: float,
    hi: float,
    n_uniform: int = 150,
    n_geometric: int = 60,
    left: bool = True,
    right: bool = True,
    smallest: float = 1e-13,
) -> np.ndarray:
    """Open-interval grid on (lo, hi) with geometric refinement at the ends.

    The geometric part places points at distances ``width * 10**k`` from a
    flagged end, with k running from log10(smallest) up to -1, so features
    that live extremely close to an end (asymptotes, tiny solutions) are
    still sampled.
    """
    width = hi - lo
    if not width > 0:
        return np.empty(0)
    pts = [lo + width * np.linspace(0.0, 1.0, n_uniform + 2)[1:-1]]
    offsets = width * np.logspace(np.log10(smallest), -1.0, n_geometric)
    if left:
        pts.append(lo + offsets)
    if right:
        pts.append(hi - offsets)
    out = np.unique(np.concatenate(pts))
    return out[(out > lo) & (out < hi)]
