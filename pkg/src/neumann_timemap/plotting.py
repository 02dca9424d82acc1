"""SVG renderings of time maps, bifurcation diagrams and plane maps."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["plot_curves", "plot_branches", "plot_plane_map"]

# Fixed salt and no date stamp keep repeated renders byte-identical.
_RC = {"svg.hashsalt": "neumann-timemap", "svg.fonttype": "none", "font.size": 9}
_META = {"Date": None, "Creator": None}


def _save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)


def plot_curves(path, x, columns, labels, xlabel: str, ylabel: str, marks=(), title: str = "", logy: bool = False):
    """Polylines of each column against x; NaN entries break the line."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6, 4))
        for col, lab in zip(columns, labels):
            ax.plot(x, col, lw=1.0, label=lab)
        for xm in marks:
            ax.axvline(xm, color="0.6", lw=0.6, ls="--")
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if len(labels) > 1:
            ax.legend(frameon=False)
        _save(fig, path)


def plot_branches(path, branches, title: str = "") -> None:
    """Branches in the (mu, u(0)) plane on a log mu axis."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6, 4))
        for b in branches:
            line, = ax.plot(b.mu, b.s, lw=1.0, marker=".", ms=2, label=b.id)
            lm = np.asarray(b.landmark, bool)
            if lm.any():
                ax.plot(b.mu[lm], b.s[lm], "o", mfc="none", color=line.get_color(), ms=5)
        ax.set_xscale("log")
        ax.set_xlabel("mu")
        ax.set_ylabel("u(0)")
        ax.set_ylim(-0.02, 1.02)
        if title:
            ax.set_title(title)
        ax.legend(frameon=False, fontsize=7, ncol=2)
        _save(fig, path)


def plot_plane_map(path, lam, mu, counts, title: str = "") -> None:
    """Solution count on the (lam, mu) grid, one marker per cell."""
    lam = np.asarray(lam, float)
    mu = np.asarray(mu, float)
    L, M = np.meshgrid(lam, mu, indexing="ij")
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6, 4))
        sc = ax.scatter(L.ravel(), M.ravel(), c=np.asarray(counts).ravel(), cmap="viridis", s=30)
        for x, y, c in zip(L.ravel(), M.ravel(), np.asarray(counts).ravel()):
            ax.annotate(str(c), (x, y), textcoords="offset points", xytext=(4, 4), fontsize=7)
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("lambda")
        ax.set_ylabel("mu")
        fig.colorbar(sc, ax=ax, label="solutions")
        if title:
            ax.set_title(title)
        _save(fig, path)
