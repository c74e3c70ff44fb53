"""Matplotlib figures for decay profiles and convergence tables.

Figures are written as SVG with a fixed hash salt and no date stamp so the
files are byte-reproducible.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 3.6),
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.markersize": 4,
    "legend.frameon": False,
    "svg.hashsalt": "vexlab",
    "svg.fonttype": "none",
}


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None}, bbox_inches="tight")
    plt.close(fig)


def plot_profile(path, profile, slope=None, threshold=None, osc=True):
    """log-log plot of phi(r), optional oscillation, and reference slopes."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        r = profile.radii
        keep = profile.phi > 0
        ax.loglog(r[keep], profile.phi[keep], "o-", label=rf"$\phi(r)$ ({profile.mode})")
        if osc and profile.osc is not None and (profile.osc > 0).any():
            ko = profile.osc > 0
            ax.loglog(r[ko], profile.osc[ko], "s--", label=r"osc$_{B_r}u$")
        if keep.any():
            r0, y0 = r[keep][0], profile.phi[keep][0]
            if slope is not None:
                ax.loglog(r, y0 * (r / r0) ** slope, "k:", lw=1, label=f"fit slope {slope:.3f}")
            if threshold is not None:
                ax.loglog(r, y0 * (r / r0) ** threshold, "r-.", lw=1,
                          label=f"threshold {threshold:.3f}")
        ax.set_xlabel("r")
        ax.set_title(f"center ({profile.center[0]:g}, {profile.center[1]:g})")
        ax.legend(fontsize=8)
        _save(fig, path)


def plot_convergence(path, table):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        h = np.asarray(table.h)
        for errs, label in ((table.l2, "L2"), (table.max_node, "max node")):
            errs = np.asarray(errs)
            ok = errs > 0
            if ok.any():
                ax.loglog(h[ok], errs[ok], "o-", label=label)
        ax.set_xlabel("h")
        ax.set_ylabel("error")
        ax.set_title(table.preset)
        ax.legend()
        _save(fig, path)
