"""Figure rendering for solver reports and sweep records.

Uses the Agg backend and writes PNGs next to the delimited output. Figure
metadata is pinned so repeated runs produce byte-identical files.
"""

from __future__ import annotations

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

__all__ = ["render_convergence", "render_sweep"]

_METADATA = {"Software": "trcomplete"}
_FLOOR = 1e-300  # keep log axes finite when a series hits exact zero


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata=_METADATA)
    plt.close(fig)


def render_convergence(residuals, deltas, modes_per_sweep: int, path):
    """Observed residual per core update and last-core change per sweep."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 3.4))
    res = np.maximum(np.asarray(residuals, dtype=float), _FLOOR)
    upd = np.arange(1, res.size + 1) / max(modes_per_sweep, 1)
    ax1.semilogy(upd, res, lw=1.2)
    ax1.set_xlabel("sweep")
    ax1.set_ylabel("observed residual")
    dl = np.maximum(np.asarray(deltas, dtype=float), _FLOOR)
    ax2.semilogy(np.arange(1, dl.size + 1), dl, lw=1.2, color="tab:orange")
    ax2.set_xlabel("sweep")
    ax2.set_ylabel("last-core relative change")
    _save(fig, path)


def render_sweep(xs, means, stds, xlabel: str, path):
    """Mean recovery error with one-standard-deviation error bars."""
    xs = np.asarray(xs, dtype=float)
    means = np.maximum(np.asarray(means, dtype=float), _FLOOR)
    stds = np.asarray(stds, dtype=float)
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.errorbar(xs, means, yerr=stds, marker="o", capsize=3, lw=1.2)
    ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("recovery error")
    _save(fig, path)
