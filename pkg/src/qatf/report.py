"""Figure rendering for datasets, fits, and benchmark reports.

All functions write PNG files next to the delimited outputs and never
open interactive windows; rendering is optional everywhere (the CSV and
JSON artifacts stay the canonical interface).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .bench import BenchReport
from .core import AdditiveFit, SortedDesign


def _finish(fig, out_path):
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path


def plot_dataset(design: SortedDesign, y, out_path, f_star=None, title=None):
    """Scatter of the response over the first input dimension, with the
    true quantile curve overlaid when available."""
    x0 = design.columns[:, 0]
    rows = design.perms[:, 0]
    fig, ax = plt.subplots(figsize=(7, 4.2))
    ax.plot(x0, np.asarray(y)[rows], ".", ms=3, alpha=0.6, label="observations")
    if f_star is not None:
        ax.plot(x0, np.asarray(f_star)[rows], "-", lw=1.5, color="crimson",
                label="true quantile")
    ax.set_xlabel("x1")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    return _finish(fig, out_path)


def plot_fit(fit: AdditiveFit, design: SortedDesign, y, out_path, f_star=None):
    """Fitted values against the first input dimension plus component panels."""
    d = design.d
    ncols = min(4, d + 1)
    nrows = int(np.ceil((d + 1) / ncols))
    fig, axes = plt.subplots(nrows, ncols, figsize=(3.2 * ncols, 2.6 * nrows),
                             squeeze=False)
    flat = axes.ravel()
    rows = design.perms[:, 0]
    x0 = design.columns[:, 0]
    ax = flat[0]
    ax.plot(x0, np.asarray(y)[rows], ".", ms=2.5, alpha=0.5, label="y")
    pred = fit.intercept + fit.components.sum(axis=1)
    ax.plot(x0, pred[rows], "-", lw=1.4, color="crimson", label="fit")
    if f_star is not None:
        ax.plot(x0, np.asarray(f_star)[rows], "--", lw=1.0, color="black", label="truth")
    ax.set_title("fit vs x1", fontsize=9)
    ax.legend(fontsize=7)
    for j in range(d):
        ax = flat[j + 1]
        ax.plot(design.columns[:, j], fit.components[design.perms[:, j], j], "-", lw=1.2)
        ax.set_title(f"component {j + 1}", fontsize=9)
    for k in range(d + 1, len(flat)):
        flat[k].axis("off")
    return _finish(fig, out_path)


def plot_report(report: BenchReport, out_path):
    """Log-log mean MSE against n, one line per (scenario, method, tau)."""
    fig, ax = plt.subplots(figsize=(7, 4.6))
    groups = {}
    for row in report.rows:
        groups.setdefault((row.scenario, row.method, row.tau), []).append(row)
    for (scenario, method, tau), rows in sorted(groups.items()):
        rows = sorted(rows, key=lambda r: r.n)
        ns = [r.n for r in rows]
        ms = [r.mean_mse for r in rows]
        es = [r.se_mse for r in rows]
        ax.errorbar(ns, ms, yerr=es, marker="o", ms=4, lw=1.2, capsize=3,
                    label=f"S{scenario} {method} tau={tau:g}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("mean MSE against true quantiles")
    ax.grid(True, which="both", alpha=0.25)
    ax.legend(fontsize=8)
    return _finish(fig, out_path)
