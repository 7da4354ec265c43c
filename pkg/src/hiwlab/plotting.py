"""Figure rendering for the laboratory's reports.

Every report-producing CLI path can emit a PNG next to its JSON/CSV output;
the functions here take the already-computed report objects, never
recompute, and always write to files (Agg backend, no display).
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "plot_cf_trend",
    "plot_decay",
    "plot_kernel_profile",
    "plot_progression",
    "plot_sign_counts",
    "plot_survey_classes",
]

_FIGSIZE = (7.0, 4.2)


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def plot_progression(report, path):
    """Class sums E(x, p, a) as a sequence plus their histogram."""
    e = np.asarray(report.e_values)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=_FIGSIZE,
                                   gridspec_kw={"width_ratios": [2, 1]})
    ax1.plot(np.arange(len(e)), e, lw=0.6)
    ax1.set_xlabel("class a mod p")
    ax1.set_ylabel("E(x, p, a)")
    ax1.set_title(f"x = {report.x:g}, p = {report.p}")
    ax2.hist(e[1:], bins=40, orientation="horizontal", color="tab:gray")
    ax2.set_xlabel("classes")
    ax2.set_title(f"m2 = {report.m2:.4f}")
    return _finish(fig, path)


def plot_cf_trend(cf, path):
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.semilogx(cf.xs, cf.estimates, "o-")
    ax.axhline(cf.extrapolated, ls="--", color="tab:red",
               label=f"extrapolated {cf.extrapolated:.5f}")
    ax.set_xlabel("x")
    ax.set_ylabel("normalization ratio")
    ax.legend()
    return _finish(fig, path)


def plot_decay(pairs, slope, path):
    xs = [p[0] for p in pairs]
    ys = [max(p[1], 1e-300) for p in pairs]
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.loglog(xs, ys, "o-")
    ax.set_xlabel("x")
    ax.set_ylabel("|smoothed total sum|")
    ax.set_title(f"log-log slope {slope:.2f}")
    return _finish(fig, path)


def plot_kernel_profile(kernel, path, y_lo=0.05, y_hi=50.0, n=400):
    ys = np.geomspace(y_lo, y_hi, n)
    vals = kernel.values(ys)
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.semilogx(ys, vals, lw=0.9)
    ax.set_xlabel("y")
    ax.set_ylabel("B(y)")
    ax.set_title(f"dual-sum kernel, abscissa {kernel.sigma}, t_max {kernel.t_max:.0f}")
    return _finish(fig, path)


def plot_sign_counts(report, path):
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    q = report.q
    ax.plot(np.arange(q), report.per_class_plus, lw=0.7, label="T+")
    ax.plot(np.arange(q), -np.asarray(report.per_class_minus), lw=0.7, label="-T-")
    ax.axhline(0, color="k", lw=0.5)
    ax.set_xlabel(f"class a mod {q}")
    ax.set_ylabel("count")
    ax.set_title(f"x = {report.x:g}, alpha = {report.alpha}")
    ax.legend()
    return _finish(fig, path)


def plot_survey_classes(e_values, hits, path, title=""):
    e = np.asarray(e_values)
    hits = np.asarray(hits, dtype=bool)
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    idx = np.arange(len(e))
    ax.scatter(idx[~hits], e[~hits], s=4, color="tab:gray", label="no hit")
    ax.scatter(idx[hits], e[hits], s=4, color="tab:green", label="T+ >= 1")
    ax.set_xlabel("class a")
    ax.set_ylabel("E(x, p, a)")
    if title:
        ax.set_title(title)
    ax.legend(markerscale=3)
    return _finish(fig, path)
