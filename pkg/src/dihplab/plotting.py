"""Matplotlib figures for the CLI reports.

Figures are rendered with the Agg backend and saved without the software and
timestamp metadata, so the same data always produces the same PNG bytes.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (6.4, 4.0),
    "figure.dpi": 100,
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "dihplab",
}
YES_COLOR = "#1b7837"
NO_COLOR = "#762a83"


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, format="png", metadata={"Software": None})
    plt.close(fig)
    return path


def _new(title: str, xlabel: str, ylabel: str):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    return fig, ax


def advantage_figure(rows: Sequence[dict], path: str | Path) -> Path:
    """Success rate per protocol with Wilson intervals and the coin-flip line."""
    fig, ax = _new("Protocol success rate", "protocol", "success rate")
    names = [r["protocol"] for r in rows]
    rate = np.array([r["success_rate"] for r in rows])
    lo = rate - np.array([r["wilson_low"] for r in rows])
    hi = np.array([r["wilson_high"] for r in rows]) - rate
    x = np.arange(len(rows))
    ax.bar(x, rate, color="#4393c3", width=0.6)
    ax.errorbar(x, rate, yerr=np.vstack([lo, hi]), fmt="none", ecolor="k", capsize=4)
    ax.axhline(0.5, color="grey", ls="--", lw=1)
    ax.set_xticks(x, names)
    ax.set_ylim(0, 1.05)
    return _save(fig, path)


def gap_figure(yes_cut: Sequence[float], no_cut: Sequence[float], m0: float, threshold: float,
               path: str | Path) -> Path:
    """Histogram of YES and NO max-cut values with the two decision thresholds."""
    fig, ax = _new("Max-cut values of reduced instances", "max-cut value", "trials")
    values = np.concatenate([np.asarray(yes_cut, float), np.asarray(no_cut, float)])
    bins = np.linspace(values.min() - 0.5, values.max() + 0.5, 30) if values.size else 10
    ax.hist(yes_cut, bins=bins, alpha=0.6, color=YES_COLOR, label="YES")
    ax.hist(no_cut, bins=bins, alpha=0.6, color=NO_COLOR, label="NO")
    ax.axvline(m0, color=YES_COLOR, ls="--", lw=1, label="m0")
    ax.axvline(threshold, color=NO_COLOR, ls=":", lw=1, label="m0/(2-eps)")
    ax.legend(frameon=False)
    return _save(fig, path)


def cut_figure(half: float, value: float, spectral: float, m: int, exact: bool, path: str | Path) -> Path:
    """The cut value between its trivial bounds and the spectral bound."""
    fig, ax = _new("Max-cut of one graph", "", "edges cut")
    labels = ["m/2", "max-cut" if exact else "local search", "spectral", "m"]
    ax.bar(labels, [half, value, spectral, m], color=["0.6", YES_COLOR, "0.4", "0.6"])
    return _save(fig, path)


def audit_figure(rows: Sequence[dict], path: str | Path) -> Path:
    """Log-margin (bound minus sum, natural log) against level, one series per sum and tuple."""
    fig, ax = _new("Audit margins", "level", "log bound - log sum")
    series: dict[str, list[tuple[float, float]]] = {}
    for r in rows:
        margin = r["margin"]
        if not math.isfinite(margin):
            continue
        key = f'{r["family"]} #{r["tuple"]}'
        series.setdefault(key, []).append((float(r["level"]), margin))
    for key in sorted(series):
        pts = sorted(series[key])
        xs, ys = zip(*pts)
        ax.plot(xs, np.sign(ys) * np.log10(1.0 + np.abs(ys)), marker=".", lw=0.8, label=key)
    ax.set_xscale("log")
    ax.set_ylabel("sign * log10(1 + |margin|)")
    ax.axhline(0.0, color="k", lw=0.8)
    if len(series) <= 12:
        ax.legend(frameon=False, fontsize=6, ncol=2)
    return _save(fig, path)


def spectrum_figure(levels: Sequence[int], l1: Sequence[float], log_bounds: Sequence[float],
                    path: str | Path) -> Path:
    """Even-weight l1 mass of a tilde spectrum against the level bound (log scale)."""
    fig, ax = _new("Tilde spectrum level mass", "level l (weight 2l)", "natural log")
    with np.errstate(divide="ignore"):
        ax.plot(levels, np.log(np.asarray(l1, float)), marker="o", label="log l1 mass")
    ax.plot(levels, log_bounds, marker="s", ls="--", label="log bound")
    ax.legend(frameon=False)
    return _save(fig, path)


def potential_figure(means: Sequence[float], ses: Sequence[float], path: str | Path) -> Path:
    """Mean forest potential after each round with standard errors."""
    fig, ax = _new("Forest potential", "round", "mean potential")
    rounds = np.arange(1, len(means) + 1)
    ax.errorbar(rounds, means, yerr=ses, marker="o", capsize=3)
    ax.set_yscale("log")
    return _save(fig, path)


def instance_figure(round_ones: Sequence[int], alpha_n: int, path: str | Path) -> Path:
    """Number of label-1 edges per round of a generated instance."""
    fig, ax = _new("Labels per round", "round", "edges labelled 1")
    rounds = np.arange(1, len(round_ones) + 1)
    ax.bar(rounds, round_ones, color="#4393c3")
    ax.axhline(alpha_n / 2.0, color="grey", ls="--", lw=1)
    return _save(fig, path)
