"""Deterministic SVG figures (matplotlib is an optional dependency)."""

from __future__ import annotations

import logging

import numpy as np

logger = logging.getLogger(__name__)


def _pyplot():
    try:
        import matplotlib
    except ImportError:
        logger.warning("matplotlib is not installed; skipping SVG output")
        return None
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    # fixed id salt and no timestamp so repeated runs write identical bytes
    plt.rcParams["svg.hashsalt"] = "smh"
    plt.rcParams["svg.fonttype"] = "none"
    return plt


def _save(fig, plt, path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def relevance_svg(ys, phi, density, weight, path) -> bool:
    plt = _pyplot()
    if plt is None:
        return False
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(ys, phi, label="relevance")
    ax.plot(ys, density / max(np.max(density), 1e-300), label="density (scaled)")
    ax.plot(ys, weight / max(np.max(weight), 1e-300), label="sampling weight (scaled)")
    ax.set_xlabel("target")
    ax.legend(loc="best")
    fig.tight_layout()
    _save(fig, plt, path)
    return True


def per_bin_svg(report: dict, path) -> bool:
    """Bar chart of baseline minus augmented MSE per target bin, averaged over folds."""
    plt = _pyplot()
    if plt is None:
        return False
    edges = report["bin_edges"]
    diffs = []
    for b in range(len(edges) - 1):
        vals = [f["baseline"]["per_bin"][b][2] - f["smh"]["per_bin"][b][2]
                for f in report["fold_results"] if f["baseline"]["per_bin"][b][3]]
        diffs.append(float(np.mean(vals)) if vals else 0.0)
    centers = [(edges[b] + edges[b + 1]) / 2 for b in range(len(edges) - 1)]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(centers, diffs, width=(edges[1] - edges[0]) * 0.9)
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.set_xlabel("target bin")
    ax.set_ylabel("MSE improvement")
    fig.tight_layout()
    _save(fig, plt, path)
    return True
