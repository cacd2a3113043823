"""Imbalanced-regression metrics, structural statistics and graph feature vectors."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from smh.errors import DegenerateTargets, EmptyCollection, LengthMismatch
from smh.graph import Graph, spectral_decompose
from smh.relevance import RelevanceFunction, relevance_eval

SERA_GRID = 1001


def sera_from_errors(sq_errors, phis, grid_size: int = SERA_GRID) -> float:
    """Trapezoidal area under ``t -> sum(err_i for phi_i >= t)`` on a uniform grid over [0, 1]."""
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    err = np.asarray(sq_errors, dtype=float)
    phi = np.asarray(phis, dtype=float)
    ts = np.linspace(0.0, 1.0, grid_size)
    # SER_t by sorting relevance once: suffix sums of errors ordered by phi
    order = np.argsort(phi, kind="stable")
    phi_sorted = phi[order]
    suffix = np.concatenate([np.cumsum(err[order][::-1])[::-1], [0.0]])
    first = np.searchsorted(phi_sorted, ts, side="left")
    ser = suffix[first]
    return float(np.sum((ser[1:] + ser[:-1]) * np.diff(ts)) / 2)


def sera(y_true, y_pred, relevance: RelevanceFunction, grid_size: int = SERA_GRID) -> float:
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if y_true.shape != y_pred.shape or y_true.ndim != 1 or len(y_true) < 1:
        raise LengthMismatch("y_true and y_pred must be equal-length non-empty vectors")
    return sera_from_errors((y_pred - y_true) ** 2, relevance_eval(relevance, y_true), grid_size)


def ser_curve(y_true, y_pred, relevance, grid_size: int = SERA_GRID):
    y_true = np.asarray(y_true, dtype=float)
    err = (np.asarray(y_pred, dtype=float) - y_true) ** 2
    phi = relevance_eval(relevance, y_true)
    ts = np.linspace(0.0, 1.0, grid_size)
    return ts, np.array([err[phi >= t].sum() for t in ts])


def standard_metrics(y_true, y_pred):
    """``(mae, rmse, r2)``."""
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if y_true.shape != y_pred.shape or len(y_true) < 1:
        raise LengthMismatch("y_true and y_pred must be equal-length non-empty vectors")
    resid = y_pred - y_true
    mae = float(np.mean(np.abs(resid)))
    rmse = float(np.sqrt(np.mean(resid ** 2)))
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    if len(y_true) < 2 or ss_tot == 0:
        raise DegenerateTargets("r2 undefined for constant targets")
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot
    return mae, rmse, r2


def bin_edges(lo: float, hi: float, bins: int = 10) -> np.ndarray:
    return np.linspace(lo, hi, bins + 1)


def per_bin_errors(y_true, y_pred, edges):
    """``(lo, hi, mse, count)`` per bin; the last bin is closed on the right. Empty bins get mse None."""
    y_true = np.asarray(y_true, dtype=float)
    err = (np.asarray(y_pred, dtype=float) - y_true) ** 2
    idx = np.clip(np.searchsorted(edges, y_true, side="right") - 1, 0, len(edges) - 2)
    out = []
    for b in range(len(edges) - 1):
        m = idx == b
        mse = float(err[m].mean()) if m.any() else None
        out.append((float(edges[b]), float(edges[b + 1]), mse, int(m.sum())))
    return out


@dataclass
class MetricReport:
    sera: float
    mae: float
    rmse: float
    r2: float
    per_bin: list

    def to_dict(self):
        return asdict(self)


def metric_report(y_true, y_pred, relevance, edges) -> MetricReport:
    mae, rmse, r2 = standard_metrics(y_true, y_pred)
    return MetricReport(sera(y_true, y_pred, relevance), mae, rmse, r2,
                        [list(b) for b in per_bin_errors(y_true, y_pred, edges)])


@dataclass
class StructuralStats:
    node_mean: float
    node_std: float
    edge_mean: float
    edge_std: float
    density_mean: float
    density_std: float
    count: int

    def to_dict(self):
        return asdict(self)


def density(g: Graph) -> float:
    n = g.node_count
    return 2.0 * g.edge_count / (n * (n - 1))


def structural_stats(graphs) -> StructuralStats:
    """Population mean/std of node count, edge count and density (single-node graphs skip density)."""
    graphs = list(graphs)
    if not graphs:
        raise EmptyCollection("no graphs")
    nodes = np.array([g.node_count for g in graphs], dtype=float)
    edges = np.array([g.edge_count for g in graphs], dtype=float)
    dens = np.array([density(g) for g in graphs if g.node_count > 1], dtype=float)
    if len(dens) == 0:
        dens = np.zeros(1)
    return StructuralStats(
        float(nodes.mean()), float(nodes.std()),
        float(edges.mean()), float(edges.std()),
        float(dens.mean()), float(dens.std()),
        len(graphs),
    )


def graph_features(g: Graph, k: int) -> np.ndarray:
    """[nodes, edges, density, mean degree, degree std, k smallest normalized-Laplacian eigenvalues]."""
    deg = g.degrees().astype(float)
    head = [g.node_count, g.edge_count, density(g) if g.node_count > 1 else 0.0, deg.mean(), deg.std()]
    lam = np.zeros(k)
    ev = spectral_decompose(g).eigenvalues
    m = min(k, len(ev))
    lam[:m] = ev[:m]
    return np.concatenate([np.asarray(head, dtype=float), lam])
