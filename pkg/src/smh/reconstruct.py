"""Relevance-driven target sampling and inverse spectral reconstruction of synthetic graphs."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from smh.boosting import TreeParams
from smh.errors import AllZeroWeights, EmptyGraph
from smh.graph import Graph, SpectralDecomposition, spectral_decompose
from smh.manifold import ManifoldModel, sample_spectra
from smh.relevance import (
    DensityEstimate,
    RelevanceFunction,
    build_relevance_extremes,
    kde_fit,
    sampling_weight,
)
from smh.spectral_map import EIGENVALUES, GFT, MODES, SpectralEmbedding, choose_k, embed, fit_spectrum_regressor

logger = logging.getLogger(__name__)

JITTER_MODES = ("none", "kde_bandwidth")
SCORE_SNAP = 1e-9


@dataclass(frozen=True)
class AugmentationConfig:
    sampling_fraction: float = 0.2
    binarization_cutoff: float = 0.52
    gamma: float = 1.0
    eps: float = 1e-6
    k: int = 32
    spectral_mode: str = EIGENVALUES
    master_seed: int = 0
    target_jitter: str = "kde_bandwidth"
    retry_budget: int = 10
    cov_ridge: Optional[float] = None
    n_estimators: int = 100
    learning_rate: float = 0.1
    max_depth: int = 3
    reg_lambda: float = 1.0
    threads: int = 1

    def __post_init__(self):
        if not 0 < self.sampling_fraction <= 1:
            raise ValueError("sampling_fraction must be in (0, 1]")
        if not 0 < self.binarization_cutoff < 1:
            raise ValueError("binarization_cutoff must be in (0, 1)")
        if not self.gamma > 0 or not self.eps > 0:
            raise ValueError("gamma and eps must be positive")
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.spectral_mode not in MODES:
            raise ValueError(f"spectral_mode must be one of {MODES}")
        if self.target_jitter not in JITTER_MODES:
            raise ValueError(f"target_jitter must be one of {JITTER_MODES}")
        if self.retry_budget < 0:
            raise ValueError("retry_budget must be non-negative")

    @property
    def tree_params(self) -> TreeParams:
        return TreeParams(self.n_estimators, self.learning_rate, self.max_depth, self.reg_lambda)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class SyntheticSample:
    graph: Graph
    target: float
    spectrum: SpectralEmbedding
    seed_graph_index: int

    def to_json(self) -> str:
        return json.dumps({
            "target": self.target,
            "seed_index": self.seed_graph_index,
            "nodes": list(self.graph.node_labels),
            "edges": [list(e) for e in self.graph.sorted_edges()],
        })


@dataclass
class FittedAugmenter:
    """Everything fitted on a training split that augmentation needs."""

    model: ManifoldModel
    relevance: RelevanceFunction
    density: DensityEstimate
    decompositions: list
    k: int
    config: AugmentationConfig = field(repr=False)


def sample_targets(weights_fn, train_targets, count: int, rng_seed, jitter_sd: float = 0.0) -> np.ndarray:
    """Draw ``count`` targets from the training targets with probability proportional to ``weights_fn``.

    Draws are with replacement; ``jitter_sd > 0`` adds Gaussian noise to each draw.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    y = np.asarray(train_targets, dtype=float)
    w = np.asarray(weights_fn(y), dtype=float)
    total = w.sum()
    if not total > 0:
        raise AllZeroWeights("every training target has zero sampling weight")
    rng = np.random.default_rng(rng_seed)
    idx = rng.choice(len(y), size=count, replace=True, p=w / total)
    out = y[idx]
    if jitter_sd > 0:
        out = out + rng.normal(0.0, jitter_sd, size=count)
    return out


def select_seed_graph(targets, y_new: float) -> int:
    """Index of the training target nearest to ``y_new`` (lowest index on ties)."""
    return int(np.argmin(np.abs(np.asarray(targets, dtype=float) - y_new)))


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def edge_scores(basis: SpectralDecomposition, spectrum: SpectralEmbedding) -> np.ndarray:
    """Sigmoid edge-score matrix for a sampled spectrum on the seed's eigenbasis."""
    U = basis.eigenvectors
    n = basis.n
    m = min(spectrum.k, n)
    s = np.asarray(spectrum.coefficients[:m], dtype=float)
    if spectrum.mode == GFT:
        x_hat = np.concatenate([s, np.zeros(n - m)])
        x = U @ x_hat
        raw = np.outer(x, x)
    else:
        lam = np.concatenate([s, basis.eigenvalues[m:]])
        L = (U * lam) @ U.T
        raw = np.eye(n) - L
    raw = 0.5 * (raw + raw.T)
    raw[np.abs(raw) < SCORE_SNAP] = 0.0
    return _sigmoid(raw)


def reconstruct_graph(basis: SpectralDecomposition, spectrum: SpectralEmbedding, cutoff: float,
                      labels, seed_id: Optional[int] = None) -> Graph:
    """Threshold the sigmoid scores into a graph; isolated nodes are dropped.

    A pair becomes an edge when its score is strictly above ``cutoff``.
    Raises :class:`EmptyGraph` when no pair survives.
    """
    A = edge_scores(basis, spectrum) > cutoff
    np.fill_diagonal(A, False)
    ii, jj = np.nonzero(np.triu(A, 1))
    if len(ii) == 0:
        raise EmptyGraph("no edge above the cutoff")
    keep = np.union1d(ii, jj)
    remap = {int(old): new for new, old in enumerate(keep)}
    edges = frozenset((remap[int(a)], remap[int(b)]) for a, b in zip(ii, jj))
    new_labels = tuple(labels[int(i)] for i in keep)
    return Graph(len(keep), edges, new_labels, "synthetic", seed_id)


def fit_augmenter(dataset, config: AugmentationConfig, relevance: RelevanceFunction | None = None) -> FittedAugmenter:
    """Fit relevance, KDE, spectrum regressor and manifold on ``dataset``."""
    targets = np.asarray(dataset.targets, dtype=float)
    relevance = relevance or build_relevance_extremes(targets)
    density = kde_fit(targets)
    decomps = [spectral_decompose(g) for g in dataset.graphs]
    k = choose_k([d.n for d in decomps], config.k)
    embeddings = [embed(d, k, config.spectral_mode) for d in decomps]
    regressor = fit_spectrum_regressor(targets, embeddings, relevance, config.tree_params,
                                       config.master_seed, config.threads)
    model = ManifoldModel.build(regressor, targets, embeddings, config.gamma, config.cov_ridge)
    return FittedAugmenter(model, relevance, density, decomps, k, config)


def requested_count(n: int, fraction: float) -> int:
    return int(round(fraction * n))


def augment(dataset, fitted: FittedAugmenter, config: AugmentationConfig | None = None) -> list:
    """Generate synthetic samples in high-relevance, low-density target regions.

    Sample ``i`` uses spectrum seed ``master_seed + i``; empty reconstructions are
    redrawn up to ``retry_budget`` times and then skipped.
    """
    config = config or fitted.config
    targets = np.asarray(dataset.targets, dtype=float)
    count = requested_count(len(targets), config.sampling_fraction)
    if count == 0:
        return []
    jitter = fitted.density.bandwidth if config.target_jitter == "kde_bandwidth" else 0.0

    def weights(y):
        return sampling_weight(fitted.relevance, fitted.density, y, config.eps)

    y_new = sample_targets(weights, targets, count, config.master_seed, jitter)
    means = fitted.model.regressor.predict_many(y_new)
    samples = []
    for i, y in enumerate(y_new):
        seed_idx = select_seed_graph(targets, y)
        basis = fitted.decompositions[seed_idx]
        labels = dataset[seed_idx].graph.node_labels
        draws = sample_spectra(fitted.model, float(y), config.retry_budget + 1,
                               config.master_seed + i, mu=means[i])
        for attempt, s in enumerate(draws):
            spectrum = SpectralEmbedding(s, fitted.k, fitted.model.mode)
            try:
                g = reconstruct_graph(basis, spectrum, config.binarization_cutoff, labels, seed_idx)
            except EmptyGraph:
                continue
            samples.append(SyntheticSample(g, float(y), spectrum, seed_idx))
            break
        else:
            logger.warning("sample %d: no edges survived after %d attempts; skipped", i, len(draws))
    return samples


def write_jsonl(samples, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s in samples:
            fh.write(s.to_json() + "\n")


def read_jsonl(path) -> list:
    """Read synthetic samples back as ``(graph, target, seed_index)`` tuples."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            obj = json.loads(line)
            g = Graph(len(obj["nodes"]), frozenset(tuple(e) for e in obj["edges"]), tuple(obj["nodes"]),
                      "synthetic", obj.get("seed_index"))
            out.append((g, float(obj["target"]), obj.get("seed_index")))
    return out
