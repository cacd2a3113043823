"""Fixed-length spectral embeddings and the relevance-weighted target-to-spectrum regressor."""

from __future__ import annotations

import itertools
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from smh.boosting import PARAM_GRID, BoostedTrees, TreeParams, fit_boosted
from smh.errors import DimensionMismatch, InsufficientData, NonFiniteTarget
from smh.graph import SpectralDecomposition
from smh.relevance import RelevanceFunction, relevance_eval

EIGENVALUES = "eigenvalues"
GFT = "gft"
MODES = (EIGENVALUES, GFT)
MODEL_MAGIC = "SMHM1"
DEFAULT_K = 32


@dataclass(frozen=True)
class SpectralEmbedding:
    coefficients: np.ndarray
    true_dimension: int
    mode: str = EIGENVALUES

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown spectral mode {self.mode!r}")

    @property
    def k(self) -> int:
        return len(self.coefficients)


def embed(decomp: SpectralDecomposition, k: int, mode: str = EIGENVALUES) -> SpectralEmbedding:
    """First ``k`` eigenvalues (or GFT coefficients, in eigenvalue order), zero-padded."""
    if k < 1:
        raise ValueError("k must be at least 1")
    source = decomp.eigenvalues if mode == EIGENVALUES else decomp.gft_coefficients
    if mode not in MODES:
        raise ValueError(f"unknown spectral mode {mode!r}")
    out = np.zeros(k)
    m = min(k, len(source))
    out[:m] = source[:m]
    return SpectralEmbedding(out, m, mode)


def choose_k(node_counts, k: int = DEFAULT_K) -> int:
    """Requested ``k`` capped at the smallest graph size."""
    return max(1, min(k, min(node_counts)))


def project_spectrum(s: np.ndarray, mode: str) -> np.ndarray:
    """Clamp to [0, 2] and sort ascending in eigenvalue mode; identity otherwise."""
    if mode != EIGENVALUES:
        return s
    return np.sort(np.clip(s, 0.0, 2.0), axis=-1)


@dataclass
class SpectrumRegressor:
    """One boosted ensemble per embedding coordinate, mapping a target to a spectrum."""

    models: list
    mode: str
    params: TreeParams
    seed: int = 0
    loss_history: list = field(default_factory=list)
    final_loss: float = 0.0

    @property
    def k(self) -> int:
        return len(self.models)

    @property
    def alpha(self) -> float:
        return self.params.reg_lambda

    def predict_raw(self, ys) -> np.ndarray:
        ys = np.atleast_1d(np.asarray(ys, dtype=float))
        return np.column_stack([m.predict(ys) for m in self.models])

    def predict_many(self, ys) -> np.ndarray:
        return project_spectrum(self.predict_raw(ys), self.mode)

    def to_dict(self) -> dict:
        return {
            "magic": MODEL_MAGIC,
            "k": self.k,
            "mode": self.mode,
            "seed": self.seed,
            "params": self.params.__dict__,
            "final_loss": self.final_loss,
            "loss_history": list(self.loss_history),
            "models": [m.to_dict() for m in self.models],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SpectrumRegressor":
        if d.get("magic") != MODEL_MAGIC:
            raise ValueError("not an SMHM1 model file")
        models = [BoostedTrees.from_dict(m) for m in d["models"]]
        if len(models) != d["k"]:
            raise ValueError("model file is inconsistent: k does not match ensemble count")
        return cls(models, d["mode"], TreeParams(**d["params"]), d["seed"],
                   list(d["loss_history"]), d["final_loss"])


def _stack(embeddings) -> np.ndarray:
    S = np.array([e.coefficients for e in embeddings], dtype=float)
    if S.ndim != 2:
        raise DimensionMismatch("embeddings must share one length k")
    return S


def fit_spectrum_regressor(
    targets,
    embeddings,
    relevance: RelevanceFunction,
    params: TreeParams = TreeParams(),
    seed: int = 0,
    threads: int = 1,
    weights=None,
) -> SpectrumRegressor:
    """Fit ``y -> s`` minimizing the relevance-weighted squared error.

    Sample weights are ``phi(y_i)`` rescaled to mean 1; ``weights`` overrides them
    (used to compare against uniform fits). ``params.reg_lambda`` is the leaf L2
    penalty standing in for the parameter-norm regularizer.
    """
    y = np.asarray(targets, dtype=float)
    if len(y) < 2:
        raise InsufficientData("need at least two samples")
    if not np.all(np.isfinite(y)):
        raise NonFiniteTarget("targets must be finite")
    if len(embeddings) != len(y):
        raise DimensionMismatch("targets and embeddings differ in length")
    S = _stack(embeddings)
    mode = embeddings[0].mode
    phi = relevance_eval(relevance, y) if weights is None else np.asarray(weights, dtype=float)
    if phi.sum() <= 0:
        raise InsufficientData("all sample weights are zero")
    w = phi / phi.mean()

    def fit_dim(j):
        return fit_boosted(y, S[:, j], w, params)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            models = list(pool.map(fit_dim, range(S.shape[1])))
    else:
        models = [fit_dim(j) for j in range(S.shape[1])]
    # per-tree losses use the normalized weights; rescale to the raw phi weighting
    scale = float(phi.mean())
    history = (scale * np.sum([m.loss_history for m in models], axis=0)).tolist()
    penalty = params.reg_lambda * sum(m.penalty() for m in models)
    return SpectrumRegressor(models, mode, params, seed, history, history[-1] + penalty)


def predict_spectrum(r: SpectrumRegressor, y: float) -> SpectralEmbedding:
    return SpectralEmbedding(r.predict_many([y])[0], r.k, r.mode)


def weighted_loss(r: SpectrumRegressor, targets, embeddings, relevance) -> float:
    """Relevance-weighted data term ``mean(phi * ||s - f(y)||^2)`` on raw predictions."""
    y = np.asarray(targets, dtype=float)
    S = _stack(embeddings)
    err = ((S - r.predict_raw(y)) ** 2).sum(axis=1)
    return float(np.mean(relevance_eval(relevance, y) * err))


def spectral_sera(r: SpectrumRegressor, targets, embeddings, relevance, grid_size: int = 1001) -> float:
    """SERA with the squared error replaced by the spectral error ``||s - mu(y)||^2``."""
    from smh.metrics import sera_from_errors

    y = np.asarray(targets, dtype=float)
    S = _stack(embeddings)
    err = ((S - r.predict_many(y)) ** 2).sum(axis=1)
    return sera_from_errors(err, relevance_eval(relevance, y), grid_size)


def grid_search(
    train_targets,
    train_embeddings,
    val_targets,
    val_embeddings,
    relevance: RelevanceFunction,
    grid: dict = PARAM_GRID,
    reg_lambda: float = 1.0,
    seed: int = 0,
):
    """Pick the hyperparameters with the lowest validation spectral SERA.

    Returns ``(best_params, scores)`` where ``scores`` lists ``(params, sera)`` in grid order.
    """
    scores = []
    keys = ("n_estimators", "learning_rate", "max_depth")
    for combo in itertools.product(*(grid[k] for k in keys)):
        params = TreeParams(**dict(zip(keys, combo)), reg_lambda=reg_lambda)
        model = fit_spectrum_regressor(train_targets, train_embeddings, relevance, params, seed)
        scores.append((params, spectral_sera(model, val_targets, val_embeddings, relevance)))
    best = min(scores, key=lambda item: item[1])[0]
    return best, scores


def save_model(r: SpectrumRegressor, path) -> None:
    Path(path).write_text(json.dumps(r.to_dict()), encoding="utf-8")


def load_model(path) -> SpectrumRegressor:
    return SpectrumRegressor.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
