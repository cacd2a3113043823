"""Conditional Gaussian over spectral coefficients: mean from the regressor, kernel-weighted covariance."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from smh.errors import CholeskyFailure, DimensionMismatch
from smh.spectral_map import SpectralEmbedding, SpectrumRegressor, project_spectrum

RIDGE_SCALE = 1e-6
RIDGE_FLOOR = 1e-9
RIDGE_ESCALATIONS = 4


@dataclass(frozen=True)
class ManifoldModel:
    regressor: SpectrumRegressor
    training_targets: np.ndarray
    training_embeddings: np.ndarray  # (N, k)
    gamma: float = 1.0
    cov_ridge: Optional[float] = None  # None: 1e-6 * trace / k per query, floored at 1e-9

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.cov_ridge is not None and not self.cov_ridge > 0:
            raise ValueError("cov_ridge must be positive")
        y = np.asarray(self.training_targets, dtype=float)
        S = np.asarray(self.training_embeddings, dtype=float)
        if len(y) == 0 or S.ndim != 2 or len(S) != len(y):
            raise DimensionMismatch("training targets and embeddings must be non-empty and aligned")
        if S.shape[1] != self.regressor.k:
            raise DimensionMismatch("embedding width does not match the regressor")
        object.__setattr__(self, "training_targets", y)
        object.__setattr__(self, "training_embeddings", S)

    @classmethod
    def build(cls, regressor, targets, embeddings, gamma=1.0, cov_ridge=None):
        S = np.array([e.coefficients if isinstance(e, SpectralEmbedding) else e for e in embeddings])
        return cls(regressor, np.asarray(targets, dtype=float), S, gamma, cov_ridge)

    @property
    def k(self) -> int:
        return self.regressor.k

    @property
    def mode(self) -> str:
        return self.regressor.mode


def kernel_weights(m: ManifoldModel, y: float) -> np.ndarray:
    """Normalized Gaussian-kernel similarities ``exp(-gamma (y - y_i)^2)`` to the training targets.

    If every kernel underflows, all weight goes to the nearest target (lowest index on ties).
    """
    d2 = (y - m.training_targets) ** 2
    K = np.exp(-m.gamma * d2)
    total = K.sum()
    if total == 0.0 or not np.isfinite(total):
        w = np.zeros_like(K)
        w[int(np.argmin(d2))] = 1.0
        return w
    return K / total


def conditional_mean(m: ManifoldModel, y: float) -> np.ndarray:
    return m.regressor.predict_many([y])[0]


def _scatter(m: ManifoldModel, y: float, mu: np.ndarray) -> np.ndarray:
    w = kernel_weights(m, y)
    D = m.training_embeddings - mu
    C = (D * w[:, None]).T @ D
    return 0.5 * (C + C.T)


def ridge_for(m: ManifoldModel, scatter: np.ndarray) -> float:
    if m.cov_ridge is not None:
        return m.cov_ridge
    return max(RIDGE_SCALE * float(np.trace(scatter)) / m.k, RIDGE_FLOOR)


def conditional_covariance(m: ManifoldModel, y: float) -> np.ndarray:
    mu = conditional_mean(m, y)
    C = _scatter(m, y, mu)
    return C + ridge_for(m, C) * np.eye(m.k)


def _cholesky(m: ManifoldModel, C: np.ndarray) -> np.ndarray:
    ridge = ridge_for(m, C)
    for attempt in range(RIDGE_ESCALATIONS + 1):
        try:
            return np.linalg.cholesky(C + ridge * np.eye(m.k))
        except np.linalg.LinAlgError:
            ridge *= 10.0
    raise CholeskyFailure(f"covariance not positive definite after {RIDGE_ESCALATIONS} ridge escalations")


def sample_spectra(m: ManifoldModel, y: float, count: int, rng_seed: int, project: bool = True,
                   mu: Optional[np.ndarray] = None) -> np.ndarray:
    """``count`` draws from N(mu(y), Sigma(y)), shape ``(count, k)``.

    In eigenvalue mode each draw is clamped to [0, 2] and sorted unless ``project`` is false.
    A precomputed ``mu`` (from a batched ``predict_many``) skips the regressor call.
    """
    if mu is None:
        mu = conditional_mean(m, y)
    L = _cholesky(m, _scatter(m, y, mu))
    z = np.random.default_rng(rng_seed).standard_normal((count, m.k))
    draws = mu + z @ L.T
    return project_spectrum(draws, m.mode) if project else draws


def sample_spectrum(m: ManifoldModel, y: float, rng_seed: int) -> SpectralEmbedding:
    return SpectralEmbedding(sample_spectra(m, y, 1, rng_seed)[0], m.k, m.mode)
