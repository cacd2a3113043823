"""Relevance function, Gaussian KDE of the targets, and the combined sampling weight."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from smh.errors import DegenerateTargets

logger = logging.getLogger(__name__)

SQRT_2PI = math.sqrt(2.0 * math.pi)
MIN_BANDWIDTH = 1e-6


@dataclass(frozen=True)
class RelevanceFunction:
    """Monotone piecewise-cubic Hermite interpolant through ``(y, phi, slope)`` control points.

    Outside the control range the value is held at the nearest endpoint.
    """

    xs: tuple
    values: tuple
    slopes: tuple

    def __post_init__(self):
        if len(self.xs) < 2 or len(self.xs) != len(self.values) or len(self.xs) != len(self.slopes):
            raise ValueError("need at least two control points with matching values and slopes")
        if any(b <= a for a, b in zip(self.xs, self.xs[1:])):
            raise ValueError("control point positions must be strictly increasing")

    @property
    def control_points(self):
        return list(zip(self.xs, self.values, self.slopes))

    def __call__(self, y):
        return relevance_eval(self, y)

    def to_dict(self):
        return {"xs": list(self.xs), "values": list(self.values), "slopes": list(self.slopes)}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["xs"]), tuple(d["values"]), tuple(d["slopes"]))


def fritsch_carlson_slopes(xs: Sequence[float], ys: Sequence[float]) -> list:
    """Node slopes that keep every Hermite segment monotone."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    h = np.diff(xs)
    delta = np.diff(ys) / h
    m = np.empty(len(xs))
    m[0] = delta[0]
    m[-1] = delta[-1]
    for i in range(1, len(xs) - 1):
        if np.sign(delta[i - 1]) * np.sign(delta[i]) <= 0:
            m[i] = 0.0
        else:
            m[i] = 0.5 * (delta[i - 1] + delta[i])
    for i, d in enumerate(delta):
        if d == 0:
            m[i] = m[i + 1] = 0.0
            continue
        a, b = m[i] / d, m[i + 1] / d
        s = a * a + b * b
        if s > 9.0:
            tau = 3.0 / math.sqrt(s)
            m[i] = tau * a * d
            m[i + 1] = tau * b * d
    return m.tolist()


def relevance_from_control_points(xs, values) -> RelevanceFunction:
    xs = [float(x) for x in xs]
    values = [float(v) for v in values]
    return RelevanceFunction(tuple(xs), tuple(values), tuple(fritsch_carlson_slopes(xs, values)))


def build_relevance_extremes(targets) -> RelevanceFunction:
    """Relevance 1 at the minimum target, 0.025 at the mean and 0 at the maximum."""
    y = np.asarray(targets, dtype=float)
    lo, hi = float(y.min()), float(y.max())
    if lo == hi:
        raise DegenerateTargets("all targets are equal")
    mean = float(y.mean())
    return relevance_from_control_points([lo, mean, hi], [1.0, 0.025, 0.0])


def relevance_eval(f: RelevanceFunction, y):
    scalar = np.ndim(y) == 0
    y = np.atleast_1d(np.asarray(y, dtype=float))
    xs = np.asarray(f.xs)
    vs = np.asarray(f.values)
    ms = np.asarray(f.slopes)
    out = np.empty_like(y)
    out[y <= xs[0]] = vs[0]
    out[y >= xs[-1]] = vs[-1]
    inside = (y > xs[0]) & (y < xs[-1])
    if inside.any():
        yi = y[inside]
        seg = np.clip(np.searchsorted(xs, yi, side="right") - 1, 0, len(xs) - 2)
        x0, x1 = xs[seg], xs[seg + 1]
        h = x1 - x0
        t = (yi - x0) / h
        t2, t3 = t * t, t * t * t
        val = (
            (2 * t3 - 3 * t2 + 1) * vs[seg]
            + (t3 - 2 * t2 + t) * h * ms[seg]
            + (-2 * t3 + 3 * t2) * vs[seg + 1]
            + (t3 - t2) * h * ms[seg + 1]
        )
        # control points are hit exactly, not up to rounding
        val = np.where(yi == x0, vs[seg], val)
        out[inside] = val
    out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class DensityEstimate:
    sample_targets: np.ndarray
    bandwidth: float

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")

    def __call__(self, y):
        return kde_eval(self, y)


def silverman_bandwidth(targets) -> float:
    y = np.asarray(targets, dtype=float)
    n = len(y)
    sigma = float(np.std(y, ddof=1)) if n > 1 else 0.0
    q75, q25 = np.percentile(y, [75, 25])
    iqr = float(q75 - q25) / 1.34
    spread = min(sigma, iqr) if iqr > 0 else sigma
    return 0.9 * spread * n ** (-0.2)


def kde_fit(targets, bandwidth: float | None = None) -> DensityEstimate:
    """Gaussian KDE with Silverman's rule-of-thumb bandwidth (floored at 1e-6)."""
    y = np.asarray(targets, dtype=float)
    if len(y) < 1 or not np.all(np.isfinite(y)):
        raise ValueError("targets must be a non-empty finite vector")
    if bandwidth is None:
        if len(y) < 2:
            raise ValueError("Silverman's rule needs at least two targets")
        bandwidth = silverman_bandwidth(y)
        if bandwidth < MIN_BANDWIDTH:
            logger.warning("degenerate targets: bandwidth floored at %g", MIN_BANDWIDTH)
            bandwidth = MIN_BANDWIDTH
    return DensityEstimate(y.copy(), float(bandwidth))


def kde_eval(d: DensityEstimate, y):
    scalar = np.ndim(y) == 0
    y = np.atleast_1d(np.asarray(y, dtype=float))
    u = (y[:, None] - d.sample_targets[None, :]) / d.bandwidth
    p = np.exp(-0.5 * u * u).sum(axis=1) / (SQRT_2PI * len(d.sample_targets) * d.bandwidth)
    return float(p[0]) if scalar else p


def sampling_weight(f: RelevanceFunction, d: DensityEstimate, y, eps: float = 1e-6):
    """``phi(y) / (p(y) + eps)``: large where relevance is high and data are sparse."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    return relevance_eval(f, y) * (1.0 / (kde_eval(d, y) + eps))
