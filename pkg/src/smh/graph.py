"""Graph container, normalized Laplacian, Jacobi eigensolver and the graph Fourier transform."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numba
import numpy as np

from smh.errors import ConvergenceFailure, DimensionMismatch, IsolatedNode

JACOBI_TOL = 1e-10
JACOBI_MAX_SWEEPS = 100


@dataclass(frozen=True)
class Graph:
    """Undirected, unweighted graph with one atom label per node.

    Edges are stored once as ``(i, j)`` with ``i < j``.
    """

    node_count: int
    edges: frozenset
    node_labels: tuple
    provenance: str = "original"
    seed_id: Optional[int] = None

    def __post_init__(self):
        if self.node_count < 1:
            raise ValueError("node_count must be positive")
        norm = set()
        for a, b in self.edges:
            a, b = int(a), int(b)
            if a == b:
                raise ValueError(f"self-loop on node {a}")
            if not (0 <= a < self.node_count and 0 <= b < self.node_count):
                raise ValueError(f"edge ({a}, {b}) out of range")
            norm.add((min(a, b), max(a, b)))
        object.__setattr__(self, "edges", frozenset(norm))
        object.__setattr__(self, "node_labels", tuple(self.node_labels))
        if len(self.node_labels) != self.node_count:
            raise ValueError("node_labels must have one entry per node")
        if self.provenance not in ("original", "synthetic"):
            raise ValueError(f"unknown provenance {self.provenance!r}")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable, labels=None, **kw) -> "Graph":
        if labels is None:
            labels = ("C",) * n
        return cls(n, frozenset(tuple(e) for e in edges), tuple(labels), **kw)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def sorted_edges(self) -> list:
        return sorted(self.edges)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.node_count, dtype=np.int64)
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        return deg

    def components(self) -> list:
        """Connected components as sorted node lists, ordered by smallest member."""
        parent = list(range(self.node_count))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for a, b in self.edges:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
        groups: dict = {}
        for i in range(self.node_count):
            groups.setdefault(find(i), []).append(i)
        return sorted(groups.values(), key=lambda c: c[0])

    def subgraph(self, nodes: Iterable[int]) -> "Graph":
        """Induced subgraph on ``nodes``, re-indexed in ascending node order."""
        keep = sorted(set(nodes))
        remap = {old: new for new, old in enumerate(keep)}
        edges = [(remap[a], remap[b]) for a, b in self.edges if a in remap and b in remap]
        labels = [self.node_labels[i] for i in keep]
        return Graph(len(keep), frozenset(edges), tuple(labels), self.provenance, self.seed_id)


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    signal: np.ndarray
    gft_coefficients: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.eigenvalues)


def build_adjacency(g: Graph) -> np.ndarray:
    A = np.zeros((g.node_count, g.node_count))
    for a, b in g.edges:
        A[a, b] = 1.0
        A[b, a] = 1.0
    return A


def normalized_laplacian(g: Graph) -> np.ndarray:
    """``I - D^{-1/2} A D^{-1/2}``; raises :class:`IsolatedNode` on zero-degree nodes."""
    A = build_adjacency(g)
    deg = A.sum(axis=1)
    if np.any(deg == 0):
        idx = int(np.flatnonzero(deg == 0)[0])
        raise IsolatedNode(f"node {idx} has degree 0")
    inv_sqrt = 1.0 / np.sqrt(deg)
    L = np.eye(g.node_count) - inv_sqrt[:, None] * A * inv_sqrt[None, :]
    return 0.5 * (L + L.T)


@numba.njit(cache=True)
def _jacobi_sweeps(a, v, tol, max_sweeps):
    n = a.shape[0]
    for sweep in range(max_sweeps + 1):
        off = 0.0
        for p in range(n):
            for q in range(n):
                if p != q:
                    off += a[p, q] * a[p, q]
        if np.sqrt(off) < tol:
            return sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if theta >= 0:
                    t = 1.0 / (theta + np.sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    return -1


def jacobi_eigh(M: np.ndarray, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Eigen-decompose a dense symmetric matrix with cyclic Jacobi rotations.

    Returns ascending eigenvalues and the matching orthonormal eigenvectors (columns).
    Each eigenvector is sign-fixed so its largest-magnitude entry is positive
    (first such entry on ties).
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {M.shape}")
    a = np.array(0.5 * (M + M.T), dtype=np.float64, order="C")
    v = np.eye(a.shape[0])
    if _jacobi_sweeps(a, v, tol, max_sweeps) < 0:
        raise ConvergenceFailure(f"Jacobi did not converge within {max_sweeps} sweeps")
    vals = np.diag(a).copy()
    order = np.argsort(vals, kind="stable")
    vals = vals[order]
    vecs = v[:, order]
    pivots = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[pivots, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vals, vecs * signs


def default_signal(g: Graph) -> np.ndarray:
    """Degree vector scaled to unit Euclidean norm."""
    deg = g.degrees().astype(float)
    norm = np.linalg.norm(deg)
    return deg / norm if norm > 0 else deg


SignalFn = Callable[[Graph], np.ndarray]


def spectral_decompose(g: Graph, signal: Optional[np.ndarray] = None) -> SpectralDecomposition:
    L = normalized_laplacian(g)
    if signal is None:
        signal = default_signal(g)
    signal = np.asarray(signal, dtype=float)
    if signal.shape != (g.node_count,):
        raise DimensionMismatch(f"signal length {signal.shape} != node count {g.node_count}")
    vals, vecs = jacobi_eigh(L)
    return SpectralDecomposition(vals, vecs, signal, vecs.T @ signal)


def gft(basis: np.ndarray, signal: np.ndarray) -> np.ndarray:
    basis = np.asarray(basis)
    signal = np.asarray(signal, dtype=float)
    if signal.shape != (basis.shape[0],):
        raise DimensionMismatch(f"signal length {len(signal)} != basis dimension {basis.shape[0]}")
    return basis.T @ signal


def inverse_gft(basis: np.ndarray, coefficients: np.ndarray) -> np.ndarray:
    """``U @ x_hat``; shorter coefficient vectors are zero-padded to the basis size."""
    basis = np.asarray(basis)
    coefficients = np.asarray(coefficients, dtype=float).ravel()
    n = basis.shape[1]
    if len(coefficients) > n:
        raise DimensionMismatch(f"{len(coefficients)} coefficients for a basis of size {n}")
    if len(coefficients) < n:
        coefficients = np.concatenate([coefficients, np.zeros(n - len(coefficients))])
    return basis @ coefficients
