"""Pairwise fusion-weight graphs over observed transition-probability rows.

Supported schemes: uniform all-pairs weights, and k-nearest-neighbor graphs
(union semantics: an edge exists if either endpoint is among the other's k
nearest) carrying a Gaussian kernel exp(-phi * dist^2) or an exponential
kernel exp(-phi * dist) on the chosen row distance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DegenerateInput
from .markov import EmpiricalTransitions

_METRICS = {"l2": "euclidean", "l1": "cityblock", "linf": "chebyshev"}
_KERNELS = ("gaussian", "exponential")


@dataclass(frozen=True)
class WeightScheme:
    """Recipe for building a weight graph.

    kind "uniform" ignores the remaining fields; "knn_kernel" applies the
    kernel to the distances along the union k-nearest-neighbor edges.
    """

    kind: str = "knn_kernel"
    distance: str = "l2"
    kernel: str = "gaussian"
    phi: float = 100.0
    k: int = 3

    def __post_init__(self):
        if self.kind not in ("uniform", "knn_kernel"):
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.kind == "knn_kernel":
            if self.distance not in _METRICS:
                raise ValueError(f"unknown distance {self.distance!r}")
            if self.kernel not in _KERNELS:
                raise ValueError(f"unknown kernel {self.kernel!r}")
            if not self.phi > 0:
                raise ValueError("phi must be positive")
            if self.k < 1:
                raise ValueError("k must be at least 1")

    def label(self) -> str:
        if self.kind == "uniform":
            return "uniform"
        return f"knn{self.k}_{self.distance}_{self.kernel}_phi{self.phi:g}"


@dataclass(frozen=True)
class WeightGraph:
    """Sparse symmetric positive weights w_l on undirected edges l = (l1, l2), l1 < l2."""

    l1: np.ndarray  # (E,) int64
    l2: np.ndarray  # (E,) int64
    w: np.ndarray  # (E,) float64, all > 0
    node_count: int

    def __post_init__(self):
        object.__setattr__(self, "l1", np.asarray(self.l1, dtype=np.int64))
        object.__setattr__(self, "l2", np.asarray(self.l2, dtype=np.int64))
        object.__setattr__(self, "w", np.asarray(self.w, dtype=np.float64))
        if np.any(self.l1 >= self.l2):
            raise ValueError("edges must satisfy l1 < l2")
        if np.any(self.w <= 0):
            raise ValueError("zero-weight pairs must be omitted, not stored")
        keys = self.l1 * self.node_count + self.l2
        if np.unique(keys).size != keys.size:
            raise ValueError("duplicate edges")

    @property
    def edge_count(self) -> int:
        return int(self.w.size)

    def edges(self) -> list[tuple[int, int, float]]:
        return [(int(a), int(b), float(c)) for a, b, c in zip(self.l1, self.l2, self.w)]

    def to_dense(self) -> np.ndarray:
        """Symmetric dense weight matrix with zero diagonal."""
        mat = np.zeros((self.node_count, self.node_count))
        mat[self.l1, self.l2] = self.w
        mat[self.l2, self.l1] = self.w
        return mat

    @classmethod
    def from_dense(cls, mat: np.ndarray) -> "WeightGraph":
        mat = np.asarray(mat, dtype=np.float64)
        if mat.shape[0] != mat.shape[1] or not np.allclose(mat, mat.T):
            raise ValueError("weight matrix must be square and symmetric")
        iu, ju = np.triu_indices(mat.shape[0], k=1)
        keep = mat[iu, ju] > 0
        return cls(iu[keep], ju[keep], mat[iu, ju][keep], mat.shape[0])


def _rows(pihat: Union[EmpiricalTransitions, np.ndarray]) -> np.ndarray:
    if isinstance(pihat, EmpiricalTransitions):
        _, rows = pihat.observed_rows()
        return rows
    return np.asarray(pihat, dtype=np.float64)


def pairwise_distances(pihat: Union[EmpiricalTransitions, np.ndarray], metric: str = "l2") -> np.ndarray:
    """Symmetric distance matrix between observed probability rows."""
    if metric not in _METRICS:
        raise ValueError(f"unknown distance {metric!r}")
    rows = _rows(pihat)
    dist = cdist(rows, rows, metric=_METRICS[metric])
    np.fill_diagonal(dist, 0.0)
    return dist


def knn_edges(dist: np.ndarray, k: int) -> list[tuple[int, int]]:
    """Union k-nearest-neighbor edge set.

    Edge (i, j) is included iff i is among j's k nearest or j among i's k
    nearest.  Distance ties are broken toward the lower index so the graph
    is deterministic.
    """
    n = dist.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"k must be in [1, {n - 1}], got {k}")
    pairs: set[tuple[int, int]] = set()
    idx = np.arange(n)
    for i in range(n):
        order = np.lexsort((idx, dist[i]))
        order = order[order != i][:k]
        for j in order:
            pairs.add((min(i, int(j)), max(i, int(j))))
    return sorted(pairs)


def compute_weights(pihat: Union[EmpiricalTransitions, np.ndarray], scheme: WeightScheme) -> WeightGraph:
    """Build the fusion-weight graph for the given scheme.

    Raises
    ------
    DegenerateInput
        When fewer than two observed rows exist.
    """
    rows = _rows(pihat)
    n = rows.shape[0]
    if n < 2:
        raise DegenerateInput(f"need at least 2 observed contexts, got {n}")
    if scheme.kind == "uniform":
        iu, ju = np.triu_indices(n, k=1)
        return WeightGraph(iu, ju, np.ones(iu.size), n)
    dist = pairwise_distances(rows, scheme.distance)
    pairs = knn_edges(dist, scheme.k)
    l1 = np.array([a for a, _ in pairs], dtype=np.int64)
    l2 = np.array([b for _, b in pairs], dtype=np.int64)
    dvals = dist[l1, l2]
    if scheme.kernel == "gaussian":
        w = np.exp(-scheme.phi * dvals**2)
    else:
        w = np.exp(-scheme.phi * dvals)
    return WeightGraph(l1, l2, w, n)
