"""Convex clustering of probability rows by AMA on the fusion-penalized problem.

Minimizes  0.5 * sum_j ||pihat_j - b_j||^2 + lam * sum_l w_l ||b_{l1} - b_{l2}||_2
over rows b_j.  The dual variables gamma_l live in balls of radius lam*w_l;
the primal update is closed-form, the dual update is a projected gradient
(ascent) step.  Started from Gamma = 0 the iterates keep exact row sums of 1,
so only nonnegativity needs a tolerance at the reported solution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp

from .weights import WeightGraph

_TINY = 1e-12
# Above this A is kept sparse; below, dense incidence matmuls are faster.
_DENSE_LIMIT = 1 << 24


@dataclass(frozen=True)
class SolverConfig:
    """Step size, stopping rule, and cluster-extraction tolerance.

    nu = None resolves to 1/p' at solve time; any fixed value must satisfy
    0 < nu < 2/p' (the convergence range of the dual step).  Convergence is
    declared only when the relative duality gap is at or below dual_gap_tol
    AND every row of B is on the simplex within simplex_tol: the gap alone
    does not bound entrywise negativity tightly enough.
    """

    nu: Optional[float] = None
    dual_gap_tol: float = 1e-6
    max_iter: int = 20000
    fusion_tol: float = 1e-4
    simplex_tol: float = 1e-8
    check_every: int = 10

    def __post_init__(self):
        if self.nu is not None and not self.nu > 0:
            raise ValueError("nu must be positive")
        for name in ("dual_gap_tol", "fusion_tol", "simplex_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iter < 1 or self.check_every < 1:
            raise ValueError("max_iter and check_every must be at least 1")


@dataclass(frozen=True, eq=False)
class PartitionLabels:
    """Cluster ids over nodes, canonicalized to first-seen order."""

    label: np.ndarray  # (p',) int64, values 0..k-1
    k: int

    def __post_init__(self):
        lab = np.asarray(self.label, dtype=np.int64)
        object.__setattr__(self, "label", lab)
        if lab.size == 0:
            raise ValueError("empty label vector")
        if lab.min() < 0 or lab.max() != self.k - 1:
            raise ValueError("labels must be surjective onto 0..k-1")
        bound = np.concatenate(([0], np.maximum.accumulate(lab)[:-1] + 1))
        if np.any(lab > bound):
            raise ValueError("labels must appear in first-seen order")

    @classmethod
    def from_raw(cls, labels) -> "PartitionLabels":
        """Canonicalize arbitrary hashable labels to first-seen integer ids."""
        labels = np.asarray(labels)
        _, first, inv = np.unique(labels, return_index=True, return_inverse=True)
        rank = np.empty(first.size, dtype=np.int64)
        rank[np.argsort(first, kind="stable")] = np.arange(first.size)
        return cls(rank[inv], int(first.size))

    @property
    def size(self) -> int:
        return int(self.label.size)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.label, minlength=self.k)

    def key(self) -> bytes:
        return self.label.tobytes()

    def __eq__(self, other) -> bool:
        if not isinstance(other, PartitionLabels):
            return NotImplemented
        return self.k == other.k and np.array_equal(self.label, other.label)

    def __hash__(self) -> int:
        return hash((self.k, self.key()))


@dataclass
class SolverResult:
    """AMA output: primal rows B, dual edge vectors Gamma, and certificates."""

    B: np.ndarray  # (p', d)
    Gamma: np.ndarray  # (E, d)
    pihat: np.ndarray  # the input rows the solve was run on
    lam: float
    iterations: int
    primal_obj: float
    dual_obj: float
    gap: float
    rel_gap: float
    converged: bool
    simplex_err: float  # max of |row sum - 1| and entry negativity
    history: Optional[dict] = None


def project_ball(x: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection of a vector onto the ball of the given radius."""
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    x = np.asarray(x, dtype=np.float64)
    nrm = float(np.linalg.norm(x))
    if nrm <= radius:
        return x.copy()
    return x * (radius / nrm)


def _project_rows(M: np.ndarray, radii: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(M, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(norms > radii, radii / norms, 1.0)
    return M * scale[:, None]


def _incidence(graph: WeightGraph):
    """Signed edge-node incidence A (E x p'), +1 at l1 and -1 at l2."""
    E, p = graph.edge_count, graph.node_count
    if E * p <= _DENSE_LIMIT:
        A = np.zeros((E, p))
        r = np.arange(E)
        A[r, graph.l1] = 1.0
        A[r, graph.l2] = -1.0
        return A, np.ascontiguousarray(A.T)
    data = np.concatenate([np.ones(E), -np.ones(E)])
    rc = np.concatenate([np.arange(E), np.arange(E)])
    cc = np.concatenate([graph.l1, graph.l2])
    A = sp.csr_matrix((data, (rc, cc)), shape=(E, p))
    return A, A.T.tocsr()


def _simplex_err(B: np.ndarray) -> float:
    row_err = float(np.max(np.abs(B.sum(axis=1) - 1.0)))
    neg = max(0.0, -float(B.min()))
    return max(row_err, neg)


def evaluate_objective(pihat: np.ndarray, B: np.ndarray, graph: WeightGraph, lam: float) -> float:
    """Value of the fusion-penalized least-squares criterion at B."""
    pihat = np.asarray(pihat, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    data = 0.5 * float(np.sum((pihat - B) ** 2))
    if graph.edge_count == 0 or lam == 0.0:
        return data
    diffs = B[graph.l1] - B[graph.l2]
    return data + lam * float(graph.w @ np.linalg.norm(diffs, axis=1))


def dual_objective(pihat: np.ndarray, Gamma: np.ndarray, graph: WeightGraph) -> float:
    """Dual value at feasible Gamma (feasibility is the caller's burden)."""
    pihat = np.asarray(pihat, dtype=np.float64)
    Gamma = np.asarray(Gamma, dtype=np.float64)
    Delta = np.zeros_like(pihat)
    np.add.at(Delta, graph.l1, Gamma)
    np.subtract.at(Delta, graph.l2, Gamma)
    lin = float(np.sum(Gamma * (pihat[graph.l1] - pihat[graph.l2])))
    return -0.5 * float(np.sum(Delta**2)) - lin


def dual_gap(pihat: np.ndarray, B: np.ndarray, Gamma: np.ndarray, graph: WeightGraph, lam: float):
    """(primal, dual, gap) for any primal B and dual-feasible Gamma."""
    primal = evaluate_objective(pihat, B, graph, lam)
    dual = dual_objective(pihat, Gamma, graph)
    return primal, dual, primal - dual


def ama_solve(
    pihat: np.ndarray,
    graph: WeightGraph,
    lam: float,
    config: Optional[SolverConfig] = None,
    gamma0: Optional[np.ndarray] = None,
    record_history: bool = False,
) -> SolverResult:
    """Run AMA from Gamma = 0 (or a warm start projected to feasibility).

    Stops when the relative duality gap and the simplex deviation are both
    within tolerance, when the dual iterate reaches a floating-point fixed
    point, or at max_iter.  A warm-started solve that ends off the simplex
    is repeated cold; from Gamma = 0 the row-sum identity is exact.
    """
    cfg = config if config is not None else SolverConfig()
    rows = np.asarray(pihat, dtype=np.float64)
    if rows.ndim != 2:
        raise ValueError("pihat must be a 2-d array of probability rows")
    p, d = rows.shape
    if graph.node_count != p:
        raise ValueError(f"graph has {graph.node_count} nodes, pihat has {p} rows")
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    E = graph.edge_count

    if lam == 0.0 or E == 0:
        hist = {"primal": [0.0], "dual": [0.0], "gap": [0.0]} if record_history else None
        return SolverResult(
            B=rows.copy(), Gamma=np.zeros((E, d)), pihat=rows, lam=lam,
            iterations=0, primal_obj=0.0, dual_obj=0.0, gap=0.0, rel_gap=0.0,
            converged=True, simplex_err=_simplex_err(rows), history=hist,
        )

    nu = cfg.nu if cfg.nu is not None else 1.0 / p
    if not 0.0 < nu < 2.0 / p:
        raise ValueError(f"nu must lie in (0, {2.0 / p:g}) for {p} nodes, got {nu:g}")

    radii = lam * graph.w
    A, AT = _incidence(graph)
    AR = A @ rows  # rows pihat_{l1} - pihat_{l2}, fixed

    if gamma0 is None:
        Gamma = np.zeros((E, d))
        warm = False
    else:
        gamma0 = np.asarray(gamma0, dtype=np.float64)
        if gamma0.shape != (E, d):
            raise ValueError(f"gamma0 must have shape {(E, d)}")
        Gamma = _project_rows(gamma0, radii)
        warm = True

    hist = {"primal": [], "dual": [], "gap": []} if record_history else None
    it = 0
    converged = False
    primal = dual = gap = rel = serr = np.nan

    def certificate(Delta, G, Gamma):
        data = 0.5 * float(np.sum(Delta**2))
        pen = lam * float(graph.w @ np.linalg.norm(G, axis=1))
        pr = data + pen
        du = -data - float(np.sum(Gamma * AR))
        gp = pr - du
        return pr, du, gp, gp / max(abs(pr), _TINY)

    while True:
        Delta = AT @ Gamma
        B = rows + Delta
        G = A @ B
        checked = record_history or it % cfg.check_every == 0 or it >= cfg.max_iter
        if checked:
            primal, dual, gap, rel = certificate(Delta, G, Gamma)
            serr = _simplex_err(B)
            if hist is not None:
                hist["primal"].append(primal)
                hist["dual"].append(dual)
                hist["gap"].append(gap)
            if rel <= cfg.dual_gap_tol and serr <= cfg.simplex_tol:
                converged = True
                break
        if it >= cfg.max_iter:
            break
        Gamma_new = _project_rows(Gamma - nu * G, radii)
        it += 1
        if np.array_equal(Gamma_new, Gamma):
            # Fixed point at machine precision: no further progress possible.
            if not checked:
                primal, dual, gap, rel = certificate(Delta, G, Gamma)
                serr = _simplex_err(B)
            converged = rel <= cfg.dual_gap_tol and serr <= cfg.simplex_tol
            break
        Gamma = Gamma_new

    if warm and serr > cfg.simplex_tol:
        return ama_solve(pihat, graph, lam, cfg, gamma0=None, record_history=record_history)

    return SolverResult(
        B=B, Gamma=Gamma, pihat=rows, lam=lam, iterations=it,
        primal_obj=primal, dual_obj=dual, gap=gap, rel_gap=rel,
        converged=converged, simplex_err=serr, history=hist,
    )


def cluster_rows(B: np.ndarray, threshold: float) -> PartitionLabels:
    """Sweep from the smallest unassigned index, absorbing all later rows
    within the threshold; remaining rows stay singletons."""
    B = np.asarray(B, dtype=np.float64)
    p = B.shape[0]
    label = np.full(p, -1, dtype=np.int64)
    k = 0
    for j1 in range(p):
        if label[j1] >= 0:
            continue
        label[j1] = k
        if j1 + 1 < p:
            close = np.linalg.norm(B[j1 + 1 :] - B[j1], axis=1) <= threshold
            idx = j1 + 1 + np.nonzero(close)[0]
            idx = idx[label[idx] < 0]
            label[idx] = k
        k += 1
    return PartitionLabels(label, k)


def extract_clusters(result: Union[SolverResult, np.ndarray], tau: float = 1e-4) -> PartitionLabels:
    """Read the partition off fused solver rows.

    The absolute threshold is tau scaled by (1 + the largest input row norm),
    so "equal rows" is judged relative to the data's magnitude.
    """
    if isinstance(result, SolverResult):
        B, ref = result.B, result.pihat
    else:
        B = np.asarray(result, dtype=np.float64)
        ref = B
    scale = 1.0 + float(np.max(np.linalg.norm(ref, axis=1)))
    return cluster_rows(B, tau * scale)
