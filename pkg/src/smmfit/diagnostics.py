"""Recovery-condition diagnostics for a (rows, weights, partition) triple.

Given a reference partition (the truth in simulations, or a fitted partition
otherwise), these functions evaluate the weight-balance conditions, the
penalty window (lambda_min, lambda_max) inside which the partition is the
exact solution, the separation quantities (delta, delta1, delta2), and the
closed-form bounds available for Gaussian-kernel kNN weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import PreconditionViolated, SingleCluster, UndefinedBound
from .solver import PartitionLabels
from .weights import WeightGraph, WeightScheme

INF = math.inf


def cluster_weight_sums(graph: WeightGraph, partition: PartitionLabels) -> np.ndarray:
    """(p', k0) matrix: total weight from node i into each cluster."""
    Wd = graph.to_dense()
    member = np.zeros((partition.size, partition.k))
    member[np.arange(partition.size), partition.label] = 1.0
    return Wd @ member


def _within_margins(graph: WeightGraph, partition: PartitionLabels):
    """Per cluster: index pairs (i<j), their p_a*w_ij - mu_ij margins, and
    the pairwise row distances hook (filled by callers needing them)."""
    Wd = graph.to_dense()
    wc = cluster_weight_sums(graph, partition)
    sizes = partition.sizes()
    out = []
    for a in range(partition.k):
        idx = np.nonzero(partition.label == a)[0]
        if idx.size < 2:
            continue
        diffs = np.abs(wc[idx][:, None, :] - wc[idx][None, :, :])
        mu = diffs.sum(axis=2) - diffs[:, :, a]
        margin = sizes[a] * Wd[np.ix_(idx, idx)] - mu
        iu, ju = np.triu_indices(idx.size, k=1)
        out.append((a, idx[iu], idx[ju], margin[iu, ju]))
    return out


def _cross_sums(graph: WeightGraph, partition: PartitionLabels) -> np.ndarray:
    """s_a = (1/p_a) * total weight leaving cluster a."""
    wc = cluster_weight_sums(graph, partition)
    sizes = partition.sizes().astype(np.float64)
    per_cluster = np.zeros((partition.k, partition.k))
    np.add.at(per_cluster, partition.label, wc)  # w^(a,b) totals
    cross = per_cluster.sum(axis=1) - np.diag(per_cluster)
    return cross / sizes


def check_conditions(graph: WeightGraph, partition: PartitionLabels):
    """(A1, A2, details): within-cluster positivity and the weight-balance
    margin p_a*w_ij > mu_ij on every within-cluster pair."""
    if partition.size != graph.node_count:
        raise ValueError("partition does not cover the weight graph")
    Wd = graph.to_dense()
    a1 = True
    for a in range(partition.k):
        idx = np.nonzero(partition.label == a)[0]
        if idx.size < 2:
            continue
        sub = Wd[np.ix_(idx, idx)]
        iu, ju = np.triu_indices(idx.size, k=1)
        if np.any(sub[iu, ju] <= 0):
            a1 = False
            break
    margins = _within_margins(graph, partition)
    worst = min((float(m.min()) for _, _, _, m in margins), default=INF)
    a2 = worst > 0
    return a1, a2, {"a2_margin": worst}


def lambda_bounds(pihat: np.ndarray, graph: WeightGraph, partition: PartitionLabels):
    """The penalty window endpoints for the given reference partition.

    Raises
    ------
    UndefinedBound
        When some within-cluster margin p_a*w_ij - mu_ij is nonpositive
        (condition A2 fails), which makes lambda_min meaningless.
    """
    rows = np.asarray(pihat, dtype=np.float64)
    if rows.shape[0] != partition.size or partition.size != graph.node_count:
        raise ValueError("rows, graph, and partition sizes disagree")
    lam_min = 0.0
    for _, ii, jj, margin in _within_margins(graph, partition):
        if np.any(margin <= 0):
            raise UndefinedBound("A2 violated: nonpositive within-cluster margin")
        dist = np.linalg.norm(rows[ii] - rows[jj], axis=1)
        lam_min = max(lam_min, float(np.max(dist / margin)))
    if partition.k == 1:
        return lam_min, INF
    means = np.zeros((partition.k, rows.shape[1]))
    np.add.at(means, partition.label, rows)
    means /= partition.sizes()[:, None]
    s = _cross_sums(graph, partition)
    lam_max = INF
    for a in range(partition.k):
        for b in range(a + 1, partition.k):
            num = float(np.linalg.norm(means[a] - means[b]))
            den = float(s[a] + s[b])
            lam_max = min(lam_max, num / den if den > 0 else INF)
    return lam_min, lam_max


def separation_stats(group_vectors: np.ndarray, graph: WeightGraph, partition: PartitionLabels):
    """(delta, delta1, delta2): smallest between-group vector distance,
    worst within-cluster margin, and largest cross-weight load.

    Raises
    ------
    SingleCluster
        When the partition has a single group (delta needs two).
    """
    if partition.k < 2:
        raise SingleCluster("separation quantities need at least 2 groups")
    G = np.asarray(group_vectors, dtype=np.float64)
    if G.shape[0] != partition.k:
        raise ValueError("one group vector per cluster required")
    delta = INF
    for a in range(partition.k):
        for b in range(a + 1, partition.k):
            delta = min(delta, float(np.linalg.norm(G[a] - G[b])))
    margins = _within_margins(graph, partition)
    delta1 = min((float(m.min()) for _, _, _, m in margins), default=INF)
    s = _cross_sums(graph, partition)
    delta2 = 0.0
    for a in range(partition.k):
        for b in range(a + 1, partition.k):
            delta2 = max(delta2, float(s[a] + s[b]))
    return delta, delta1, delta2


def theorem4_bounds(phi: float, k: int, sizes, delta: float):
    """Closed-form (eps_max, delta1_min, delta2_max, corollary2) for
    Gaussian-kernel union-kNN weights with neighbor count k.

    Raises
    ------
    PreconditionViolated
        When k < p_max - 1, below the regime the bounds assume.
    """
    if not phi > 0 or not delta > 0:
        raise ValueError("phi and delta must be positive")
    sizes = np.asarray(sizes, dtype=np.int64)
    p_min = int(sizes.min())
    p_max = int(sizes.max())
    if k < p_max - 1:
        raise PreconditionViolated(f"k = {k} below p_max - 1 = {p_max - 1}")
    log_arg = 2.0 * ((k + 1) / p_min - 1.0)
    if log_arg <= 0.0:
        # k + 1 == p_min: the log diverges to -inf, eps_max is unbounded and
        # both exponential tails vanish.
        eps_max, tail, lead = INF, 0.0, 0.0
    else:
        eps_max = delta / 2.0 - math.log(log_arg) / (2.0 * phi * delta)
        tail = 2.0 * (k + 1 - p_min) * math.exp(-phi * (delta - eps_max) ** 2)
        lead = p_min * math.exp(-phi * eps_max**2)
    delta1_min = lead - tail
    delta2_max = tail
    balanced = bool(np.all(sizes == sizes[0]))
    corollary2 = balanced and k == int(sizes.sum()) // len(sizes) - 1
    return eps_max, delta1_min, delta2_max, corollary2


@dataclass
class RecoveryReport:
    """Everything the recovery conditions say about one instance."""

    a1_satisfied: bool
    a2_satisfied: bool
    a2_margin: float
    lambda_min: Optional[float]  # None when A2 fails
    lambda_max: Optional[float]
    delta: Optional[float]  # None when group vectors are unavailable (k0 = 1)
    delta1: float
    delta2: float
    cluster_sizes: list
    node_cluster_weight: np.ndarray  # (p', k0)
    cluster_means: np.ndarray  # (k0, d)
    eps_max: Optional[float] = None  # Theorem-4 block, Gaussian kNN only
    delta1_min: Optional[float] = None
    delta2_max: Optional[float] = None
    corollary2: Optional[bool] = None

    def to_json_dict(self) -> dict:
        def num(x):
            if x is None:
                return None
            if math.isinf(x):
                return "inf" if x > 0 else "-inf"
            return x

        return {
            "a1_satisfied": self.a1_satisfied,
            "a2_satisfied": self.a2_satisfied,
            "a2_margin": num(self.a2_margin),
            "lambda_min": num(self.lambda_min),
            "lambda_max": num(self.lambda_max),
            "delta": num(self.delta),
            "delta1": num(self.delta1),
            "delta2": num(self.delta2),
            "cluster_sizes": [int(s) for s in self.cluster_sizes],
            "eps_max": num(self.eps_max),
            "delta1_min": num(self.delta1_min),
            "delta2_max": num(self.delta2_max),
            "corollary2": self.corollary2,
        }


def recovery_report(
    pihat: np.ndarray,
    graph: WeightGraph,
    partition: PartitionLabels,
    group_vectors: Optional[np.ndarray] = None,
    scheme: Optional[WeightScheme] = None,
) -> RecoveryReport:
    """Full diagnostic pass; group_vectors default to the cluster means.

    The Theorem-4 block is filled only when the scheme is a Gaussian-kernel
    kNN graph with k large enough for the bounds to apply.
    """
    rows = np.asarray(pihat, dtype=np.float64)
    a1, a2, details = check_conditions(graph, partition)
    means = np.zeros((partition.k, rows.shape[1]))
    np.add.at(means, partition.label, rows)
    means /= partition.sizes()[:, None]
    if a2:
        lam_min, lam_max = lambda_bounds(rows, graph, partition)
    else:
        lam_min, lam_max = None, None
    G = means if group_vectors is None else np.asarray(group_vectors, dtype=np.float64)
    if partition.k >= 2:
        delta, delta1, delta2 = separation_stats(G, graph, partition)
    else:
        delta = None
        delta1 = details["a2_margin"]
        delta2 = 0.0
    report = RecoveryReport(
        a1_satisfied=a1,
        a2_satisfied=a2,
        a2_margin=details["a2_margin"],
        lambda_min=lam_min,
        lambda_max=lam_max,
        delta=delta,
        delta1=delta1,
        delta2=delta2,
        cluster_sizes=partition.sizes().tolist(),
        node_cluster_weight=cluster_weight_sums(graph, partition),
        cluster_means=means,
    )
    if (
        scheme is not None
        and scheme.kind == "knn_kernel"
        and scheme.kernel == "gaussian"
        and delta is not None
        and scheme.k >= int(partition.sizes().max()) - 1
    ):
        eps_max, d1min, d2max, cor2 = theorem4_bounds(scheme.phi, scheme.k, partition.sizes(), delta)
        report.eps_max = eps_max
        report.delta1_min = d1min
        report.delta2_max = d2max
        report.corollary2 = cor2
    return report
