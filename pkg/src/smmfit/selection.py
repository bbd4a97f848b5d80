"""Penalty-path fitting and BIC model selection.

A fit solves the fusion problem along an increasing lambda grid (warm-started),
reads a partition off each solution, pools transition counts per group for the
MLE rows, and keeps the partition with the smallest BIC.  The reported model
always carries the pooled-count MLE probabilities, never the solver's fused
rows, which are biased toward each other by construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import EmptyGroup
from .markov import Alphabet, ContextCounts, EncodedSequence, count_transitions, empirical_transitions
from .solver import PartitionLabels, SolverConfig, ama_solve, extract_clusters
from .weights import WeightGraph, WeightScheme, compute_weights

UNSEEN_LABEL = -1  # reserved id for contexts with no observed transitions

MODEL_SCHEMA_VERSION = 1


def _pooled_counts(counts: ContextCounts, partition: PartitionLabels) -> np.ndarray:
    """k x d pooled transition counts, one row per group of observed contexts."""
    obs = np.nonzero(counts.context_total > 0)[0]
    if partition.size != obs.size:
        raise ValueError(
            f"partition labels {partition.size} observed contexts, counts have {obs.size}"
        )
    pooled = np.zeros((partition.k, counts.d), dtype=np.int64)
    np.add.at(pooled, partition.label, counts.transition[obs])
    return pooled


def group_mle(counts: ContextCounts, partition: PartitionLabels) -> np.ndarray:
    """Common transition vector per group: pooled counts, normalized.

    Raises
    ------
    EmptyGroup
        When some group pools zero transitions (possible only through a
        malformed partition; observed contexts always carry counts).
    """
    pooled = _pooled_counts(counts, partition)
    totals = pooled.sum(axis=1)
    if np.any(totals == 0):
        bad = int(np.nonzero(totals == 0)[0][0])
        raise EmptyGroup(f"group {bad} pools zero transitions")
    return pooled / totals[:, None]


def log_likelihood(counts: ContextCounts, partition: PartitionLabels) -> float:
    """Grouped multinomial log-likelihood; empty cells contribute zero."""
    pooled = _pooled_counts(counts, partition)
    totals = pooled.sum(axis=1)
    mask = pooled > 0
    rates = pooled[mask] / np.broadcast_to(totals[:, None], pooled.shape)[mask]
    return float(np.sum(pooled[mask] * np.log(rates)))


def bic_from_parts(loglik: float, k: int, n: int, d: int) -> float:
    return -2.0 * loglik + k * (d - 1) * np.log(n)


def bic_score(counts: ContextCounts, partition: PartitionLabels, n: int) -> float:
    """-2 log-likelihood plus k(d-1) log n, natural log, n = raw length."""
    return bic_from_parts(log_likelihood(counts, partition), partition.k, n, counts.d)


@dataclass
class LambdaSolution:
    """One point on the penalty path with its partition and scores."""

    lam: float
    partition: PartitionLabels
    k: int
    R: np.ndarray  # (k, d) pooled MLE rows
    loglik: float
    bic: float
    converged: bool
    iterations: int
    rel_gap: float


def lambda_grid(
    pihat: np.ndarray,
    graph: WeightGraph,
    grid_size: int = 100,
    config: Optional[SolverConfig] = None,
) -> np.ndarray:
    """Build the lambda grid: 0, then geometric points up to full fusion.

    The top value is found by doubling from sum_l ||pihat_l1 - pihat_l2|| /
    (2 sum_l w_l) until a solve fuses everything into one cluster (at most 40
    doublings).  Interior points span four decades below the top.
    """
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    cfg = config if config is not None else SolverConfig()
    rows = np.asarray(pihat, dtype=np.float64)
    diffs = np.linalg.norm(rows[graph.l1] - rows[graph.l2], axis=1)
    total = float(diffs.sum())
    if total == 0.0:
        # All rows coincide: any positive lambda is already fully fused.
        lam_top = 1.0
    else:
        lam = total / (2.0 * float(graph.w.sum()))
        lam_top = None
        gamma = None
        for _ in range(41):
            res = ama_solve(rows, graph, lam, cfg, gamma0=gamma)
            gamma = res.Gamma
            if extract_clusters(res, cfg.fusion_tol).k == 1:
                lam_top = lam
                break
            lam *= 2.0
        if lam_top is None:
            lam_top = lam / 2.0  # doubling cap reached; use the last probe
    if grid_size == 2:
        interior = np.array([lam_top])
    else:
        interior = np.geomspace(lam_top / 1e4, lam_top, grid_size - 1)
    return np.concatenate(([0.0], interior))


def fit_path(
    counts: ContextCounts,
    graph: WeightGraph,
    grid: Sequence[float],
    config: Optional[SolverConfig] = None,
) -> list[LambdaSolution]:
    """Solve at every grid lambda (warm-started) and score each partition."""
    cfg = config if config is not None else SolverConfig()
    emp = empirical_transitions(counts)
    _, rows = emp.observed_rows()
    if rows.shape[0] != graph.node_count:
        raise ValueError("weight graph does not match the observed contexts")
    solutions: list[LambdaSolution] = []
    gamma = None
    for lam in grid:
        res = ama_solve(rows, graph, float(lam), cfg, gamma0=gamma)
        gamma = res.Gamma
        part = extract_clusters(res, cfg.fusion_tol)
        R = group_mle(counts, part)
        ll = log_likelihood(counts, part)
        solutions.append(
            LambdaSolution(
                lam=float(lam),
                partition=part,
                k=part.k,
                R=R,
                loglik=ll,
                bic=bic_from_parts(ll, part.k, counts.n, counts.d),
                converged=res.converged,
                iterations=res.iterations,
                rel_gap=res.rel_gap,
            )
        )
    return solutions


def select_by_bic(solutions: Sequence[LambdaSolution]) -> LambdaSolution:
    """Minimum-BIC solution over distinct partitions; ties prefer fewer
    groups, then smaller lambda."""
    if not solutions:
        raise ValueError("empty path")
    seen: set[bytes] = set()
    best = None
    for sol in solutions:
        key = sol.partition.key()
        if key in seen:
            continue
        seen.add(key)
        rank = (sol.bic, sol.k, sol.lam)
        if best is None or rank < best[0]:
            best = (rank, sol)
    return best[1]


@dataclass
class SMMModel:
    """Fitted sparse Markov model: a context partition plus group vectors.

    labels has one entry per context (length d^m); UNSEEN_LABEL marks
    contexts that never occurred, which predict the uniform distribution.
    group_counts are kept so query-time smoothing can be applied at any
    alpha without refitting.
    """

    alphabet: Alphabet
    m: int
    labels: np.ndarray  # (p,) int64, values in {UNSEEN_LABEL} | 0..k-1
    group_probs: np.ndarray  # (k, d)
    group_counts: np.ndarray  # (k, d) int64
    lam: float
    bic: float
    k: int
    alpha_smooth: float
    n: int
    seed: Optional[int] = None

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.group_probs = np.asarray(self.group_probs, dtype=np.float64)
        self.group_counts = np.asarray(self.group_counts, dtype=np.int64)
        p = self.alphabet.d**self.m
        if self.labels.shape != (p,):
            raise ValueError(f"labels must have length {p}")
        if self.labels.max() != self.k - 1 or self.labels.min() < UNSEEN_LABEL:
            raise ValueError("labels must cover 0..k-1 with -1 reserved for unseen")
        if self.group_probs.shape != (self.k, self.alphabet.d):
            raise ValueError("group_probs shape mismatch")
        if np.max(np.abs(self.group_probs.sum(axis=1) - 1.0)) > 1e-12:
            raise ValueError("group_probs rows must sum to 1")
        if self.alpha_smooth < 0:
            raise ValueError("alpha_smooth must be nonnegative")

    @property
    def d(self) -> int:
        return self.alphabet.d

    @property
    def p(self) -> int:
        return int(self.labels.size)

    def context_table(self, alpha: Optional[float] = None) -> np.ndarray:
        """(p, d) matrix: the smoothed predictive row for every context.

        Unseen contexts get the uniform row; with alpha = 0 seen groups keep
        their raw MLE rows.
        """
        a = self.alpha_smooth if alpha is None else float(alpha)
        d = self.d
        if a > 0:
            totals = self.group_counts.sum(axis=1, keepdims=True)
            table = (self.group_counts + a) / (totals + d * a)
        else:
            table = self.group_probs
        full = np.vstack([table, np.full((1, d), 1.0 / d)])
        return full[self.labels]  # UNSEEN_LABEL = -1 indexes the uniform row

    def to_json_dict(self) -> dict:
        return {
            "version": MODEL_SCHEMA_VERSION,
            "alphabet": list(self.alphabet.symbols),
            "m": self.m,
            "labels": self.labels.tolist(),
            "group_probs": self.group_probs.tolist(),
            "group_counts": self.group_counts.tolist(),
            "lambda": self.lam,
            "bic": self.bic,
            "k": self.k,
            "smoothing": self.alpha_smooth,
            "n": self.n,
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)

    @classmethod
    def from_json_dict(cls, doc: dict) -> "SMMModel":
        if doc.get("version") != MODEL_SCHEMA_VERSION:
            raise ValueError(f"unsupported model version {doc.get('version')!r}")
        return cls(
            # keep the stored symbol order; sorting would renumber contexts
            alphabet=Alphabet(tuple(doc["alphabet"])),
            m=int(doc["m"]),
            labels=np.asarray(doc["labels"], dtype=np.int64),
            group_probs=np.asarray(doc["group_probs"], dtype=np.float64),
            group_counts=np.asarray(doc["group_counts"], dtype=np.int64),
            lam=float(doc["lambda"]),
            bic=float(doc["bic"]),
            k=int(doc["k"]),
            alpha_smooth=float(doc["smoothing"]),
            n=int(doc["n"]),
            seed=doc.get("seed"),
        )

    @classmethod
    def from_json(cls, text: str) -> "SMMModel":
        return cls.from_json_dict(json.loads(text))


def build_model(
    counts: ContextCounts,
    alphabet: Alphabet,
    solution: LambdaSolution,
    alpha_smooth: float = 0.5,
    seed: Optional[int] = None,
) -> SMMModel:
    """Assemble the full-context model from a selected path solution."""
    labels = np.full(counts.p, UNSEEN_LABEL, dtype=np.int64)
    obs = np.nonzero(counts.context_total > 0)[0]
    labels[obs] = solution.partition.label
    return SMMModel(
        alphabet=alphabet,
        m=counts.m,
        labels=labels,
        group_probs=solution.R,
        group_counts=_pooled_counts(counts, solution.partition),
        lam=solution.lam,
        bic=solution.bic,
        k=solution.k,
        alpha_smooth=alpha_smooth,
        n=counts.n,
        seed=seed,
    )


@dataclass
class FitResult:
    """Everything a fit produces: the model, the path, and the inputs used."""

    model: SMMModel
    path: list[LambdaSolution]
    selected: LambdaSolution
    counts: ContextCounts
    graph: WeightGraph
    grid: np.ndarray


def fit_smm(
    seq: Union[EncodedSequence, ContextCounts],
    alphabet: Alphabet,
    m: int,
    scheme: Optional[WeightScheme] = None,
    config: Optional[SolverConfig] = None,
    grid_size: int = 100,
    alpha_smooth: float = 0.5,
    seed: Optional[int] = None,
) -> FitResult:
    """Full pipeline: counts, empirical rows, weights, path, BIC selection."""
    scheme = scheme if scheme is not None else WeightScheme()
    cfg = config if config is not None else SolverConfig()
    counts = seq if isinstance(seq, ContextCounts) else count_transitions(seq, m)
    if counts.m != m:
        raise ValueError(f"counts are order {counts.m}, requested order {m}")
    emp = empirical_transitions(counts)
    _, rows = emp.observed_rows()
    graph = compute_weights(rows, scheme)
    grid = lambda_grid(rows, graph, grid_size, cfg)
    path = fit_path(counts, graph, grid, cfg)
    selected = select_by_bic(path)
    model = build_model(counts, alphabet, selected, alpha_smooth, seed)
    return FitResult(model=model, path=path, selected=selected, counts=counts, graph=graph, grid=grid)
