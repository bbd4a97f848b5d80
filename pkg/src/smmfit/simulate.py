"""Ground-truth sparse Markov models, sequence generation, and the
recovery experiment harness (generate, fit, compare to truth, aggregate).

Reproducibility: replicate r always uses its own PCG64 stream seeded with
base_seed + r, so runs are bit-identical for a given config and independent
of threading.
"""

from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .markov import EncodedSequence, count_transitions, empirical_transitions
from .metrics import adjusted_rand_index, rand_index
from .selection import fit_path, lambda_grid, select_by_bic
from .solver import PartitionLabels, SolverConfig
from .weights import WeightScheme, compute_weights


@dataclass(frozen=True)
class GroundTruthSMM:
    """True partition of the d^m contexts plus one transition row per group."""

    m: int
    d: int
    labels: np.ndarray  # (p,) int64 group ids, canonical first-seen order
    R: np.ndarray  # (k0, d) rows on the simplex
    seed: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=np.int64))
        object.__setattr__(self, "R", np.asarray(self.R, dtype=np.float64))
        if self.labels.shape != (self.d**self.m,):
            raise ValueError("labels must cover all d^m contexts")
        if self.R.shape != (self.k0, self.d):
            raise ValueError("one R row per group required")
        if np.max(np.abs(self.R.sum(axis=1) - 1.0)) > 1e-12 or self.R.min() < 0:
            raise ValueError("R rows must lie on the simplex")

    @property
    def p(self) -> int:
        return int(self.labels.size)

    @property
    def k0(self) -> int:
        return int(self.labels.max()) + 1

    def partition(self) -> PartitionLabels:
        return PartitionLabels.from_raw(self.labels)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k0)


def sample_dirichlet(params: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Dirichlet draw via normalized independent gamma variables."""
    params = np.asarray(params, dtype=np.float64)
    if np.any(params <= 0):
        raise ValueError("Dirichlet parameters must be positive")
    g = rng.standard_gamma(params)
    return g / g.sum()


def build_setup1(m: int, rng: np.random.Generator, seed: Optional[int] = None) -> GroundTruthSMM:
    """d=4 design: contexts split into equal contiguous blocks (4 groups of 4
    for m=2, 8 groups of 8 for m=3), group rows drawn as Dirichlet with
    parameters exp(Unif(0,1))."""
    if m not in (2, 3):
        raise ValueError("setup 1 is defined for m in {2, 3}")
    d = 4
    p = d**m
    k0 = 4 if m == 2 else 8
    block = p // k0
    labels = np.arange(p) // block
    R = np.empty((k0, d))
    for g in range(k0):
        z = rng.uniform(0.0, 1.0, size=d)
        R[g] = sample_dirichlet(np.exp(z), rng)
    return GroundTruthSMM(m=m, d=d, labels=labels, R=R, seed=seed)


def build_setup2() -> GroundTruthSMM:
    """Fixed m=3, d=4 design: contiguous groups of sizes 18/18/15/13 with
    R having 0.7 on the own symbol and 0.1 elsewhere."""
    d = 4
    sizes = (18, 18, 15, 13)
    labels = np.repeat(np.arange(4), sizes)
    R = np.full((4, d), 0.1) + 0.6 * np.eye(d)
    return GroundTruthSMM(m=3, d=d, labels=labels, R=R)


def generate_sequence(
    model: GroundTruthSMM, n: int, rng: np.random.Generator, burn_in: int = 1000
) -> EncodedSequence:
    """Emit n symbols after a uniform random start and burn_in warmup steps."""
    if n < model.m + 1:
        raise ValueError(f"n must be at least m + 1 = {model.m + 1}")
    d, m = model.d, model.m
    dpow = d ** (m - 1)
    start = rng.integers(0, d, size=m)
    ctx = 0
    for c in start:
        ctx = ctx * d + int(c)
    cum = np.cumsum(model.R, axis=1)
    cum[:, -1] = 1.0  # guard against rounding in the last bin
    group = model.labels
    total = burn_in + n
    us = rng.random(total)
    out = np.empty(n, dtype=np.int64)
    for t in range(total):
        a = int(np.searchsorted(cum[group[ctx]], us[t], side="right"))
        if t >= burn_in:
            out[t - burn_in] = a
        ctx = (ctx % dpow) * d + a
    return EncodedSequence(out, d)


@dataclass(frozen=True)
class ExperimentConfig:
    setup: str  # "setup1" | "setup2" | "custom"
    m: int
    n_values: tuple
    replicates: int
    scheme: WeightScheme
    solver: SolverConfig = SolverConfig()
    grid_size: int = 100
    seed: int = 0
    burn_in: int = 1000
    custom_model: Optional[GroundTruthSMM] = None

    def __post_init__(self):
        if self.setup not in ("setup1", "setup2", "custom"):
            raise ValueError(f"unknown setup {self.setup!r}")
        if self.setup == "custom" and self.custom_model is None:
            raise ValueError("custom setup needs custom_model")
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))


@dataclass
class ReplicateRecord:
    replicate: int
    n: int
    scheme: str
    ri: float
    ari: float
    k_hat: int
    lam: float
    recovered: bool
    all_observed: bool
    non_converged: int  # path points that hit the iteration cap


@dataclass
class SummaryRow:
    n: int
    scheme: str
    replicates: int
    mean_ri: float
    se_ri: float
    mean_ari: float
    se_ari: float
    recovery_rate: float


@dataclass
class ExperimentSummary:
    config: ExperimentConfig
    records: list
    rows: list
    wall_time: float  # kept in memory only; CSV outputs stay byte-stable

    def row_for(self, n: int) -> SummaryRow:
        for row in self.rows:
            if row.n == n:
                return row
        raise KeyError(f"no summary row for n = {n}")


def _truth_model(config: ExperimentConfig, rng: np.random.Generator) -> GroundTruthSMM:
    if config.setup == "setup1":
        return build_setup1(config.m, rng)
    if config.setup == "setup2":
        return build_setup2()
    return config.custom_model


def run_replicate(config: ExperimentConfig, r: int) -> list:
    """All (n, record) results for replicate r, on its own RNG stream."""
    rng = np.random.Generator(np.random.PCG64(config.seed + r))
    truth = _truth_model(config, rng)
    if truth.m != config.m:
        raise ValueError("config order m does not match the model")
    records = []
    for n in config.n_values:
        seq = generate_sequence(truth, n, rng, config.burn_in)
        counts = count_transitions(seq, config.m)
        emp = empirical_transitions(counts)
        obs, rows = emp.observed_rows()
        graph = compute_weights(rows, config.scheme)
        grid = lambda_grid(rows, graph, config.grid_size, config.solver)
        path = fit_path(counts, graph, grid, config.solver)
        selected = select_by_bic(path)
        truth_obs = PartitionLabels.from_raw(truth.labels[obs])
        fitted = selected.partition
        all_observed = obs.size == truth.p
        recovered = all_observed and fitted == truth_obs
        records.append(
            ReplicateRecord(
                replicate=r,
                n=n,
                scheme=config.scheme.label(),
                ri=rand_index(truth_obs.label, fitted.label),
                ari=adjusted_rand_index(truth_obs.label, fitted.label),
                k_hat=selected.k,
                lam=selected.lam,
                recovered=recovered,
                all_observed=all_observed,
                non_converged=sum(1 for s in path if not s.converged),
            )
        )
    return records


def run_recovery_experiment(config: ExperimentConfig, threads: int = 1) -> ExperimentSummary:
    """Generate, fit, and score config.replicates runs; aggregate per n."""
    t0 = time.perf_counter()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            batches = list(pool.map(lambda r: run_replicate(config, r), range(config.replicates)))
    else:
        batches = [run_replicate(config, r) for r in range(config.replicates)]
    records = [rec for batch in batches for rec in batch]
    records.sort(key=lambda rec: (rec.replicate, rec.n))
    rows = []
    for n in config.n_values:
        sub = [rec for rec in records if rec.n == n]
        ri = np.array([rec.ri for rec in sub])
        ari = np.array([rec.ari for rec in sub])
        reps = len(sub)
        se = lambda x: float(np.std(x, ddof=1) / np.sqrt(reps)) if reps > 1 else 0.0
        rows.append(
            SummaryRow(
                n=n,
                scheme=config.scheme.label(),
                replicates=reps,
                mean_ri=float(ri.mean()),
                se_ri=se(ri),
                mean_ari=float(ari.mean()),
                se_ari=se(ari),
                recovery_rate=float(np.mean([rec.recovered for rec in sub])),
            )
        )
    return ExperimentSummary(
        config=config, records=records, rows=rows, wall_time=time.perf_counter() - t0
    )


REPLICATE_FIELDS = ["replicate", "n", "scheme", "ri", "ari", "k_hat", "lambda", "recovered", "all_observed", "non_converged"]
SUMMARY_FIELDS = ["n", "scheme", "replicates", "mean_ri", "se_ri", "mean_ari", "se_ari", "recovery_rate"]


def replicates_csv(summary: ExperimentSummary) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPLICATE_FIELDS)
    for rec in summary.records:
        w.writerow(
            [rec.replicate, rec.n, rec.scheme, repr(rec.ri), repr(rec.ari),
             rec.k_hat, repr(rec.lam), int(rec.recovered), int(rec.all_observed), rec.non_converged]
        )
    return buf.getvalue()


def summary_csv(summary: ExperimentSummary) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_FIELDS)
    for row in summary.rows:
        w.writerow(
            [row.n, row.scheme, row.replicates, repr(row.mean_ri), repr(row.se_ri),
             repr(row.mean_ari), repr(row.se_ari), repr(row.recovery_rate)]
        )
    return buf.getvalue()
