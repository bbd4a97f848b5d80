"""Sparse Markov models for categorical time series.

Fits an order-m Markov chain whose contexts share transition vectors within
groups, by convex clustering of the empirical transition rows (fusion
penalty, AMA solver), BIC selection along the penalty path, recovery
diagnostics, and likelihood-based sequence classification.
"""

from .classify import (
    ConfusionMatrix,
    ReferenceSet,
    classify,
    fit_reference,
    run_classification_experiment,
    segment_log_likelihood,
)
from .diagnostics import (
    RecoveryReport,
    check_conditions,
    lambda_bounds,
    recovery_report,
    separation_stats,
    theorem4_bounds,
)
from .errors import (
    DegenerateInput,
    EmptyGroup,
    MalformedFasta,
    MismatchedElements,
    PreconditionViolated,
    SegmentTooShort,
    SequenceTooShort,
    SingleCluster,
    SmmError,
    UndefinedBound,
    UnknownToken,
)
from .fasta import parse_fasta, read_token_lines, write_fasta, write_token_lines
from .markov import (
    Alphabet,
    ContextCounts,
    EmpiricalTransitions,
    EncodedSequence,
    context_index,
    context_tuple,
    count_transitions,
    count_transitions_runs,
    empirical_transitions,
    encode_sequence,
    encode_valid_runs,
)
from .metrics import ContingencyTable, adjusted_rand_index, rand_index
from .selection import (
    FitResult,
    LambdaSolution,
    SMMModel,
    bic_from_parts,
    bic_score,
    build_model,
    fit_path,
    fit_smm,
    group_mle,
    lambda_grid,
    log_likelihood,
    select_by_bic,
)
from .simulate import (
    ExperimentConfig,
    ExperimentSummary,
    GroundTruthSMM,
    build_setup1,
    build_setup2,
    generate_sequence,
    run_recovery_experiment,
    sample_dirichlet,
)
from .solver import (
    PartitionLabels,
    SolverConfig,
    SolverResult,
    ama_solve,
    cluster_rows,
    dual_gap,
    evaluate_objective,
    extract_clusters,
    project_ball,
)
from .weights import WeightGraph, WeightScheme, compute_weights, knn_edges, pairwise_distances

__version__ = "0.1.0"
