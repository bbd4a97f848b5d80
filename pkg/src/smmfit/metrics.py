"""Rand index and adjusted Rand index between two partitions.

Partitions are given as per-element labels; any hashable labels work, only
the induced equivalence classes matter.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import MismatchedElements


@dataclass(frozen=True)
class ContingencyTable:
    """Cross-tabulation of two partitions of the same p elements."""

    counts: np.ndarray  # (r, s) int64, counts[i, j] = |X_i & Y_j|
    row_sums: np.ndarray  # a_i = |X_i|
    col_sums: np.ndarray  # b_j = |Y_j|
    total: int

    @classmethod
    def from_labels(cls, labels_a: Sequence, labels_b: Sequence) -> "ContingencyTable":
        if len(labels_a) != len(labels_b):
            raise MismatchedElements(
                f"partitions cover {len(labels_a)} vs {len(labels_b)} elements"
            )
        a = np.asarray(labels_a)
        b = np.asarray(labels_b)
        _, ai = np.unique(a, return_inverse=True)
        _, bi = np.unique(b, return_inverse=True)
        r = int(ai.max()) + 1 if ai.size else 0
        s = int(bi.max()) + 1 if bi.size else 0
        counts = np.zeros((r, s), dtype=np.int64)
        np.add.at(counts, (ai, bi), 1)
        return cls(
            counts=counts,
            row_sums=counts.sum(axis=1),
            col_sums=counts.sum(axis=0),
            total=int(a.size),
        )


def _comb2(x: np.ndarray) -> np.ndarray:
    return x * (x - 1) // 2


def rand_index(labels_a: Sequence, labels_b: Sequence) -> float:
    """Proportion of element pairs on which the two partitions agree.

    Agreement means the pair is together in both partitions or separated
    in both; the value lies in [0, 1] with 1 for identical partitions.
    """
    table = ContingencyTable.from_labels(labels_a, labels_b)
    p = table.total
    if p < 2:
        raise MismatchedElements("need at least 2 elements to compare partitions")
    n_pairs = p * (p - 1) // 2
    same_same = int(_comb2(table.counts).sum())
    same_a = int(_comb2(table.row_sums).sum())
    same_b = int(_comb2(table.col_sums).sum())
    # agreeing-different pairs by inclusion-exclusion over the pair universe
    diff_diff = n_pairs - same_a - same_b + same_same
    return (same_same + diff_diff) / n_pairs


def adjusted_rand_index(labels_a: Sequence, labels_b: Sequence) -> float:
    """Chance-corrected pair agreement; 1 iff the partitions are identical.

    When the correction denominator vanishes (both partitions all
    singletons, or both a single cluster) the partitions are necessarily
    identical and the value is 1 by convention.
    """
    table = ContingencyTable.from_labels(labels_a, labels_b)
    p = table.total
    if p < 2:
        raise MismatchedElements("need at least 2 elements to compare partitions")
    n_pairs = p * (p - 1) // 2
    sum_cells = float(_comb2(table.counts).sum())
    sum_a = float(_comb2(table.row_sums).sum())
    sum_b = float(_comb2(table.col_sums).sum())
    expected = sum_a * sum_b / n_pairs
    denom = 0.5 * (sum_a + sum_b) - expected
    if denom == 0.0:
        return 1.0
    return (sum_cells - expected) / denom
