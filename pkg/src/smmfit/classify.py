"""Likelihood-based sequence classification against fitted reference models.

Each class contributes one fitted model; a snippet is scored by the sum of
log smoothed transition probabilities of its observed (context, successor)
pairs under each model and assigned to the best-scoring class.  Models may
use different orders: every model conditions on its own first m symbols.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import SegmentTooShort
from .markov import Alphabet, EncodedSequence, _context_indices
from .selection import SMMModel, fit_smm
from .solver import SolverConfig
from .weights import WeightScheme


def fit_reference(
    seq: EncodedSequence,
    alphabet: Alphabet,
    m: int,
    scheme: Optional[WeightScheme] = None,
    config: Optional[SolverConfig] = None,
    grid_size: int = 100,
    alpha_smooth: float = 0.5,
    seed: Optional[int] = None,
) -> SMMModel:
    """Fit one class's reference model with the full count/weights/path
    pipeline and BIC selection."""
    return fit_smm(seq, alphabet, m, scheme, config, grid_size, alpha_smooth, seed).model


def _codes(segment: Union[EncodedSequence, np.ndarray]) -> np.ndarray:
    if isinstance(segment, EncodedSequence):
        return segment.codes
    return np.asarray(segment, dtype=np.int64)


def segment_log_likelihood(
    model: SMMModel, segment: Union[EncodedSequence, np.ndarray], alpha: Optional[float] = None
) -> float:
    """Sum of log predictive probabilities over the segment's transitions.

    The first m symbols only set up the conditioning context.  With the
    model's (or an overriding) positive smoothing alpha the result is always
    finite; at alpha = 0 an unseen (context, successor) pair yields -inf.

    Raises
    ------
    SegmentTooShort
        When the segment has no transition to score (length <= m).
    """
    codes = _codes(segment)
    m, d = model.m, model.d
    if codes.size <= m:
        raise SegmentTooShort(f"segment length {codes.size} scores nothing at order {m}")
    ctx = _context_indices(codes, m, d)[:-1]  # windows that have a successor
    succ = codes[m:]
    table = model.context_table(alpha)
    with np.errstate(divide="ignore"):
        return float(np.sum(np.log(table[ctx, succ])))


@dataclass(frozen=True)
class ReferenceSet:
    """Named class models over one shared alphabet."""

    names: tuple
    models: tuple

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "models", tuple(self.models))
        if len(self.names) != len(self.models):
            raise ValueError("one name per model required")
        if len(self.names) < 2:
            raise ValueError("need at least 2 classes")
        if len(set(self.names)) != len(self.names):
            raise ValueError("class names must be unique")
        symbols = self.models[0].alphabet.symbols
        if any(mod.alphabet.symbols != symbols for mod in self.models):
            raise ValueError("all models must share one alphabet")

    @classmethod
    def from_pairs(cls, pairs: Sequence) -> "ReferenceSet":
        names, models = zip(*pairs)
        return cls(names, models)

    @property
    def k(self) -> int:
        return len(self.names)

    @property
    def alphabet(self) -> Alphabet:
        return self.models[0].alphabet

    def max_order(self) -> int:
        return max(mod.m for mod in self.models)

    def index_of(self, name: str) -> int:
        return self.names.index(name)


def classify(
    refs: ReferenceSet, segment: Union[EncodedSequence, np.ndarray], alpha: Optional[float] = None
) -> tuple:
    """(winning class name, per-class log-likelihood scores); ties go to the
    earliest class in the reference order."""
    codes = _codes(segment)
    scores = np.array([segment_log_likelihood(mod, codes, alpha) for mod in refs.models])
    return refs.names[int(np.argmax(scores))], scores


@dataclass
class SampleRecord:
    """What happened to one sample: its snippet and per-class scores."""

    index: int
    truth: str
    predicted: Optional[str]  # None when the snippet was too short
    start: int
    length: int
    scores: Optional[tuple]


@dataclass
class ConfusionMatrix:
    """Counts with observed classes on rows and fitted classes on columns."""

    names: tuple
    counts: np.ndarray  # (k, k) int64
    skipped: list  # sample indices rejected as too short
    records: list = field(default_factory=list)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def misclassification_rate(self) -> float:
        total = self.total
        if total == 0:
            return 0.0
        return 1.0 - float(np.trace(self.counts)) / total

    @property
    def accuracy(self) -> float:
        return 1.0 - self.misclassification_rate

    def is_diagonal(self) -> bool:
        return int(np.trace(self.counts)) == self.total


def run_classification_experiment(
    refs: ReferenceSet,
    samples: Sequence,
    epsilon: float,
    rng: np.random.Generator,
    alpha: Optional[float] = None,
) -> ConfusionMatrix:
    """Classify one uniformly placed contiguous snippet per labeled sample.

    samples are (true class name, EncodedSequence) pairs.  The snippet
    length is ceil(epsilon * len); snippets too short to score under every
    model (shorter than max order + 2) are skipped and recorded.
    """
    if not 0.0 < epsilon <= 1.0:
        raise ValueError("epsilon must lie in (0, 1]")
    min_len = refs.max_order() + 2
    counts = np.zeros((refs.k, refs.k), dtype=np.int64)
    skipped = []
    records = []
    for idx, (truth, seq) in enumerate(samples):
        row = refs.index_of(truth)
        codes = _codes(seq)
        seg_len = int(np.ceil(epsilon * codes.size))
        if seg_len < min_len:
            skipped.append(idx)
            records.append(SampleRecord(idx, truth, None, 0, seg_len, None))
            continue
        start = int(rng.integers(0, codes.size - seg_len + 1))
        picked, scores = classify(refs, codes[start : start + seg_len], alpha)
        counts[row, refs.index_of(picked)] += 1
        records.append(SampleRecord(idx, truth, picked, start, seg_len, tuple(scores)))
    return ConfusionMatrix(names=refs.names, counts=counts, skipped=skipped, records=records)
