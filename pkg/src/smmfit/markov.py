"""Alphabet handling, sequence encoding, context indexing and transition counting.

An order-m model conditions each symbol on the m most recent symbols (its
context).  Contexts are enumerated by a base-d positional code with the
oldest symbol most significant, which fixes a stable bijection between
m-tuples and the integers 0..d^m - 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import SequenceTooShort, UnknownToken

DNA_SYMBOLS = ("A", "C", "G", "T")


@dataclass(frozen=True)
class Alphabet:
    """Ordered symbol table mapping tokens to integer codes 0..d-1."""

    symbols: tuple[str, ...]
    code: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("alphabet symbols must be unique")
        if len(self.symbols) < 2:
            raise ValueError("alphabet needs at least 2 symbols")
        object.__setattr__(self, "code", {s: i for i, s in enumerate(self.symbols)})

    @property
    def d(self) -> int:
        return len(self.symbols)

    def __contains__(self, token: str) -> bool:
        return token in self.code

    @classmethod
    def dna(cls) -> "Alphabet":
        return cls(DNA_SYMBOLS)

    @classmethod
    def from_tokens(cls, tokens: Iterable[str]) -> "Alphabet":
        """Alphabet of the distinct tokens seen, in sorted order."""
        return cls(tuple(sorted(set(tokens))))


@dataclass(frozen=True)
class EncodedSequence:
    """Integer-coded series over an alphabet of size d."""

    codes: np.ndarray
    d: int

    def __post_init__(self):
        codes = np.asarray(self.codes, dtype=np.int64)
        object.__setattr__(self, "codes", codes)
        if codes.size and (codes.min() < 0 or codes.max() >= self.d):
            raise ValueError("codes must lie in [0, d)")

    @property
    def n(self) -> int:
        return int(self.codes.size)


@dataclass(frozen=True)
class ContextCounts:
    """Transition counts N_j (per context) and N_ja (context -> successor).

    ``context_total[j]`` counts the windows that have a successor, so it
    equals ``transition[j].sum()`` by construction and the totals sum to
    the number of counted transitions.  ``window_count`` additionally
    includes the final window of each run (no successor).
    """

    m: int
    d: int
    context_total: np.ndarray  # (p,) int64
    transition: np.ndarray  # (p, d) int64
    window_count: int
    n: int  # total encoded symbols the counts were taken from

    @property
    def p(self) -> int:
        return self.d**self.m

    @property
    def n_transitions(self) -> int:
        return int(self.context_total.sum())


@dataclass(frozen=True)
class EmpiricalTransitions:
    """Row-normalized counts; unobserved contexts are masked, not zero-filled."""

    pihat: np.ndarray  # (p, d) float64, NaN rows where not observed
    observed: np.ndarray  # (p,) bool

    @property
    def p(self) -> int:
        return self.pihat.shape[0]

    @property
    def d(self) -> int:
        return self.pihat.shape[1]

    def observed_rows(self) -> tuple[np.ndarray, np.ndarray]:
        """Indices of observed contexts and the dense matrix of their rows."""
        idx = np.flatnonzero(self.observed)
        return idx, self.pihat[idx]


def encode_sequence(raw: Sequence[str], alphabet: Alphabet) -> EncodedSequence:
    """Encode tokens to integer codes, rejecting tokens outside the alphabet.

    Raises
    ------
    UnknownToken
        At the first position holding a token not in the alphabet.
    """
    code = alphabet.code
    out = np.empty(len(raw), dtype=np.int64)
    for i, tok in enumerate(raw):
        c = code.get(tok)
        if c is None:
            raise UnknownToken(i, tok)
        out[i] = c
    return EncodedSequence(out, alphabet.d)


def encode_valid_runs(raw: Sequence[str], alphabet: Alphabet) -> list[EncodedSequence]:
    """Drop-and-split encoding: break the series at unknown tokens.

    Returns the maximal contiguous runs of in-alphabet tokens, so no
    transition is ever fabricated across a gap.  Empty runs are dropped.
    """
    code = alphabet.code
    runs: list[EncodedSequence] = []
    current: list[int] = []
    for tok in raw:
        c = code.get(tok)
        if c is None:
            if current:
                runs.append(EncodedSequence(np.array(current, dtype=np.int64), alphabet.d))
                current = []
        else:
            current.append(c)
    if current:
        runs.append(EncodedSequence(np.array(current, dtype=np.int64), alphabet.d))
    return runs


def context_index(tup: Sequence[int], d: int) -> int:
    """Index of an m-tuple (ordered oldest to newest) in the canonical enumeration."""
    idx = 0
    for c in tup:
        idx = idx * d + int(c)
    return idx


def context_tuple(index: int, d: int, m: int) -> tuple[int, ...]:
    """Inverse of :func:`context_index`."""
    out = []
    for _ in range(m):
        out.append(index % d)
        index //= d
    return tuple(reversed(out))


def _context_indices(codes: np.ndarray, m: int, d: int) -> np.ndarray:
    """Vectorized context index for every window start 0..n-m."""
    n = codes.size
    n_win = n - m + 1
    idx = np.zeros(n_win, dtype=np.int64)
    for i in range(m):
        idx = idx * d + codes[i : i + n_win]
    return idx


def count_transitions(seq: EncodedSequence, m: int) -> ContextCounts:
    """Count context occurrences and context-to-successor transitions.

    Transitions are counted for every window that has a successor, giving
    n - m transitions in total for a length-n sequence.

    Raises
    ------
    SequenceTooShort
        If fewer than m + 1 symbols are available.
    """
    if seq.n < m + 1:
        raise SequenceTooShort(f"need at least {m + 1} symbols for order {m}, got {seq.n}")
    d = seq.d
    p = d**m
    ctx = _context_indices(seq.codes, m, d)  # n - m + 1 windows
    succ = seq.codes[m:]
    flat = ctx[:-1] * d + succ
    transition = np.bincount(flat, minlength=p * d).reshape(p, d)
    return ContextCounts(
        m=m,
        d=d,
        context_total=transition.sum(axis=1),
        transition=transition,
        window_count=seq.n - m + 1,
        n=seq.n,
    )


def count_transitions_runs(runs: Sequence[EncodedSequence], m: int) -> ContextCounts:
    """Pool transition counts over contiguous runs (drop-and-split inputs).

    Runs shorter than m + 1 contribute no transitions; at least one run
    must be long enough.
    """
    if not runs:
        raise SequenceTooShort("no runs to count")
    d = runs[0].d
    p = d**m
    transition = np.zeros((p, d), dtype=np.int64)
    window_count = 0
    n_total = 0
    usable = False
    for run in runs:
        n_total += run.n
        if run.n >= m + 1:
            c = count_transitions(run, m)
            transition += c.transition
            window_count += c.window_count
            usable = True
        elif run.n >= m:
            window_count += run.n - m + 1
    if not usable:
        raise SequenceTooShort(f"no run has the {m + 1} symbols needed for order {m}")
    return ContextCounts(
        m=m,
        d=d,
        context_total=transition.sum(axis=1),
        transition=transition,
        window_count=window_count,
        n=n_total,
    )


def empirical_transitions(counts: ContextCounts) -> EmpiricalTransitions:
    """Row-normalize counts into transition probability estimates.

    Rows of contexts never observed are NaN and flagged in the mask;
    downstream code must treat them explicitly.
    """
    total = counts.context_total
    observed = total > 0
    pihat = np.full(counts.transition.shape, np.nan)
    pihat[observed] = counts.transition[observed] / total[observed, None]
    return EmpiricalTransitions(pihat=pihat, observed=observed)
