"""Encoding, context indexing and transition counting."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smmfit.errors import SequenceTooShort, UnknownToken
from smmfit.markov import (
    Alphabet,
    EncodedSequence,
    context_index,
    context_tuple,
    count_transitions,
    count_transitions_runs,
    empirical_transitions,
    encode_sequence,
    encode_valid_runs,
)

AB = Alphabet(("A", "B"))


def test_alphabet_basics():
    dna = Alphabet.dna()
    assert dna.symbols == ("A", "C", "G", "T")
    assert dna.d == 4
    assert "G" in dna and "X" not in dna
    assert dna.code["T"] == 3


def test_alphabet_rejects_duplicates_and_tiny():
    with pytest.raises(ValueError):
        Alphabet(("A", "A"))
    with pytest.raises(ValueError):
        Alphabet(("A",))


def test_alphabet_from_tokens_sorts():
    assert Alphabet.from_tokens(["T", "A", "G", "A"]).symbols == ("A", "G", "T")


def test_encode_sequence():
    seq = encode_sequence("ACGT", Alphabet.dna())
    assert seq.codes.tolist() == [0, 1, 2, 3]
    assert seq.d == 4 and seq.n == 4


def test_encode_rejects_unknown_token():
    with pytest.raises(UnknownToken) as err:
        encode_sequence("ACXGT", Alphabet.dna())
    assert err.value.position == 2
    assert err.value.token == "X"


def test_encode_valid_runs_splits_at_gaps():
    runs = encode_valid_runs("ACNNGT-A", Alphabet.dna())
    assert [r.codes.tolist() for r in runs] == [[0, 1], [2, 3], [0]]


def test_encode_valid_runs_all_unknown():
    assert encode_valid_runs("XYZ", Alphabet.dna()) == []


def test_context_index_oldest_most_significant():
    # (1, 2) in base 4 reads 1*4 + 2
    assert context_index((1, 2), 4) == 6
    assert context_tuple(6, 4, 2) == (1, 2)
    assert context_index((0, 0, 1), 2) == 1


@given(st.integers(2, 5), st.integers(1, 4), st.data())
def test_context_index_roundtrip(d, m, data):
    tup = tuple(data.draw(st.integers(0, d - 1)) for _ in range(m))
    assert context_tuple(context_index(tup, d), d, m) == tup


def test_count_transitions_order1_hand_counts():
    counts = count_transitions(encode_sequence("AABAB", AB), 1)
    # windows A A B A B; transitions A->A, A->B, B->A, A->B
    assert counts.transition.tolist() == [[1, 2], [1, 0]]
    assert counts.context_total.tolist() == [3, 1]
    assert counts.window_count == 5
    assert counts.n == 5
    assert counts.n_transitions == 4
    assert counts.p == 2


def test_count_transitions_order2_hand_counts():
    counts = count_transitions(encode_sequence("AABAB", AB), 2)
    # contexts AA AB BA AB; the final AB window has no successor
    want = np.zeros((4, 2), dtype=np.int64)
    want[0, 1] = 1  # AA -> B
    want[1, 0] = 1  # AB -> A
    want[2, 1] = 1  # BA -> B
    assert np.array_equal(counts.transition, want)
    assert counts.window_count == 4
    assert counts.n_transitions == 3


def test_count_transitions_too_short():
    with pytest.raises(SequenceTooShort):
        count_transitions(encode_sequence("AB", AB), 2)


def test_count_runs_pools_without_fabricating_transitions():
    runs = [encode_sequence("AAB", AB), encode_sequence("AB", AB)]
    counts = count_transitions_runs(runs, 1)
    assert counts.transition.tolist() == [[1, 2], [0, 0]]
    assert counts.n == 5
    assert counts.window_count == 5
    assert counts.n_transitions == 3


def test_count_runs_short_run_contributes_windows_only():
    runs = [encode_sequence("AAB", AB), encode_sequence("B", AB)]
    counts = count_transitions_runs(runs, 1)
    assert counts.n_transitions == 2
    assert counts.window_count == 4  # 3 + 1


def test_count_runs_requires_a_usable_run():
    with pytest.raises(SequenceTooShort):
        count_transitions_runs([encode_sequence("A", AB)], 1)
    with pytest.raises(SequenceTooShort):
        count_transitions_runs([], 1)


def test_empirical_transitions_masks_unobserved():
    counts = count_transitions(encode_sequence("AABAB", AB), 2)
    emp = empirical_transitions(counts)
    assert emp.observed.tolist() == [True, True, True, False]
    assert np.isnan(emp.pihat[3]).all()
    assert emp.pihat[0].tolist() == [0.0, 1.0]
    idx, rows = emp.observed_rows()
    assert idx.tolist() == [0, 1, 2]
    assert rows.shape == (3, 2)
    assert np.allclose(rows.sum(axis=1), 1.0)


@settings(max_examples=40)
@given(st.integers(2, 4), st.integers(1, 3), st.lists(st.integers(0, 3), min_size=8, max_size=60))
def test_counting_invariants(d, m, raw):
    codes = np.array([c % d for c in raw], dtype=np.int64)
    seq = EncodedSequence(codes, d)
    counts = count_transitions(seq, m)
    assert counts.n_transitions == seq.n - m
    assert np.array_equal(counts.context_total, counts.transition.sum(axis=1))
    emp = empirical_transitions(counts)
    _, rows = emp.observed_rows()
    if rows.size:
        assert np.allclose(rows.sum(axis=1), 1.0, atol=1e-12)
