"""Rand index and adjusted Rand index against brute-force pair counting."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _oracles import adjusted_rand_index_bruteforce, rand_index_bruteforce
from smmfit.errors import MismatchedElements
from smmfit.metrics import ContingencyTable, adjusted_rand_index, rand_index


def test_contingency_table():
    t = ContingencyTable.from_labels(["x", "x", "y", "y"], [0, 1, 0, 1])
    assert t.counts.tolist() == [[1, 1], [1, 1]]
    assert t.row_sums.tolist() == [2, 2]
    assert t.col_sums.tolist() == [2, 2]
    assert t.total == 4


def test_contingency_rejects_length_mismatch():
    with pytest.raises(MismatchedElements):
        ContingencyTable.from_labels([0, 1], [0, 1, 2])


def test_identical_partitions():
    labels = [0, 0, 1, 2, 2, 2]
    assert rand_index(labels, labels) == 1.0
    assert adjusted_rand_index(labels, labels) == 1.0


def test_crossed_pairs_hand_values():
    # {1,2},{3,4} versus {1,3},{2,4}: no pair is together in both, two pairs
    # are split in both, so RI = 2/6; the adjustment formula gives
    # (0 - 2*2/6) / ((2+2)/2 - 2*2/6) = -1/2.
    a = [0, 0, 1, 1]
    b = [0, 1, 0, 1]
    assert rand_index(a, b) == pytest.approx(1 / 3)
    assert adjusted_rand_index(a, b) == pytest.approx(-0.5)


def test_ari_zero_when_one_side_is_trivial():
    # all singletons against one block has no same-same pairs at all
    assert adjusted_rand_index([0, 1, 2], ["u", "u", "u"]) == 0.0


def test_ari_degenerate_convention():
    # both all-singletons: the correction denominator vanishes and the
    # partitions are identical
    assert adjusted_rand_index([0, 1, 2, 3], [3, 2, 1, 0]) == 1.0


def test_needs_two_elements():
    with pytest.raises(MismatchedElements):
        rand_index([0], [0])


def test_label_names_do_not_matter():
    a = [0, 0, 1, 2]
    b = ["c", "c", "a", "b"]
    assert rand_index(a, b) == 1.0
    assert adjusted_rand_index(a, b) == 1.0


def test_matches_bruteforce_on_random_pairs():
    rng = np.random.default_rng(5)
    for _ in range(60):
        p = int(rng.integers(2, 40))
        a = rng.integers(0, int(rng.integers(1, 8)) + 1, size=p)
        b = rng.integers(0, int(rng.integers(1, 8)) + 1, size=p)
        assert rand_index(a, b) == rand_index_bruteforce(a, b)
        assert adjusted_rand_index(a, b) == adjusted_rand_index_bruteforce(a, b)


def test_random_labels_score_near_zero():
    rng = np.random.default_rng(6)
    vals = [
        adjusted_rand_index(rng.integers(0, 4, 60), rng.integers(0, 4, 60))
        for _ in range(200)
    ]
    assert abs(float(np.mean(vals))) < 0.05


@settings(max_examples=50)
@given(st.lists(st.integers(0, 5), min_size=2, max_size=30))
def test_self_similarity_is_one(labels):
    assert adjusted_rand_index(labels, labels) == 1.0
    assert rand_index(labels, labels) == 1.0


@settings(max_examples=50)
@given(
    st.lists(st.integers(0, 4), min_size=2, max_size=25),
    st.data(),
)
def test_symmetry_and_range(a, data):
    b = data.draw(st.lists(st.integers(0, 4), min_size=len(a), max_size=len(a)))
    assert rand_index(a, b) == rand_index(b, a)
    assert 0.0 <= rand_index(a, b) <= 1.0
    assert adjusted_rand_index(a, b) == pytest.approx(adjusted_rand_index(b, a), abs=1e-12)
