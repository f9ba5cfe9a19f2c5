from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from confinit.domain import DataMessage, NeighborRecord, Reading
from confinit.similarity import SimilarityParams, aggregate_reading, is_similar, mutual_similarity

P = SimilarityParams(3.0)


def rec(aR, nR):
    return NeighborRecord(aR, aR, nR)


@pytest.mark.parametrize(
    "own, terms, expected",
    [
        (15, [(16, 1)], 15.5),
        (24, [(21, 1)], 22.5),
        (42, [], 42.0),
        (22, [(20, 1), (23, 1)], 65 / 3),
    ],
)
def test_aggregate_examples(own, terms, expected):
    assert aggregate_reading(own, [rec(a, n) for a, n in terms]) == pytest.approx(expected, abs=1e-12)


def test_aggregate_accepts_reading():
    assert aggregate_reading(Reading(15.0), [rec(16, 1)]) == 15.5


def test_is_similar_examples():
    assert is_similar(16, 15.5, P)
    assert not is_similar(45, 16, P)
    assert not is_similar(18.5, 15.5, P)  # exactly 3 apart: strict


def test_mutual_similarity_examples():
    assert mutual_similarity(DataMessage(1, Reading(16.0), 15.0, 1), 15.0, 15.5, P)
    assert not mutual_similarity(DataMessage(1, Reading(45.0), 45.0, 1), 16.0, 16.0, P)
    assert not mutual_similarity(DataMessage(1, Reading(16.0), 40.0, 1), 16.0, 16.0, P)


def test_cthresh_must_be_positive():
    with pytest.raises(ValueError):
        SimilarityParams(0.0)


vals = st.floats(-1e6, 1e6, allow_nan=False)
terms = st.lists(st.tuples(vals, st.integers(0, 50)), max_size=20)


@settings(max_examples=500, deadline=None)
@given(vals, terms)
def test_aggregate_is_weighted_mean(own, ts):
    got = aggregate_reading(own, [rec(a, n) for a, n in ts])
    lo = min([own] + [a for a, _ in ts])
    hi = max([own] + [a for a, _ in ts])
    assert lo - 1e-6 <= got <= hi + 1e-6
    num = math.fsum([own] + [a * n for a, n in ts])
    den = 1 + sum(n for _, n in ts)
    assert got == pytest.approx(num / den, rel=1e-12, abs=1e-9)


@settings(max_examples=500, deadline=None)
@given(vals, vals)
def test_similarity_symmetric(a, b):
    assert is_similar(a, b, P) == is_similar(b, a, P)


@settings(max_examples=500, deadline=None)
@given(st.integers(-10**6, 10**6))
def test_similarity_strict(a):
    a = float(a)
    assert is_similar(a, a, P)
    assert not is_similar(a, a + 3.0, P)
    assert not is_similar(a, a - 3.0, P)
