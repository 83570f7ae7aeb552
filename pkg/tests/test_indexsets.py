"""Ranking and unranking of lexicographic k-index sets."""

import itertools

import pytest

from kcontract.errors import (
    CapacityError,
    InvalidRankError,
    InvalidTupleError,
    ShapeError,
)
from kcontract.indexsets import LexIndex, binomial, enumerate_qkn, rank, unrank


def test_binomial_small_table():
    assert binomial(0, 0) == 1
    assert binomial(5, 0) == 1
    assert binomial(5, 5) == 1
    assert binomial(4, 2) == 6
    assert binomial(10, 3) == 120
    # exact integers well past float precision
    assert binomial(64, 32) == 1832624140942590534


def test_binomial_rejects_bad_input():
    with pytest.raises(ShapeError):
        binomial(3, 4)
    with pytest.raises(ShapeError):
        binomial(-1, 0)
    with pytest.raises(ShapeError):
        binomial(2, -1)


def test_enumerate_matches_itertools():
    for n in range(1, 8):
        for k in range(1, n + 1):
            got = enumerate_qkn(k, n)
            want = list(itertools.combinations(range(1, n + 1), k))
            assert got == want
            assert len(got) == binomial(n, k)


def test_enumerate_is_lexicographic():
    q = enumerate_qkn(3, 6)
    assert q[0] == (1, 2, 3)
    assert q[-1] == (4, 5, 6)
    assert all(a < b for a, b in zip(q, q[1:]))


def test_rank_unrank_roundtrip_exhaustive():
    for n in range(1, 9):
        for k in range(1, n + 1):
            for pos, t in enumerate(enumerate_qkn(k, n)):
                r = rank(t, n)
                assert r.rank == pos
                assert r.k == k and r.n == n
                assert unrank(r) == t


def test_unrank_rank_roundtrip_random():
    import numpy as np

    rng = np.random.default_rng(0)
    for _ in range(200):
        n = int(rng.integers(1, 20))
        k = int(rng.integers(1, n + 1))
        pos = int(rng.integers(0, binomial(n, k)))
        t = unrank(LexIndex(rank=pos, k=k, n=n))
        assert rank(t, n).rank == pos


def test_known_tuple_positions():
    # Q_{2,3} in lexicographic order: {1,2}, {1,3}, {2,3}
    assert [unrank(LexIndex(r, 2, 3)) for r in range(3)] == [
        (1, 2),
        (1, 3),
        (2, 3),
    ]
    assert rank((1, 3), 3).rank == 1
    assert rank((3, 4, 5), 5).rank == binomial(5, 3) - 1


def test_tuple_validation():
    with pytest.raises(InvalidTupleError):
        rank((2, 2), 4)  # not strictly increasing
    with pytest.raises(InvalidTupleError):
        rank((3, 1), 4)
    with pytest.raises(InvalidTupleError):
        rank((0, 1), 4)  # 1-based entries
    with pytest.raises(InvalidTupleError):
        rank((1, 5), 4)
    with pytest.raises(InvalidTupleError):
        rank((), 4)


def test_lexindex_validation():
    with pytest.raises(InvalidRankError):
        LexIndex(rank=6, k=2, n=4)  # C(4,2) = 6, ranks end at 5
    with pytest.raises(InvalidRankError):
        LexIndex(rank=-1, k=2, n=4)
    with pytest.raises(ShapeError):
        LexIndex(rank=0, k=5, n=4)
    with pytest.raises(ShapeError):
        LexIndex(rank=0, k=0, n=4)


def test_capacity_guard(monkeypatch):
    monkeypatch.setenv("KCONTRACT_MAX_COMPOUND", "100")
    with pytest.raises(CapacityError):
        enumerate_qkn(10, 20)  # C(20,10) = 184756
    # small requests still fine under the tightened cap
    assert len(enumerate_qkn(2, 5)) == 10
