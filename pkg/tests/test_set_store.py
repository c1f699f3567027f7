import itertools

import numpy as np

import pytest
from hypothesis import given, settings, strategies as st

from kdistinct.errors import StoreError
from kdistinct.hash_families import eval_bool_many
from kdistinct.set_store import CanonicalStore, bucket_of, measure_failure_rate


def _store(**kw):
    args = dict(N=64, M=64, r=16, k=2, seed=5)
    args.update(kw)
    return CanonicalStore(**args)


def test_bucket_formula():
    assert [bucket_of(i, 12, 3) for i in (2, 5, 9)] == [1, 2, 3]
    assert bucket_of(12, 12, 3) == 3


def test_insert_lookup_remove():
    s = _store()
    empty = s.serialize()
    s.insert(7, 3)
    assert s.lookup(7) == 3 and s.lookup(8) is None
    before = s.serialize()
    s.lookup(7)
    assert s.serialize() == before
    s.remove(7)
    assert s.serialize() == empty


def test_errors():
    s = _store()
    s.insert(1, 1)
    with pytest.raises(StoreError):
        s.insert(1, 2)
    with pytest.raises(StoreError):
        s.remove(2)
    with pytest.raises(StoreError):
        s.rank(2)


def test_collision_counter():
    s = _store(k=3)
    assert not s.has_k_collision()
    s.insert(1, 9)
    s.insert(20, 9)
    assert not s.has_k_collision()
    s.insert(40, 9)
    assert s.has_k_collision() and s.collision() == (1, 20, 40)
    s.remove(20)
    assert not s.has_k_collision() and s.v == 0


def test_rank_examples():
    s = CanonicalStore(12, 12, 3, 2, 0)
    for i in (2, 5, 9):
        s.insert(i, i)
    assert [s.rank(i) for i in (2, 5, 9)] == [1, 2, 3]
    t = CanonicalStore(12, 12, 3, 2, 0)
    t.insert(3, 1)
    t.insert(2, 1)
    assert t.rank(2) < t.rank(3)


def test_all_insertion_orders_identical():
    outs = set()
    for order in itertools.permutations((3, 1, 2)):
        s = _store()
        for i in order:
            s.insert(i, 10 + i)
        outs.add(s.serialize())
    assert len(outs) == 1


def test_seed_is_part_of_identity():
    a, b = _store(seed=1), _store(seed=2)
    a.insert(3, 3)
    b.insert(3, 3)
    assert a.serialize() != b.serialize()


def test_round_trip():
    s = _store()
    for i in (3, 17, 30, 64):
        s.insert(i, i % 5 + 1)
    t = CanonicalStore.deserialize(s.serialize())
    assert t == s
    t.check_invariants()
    t.insert(5, 2)
    s.insert(5, 2)
    assert t == s


def test_bad_encoding():
    with pytest.raises(StoreError):
        CanonicalStore.deserialize(b"nonsense")


def test_budget_abort_rolls_back():
    s = _store()
    s.insert(3, 3)
    snap = s.serialize()
    assert s.insert(4, 4, budget=1) is False
    assert s.step_budget.failed and s.serialize() == snap
    assert s.remove(3, budget=1) is False and s.serialize() == snap


def test_bucket_overflow_rolls_back():
    s = CanonicalStore(N=1024, M=64, r=32, k=2, seed=0)
    for i in range(1, s.capacity + 1):
        assert s.insert(i, i)
    snap = s.serialize()
    assert s.insert(s.capacity + 1, 1) is False
    assert s.serialize() == snap


def test_failure_rates():
    assert measure_failure_rate(1024, 128, 10_000, seed=0) == 0.0
    assert measure_failure_rate(1024, 128, 500, seed=0, budget=1) == 1.0
    rates = [measure_failure_rate(1024, 128, 1000, seed=2, budget=b) for b in (5, 20, 40, 80, 200)]
    assert rates == sorted(rates, reverse=True)


def test_level_distribution():
    s = CanonicalStore(N=2 ** 17, M=2, r=16, k=2, seed=3)
    n = 100_000
    idx = np.arange(1, n + 1)
    bits = np.stack([eval_bool_many(h, idx) for h in s._hashes])
    levels = np.argmin(np.vstack([bits, np.zeros(n, dtype=bits.dtype)]), axis=0)
    assert all(levels[i - 1] == s.level(i) for i in range(1, 200))
    for j in range(4):
        p = 2.0 ** -(j + 1)
        obs = np.mean(levels == j)
        assert abs(obs - p) <= 3 * (p * (1 - p) / n) ** 0.5


ops = st.lists(st.tuples(st.integers(1, 64), st.integers(1, 6)), max_size=80)


@settings(max_examples=80, deadline=None)
@given(ops)
def test_history_independence(history):
    s = _store()
    for i, x in history:
        if i in s:
            s.remove(i)
        elif len(s) < s.r:
            s.insert(i, x)
        s.check_invariants()
        assert sorted(s.rank(j) for j, _ in s.items()) == list(range(1, len(s) + 1))
    fresh = _store()
    for i, x in s.items():
        fresh.insert(i, x)
    assert fresh.serialize() == s.serialize()
