import itertools
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kdistinct.errors import ParameterError
from kdistinct.hash_families import (BoolMember, eval_bool, eval_bool_many, eval_perm,
                                     eval_perm_batch, eval_perm_many, gf2m,
                                     sample_bool_member, sample_perm_member)


def _joint_counts(n, d, points):
    b = gf2m(3).size
    counts = Counter()
    for coeffs in itertools.product(range(b), repeat=d):
        m = BoolMember.from_coefficients(n, d, coeffs)
        counts[tuple(eval_bool(m, i) for i in points)] += 1
    return counts


@pytest.mark.parametrize("d", [1, 2, 3])
def test_exact_d_wise_uniformity(d):
    total = 8 ** d
    for points in itertools.combinations(range(1, 9), d):
        counts = _joint_counts(8, d, points)
        assert len(counts) == 2 ** d
        assert all(c * 2 ** d == total for c in counts.values())


def test_constant_member():
    m = BoolMember.from_coefficients(8, 3, (0, 0, 5))
    assert len({eval_bool(m, i) for i in range(1, 9)}) == 1


def test_determinism_and_range():
    a, b = sample_bool_member(1000, 4, 11), sample_bool_member(1000, 4, 11)
    assert list(eval_bool_many(a, range(1, 1001))) == list(eval_bool_many(b, range(1, 1001)))
    with pytest.raises(ParameterError):
        eval_bool(a, 0)
    with pytest.raises(ParameterError):
        eval_bool(a, 1001)


def test_marginal_half():
    bits = [eval_bool(sample_bool_member(100, 3, s), 17) for s in range(100_000)]
    mean = np.mean(bits)
    assert abs(mean - 0.5) <= 3 * 0.5 / np.sqrt(len(bits))


def test_wide_field_matches_tables():
    f = gf2m(24)
    rng = np.random.default_rng(0)
    a = rng.integers(0, f.size, 200)
    c = rng.integers(0, f.size, 200)
    assert [f.mul(int(x), int(y)) for x, y in zip(a, c)] == list(f.mul_array(a, c))


def test_zero_rounds_identity():
    m = sample_perm_member(100, 4, 1, rounds=0)
    assert list(eval_perm_many(m, range(1, 101))) == list(range(1, 101))


def test_forward_inverse_q64():
    for seed in range(100):
        m = sample_perm_member(64, 4, seed)
        img = eval_perm_many(m, np.arange(1, 65))
        assert sorted(img) == list(range(1, 65))
        assert list(eval_perm_many(m, img, "inverse")) == list(range(1, 65))


@pytest.mark.parametrize("q", [2, 3, 17, 100, 255, 256])
def test_bijection_exhaustive(q):
    m = sample_perm_member(q, 3, q)
    assert sorted(eval_perm_many(m, range(1, q + 1))) == list(range(1, q + 1))


def test_pair_distribution_close_to_uniform():
    out = eval_perm_batch(16, 2, np.arange(10 ** 6), [1, 2])
    idx = (out[:, 0] - 1) * 16 + (out[:, 1] - 1)
    freq = np.bincount(idx, minlength=256) / len(idx)
    target = np.full(256, 1 / 240)
    target[np.arange(16) * 17] = 0
    assert 0.5 * np.abs(freq - target).sum() <= 0.05


def test_distinct_seeds_distinct_perms():
    pts = np.arange(1, 257)
    same = sum(np.array_equal(eval_perm_many(sample_perm_member(256, 4, 2 * s), pts),
                              eval_perm_many(sample_perm_member(256, 4, 2 * s + 1), pts))
               for s in range(1000))
    assert same <= 10


def test_batch_matches_single():
    seeds = [3, 99, 12345]
    batch = eval_perm_batch(50, 3, seeds, [1, 7, 50])
    for row, s in zip(batch, seeds):
        assert list(row) == [eval_perm(sample_perm_member(50, 3, s), i) for i in (1, 7, 50)]


def test_member_keys():
    m = sample_perm_member(64, 4, 9)
    assert m.key() == {"q": 64, "d": 4, "seed": 9, "rounds": m.rounds, "version": 1}
    assert sample_bool_member(64, 2, 9).key()["n"] == 64


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 500), st.integers(1, 6), st.integers(0, 2 ** 63 - 1))
def test_perm_inverse_property(q, d, seed):
    m = sample_perm_member(q, d, seed)
    pts = np.arange(1, q + 1)
    assert list(eval_perm_many(m, eval_perm_many(m, pts), "inverse")) == list(pts)
