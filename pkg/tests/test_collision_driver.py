import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kdistinct.collision_driver import (SubsetChain, exponent_scan, inner_algorithm2,
                                        next_subset, pick_prime_power, run_k_distinctness)
from kdistinct.errors import ParameterError
from kdistinct.instances import Instance, planted_instance
from kdistinct.walk_core import WalkParams, run_single_solution


def _even_prime_powers(limit):
    out = set()
    for p in range(2, math.isqrt(limit) + 1):
        if all(p % d for d in range(2, math.isqrt(p) + 1)):
            q = p * p
            while q <= limit:
                out.add(q)
                q *= p * p
    return out


def test_prime_power_examples():
    assert pick_prime_power(4, 2) == (4, False)
    assert pick_prime_power(5, 2) == (9, True)


@pytest.mark.parametrize("target,k", [(t, k) for t in (100, 1000, 4000, 10007, 65536) for k in (2, 3)])
def test_prime_power_brute_force(target, k):
    hi = math.floor(target * (1 + 1 / (2 * k * k)))
    inside = sorted(q for q in _even_prime_powers(hi) if q >= target)
    q, relaxed = pick_prime_power(target, k)
    if inside:
        assert (q, relaxed) == (inside[0], False)
    else:
        assert relaxed and q >= target and math.isqrt(q) ** 2 == q


def test_identity_permutation_keeps_prefix():
    chain = SubsetChain.start(100)
    chain.q_values.append(121)
    next_subset(chain, 2, lambda x: x)
    cutoff = math.ceil(4 * 121 / 5)
    assert list(chain.current) == list(range(1, min(100, cutoff) + 1))


def test_shrink_bound():
    rng = np.random.default_rng(0)
    chain = SubsetChain.start(5000)
    for _ in range(5):
        m = chain.current.size
        q, _ = pick_prime_power(m, 2)
        chain.q_values.append(q)
        table = rng.permutation(q) + 1
        next_subset(chain, 2, lambda x: table[x - 1])
        assert chain.current.size <= 4 / 5 * (1 + 1 / 8) * m + 1


def test_pair_survival_rate():
    rng = np.random.default_rng(1)
    k, m = 2, 400
    q, _ = pick_prime_power(m, k)
    cutoff = math.ceil(2 * k * q / (2 * k + 1))
    hits = 0
    trials = 10_000
    for _ in range(trials):
        perm = rng.permutation(q)
        hits += perm[0] < cutoff and perm[1] < cutoff
    expect = (cutoff / q) * ((cutoff - 1) / (q - 1))
    assert abs(hits / trials - (2 * k / (2 * k + 1)) ** 2) <= 0.05
    assert abs(hits / trials - expect) <= 4 * math.sqrt(expect / trials)


def test_distinct_instance_answers_none():
    inst = Instance(tuple(range(1, 61)))
    for seed in range(10):
        res = run_k_distinctness(inst, 16, 2, seed=seed)
        assert res.found is None
        assert res.trace[-1]["outcome"] == "none"


def test_found_tuples_verify_and_ledger_reproducible():
    inst, _ = planted_instance(200, 3, 2, seed=4)
    for seed in range(20):
        a = run_k_distinctness(inst, 30, 3, seed=seed)
        b = run_k_distinctness(inst, 30, 3, seed=seed)
        assert a.ledger == b.ledger and a.trace == b.trace
        if a.found:
            assert len(set(a.found)) == 3
            assert len({inst[i] for i in a.found}) == 1
        assert len(a.trace) <= math.ceil(5 * 3 * math.log(200)) + 1


def test_inner_matches_engine():
    N, r, k = 60, 16, 2
    inst, planted = planted_instance(N, k, 1, seed=2)
    p = run_single_solution(WalkParams(N, r, k))[1]
    rng = np.random.default_rng(5)
    draws = 10_000
    hits = sum(set(planted[0]) <= set(inner_algorithm2(inst, r, k, rng)[0]) for _ in range(draws))
    assert abs(hits / draws - p) <= 3 * math.sqrt(p * (1 - p) / draws)


def test_inner_zero_collisions_and_cost():
    inst = Instance(tuple(range(1, 61)))
    S, ledger = inner_algorithm2(inst, 16, 2, seed=0)
    assert len(S) == 16 and len(set(S)) == 16
    assert ledger.setup_queries == 16 and ledger.walk_queries > 0


def test_inner_multi_collision_not_below_uniform():
    inst, _ = planted_instance(60, 2, 3, seed=8)
    rng = np.random.default_rng(0)
    hits = 0
    for _ in range(2000):
        S = set(inner_algorithm2(inst, 16, 2, rng)[0])
        vals = [inst[i] for i in S]
        hits += len(vals) != len(set(vals))
    # Inclusion-exclusion over the three disjoint planted pairs.
    uniform = sum((-1) ** (t + 1) * math.comb(3, t) * math.comb(60 - 2 * t, 16 - 2 * t)
                  for t in (1, 2, 3)) / math.comb(60, 16)
    assert hits / 2000 >= uniform - 3 * math.sqrt(uniform * (1 - uniform) / 2000)


def test_errors():
    inst = Instance(tuple(range(1, 61)))
    with pytest.raises(ParameterError):
        run_k_distinctness(inst, 1, 2)
    with pytest.raises(ParameterError):
        exponent_scan(2, [1000, 100, 10000])


def test_tiny_instance_terminates():
    res = run_k_distinctness(Instance((1, 2, 3, 4)), 2, 2, seed=0)
    assert res.found is None


@settings(max_examples=25, deadline=None)
@given(st.integers(30, 150), st.integers(0, 3), st.integers(0, 10 ** 6))
def test_driver_answers_are_sound(N, n_coll, seed):
    inst, _ = planted_instance(N, 2, n_coll, seed=seed)
    res = run_k_distinctness(inst, max(2, N // 4), 2, seed=seed)
    if res.found:
        assert len({inst[i] for i in res.found}) == 1
    else:
        assert n_coll == 0 or res.trace
    ledger = res.ledger
    assert ledger.total == (ledger.setup_queries + ledger.walk_queries
                            + ledger.classical_queries + ledger.grover_charged)


def test_feistel_matches_uniform_permutations():
    def rate(source):
        ok = 0
        for s in range(300):
            inst, _ = planted_instance(400, 2, 3, seed=s)
            ok += run_k_distinctness(inst, 20, 2, seed=s, perm_source=source).answer
        return ok / 300

    a, b = rate("feistel"), rate("uniform")
    pooled = (a + b) / 2
    se = math.sqrt(2 * pooled * (1 - pooled) / 300)
    assert abs(a - b) <= 3 * se + 1e-12
