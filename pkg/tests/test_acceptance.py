"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line."""

import itertools
import math
from collections import Counter

import numpy as np
import pytest

from kdistinct.collision_driver import exponent_scan, r_sweep, run_k_distinctness
from kdistinct.hash_families import BoolMember, eval_bool
from kdistinct.instances import planted_instance
from kdistinct.spectral import gengrover_analysis, theta_table, walk_gengrover_input
from kdistinct.verification import (engine_equivalence, gengrover_trials,
                                    hoffman_wielandt_trials, store_failure, store_histories)
from kdistinct.walk_core import WalkParams, run_single_solution


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {number}: {'PASS' if ok else 'FAIL'} | {detail}")
        assert ok, detail
    return emit


def test_criterion_01_engine_equivalence(report):
    worst_delta = worst_res = 0.0
    for N, r, k in [(6, 2, 2), (6, 3, 2), (7, 3, 2), (8, 3, 3)]:
        rep = engine_equivalence(N, r, k, t1_max=8, t2_values=range(1, 5))
        worst_delta = max(worst_delta, rep["max_prob_delta"])
        worst_res = max(worst_res, rep["max_residual"])
    ok = worst_delta < 1e-9 and worst_res < 1e-9
    report(1, ok, f"max |p_full - p_engine| = {worst_delta:.2e}, max residual = {worst_res:.2e}")


def _max_err(k, r, N):
    return max(abs(row[3]) for row in theta_table(WalkParams(N, r, k)))


def test_criterion_02_eigenphase_law(report):
    cases = [(2, 400, 8000), (3, 900, 27000)]
    errs = {c: _max_err(*c) for c in cases}
    within = all(e <= 0.1 for e in errs.values())
    shrink = {c: _max_err(c[0], 4 * c[1], 4 * c[2]) for c in cases}
    shrinks = all(shrink[c] < errs[c] for c in cases)
    detail = "; ".join(f"k={k} r={r}: err {errs[(k, r, N)]:.4f} -> r={4 * r}: {shrink[(k, r, N)]:.4f}"
                       for k, r, N in cases)
    report(2, within and shrinks, f"within 0.1: {within}, shrinks at 4r: {shrinks} ({detail})")


def test_criterion_03_constant_success(report):
    probs = {}
    for N in (10 ** 3, 10 ** 4, 10 ** 5):
        r = int(math.floor(N ** (2 / 3) + 1e-9))
        p = WalkParams(N, r, 2, t2=math.ceil(math.pi * math.sqrt(r) / (3 * math.sqrt(2))))
        t1 = gengrover_analysis(walk_gengrover_input(p)).t
        probs[N] = run_single_solution(p.with_t1(t1))[1]
    ok = all(v >= 0.4 for v in probs.values())
    report(3, ok, ", ".join(f"N={N}: {v:.3f}" for N, v in probs.items()))


def test_criterion_04_query_exponent(report):
    s2 = exponent_scan(2, [10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6], seed=1, trials=5)
    s3 = exponent_scan(3, [10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6], seed=2, trials=5)
    ok = 0.62 <= s2.slope <= 0.72 and 0.70 <= s3.slope <= 0.80
    report(4, ok, f"slope k=2: {s2.slope:.3f} (target 2/3), k=3: {s3.slope:.3f} (target 3/4)")


def test_criterion_05_memory_tradeoff(report):
    N = 10 ** 5
    rows = r_sweep(N, 2, [2 ** e for e in range(6, 17)], seed=3, trials=5)
    model = np.array([max(N / math.sqrt(r), r) for r, _ in rows])
    q = np.array([t for _, t in rows])
    c = float(np.exp(np.mean(np.log(q / model))))
    ratio = q / (c * model)
    ok = bool(np.all((ratio >= 1 / 3) & (ratio <= 3)))
    report(5, ok, f"c = {c:.3f}, ratio range [{ratio.min():.2f}, {ratio.max():.2f}] (allowed [0.33, 3])")


def test_criterion_06_generalized_grover(report):
    rep = gengrover_trials(50, alpha=1e-3, epsilon=0.3, seed=1)
    report(6, rep["passed"],
           f"beta in [{rep['beta_range'][0]:.2e}, {rep['beta_range'][1]:.2e}] vs bounds "
           f"[{rep['beta_bounds'][0]:.2e}, {rep['beta_bounds'][1]:.2e}]; min overlap "
           f"{rep['min_overlap']:.3f} vs floor {rep['overlap_floor']:.3f}")


def test_criterion_07_hoffman_wielandt(report):
    rep = hoffman_wielandt_trials(100, dims=range(3, 9), dist=0.2, seed=7)
    report(7, rep["passed"], f"held {rep['held']}/100, min margin {rep['min_margin']:.3e}")


def test_criterion_08_canonical_store(report):
    hist = store_histories(N=1024, r=256, set_size=200, histories=1000, seed=8)
    fail = store_failure(N=1024, r=128, ops=10_000, seed=8)
    ok = hist["passed"] and fail["passed"]
    report(8, ok, f"identical serializations {hist['identical']}/1000, rank bijective "
                  f"{hist['rank_bijective']}/1000, failure rate {fail['failure_rate']}")


def _rate(n_coll, seeds, offset):
    ok = 0
    for s in range(seeds):
        inst, _ = planted_instance(60, 2, n_coll, seed=offset + s)
        res = run_k_distinctness(inst, 16, 2, seed=10 ** 6 + offset + s)
        ok += res.found is not None
    return ok / seeds


def test_criterion_09_multi_collision_driver(report):
    p = run_single_solution(WalkParams(60, 16, 2))[1]
    unique = _rate(1, 500, 0)
    multi = _rate(3, 500, 5000)
    ok = p >= 0.8 and multi >= 0.35 and unique >= 0.9 * p
    report(9, ok, f"p = {p:.3f} (needs >= 0.8), three collisions {multi:.3f} (needs >= 0.35), "
                  f"unique {unique:.3f} (needs >= {0.9 * p:.3f})")


def test_criterion_10_d_wise_exactness(report):
    exact = True
    for d in (1, 2, 3):
        members = [BoolMember.from_coefficients(8, d, c)
                   for c in itertools.product(range(8), repeat=d)]
        table = np.array([[eval_bool(m, i) for i in range(1, 9)] for m in members])
        for pts in itertools.combinations(range(8), d):
            counts = Counter(map(tuple, table[:, pts]))
            exact &= len(counts) == 2 ** d and set(counts.values()) == {len(members) // 2 ** d}
    report(10, exact, "joint distribution exactly uniform for n=8, d in {1, 2, 3}")
