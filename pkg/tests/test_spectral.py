import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kdistinct.errors import GengroverError, NotUnitaryError
from kdistinct.spectral import (GengroverInput, eigenphases, f_beta, gengrover_analysis,
                                hoffman_wielandt_check, model_system, overlap_at_t,
                                theta_table, walk_gengrover_input)
from kdistinct.verification import random_unitary_near_identity
from kdistinct.walk_core import (WalkParams, build_step_unitary, flip_matrix,
                                 run_single_solution, start_state)


def test_identity_phases():
    assert np.allclose(eigenphases(np.eye(4)).phases, 0)


def test_swap_phases():
    assert sorted(np.abs(eigenphases([[0, 1], [1, 0]]).phases)) == pytest.approx([0, math.pi])


def test_rejects_non_unitary():
    with pytest.raises(NotUnitaryError):
        eigenphases([[1, 1], [0, 1]])


def test_walk_spectrum_structure():
    p = WalkParams(100, 10, 2)
    spec = eigenphases(build_step_unitary(p).entries)
    zero = np.flatnonzero(np.abs(spec.phases) < 1e-9)
    assert zero.size == 1
    v = spec.vectors[:, zero[0]]
    assert abs(abs(np.vdot(v, start_state(p).amps)) - 1) < 1e-9
    rest = np.sort(spec.phases[np.abs(spec.phases) >= 1e-9])
    assert np.allclose(rest, -rest[::-1], atol=1e-9)
    assert np.allclose(spec.reconstruct(), build_step_unitary(p).entries, atol=1e-10)


@pytest.mark.parametrize("k,r,N", [(2, 400, 8000), (3, 900, 27000)])
def test_theta_law(k, r, N):
    rows = theta_table(WalkParams(N, r, k))
    assert [row[0] for row in rows] == list(range(1, k + 1))
    assert all(abs(row[3]) <= 0.1 for row in rows)


def test_theta_error_decreases_with_r():
    errs = [abs(theta_table(WalkParams(20 * r, r, 2))[0][3]) for r in (100, 400, 1600)]
    assert errs[0] > errs[1] > errs[2]


def test_hw_identity_and_scalar():
    rng = np.random.default_rng(3)
    from scipy.stats import unitary_group
    b = unitary_group.rvs(4, random_state=rng)
    ok, margin = hoffman_wielandt_check(np.eye(4), b)
    assert ok and margin == pytest.approx(0, abs=1e-9)
    ok, _ = hoffman_wielandt_check(np.exp(0.3j) * np.eye(4), b)
    assert ok


def test_hw_random_four_by_four():
    rng = np.random.default_rng(4)
    from scipy.stats import unitary_group
    for _ in range(100):
        a = random_unitary_near_identity(4, 0.2, rng)
        assert hoffman_wielandt_check(a, unitary_group.rvs(4, random_state=rng))[0]


def _single(alpha):
    return GengroverInput(alpha, ((math.pi / 2, math.sqrt((1 - alpha ** 2) / 2)),), math.pi / 2)


def test_single_mode_root_and_overlap():
    inp = _single(0.01)
    rep = gengrover_analysis(inp)
    assert abs(f_beta(inp, rep.beta)) < 1e-10
    assert rep.bracket[0] <= rep.beta <= rep.bracket[1]
    u1, u2, s, g = model_system(inp)
    assert overlap_at_t(u1, u2, s, g, rep.t) >= 0.3


def test_beta_linear_in_alpha():
    b1 = gengrover_analysis(_single(0.01)).beta
    b2 = gengrover_analysis(_single(0.005)).beta
    assert b2 / b1 == pytest.approx(0.5, rel=0.05)


def test_overlap_basics():
    inp = _single(0.01)
    u1, u2, s, g = model_system(inp)
    assert overlap_at_t(u1, u2, s, g, 0) == pytest.approx(0.01)
    assert overlap_at_t(u1, u2, s, -1j * g, 7) == pytest.approx(overlap_at_t(u1, u2, s, g, 7))


def test_overlap_matches_walk_engine():
    p = WalkParams(1000, 100, 2)
    t = gengrover_analysis(walk_gengrover_input(p)).t
    u2 = np.linalg.matrix_power(build_step_unitary(p).entries, p.t2)
    good = np.zeros(p.dim)
    good[-1] = 1
    ov = overlap_at_t(flip_matrix(2), u2, start_state(p).amps, good, t)
    _, prob, _ = run_single_solution(p.with_t1(t))
    assert ov == pytest.approx(math.sqrt(prob), abs=1e-9)


def test_gengrover_rejects_large_alpha_and_bad_input():
    with pytest.raises(GengroverError):
        gengrover_analysis(_single(0.5))
    with pytest.raises(GengroverError):
        GengroverInput(0.1, ((1.0, 0.1),), 0.5)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(0, 10**6))
def test_eigenphases_reconstruct(dim, seed):
    from scipy.stats import unitary_group
    u = unitary_group.rvs(dim, random_state=np.random.default_rng(seed))
    spec = eigenphases(u)
    assert np.allclose(spec.reconstruct(), u, atol=1e-9)
    assert np.all((spec.phases > -math.pi) & (spec.phases <= math.pi))
