"""
Cross-checks shared by the command line and the acceptance tests.

Each check returns a plain dict of measured values plus a ``passed`` flag so
it can be serialized directly into a report.
"""

from __future__ import annotations

import math
import random
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
from scipy.stats import unitary_group

from . import full_sim
from .instances import planted_instance
from .set_store import CanonicalStore, measure_failure_rate
from .spectral import (GengroverInput, gengrover_analysis, hoffman_wielandt_check,
                       model_system, overlap_at_t, theta_table)
from .walk_core import (WalkParams, build_step_unitary, flip_matrix, start_state)

__all__ = [
    "engine_equivalence",
    "spectrum_check",
    "random_unitary_near_identity",
    "hoffman_wielandt_trials",
    "random_gengrover_input",
    "gengrover_trials",
    "store_histories",
    "store_failure",
]


def engine_equivalence(N: int, r: int, k: int, t1_max: int = 8,
                       t2_values: Iterable[int] = (1, 2, 3, 4), seed: int = 0,
                       tol: float = 1e-9) -> Dict:
    """Run the explicit and collapsed engines side by side on a planted instance.

    After every flip and every walk step the explicit state is projected onto
    the collapsed span; reports the largest residual and the largest gap in
    good-subset probability over all ``t1 <= t1_max`` and ``t2``.
    """
    inst, planted = planted_instance(N, k, 1, seed=seed)
    K = planted[0]
    basis = full_sim.enumerate_basis(N, r, "H")
    mask = full_sim.collision_mask(basis, inst, k)
    flip = flip_matrix(k)
    max_delta = max_res = max_coord = 0.0
    for t2 in t2_values:
        params = WalkParams(N, r, k, t2=t2)
        u = build_step_unitary(params).entries
        v = start_state(params).amps.real.copy()
        state = full_sim.uniform_state(basis)
        for t1 in range(t1_max + 1):
            if t1 > 0:
                state = full_sim.conditional_flip(state, mask)
                v = flip @ v
                for _ in range(t2):
                    state = full_sim.walk_step(state)
                    v = u @ v
                    _, res = full_sim.project_to_subspace(state, K)
                    max_res = max(max_res, res)
            sub, res = full_sim.project_to_subspace(state, K)
            max_res = max(max_res, res)
            max_coord = max(max_coord, float(np.abs(sub.amps - v).max()))
            p_full = float(np.sum(np.abs(state.amps[mask]) ** 2))
            max_delta = max(max_delta, abs(p_full - v[-1] ** 2))
    return {"N": N, "r": r, "k": k, "collision": list(K),
            "max_prob_delta": max_delta, "max_coord_delta": max_coord,
            "max_residual": max_res, "tol": tol,
            "passed": bool(max_delta < tol and max_res < tol and max_coord < tol)}


def spectrum_check(k: int, r: int, N: int, tol: float = 0.1) -> Dict:
    """Relative error of ``theta_j`` against ``2 sqrt(j) / sqrt(r)``."""
    rows = theta_table(WalkParams(N, r, k))
    worst = max(abs(row[3]) for row in rows)
    return {"k": k, "r": r, "N": N,
            "rows": [{"j": j, "theta": th, "predicted": pr, "rel_err": e}
                     for j, th, pr, e in rows],
            "max_rel_err": worst, "tol": tol, "passed": bool(worst <= tol)}


def random_unitary_near_identity(dim: int, dist: float, rng: np.random.Generator) -> np.ndarray:
    """``exp(i H)`` with Hermitian ``H`` scaled so ``||A - I||_2 <= dist``."""
    v = unitary_group.rvs(dim, random_state=rng)
    phases = rng.uniform(-1.0, 1.0, dim)
    # |e^{i p} - 1| = 2 sin(|p|/2); keep every phase inside the allowed radius.
    phases *= 2.0 * math.asin(dist / 2.0)
    return (v * np.exp(1j * phases)) @ v.conj().T


def hoffman_wielandt_trials(trials: int = 100, dims: Sequence[int] = range(3, 9),
                            dist: float = 0.2, seed: int = 0) -> Dict:
    rng = np.random.default_rng(seed)
    dims = list(dims)
    held, margins = 0, []
    for t in range(trials):
        dim = dims[t % len(dims)]
        a = random_unitary_near_identity(dim, dist, rng)
        b = unitary_group.rvs(dim, random_state=rng)
        ok, margin = hoffman_wielandt_check(a, b)
        held += ok
        margins.append(margin)
    return {"trials": trials, "held": held, "min_margin": float(min(margins)),
            "passed": held == trials}


def random_gengrover_input(alpha: float, epsilon: float, rng: np.random.Generator,
                           max_modes: int = 6) -> GengroverInput:
    """Random phases in ``[eps, pi)`` with random weights normalized to 1."""
    m = int(rng.integers(1, max_modes + 1))
    thetas = rng.uniform(epsilon, math.pi - 1e-6, m)
    thetas[0] = epsilon
    w = rng.uniform(0.05, 1.0, m)
    w *= math.sqrt((1.0 - alpha ** 2) / (2.0 * np.sum(w ** 2)))
    return GengroverInput(alpha, tuple(zip(thetas.tolist(), w.tolist())), epsilon)


def gengrover_trials(trials: int = 50, alpha: float = 1e-3, epsilon: float = 0.3,
                     seed: int = 1) -> Dict:
    """Root location and overlap at ``t = floor(pi / (2 beta))`` on model systems."""
    rng = np.random.default_rng(seed)
    lo_bound, hi_bound = epsilon * alpha / math.sqrt(math.pi), 2.6 * alpha
    floor = min((1 - alpha ** 2) / 2, (1 - alpha ** 2) * epsilon / 4) - 0.1 * epsilon
    rows = []
    for _ in range(trials):
        inp = random_gengrover_input(alpha, epsilon, rng)
        rep = gengrover_analysis(inp)
        u1, u2, s, g = model_system(inp)
        ov = overlap_at_t(u1, u2, s, g, rep.t)
        rows.append({"modes": len(inp.modes), "beta": rep.beta, "t": rep.t,
                     "overlap": ov,
                     "beta_ok": bool(lo_bound <= rep.beta <= hi_bound),
                     "overlap_ok": bool(ov >= floor)})
    passed = all(r["beta_ok"] and r["overlap_ok"] for r in rows)
    return {"trials": trials, "alpha": alpha, "epsilon": epsilon,
            "beta_bounds": [lo_bound, hi_bound], "overlap_floor": floor,
            "min_overlap": min(r["overlap"] for r in rows),
            "beta_range": [min(r["beta"] for r in rows), max(r["beta"] for r in rows)],
            "passed": passed}


def store_histories(N: int = 1024, r: int = 256, set_size: int = 200,
                    histories: int = 1000, steps: int = 60, M: Optional[int] = None,
                    k: int = 2, seed: int = 0) -> Dict:
    """Random insert/remove histories ending at one set must serialize identically.

    Every history starts from an empty store, performs ``steps`` random
    operations, then reconciles to the target set. Ranks are checked to be a
    bijection after every operation.
    """
    M = N if M is None else M
    rng = random.Random(seed)
    target = sorted(rng.sample(range(1, N + 1), set_size))
    values = {i: rng.randint(1, max(2, set_size // 4)) for i in range(1, N + 1)}
    ref = CanonicalStore(N, M, r, k, seed)
    for i in target:
        ref.insert(i, values[i])
    expected = ref.serialize()
    identical = rank_ok = 0
    for _ in range(histories):
        st = CanonicalStore(N, M, r, k, seed)
        cur: List[int] = []
        ok = True

        def ranks_bijective() -> bool:
            return sorted(st.rank(i) for i in cur) == list(range(1, len(cur) + 1))

        for _ in range(steps):
            if cur and rng.random() < 0.4:
                i = cur.pop(rng.randrange(len(cur)))
                st.remove(i)
            elif len(cur) < r:
                i = rng.randint(1, N)
                if i in st:
                    continue
                st.insert(i, values[i])
                cur.append(i)
            ok &= ranks_bijective()
        target_set = set(target)
        for i in [i for i in cur if i not in target_set]:
            st.remove(i)
            cur.remove(i)
        order = [i for i in target if i not in st]
        rng.shuffle(order)
        for i in order:
            st.insert(i, values[i])
            cur.append(i)
        ok &= ranks_bijective()
        identical += st.serialize() == expected
        rank_ok += ok
    return {"N": N, "r": r, "set_size": set_size, "histories": histories,
            "identical": identical, "rank_bijective": rank_ok,
            "passed": identical == histories and rank_ok == histories}


def store_failure(N: int = 1024, r: int = 128, ops: int = 10_000, seed: int = 0,
                  c: float = 1.0) -> Dict:
    rate = measure_failure_rate(N, r, ops, seed=seed, c=c)
    return {"N": N, "r": r, "ops": ops, "c": c, "failure_rate": rate,
            "passed": rate == 0.0}
