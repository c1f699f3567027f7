"""
Multiple-collision driver with subset subsampling and full query accounting.

While the live index set ``T_j`` is larger than ``max(r, sqrt N)`` the driver
runs the single-solution algorithm on ``T_j`` with memory ``r_j = r |T_j| / N``,
verifies the measured subset classically, and otherwise shrinks ``T_j`` with a
random permutation on a prime-power domain ``[q_j]``. Small remainders are
finished by a classical scan (``|T_j| <= r``) or by an emulated Grover search
over k-tuples.

Inner runs are modelled, not simulated on explicit states: with exactly one
k-collision in ``T_j`` the measured subset follows the exact final
distribution of the collapsed engine; otherwise it is uniform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ParameterError
from .hash_families import DEFAULT_ROUNDS, eval_perm_many, sample_perm_member
from .instances import Instance, find_k_collision, planted_instance
from .ledger import QueryLedger
from .walk_core import WalkParams, default_t1, run_single_solution

__all__ = [
    "pick_prime_power",
    "SubsetChain",
    "next_subset",
    "CollisionResult",
    "inner_algorithm2",
    "run_k_distinctness",
    "ScanResult",
    "exponent_scan",
    "r_sweep",
]


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def pick_prime_power(target: int, k: int) -> Tuple[int, bool]:
    """Smallest ``p^(2m)`` in ``[target, (1 + 1/(2k^2)) target]``.

    Returns ``(q, relaxed)``. When the window holds no even prime power, ``q``
    is the smallest ``p^2 >= target`` and ``relaxed`` is ``True``.
    """
    if target < 2:
        raise ParameterError("target must be >= 2")
    hi = math.floor(target * (1 + 1 / (2 * k * k)))
    best = None
    p = 2
    while p * p <= hi:
        if _is_prime(p):
            q = p * p
            while q < target:
                q *= p * p
            if q <= hi and (best is None or q < best):
                best = q
        p += 1
    if best is not None:
        return best, False
    p = math.isqrt(target - 1) + 1
    while not _is_prime(p):
        p += 1
    return p * p, True


@dataclass
class SubsetChain:
    """Nested live sets ``T_1 = [N] >= T_2 >= ...`` with their domains and seeds."""

    sets: List[np.ndarray]
    q_values: List[int] = field(default_factory=list)
    perm_seeds: List[int] = field(default_factory=list)
    relaxed: List[bool] = field(default_factory=list)

    @classmethod
    def start(cls, N: int) -> "SubsetChain":
        return cls([np.arange(1, N + 1, dtype=np.int64)])

    @property
    def current(self) -> np.ndarray:
        return self.sets[-1]


def next_subset(chain: SubsetChain, k: int, perm) -> SubsetChain:
    """Append ``T_{j+1}``.

    ``T_j`` (sorted) is embedded by rank into ``[q_j]``; rank ``rho`` survives
    iff ``pi_j(rho) <= ceil(2k/(2k+1) q_j)``. ``perm`` maps a 1-based int array
    of ranks to their images under ``pi_j`` and must be a bijection on ``[q_j]``.
    """
    T = chain.current
    q = chain.q_values[-1]
    if T.size > q:
        raise ParameterError("the current set does not fit in the permutation domain")
    cutoff = math.ceil(2 * k * q / (2 * k + 1))
    images = np.asarray(perm(np.arange(1, T.size + 1, dtype=np.int64)))
    chain.sets.append(T[images <= cutoff])
    return chain


@dataclass
class CollisionResult:
    """Outcome of :func:`run_k_distinctness`.

    ``found`` holds k sorted indices with equal values, or ``None`` for the
    answer "no k-collision". ``trace`` has one record per loop iteration plus
    one for the finishing step.
    """

    found: Optional[Tuple[int, ...]]
    ledger: QueryLedger
    trace: List[Dict] = field(default_factory=list)

    @property
    def answer(self) -> bool:
        return self.found is not None

    def to_dict(self) -> Dict:
        return {"found": list(self.found) if self.found else None,
                "ledger": self.ledger.to_dict(), "trace": self.trace}


@lru_cache(maxsize=4096)
def _inner_model(n: int, r: int, k: int) -> Tuple[Tuple[float, ...], int, int]:
    """Final distribution of ``|S & K|`` for a unique collision, plus ``(t1, t2)``."""
    params = WalkParams(n, r, k)
    params = params.with_t1(default_t1(params))
    final, _, _ = run_single_solution(params)
    probs = np.abs(final.amps) ** 2
    by_type = [probs[2 * j] + (probs[2 * j + 1] if j < k else 0.0) for j in range(k + 1)]
    total = sum(by_type)
    return tuple(p / total for p in by_type), params.t1, params.t2


def _count_collisions(values: np.ndarray, k: int) -> int:
    _, counts = np.unique(values, return_counts=True)
    return sum(math.comb(int(c), k) for c in counts if c >= k)


def _sample_inner(values: np.ndarray, r_j: int, k: int,
                  rng: np.random.Generator) -> Tuple[np.ndarray, QueryLedger]:
    n = values.size
    if not k <= r_j < n:
        raise ParameterError(f"need k <= r_j < |T|, got r_j={r_j}, |T|={n}")
    dist, t1, t2 = _inner_model(n, r_j, k)
    ledger = QueryLedger()
    ledger.charge_setup(r_j)
    ledger.charge_walk(2 * t1 * t2)
    if _count_collisions(values, k) == 1:
        uniq, inv, counts = np.unique(values, return_inverse=True, return_counts=True)
        in_K = counts[inv] >= k
        K = np.flatnonzero(in_K)
        rest = np.flatnonzero(~in_K)
        j = int(rng.choice(k + 1, p=dist))
        S = np.concatenate([rng.choice(K, j, replace=False),
                            rest[rng.choice(rest.size, r_j - j, replace=False)]])
    else:
        S = rng.choice(n, r_j, replace=False)
    return np.sort(S) + 1, ledger


def inner_algorithm2(sub_instance: Instance, r_j: int, k: int,
                     seed=None) -> Tuple[Tuple[int, ...], QueryLedger]:
    """Measured subset (1-based, sorted) of one single-solution run, and its cost.

    Cost is ``r_j + 2 t1 t2`` with the default ``t1`` and ``t2`` for
    ``(|sub_instance|, r_j, k)``.
    """
    if k < 2:
        raise ParameterError("k must be >= 2")
    rng = np.random.default_rng(seed)
    S, ledger = _sample_inner(np.asarray(sub_instance.values), r_j, k, rng)
    return tuple(int(i) for i in S), ledger


def _tuple_count(m: int, k: int) -> int:
    return math.perm(m, k)


def run_k_distinctness(instance: Instance, r: int, k: int, seed=None,
                       perm_source: str = "feistel",
                       rounds: int = DEFAULT_ROUNDS) -> CollisionResult:
    """Decide k-distinctness with the subsampling driver.

    Parameters
    ----------
    perm_source : {"feistel", "uniform"}
        Keyed Feistel permutations from the hash family, or exactly uniform
        permutations drawn from the generator.
    """
    N = instance.N
    if k < 2:
        raise ParameterError("k must be >= 2")
    if r < k:
        raise ParameterError(f"need r >= k, got r={r}, k={k}")
    if perm_source not in ("feistel", "uniform"):
        raise ParameterError("perm_source must be 'feistel' or 'uniform'")
    rng = np.random.default_rng(seed)
    values = np.asarray(instance.values, dtype=np.int64)
    chain = SubsetChain.start(N)
    ledger = QueryLedger()
    trace: List[Dict] = []
    d = math.ceil(2 * k * math.log2(N))
    limit = math.ceil(5 * k * math.log(N)) + 1
    threshold = max(r, math.sqrt(N))

    while chain.current.size > threshold:
        if len(trace) >= limit:
            raise RuntimeError("subset chain failed to shrink")
        T = chain.current
        m = T.size
        r_j = min(max(k, r * m // N), m - 1)
        S, delta = _sample_inner(values[T - 1], r_j, k, rng)
        ledger.absorb(delta)
        hit = find_k_collision(values, T[S - 1], k)
        record = {"iteration": len(trace) + 1, "size": int(m), "r_j": int(r_j),
                  "queries": delta.total, "outcome": "found" if hit else "continue"}
        trace.append(record)
        if hit:
            return CollisionResult(hit, ledger, trace)
        q, relaxed = pick_prime_power(m, k)
        pseed = int(rng.integers(2**63))
        chain.q_values.append(q)
        chain.perm_seeds.append(pseed)
        chain.relaxed.append(relaxed)
        record.update(q=q, relaxed=relaxed)
        if perm_source == "feistel":
            member = sample_perm_member(q, d, pseed, rounds)
            perm = lambda x, mem=member: eval_perm_many(mem, x)
        else:
            table = np.random.default_rng(pseed).permutation(q) + 1
            perm = lambda x, tab=table: tab[x - 1]
        next_subset(chain, k, perm)
        if chain.current.size == m:
            # At tiny sizes ceil(2k q / (2k+1)) can equal q; finish directly.
            record["stalled"] = True
            break

    T = chain.current
    m = T.size
    hit = find_k_collision(values, T, k)
    if m <= r:
        ledger.charge_classical(m)
        trace.append({"step": "classical_scan", "size": int(m), "queries": m,
                      "outcome": "found" if hit else "none"})
    else:
        cost = math.isqrt(_tuple_count(m, k) - 1) + 1 if m >= k else 0
        ledger.charge_grover(cost)
        trace.append({"step": "grover", "size": int(m), "queries": cost,
                      "outcome": "found" if hit else "none"})
    return CollisionResult(hit, ledger, trace)


@dataclass
class ScanResult:
    """Rows ``(N, r, queries)`` and the least-squares log-log slope."""

    rows: List[Tuple[int, int, float]]
    slope: float
    intercept: float


def _median_total(N: int, r: int, k: int, rng: np.random.Generator, trials: int,
                  perm_source: str) -> float:
    totals = []
    for _ in range(trials):
        inst, _ = planted_instance(N, k, 1, seed=int(rng.integers(2**63)))
        res = run_k_distinctness(inst, r, k, seed=int(rng.integers(2**63)),
                                 perm_source=perm_source)
        totals.append(res.ledger.total)
    return float(np.median(totals))


def exponent_scan(k: int, N_grid: Sequence[int], seed=None, trials: int = 5,
                  perm_source: str = "feistel") -> ScanResult:
    """Median query totals at ``r = floor(N^(k/(k+1)))`` and the fitted exponent."""
    grid = [int(n) for n in N_grid]
    if len(grid) < 3 or grid != sorted(grid):
        raise ParameterError("N_grid must be ascending with at least 3 points")
    rng = np.random.default_rng(seed)
    rows = []
    for N in grid:
        r = int(math.floor(N ** (k / (k + 1)) + 1e-9))
        rows.append((N, r, _median_total(N, r, k, rng, trials, perm_source)))
    x = np.log([n for n, _, _ in rows])
    y = np.log([t for _, _, t in rows])
    slope, intercept = np.polyfit(x, y, 1)
    return ScanResult(rows, float(slope), float(intercept))


def r_sweep(N: int, k: int, r_grid: Sequence[int], seed=None, trials: int = 5,
            perm_source: str = "feistel") -> List[Tuple[int, float]]:
    """Median query totals ``(r, queries)`` on planted single-collision inputs."""
    rng = np.random.default_rng(seed)
    return [(int(r), _median_total(N, int(r), k, rng, trials, perm_source))
            for r in r_grid]
