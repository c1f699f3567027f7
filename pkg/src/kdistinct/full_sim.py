"""
Brute-force state-vector simulation over explicit ``(S, y)`` pairs.

The ``x`` register is never materialised: for a fixed instance it is a
function of ``S``. Two spaces are used:

* ``H``  -- ``|S| = r``, ``y not in S``
* ``H'`` -- ``|S| = r + 1``, ``y in S``

Pairs are enumerated lexicographically by ``(S, y)`` with 1-based indices.
This engine is an oracle for small ``N`` and refuses bases larger than a cap.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from .errors import ModeError, ParameterError, SizeCapError
from .instances import Instance
from .ledger import QueryLedger
from .walk_core import SubspaceState

__all__ = [
    "DEFAULT_CAP",
    "FullBasis",
    "FullState",
    "enumerate_basis",
    "uniform_state",
    "diffuse_outside",
    "walk_step",
    "collision_mask",
    "conditional_flip",
    "run_full",
    "good_probability",
    "type_of_pairs",
    "project_to_subspace",
    "embed_subspace",
]

DEFAULT_CAP = 10**6

Pair = Tuple[Tuple[int, ...], int]


def _pair_count(N: int, r: int, mode: str) -> int:
    if mode == "H":
        return math.comb(N, r) * (N - r)
    return math.comb(N, r + 1) * (r + 1)


@dataclass(frozen=True, eq=False)
class FullBasis:
    """Canonical enumeration of one of the two walk spaces.

    Attributes
    ----------
    N, r : int
        Instance length and subset size of ``H`` (``H'`` subsets have size r+1).
    mode : str
        ``"H"`` or ``"H'"``.
    pairs : tuple of (S, y)
    group : ndarray of int
        Index of the subset ``S`` of each pair within ``subsets``.
    subsets : tuple of tuple
        Distinct subsets in lexicographic order.
    """

    N: int
    r: int
    mode: str
    pairs: Tuple[Pair, ...]
    group: NDArray[np.int64]
    subsets: Tuple[Tuple[int, ...], ...]

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def group_size(self) -> int:
        return self.N - self.r if self.mode == "H" else self.r + 1


@lru_cache(maxsize=32)
def _enumerate(N: int, r: int, mode: str) -> FullBasis:
    pairs = []
    group = []
    subsets = []
    size = r if mode == "H" else r + 1
    for g, S in enumerate(itertools.combinations(range(1, N + 1), size)):
        subsets.append(S)
        members = set(S)
        ys = [y for y in range(1, N + 1) if y not in members] if mode == "H" else S
        for y in ys:
            pairs.append((S, y))
            group.append(g)
    grp = np.asarray(group, dtype=np.int64)
    grp.setflags(write=False)
    return FullBasis(N, r, mode, tuple(pairs), grp, tuple(subsets))


def enumerate_basis(N: int, r: int, mode: str = "H", cap: int = DEFAULT_CAP) -> FullBasis:
    """Enumerate ``H`` or ``H'`` pairs in lexicographic ``(S, y)`` order.

    Raises
    ------
    SizeCapError
        If the pair count exceeds ``cap``.
    """
    if mode not in ("H", "H'"):
        raise ModeError(f"mode must be 'H' or \"H'\", got {mode!r}")
    if not 1 <= r < N:
        raise ParameterError(f"need 1 <= r < N, got r={r}, N={N}")
    n = _pair_count(N, r, mode)
    if n > cap:
        raise SizeCapError(f"{n} basis pairs exceed the cap of {cap}")
    return _enumerate(N, r, mode)


@dataclass(frozen=True, eq=False)
class FullState:
    """Dense amplitudes aligned with ``basis.pairs``."""

    basis: FullBasis
    amps: NDArray[np.complex128]

    def __post_init__(self):
        a = np.asarray(self.amps, dtype=np.complex128)
        if a.shape != (len(self.basis),):
            raise ValueError("amplitude vector does not match the basis size")
        object.__setattr__(self, "amps", a)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))


def uniform_state(basis: FullBasis) -> FullState:
    n = len(basis)
    return FullState(basis, np.full(n, 1.0 / math.sqrt(n), dtype=np.complex128))


def _diffuse(amps: NDArray, group: NDArray, n_groups: int, size: int) -> NDArray:
    # Per group: v -> -v + (2/size) * sum(v), i.e. the Grover diffusion.
    sums = (np.bincount(group, weights=amps.real, minlength=n_groups)
            + 1j * np.bincount(group, weights=amps.imag, minlength=n_groups))
    return -amps + (2.0 / size) * sums[group]


def diffuse_outside(state: FullState) -> FullState:
    """Step 1: diffusion over ``y' not in S`` (an involution)."""
    b = state.basis
    if b.mode != "H":
        raise ModeError("outside diffusion acts on H")
    return FullState(b, _diffuse(state.amps, b.group, len(b.subsets), b.group_size))


@lru_cache(maxsize=32)
def _transfer(N: int, r: int, cap: int) -> Tuple[FullBasis, FullBasis, NDArray[np.int64]]:
    h = enumerate_basis(N, r, "H", cap)
    hp = enumerate_basis(N, r, "H'", cap)
    where = {p: i for i, p in enumerate(hp.pairs)}
    perm = np.empty(len(h), dtype=np.int64)
    for i, (S, y) in enumerate(h.pairs):
        perm[i] = where[(tuple(sorted(S + (y,))), y)]
    return h, hp, perm


def walk_step(state: FullState, ledger: Optional[QueryLedger] = None,
              cap: int = DEFAULT_CAP) -> FullState:
    """One step of the walk on explicit pairs.

    Diffuse over ``y not in S``, move to ``H'`` by adding ``y`` to ``S``,
    diffuse over ``y in S``, and move back. The two oracle calls leave the
    amplitudes unchanged but each is charged to ``ledger``.
    """
    b = state.basis
    if b.mode != "H":
        raise ModeError("walk_step expects a state in H")
    h, hp, perm = _transfer(b.N, b.r, cap)
    a = _diffuse(state.amps, h.group, len(h.subsets), h.group_size)
    moved = np.empty_like(a)
    moved[perm] = a
    moved = _diffuse(moved, hp.group, len(hp.subsets), hp.group_size)
    if ledger is not None:
        ledger.charge_walk(2)
    return FullState(b, moved[perm])


def _has_k_collision(values: Sequence[int], S: Iterable[int], k: int) -> bool:
    counts = Counter(values[i - 1] for i in S)
    return bool(counts) and max(counts.values()) >= k


def collision_mask(basis: FullBasis, instance: Instance, k: int) -> NDArray[np.bool_]:
    """Per pair, whether ``S`` holds ``k`` indices with equal values."""
    per_subset = np.array([_has_k_collision(instance.values, S, k) for S in basis.subsets],
                          dtype=bool)
    return per_subset[basis.group]


def conditional_flip(state: FullState, mask: NDArray[np.bool_]) -> FullState:
    a = state.amps.copy()
    a[mask] = -a[mask]
    return FullState(state.basis, a)


def run_full(instance: Instance, r: int, k: int, t1: int, t2: int,
             cap: int = DEFAULT_CAP) -> Tuple[Dict[Tuple[int, ...], float], QueryLedger]:
    """Run the single-solution algorithm on explicit pairs.

    Returns
    -------
    dist : dict
        Measurement probability of every subset ``S``.
    ledger : QueryLedger
        ``r + 2 t1 t2`` queries.
    """
    N = instance.N
    if not k <= r < N:
        raise ParameterError(f"need k <= r < N, got k={k}, r={r}, N={N}")
    basis = enumerate_basis(N, r, "H", cap)
    ledger = QueryLedger()
    state = uniform_state(basis)
    ledger.charge_setup(r)
    mask = collision_mask(basis, instance, k)
    for _ in range(t1):
        state = conditional_flip(state, mask)
        for _ in range(t2):
            state = walk_step(state, ledger, cap)
    probs = np.bincount(basis.group, weights=np.abs(state.amps) ** 2,
                        minlength=len(basis.subsets))
    return dict(zip(basis.subsets, probs.tolist())), ledger


def good_probability(dist: Dict[Tuple[int, ...], float], instance: Instance, k: int) -> float:
    """Total mass on subsets that contain a k-collision."""
    return float(sum(p for S, p in dist.items()
                     if _has_k_collision(instance.values, S, k)))


def type_of_pairs(basis: FullBasis, collision_set: Iterable[int]) -> NDArray[np.int64]:
    """Collapsed basis index ``2 j + l`` of every H pair."""
    if basis.mode != "H":
        raise ModeError("types are defined on H")
    K = frozenset(collision_set)
    return np.array([2 * len(K.intersection(S)) + (y in K) for S, y in basis.pairs],
                    dtype=np.int64)


def project_to_subspace(state: FullState,
                        collision_set: Iterable[int]) -> Tuple[SubspaceState, float]:
    """Coordinates on the ``psi_{j,l}`` and the norm of the orthogonal remainder."""
    K = tuple(collision_set)
    k = len(K)
    types = type_of_pairs(state.basis, K)
    dim = 2 * k + 1
    counts = np.bincount(types, minlength=dim).astype(float)
    sums = (np.bincount(types, weights=state.amps.real, minlength=dim)
            + 1j * np.bincount(types, weights=state.amps.imag, minlength=dim))
    with np.errstate(invalid="ignore", divide="ignore"):
        coords = np.where(counts > 0, sums / np.sqrt(counts), 0.0)
    recon = np.where(counts[types] > 0, coords[types] / np.sqrt(counts[types]), 0.0)
    residual = float(np.linalg.norm(state.amps - recon))
    return SubspaceState(coords), residual


def embed_subspace(sub: SubspaceState, basis: FullBasis,
                   collision_set: Iterable[int]) -> FullState:
    """Inverse of :func:`project_to_subspace` on the collapsed span."""
    K = tuple(collision_set)
    types = type_of_pairs(basis, K)
    counts = np.bincount(types, minlength=sub.amps.size).astype(float)
    return FullState(basis, sub.amps[types] / np.sqrt(counts[types]))
