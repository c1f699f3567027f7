"""
Collapsed walk engine.

Under the promise that the input holds exactly one k-collision ``K``, the
state of the single-solution algorithm never leaves the span of the 2k+1
type-uniform superpositions ``psi_{j,l}`` (``j = |S & K|``, ``l = [y in K]``).
This module builds the walk unitaries on that span and runs the algorithm
exactly for arbitrary ``N``.

Basis order for amplitudes over ``psi_{j,l}``::

    (0,0), (0,1), (1,0), (1,1), ..., (k-1,0), (k-1,1), (k,0)

The intermediate space (``|S| = r+1``, ``y in S``) is ordered::

    (0,0), (1,1), (1,0), (2,1), (2,0), ..., (k,1), (k,0)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np
from numpy.typing import NDArray

from .errors import ParameterError
from .ledger import QueryLedger

__all__ = [
    "WalkParams",
    "SubspaceState",
    "BlockUnitary",
    "basis_labels",
    "basis_index",
    "d_block",
    "walk_halves",
    "build_step_unitary",
    "type_counts",
    "start_state",
    "alpha_prime",
    "phase_flip",
    "flip_matrix",
    "default_t2",
    "default_t1",
    "run_single_solution",
    "success_curve",
]

DEFAULT_TOL = 1e-9


def default_t2(r: int, k: int) -> int:
    """Inner walk length ``ceil(pi / (3 sqrt k) * sqrt r)``."""
    return int(math.ceil(math.pi / (3.0 * math.sqrt(k)) * math.sqrt(r)))


@dataclass(frozen=True)
class WalkParams:
    """Scalar parameters of one walk instance.

    ``t2`` defaults to ``ceil(pi sqrt(r) / (3 sqrt k))``. ``t1`` left as
    ``None`` is resolved from the exact spectrum by :func:`default_t1`.
    """

    N: int
    r: int
    k: int
    M: Optional[int] = None
    t1: Optional[int] = None
    t2: Optional[int] = None

    def __post_init__(self):
        for name in ("N", "r", "k"):
            if not isinstance(getattr(self, name), (int, np.integer)):
                raise ParameterError(f"{name} must be an integer")
        if self.k < 2:
            raise ParameterError(f"k must be >= 2, got {self.k}")
        if not (self.k <= self.r < self.N):
            raise ParameterError(
                f"need k <= r < N, got k={self.k}, r={self.r}, N={self.N}")
        M = self.N if self.M is None else self.M
        if M < 1:
            raise ParameterError("M must be >= 1")
        object.__setattr__(self, "M", int(M))
        if self.t1 is not None and self.t1 < 0:
            raise ParameterError("t1 must be >= 0")
        t2 = default_t2(self.r, self.k) if self.t2 is None else self.t2
        if t2 < 1:
            raise ParameterError("t2 must be >= 1")
        object.__setattr__(self, "t2", int(t2))

    @property
    def dim(self) -> int:
        return 2 * self.k + 1

    def with_t1(self, t1: int) -> "WalkParams":
        return replace(self, t1=t1)


def basis_labels(k: int) -> List[Tuple[int, int]]:
    labels = []
    for j in range(k):
        labels += [(j, 0), (j, 1)]
    labels.append((k, 0))
    return labels


def basis_index(j: int, l: int, k: int) -> int:
    if l not in (0, 1) or not (0 <= j <= k) or (j == k and l == 1):
        raise ValueError(f"no basis state of type ({j}, {l}) for k={k}")
    return 2 * j + l


@dataclass(frozen=True)
class SubspaceState:
    """Amplitudes over the 2k+1 collapsed basis states."""

    amps: NDArray[np.complex128]

    def __post_init__(self):
        a = np.array(self.amps, dtype=np.complex128)
        if a.ndim != 1 or a.size % 2 != 1 or a.size < 5:
            raise ValueError("amplitude vector must have odd length 2k+1 >= 5")
        a.setflags(write=False)
        object.__setattr__(self, "amps", a)

    @property
    def k(self) -> int:
        return (self.amps.size - 1) // 2

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def probability(self, j: int, l: int) -> float:
        return float(abs(self.amps[basis_index(j, l, self.k)]) ** 2)

    @property
    def good_probability(self) -> float:
        return float(abs(self.amps[-1]) ** 2)


@dataclass(frozen=True)
class BlockUnitary:
    """Dense real-orthogonal matrix with a tag naming its row/column bases.

    ``basis_tag`` is ``"H->H"``, ``"H->H'"`` or ``"H'->H"`` (columns -> rows).
    """

    entries: NDArray[np.float64]
    basis_tag: str = "H->H"

    def __post_init__(self):
        m = np.array(self.entries, dtype=np.float64)
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    def is_orthogonal(self, tol: float = DEFAULT_TOL) -> bool:
        m = self.entries
        return bool(np.allclose(m.T @ m, np.eye(m.shape[0]), atol=tol, rtol=0))

    def __matmul__(self, other):
        if isinstance(other, BlockUnitary):
            return BlockUnitary(self.entries @ other.entries, "H->H")
        if isinstance(other, SubspaceState):
            return SubspaceState(self.entries @ other.amps)
        return self.entries @ other


def d_block(eps: float) -> NDArray[np.float64]:
    """The 2x2 reflection ``[[-1+2e, 2 sqrt(e-e^2)], [2 sqrt(e-e^2), 1-2e]]``."""
    if not 0.0 <= eps <= 1.0:
        raise ParameterError(f"eps must lie in [0, 1], got {eps}")
    off = 2.0 * math.sqrt(max(eps - eps * eps, 0.0))
    return np.array([[-1.0 + 2.0 * eps, off], [off, 1.0 - 2.0 * eps]])


def walk_halves(params: WalkParams) -> Tuple[BlockUnitary, BlockUnitary]:
    """Return ``(U1, U2)``: steps 1-3 (H -> H') and steps 4-6 (H' -> H).

    Within each 2x2 block of ``U1`` the columns are ``(psi_{j,0}, psi_{j,1})``
    and the rows ``(phi_{j,0}, phi_{j+1,1})``; the diffusion over ``y not in S``
    acts there as ``D_{s0/(N-r)}`` with ``s0 = N-r-(k-j)`` outside-collision
    choices for ``y``. Each block of ``U2`` is ``D_{j/(r+1)}`` between
    ``(phi_{j,1}, phi_{j,0})`` and ``(psi_{j-1,1}, psi_{j,0})``.
    """
    N, r, k = params.N, params.r, params.k
    dim = params.dim
    u1 = np.zeros((dim, dim))
    for j in range(k):
        s0 = N - r - (k - j)
        u1[2 * j:2 * j + 2, 2 * j:2 * j + 2] = d_block(s0 / (N - r))
    u1[dim - 1, dim - 1] = 1.0
    u2 = np.zeros((dim, dim))
    u2[0, 0] = 1.0
    for j in range(1, k + 1):
        u2[2 * j - 1:2 * j + 1, 2 * j - 1:2 * j + 1] = d_block(j / (r + 1))
    return BlockUnitary(u1, "H->H'"), BlockUnitary(u2, "H'->H")


def build_step_unitary(params: WalkParams) -> BlockUnitary:
    """One walk step ``U = U2 U1`` on the collapsed space."""
    u1, u2 = walk_halves(params)
    return BlockUnitary(u2.entries @ u1.entries, "H->H")


def _subset_ratio(N: int, r: int, k: int, j: int) -> Fraction:
    # C(N-k, r-j) / C(N, r) as a finite product.
    num = 1
    for i in range(j):
        num *= r - i
    for i in range(k - j):
        num *= N - r - i
    den = 1
    for i in range(k):
        den *= N - i
    return Fraction(num, den)


def type_counts(params: WalkParams) -> List[Fraction]:
    """Exact fraction of (S, y) pairs of each type, in basis order."""
    N, r, k = params.N, params.r, params.k
    out = []
    for j in range(k + 1):
        base = math.comb(k, j) * _subset_ratio(N, r, k, j)
        if j < k:
            out.append(base * Fraction(N - r - (k - j), N - r))
            out.append(base * Fraction(k - j, N - r))
        else:
            out.append(base)
    return out


def start_state(params: WalkParams) -> SubspaceState:
    """Uniform superposition over every ``(S, y)`` written in the collapsed basis."""
    return SubspaceState(np.sqrt([float(f) for f in type_counts(params)]))


def alpha_prime(params: WalkParams) -> float:
    """Probability that a uniform r-subset contains the collision set."""
    return float(_subset_ratio(params.N, params.r, params.k, params.k))


def flip_matrix(k: int) -> NDArray[np.float64]:
    f = np.eye(2 * k + 1)
    f[-1, -1] = -1.0
    return f


def phase_flip(state: SubspaceState) -> SubspaceState:
    """Negate the amplitude on ``psi_{k,0}``."""
    a = state.amps.copy()
    a[-1] = -a[-1]
    return SubspaceState(a)


def default_t1(params: WalkParams) -> int:
    """Outer iteration count ``floor(pi / (2 beta))`` from the exact spectrum."""
    from .spectral import walk_iteration_count

    return walk_iteration_count(params)


def _resolved_t1(params: WalkParams) -> int:
    return default_t1(params) if params.t1 is None else params.t1


def _iteration_matrix(params: WalkParams) -> NDArray[np.float64]:
    walk = np.linalg.matrix_power(build_step_unitary(params).entries, params.t2)
    return walk @ flip_matrix(params.k)


def run_single_solution(
    params: WalkParams,
) -> Tuple[SubspaceState, float, QueryLedger]:
    """Apply ``(U^t2 . Flip)^t1`` to the start state.

    Returns
    -------
    final : SubspaceState
    success_prob : float
        Squared amplitude on ``psi_{k,0}``, i.e. the probability that the
        measured ``S`` contains the collision.
    ledger : QueryLedger
        ``r`` setup queries plus ``2 t1 t2`` walk queries.
    """
    t1 = _resolved_t1(params)
    step = _iteration_matrix(params)
    v = start_state(params).amps.real.copy()
    for _ in range(t1):
        v = step @ v
    final = SubspaceState(v)
    ledger = QueryLedger()
    ledger.charge_setup(params.r)
    ledger.charge_walk(2 * t1 * params.t2)
    return final, final.good_probability, ledger


def success_curve(params: WalkParams, t1_max: int) -> List[Tuple[int, float]]:
    """Success probability for every ``t1`` in ``0..t1_max``."""
    if t1_max < 0:
        raise ParameterError("t1_max must be >= 0")
    step = _iteration_matrix(params)
    v = start_state(params).amps.real.copy()
    out = [(0, float(v[-1] ** 2))]
    for t in range(1, t1_max + 1):
        v = step @ v
        out.append((t, float(v[-1] ** 2)))
    return out
