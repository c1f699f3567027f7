"""
Spectral analysis of the walk and of generalized Grover iterations.

Covers eigenphase decomposition of unitaries, the eigenphase law of one
walk step, the Hoffman-Wielandt perturbation check, and the root-finding
analysis that yields the principal eigenphase ``beta`` of ``U2 U1`` and the
iteration count ``t = floor(pi / (2 beta))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg
from numpy.typing import NDArray
from scipy.optimize import linear_sum_assignment

from .errors import GengroverError, NotUnitaryError, ParameterError
from .walk_core import (
    BlockUnitary,
    WalkParams,
    build_step_unitary,
    flip_matrix,
    start_state,
)

__all__ = [
    "PhaseSpectrum",
    "GengroverInput",
    "GengroverReport",
    "eigenphases",
    "theta_table",
    "hoffman_wielandt_check",
    "f_beta",
    "solve_beta",
    "gengrover_analysis",
    "exact_beta",
    "model_system",
    "overlap_at_t",
    "gengrover_input_from_unitary",
    "walk_gengrover_input",
    "walk_iteration_count",
]

UNITARY_TOL = 1e-9
BISECT_TOL = 1e-12


def _as_matrix(U) -> NDArray[np.complex128]:
    m = U.entries if isinstance(U, BlockUnitary) else U
    return np.asarray(m, dtype=np.complex128)


def _check_unitary(m: NDArray, tol: float = UNITARY_TOL) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotUnitaryError("expected a square matrix")
    if not np.allclose(m.conj().T @ m, np.eye(m.shape[0]), atol=tol, rtol=0):
        raise NotUnitaryError("matrix is not unitary within tolerance")


@dataclass(frozen=True)
class PhaseSpectrum:
    """Eigenphases in ``(-pi, pi]`` (ascending) with orthonormal eigenvectors.

    ``vectors[:, i]`` belongs to ``phases[i]``; each vector's first nonzero
    component is real and positive.
    """

    phases: NDArray[np.float64]
    vectors: NDArray[np.complex128]

    def reconstruct(self) -> NDArray[np.complex128]:
        V = self.vectors
        return V @ np.diag(np.exp(1j * self.phases)) @ V.conj().T

    def eigenvalues(self) -> NDArray[np.complex128]:
        return np.exp(1j * self.phases)


def eigenphases(U, tol: float = UNITARY_TOL) -> PhaseSpectrum:
    """Full spectral decomposition of a unitary matrix.

    Uses the complex Schur form, which is diagonal for normal matrices and
    keeps eigenvectors orthonormal even for repeated eigenvalues.
    """
    m = _as_matrix(U)
    _check_unitary(m, tol)
    T, Z = scipy.linalg.schur(m, output="complex")
    lam = np.diag(T)
    phases = np.angle(lam)
    phases = np.where(phases <= -math.pi + 1e-12, math.pi, phases)
    vecs = Z.copy()
    for i in range(vecs.shape[1]):
        col = vecs[:, i]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size:
            c = col[nz[0]]
            vecs[:, i] = col * (abs(c) / c)

    def key(i):
        col = vecs[:, i]
        return (round(phases[i], 12),) + tuple(
            (round(z.real, 12), round(z.imag, 12)) for z in col)

    order = sorted(range(len(phases)), key=key)
    return PhaseSpectrum(phases[order], vecs[:, order])


def theta_table(params: WalkParams) -> List[Tuple[int, float, float, float]]:
    """Rows ``(j, theta_j, 2 sqrt(j) / sqrt(r), |theta_j sqrt(r) / (2 sqrt j) - 1|)``."""
    spec = eigenphases(build_step_unitary(params))
    pos = np.sort(spec.phases[spec.phases > 1e-12])
    if pos.size != params.k:
        raise ParameterError(
            f"expected {params.k} positive phases, found {pos.size}")
    r = params.r
    rows = []
    for j, theta in enumerate(pos, start=1):
        law = 2.0 * math.sqrt(j) / math.sqrt(r)
        rows.append((j, float(theta), law, abs(theta / law - 1.0)))
    return rows


def hoffman_wielandt_check(A, B, tol: float = UNITARY_TOL) -> Tuple[bool, float]:
    """Check ``|mu_j - mu'_j| <= sum |delta_i|`` under the best eigenvalue pairing.

    ``1 + delta_i`` are the eigenvalues of ``A``; ``mu`` and ``mu'`` those of
    ``B`` and ``AB``. The pairing minimises the total squared distance.

    Returns
    -------
    holds : bool
    margin : float
        ``sum |delta_i| - max paired distance``.
    """
    a = _as_matrix(A)
    b = _as_matrix(B)
    if a.shape != b.shape:
        raise ParameterError("A and B must have the same dimension")
    _check_unitary(a, tol)
    _check_unitary(b, tol)
    delta = np.linalg.eigvals(a) - 1.0
    mu = np.linalg.eigvals(b)
    mu_p = np.linalg.eigvals(a @ b)
    cost = np.abs(mu[:, None] - mu_p[None, :]) ** 2
    rows, cols = linear_sum_assignment(cost)
    worst = float(np.sqrt(cost[rows, cols].max()))
    bound = float(np.abs(delta).sum())
    margin = bound - worst
    return bool(margin >= -tol), margin


@dataclass(frozen=True)
class GengroverInput:
    """Decomposition ``psi_good = alpha psi_start + sum a_j (w_{j,+} + w_{j,-})``.

    ``modes`` lists ``(theta_j, a_j)``; ``epsilon`` bounds every phase into
    ``[epsilon, 2 pi - epsilon]``.
    """

    alpha: float
    modes: Tuple[Tuple[float, float], ...]
    epsilon: float

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple((float(t), float(a)) for t, a in self.modes))
        norm = self.alpha ** 2 + 2.0 * sum(a * a for _, a in self.modes)
        if abs(norm - 1.0) > 1e-9:
            raise GengroverError(f"alpha^2 + 2 sum a_j^2 = {norm}, expected 1")
        for theta, a in self.modes:
            if a < 0:
                raise GengroverError("mode coefficients must be nonnegative")
            if not (self.epsilon - 1e-12 <= theta <= 2 * math.pi - self.epsilon + 1e-12):
                raise GengroverError(f"phase {theta} outside [eps, 2pi - eps]")
            if abs(theta - math.pi) < 1e-12:
                raise GengroverError("eigenvalue -1 is outside the analysed regime")


@dataclass(frozen=True)
class GengroverReport:
    """Outcome of the generalized Grover analysis.

    ``predicted_overlap`` is a lower bound on ``|<psi_good|psi_end>|``, not an
    estimate of the overlap itself.
    """

    beta: float
    t: int
    predicted_overlap: float
    bracket: Tuple[float, float]
    f_at_beta: float
    measured_overlap: Optional[float] = None


def f_beta(inp: GengroverInput, beta: float) -> float:
    """``alpha^2 cot(b/2) + sum a_j^2 (cot((b - theta_j)/2) + cot((b + theta_j)/2))``."""
    val = inp.alpha ** 2 / math.tan(beta / 2.0)
    for theta, a in inp.modes:
        val += a * a * (1.0 / math.tan((beta - theta) / 2.0)
                        + 1.0 / math.tan((beta + theta) / 2.0))
    return val


def solve_beta(inp: GengroverInput, lo: float, hi: float,
               tol: float = BISECT_TOL) -> float:
    """Bisection for the root of :func:`f_beta` on ``[lo, hi]``."""
    f_lo, f_hi = f_beta(inp, lo), f_beta(inp, hi)
    if f_lo < 0 or f_hi > 0:
        raise GengroverError(
            f"no sign change on [{lo}, {hi}]: f(lo)={f_lo}, f(hi)={f_hi}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f_beta(inp, mid) >= 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _predicted_overlap(inp: GengroverInput) -> float:
    cot = 1.0 / math.tan(inp.epsilon / 2.0)
    return (1.0 - inp.alpha ** 2) / math.sqrt(1.0 + cot * cot)


def gengrover_analysis(inp: GengroverInput) -> GengroverReport:
    """Locate ``beta`` inside the bracket guaranteed for small ``alpha``.

    The bracket is ``[eps a / sqrt(2 pi (1 - a^2)), sqrt(2 pi) a / sqrt(1 - a^2)]``.

    Raises
    ------
    GengroverError
        If ``alpha >= 0.1`` or ``f`` does not change sign on the bracket.
    """
    a = inp.alpha
    if not 0 < a < 0.1:
        raise GengroverError(f"alpha={a} is outside the regime 0 < alpha < 0.1")
    s = math.sqrt(1.0 - a * a)
    lo = inp.epsilon * a / (math.sqrt(2.0 * math.pi) * s)
    hi = math.sqrt(2.0 * math.pi) * a / s
    beta = solve_beta(inp, lo, hi)
    return GengroverReport(
        beta=beta,
        t=int(math.floor(math.pi / (2.0 * beta))),
        predicted_overlap=_predicted_overlap(inp),
        bracket=(lo, hi),
        f_at_beta=f_beta(inp, beta),
    )


def exact_beta(inp: GengroverInput) -> float:
    """Root of ``f`` on ``(0, min theta_j)``, valid for any ``alpha``.

    ``f`` decreases strictly there and runs from ``+inf`` to ``-inf``, so the
    root is the principal eigenphase of ``U2 U1``.
    """
    gap = min(min(t, 2 * math.pi - t) for t, a in inp.modes if a > 0)
    lo, hi = 1e-15, gap * (1.0 - 1e-12)
    return solve_beta(inp, lo, hi)


def model_system(inp: GengroverInput) -> Tuple[NDArray, NDArray, NDArray, NDArray]:
    """Real model realising ``inp``: returns ``(U1, U2, psi_start, psi_good)``.

    ``U2`` fixes ``e_0`` and rotates each plane ``(e_{2j-1}, e_{2j})`` by
    ``theta_j``; ``U1`` reflects about ``psi_good``.
    """
    m = 1 + 2 * len(inp.modes)
    u2 = np.zeros((m, m))
    u2[0, 0] = 1.0
    good = np.zeros(m)
    good[0] = inp.alpha
    for j, (theta, a) in enumerate(inp.modes):
        i = 1 + 2 * j
        c, s = math.cos(theta), math.sin(theta)
        u2[i:i + 2, i:i + 2] = [[c, -s], [s, c]]
        good[i] = math.sqrt(2.0) * a
    start = np.zeros(m)
    start[0] = 1.0
    u1 = np.eye(m) - 2.0 * np.outer(good, good)
    return u1, u2, start, good


def overlap_at_t(U1, U2, psi_start, psi_good, t: int) -> float:
    """``|<psi_good| (U2 U1)^t |psi_start>|`` by direct iteration."""
    u1, u2 = _as_matrix(U1), _as_matrix(U2)
    s = np.asarray(psi_start, dtype=np.complex128)
    g = np.asarray(psi_good, dtype=np.complex128)
    if not (u1.shape == u2.shape and u1.shape[0] == s.size == g.size):
        raise ParameterError("dimension mismatch")
    v = s
    for _ in range(t):
        v = u2 @ (u1 @ v)
    return float(abs(np.vdot(g, v)))


def gengrover_input_from_unitary(U2, psi_start, psi_good,
                                 tol: float = 1e-9) -> GengroverInput:
    """Read ``alpha``, phases and mode weights off a real unitary ``U2``.

    ``psi_start`` must be an eigenvector with eigenvalue 1 and ``psi_good``
    must be real.
    """
    spec = eigenphases(U2)
    g = np.asarray(psi_good, dtype=np.complex128)
    s = np.asarray(psi_start, dtype=np.complex128)
    alpha = float(abs(np.vdot(g, s)))
    coef = spec.vectors.conj().T @ g
    modes = []
    for ph, c in zip(spec.phases, coef):
        if ph > tol:
            modes.append((float(ph), float(abs(c))))
    eps = min(min(t, 2 * math.pi - t) for t, _ in modes)
    # Eigenvalue-1 components other than psi_start would break the decomposition.
    weight = alpha ** 2 + 2 * sum(a * a for _, a in modes)
    if abs(weight - 1.0) > 1e-7:
        raise GengroverError("psi_good has weight outside psi_start and the rotating modes")
    a_scale = math.sqrt((1.0 - alpha ** 2) / (2 * sum(a * a for _, a in modes)))
    modes = [(t, a * a_scale) for t, a in modes]
    return GengroverInput(alpha, tuple(modes), eps)


def walk_gengrover_input(params: WalkParams) -> GengroverInput:
    """Generalized Grover data of ``U^t2`` for the collapsed walk."""
    u2 = np.linalg.matrix_power(build_step_unitary(params).entries, params.t2)
    good = np.zeros(params.dim)
    good[-1] = 1.0
    return gengrover_input_from_unitary(u2, start_state(params).amps.real, good)


def walk_iteration_count(params: WalkParams) -> int:
    """``floor(pi / (2 beta))`` for the walk; falls back to the exact root outside the small-alpha regime."""
    try:
        inp = walk_gengrover_input(params)
    except GengroverError:
        return int(math.floor(math.pi / (2.0 * _principal_phase(params))))
    try:
        beta = gengrover_analysis(inp).beta
    except GengroverError:
        beta = exact_beta(inp)
    return int(math.floor(math.pi / (2.0 * beta)))


def _principal_phase(params: WalkParams, tol: float = 1e-9) -> float:
    # Degenerate spectra (tiny N): smallest positive phase of Flip U^t2 seen by psi_start.
    u = np.linalg.matrix_power(build_step_unitary(params).entries, params.t2)
    spec = eigenphases(u @ flip_matrix(params.k))
    weight = np.abs(spec.vectors.conj().T @ start_state(params).amps)
    phases = [abs(p) for p, w in zip(spec.phases, weight) if w > tol and abs(p) > tol]
    if not phases:
        raise GengroverError("start state has no weight on a rotating eigenvector")
    return min(phases)
