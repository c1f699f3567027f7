"""
d-wise independent boolean functions and approximately d-wise independent
permutations.

Boolean members are random polynomials of degree ``d-1`` over ``GF(2^b)``
(``2^b >= n``); the output is the low bit of the polynomial value. Values of
such a polynomial at any ``d`` distinct points are jointly uniform, so any
fixed output bit is exactly d-wise independent.

Permutation members are balanced Feistel networks on ``[s] x [s]``
(``s = ceil(sqrt q)``), cycle-walked down to ``[q]``. Round functions are
degree-``d-1`` polynomials over ``Z_P`` (``P = 2^31 - 1``) reduced mod ``s``.
Their closeness to d-wise independence is checked empirically, not proven.

Member keys are derived from an integer seed with SplitMix64 so that keys
can be reproduced from ``(size, d, seed, version)`` alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from .errors import ParameterError

__all__ = [
    "CONSTRUCTION_VERSION",
    "GF2m",
    "gf2m",
    "splitmix64",
    "splitmix64_array",
    "BoolMember",
    "sample_bool_member",
    "eval_bool",
    "eval_bool_many",
    "PermMember",
    "sample_perm_member",
    "eval_perm",
    "eval_perm_many",
    "eval_perm_batch",
]

CONSTRUCTION_VERSION = 1
MERSENNE_P = (1 << 31) - 1
DEFAULT_ROUNDS = 7
_TABLE_MAX_BITS = 20
_MASK64 = (1 << 64) - 1


def splitmix64(seed: int, counter: int) -> int:
    """64-bit output number ``counter`` of the SplitMix64 stream for ``seed``."""
    z = (seed + (counter + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def splitmix64_array(seeds: NDArray, counter: int) -> NDArray[np.uint64]:
    """Vectorised :func:`splitmix64` over an array of seeds."""
    z = np.asarray(seeds, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = z + np.uint64(((counter + 1) * 0x9E3779B97F4A7C15) & _MASK64)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


# -- GF(2^b) -----------------------------------------------------------------

def _prime_factors(n: int) -> list:
    out, p = [], 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


def _clmul_mod(a: int, c: int, poly: int, b: int) -> int:
    res = 0
    top = 1 << b
    while c:
        if c & 1:
            res ^= a
        c >>= 1
        a <<= 1
        if a & top:
            a ^= poly
    return res


def _pow_mod(base: int, e: int, poly: int, b: int) -> int:
    res = 1
    while e:
        if e & 1:
            res = _clmul_mod(res, base, poly, b)
        base = _clmul_mod(base, base, poly, b)
        e >>= 1
    return res


def _primitive_poly(b: int) -> int:
    """Smallest degree-``b`` polynomial over GF(2) for which ``x`` generates the field."""
    order = (1 << b) - 1
    x = 2 if b > 1 else 1
    factors = _prime_factors(order) if order > 1 else []
    for low in range(1, 1 << b, 2):
        poly = (1 << b) | low
        if _pow_mod(x, order, poly, b) != 1:
            continue
        if all(_pow_mod(x, order // p, poly, b) != 1 for p in factors):
            return poly
    raise ParameterError(f"no primitive polynomial of degree {b}")


class GF2m:
    """Arithmetic in ``GF(2^b)`` with a fixed primitive modulus.

    Log/antilog tables are used up to ``b = 20``; wider fields fall back to
    carry-less multiplication.
    """

    def __init__(self, b: int):
        if b < 1:
            raise ParameterError("field degree must be >= 1")
        self.b = b
        self.size = 1 << b
        self.poly = _primitive_poly(b)
        self._tables = b <= _TABLE_MAX_BITS
        if self._tables:
            order = self.size - 1
            exp = np.empty(2 * order, dtype=np.int64)
            v = 1
            for i in range(order):
                exp[i] = v
                v <<= 1
                if v & self.size:
                    v ^= self.poly
            exp[order:] = exp[:order]
            log = np.zeros(self.size, dtype=np.int64)
            log[exp[:order]] = np.arange(order)
            self._exp, self._log = exp, log
            self._exp_list = exp.tolist()
            self._log_list = log.tolist()

    def mul(self, a: int, c: int) -> int:
        if a == 0 or c == 0:
            return 0
        if self._tables:
            return self._exp_list[self._log_list[a] + self._log_list[c]]
        return _clmul_mod(a, c, self.poly, self.b)

    def mul_array(self, a: NDArray, c) -> NDArray[np.int64]:
        a = np.asarray(a, dtype=np.int64)
        c = np.broadcast_to(np.asarray(c, dtype=np.int64), a.shape)
        if self._tables:
            out = self._exp[self._log[a] + self._log[c]]
            return np.where((a == 0) | (c == 0), 0, out)
        res = np.zeros_like(a)
        aa = a.copy()
        cc = c.copy()
        for _ in range(self.b):
            res ^= np.where(cc & 1, aa, 0)
            cc = cc >> 1
            aa = aa << 1
            aa = np.where(aa & self.size, aa ^ self.poly, aa)
        return res

    def poly_eval(self, coeffs: Sequence[int], x: int) -> int:
        """Horner evaluation; ``coeffs[0]`` is the leading coefficient."""
        acc = 0
        for c in coeffs:
            acc = self.mul(acc, x) ^ c
        return acc

    def poly_eval_array(self, coeffs: Sequence[int], x: NDArray) -> NDArray[np.int64]:
        acc = np.zeros(np.shape(x), dtype=np.int64)
        for c in coeffs:
            acc = self.mul_array(acc, x) ^ int(c)
        return acc


@lru_cache(maxsize=None)
def gf2m(b: int) -> GF2m:
    return GF2m(b)


def _field_bits(n: int) -> int:
    return max(1, math.ceil(math.log2(n)))


# -- boolean family ------------------------------------------------------------

@dataclass(frozen=True)
class BoolMember:
    """One member of the d-wise independent boolean family on ``[n]``."""

    n: int
    d: int
    coeffs: Tuple[int, ...]
    seed: int = -1
    version: int = CONSTRUCTION_VERSION

    @property
    def bits(self) -> int:
        return _field_bits(self.n)

    @classmethod
    def from_coefficients(cls, n: int, d: int, coeffs: Sequence[int]) -> "BoolMember":
        b = _field_bits(n)
        coeffs = tuple(int(c) for c in coeffs)
        if len(coeffs) != d or any(not 0 <= c < (1 << b) for c in coeffs):
            raise ParameterError(f"need {d} coefficients in GF(2^{b})")
        return cls(n, d, coeffs)

    def key(self) -> Dict[str, int]:
        return {"n": self.n, "d": self.d, "seed": self.seed,
                "version": self.version, "modulus": gf2m(self.bits).poly}


def sample_bool_member(n: int, d: int, seed: int) -> BoolMember:
    """Member of the degree-``(d-1)`` polynomial family selected by ``seed``."""
    if n < 2 or d < 1:
        raise ParameterError("need n >= 2 and d >= 1")
    b = _field_bits(n)
    mask = (1 << b) - 1
    coeffs = tuple(splitmix64(seed, c) & mask for c in range(d))
    return BoolMember(n, d, coeffs, int(seed))


def eval_bool(member: BoolMember, i: int) -> int:
    """Output bit at 1-based index ``i``."""
    if not 1 <= i <= member.n:
        raise ParameterError(f"index {i} outside 1..{member.n}")
    return gf2m(member.bits).poly_eval(member.coeffs, i - 1) & 1


def eval_bool_many(member: BoolMember, indices) -> NDArray[np.int64]:
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size and (idx.min() < 1 or idx.max() > member.n):
        raise ParameterError(f"indices outside 1..{member.n}")
    return gf2m(member.bits).poly_eval_array(member.coeffs, idx - 1) & 1


# -- permutation family --------------------------------------------------------

@dataclass(frozen=True)
class PermMember:
    """Keyed Feistel bijection on ``[q]`` with round keys of shape ``(rounds, d)``."""

    q: int
    d: int
    seed: int
    rounds: int
    keys: Tuple[Tuple[int, ...], ...]
    version: int = CONSTRUCTION_VERSION

    @property
    def side(self) -> int:
        return math.isqrt(self.q - 1) + 1

    def key(self) -> Dict[str, int]:
        return {"q": self.q, "d": self.d, "seed": self.seed,
                "rounds": self.rounds, "version": self.version}


def _round_keys(seed, d: int, rounds: int) -> NDArray[np.int64]:
    """Keys mod P; ``seed`` may be an int or an array (leading batch axis)."""
    seeds = np.atleast_1d(np.asarray(seed, dtype=np.uint64))
    keys = np.empty(seeds.shape + (rounds, d), dtype=np.int64)
    for rnd in range(rounds):
        for c in range(d):
            raw = splitmix64_array(seeds, rnd * d + c)
            keys[..., rnd, c] = (raw % np.uint64(MERSENNE_P)).astype(np.int64)
    return keys


def sample_perm_member(q: int, d: int, seed: int,
                       rounds: int = DEFAULT_ROUNDS) -> PermMember:
    """Member of the Feistel permutation family on ``[q]`` selected by ``seed``."""
    if q < 2 or d < 1 or rounds < 0:
        raise ParameterError("need q >= 2, d >= 1, rounds >= 0")
    if q > 1 << 40:
        raise ParameterError("q above 2^40 is not supported")
    keys = _round_keys(int(seed), d, rounds)[0]
    return PermMember(q, d, int(seed), rounds, tuple(map(tuple, keys.tolist())))


def _round_fn(keys: NDArray, rnd: int, x: NDArray, side: int) -> NDArray:
    acc = np.zeros_like(x)
    for c in range(keys.shape[-1]):
        acc = (acc * x + keys[..., rnd, c]) % MERSENNE_P
    return acc % side


def _feistel(keys: NDArray, z: NDArray, side: int, inverse: bool) -> NDArray:
    left, right = z // side, z % side
    rounds = keys.shape[-2]
    if not inverse:
        for rnd in range(rounds):
            left, right = right, (left + _round_fn(keys, rnd, right, side)) % side
    else:
        for rnd in reversed(range(rounds)):
            left, right = (right - _round_fn(keys, rnd, left, side)) % side, left
    return left * side + right


def _walk(keys: NDArray, z: NDArray, q: int, side: int, inverse: bool) -> NDArray:
    z = _feistel(keys, z, side, inverse)
    out = z >= q
    while out.any():
        sub = keys[out] if keys.ndim == 3 else keys
        z[out] = _feistel(sub, z[out], side, inverse)
        out = z >= q
    return z


def eval_perm_many(member: PermMember, indices, direction: str = "forward") -> NDArray[np.int64]:
    """Vectorised :func:`eval_perm` over 1-based indices."""
    if direction not in ("forward", "inverse"):
        raise ParameterError("direction must be 'forward' or 'inverse'")
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size and (idx.min() < 1 or idx.max() > member.q):
        raise ParameterError(f"indices outside 1..{member.q}")
    keys = np.asarray(member.keys, dtype=np.int64).reshape(member.rounds, member.d)
    z = _walk(keys, idx - 1, member.q, member.side, direction == "inverse")
    return z + 1


def eval_perm(member: PermMember, i: int, direction: str = "forward") -> int:
    """Image of 1-based ``i`` under the member or its inverse."""
    return int(eval_perm_many(member, [i], direction)[0])


def eval_perm_batch(q: int, d: int, seeds, indices, rounds: int = DEFAULT_ROUNDS,
                    direction: str = "forward") -> NDArray[np.int64]:
    """Evaluate many members at once: ``out[b, m]`` is member ``seeds[b]`` at ``indices[m]``."""
    seeds = np.asarray(seeds, dtype=np.uint64)
    keys = _round_keys(seeds, d, rounds)
    side = math.isqrt(q - 1) + 1
    cols = []
    for i in np.atleast_1d(indices):
        z = np.full(seeds.shape, int(i) - 1, dtype=np.int64)
        cols.append(_walk(keys, z, q, side, direction == "inverse") + 1)
    return np.stack(cols, axis=-1)
