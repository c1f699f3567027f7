"""
History-independent store for the walk's subset register.

Entries ``(i, x_i)`` live in ``r`` hash buckets ``h(i) = floor(i r / N) + 1``
kept sorted by ``i``. Dyadic counters give the rank of an index in ``O(log r)``
steps. A skip list ordered by ``(x_i, i)`` finds neighbours with equal values;
entry levels come from d-wise independent boolean functions, so the layout
depends only on the stored set and the hash seeds. A counter ``v`` tracks how
many values occur at least ``k`` times.

Every operation counts elementary steps (comparisons, link traversals,
counter updates) and aborts, leaving the store untouched, when the step
budget would be exceeded or a bucket would overflow.
"""

from __future__ import annotations

import math
import struct
from collections import Counter
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import ParameterError, StoreError
from .hash_families import BoolMember, eval_bool, sample_bool_member, splitmix64

__all__ = [
    "StepBudget",
    "CanonicalStore",
    "bucket_of",
    "default_budget",
    "measure_failure_rate",
]

MAGIC = b"KDSTORE1"
_U64 = struct.Struct(">Q")
_NONE = 0


def bucket_of(i: int, N: int, r: int) -> int:
    """``floor(i r / N) + 1``, with ``i = N`` folded into the last bucket."""
    return min(i * r // N + 1, r)


def default_budget(N: int, M: int, c: float = 1.0) -> int:
    return int(c * math.ceil(math.log2(N + M)) ** 4)


@dataclass
class StepBudget:
    """Per-operation step limit; ``budget=None`` means unlimited."""

    budget: Optional[int]
    consumed: int = 0
    failed: bool = False


class _Abort(Exception):
    pass


class _Meter:
    def __init__(self, limit: Optional[int]):
        self.limit = limit
        self.steps = 0

    def tick(self, n: int = 1) -> None:
        self.steps += n
        if self.limit is not None and self.steps > self.limit:
            raise _Abort


class CanonicalStore:
    """Bucketed table, dyadic counters, hash-levelled skip list and ``v``.

    Parameters
    ----------
    N, M : int
        Index range ``1..N`` and value range ``1..M``.
    r : int
        Number of buckets and maximum number of stored entries.
    k : int
        Collision size tracked by ``v``.
    seed : int
        Selects the level hash functions.
    c : float
        Budget constant; the per-operation budget is ``c ceil(log2(N+M))^4``.
    budget : int, optional
        Explicit per-operation budget overriding ``c``.
    """

    def __init__(self, N: int, M: int, r: int, k: int = 2, seed: int = 0,
                 c: float = 1.0, budget: Optional[int] = None):
        if N < 2 or M < 1 or not 1 <= r <= N or k < 2:
            raise ParameterError("need N >= 2, M >= 1, 1 <= r <= N, k >= 2")
        self.N, self.M, self.r, self.k, self.seed = N, M, r, k, int(seed)
        self.capacity = math.ceil(math.log2(N))
        self.l_max = math.ceil(math.log2(N))
        self.top = int(math.floor(math.log2(r)))
        d = math.ceil(4 * math.log2(N) + 1)
        self.hash_seeds = tuple(splitmix64(self.seed, l) for l in range(self.l_max))
        self._hashes: List[BoolMember] = [sample_bool_member(N, d, s) for s in self.hash_seeds]
        self.step_budget = StepBudget(default_budget(N, M, c) if budget is None else budget)
        self.buckets: List[List[Tuple[int, int]]] = [[] for _ in range(r)]
        self.counters: List[List[int]] = [[0] * (self._twos(j) + 1) for j in range(1, r + 1)]
        self.links: Dict[int, List[int]] = {}
        self.start: List[int] = [_NONE] * (self.l_max + 1)
        self.v = 0
        self._values: Dict[int, int] = {}
        self._counts: Counter = Counter()
        self._levels: Dict[int, int] = {}

    # -- helpers ----------------------------------------------------------

    @staticmethod
    def _twos(j: int) -> int:
        return (j & -j).bit_length() - 1

    def __len__(self) -> int:
        return len(self._values)

    def __contains__(self, i: int) -> bool:
        return i in self._values

    def bucket(self, i: int) -> int:
        return bucket_of(i, self.N, self.r)

    def level(self, i: int) -> int:
        """Number of leading ones among ``h_1(i), h_2(i), ...``."""
        lv = self._levels.get(i)
        if lv is None:
            lv = 0
            while lv < self.l_max and eval_bool(self._hashes[lv], i) == 1:
                lv += 1
            self._levels[i] = lv
        return lv

    def _covering(self, b: int) -> List[Tuple[int, int]]:
        # (bucket, level) of every counter whose range (j - 2^l, j] contains b.
        out = []
        for l in range(self.top + 1):
            j = -(-b // (1 << l)) * (1 << l)
            if j <= self.r:
                out.append((j, l))
        return out

    def _scan(self, i: int, meter: _Meter) -> Tuple[int, Optional[int]]:
        """Position of ``i`` in its bucket (insertion point if absent) and its value."""
        entries = self.buckets[self.bucket(i) - 1]
        for pos, (idx, x) in enumerate(entries):
            meter.tick()
            if idx == i:
                return pos, x
            if idx > i:
                return pos, None
        return len(entries), None

    def _key(self, i: int, meter: _Meter) -> Tuple[int, int]:
        _, x = self._scan(i, meter)
        return x, i

    def _succ(self, node: int, lv: int) -> int:
        return self.start[lv] if node == _NONE else self.links[node][lv]

    def _set_succ(self, node: int, lv: int, target: int) -> None:
        if node == _NONE:
            self.start[lv] = target
        else:
            self.links[node][lv] = target

    def _predecessors(self, key: Tuple[int, int], meter: _Meter) -> List[int]:
        """Last node strictly before ``key`` at every level, top-down."""
        preds = [_NONE] * (self.l_max + 1)
        node = _NONE
        for lv in range(self.l_max, -1, -1):
            nxt = self._succ(node, lv)
            while nxt != _NONE:
                meter.tick()
                if self._key(nxt, meter) >= key:
                    break
                node = nxt
                nxt = self._succ(node, lv)
            preds[lv] = node
        return preds

    def _run(self, op, *args, budget=...):
        limit = self.step_budget.budget if budget is ... else budget
        meter = _Meter(limit)
        try:
            plan = op(meter, *args)
        except _Abort:
            self.step_budget.consumed = meter.steps
            self.step_budget.failed = True
            return False
        self.step_budget.consumed = meter.steps
        self.step_budget.failed = plan is False
        if plan is False:
            return False
        plan()
        return True

    # -- operations ---------------------------------------------------------

    def insert(self, i: int, x: int, budget=...) -> bool:
        """Insert ``(i, x)``; returns ``False`` (store unchanged) on abort.

        Raises
        ------
        StoreError
            Duplicate index, full store, or out-of-range arguments.
        """
        if not 1 <= i <= self.N or not 1 <= x <= self.M:
            raise StoreError(f"entry ({i}, {x}) outside 1..{self.N} x 1..{self.M}")
        if i in self._values:
            raise StoreError(f"index {i} already stored")
        if len(self._values) >= self.r:
            raise StoreError(f"store holds its maximum of {self.r} entries")
        return self._run(self._plan_insert, i, x, budget=budget)

    def _plan_insert(self, meter: _Meter, i: int, x: int):
        b = self.bucket(i)
        pos, _ = self._scan(i, meter)
        if len(self.buckets[b - 1]) >= self.capacity:
            return False
        covering = self._covering(b)
        meter.tick(len(covering))
        lv = self.level(i)
        preds = self._predecessors((x, i), meter)
        meter.tick(lv + 1)
        meter.tick()

        def apply():
            self.buckets[b - 1].insert(pos, (i, x))
            for j, l in covering:
                self.counters[j - 1][l] += 1
            self.links[i] = [self._succ(preds[l], l) for l in range(lv + 1)]
            for l in range(lv + 1):
                self._set_succ(preds[l], l, i)
            self._values[i] = x
            self._counts[x] += 1
            if self._counts[x] == self.k:
                self.v += 1

        return apply

    def remove(self, i: int, budget=...) -> bool:
        """Exact inverse of :meth:`insert`; returns ``False`` on abort.

        Raises
        ------
        StoreError
            If ``i`` is not stored.
        """
        if i not in self._values:
            raise StoreError(f"index {i} not stored")
        return self._run(self._plan_remove, i, budget=budget)

    def _plan_remove(self, meter: _Meter, i: int):
        b = self.bucket(i)
        pos, x = self._scan(i, meter)
        covering = self._covering(b)
        meter.tick(len(covering))
        lv = self.level(i)
        preds = self._predecessors((x, i), meter)
        meter.tick(lv + 1)
        meter.tick()

        def apply():
            del self.buckets[b - 1][pos]
            for j, l in covering:
                self.counters[j - 1][l] -= 1
            for l in range(lv + 1):
                self._set_succ(preds[l], l, self.links[i][l])
            del self.links[i]
            if self._counts[x] == self.k:
                self.v -= 1
            self._counts[x] -= 1
            if not self._counts[x]:
                del self._counts[x]
            del self._values[i]

        return apply

    def lookup(self, i: int) -> Optional[int]:
        """Stored value of ``i`` or ``None``."""
        if not 1 <= i <= self.N:
            return None
        meter = _Meter(None)
        _, x = self._scan(i, meter)
        self.step_budget.consumed = meter.steps
        return x

    def has_k_collision(self) -> bool:
        self.step_budget.consumed = 1
        return self.v > 0

    def rank(self, y: int) -> int:
        """Position of ``y`` in bucket-then-index order, via the dyadic counters."""
        if y not in self._values:
            raise StoreError(f"index {y} not stored")
        hy = self.bucket(y)
        meter = _Meter(None)
        f1, i, l = 0, 0, self.top
        while l >= 0:
            meter.tick()
            if i + (1 << l) < hy:
                f1 += self.counters[i + (1 << l) - 1][l]
                i += 1 << l
            l -= 1
        pos, _ = self._scan(y, meter)
        self.step_budget.consumed = meter.steps
        return f1 + pos + 1

    def items(self) -> List[Tuple[int, int]]:
        """Entries in bucket order (equivalently, ascending index)."""
        return [e for bucket in self.buckets for e in bucket]

    def chain(self, lv: int) -> List[int]:
        out, node = [], self.start[lv]
        while node != _NONE:
            out.append(node)
            node = self.links[node][lv]
        return out

    def collision(self) -> Optional[Tuple[int, ...]]:
        """Some ``k`` stored indices with equal values, read off the level-0 chain."""
        if self.v == 0:
            return None
        run: List[int] = []
        for i in self.chain(0):
            if run and self._values[run[-1]] != self._values[i]:
                run = []
            run.append(i)
            if len(run) == self.k:
                return tuple(sorted(run))
        return None

    # -- checks and serialization ----------------------------------------------

    def check_invariants(self) -> None:
        """Recount everything from scratch; raise ``AssertionError`` on mismatch."""
        for b, entries in enumerate(self.buckets, start=1):
            idx = [i for i, _ in entries]
            assert idx == sorted(set(idx)), "bucket not strictly increasing"
            assert len(idx) <= self.capacity, "bucket overflow"
            assert all(self.bucket(i) == b for i in idx), "entry in wrong bucket"
        sizes = [len(bk) for bk in self.buckets]
        for j in range(1, self.r + 1):
            for l, cnt in enumerate(self.counters[j - 1]):
                assert cnt == sum(sizes[j - (1 << l):j]), f"counter ({j},{l}) stale"
        order = sorted(self._values, key=lambda i: (self._values[i], i))
        prev = None
        for lv in range(self.l_max + 1):
            chain = self.chain(lv)
            assert chain == [i for i in order if self.level(i) >= lv], f"level {lv} chain"
            if prev is not None:
                assert set(chain) <= set(prev)
            prev = chain
        expect = sum(1 for c in Counter(self._values.values()).values() if c >= self.k)
        assert self.v == expect, "v stale"

    def serialize(self) -> bytes:
        """Canonical big-endian encoding; depends only on the stored set and seeds."""
        out = [MAGIC]
        ints = [self.N, self.M, self.r, self.k, self.seed, *self.hash_seeds]
        for entries in self.buckets:
            ints.append(len(entries))
            for i, x in entries:
                ints += [i, x]
        for row in self.counters:
            ints += row
        for i, _ in self.items():
            ints.append(self.level(i))
            ints += self.links[i]
        ints += self.start
        ints.append(self.v)
        out.append(b"".join(_U64.pack(v) for v in ints))
        return b"".join(out)

    @classmethod
    def deserialize(cls, data: bytes, c: float = 1.0,
                    budget: Optional[int] = None) -> "CanonicalStore":
        if data[:8] != MAGIC or (len(data) - 8) % 8:
            raise StoreError("not a serialized store")
        vals = [v for (v,) in _U64.iter_unpack(data[8:])]
        pos = 0

        def take(n=1):
            nonlocal pos
            chunk = vals[pos:pos + n]
            if len(chunk) < n:
                raise StoreError("truncated store encoding")
            pos += n
            return chunk

        N, M, r, k, seed = take(5)
        store = cls(N, M, r, k, seed, c=c, budget=budget)
        if tuple(take(store.l_max)) != store.hash_seeds:
            raise StoreError("hash seeds do not match the store seed")
        for b in range(r):
            (n,) = take()
            flat = take(2 * n)
            store.buckets[b] = list(zip(flat[::2], flat[1::2]))
        for j in range(r):
            store.counters[j] = take(len(store.counters[j]))
        for i, x in store.items():
            (lv,) = take()
            store._levels[i] = lv
            store.links[i] = take(lv + 1)
            store._values[i] = x
            store._counts[x] += 1
        store.start = take(store.l_max + 1)
        (store.v,) = take()
        if pos != len(vals):
            raise StoreError("trailing data in store encoding")
        return store

    def __eq__(self, other) -> bool:
        return isinstance(other, CanonicalStore) and self.serialize() == other.serialize()

    __hash__ = None


def measure_failure_rate(N: int, r: int, ops: int, seed: int = 0, M: Optional[int] = None,
                         k: int = 2, c: float = 1.0,
                         budget: Optional[int] = None) -> float:
    """Fraction of a random insert/remove workload that overflows or exceeds the budget.

    The workload is drawn from ``seed`` and replayed with an unlimited budget so
    that every budget sees the same sequence of operations; an operation counts
    as failed if its step cost exceeds the budget or it would overflow a bucket.
    """
    M = N if M is None else M
    limit = default_budget(N, M, c) if budget is None else budget
    rng = np.random.default_rng(seed)
    store = CanonicalStore(N, M, r, k, int(rng.integers(2**63)), budget=None)
    present: List[int] = []
    failures = 0
    for _ in range(ops):
        if present and (len(present) >= r or rng.random() < 0.5):
            pos = int(rng.integers(len(present)))
            i = present[pos]
            store.remove(i)
            present[pos] = present[-1]
            present.pop()
        else:
            i = int(rng.integers(1, N + 1))
            while i in store:
                i = int(rng.integers(1, N + 1))
            if store.insert(i, int(rng.integers(1, M + 1))):
                present.append(i)
            else:
                failures += 1
                continue
        if store.step_budget.consumed > limit:
            failures += 1
    return failures / ops if ops else 0.0
