"""Problem instances: validation, file I/O and planted generators."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ParameterError

__all__ = [
    "Instance",
    "load_instance",
    "dump_instance",
    "planted_instance",
    "count_k_collisions",
    "find_k_collision",
]


@dataclass(frozen=True)
class Instance:
    """Values ``x_1..x_N`` drawn from ``[M]`` (1-based)."""

    values: Tuple[int, ...]
    M: Optional[int] = None

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        if len(vals) < 2:
            raise ParameterError("an instance needs at least two values")
        M = max(vals) if self.M is None else int(self.M)
        if min(vals) < 1 or max(vals) > M:
            raise ParameterError(f"values must lie in 1..{M}")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "M", M)

    @property
    def N(self) -> int:
        return len(self.values)

    def __getitem__(self, i: int) -> int:
        """Value at 1-based index ``i``."""
        return self.values[i - 1]

    def restrict(self, indices: Sequence[int]) -> "Instance":
        return Instance(tuple(self.values[i - 1] for i in indices), self.M)


def load_instance(path: Union[str, Path], M: Optional[int] = None) -> Instance:
    """Read one integer per line, or a JSON array of integers."""
    text = Path(path).read_text()
    stripped = text.strip()
    try:
        if stripped.startswith("["):
            raw = json.loads(stripped)
            if not all(isinstance(v, int) and not isinstance(v, bool) for v in raw):
                raise ParameterError("JSON instance must be an array of integers")
        else:
            raw = [int(line) for line in stripped.splitlines() if line.strip()]
    except (ValueError, json.JSONDecodeError) as exc:
        if isinstance(exc, ParameterError):
            raise
        raise ParameterError(f"malformed instance file {path}: {exc}") from exc
    return Instance(tuple(raw), M)


def dump_instance(instance: Instance, path: Union[str, Path]) -> None:
    Path(path).write_text("\n".join(str(v) for v in instance.values) + "\n")


def planted_instance(N: int, k: int, n_collisions: int = 1, seed=None,
                     M: Optional[int] = None) -> Tuple[Instance, List[Tuple[int, ...]]]:
    """Distinct values except ``n_collisions`` disjoint planted k-collisions.

    Returns the instance and the planted index tuples (sorted, 1-based).
    """
    if n_collisions * k > N:
        raise ParameterError("not enough indices for the planted collisions")
    M = max(2 * N, 16) if M is None else M
    n_distinct = N - n_collisions * (k - 1)
    if n_distinct > M:
        raise ParameterError("alphabet too small for a distinct background")
    rng = np.random.default_rng(seed)
    vals = rng.choice(M, size=n_distinct, replace=False) + 1
    positions = rng.permutation(N) + 1
    out = np.empty(N, dtype=np.int64)
    planted = []
    cursor = 0
    for c in range(n_collisions):
        idx = positions[cursor:cursor + k]
        cursor += k
        out[idx - 1] = vals[c]
        planted.append(tuple(sorted(int(i) for i in idx)))
    rest = positions[cursor:]
    out[rest - 1] = vals[n_collisions:]
    return Instance(tuple(out.tolist()), M), planted


def count_k_collisions(values: Sequence[int], k: int) -> int:
    """Number of k-subsets of indices with equal values."""
    return sum(math.comb(c, k) for c in Counter(values).values() if c >= k)


def find_k_collision(values: Sequence[int], indices: Sequence[int], k: int
                     ) -> Optional[Tuple[int, ...]]:
    """First k indices (sorted) among ``indices`` sharing one value, or ``None``.

    ``values`` is indexed 1-based through ``indices``.
    """
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size < k:
        return None
    v = np.asarray(values)[idx - 1]
    uniq, inv, counts = np.unique(v, return_inverse=True, return_counts=True)
    hits = np.flatnonzero(counts >= k)
    if hits.size == 0:
        return None
    members = np.sort(idx[inv == hits[0]])[:k]
    return tuple(int(i) for i in members)
