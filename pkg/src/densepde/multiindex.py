"""Multi-indices for partial derivatives, with graded lexicographic ordering."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache


@dataclass(frozen=True, order=False)
class MultiIndex:
    """A tuple p of non-negative integers addressing the mixed partial D^p."""

    entries: tuple[int, ...]

    def __post_init__(self):
        if any(e < 0 for e in self.entries):
            raise ValueError(f"negative entry in multi-index {self.entries}")

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def order(self) -> int:
        return sum(self.entries)

    def __add__(self, other: "MultiIndex") -> "MultiIndex":
        if len(other.entries) != len(self.entries):
            raise ValueError("dimension mismatch")
        return MultiIndex(tuple(a + b for a, b in zip(self.entries, other.entries)))

    def plus_axis(self, axis: int) -> "MultiIndex":
        """Increment the entry for 1-based axis."""
        e = list(self.entries)
        e[axis - 1] += 1
        return MultiIndex(tuple(e))

    def minus_axis(self, axis: int) -> "MultiIndex":
        e = list(self.entries)
        if e[axis - 1] == 0:
            raise ValueError(f"axis {axis} already zero in {self.entries}")
        e[axis - 1] -= 1
        return MultiIndex(tuple(e))

    def first_nonzero_axis(self) -> int:
        """1-based index of the first positive entry; 0 if the index is zero."""
        for i, e in enumerate(self.entries):
            if e > 0:
                return i + 1
        return 0

    def factorial(self) -> int:
        """p! = prod of entry factorials."""
        out = 1
        for e in self.entries:
            out *= math.factorial(e)
        return out

    def grlex_key(self):
        return (self.order, self.entries)

    def __lt__(self, other: "MultiIndex"):
        return self.grlex_key() < other.grlex_key()

    def __str__(self):
        return "(" + ",".join(str(e) for e in self.entries) + ")"


def zero_index(n: int) -> MultiIndex:
    return MultiIndex((0,) * n)


def unit_index(n: int, axis: int) -> MultiIndex:
    return zero_index(n).plus_axis(axis)


@lru_cache(maxsize=None)
def multi_indices(n: int, max_order: int) -> tuple[MultiIndex, ...]:
    """All multi-indices with |p| <= max_order in graded lexicographic order."""
    out = []
    for total in range(max_order + 1):
        out.extend(sorted(_of_order(n, total)))
    return tuple(MultiIndex(t) for t in out)


@lru_cache(maxsize=None)
def multi_indices_of_order(n: int, order: int) -> tuple[MultiIndex, ...]:
    """Multi-indices with |p| == order, lexicographic."""
    return tuple(MultiIndex(t) for t in sorted(_of_order(n, order)))


def _of_order(n, total):
    if n == 1:
        return [(total,)]
    out = []
    for head in range(total + 1):
        out.extend((head,) + rest for rest in _of_order(n - 1, total - head))
    return out


def jet_count(n: int, k: int, order: int) -> int:
    """Number of dense jet coordinates: k * C(n + order, n)."""
    return k * math.comb(n + order, n)
