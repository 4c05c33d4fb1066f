"""Fully symmetric three-level states and collective operators on them.

A state ``|1^m; 2^l>`` has ``l`` atoms in level 2, ``m`` in level 1 and
``n0 = N - m - l`` in level 0. The collective operators are represented
through three bosons, ``S_ij = z_i^dagger z_j``, with occupations
``(n0, m, l)``.

Density-matrix triples ``(l, m, r)`` label ``|1^m;2^l><1^m;2^r|``; their
linear storage order is lexicographic in ``(m, l, r)`` so that every
``m``-block is contiguous.
"""
from __future__ import annotations

import math
from functools import cached_property
from typing import NamedTuple

import numpy as np

OPERATORS = ("S02", "S20", "S12", "S21", "S01", "S10", "S00", "S11", "S22")


class StateIndex(NamedTuple):
    l: int
    m: int


class MatrixIndex(NamedTuple):
    l: int
    m: int
    r: int


def dim(N: int) -> int:
    """Number of ansatz triples, ``sum_m (N - m + 1)**2``."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    return sum((N - m + 1) ** 2 for m in range(N + 1))


def _occupations(N: int, state) -> list[int]:
    l, m = state
    if l < 0 or m < 0 or l + m > N:
        raise ValueError(f"invalid state (l={l}, m={m}) for N={N}")
    return [N - m - l, m, l]


def op_element(which: str, state, N: int):
    """Apply collective operator ``which`` to ``|1^m;2^l>``.

    Returns ``(target, amplitude)`` or ``None`` when the state is annihilated.
    Diagonal operators always return the state itself with its occupation.
    """
    if which not in OPERATORS:
        raise ValueError(f"unknown operator tag {which!r}")
    occ = _occupations(N, state)
    i, j = int(which[1]), int(which[2])
    if i == j:
        return StateIndex(state[0], state[1]), float(occ[i])
    if occ[j] == 0:
        return None
    amp = math.sqrt(occ[j] * (occ[i] + 1))
    occ[j] -= 1
    occ[i] += 1
    return StateIndex(l=occ[2], m=occ[1]), amp


def states(N: int) -> list[StateIndex]:
    """All symmetric states ordered by ``(m, l)``."""
    return [StateIndex(l, m) for m in range(N + 1) for l in range(N - m + 1)]


class TripleBasis:
    """Enumeration of ansatz triples with O(1) offset lookup."""

    def __init__(self, N: int):
        if N < 0:
            raise ValueError("N must be nonnegative")
        self.N = N
        self._starts = np.zeros(N + 2, dtype=np.int64)
        for m in range(N + 1):
            self._starts[m + 1] = self._starts[m] + (N - m + 1) ** 2
        self.size = int(self._starts[-1])

    def __len__(self):
        return self.size

    def contains(self, l: int, m: int, r: int) -> bool:
        return 0 <= m <= self.N and 0 <= l <= self.N - m and 0 <= r <= self.N - m

    def offset(self, l: int, m: int, r: int) -> int:
        if not self.contains(l, m, r):
            raise IndexError(f"triple ({l}, {m}, {r}) outside the ansatz for N={self.N}")
        w = self.N - m + 1
        return int(self._starts[m]) + l * w + r

    def triple(self, k: int) -> MatrixIndex:
        if not 0 <= k < self.size:
            raise IndexError(k)
        m = int(np.searchsorted(self._starts, k, side="right")) - 1
        w = self.N - m + 1
        l, r = divmod(k - int(self._starts[m]), w)
        return MatrixIndex(l, m, r)

    def block_slice(self, m: int) -> slice:
        return slice(int(self._starts[m]), int(self._starts[m + 1]))

    def __iter__(self):
        for m in range(self.N + 1):
            for l in range(self.N - m + 1):
                for r in range(self.N - m + 1):
                    yield MatrixIndex(l, m, r)

    @cached_property
    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(l, m, r)`` columns as integer arrays in storage order."""
        trip = np.array(list(self), dtype=np.int64).reshape(-1, 3)
        return trip[:, 0], trip[:, 1], trip[:, 2]

    @cached_property
    def diagonal_mask(self) -> np.ndarray:
        l, _, r = self.arrays
        return l == r
