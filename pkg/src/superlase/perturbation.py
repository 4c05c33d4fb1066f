"""Second-order small-pump expansion around the ground state."""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class PerturbativeState:
    """Coefficients of the stationary density operator through order p**2.

    ``coherence_0_21`` multiplies ``|2^1><0| + h.c.`` and ``coherence_0_22``
    multiplies ``|2^2><0| + h.c.``; the ``pop_*`` fields are the diagonal
    weights of ``|0>``, ``|2^1>`` and ``|1^1>``.
    """

    coherence_0_21: float
    pop_0: float
    pop_21: float
    pop_11: float
    coherence_0_22: float

    @property
    def trace(self) -> float:
        return self.pop_0 + self.pop_21 + self.pop_11


def _check(N, c, p):
    if N < 1:
        raise ValueError("N must be >= 1")
    if c <= 0:
        raise ValueError("c must be positive")
    if p < 0:
        raise ValueError("p must be nonnegative")


def expand(N: int, c: float, p: float) -> PerturbativeState:
    _check(N, c, p)
    p2 = p * p
    return PerturbativeState(
        coherence_0_21=-p * N ** 1.5 / math.sqrt(c),
        pop_0=1 - p2 * N ** 2 * (N + c) / c,
        pop_21=p2 * N ** 3 / c,
        pop_11=p2 * N ** 2,
        coherence_0_22=p2 * N ** 3 / c * math.sqrt((N - 1) / (2.0 * N)),
    )


def occupations_to_p2(N: int, c: float, p: float) -> tuple[float, float, float]:
    """``(<S00>, <S11>, <S22>)`` through order p**2."""
    _check(N, c, p)
    p2 = p * p
    return N - p2 * N ** 2 * (N + c) / c, p2 * N ** 2, p2 * N ** 3 / c
