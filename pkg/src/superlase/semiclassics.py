"""Closed-form semiclassical stationary state and its stability regime."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass


class Regime(enum.Enum):
    STABLE_STATIONARY = "StableStationary"
    PULSED = "Pulsed"
    BOUNDARY = "Boundary"


@dataclass(frozen=True)
class SemiclassicalSteady:
    """Mean level occupations and the dimensionless field amplitude.

    ``alpha`` is the field amplitude in units of ``N gamma_b / g12``.
    """

    S00bar: float
    S11bar: float
    S22bar: float
    alpha: float


def steady(N: int, c: float, p: float) -> SemiclassicalSteady:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"semiclassical solution needs 0 <= p <= 1, got {p}")
    if c <= 0:
        raise ValueError(f"c must be positive, got {c}")
    return SemiclassicalSteady(
        S00bar=N * c * (1.0 - p) / (1.0 + c),
        S11bar=N * p,
        S22bar=N * (1.0 - p) / (1.0 + c),
        alpha=c * math.sqrt(p * (1.0 - p)) / math.sqrt(1.0 + c),
    )


def classify_regime(c: float, p: float) -> Regime:
    if c <= 0:
        raise ValueError(f"c must be positive, got {c}")
    if c < 1:
        return Regime.PULSED
    if c > 1 and 0.0 <= p <= 1.0:
        return Regime.STABLE_STATIONARY
    return Regime.BOUNDARY
