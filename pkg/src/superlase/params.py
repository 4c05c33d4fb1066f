"""Model parameters and their dimensionless combinations.

All downstream code consumes :class:`DerivedParams`; physical prefactors are
only applied when formatting output.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalParams:
    """Rates share one (arbitrary) time unit."""

    N: int
    Omega: float
    g12: float
    g01: float
    kappa_a: float
    kappa_b: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        for name in ("Omega", "g12", "g01", "kappa_a", "kappa_b"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise ValueError(f"{name} must be a positive finite rate, got {val!r}")


@dataclass(frozen=True)
class DerivedParams:
    """Dimensionless parameter set.

    ``s`` and ``d`` (and ``Gamma_a``/``Gamma_b`` etc.) are ``None`` when they
    are undefined: pulse parameters need ``p > 0``, the physical rates need a
    :class:`PhysicalParams` origin.
    """

    N: int
    c: float
    p: float
    epsilon: float
    s: float | None = None
    d: float | None = None
    gamma_a: float | None = None
    gamma_b: float | None = None
    Gamma_a: float | None = None
    Gamma_b: float | None = None
    physical: PhysicalParams | None = None

    @property
    def pulse_defined(self) -> bool:
        return self.s is not None

    @property
    def pump_rate(self) -> float:
        """Pump Rabi frequency in units of gamma_b, ``p N sqrt(c)``."""
        return self.p * self.N * math.sqrt(self.c)

    def intensity_prefactor(self) -> float:
        """``Gamma_a Gamma_b / (kappa_a Omega)``, the photon-number multiplier of Int(tau)."""
        ph = self._need_physical()
        return self.Gamma_a * self.Gamma_b / (ph.kappa_a * ph.Omega)

    def spectrum_prefactor(self) -> float:
        """``Gamma_a Gamma_b / Omega**3``; the pure double sum already carries 1/16."""
        ph = self._need_physical()
        return self.Gamma_a * self.Gamma_b / ph.Omega ** 3

    def _need_physical(self) -> PhysicalParams:
        if self.physical is None:
            raise ValueError("physical prefactors need parameters built by derive()")
        return self.physical


def pulse_parameters(c: float, p: float) -> tuple[float, float]:
    """Return ``(s, d)`` for ``p > 0``."""
    denom = 2.0 * p * math.sqrt(c)
    return (1.0 + c) / denom, (1.0 - c) / denom


def _check_dimensionless(N, c, p):
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N!r}")
    if not (math.isfinite(c) and c > 0):
        raise ValueError(f"c must be positive, got {c!r}")
    if not (math.isfinite(p) and p >= 0):
        raise ValueError(f"p must be nonnegative, got {p!r}")


def stationary_inputs(N: int, c: float, p: float) -> DerivedParams:
    """Build the dimensionless set directly from ``(N, c, p)``."""
    _check_dimensionless(N, c, p)
    eps = (1.0 - c) / (1.0 + c)
    if p == 0:
        return DerivedParams(N=int(N), c=float(c), p=0.0, epsilon=eps)
    s, d = pulse_parameters(c, p)
    return DerivedParams(N=int(N), c=float(c), p=float(p), epsilon=eps, s=s, d=d)


def derive(params: PhysicalParams) -> DerivedParams:
    gamma_a = params.g12 ** 2 / params.kappa_a
    gamma_b = params.g01 ** 2 / params.kappa_b
    c = gamma_a / gamma_b
    p = params.Omega / (params.N * math.sqrt(c) * gamma_b)
    Gamma_a = gamma_a * params.N
    Gamma_b = gamma_b * params.N
    s = (Gamma_b + Gamma_a) / (2.0 * params.Omega)
    d = (Gamma_b - Gamma_a) / (2.0 * params.Omega)
    return DerivedParams(
        N=params.N, c=c, p=p, epsilon=(1.0 - c) / (1.0 + c), s=s, d=d,
        gamma_a=gamma_a, gamma_b=gamma_b, Gamma_a=Gamma_a, Gamma_b=Gamma_b,
        physical=params,
    )
