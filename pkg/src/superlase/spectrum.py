"""
Time-averaged a-mode spectrum in the pulsed regime (filter width -> 0,
observation time -> infinity).

The double Bessel sum over ``(n, l)`` only depends on frequency through
``k = n + l`` in the resonance denominators, so it is regrouped as

    S(w) = exp(2 s) / 16 * sum_k B_k [1/(d + i(2k+1+w)) + 1/(d + i(2k+1-w))]

where ``B_k`` collects all scaled Bessel products with ``n + l = k``
(compensated summation). The products are individually of size
``exp(2 s)`` relative to ``S``, so frequencies whose rounding bound is too
large are re-evaluated with mpmath. ``w`` is ``omega / Omega``; the physical prefactor
``Gamma_a Gamma_b / Omega**3`` is left out.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .errors import OverflowGuard, TruncationNotConverged
from .numerics import bessel_i_scaled_mp, bessel_i_scaled_orders, default_truncation

_LOG_MAX = 709.0
_EPS = np.finfo(float).eps
# tolerated a-priori rounding bound relative to |S| before switching to mpmath
_MAX_ROUNDING = 1e-11


@dataclass
class SpectrumSeries:
    omega_over_Omega: np.ndarray
    values: np.ndarray
    n_max: int
    l_max: int
    max_imag_residual: float
    truncation_change: float | None = None


def _products(s, d, n_max, l_max, v, w, one, imag):
    """Summand ``A[n, l]`` and its ``k = n + l`` label, generic in the number type."""
    def wi(k):
        return w[abs(k)]

    for n in range(-n_max, n_max + 1):
        a_n = (one if n % 2 == 0 else -one) * v[abs(n)] * (one + imag * n / s) / (d + imag * n)
        for l in range(-l_max, l_max + 1):
            yield n + l, a_n * (wi(n + l + 1) - imag * wi(n + l)) * (wi(l + 1) + imag * wi(l))


def _resonance_weights(s: float, d: float, n_max: int, l_max: int):
    """``B_k`` by compensated summation, plus ``sum |A|`` per ``k`` for error estimates."""
    v = bessel_i_scaled_orders(n_max, s)
    w = bessel_i_scaled_orders(n_max + l_max + 2, 0.5 * s)
    n = np.arange(-n_max, n_max + 1)
    l = np.arange(-l_max, l_max + 1)

    def wi(k):
        return w[np.abs(k)]

    a_n = np.where(n % 2 == 0, 1.0, -1.0) * v[np.abs(n)] * (1.0 + 1j * n / s) / (d + 1j * n)
    b_l = wi(l + 1) + 1j * wi(l)
    nn, ll = np.meshgrid(n, l, indexing="ij")
    mid = wi(nn + ll + 1) - 1j * wi(nn + ll)
    A = a_n[:, None] * mid * b_l[None, :]

    ks = np.arange(-n_max - l_max, n_max + l_max + 1)
    B = np.empty(ks.size, dtype=complex)
    flat_k = (nn + ll).ravel()
    order = np.argsort(flat_k, kind="stable")
    sorted_k = flat_k[order]
    vals = A.ravel()[order]
    bounds = np.searchsorted(sorted_k, ks, side="left")
    ends = np.searchsorted(sorted_k, ks, side="right")
    mag = np.empty(ks.size)
    for i, (lo, hi) in enumerate(zip(bounds, ends)):
        seg = vals[lo:hi]
        B[i] = complex(math.fsum(seg.real), math.fsum(seg.imag))
        mag[i] = math.fsum(np.abs(seg))
    return ks, B, mag


def _resonances(ks, omegas, d):
    W = omegas[:, None]
    centre = (2 * ks + 1)[None, :]
    return 1.0 / (d + 1j * (centre + W)) + 1.0 / (d + 1j * (centre - W))


def _weights_mp(s, d, n_max, l_max, dps):
    """``B_k`` summed in ``dps`` digits and rounded to complex doubles."""
    with mpmath.workdps(dps):
        one, imag = mpmath.mpf(1), mpmath.mpc(0, 1)
        s_, d_ = mpmath.mpf(s), mpmath.mpf(d)
        v = bessel_i_scaled_mp(n_max, s, dps)
        w = bessel_i_scaled_mp(n_max + l_max + 2, s_ / 2, dps)
        B = {}
        for k, a in _products(s_, d_, n_max, l_max, v, w, one, imag):
            B[k] = B.get(k, 0) + a
        ks = np.arange(-n_max - l_max, n_max + l_max + 1)
        return ks, np.array([complex(B[int(k)]) for k in ks]), B


def _evaluate_mp(s, d, omegas, B, dps):
    with mpmath.workdps(dps):
        imag = mpmath.mpc(0, 1)
        d_ = mpmath.mpf(d)
        scale = mpmath.exp(2 * mpmath.mpf(s)) / 16
        out = []
        for x in omegas:
            x = mpmath.mpf(float(x))
            tot = mpmath.fsum(b * (1 / (d_ + imag * (2 * k + 1 + x)) + 1 / (d_ + imag * (2 * k + 1 - x)))
                              for k, b in B.items())
            out.append(complex(tot * scale))
        return np.array(out)


def _rounding_ratio(R, weights, S, scale):
    """A-priori rounding bound of ``R @ B`` relative to ``|Re S|`` (inf where S = 0)."""
    bound = (np.abs(R) @ weights) * scale * _EPS
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = bound / np.abs(S.real)
    return np.where(np.isnan(rel), np.inf, rel)


def _evaluate(s, d, omegas, n_max, l_max):
    """Spectrum on ``omegas``.

    Rounding of the ``(n, l)`` summands is bounded by ``eps sum |A|``; when
    that bound is too large relative to ``|S|`` the weights ``B_k`` are
    recomputed in extended precision. The remaining sum over ``k`` cancels
    far less and is done in doubles unless its own bound is still too large.
    """
    ks, B, mag = _resonance_weights(s, d, n_max, l_max)
    R = _resonances(ks, omegas, d)
    scale = math.exp(2.0 * s) / 16.0
    S = (R @ B) * scale
    if np.all(_rounding_ratio(R, mag, S, scale) <= _MAX_ROUNDING):
        return S
    dps = 25 + int(math.ceil(2.0 * s / math.log(10.0)))
    ks, B, B_mp = _weights_mp(s, d, n_max, l_max, dps)
    S = (R @ B) * scale
    bad = ~(_rounding_ratio(R, np.abs(B), S, scale) <= _MAX_ROUNDING)
    if np.any(bad):
        S[bad] = _evaluate_mp(s, d, omegas[bad], B_mp, dps)
    return S


def time_averaged_spectrum(s: float, d: float, omega_grid, n_max: int | None = None,
                           l_max: int | None = None, check_convergence: bool = True,
                           tol: float = 1e-8) -> SpectrumSeries:
    """Evaluate the time-averaged spectrum on a grid of ``omega / Omega`` values."""
    if not (d > 0 and s >= d):
        raise ValueError(f"pulsed regime needs s >= d > 0, got s={s}, d={d}")
    if 2.0 * s > _LOG_MAX:
        raise OverflowGuard(f"exp(2 s) with s={s} overflows a double")
    omegas = np.asarray(omega_grid, dtype=float)
    if not np.all(np.isfinite(omegas)):
        raise ValueError("frequency grid must be finite")
    default = default_truncation(s)
    n_max = default if n_max is None else int(n_max)
    l_max = default if l_max is None else int(l_max)

    S = _evaluate(s, d, omegas, n_max, l_max)
    re = S.real
    scale = float(np.max(np.abs(re))) if re.size else 0.0
    imag = float(np.max(np.abs(S.imag)) / scale) if scale > 0 else 0.0

    change = None
    if check_convergence:
        ref = _evaluate(s, d, omegas, 2 * n_max, 2 * l_max).real
        denom = np.maximum(np.abs(re), np.abs(ref))
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = np.where(denom > 0, np.abs(re - ref) / denom, 0.0)
        change = float(rel.max()) if rel.size else 0.0
        if change > tol:
            raise TruncationNotConverged(
                f"(n_max, l_max) = ({n_max}, {l_max}): doubling changes S by {change:.3g} relative"
            )
    return SpectrumSeries(omegas, re, n_max, l_max, imag, change)


def harmonic_weights(s: float, d: float, k_max: int) -> np.ndarray:
    """Spectrum at the odd harmonics ``w = 2k + 1``, ``k = 0..k_max``, over its value at ``w = 1``."""
    sp = time_averaged_spectrum(s, d, 2.0 * np.arange(k_max + 1) + 1.0)
    return sp.values / sp.values[0]


def local_maxima(omegas, values) -> np.ndarray:
    """Grid points that are strict local maxima (interior points only)."""
    v = np.asarray(values)
    idx = np.flatnonzero((v[1:-1] > v[:-2]) & (v[1:-1] >= v[2:])) + 1
    return np.asarray(omegas)[idx]
