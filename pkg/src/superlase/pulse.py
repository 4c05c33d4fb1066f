"""
Periodic pulse profile of the a-mode intensity in the pulsed regime (c < 1).

Everything is dimensionless: phase ``tau = 2 Omega t``, parameters ``s`` and
``d`` (see :func:`superlase.params.pulse_parameters`). ``Int(tau)`` is the
photon number divided by ``Gamma_a Gamma_b / (kappa_a Omega)``.

Two independent evaluations are provided:

* :func:`int_tau_quadrature` integrates the defining time integral from 0 to
  ``tau + 2 pi K`` so that initial transients have died out,
* :func:`int_tau_series` sums the asymptotic Bessel series.

The Bessel series suffers cancellation of order ``exp(2 s)`` for narrow
pulses; points where the double-precision sum is ill-conditioned are
re-evaluated with mpmath at a working precision that covers the worst case.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
import scipy.optimize

from .errors import EpsilonOutOfRange, OverflowGuard, TruncationNotConverged
from .numerics import (
    adaptive_quadrature,
    bessel_i_scaled_mp,
    bessel_i_scaled_orders,
    default_truncation,
)

TWO_PI = 2.0 * math.pi
_LOG_MAX = 709.0
# Largest tolerated cancellation factor sum|t_n| / |sum t_n| in double precision.
_MAX_DOUBLE_CANCELLATION = 1e3


def _check_sd(s: float, d: float):
    if not (d > 0 and s >= d):
        raise ValueError(f"pulsed regime needs s >= d > 0, got s={s}, d={d}")


def exponent_u(tau, s: float, d: float):
    """Growth exponent of ``z1^dagger`` within a period, ``-(d/2) tau - (s/2) sin tau``.

    With ``d > 0`` the net factor per period, ``exp(-pi d)``, is a decay.
    """
    return -0.5 * d * np.asarray(tau) - 0.5 * s * np.sin(tau)


# -- quadrature ----------------------------------------------------------------

def transient_periods_needed(d: float, residual: float = 1e-14) -> int:
    """Smallest K with ``exp(-2 pi d K) < residual``."""
    return int(math.floor(-math.log(residual) / (TWO_PI * d))) + 1


def int_tau_quadrature(s: float, d: float, tau: float, transient_periods: int | None = None,
                       rel_tol: float = 1e-9) -> float:
    """Asymptotic ``Int(tau)`` by direct adaptive quadrature.

    The integral runs over ``[0, T]`` with ``T = tau + 2 pi K``. All
    exponentials are shifted by their maximum over the range before being
    evaluated.
    """
    _check_sd(s, d)
    K = transient_periods_needed(d) if transient_periods is None else int(transient_periods)
    if math.exp(-TWO_PI * d * K) >= 1e-14 and transient_periods is not None:
        raise ValueError(f"{K} transient periods leave exp(-2 pi d K) >= 1e-14")
    T = tau + TWO_PI * K
    # periodic factors taken at tau itself; sin(T) would carry the rounding of 2 pi K
    sin_T = math.sin(tau)

    def f(x):
        return d * (x - T) + s * (math.sin(x) - sin_T)

    # maxima of f sit where cos x = -d/s with sin x > 0
    base = math.pi - math.acos(d / s)
    crit = [base + TWO_PI * k for k in range(K + 2) if 0.0 <= base + TWO_PI * k <= T]
    f_max = max([f(0.0), f(T)] + [f(x) for x in crit])

    def integrand(x):
        return math.cos(0.5 * x) ** 2 * math.exp(f(x) - f_max)

    marks = sorted(set([0.0, T] + crit + [k * 0.5 * math.pi for k in range(1, int(T / (0.5 * math.pi)) + 1)]))
    marks = [x for x in marks if 0.0 <= x <= T]
    total = math.fsum(adaptive_quadrature(integrand, a, b, rel_tol)
                      for a, b in zip(marks[:-1], marks[1:]) if b > a)
    pref = math.sin(0.5 * tau) ** 2
    if pref == 0.0 or total == 0.0:
        return 0.0
    log_val = math.log(pref) + f_max + math.log(total)
    if log_val > _LOG_MAX:
        raise OverflowGuard(f"Int(tau) = exp({log_val:.1f}) overflows a double")
    return pref * total * math.exp(f_max)


# -- Bessel series -------------------------------------------------------------

_MINUS_I_POW = np.array([1.0, -1.0j, -1.0, 1.0j])


@dataclass
class SeriesEvaluation:
    values: np.ndarray
    max_imag_residual: float
    extended_points: int
    n_max: int


def _series_double(taus, s, d, n_max):
    n = np.arange(-n_max, n_max + 1)
    v = bessel_i_scaled_orders(n_max, s)[np.abs(n)]
    coef = _MINUS_I_POW[n % 4] * v * (1.0 + 1j * n / s) / (d + 1j * n)
    terms = coef[None, :] * np.exp(1j * np.outer(taus, n))
    pos = terms[:, n_max + 1:]
    neg = terms[:, n_max - 1::-1]
    paired = terms[:, n_max] + (pos + neg).sum(axis=1)
    full = terms.sum(axis=1)
    mag = np.abs(terms).sum(axis=1)
    return paired.real, full, mag


def _series_mp(tau, s, d, n_max, dps):
    with mpmath.workdps(dps):
        v = bessel_i_scaled_mp(n_max, s, dps)
        s_, d_, t_ = mpmath.mpf(s), mpmath.mpf(d), mpmath.mpf(tau)
        step = mpmath.expj(t_)
        mi = [mpmath.mpc(1), mpmath.mpc(0, -1), mpmath.mpc(-1), mpmath.mpc(0, 1)]
        total = v[0] / d_
        rot = mpmath.mpc(1)
        for k in range(1, n_max + 1):
            rot *= step
            c_pos = mi[k % 4] * v[k] * (1 + mpmath.mpc(0, k) / s_) / (d_ + mpmath.mpc(0, k))
            total += 2 * mpmath.re(c_pos * rot)
        pref = mpmath.sin(t_ / 2) ** 2 / 2
        val = pref * mpmath.exp(s_ * (1 - mpmath.sin(t_))) * total
        if val != 0 and mpmath.log(abs(val)) > _LOG_MAX:
            raise OverflowGuard("Int(tau) overflows a double")
        return float(val)


def _series_values(taus, s, d, n_max):
    taus = np.asarray(taus, dtype=float)
    re, full, mag = _series_double(taus, s, d, n_max)
    pref = 0.5 * np.sin(0.5 * taus) ** 2
    expo = s * (1.0 - np.sin(taus))
    with np.errstate(divide="ignore", invalid="ignore"):
        cancel = mag / np.abs(re)
        imag_resid = np.abs(full.imag) / np.abs(re)
    bad = ~(cancel <= _MAX_DOUBLE_CANCELLATION)
    out = np.empty_like(taus)
    ok = ~bad
    with np.errstate(over="ignore"):
        log_mag = np.log(np.maximum(pref[ok], 1e-300)) + expo[ok] + np.log(np.maximum(np.abs(re[ok]), 1e-300))
    if np.any((log_mag > _LOG_MAX) & (pref[ok] > 0)):
        raise OverflowGuard("Int(tau) overflows a double")
    out[ok] = pref[ok] * np.exp(expo[ok]) * re[ok]
    out[pref == 0.0] = 0.0
    if np.any(bad & (pref > 0)):
        dps = 25 + int(math.ceil((2.0 * s + TWO_PI * d) / math.log(10.0)))
        for i in np.flatnonzero(bad & (pref > 0)):
            out[i] = _series_mp(float(taus[i]), s, d, n_max, dps)
    finite = ok & (pref > 0) & np.isfinite(imag_resid)
    resid = float(imag_resid[finite].max()) if finite.any() else 0.0
    return out, resid, int(np.count_nonzero(bad & (pref > 0)))


def series_profile(s: float, d: float, taus, n_max: int | None = None,
                   check_truncation: bool = True, tol: float = 1e-8) -> SeriesEvaluation:
    """Evaluate the asymptotic Bessel series on an array of phases."""
    _check_sd(s, d)
    n_max = default_truncation(s) if n_max is None else int(n_max)
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    vals, resid, ext = _series_values(taus, s, d, n_max)
    if check_truncation:
        ref, _, _ = _series_values(taus, s, d, 2 * n_max)
        scale = np.maximum(np.abs(vals), np.abs(ref))
        bad = np.abs(vals - ref) > tol * scale
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            raise TruncationNotConverged(
                f"n_max={n_max}: doubling changes Int({taus[i]:.4g}) from {vals[i]:.6g} to {ref[i]:.6g}"
            )
    return SeriesEvaluation(vals, resid, ext, n_max)


def int_tau_series(s: float, d: float, tau: float, n_max: int | None = None) -> float:
    """Asymptotic ``Int(tau)`` from the Bessel series (one phase)."""
    return float(series_profile(s, d, np.array([tau], dtype=float), n_max).values[0])


# -- Gaussian estimate ---------------------------------------------------------

@dataclass(frozen=True)
class GaussianPulse:
    tau_max: float
    tau_min: float
    width: float
    log_peak_height: float
    epsilon: float

    @property
    def peak_height(self) -> float:
        return math.exp(self.log_peak_height) if self.log_peak_height < _LOG_MAX else math.inf

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        return np.exp(self.log_peak_height - (tau - self.tau_max) ** 2 / (2.0 * self.width ** 2))


def gaussian_approx(s: float, d: float) -> GaussianPulse:
    """Laplace estimate of a well separated pulse (intended for ``s >> 1``).

    ``tau_min`` is the maximum of the inner integrand in the same period,
    just before ``tau_max``.
    """
    if s <= 0:
        raise ValueError("s must be positive")
    eps = d / s
    if not abs(eps) < 1.0:
        raise EpsilonOutOfRange(f"|epsilon| = {abs(eps)} must be < 1")
    a = math.acos(eps)
    tau_max = math.pi + a      # cos = -eps, sin < 0
    tau_min = math.pi - a      # cos = -eps, sin > 0
    p = 1.0 / math.sqrt(s * s - d * d)
    log_h = (math.log(0.25 / (s * s * p * p)) + 0.5 * math.log(TWO_PI * p)
             + 2.0 / p - d * (tau_max - tau_min))
    return GaussianPulse(tau_max, tau_min, math.sqrt(p), log_h, eps)


# -- profiles ------------------------------------------------------------------

@dataclass
class PulseProfile:
    tau_samples: np.ndarray
    values: np.ndarray
    method: str
    s: float
    d: float
    truncation: int | None = None
    diagnostics: dict = field(default_factory=dict)


def pulse_profile(s: float, d: float, taus=None, method: str = "series",
                  n_max: int | None = None, n_points: int = 100) -> PulseProfile:
    """Sample ``Int(tau)`` over one period with the chosen method."""
    if taus is None:
        taus = np.linspace(0.0, TWO_PI, n_points, endpoint=False)
    taus = np.asarray(taus, dtype=float)
    if method == "series":
        ev = series_profile(s, d, taus, n_max)
        return PulseProfile(taus, ev.values, "BesselSeries", s, d, ev.n_max,
                            {"max_imag_residual": ev.max_imag_residual,
                             "extended_precision_points": ev.extended_points})
    if method == "quadrature":
        vals = np.array([int_tau_quadrature(s, d, float(t)) for t in taus])
        return PulseProfile(taus, vals, "Quadrature", s, d, None,
                            {"transient_periods": transient_periods_needed(d)})
    raise ValueError(f"unknown method {method!r}")


def fit_pulse_width(s: float, d: float, method: str = "series", n_coarse: int = 128,
                    n_fine: int = 161, level: float = 1e-2) -> tuple[float, float]:
    """Least-squares Gaussian fit around the pulse maximum.

    The window is where a coarse profile exceeds ``level`` times its maximum.
    Returns ``(sigma, center)``.
    """
    coarse = pulse_profile(s, d, method=method, n_points=n_coarse)
    v = coarse.values
    k = int(np.argmax(v))
    h = coarse.tau_samples[1] - coarse.tau_samples[0]
    lo = k
    while lo > k - n_coarse // 2 and v[lo % n_coarse] > level * v[k]:
        lo -= 1
    hi = k
    while hi < k + n_coarse // 2 and v[hi % n_coarse] > level * v[k]:
        hi += 1
    taus = np.linspace(coarse.tau_samples[k] + (lo - k) * h, coarse.tau_samples[k] + (hi - k) * h, n_fine)
    fine = pulse_profile(s, d, taus, method=method).values
    fine = fine / fine.max()
    j = int(np.argmax(fine))

    def gauss(t, a, mu, sig):
        return a * np.exp(-(t - mu) ** 2 / (2.0 * sig ** 2))

    guess = (fine[j], taus[j], max((hi - lo) * h / 6.0, h))
    popt, _ = scipy.optimize.curve_fit(gauss, taus, fine, p0=guess, maxfev=20000)
    return abs(float(popt[2])), float(popt[1])
