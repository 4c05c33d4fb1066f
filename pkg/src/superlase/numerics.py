"""
Shared numerical kernels.

* exponentially scaled modified Bessel functions ``exp(-s) I_n(s)`` by
  Miller's backward recurrence, normalised with ``I_0 + 2 sum I_k = e^s``
  (double precision and arbitrary precision variants),
* adaptive quadrature (QUADPACK via scipy, deterministic nodes),
* null-vector extraction for sparse generators under a trace constraint,
* explicit adaptive time integration with a steady-state certificate.

Unscaled ``I_n(s)`` is never formed.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import mpmath
import numpy as np
import scipy.integrate
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    ArgumentOutOfRange,
    NullSpaceDegenerate,
    NumericalFailure,
    QuadratureNoConvergence,
    Singular,
)

BESSEL_MAX_ORDER = 200
BESSEL_MAX_ARG = 500.0

_RESCALE_AT = 1e250
_SMALL_ARG = 1e-8


def default_truncation(s: float) -> int:
    """Order beyond which ``exp(-s) I_n(s)`` is negligible in double precision."""
    return int(math.ceil(s + 10.0 * math.sqrt(s) + 20.0))


def _miller_start(n_max: int, s: float) -> int:
    m = n_max + int(12.0 * math.sqrt(s + n_max)) + 40
    return m + (m % 2)


def bessel_i_scaled_orders(n_max: int, s: float) -> np.ndarray:
    """Return ``exp(-s) I_k(s)`` for ``k = 0 .. n_max`` as a float array.

    Backward recurrence ``I_{k-1} = I_{k+1} + (2k/s) I_k`` started far above
    ``max(n_max, s)`` and normalised with the generating-function sum, which
    directly yields the exponentially scaled values.
    """
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    if s < 0:
        raise ArgumentOutOfRange(f"Bessel argument must be nonnegative, got {s}")
    out = np.zeros(n_max + 1)
    if s == 0.0:
        out[0] = 1.0
        return out
    if s < _SMALL_ARG:
        # two terms of the power series are exact to double precision here and
        # avoid the overflow of 2/s for subnormal arguments
        h = 0.5 * s
        term = math.exp(-s)
        for k in range(n_max + 1):
            if k:
                term *= h / k
            out[k] = term * (1.0 + h * h / (k + 1))
        return out

    start = _miller_start(n_max, s)
    two_over_s = 2.0 / s
    vals = np.zeros(start + 2)
    nxt, cur = 0.0, 1e-300
    vals[start] = cur
    for k in range(start, 0, -1):
        prev = nxt + k * two_over_s * cur
        nxt, cur = cur, prev
        vals[k - 1] = cur
        if cur > _RESCALE_AT:
            vals[k - 1:] /= _RESCALE_AT
            nxt /= _RESCALE_AT
            cur /= _RESCALE_AT
    # exp(-s) * (I_0 + 2 sum_{k>=1} I_k) = 1
    norm = vals[0] + 2.0 * math.fsum(vals[1:])
    out[:] = vals[: n_max + 1] / norm
    return out


def bessel_i_scaled(n: int, s: float) -> float:
    """``exp(-s) I_n(s)`` for integer ``n`` (negative orders by symmetry)."""
    n = abs(int(n))
    if n > BESSEL_MAX_ORDER or s > BESSEL_MAX_ARG:
        raise ArgumentOutOfRange(
            f"(n={n}, s={s}) outside validated domain |n|<={BESSEL_MAX_ORDER}, s<={BESSEL_MAX_ARG}"
        )
    return float(bessel_i_scaled_orders(n, s)[n])


def bessel_i_scaled_mp(n_max: int, s, dps: int) -> list:
    """Arbitrary-precision ``exp(-s) I_k(s)``, ``k = 0 .. n_max``, as mpf values.

    Same recurrence as the double version; ``dps`` decimal digits are used
    throughout (the caller owns the mpmath context).
    """
    with mpmath.workdps(dps):
        s = mpmath.mpf(s)
        if s == 0:
            return [mpmath.mpf(1)] + [mpmath.mpf(0)] * n_max
        start = n_max + int(12.0 * math.sqrt(float(s) + n_max) + 2.5 * dps) + 40
        two_over_s = 2 / s
        vals = [mpmath.mpf(0)] * (start + 2)
        nxt, cur = mpmath.mpf(0), mpmath.mpf(1)
        vals[start] = cur
        for k in range(start, 0, -1):
            nxt, cur = cur, nxt + k * two_over_s * cur
            vals[k - 1] = cur
        norm = vals[0] + 2 * mpmath.fsum(vals[1:])
        return [v / norm for v in vals[: n_max + 1]]


def adaptive_quadrature(integrand, a: float, b: float, rel_tol: float = 1e-10,
                        points=None, limit: int = 500) -> float:
    """Integrate ``integrand`` over ``[a, b]`` to relative tolerance ``rel_tol``.

    Gauss-Kronrod with adaptive bisection (QUADPACK), so node placement is
    deterministic. Raises QuadratureNoConvergence when the subdivision limit
    is hit or the error estimate stays above tolerance.
    """
    if a == b:
        return 0.0
    kwargs = dict(epsabs=0.0, epsrel=rel_tol, limit=limit, full_output=1)
    if points is not None:
        inner = [x for x in points if min(a, b) < x < max(a, b)]
        if inner:
            kwargs["points"] = inner
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.integrate.IntegrationWarning)
        res = scipy.integrate.quad(integrand, a, b, **kwargs)
    value, err, info = res[0], res[1], res[2]
    if len(res) > 3 or not np.isfinite(value):
        msg = res[3] if len(res) > 3 else "non-finite result"
        if err > rel_tol * abs(value) or not np.isfinite(value):
            raise QuadratureNoConvergence(
                f"quadrature on [{a}, {b}] failed: {msg} (est. error {err:.3g})"
            )
    return float(value)


@dataclass(frozen=True)
class NullSpaceCheck:
    smallest: float
    second: float
    largest: float

    @property
    def gap_ratio(self) -> float:
        return self.second / self.smallest if self.smallest > 0 else math.inf


def singular_spectrum_check(op) -> NullSpaceCheck:
    """Dense SVD of ``op``; returns the two smallest and the largest singular values."""
    dense = op.toarray() if sp.issparse(op) else np.asarray(op, dtype=float)
    sv = scipy.linalg.svdvals(dense)
    return NullSpaceCheck(smallest=float(sv[-1]), second=float(sv[-2]), largest=float(sv[0]))


def null_space_solve(op, trace, *, dense_check_max: int = 600, refine_steps: int = 3,
                     degeneracy_tol: float = 1e-10) -> np.ndarray:
    """Null vector ``v`` of a square sparse ``op`` normalised so that ``trace @ v == 1``.

    One row of ``op`` (a row where the trace functional is nonzero) is
    replaced by the trace functional and the bordered system is solved by
    sparse LU. Because ``trace @ op == 0`` for a trace-preserving generator,
    the bordered matrix is nonsingular exactly when the null space is
    one-dimensional. A few steps of iterative refinement with extended
    precision residuals follow. For dimensions up to ``dense_check_max`` the
    singular spectrum is additionally inspected.
    """
    op = sp.csr_matrix(op, dtype=float)
    n = op.shape[0]
    if op.shape != (n, n):
        raise ValueError("operator must be square")
    trace = np.asarray(trace, dtype=float)
    if trace.shape != (n,) or not np.any(trace):
        raise ValueError("trace functional must be a nonzero vector of matching size")

    if n <= dense_check_max and n >= 2:
        chk = singular_spectrum_check(op)
        if chk.second <= degeneracy_tol * chk.largest:
            raise NullSpaceDegenerate(
                f"second-smallest singular value {chk.second:.3e} vanishes "
                f"(largest {chk.largest:.3e})"
            )
        if chk.gap_ratio < 1e6:
            warnings.warn(
                f"weak null-space gap: sigma_2/sigma_1 = {chk.gap_ratio:.3g}", RuntimeWarning
            )

    k = int(np.argmax(np.abs(trace)))
    bordered = op.tolil()
    bordered[k, :] = trace
    bordered = bordered.tocsc()
    rhs = np.zeros(n)
    rhs[k] = 1.0
    try:
        lu = spla.splu(bordered)
    except RuntimeError as exc:
        raise NullSpaceDegenerate(f"bordered system is singular: {exc}") from exc
    v = lu.solve(rhs)
    if not np.all(np.isfinite(v)):
        raise NullSpaceDegenerate("bordered system is numerically singular")

    bordered_ld = bordered.astype(np.longdouble)
    rhs_ld = rhs.astype(np.longdouble)
    for _ in range(refine_steps):
        resid = rhs_ld - bordered_ld @ v.astype(np.longdouble)
        corr = lu.solve(np.asarray(resid, dtype=float))
        v = np.asarray(v.astype(np.longdouble) + corr, dtype=float)

    scale = float(abs(op).sum(axis=1).max()) or 1.0
    defect = float(np.max(np.abs(op @ v)))
    if defect > 1e-10 * scale * float(np.max(np.abs(v))):
        raise Singular(f"no null vector: residual {defect:.3e} (operator norm {scale:.3e})")
    return v


@dataclass
class Trajectory:
    y: np.ndarray
    t: float
    derivative_norm: float
    n_steps: int
    max_trace_drift: float


def integrate_to(rhs, y0: np.ndarray, horizon: float, *, rtol: float = 1e-10,
                 atol: float = 1e-13, trace=None, method: str = "DOP853") -> Trajectory:
    """Explicit adaptive integration of ``dy/dt = rhs(y)`` up to ``horizon``.

    Returns only the endpoint plus diagnostics (``||rhs(y_end)||_inf`` and,
    when ``trace`` is given, the largest deviation of ``trace(y)`` along the
    accepted steps).
    """
    y0 = np.asarray(y0, dtype=float)
    if horizon == 0:
        return Trajectory(y0.copy(), 0.0, float(np.max(np.abs(rhs(y0)))), 0, 0.0)
    sol = scipy.integrate.solve_ivp(
        lambda _t, y: rhs(y), (0.0, horizon), y0, method=method, rtol=rtol, atol=atol,
    )
    if sol.status != 0:
        raise NumericalFailure(f"time integration failed: {sol.message}")
    y_end = sol.y[:, -1]
    drift = 0.0
    if trace is not None:
        t0 = trace(y0)
        drift = max(abs(trace(sol.y[:, j]) - t0) for j in range(sol.y.shape[1]))
    return Trajectory(
        y=y_end,
        t=float(sol.t[-1]),
        derivative_norm=float(np.max(np.abs(rhs(y_end)))),
        n_steps=len(sol.t) - 1,
        max_trace_drift=float(drift),
    )
