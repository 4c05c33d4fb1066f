import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from superlase import numerics
from superlase.errors import ArgumentOutOfRange, NullSpaceDegenerate, QuadratureNoConvergence
from superlase.steady import assemble_generator


def test_bessel_trivial_points():
    assert numerics.bessel_i_scaled(0, 0.0) == 1.0
    assert numerics.bessel_i_scaled(3, 0.0) == 0.0
    assert numerics.bessel_i_scaled(-3, 0.0) == 0.0


@pytest.mark.parametrize("s", [5e-324, 1e-300, 1e-12, 9.9e-9, 1.01e-8])
def test_bessel_tiny_arguments(s):
    v = numerics.bessel_i_scaled_orders(3, s)
    assert np.all(np.isfinite(v))
    for n in range(4):
        assert v[n] == pytest.approx(oracles.bessel_i_scaled_series(n, s), rel=1e-14, abs=0)


def test_bessel_order_one_at_two():
    # power series oracle: e^-2 * 1.5906368546...
    ref = oracles.bessel_i_scaled_series(1, 2.0)
    assert ref == pytest.approx(0.21526928924893765, rel=1e-15)
    assert numerics.bessel_i_scaled(1, 2.0) == pytest.approx(ref, rel=1e-13)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(0, 60), s=st.floats(1e-3, 200.0))
def test_bessel_matches_series_oracle(n, s):
    ref = oracles.bessel_i_scaled_series(n, s)
    got = numerics.bessel_i_scaled(n, s)
    if ref < 1e-280:
        assert got < 1e-270
    else:
        assert got == pytest.approx(ref, rel=1e-12)


@given(n=st.integers(0, 200), s=st.floats(0.0, 500.0))
def test_bessel_symmetry_and_range(n, s):
    v = numerics.bessel_i_scaled(n, s)
    assert v == numerics.bessel_i_scaled(-n, s)
    assert 0.0 <= v <= 1.0


@pytest.mark.parametrize("s", [0.01, 1.0, 10.0, 75.0, 200.0])
def test_generating_sum_with_default_truncation(s):
    n_max = numerics.default_truncation(s)
    v = numerics.bessel_i_scaled_orders(n_max, s)
    assert abs(v[0] + 2 * math.fsum(v[1:]) - 1.0) <= 1e-10


@pytest.mark.parametrize("s", [0.5, 7.0, 120.0])
def test_three_term_recurrence(s):
    v = numerics.bessel_i_scaled_orders(100, s)
    k = np.arange(1, 90)
    lhs = v[k - 1] - v[k + 1]
    rhs = (2 * k / s) * v[k]
    mask = v[k - 1] > 1e-290
    assert np.max(np.abs(lhs - rhs)[mask] / v[k - 1][mask]) <= 1e-10


def test_bessel_mp_variant_agrees():
    import mpmath
    vals = numerics.bessel_i_scaled_mp(40, 30.0, dps=40)
    dbl = numerics.bessel_i_scaled_orders(40, 30.0)
    for n in (0, 5, 20, 40):
        assert float(vals[n]) == pytest.approx(dbl[n], rel=1e-13)
    with mpmath.workdps(40):
        ref = mpmath.besseli(7, 30) * mpmath.exp(-30)
        assert abs(vals[7] - ref) / ref < mpmath.mpf(10) ** -30


def test_bessel_domain_guard():
    with pytest.raises(ArgumentOutOfRange):
        numerics.bessel_i_scaled(201, 1.0)
    with pytest.raises(ArgumentOutOfRange):
        numerics.bessel_i_scaled(0, 600.0)
    with pytest.raises(ArgumentOutOfRange):
        numerics.bessel_i_scaled_orders(3, -1.0)


def test_quadrature_examples():
    assert numerics.adaptive_quadrature(lambda t: math.sin(t / 2) ** 2, 0, 2 * math.pi) == \
        pytest.approx(math.pi, rel=1e-12)
    val = numerics.adaptive_quadrature(lambda t: math.exp(5 * math.sin(t)), 0, 2 * math.pi, rel_tol=1e-12)
    assert val == pytest.approx(171.15, abs=0.01)
    assert val == pytest.approx(2 * math.pi * math.exp(5) * oracles.bessel_i_scaled_series(0, 5.0), rel=1e-12)
    assert numerics.adaptive_quadrature(math.exp, 1.3, 1.3) == 0.0


@pytest.mark.parametrize("s", [0.5, 3.0, 20.0])
def test_quadrature_bessel_family(s):
    # (1/pi) int_0^pi exp(s cos t) cos(n t) dt = I_n(s); orders kept where the
    # cosine weighting does not cancel the integral below double precision
    for n in (0, 1, 2):
        got = numerics.adaptive_quadrature(lambda t: math.exp(s * (math.cos(t) - 1)) * math.cos(n * t),
                                           0, math.pi, rel_tol=1e-11)
        assert got / math.pi == pytest.approx(oracles.bessel_i_scaled_series(n, s), rel=1e-10)


def test_quadrature_failure_raises():
    with pytest.raises(QuadratureNoConvergence):
        numerics.adaptive_quadrature(lambda t: 1.0 / t, 0.0, 1.0, limit=5)


def test_null_space_two_by_two():
    v = numerics.null_space_solve(np.array([[-1.0, 1.0], [1.0, -1.0]]), np.ones(2))
    np.testing.assert_allclose(v, [0.5, 0.5], rtol=1e-14)


def test_null_space_degenerate():
    op = sp.csr_matrix(np.diag([0.0, 0.0, -1.0]))
    with pytest.raises(NullSpaceDegenerate):
        numerics.null_space_solve(op, np.ones(3))


def test_null_space_degenerate_without_dense_check():
    op = sp.csr_matrix(np.diag([0.0, 0.0, -1.0]))
    with pytest.raises(NullSpaceDegenerate):
        numerics.null_space_solve(op, np.ones(3), dense_check_max=0)


def test_null_space_n2_generator_vs_dense_oracle():
    gen = assemble_generator(2, 2.0, 0.3)
    tr = gen.trace_functional()
    v = numerics.null_space_solve(gen.matrix, tr)
    ns = oracles.dense_null_vector(gen.matrix.toarray())
    assert ns.shape[1] == 1
    ref = ns[:, 0] / (tr @ ns[:, 0])
    np.testing.assert_allclose(v, ref, atol=1e-10)


def test_laser_generator_gap():
    chk = numerics.singular_spectrum_check(assemble_generator(4, 2.0, 0.3).matrix)
    assert chk.gap_ratio >= 1e6
    assert chk.second > 1e-10 * chk.largest


def test_integrate_to_decay():
    traj = numerics.integrate_to(lambda y: -y, np.array([1.0, 2.0]), 10.0, trace=lambda y: y.sum())
    np.testing.assert_allclose(traj.y, np.exp(-10) * np.array([1.0, 2.0]), rtol=1e-8)
    assert traj.t == 10.0
    assert traj.max_trace_drift == pytest.approx(3 * (1 - math.exp(-10)), rel=1e-8)
