import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from superlase.semiclassics import Regime, classify_regime, steady


def test_reference_point():
    r = steady(30, 2, 0.5)
    assert (r.S00bar, r.S11bar, r.S22bar) == (10, 15, 5)
    assert r.alpha == pytest.approx(1 / math.sqrt(3), abs=1e-12)


def test_boundaries():
    r = steady(12, 3.0, 1.0)
    assert (r.S11bar, r.S22bar, r.alpha) == (12, 0, 0)
    r = steady(12, 3.0, 0.0)
    assert r.S22bar == 3.0 != 0.0


@given(N=st.integers(1, 1000), c=st.floats(1e-3, 1e3), p=st.floats(0, 1))
def test_occupations_sum_to_N(N, c, p):
    r = steady(N, c, p)
    assert abs(r.S00bar + r.S11bar + r.S22bar - N) <= 1e-12 * N
    for v in (r.S00bar, r.S11bar, r.S22bar):
        assert -1e-12 * N <= v <= N * (1 + 1e-12)


@given(c=st.floats(1e-2, 1e2), k=st.integers(0, 2 ** 20))
def test_alpha_mirror(c, k):
    p = k / 2 ** 20  # dyadic, so 1 - p is exact
    assert steady(5, c, p).alpha == pytest.approx(steady(5, c, 1 - p).alpha, rel=1e-12, abs=1e-15)


def test_alpha_peaks_at_half():
    ps = np.linspace(0, 1, 201)
    a2 = [steady(5, 2.0, p).alpha ** 2 for p in ps]
    assert ps[int(np.argmax(a2))] == 0.5


def test_regimes():
    assert classify_regime(2, 0.5) is Regime.STABLE_STATIONARY
    assert classify_regime(0.5, 0.1) is Regime.PULSED
    assert classify_regime(1, 0.5) is Regime.BOUNDARY
    assert classify_regime(2, 1.5) is Regime.BOUNDARY


def test_invalid():
    with pytest.raises(ValueError):
        steady(5, 2, 1.5)
    with pytest.raises(ValueError):
        steady(5, -1, 0.5)
    with pytest.raises(ValueError):
        classify_regime(0, 0.5)
