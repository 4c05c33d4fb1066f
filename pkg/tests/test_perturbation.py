from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from superlase.perturbation import expand, occupations_to_p2


def test_first_order_coherence():
    assert expand(4, 1.0, 0.1).coherence_0_21 == pytest.approx(-0.8, rel=1e-14)


def test_ground_state_at_zero_pump():
    st0 = expand(7, 2.0, 0.0)
    assert (st0.pop_0, st0.pop_21, st0.pop_11, st0.coherence_0_21, st0.coherence_0_22) == (1, 0, 0, 0, 0)
    assert occupations_to_p2(7, 2.0, 0.0) == (7, 0, 0)


def test_occupations_at_low_pump():
    assert occupations_to_p2(10, 2.0, 0.01) == pytest.approx((9.94, 0.01, 0.05), abs=1e-14)


def test_smearing_scale():
    assert occupations_to_p2(10, 2.0, 0.1)[2] == pytest.approx(5.0, rel=1e-14)


@given(N=st.integers(1, 200), c=st.fractions(min_value=Fraction(1, 100), max_value=100),
       p=st.fractions(min_value=0, max_value=1))
def test_trace_cancels_exactly(N, c, p):
    assert expand(N, c, p).trace == 1
    assert sum(occupations_to_p2(N, c, p)) == N


def test_invalid():
    for args in ((0, 1.0, 0.1), (2, 0.0, 0.1), (2, 1.0, -0.1)):
        with pytest.raises(ValueError):
            expand(*args)
