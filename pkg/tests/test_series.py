from __future__ import annotations

import math

import pytest

from scumlab.errors import TailUnboundedError
from scumlab.series import GeometricTail, LagSeries, PowerTail


def brute_power_tail(coeff: float, exponent: float, m: int) -> tuple:
    """Bracket sum_{j>m} coeff j^-exponent by a long partial sum plus
    integral bounds on the remainder."""
    cut = m + 200_000
    partial = math.fsum(coeff * j**-exponent for j in range(m + 1, cut + 1))
    lo_rem = coeff * (cut + 1) ** (1.0 - exponent) / (exponent - 1.0)
    hi_rem = coeff * cut ** (1.0 - exponent) / (exponent - 1.0)
    return partial + lo_rem, partial + hi_rem


def test_power_tail_sum_brackets_truth() -> None:
    tail = PowerTail(0.3, 1.5)
    for m in (1, 2, 10, 50):
        lo, hi = brute_power_tail(0.3, 1.5, m)
        got = tail.tail_sum(m)
        # the brute bracket is ~1e-9 wide, so the library interval must
        # cover it up to that slack
        assert got.lo - 1e-8 <= lo and hi <= got.hi + 1e-8
        assert got.width < 0.05 * got.hi


def test_power_tail_values() -> None:
    tail = PowerTail(2.0, 2.5)
    assert tail.value(1) == 2.0
    assert tail.value(4) == pytest.approx(2.0 * 4**-2.5)


def test_power_tail_divergent_raises() -> None:
    tail = PowerTail(1.0, 1.0)
    assert not tail.summable
    with pytest.raises(TailUnboundedError):
        tail.tail_sum(1)


def test_power_tail_summability_flags() -> None:
    assert PowerTail(1.0, 1.5).summable
    assert not PowerTail(1.0, 1.5).tails_summable()
    assert PowerTail(1.0, 2.5).tails_summable()
    assert PowerTail(0.0, 0.5).summable  # zero coefficient trumps the exponent


def test_geometric_tail_closed_form() -> None:
    tail = GeometricTail(0.4, 0.5)
    # sum_{j>m} 0.4 * 0.5^j = 0.4 * 0.5^{m+1} / 0.5
    for m in (0, 1, 5):
        exact = 0.4 * 0.5 ** (m + 1) / (1.0 - 0.5)
        got = tail.tail_sum(m)
        assert got.lo <= exact <= got.hi
        assert got.width < 1e-12


def test_geometric_tail_always_twice_summable() -> None:
    assert GeometricTail(1.0, 0.9).tails_summable()


def test_lag_series_prefix_then_tail() -> None:
    s = LagSeries((0.5, 0.25), tail=GeometricTail(0.1, 0.5), start=1)
    assert s.value(1) == 0.5
    assert s.value(2) == 0.25
    assert s.value(3) == pytest.approx(0.1 * 0.5**3)
    assert s.finite_length is None


def test_lag_series_below_start_raises() -> None:
    s = LagSeries((0.5,), start=1)
    with pytest.raises(IndexError):
        s.value(0)


def test_lag_series_finite_total() -> None:
    s = LagSeries((0.5, 0.25, 0.125), start=1)
    assert s.finite_length == 3
    total = s.total()
    assert total.lo <= 0.875 <= total.hi
    assert s.tail_sum(2).hi == pytest.approx(0.125)
    assert s.tail_sum(3) == s.tail_sum(99)


def test_lag_series_abs_flips_negatives() -> None:
    s = LagSeries((-0.5, 0.25), start=1).abs()
    assert s.value(1) == 0.5
    assert s.value(2) == 0.25


def test_lag_series_tails_summable_dispatch() -> None:
    assert LagSeries((0.3,), start=1).tails_summable()
    assert LagSeries((), tail=PowerTail(0.1, 2.5), start=1).tails_summable()
    assert not LagSeries((), tail=PowerTail(0.1, 1.5), start=1).tails_summable()
