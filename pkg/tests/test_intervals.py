"""Containment is the whole contract: every operation must enclose the
exact real result whatever the rounding direction."""

from __future__ import annotations

import math

import pytest
from hypothesis import given, strategies as st

from scumlab.intervals import Interval, enclose, isum, product_one_minus

finite = st.floats(
    min_value=-1e12, max_value=1e12, allow_nan=False, allow_infinity=False
)


def make_interval(a: float, b: float) -> Interval:
    return Interval(min(a, b), max(a, b))


def test_point_and_width() -> None:
    iv = Interval.point(0.25)
    assert iv.lo == iv.hi == 0.25
    assert iv.width == 0.0
    assert iv.mid == 0.25
    assert 0.25 in iv


def test_rejects_nan_and_empty() -> None:
    with pytest.raises(ValueError):
        Interval(math.nan, 1.0)
    with pytest.raises(ValueError):
        Interval(1.0, 0.0)


def test_infinite_endpoints_allowed() -> None:
    iv = Interval(0.0, math.inf)
    assert math.inf in iv
    assert iv.width == math.inf


@given(finite, finite, finite, finite)
def test_add_contains_endpoint_sums(a: float, b: float, c: float, d: float) -> None:
    x = make_interval(a, b)
    y = make_interval(c, d)
    s = x + y
    assert s.lo <= x.lo + y.lo <= s.hi
    assert s.lo <= x.hi + y.hi <= s.hi


@given(finite, finite, finite, finite)
def test_mul_contains_all_corner_products(a: float, b: float, c: float, d: float) -> None:
    x = make_interval(a, b)
    y = make_interval(c, d)
    p = x * y
    for u in (x.lo, x.hi):
        for v in (y.lo, y.hi):
            assert p.lo <= u * v <= p.hi


@given(finite, finite, finite, finite)
def test_sub_contains_differences(a: float, b: float, c: float, d: float) -> None:
    x = make_interval(a, b)
    y = make_interval(c, d)
    s = x - y
    assert s.lo <= x.lo - y.hi <= s.hi
    assert s.lo <= x.hi - y.lo <= s.hi


def test_outward_rounding_is_strict_for_inexact_sums() -> None:
    x = Interval.point(0.1)
    y = Interval.point(0.2)
    s = x + y
    # 0.1 + 0.2 is inexact in binary; the enclosure must strictly bracket it.
    assert s.lo < 0.1 + 0.2 < s.hi


def test_clamp() -> None:
    iv = Interval(-0.5, 1.5).clamp(0.0, 1.0)
    assert iv == Interval(0.0, 1.0)


def test_scale_negative_flips() -> None:
    iv = Interval(1.0, 2.0).scale(-3.0)
    assert iv.lo <= -6.0 and iv.hi >= -3.0


def test_enclose_pads_relative() -> None:
    iv = enclose(1.0)
    assert iv.lo < 1.0 < iv.hi
    assert iv.width < 1e-11


def test_enclose_two_sided() -> None:
    iv = enclose(0.3, 0.4)
    assert iv.lo < 0.3 and iv.hi > 0.4


def test_isum_contains_fsum() -> None:
    terms = [Interval.point(0.1)] * 10
    s = isum(terms)
    assert s.lo <= 1.0 <= s.hi
    assert s.width < 1e-14


def test_product_one_minus_brackets_exact_product() -> None:
    values = [Interval.point(v) for v in (0.1, 0.25, 0.5)]
    got = product_one_minus(values)
    exact = 0.9 * 0.75 * 0.5
    assert got.lo <= exact <= got.hi
    assert got.width < 1e-12


def test_product_one_minus_rejects_factor_at_one() -> None:
    with pytest.raises(ValueError):
        product_one_minus([Interval.point(1.0)])


@given(st.lists(st.floats(min_value=0.0, max_value=0.99), min_size=1, max_size=30))
def test_product_one_minus_contains_float_product(vals: list) -> None:
    got = product_one_minus([Interval.point(v) for v in vals])
    approx = 1.0
    for v in vals:
        approx *= 1.0 - v
    assert got.lo <= approx <= got.hi
    assert 0.0 < got.lo or approx == 0.0
