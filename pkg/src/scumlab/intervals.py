"""Tiny outward-rounded interval arithmetic.

Just enough machinery to certify the series and product bounds used by the
regularity module: every arithmetic result is widened by one ulp on each side,
so the returned interval contains the exact real value whenever the inputs do.
This is deliberately not a general interval library; only the operations the
package needs are implemented, all on finite nonnegative-width intervals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


def next_up(x: float) -> float:
    return math.nextafter(x, math.inf)


def next_down(x: float) -> float:
    return math.nextafter(x, -math.inf)


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise ValueError("interval endpoints must not be NaN")
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @staticmethod
    def point(x: float) -> "Interval":
        return Interval(x, x)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def __contains__(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def __add__(self, other: "Interval | float") -> "Interval":
        other = _as_interval(other)
        return Interval(next_down(self.lo + other.lo), next_up(self.hi + other.hi))

    def __sub__(self, other: "Interval | float") -> "Interval":
        other = _as_interval(other)
        return Interval(next_down(self.lo - other.hi), next_up(self.hi - other.lo))

    def __rsub__(self, other: float) -> "Interval":
        return _as_interval(other) - self

    def __mul__(self, other: "Interval | float") -> "Interval":
        other = _as_interval(other)
        products = (
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        )
        return Interval(next_down(min(products)), next_up(max(products)))

    __radd__ = __add__
    __rmul__ = __mul__

    def clamp(self, lo: float, hi: float) -> "Interval":
        return Interval(min(max(self.lo, lo), hi), min(max(self.hi, lo), hi))

    def scale(self, c: float) -> "Interval":
        return self * Interval.point(c)


def _as_interval(x) -> Interval:
    return x if isinstance(x, Interval) else Interval.point(float(x))


def enclose(lo: float, hi: "float | None" = None, rel: float = 1e-12) -> Interval:
    """Wrap computed endpoints in an interval widened by a relative margin,
    covering the rounding error of the (short) float computation that
    produced them."""
    if hi is None:
        hi = lo
    return Interval(
        next_down(lo - rel * abs(lo)), next_up(hi + rel * abs(hi))
    )


def isum(terms) -> Interval:
    """Sum of intervals with exactly rounded endpoint sums, widened one ulp."""
    terms = list(terms)
    if not terms:
        return Interval.point(0.0)
    lo = math.fsum(t.lo for t in terms)
    hi = math.fsum(t.hi for t in terms)
    return Interval(next_down(lo), next_up(hi))


def product_one_minus(values) -> Interval:
    """Enclosure of prod_j (1 - v_j) for intervals v_j with 0 <= v_j.hi < 1.

    Accumulates in the log domain with log1p, padding the rounding error by a
    relative margin that dominates the worst case for the term counts used
    here (a few thousand factors at most).
    """
    values = list(values)
    for v in values:
        if v.lo < 0 or v.hi >= 1.0:
            raise ValueError(f"factor out of range: 1 - {v}")
    if not values:
        return Interval.point(1.0)
    log_lo = math.fsum(math.log1p(-v.hi) for v in values)
    log_hi = math.fsum(math.log1p(-v.lo) for v in values)
    pad = 1e-13 * (len(values) + 1)
    lo = math.exp(log_lo) * (1.0 - pad)
    hi = math.exp(log_hi) * (1.0 + pad)
    return Interval(max(next_down(lo), 0.0), min(next_up(hi), 1.0))
