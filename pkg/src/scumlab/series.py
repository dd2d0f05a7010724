"""Lag-indexed coefficient sequences with certified tail sums.

Kernel families carry a sequence of coefficients indexed by lag (memory
depth).  A finite prefix is stored explicitly; beyond it an optional
analytic tail (power law or geometric) supplies the remaining values.  Tail
sums are returned as outward-rounded intervals so downstream regularity
certificates stay rigorous.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import TailUnboundedError
from .intervals import Interval, enclose as _pad, isum


@dataclass(frozen=True)
class PowerTail:
    """Values coeff * j**(-exponent) for every lag j past the prefix."""

    coeff: float
    exponent: float

    def __post_init__(self):
        object.__setattr__(self, "coeff", float(self.coeff))
        object.__setattr__(self, "exponent", float(self.exponent))
        if self.exponent <= 0:
            raise ValueError("power tail exponent must be positive")

    @property
    def summable(self) -> bool:
        return self.coeff == 0.0 or self.exponent > 1.0

    def value(self, j):
        return self.coeff * j ** (-self.exponent)

    def magnitude(self) -> "PowerTail":
        return PowerTail(abs(self.coeff), self.exponent)

    def tail_sum(self, m: int) -> Interval:
        """Enclosure of sum_{j >= m} coeff * j**-exponent, for m >= 1.

        Midpoint/trapezoid sandwich for a decreasing convex integrand:
        the sum lies between the integral from m plus half the first term
        and the integral from m - 1/2.
        """
        if self.coeff == 0.0:
            return Interval.point(0.0)
        if not self.summable:
            raise TailUnboundedError(
                f"sum of j**-{self.exponent} from {m} diverges"
            )
        if self.coeff < 0:
            pos = PowerTail(-self.coeff, self.exponent).tail_sum(m)
            return Interval(-pos.hi, -pos.lo)
        p = self.exponent
        integral_m = self.coeff * float(m) ** (1.0 - p) / (p - 1.0)
        lo = integral_m + 0.5 * self.value(m)
        hi = self.coeff * (m - 0.5) ** (1.0 - p) / (p - 1.0)
        return _pad(lo, hi)

    def tails_summable(self) -> bool:
        # sum_j sum_{k > j} |values| converges iff exponent > 2
        return self.coeff == 0.0 or self.exponent > 2.0


@dataclass(frozen=True)
class GeometricTail:
    """Values coeff * ratio**j for every lag j past the prefix."""

    coeff: float
    ratio: float

    def __post_init__(self):
        object.__setattr__(self, "coeff", float(self.coeff))
        object.__setattr__(self, "ratio", float(self.ratio))
        if not 0.0 < self.ratio < 1.0:
            raise ValueError("geometric tail ratio must lie in (0, 1)")

    @property
    def summable(self) -> bool:
        return True

    def value(self, j):
        return self.coeff * self.ratio**j

    def magnitude(self) -> "GeometricTail":
        return GeometricTail(abs(self.coeff), self.ratio)

    def tail_sum(self, m: int) -> Interval:
        if self.coeff == 0.0:
            return Interval.point(0.0)
        exact = self.coeff * self.ratio**m / (1.0 - self.ratio)
        return _pad(exact, exact)

    def tails_summable(self) -> bool:
        return True


@dataclass(frozen=True)
class LagSeries:
    """Coefficients xi_j for j >= start: an explicit prefix, then a tail.

    value(j) is prefix[j - start] inside the prefix, tail.value(j) beyond
    it, and 0 when there is no tail.
    """

    prefix: tuple
    tail: "PowerTail | GeometricTail | None" = None
    start: int = 1

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(float(v) for v in self.prefix))
        if self.start < 0:
            raise ValueError("start lag must be nonnegative")

    @property
    def tail_start(self) -> int:
        return self.start + len(self.prefix)

    @property
    def finite_length(self) -> "int | None":
        """Number of nonzero-capable lags when there is no analytic tail."""
        return None if self.tail is not None else len(self.prefix)

    def value(self, j: int) -> float:
        if j < self.start:
            raise IndexError(f"lag {j} below series start {self.start}")
        if j < self.tail_start:
            return self.prefix[j - self.start]
        return self.tail.value(j) if self.tail is not None else 0.0

    def abs(self) -> "LagSeries":
        tail = None if self.tail is None else self.tail.magnitude()
        return LagSeries(tuple(abs(v) for v in self.prefix), tail, self.start)

    @property
    def summable(self) -> bool:
        return self.tail is None or self.tail.summable

    def tail_sum(self, m: int) -> Interval:
        """Enclosure of sum_{j >= m} value(j).  Requires a summable tail."""
        if m < self.start:
            m = self.start
        head = [Interval.point(self.value(j)) for j in range(m, self.tail_start)]
        total = isum(head)
        if self.tail is not None:
            total = total + self.tail.tail_sum(max(m, self.tail_start))
        return total

    def total(self) -> Interval:
        return self.tail_sum(self.start)

    def tails_summable(self) -> bool:
        """Whether sum_j (sum_{k > j} |value(k)|) converges."""
        return self.tail is None or self.tail.tails_summable()
