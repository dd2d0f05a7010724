"""Regularity coefficients: per-lag sensitivity of a kernel to its past.

Oscillation at lag j is the largest total-variation move of the conditional
law when two pasts differ only at distance j; variation at lag j is the
largest move when they agree on the most recent j coordinates.  Both feed
two scalar summaries: the oscillation margin (one minus the summed
oscillations) and the variation product (the product of one minus each
variation), and either one, when positive, yields the Gaussian moment and
deviation constants.

Everything here is interval-certified: enumeration over explicit pasts
provides achievable values, family envelopes provide upper bounds, and the
two are kept separate so tests can check one against the other.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import IntractableError, NotApplicableError, TailUnboundedError
from .intervals import Interval, enclose, isum, next_down, next_up, product_one_minus
from .kernels import History, Kernel, PastSpec, total_variation

ENUMERATION_BUDGET = 200_000


@dataclass(frozen=True)
class BoundTable:
    """Certified per-lag enclosures plus a tail summary.

    ``per_lag[i]`` encloses the true coefficient at lag ``start + i``.
    ``tail`` encloses the sum of the true coefficients beyond the table and
    ``tail_sup`` bounds their supremum.  ``summable`` is False when the full
    sum provably diverges, in which case ``tail`` may be infinite.
    ``lower_diverges`` strengthens that: the certified lower bounds
    themselves sum to infinity, so products of (1 - value) vanish.
    """

    per_lag: tuple
    start: int
    tail: Interval
    tail_sup: float = 0.0
    summable: bool = True
    lower_diverges: bool = False

    def value(self, lag: int) -> Interval:
        return self.per_lag[lag - self.start]

    def certified_upper(self, n: int) -> np.ndarray:
        """Upper ends for lags 0..n clamped to [0, 1], tail_sup past the table."""
        vals = np.zeros(n + 1)
        last = self.start + len(self.per_lag) - 1
        for lag in range(self.start, n + 1):
            v = self.value(lag).hi if lag <= last else self.tail_sup
            vals[lag] = min(max(v, 0.0), 1.0)
        return vals

    def head_sum(self) -> Interval:
        return isum(self.per_lag)

    def total(self) -> Interval:
        if not self.summable:
            return Interval(self.head_sum().lo, math.inf)
        return self.head_sum() + self.tail


def oscillation_margin(osc: BoundTable) -> Interval:
    """Enclosure of 1 - sum_j Osc_j."""
    if osc.start != 1:
        raise ValueError("oscillation tables start at lag 1")
    total = osc.total()
    lo = -math.inf if total.hi == math.inf else next_down(1.0 - total.hi)
    return Interval(lo, next_up(1.0 - total.lo))


def variation_product(var: BoundTable) -> Interval:
    """Enclosure of prod_{j >= 0} (1 - Var_j)."""
    if var.start != 0:
        raise ValueError("variation tables start at lag 0")
    # Coefficients live in [0, 1]; outward rounding in the providers can
    # spill an endpoint a hair outside, so clamp before the log1p product.
    los = [min(max(v.lo, 0.0), 1.0) for v in var.per_lag]
    his = [min(max(v.hi, 0.0), 1.0) for v in var.per_lag]
    # upper end: drop each value to its certified lower bound
    if var.lower_diverges or any(v >= 1.0 for v in los):
        hi = 0.0
    else:
        head = product_one_minus(Interval.point(v) for v in los)
        tail_factor = enclose(math.exp(-max(var.tail.lo, 0.0)))
        hi = (head * tail_factor).hi
    # lower end: push each value to its certified upper bound
    blocked = (
        not var.summable
        or var.tail.hi == math.inf
        or var.tail_sup >= 1.0
        or any(v >= 1.0 for v in his)
    )
    if blocked:
        lo = 0.0
    else:
        head = product_one_minus(Interval.point(v) for v in his)
        # log(1 - v) >= -v / (1 - s) for 0 <= v <= s < 1
        exponent = var.tail.hi / (1.0 - var.tail_sup)
        tail_factor = enclose(math.exp(-exponent))
        lo = (head * tail_factor).lo
    return Interval(max(lo, 0.0), min(max(hi, lo), 1.0))


@dataclass(frozen=True)
class ConcentrationConstants:
    """The two candidate contraction coefficients and the Gaussian factors.

    ``coefficient`` is the larger certified lower end of the two enclosures,
    the safe choice for every bound downstream.  ``mgf_factor`` multiplies
    theta^2 ||delta||_2^2 in the log moment bound and is always >= 1/8;
    ``deviation_rate`` multiplies -u^2 / ||delta||_2^2 in the two-sided tail
    bound.
    """

    osc_margin: Interval
    var_product: Interval
    coefficient: float
    source: str

    @property
    def mgf_factor(self) -> float:
        return 1.0 / (8.0 * self.coefficient**2)

    @property
    def deviation_rate(self) -> float:
        return 2.0 * self.coefficient**2


def gcb_constants(margin: Interval, product: Interval) -> ConcentrationConstants:
    """Pick the larger certified coefficient; either one supports the bounds."""
    if margin.lo <= 0.0 and product.lo <= 0.0:
        raise NotApplicableError(
            f"neither summary is certified positive: margin {margin}, product {product}"
        )
    if margin.lo >= product.lo:
        return ConcentrationConstants(margin, product, margin.lo, "oscillation margin")
    return ConcentrationConstants(margin, product, product.lo, "variation product")


def concentration_constants(kernel: Kernel, max_lag: int = 64) -> ConcentrationConstants:
    osc = kernel.oscillation_bounds(max_lag)
    var = kernel.variation_bounds(max_lag)
    return gcb_constants(oscillation_margin(osc), variation_product(var))


@dataclass(frozen=True)
class RegularityProfile:
    oscillation: BoundTable
    variation: BoundTable
    osc_margin: Interval
    var_product: Interval
    infimum: Interval


def profile(kernel: Kernel, max_lag: int = 64) -> RegularityProfile:
    osc = kernel.oscillation_bounds(max_lag)
    var = kernel.variation_bounds(max_lag)
    return RegularityProfile(
        oscillation=osc,
        variation=var,
        osc_margin=oscillation_margin(osc),
        var_product=variation_product(var),
        infimum=kernel.infimum_probability(),
    )


# ---------------------------------------------------------------------------
# exhaustive enumeration over explicit pasts (ground truth at small scale)


def _check_budget(count: int) -> None:
    if count > ENUMERATION_BUDGET:
        raise IntractableError(
            f"enumeration needs {count} kernel evaluations (budget {ENUMERATION_BUDGET})"
        )


def _conditional_cache(kernel, pasts):
    return [kernel.conditional(History(p)) for p in pasts]


def enumerate_oscillation(kernel: Kernel, lag: int, horizon: int, fill=(0,)) -> float:
    """Largest TV move over explicit pasts differing exactly at ``lag``.

    Pasts run over all words of length ``horizon`` followed by the periodic
    ``fill``; the result is achievable, hence a lower bound on the true
    supremum that converges to it as the horizon grows.
    """
    if not 1 <= lag <= horizon:
        raise ValueError("need 1 <= lag <= horizon")
    alphabet = kernel.alphabet
    if alphabet is None:
        alphabet = _COUNT_WITNESS_ALPHABET
    a = len(alphabet)
    _check_budget(a ** (horizon - 1) * a * (a - 1))
    best = 0.0
    for word in itertools.product(alphabet, repeat=horizon - 1):
        # word lists the coordinates at lags horizon..1 skipping ``lag``
        dists = []
        for s in alphabet:
            coords = list(word)
            coords.insert(horizon - lag, s)
            past = PastSpec(explicit=tuple(coords), fill=fill)
            dists.append(kernel.conditional(History(past)))
        for d1, d2 in itertools.combinations(dists, 2):
            best = max(best, total_variation(d1, d2))
    return best


def enumerate_variation(kernel: Kernel, lag: int, horizon: int, fill=(0,)) -> float:
    """Largest TV move over explicit pasts agreeing on the last ``lag``
    coordinates and free on lags lag+1 .. horizon."""
    if not 0 <= lag <= horizon:
        raise ValueError("need 0 <= lag <= horizon")
    alphabet = kernel.alphabet
    if alphabet is None:
        alphabet = _COUNT_WITNESS_ALPHABET
    a = len(alphabet)
    free = horizon - lag
    binary = a == 2
    pair_cost = a**free if binary else a**free * (a**free - 1)
    _check_budget(a**lag * max(pair_cost, 1))
    best = 0.0
    for shared in itertools.product(alphabet, repeat=lag):
        dists = []
        for far in itertools.product(alphabet, repeat=free):
            past = PastSpec(explicit=tuple(far) + tuple(shared), fill=fill)
            dists.append(kernel.conditional(History(past)))
        if binary:
            # TV between binary laws is a difference of single atoms, so the
            # widest pair is the extremal pair
            p_last = [d.probs[-1] for d in dists]
            best = max(best, max(p_last) - min(p_last))
        else:
            for d1, d2 in itertools.combinations(dists, 2):
                best = max(best, total_variation(d1, d2))
    return best


_COUNT_WITNESS_ALPHABET = (0, 1, 2, 3)


# ---------------------------------------------------------------------------
# order-one contraction diagnostics


def dobrushin_coefficient(matrix) -> float:
    """Largest pairwise total variation between rows."""
    q = np.asarray(matrix, dtype=float)
    diff = 0.5 * np.abs(q[:, None, :] - q[None, :, :]).sum(axis=2)
    return float(diff.max())


@dataclass(frozen=True)
class ContractionReport:
    per_power: tuple
    coefficient_sum: Interval
    one_plus_sum: Interval
    geometric_envelope: float


def contraction_diagnostics(matrix, max_power: int = 64) -> ContractionReport:
    """Per-power contraction coefficients and the summed series.

    The tail past ``max_power`` is controlled by submultiplicativity:
    the coefficient at power m + k is at most the coefficient at m times
    the one-step coefficient to the k.
    """
    q = np.asarray(matrix, dtype=float)
    d1 = dobrushin_coefficient(q)
    per_power = []
    power = np.eye(q.shape[0])
    for _ in range(max_power):
        power = power @ q
        per_power.append(dobrushin_coefficient(power))
    if d1 >= 1.0 and per_power[-1] >= 1.0:
        raise TailUnboundedError(
            "contraction coefficient stays at 1; the summed series has no finite certificate"
        )
    if d1 < 1.0:
        step = d1
        tail_hi = per_power[-1] * d1 / (1.0 - d1)
    else:
        # blocks of max_power steps each shrink by the last computed value
        d_last = per_power[-1]
        step = d_last ** (1.0 / max_power)
        tail_hi = max_power * d_last / (1.0 - d_last)
    head = math.fsum(per_power)
    total = Interval(next_down(head), next_up(head + tail_hi + 1e-12 * head))
    return ContractionReport(
        per_power=tuple(per_power),
        coefficient_sum=total,
        one_plus_sum=1.0 + total,
        geometric_envelope=step,
    )


# ---------------------------------------------------------------------------
# coupling-time weights and renewal-type recursions


def first_disagreement_weights(variations, n: int) -> np.ndarray:
    """gamma_k for k = 1..n from the variation sequence Var_0, Var_1, ...

    gamma_k = Var_{k-1} * prod_{i <= k-2} (1 - Var_i): the chance the
    coupled pair survives k - 1 sticky steps and then splits.
    """
    vs = np.asarray(variations, dtype=float)
    if len(vs) < n:
        raise ValueError(f"need {n} variation values, got {len(vs)}")
    out = np.zeros(n + 1)
    survive = 1.0
    for k in range(1, n + 1):
        out[k] = vs[k - 1] * survive
        survive *= 1.0 - vs[k - 1]
    return out


def renewal_recursion(weights: np.ndarray, n: int) -> np.ndarray:
    """u_j = w_j + sum_{k < j} w_{j-k} u_k for j = 1..n, with u_0 = 1.

    ``weights`` is indexed from 0 with weights[0] ignored.  The same
    recursion serves the disagreement envelope built from oscillations and
    the renewal mass built from the first-disagreement weights.
    """
    w = np.zeros(n + 1)
    m = min(len(weights), n + 1)
    w[:m] = weights[:m]
    w[0] = 0.0
    u = np.zeros(n + 1)
    u[0] = 1.0
    for j in range(1, n + 1):
        u[j] = float(np.dot(w[1 : j + 1], u[j - 1 :: -1][: j]))
    return u


def disagreement_envelope(oscillations, n: int) -> np.ndarray:
    """alpha_j for j = 1..n: alpha_j = Osc_j + sum_{k<j} Osc_{j-k} alpha_k.

    ``oscillations`` is indexed from 0 with entry 0 ignored.  Index 0 of
    the returned array holds the conventional seed value 1.
    """
    return renewal_recursion(np.asarray(oscillations, dtype=float), n)


def envelope_sum_bound(margin: float) -> float:
    """Upper bound (1 - m) / m for the summed envelope when the margin or
    product m is positive."""
    if margin <= 0.0:
        return math.inf
    return (1.0 - margin) / margin
