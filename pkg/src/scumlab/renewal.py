"""Renewal-kernel analysis: inter-arrival law, existence, classification.

A binary renewal kernel is summarized by its hazard sequence q_m, the
probability of an event at gap m since the last one.  Everything here is
derived from the survival products s_t = prod_{i<t}(1 - q_i): the
inter-arrival law f_n = q_{n-1} s_{n-1}, the existence criterion
sum_t s_t < inf, the stationary marginals, and the finite Markov-chain
representation on gap states.  Tail certificates are analytic only; no
attempt is made to infer exponential moments from simulation, because the
classification is a tail property invisible to finite samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    NoStationaryMeasureError,
    TailExhaustedError,
    UncertifiedTailError,
    UndeterminedError,
)
from .families import RenewalKernel
from .intervals import Interval, enclose, next_down, next_up
from .series import GeometricTail, PowerTail

HARD_SURVIVAL_CAP = 1_000_000


def survival(kernel: RenewalKernel, n_max: int) -> np.ndarray:
    """s_t = probability the gap exceeds t, for t = 0..n_max (s_0 = 1)."""
    s = np.empty(n_max + 1)
    s[0] = 1.0
    for t in range(n_max):
        s[t + 1] = s[t] * (1.0 - kernel.hazard(t))
    return s


@dataclass(frozen=True)
class InterArrivalLaw:
    """Distances between consecutive events: masses f_1..f_{n_max}.

    ``f[0]`` is a zero placeholder so that ``f[n]`` is the mass at distance
    n.  ``kind``/``rate`` classify the tail decay analytically:
    geometric(r) when the hazard stays bounded away from zero, stretched
    exponential(alpha) for power-law hazards with exponent in (0, 1), and
    undetermined otherwise.
    """

    f: np.ndarray
    tail_mass: float
    kind: str
    rate: "float | None"

    @property
    def n_max(self) -> int:
        return len(self.f) - 1

    def normalization_gap(self) -> float:
        return abs(math.fsum(self.f) + self.tail_mass - 1.0)


def _tail_shape(kernel: RenewalKernel) -> "tuple[str, float | None]":
    """Analytic shape of the hazard beyond the explicit prefix."""
    if kernel.limit > 0.0:
        first = len(kernel.prefix)
        floor = kernel.limit
        if kernel.tail is not None:
            probe = kernel.tail.value(max(first, 1))
            floor = kernel.limit + min(0.0, probe)
        if floor <= 0.0:
            return ("unknown", None)
        return ("geometric", 1.0 - floor)
    tail = kernel.tail
    if tail is None:
        return ("none", None)
    if isinstance(tail, PowerTail) and tail.coeff > 0.0:
        return ("power", tail.exponent)
    if isinstance(tail, GeometricTail) and tail.coeff > 0.0:
        return ("vanishing", tail.ratio)
    return ("unknown", None)


def _finite_support(kernel: RenewalKernel) -> "int | None":
    """Index of the first certain hazard, if the prefix contains one."""
    for m, q in enumerate(kernel.prefix):
        if q >= 1.0:
            return m
    return None


def interarrival(kernel: RenewalKernel, n_max: int) -> InterArrivalLaw:
    """Masses f_n = q_{n-1} prod_{i<n-1}(1 - q_i) for n = 1..n_max."""
    f = np.zeros(n_max + 1)
    s = 1.0
    for n in range(1, n_max + 1):
        q = kernel.hazard(n - 1)
        f[n] = s * q
        s *= 1.0 - q
    shape, rate = _tail_shape(kernel)
    if _finite_support(kernel) is not None:
        kind, kind_rate = "geometric", 0.0
    elif shape == "geometric":
        kind, kind_rate = "geometric", rate
    elif shape == "power" and rate is not None and rate < 1.0:
        kind, kind_rate = "stretched-exponential", rate
    else:
        kind, kind_rate = "undetermined", None
    return InterArrivalLaw(f=f, tail_mass=s, kind=kind, rate=kind_rate)


@dataclass(frozen=True)
class ExistenceReport:
    """Verdict on eq-existence: is the expected inter-arrival time finite?"""

    exists: bool
    reason: str
    partial_sums: tuple

    def __bool__(self) -> bool:
        return self.exists


def renewal_exists(kernel: RenewalKernel, n_probe: int = 512) -> ExistenceReport:
    """Closed-form convergence test for sum_t prod_{i<t}(1 - q_i).

    The partial sums of the survival series are reported as evidence but
    the verdict always comes from the analytic tail shape.
    """
    s = survival(kernel, n_probe)
    partials = tuple(float(v) for v in np.cumsum(s)[:: max(1, n_probe // 8)])
    if _finite_support(kernel) is not None:
        return ExistenceReport(True, "hazard reaches 1, finite support", partials)
    shape, rate = _tail_shape(kernel)
    if shape == "geometric":
        return ExistenceReport(
            True, f"hazard floor {1.0 - rate:.6g} gives a geometric summand", partials
        )
    if shape == "power":
        if rate < 1.0:
            return ExistenceReport(
                True,
                f"stretched-exponential summand exp(-t^{1.0 - rate:.3g})",
                partials,
            )
        if rate > 1.0:
            return ExistenceReport(
                False,
                "summable hazards keep the survival product bounded below",
                partials,
            )
        raise UndeterminedError(
            "hazard ~ c/t sits on the boundary; convergence depends on c"
        )
    if shape == "vanishing":
        return ExistenceReport(
            False, "summable hazards keep the survival product bounded below", partials
        )
    if shape == "none":
        return ExistenceReport(
            False, "hazard vanishes beyond the prefix, survival stalls", partials
        )
    raise UndeterminedError("no closed-form tail for this hazard family")


@dataclass(frozen=True)
class RenewalClassification:
    """Existence plus the exponential-moment verdict for the renewal law.

    ``has_gcb`` is True only with a certified exponential tail, False only
    with a certified subexponential lower bound, and None when the analytic
    shape decides neither.
    """

    exists: bool
    has_gcb: "bool | None"
    evidence: str

    @property
    def label(self) -> str:
        if self.has_gcb is None:
            return "undetermined"
        return "true" if self.has_gcb else "false"


def gcb_classification(kernel: RenewalKernel) -> RenewalClassification:
    """Gaussian-concentration verdict from the inter-arrival tail shape."""
    report = renewal_exists(kernel)
    if not report.exists:
        return RenewalClassification(
            exists=False,
            has_gcb=None,
            evidence=f"no stationary renewal measure: {report.reason}",
        )
    if _finite_support(kernel) is not None:
        return RenewalClassification(
            exists=True,
            has_gcb=True,
            evidence="finite inter-arrival support, all exponential moments finite",
        )
    shape, rate = _tail_shape(kernel)
    if shape == "geometric":
        r_max = 1.0 / rate if rate > 0.0 else math.inf
        return RenewalClassification(
            exists=True,
            has_gcb=True,
            evidence=f"f_n dominated by {rate:.6g}^n, exponential moment up to r < {r_max:.6g}",
        )
    if shape == "power" and rate is not None and rate < 1.0:
        return RenewalClassification(
            exists=True,
            has_gcb=False,
            evidence=(
                f"f_n is stretched exponential exp(-n^{1.0 - rate:.3g}), "
                "no exponential moment"
            ),
        )
    return RenewalClassification(
        exists=True, has_gcb=None, evidence="tail shape decides neither direction"
    )


@dataclass(frozen=True)
class StationaryMarginals:
    """Certified enclosures of the stationary cylinder masses.

    ``zero_runs[m - 1]`` encloses the mass of m consecutive zeros, from the
    identity mass([0^m]) = mass([1]) * sum_{t >= m} s_t (split the run by
    the position of the previous event).
    """

    mean: Interval
    one: Interval
    zero_runs: tuple

    def zero_run(self, m: int) -> Interval:
        return self.zero_runs[m - 1]


def _certified_cut(kernel: RenewalKernel) -> "tuple[int, float]":
    """Index T and hazard floor q_lo with hazard(t) >= q_lo for all t >= T.

    Raises when the hazard has no positive floor and the support never
    closes, since then the mean tail has no analytic majorant here.
    """
    first = len(kernel.prefix)
    closed = _finite_support(kernel)
    if closed is not None:
        return (closed + 1, 1.0)
    shape, rate = _tail_shape(kernel)
    if shape == "geometric":
        return (first, 1.0 - rate)
    raise UncertifiedTailError(
        "hazard has no positive floor; the mean tail is not certified"
    )


def stationary_marginals(kernel: RenewalKernel, n_max: int) -> StationaryMarginals:
    """Enclose the event density and the zero-run masses up to length n_max."""
    report = renewal_exists(kernel)
    if not report.exists:
        raise NoStationaryMeasureError(report.reason)
    cut, q_lo = _certified_cut(kernel)
    # extend the horizon until the certified remainder s_T / q_lo is tiny
    # relative to the mean, so the enclosures stay tight
    horizon = max(n_max + 1, cut)
    s = survival(kernel, horizon)
    while s[horizon] / q_lo > 1e-13 * s.sum() and horizon < HARD_SURVIVAL_CAP:
        horizon *= 2
        s = survival(kernel, horizon)
    # each survival value is a product of up to ``horizon`` factors, so pad
    # the summed rounding error by that count of ulps
    pad = 3e-16 * (horizon + 2)
    head = s[:horizon]
    tail = Interval(0.0, next_up(s[horizon] / q_lo * (1.0 + pad)))
    mean = enclose(math.fsum(head), rel=pad) + tail
    if mean.lo < 1.0:
        mean = Interval(1.0, mean.hi)
    one = Interval(next_down(1.0 / mean.hi), next_up(1.0 / mean.lo))
    runs = []
    for m in range(1, n_max + 1):
        suffix = enclose(math.fsum(head[m:]), rel=pad) + tail
        lo = max(next_down(one.lo * suffix.lo), 0.0)
        hi = next_up(one.hi * suffix.hi)
        runs.append(Interval(lo, min(hi, 1.0)))
    return StationaryMarginals(mean=mean, one=one, zero_runs=tuple(runs))


def default_state_cap(kernel: RenewalKernel, tol: float = 1e-12) -> int:
    """Smallest gap whose survival mass drops below ``tol``."""
    s = 1.0
    for m in range(HARD_SURVIVAL_CAP):
        if s < tol:
            return m
        s *= 1.0 - kernel.hazard(m)
    raise UncertifiedTailError(
        f"survival stays above {tol} within {HARD_SURVIVAL_CAP} gaps"
    )


def renewal_markov_chain(kernel: RenewalKernel, cap: "int | None" = None) -> np.ndarray:
    """Transition matrix of the gap chain on states 0..cap.

    Q(m, 0) = f_{m+1} / sum_{i >= m+1} f_i, which collapses to the hazard
    at gap m; the rest of the row moves to m+1.  The cap state keeps its
    leftover mass on itself, the conditional approximation of every longer
    gap, and is exact whenever the hazard is constant beyond the cap.
    """
    m_cap = default_state_cap(kernel) if cap is None else int(cap)
    if m_cap < 0:
        raise ValueError("state cap must be nonnegative")
    s = survival(kernel, m_cap)
    if np.any(s[:m_cap] <= 0.0):
        exhausted = int(np.argmax(s[:m_cap] <= 0.0))
        raise TailExhaustedError(
            f"inter-arrival support ends at gap {exhausted}; lower the cap"
        )
    q = np.zeros((m_cap + 1, m_cap + 1))
    for m in range(m_cap):
        hz = kernel.hazard(m)
        q[m, 0] = hz
        q[m, m + 1] = 1.0 - hz
    hz = kernel.hazard(m_cap)
    q[m_cap, 0] = hz
    q[m_cap, m_cap] = 1.0 - hz
    return q
