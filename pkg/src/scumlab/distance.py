"""Process-distance bounds between chains sharing a finite alphabet.

The d-bar distance between two stationary laws is an infimum over couplings
of the per-coordinate disagreement probability, so it can be bounded from
above by any explicit construction and from below only family by family.
This module evaluates the certified upper routes (a relative-entropy rate
and a sup of one-step L1 differences, both divided by the contraction
coefficient of the reference kernel), the specialized bound for order-k
approximations, the family lower bound for window-vote kernels, and an
empirical disagreement witness driven by the stepwise maximal coupling.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .coupling import coupled_paths
from .errors import IntractableError, NotApplicableError, ZeroKernelValueError
from .intervals import Interval
from .kernels import History, Kernel, PastSpec, logprob_along, sample_paths
from .regularity import (
    ENUMERATION_BUDGET,
    RegularityProfile,
    gcb_constants,
    profile,
)
from .stats import Z99, mean_interval


@dataclass(frozen=True)
class PathEstimate:
    """Monte Carlo estimate with a symmetric confidence halfwidth."""

    value: float
    halfwidth: float
    n_runs: int
    n_steps: int
    burn_in: int

    @property
    def lo(self) -> float:
        return self.value - self.halfwidth

    @property
    def hi(self) -> float:
        return self.value + self.halfwidth


@dataclass(frozen=True)
class DbarBound:
    """One upper-bound route: plug-in value plus its conservative end.

    ``certified`` uses the pessimistic ends of every input (upper CI end of
    the estimate, lower interval ends of the contraction coefficient and of
    inf g), so it holds at the stated confidence whenever ``is_certified``.
    """

    value: float
    certified: float
    route: str
    is_certified: bool = True


@dataclass(frozen=True)
class SupDifference:
    """Enclosure of sup over pasts of the one-step L1 kernel difference.

    ``enumerated`` is the max over the enumerated contexts, a lower bound
    for the sup; adding twice each kernel's variation at the enumeration
    depth upgrades it to the certified upper end, because every past agrees
    with some enumerated one on its last ``depth`` coordinates.
    """

    enumerated: float
    certified_hi: float
    depth: int

    @property
    def interval(self) -> Interval:
        return Interval(self.enumerated, self.certified_hi)


def _coefficient(prof: RegularityProfile) -> float:
    return gcb_constants(prof.osc_margin, prof.var_product).coefficient


def _require_finite(*kernels: Kernel) -> None:
    for k in kernels:
        if not k.is_finite:
            raise NotApplicableError(
                "distance bounds require a finite alphabet (strong non-nullness)"
            )
    if len({k.alphabet for k in kernels}) > 1:
        raise ValueError("kernels must share an alphabet")


def kl_rate(
    kernel_h: Kernel,
    kernel_g: Kernel,
    past: PastSpec,
    n_steps: int,
    n_runs: int,
    rng: np.random.Generator,
    *,
    burn_in: int = 0,
    z: float = Z99,
) -> PathEstimate:
    """Per-symbol relative entropy rate E[log(h/g)] along paths drawn from h.

    Each path contributes its own per-step average after ``burn_in``; the
    confidence interval comes from the spread of those path averages.
    """
    means = kl_path_means(kernel_h, kernel_g, past, n_steps, n_runs, rng, burn_in)
    return kl_rate_from_means(means, n_steps, burn_in, z=z)


def kl_path_means(
    kernel_h: Kernel,
    kernel_g: Kernel,
    past: PastSpec,
    n_steps: int,
    n_runs: int,
    rng: np.random.Generator,
    burn_in: int = 0,
) -> np.ndarray:
    """Per-path averages of log(h/g) along paths drawn from h."""
    _require_finite(kernel_h, kernel_g)
    paths = sample_paths(kernel_h, past, burn_in + n_steps, n_runs, rng)
    with np.errstate(divide="ignore"):
        log_h = logprob_along(kernel_h, past, paths)
        log_g = logprob_along(kernel_g, past, paths)
    if not np.all(np.isfinite(log_g)):
        raise ZeroKernelValueError(
            "reference kernel assigns zero mass to a symbol the sampler emitted"
        )
    return (log_h - log_g)[:, burn_in:].mean(axis=1)


def kl_rate_from_means(
    means: np.ndarray, n_steps: int, burn_in: int = 0, z: float = Z99
) -> PathEstimate:
    """Fold already-computed per-path averages into a rate estimate."""
    means = np.asarray(means, dtype=float)
    value, halfwidth = mean_interval(means, z)
    return PathEstimate(value, halfwidth, len(means), n_steps, burn_in)


def dbar_upper_kl(rate: PathEstimate, coefficient: float) -> DbarBound:
    """Entropy-route bound sqrt(rate) / (C sqrt(2)), CI pushed through the root."""
    if coefficient <= 0.0:
        raise NotApplicableError("contraction coefficient is not certified positive")
    scale = 1.0 / (coefficient * math.sqrt(2.0))
    return DbarBound(
        value=scale * math.sqrt(max(rate.value, 0.0)),
        certified=scale * math.sqrt(max(rate.hi, 0.0)),
        route="entropy-rate",
    )


def sup_difference(kernel_h: Kernel, kernel_g: Kernel, depth: int) -> SupDifference:
    """Enclose sup over pasts of sum_a |h(a|x) - g(a|x)|.

    Contexts are every explicit window of ``depth`` symbols combined with
    every constant fill, so the enumeration costs |A|^(depth+1) kernel
    evaluations per kernel.
    """
    _require_finite(kernel_h, kernel_g)
    alphabet = kernel_h.alphabet
    count = len(alphabet) ** (depth + 1)
    if count > ENUMERATION_BUDGET:
        raise IntractableError(
            f"{count} contexts exceed the enumeration budget {ENUMERATION_BUDGET}"
        )
    best = 0.0
    for fill in alphabet:
        for word in itertools.product(alphabet, repeat=depth):
            history = History(PastSpec(explicit=word, fill=(fill,)))
            dh = kernel_h.conditional(history)
            dg = kernel_g.conditional(history)
            l1 = math.fsum(abs(dh.prob_of(a) - dg.prob_of(a)) for a in alphabet)
            best = max(best, l1)
    tail_h = kernel_h.variation_bounds(depth).value(depth).hi
    tail_g = kernel_g.variation_bounds(depth).value(depth).hi
    slack = 2.0 * min(max(tail_h, 0.0), 1.0) + 2.0 * min(max(tail_g, 0.0), 1.0)
    return SupDifference(
        enumerated=best,
        certified_hi=min(best + slack, 2.0),
        depth=depth,
    )


def dbar_upper_sup(
    kernel_h: Kernel,
    kernel_g: Kernel,
    depth: int,
    *,
    prof_g: "RegularityProfile | None" = None,
    max_lag: int = 64,
) -> DbarBound:
    """Sup-difference route: sup_x sum_a |h - g| over (C sqrt(2 inf g)).

    The contraction coefficient and the infimum both belong to the
    reference kernel ``kernel_g``.  ``depth`` should reach the memory of
    whichever kernel is an approximation, or the slack term dominates.
    """
    prof = prof_g if prof_g is not None else profile(kernel_g, max_lag=max(max_lag, depth))
    coefficient = _coefficient(prof)
    inf_lo = prof.infimum.lo
    if inf_lo <= 0.0:
        raise NotApplicableError("inf g is not certified positive")
    sup = sup_difference(kernel_h, kernel_g, depth)
    scale = 1.0 / (coefficient * math.sqrt(2.0 * inf_lo))
    return DbarBound(
        value=scale * sup.enumerated,
        certified=scale * sup.certified_hi,
        route="sup-difference",
    )


@dataclass(frozen=True)
class ApproximationBound:
    """Certified d-bar bounds between a chain and its order-k approximation.

    ``corollary`` is |A| var_k / (2 sqrt(2) C sqrt(inf g)) with the
    single-symbol variation var_k replaced by its certified upper bound
    Var_k (a one-symbol difference never exceeds the total variation over
    the whole alphabet).  ``sup_route`` applies the generic sup-difference
    bound to the same pair, where the sup is at most 2 Var_k because the
    approximation agrees with the kernel on every window of length k.
    """

    k: int
    corollary: float
    sup_route: float
    variation_hi: float


def markov_approx_bound(
    kernel: Kernel, k: int, *, max_lag: int = 64
) -> ApproximationBound:
    """Bound d-bar between the chain and its order-k Markov approximation."""
    _require_finite(kernel)
    prof = profile(kernel, max_lag=max(max_lag, k))
    coefficient = _coefficient(prof)
    inf_lo = prof.infimum.lo
    if inf_lo <= 0.0:
        raise NotApplicableError("inf g is not certified positive")
    var_hi = min(max(prof.variation.value(k).hi, 0.0), 1.0)
    n_symbols = len(kernel.alphabet)
    corollary = n_symbols * var_hi / (2.0 * math.sqrt(2.0) * coefficient * math.sqrt(inf_lo))
    sup_route = 2.0 * var_hi / (coefficient * math.sqrt(2.0 * inf_lo))
    return ApproximationBound(
        k=k, corollary=corollary, sup_route=sup_route, variation_hi=var_hi
    )


def bkf_lower_bound(eps: float, lambdas, k: int) -> float:
    """Exact lower bound eps * sum_{j > k} lambda_j for the window-vote family.

    Valid for d-bar between the full kernel and its truncation keeping the
    first k windows, whatever the window lengths are.
    """
    if not 0.0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    weights = [float(w) for w in lambdas]
    if k >= len(weights):
        return 0.0
    return eps * math.fsum(weights[k:])


def dbar_empirical_witness(
    kernel_h: Kernel,
    kernel_g: Kernel,
    past: PastSpec,
    burn_in: int,
    n_steps: int,
    n_runs: int,
    rng: np.random.Generator,
    *,
    z: float = Z99,
) -> PathEstimate:
    """Disagreement density of one explicit coupling, an upper-bound witness.

    Runs the bivariate chain whose steps draw from the maximal coupling of
    the two conditional laws and averages the disagreement indicator over
    the window after ``burn_in``.  The d-bar infimum runs over stationary
    couplings, so the unquantified burn-in bias keeps this an empirical
    witness rather than a certified bound.
    """
    _require_finite(kernel_h, kernel_g)
    ensemble = coupled_paths(
        kernel_h,
        kernel_g,
        past,
        past,
        burn_in + n_steps,
        n_runs,
        rng,
        window_start=burn_in,
    )
    return witness_from_counts(ensemble.window_counts, n_steps, burn_in, z=z)


def witness_from_counts(
    window_counts: np.ndarray, n_steps: int, burn_in: int, z: float = Z99
) -> PathEstimate:
    """Fold per-run disagreement counts into a witness density estimate."""
    density = np.asarray(window_counts, dtype=float) / n_steps
    value, halfwidth = mean_interval(density, z)
    return PathEstimate(value, halfwidth, len(density), n_steps, burn_in)


@dataclass(frozen=True)
class DbarReport:
    """All routes evaluated for one approximation level, one CSV row."""

    k: int
    lower_bound: float
    witness: float
    witness_ci: float
    bound_kl: float
    bound_sup: float
    bound_corollary: float

    COLUMNS = (
        "k",
        "lower_bound",
        "witness",
        "witness_ci",
        "bound_kl",
        "bound_sup",
        "bound_corollary",
    )

    def row(self) -> dict:
        return {name: getattr(self, name) for name in self.COLUMNS}

    def ordered(self) -> bool:
        """Sandwich check: lower <= witness + CI and witness - CI <= uppers."""
        upper = min(self.bound_sup, self.bound_corollary)
        return (
            self.lower_bound <= self.witness + self.witness_ci + 1e-12
            and self.witness - self.witness_ci <= upper + 1e-12
        )


def dbar_report(
    kernel: Kernel,
    approximation: Kernel,
    k: int,
    past: PastSpec,
    *,
    burn_in: int,
    n_steps: int,
    n_runs: int,
    rng: np.random.Generator,
    depth: "int | None" = None,
    lower_bound: float = 0.0,
    z: float = Z99,
) -> DbarReport:
    """Evaluate every route for one (kernel, approximation) pair.

    The entropy and sup routes treat ``kernel`` as the reference g and the
    approximation as h, matching the direction of the corollary.
    """
    witness = dbar_empirical_witness(
        approximation, kernel, past, burn_in, n_steps, n_runs, rng, z=z
    )
    rate = kl_rate(
        approximation, kernel, past, n_steps, n_runs, rng, burn_in=burn_in, z=z
    )
    enum_depth = depth if depth is not None else k
    prof = profile(kernel, max_lag=max(64, enum_depth, k))
    bound_kl = dbar_upper_kl(rate, _coefficient(prof))
    bound_sup = dbar_upper_sup(approximation, kernel, enum_depth, prof_g=prof)
    approx = markov_approx_bound(kernel, k)
    return DbarReport(
        k=k,
        lower_bound=lower_bound,
        witness=witness.value,
        witness_ci=witness.halfwidth,
        bound_kl=bound_kl.certified,
        bound_sup=bound_sup.certified,
        bound_corollary=approx.corollary,
    )
