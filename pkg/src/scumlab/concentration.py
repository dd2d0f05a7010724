"""Monte Carlo verification of the Gaussian concentration bounds.

Each check samples paths from a fixed past, evaluates an observable, and
compares an empirical quantity against its certified bound.  The exact mean
in the theorems is unavailable, so every check splits the sample: one half
estimates the mean, the other half measures the moment or tail, and the
mean's confidence halfwidth is folded into the verdict so a pass never
relies on the estimate being exact.

Verdicts are one-sided refutation tests: a check fails only when the
confidence floor of the empirical quantity clears the (slack-adjusted)
bound, which signals an implementation bug, not bad luck.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GuardError, ReferenceUncertainError, VarianceBlowupError
from .kernels import Kernel, PastSpec, sample_paths
from .observables import Observable, birkhoff_sum, block_counts
from .regularity import (
    ConcentrationConstants,
    RegularityProfile,
    concentration_constants,
    disagreement_envelope,
    envelope_sum_bound,
    first_disagreement_weights,
    renewal_recursion,
)
from .stats import Z99, mean_interval, wilson_interval

THETA_RANGE_GUARD = 20.0
_BLOWUP_RATIO = 0.5


@dataclass(frozen=True)
class BoundCheck:
    """Empirical estimates against a theoretical bound over a parameter grid."""

    kind: str
    parameter: np.ndarray
    estimate: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    bound: np.ndarray
    margin: np.ndarray
    verdict: np.ndarray

    @property
    def passed(self) -> bool:
        return bool(np.all(self.verdict))

    def rows(self):
        for i in range(len(self.parameter)):
            yield {
                "parameter": float(self.parameter[i]),
                "estimate": float(self.estimate[i]),
                "ci_lo": float(self.ci_lo[i]),
                "ci_hi": float(self.ci_hi[i]),
                "bound": float(self.bound[i]),
                "margin": float(self.margin[i]),
                "verdict": "pass" if self.verdict[i] else "FAIL",
            }


def _split_mean(values: np.ndarray, z: float):
    """Mean estimate from the first half, remaining values for the check."""
    half = len(values) // 2
    if half < 2:
        raise ValueError("need at least four samples to split")
    m_hat, h_m = mean_interval(values[:half], z)
    return m_hat, h_m, values[half:]


def mgf_check(
    kernel: Kernel,
    past: PastSpec,
    obs: Observable,
    thetas,
    n_runs: int,
    rng: np.random.Generator,
    constants: "ConcentrationConstants | None" = None,
    z: float = Z99,
) -> BoundCheck:
    """Moment bound: E exp(theta (f - Ef)) <= exp(theta^2 factor ||delta||^2).

    The centering uses an independent-half mean, so the bound is relaxed by
    exp(|theta| h) with h that half's confidence halfwidth.
    """
    if constants is None:
        constants = concentration_constants(kernel)
    paths = sample_paths(kernel, past, obs.window, n_runs, rng)
    return mgf_check_values(obs(paths), obs, thetas, constants, z=z)


def mgf_check_values(
    values: np.ndarray,
    obs: Observable,
    thetas,
    constants: ConcentrationConstants,
    z: float = Z99,
) -> BoundCheck:
    """The moment-bound verdict from already-evaluated observable values."""
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    worst = float(np.abs(thetas).max()) * obs.range_bound
    if worst > THETA_RANGE_GUARD:
        raise GuardError(
            f"theta*range = {worst:.2f} exceeds {THETA_RANGE_GUARD}; the "
            "empirical moment would be variance-dominated"
        )
    m_hat, h_m, check_half = _split_mean(values, z)

    estimates = np.empty(len(thetas))
    lows = np.empty(len(thetas))
    highs = np.empty(len(thetas))
    bounds = np.empty(len(thetas))
    for i, theta in enumerate(thetas):
        y = np.exp(theta * (check_half - m_hat))
        est, half = mean_interval(y, z)
        if est > 0 and half > _BLOWUP_RATIO * est:
            raise VarianceBlowupError(
                f"CI halfwidth {half:.3g} exceeds half the estimate {est:.3g} "
                f"at theta={theta}"
            )
        estimates[i] = est
        lows[i] = est - half
        highs[i] = est + half
        bounds[i] = math.exp(
            theta * theta * constants.mgf_factor * obs.norm2_sq
            + abs(theta) * h_m
        )
    margin = bounds - estimates
    verdict = lows <= bounds
    return BoundCheck(
        kind="gcb-mgf",
        parameter=thetas,
        estimate=estimates,
        ci_lo=lows,
        ci_hi=highs,
        bound=bounds,
        margin=margin,
        verdict=verdict,
    )


def deviation_check(
    kernel: Kernel,
    past: PastSpec,
    obs: Observable,
    us,
    n_runs: int,
    rng: np.random.Generator,
    constants: "ConcentrationConstants | None" = None,
    z: float = Z99,
) -> BoundCheck:
    """Tail bound: P(|f - Ef| > u) <= 2 exp(-rate u^2 / ||delta||^2)."""
    if constants is None:
        constants = concentration_constants(kernel)
    paths = sample_paths(kernel, past, obs.window, n_runs, rng)
    return deviation_check_values(obs(paths), obs, us, constants, z=z)


def deviation_check_values(
    values: np.ndarray,
    obs: Observable,
    us,
    constants: ConcentrationConstants,
    z: float = Z99,
) -> BoundCheck:
    """The tail-bound verdict from already-evaluated observable values."""
    us = np.atleast_1d(np.asarray(us, dtype=float))
    if np.any(us <= 0):
        raise ValueError("deviation levels must be positive")
    m_hat, h_m, check_half = _split_mean(values, z)
    n_check = len(check_half)

    estimates = np.empty(len(us))
    lows = np.empty(len(us))
    highs = np.empty(len(us))
    bounds = np.empty(len(us))
    rate = constants.deviation_rate / obs.norm2_sq
    for i, u in enumerate(us):
        count = int((np.abs(check_half - m_hat) > u).sum())
        estimates[i] = count / n_check
        lows[i], highs[i] = wilson_interval(count, n_check, z)
        # an observed |f - m_hat| > u only certifies |f - Ef| > u - h_m
        u_eff = max(u - h_m, 0.0)
        bounds[i] = min(2.0 * math.exp(-rate * u_eff * u_eff), 1.0)
    margin = bounds - estimates
    verdict = lows <= bounds
    return BoundCheck(
        kind="gcb-deviation",
        parameter=us,
        estimate=estimates,
        ci_lo=lows,
        ci_hi=highs,
        bound=bounds,
        margin=margin,
        verdict=verdict,
    )


def birkhoff_check(
    kernel: Kernel,
    past: PastSpec,
    local: Observable,
    n_terms: int,
    us,
    n_runs: int,
    rng: np.random.Generator,
    constants: "ConcentrationConstants | None" = None,
    z: float = Z99,
) -> BoundCheck:
    """Time-average tail: P(|S_n phi / n - E phi| > u) under the 1-norm bound.

    The exponent is -2 n u^2 C^2 / ||delta(phi)||_1^2, the form the
    two-norm bound on delta(S_n phi) actually yields.
    """
    if constants is None:
        constants = concentration_constants(kernel)
    total = birkhoff_sum(local, n_terms)
    paths = sample_paths(kernel, past, total.window, n_runs, rng)
    averages = total(paths) / n_terms
    return birkhoff_check_values(averages, local, n_terms, us, constants, z=z)


def birkhoff_check_values(
    averages: np.ndarray,
    local: Observable,
    n_terms: int,
    us,
    constants: ConcentrationConstants,
    z: float = Z99,
) -> BoundCheck:
    """The time-average verdict from already-computed per-run averages."""
    us = np.atleast_1d(np.asarray(us, dtype=float))
    m_hat, h_m, check_half = _split_mean(averages, z)
    n_check = len(check_half)

    coeff = constants.coefficient
    rate = 2.0 * n_terms * coeff * coeff / (local.norm1**2)
    estimates = np.empty(len(us))
    lows = np.empty(len(us))
    highs = np.empty(len(us))
    bounds = np.empty(len(us))
    for i, u in enumerate(us):
        count = int((np.abs(check_half - m_hat) > u).sum())
        estimates[i] = count / n_check
        lows[i], highs[i] = wilson_interval(count, n_check, z)
        u_eff = max(u - h_m, 0.0)
        bounds[i] = min(2.0 * math.exp(-rate * u_eff * u_eff), 1.0)
    margin = bounds - estimates
    verdict = lows <= bounds
    return BoundCheck(
        kind="birkhoff",
        parameter=us,
        estimate=estimates,
        ci_lo=lows,
        ci_hi=highs,
        bound=bounds,
        margin=margin,
        verdict=verdict,
    )


def burn_in_length(prof: RegularityProfile, n_max: int = 4096, tol: float = 1e-3) -> int:
    """Steps until the coupling disagreement tail provably drops below tol.

    Uses whichever recursion the profile certifies; the tail beyond m is
    bounded by the closed-form total minus the partial sum.
    """
    best = None
    margin = prof.osc_margin.lo
    if margin > 0:
        osc = prof.oscillation.certified_upper(n_max)
        seq = disagreement_envelope(osc, n_max)[1:]
        total = envelope_sum_bound(margin)
        best = _first_below(seq, total, tol)
    product = prof.var_product.lo
    if product > 0:
        var = prof.variation.certified_upper(n_max - 1)
        gamma = first_disagreement_weights(var, n_max)
        seq = renewal_recursion(gamma, n_max)[1:]
        total = envelope_sum_bound(product)
        cand = _first_below(seq, total, tol)
        if best is None or (cand is not None and cand < best):
            best = cand
    if best is None:
        raise GuardError(
            f"no certified burn-in below tolerance {tol} within {n_max} steps"
        )
    return best


def _first_below(seq: np.ndarray, total: float, tol: float) -> "int | None":
    if not math.isfinite(total):
        return None
    partial = np.cumsum(seq)
    tails = total - partial
    hits = np.flatnonzero(tails < tol)
    if len(hits) == 0:
        return None
    return int(hits[0]) + 1


def dkw_check(
    kernel: Kernel,
    k: int,
    n: int,
    us,
    n_paths: int,
    rng: np.random.Generator,
    reference: np.ndarray,
    prof: RegularityProfile,
    past: "PastSpec | None" = None,
    reference_budget: float = 0.0,
    burn_in: "int | None" = None,
    z: float = Z99,
) -> BoundCheck:
    """Uniform block-frequency bound over all length-k patterns.

    Tests P(sup_pattern |freq - reference| > (u + sqrt(2k)) / sqrt((n-k+2) G))
    <= exp(-G u^2) with G the certified floor of the variation product.
    ``reference`` lists the stationary pattern masses by code; approximate
    references must declare their worst-case error as ``reference_budget``.
    The chain is warmed up for ``burn_in`` steps (derived from the coupling
    tail when not given) to approximate a stationary start.
    """
    gamma_lo = prof.var_product.lo
    if gamma_lo <= 0:
        raise GuardError("the variation product is not certified positive")
    if past is None:
        past = PastSpec.constant(kernel.alphabet[0])
    if burn_in is None:
        burn_in = burn_in_length(prof)
    sup_dev = dkw_deviations(kernel, k, n, n_paths, rng, reference, past, burn_in)
    return dkw_check_devs(
        sup_dev, us, k, n, gamma_lo, reference_budget=reference_budget, z=z
    )


def dkw_deviations(
    kernel: Kernel,
    k: int,
    n: int,
    n_paths: int,
    rng: np.random.Generator,
    reference: np.ndarray,
    past: PastSpec,
    burn_in: int,
) -> np.ndarray:
    """Per-path sup over length-k patterns of |empirical freq - reference|."""
    n_sym = len(kernel.alphabet)
    ref = np.asarray(reference, dtype=float).reshape(-1)
    if len(ref) != n_sym**k:
        raise ValueError(f"reference must list all {n_sym**k} pattern masses")
    paths = sample_paths(kernel, past, burn_in + n + 1, n_paths, rng)
    window = paths[:, burn_in:]
    counts = block_counts(window, k, n_sym)
    return np.abs(counts / (n - k + 2) - ref).max(axis=1)


def dkw_check_devs(
    sup_dev: np.ndarray,
    us,
    k: int,
    n: int,
    gamma_lo: float,
    reference_budget: float = 0.0,
    z: float = Z99,
) -> BoundCheck:
    """The uniform-deviation verdict from already-computed per-path sups."""
    us = np.atleast_1d(np.asarray(us, dtype=float))
    if np.any(us <= 0):
        raise ValueError("deviation levels must be positive")
    n_paths = len(sup_dev)
    estimates = np.empty(len(us))
    lows = np.empty(len(us))
    highs = np.empty(len(us))
    bounds = np.empty(len(us))
    for i, u in enumerate(us):
        threshold = (u + math.sqrt(2.0 * k)) / math.sqrt((n - k + 2) * gamma_lo)
        if reference_budget > threshold / 10.0:
            raise ReferenceUncertainError(
                f"reference error {reference_budget:.3g} exceeds a tenth of "
                f"the threshold {threshold:.3g} at u={u}"
            )
        count = int((sup_dev > threshold + reference_budget).sum())
        estimates[i] = count / n_paths
        lows[i], highs[i] = wilson_interval(count, n_paths, z)
        bounds[i] = min(math.exp(-gamma_lo * u * u), 1.0)
    margin = bounds - estimates
    verdict = lows <= bounds
    return BoundCheck(
        kind="dkw",
        parameter=us,
        estimate=estimates,
        ci_lo=lows,
        ci_hi=highs,
        bound=bounds,
        margin=margin,
        verdict=verdict,
    )
