"""One-step maximal coupling and coupled-path disagreement measurement.

The joint law of a pair of conditional distributions is built from their
tail functions: F(s, t) = min(G(s), H(t)) on the ordered support, recovered
cell by cell through inclusion-exclusion.  Its diagonal equals the pointwise
minimum of the two laws, so a single step disagrees with probability exactly
the total-variation distance, which no coupling can beat.

Coupled chains evolve two histories at once, drawing each step jointly from
the maximal coupling of the two conditional laws and spending one uniform
variate per run per step.  Disagreement counts per lag feed the comparison
against the recursion bounds from :mod:`scumlab.regularity`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NegativeEntryError, RefutationError, TruncationHit
from .kernels import ConditionalDistribution, History, Kernel, PastSpec
from .regularity import (
    RegularityProfile,
    disagreement_envelope,
    envelope_sum_bound,
    first_disagreement_weights,
    renewal_recursion,
)
from .stats import Z99, wilson_interval

_NEG_TOL = 1e-10


@dataclass(frozen=True)
class JointStep:
    """Maximal coupling of two conditional laws over their joint support.

    ``matrix[i, j]`` is the probability of emitting ``symbols[i]`` on the
    left and ``symbols[j]`` on the right.  When either input carries
    truncated mass, one extra terminal row and column represent the cut-off
    tail (the support enumeration is increasing, so the lost mass sits past
    the largest listed symbol, where the comonotone construction puts it).
    """

    symbols: tuple
    matrix: np.ndarray
    left: ConditionalDistribution
    right: ConditionalDistribution
    has_overflow: bool

    def total(self) -> float:
        return float(self.matrix.sum())

    def diagonal(self) -> np.ndarray:
        return np.diagonal(self.matrix)

    def off_diagonal_mass(self) -> float:
        return self.total() - float(self.diagonal().sum())

    def prob(self, left_symbol: int, right_symbol: int) -> float:
        i = self.symbols.index(int(left_symbol))
        j = self.symbols.index(int(right_symbol))
        return float(self.matrix[i, j])


def _tail_function(probs: np.ndarray, truncation: float) -> np.ndarray:
    """G[i] = mass at or beyond support index i, with the cut tail last."""
    cells = np.concatenate([probs, [truncation, 0.0]])
    return np.flip(np.cumsum(np.flip(cells)))


def maximal_coupling_step(
    left: ConditionalDistribution, right: ConditionalDistribution
) -> JointStep:
    """The comonotone-tail maximal coupling of two laws on one alphabet."""
    symbols = sorted(set(left.symbols) | set(right.symbols))
    pl = np.array([left.prob_of(s) for s in symbols])
    pr = np.array([right.prob_of(s) for s in symbols])
    has_overflow = left.truncation_mass > 0.0 or right.truncation_mass > 0.0
    gl = _tail_function(pl, left.truncation_mass)
    gr = _tail_function(pr, right.truncation_mass)
    f = np.minimum.outer(gl, gr)
    matrix = f[:-1, :-1] - f[1:, :-1] - f[:-1, 1:] + f[1:, 1:]
    if matrix.min() < -_NEG_TOL:
        raise NegativeEntryError(
            f"coupling cell at {matrix.min():.3e}; inputs are not distributions"
        )
    matrix = np.clip(matrix, 0.0, None)
    if not has_overflow:
        matrix = matrix[:-1, :-1]
    return JointStep(tuple(symbols), matrix, left, right, has_overflow)


def _joint_batch(pl: np.ndarray, pr: np.ndarray) -> np.ndarray:
    """Maximal-coupling matrices for a batch of distribution pairs.

    ``pl`` and ``pr`` are (runs, alphabet) arrays of matching rows; the
    result is (runs, alphabet, alphabet).  No overflow handling: callers
    must pass complete distributions.
    """
    n, a = pl.shape
    zeros = np.zeros((n, 1))
    gl = np.concatenate([np.flip(np.cumsum(np.flip(pl, 1), 1), 1), zeros], axis=1)
    gr = np.concatenate([np.flip(np.cumsum(np.flip(pr, 1), 1), 1), zeros], axis=1)
    f = np.minimum(gl[:, :, None], gr[:, None, :])
    joint = f[:, :-1, :-1] - f[:, 1:, :-1] - f[:, :-1, 1:] + f[:, 1:, 1:]
    if joint.min() < -_NEG_TOL:
        raise NegativeEntryError("batched coupling produced a negative cell")
    np.clip(joint, 0.0, None, out=joint)
    return joint


@dataclass(frozen=True)
class CoupledRun:
    """One coupled trajectory pair started from a shared past."""

    path_left: np.ndarray
    path_right: np.ndarray
    first: tuple
    past: PastSpec

    @property
    def disagreement(self) -> np.ndarray:
        return (self.path_left != self.path_right).astype(np.uint8)


@dataclass(frozen=True)
class CoupledEnsemble:
    """Aggregated disagreement counts from many coupled runs.

    ``lag_counts[t]`` is the number of runs whose paths differ at step t
    (0-based; the step right after the initial pair is lag 1).
    ``window_counts[r]`` accumulates run r's disagreements from
    ``window_start`` on, for time-average estimates.
    """

    n_runs: int
    n_steps: int
    lag_counts: np.ndarray
    window_counts: np.ndarray
    window_start: int
    paths: "tuple | None" = None


def coupled_paths(
    kernel_left: Kernel,
    kernel_right: Kernel,
    past_left: PastSpec,
    past_right: PastSpec,
    n_steps: int,
    n_runs: int,
    rng: np.random.Generator,
    *,
    window_start: int = 0,
    keep_paths: bool = False,
    memory_guard: "int | None" = None,
    initial_age: int = 0,
) -> CoupledEnsemble:
    """Run the bivariate chain that draws each step from the maximal coupling.

    ``memory_guard`` enables the structural check for a shared kernel with
    finite memory m: whenever the two histories agree on their last m
    coordinates the conditional laws must coincide, so the step cannot
    split.  ``initial_age`` seeds the count of most recent agreeing
    coordinates (pass m when the full starting histories are identical).
    """
    if n_steps < 1 or n_runs < 1:
        raise ValueError("need at least one step and one run")
    finite = (
        kernel_left.is_finite
        and kernel_right.is_finite
        and kernel_left.alphabet == kernel_right.alphabet
    )
    lag_counts = np.zeros(n_steps, dtype=np.int64)
    window_counts = np.zeros(n_runs, dtype=np.int64)
    paths = None
    if keep_paths:
        paths = (
            np.empty((n_runs, n_steps), dtype=np.int64),
            np.empty((n_runs, n_steps), dtype=np.int64),
        )
    if finite:
        alpha = np.asarray(kernel_left.alphabet, dtype=np.int64)
        n_sym = len(alpha)
        state_l = kernel_left.sim_init(past_left, n_runs)
        state_r = kernel_right.sim_init(past_right, n_runs)
        age = np.full(n_runs, initial_age, dtype=np.int64)
        for t in range(n_steps):
            pl = kernel_left.sim_probs(state_l)
            pr = kernel_right.sim_probs(state_r)
            if memory_guard is not None:
                settled = age >= memory_guard
                if np.any(settled) and not np.array_equal(pl[settled], pr[settled]):
                    raise RuntimeError(
                        "conditional laws differ although the histories agree "
                        "within the kernel memory; the coupling state is corrupted"
                    )
            joint = _joint_batch(pl, pr).reshape(n_runs, n_sym * n_sym)
            cum = np.cumsum(joint, axis=1)
            u = rng.random(n_runs)
            idx = (cum < u[:, None] * cum[:, -1:]).sum(axis=1)
            il, ir = np.divmod(idx, n_sym)
            syms_l = alpha[il]
            syms_r = alpha[ir]
            disagree = syms_l != syms_r
            if memory_guard is not None:
                age = np.where(disagree, 0, np.minimum(age + 1, memory_guard))
            lag_counts[t] = int(disagree.sum())
            if t >= window_start:
                window_counts += disagree
            if keep_paths:
                paths[0][:, t] = syms_l
                paths[1][:, t] = syms_r
            kernel_left.sim_advance(state_l, syms_l)
            kernel_right.sim_advance(state_r, syms_r)
    else:
        hist_l = [History(past_left) for _ in range(n_runs)]
        hist_r = [History(past_right) for _ in range(n_runs)]
        for t in range(n_steps):
            u = rng.random(n_runs)
            for r in range(n_runs):
                step = maximal_coupling_step(
                    kernel_left.conditional(hist_l[r]),
                    kernel_right.conditional(hist_r[r]),
                )
                flat = step.matrix.ravel()
                cum = np.cumsum(flat)
                idx = int((cum < u[r] * cum[-1]).sum())
                width = step.matrix.shape[1]
                il, ir = divmod(idx, width)
                if step.has_overflow and (
                    il >= len(step.symbols) or ir >= len(step.symbols)
                ):
                    raise TruncationHit(
                        "coupled draw landed in the truncated tail; rerun with "
                        "a finer truncation"
                    )
                sym_l, sym_r = step.symbols[il], step.symbols[ir]
                disagree = sym_l != sym_r
                lag_counts[t] += disagree
                if t >= window_start:
                    window_counts[r] += disagree
                if keep_paths:
                    paths[0][r, t] = sym_l
                    paths[1][r, t] = sym_r
                hist_l[r] = hist_l[r].extended(sym_l)
                hist_r[r] = hist_r[r].extended(sym_r)
    return CoupledEnsemble(
        n_runs=n_runs,
        n_steps=n_steps,
        lag_counts=lag_counts,
        window_counts=window_counts,
        window_start=window_start,
        paths=paths,
    )


def sample_coupled_paths(
    kernel: Kernel,
    past: PastSpec,
    a: int,
    b: int,
    n_steps: int,
    rng: np.random.Generator,
    n_runs: int = 1,
    *,
    keep_paths: bool = True,
    window_start: int = 0,
) -> CoupledEnsemble:
    """Couple two copies of one kernel whose pasts differ only in (a, b)."""
    guard = kernel.memory_length
    initial_age = (guard or 0) if a == b else 0
    return coupled_paths(
        kernel,
        kernel,
        past.shifted(a),
        past.shifted(b),
        n_steps,
        n_runs,
        rng,
        window_start=window_start,
        keep_paths=keep_paths,
        memory_guard=guard,
        initial_age=initial_age,
    )


def single_coupled_run(
    kernel: Kernel,
    past: PastSpec,
    a: int,
    b: int,
    n_steps: int,
    rng: np.random.Generator,
) -> CoupledRun:
    """Convenience wrapper returning one trajectory pair with full paths."""
    ensemble = sample_coupled_paths(kernel, past, a, b, n_steps, rng, n_runs=1)
    return CoupledRun(
        path_left=ensemble.paths[0][0],
        path_right=ensemble.paths[1][0],
        first=(int(a), int(b)),
        past=past,
    )


@dataclass(frozen=True)
class DisagreementStats:
    """Per-lag disagreement estimates next to their certified bounds.

    ``p_hat[j-1]`` estimates the chance the coupled pair differs at lag j,
    with a Wilson interval at the declared confidence.  ``bound_osc`` is
    the oscillation-driven recursion envelope, ``bound_var`` the renewal
    mass built from the variation coefficients; either may be absent when
    the corresponding table does not reach far enough.
    """

    n_runs: int
    p_hat: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    bound_osc: "np.ndarray | None"
    bound_var: "np.ndarray | None"
    total_bound_osc: float
    total_bound_var: float
    confidence_z: float = Z99

    @property
    def n_lags(self) -> int:
        return len(self.p_hat)

    def refuted_lags(self) -> np.ndarray:
        """Lags whose CI floor exceeds every applicable certified bound."""
        candidates = [b for b in (self.bound_osc, self.bound_var) if b is not None]
        if not candidates:
            return np.zeros(0, dtype=np.int64)
        bad = np.ones(self.n_lags, dtype=bool)
        for bound in candidates:
            bad &= self.ci_lo > bound + 1e-12
        return np.flatnonzero(bad) + 1

    def cumulative_ok(self) -> bool:
        """Summed estimates stay under the closed-form envelope totals."""
        slack = float((self.ci_hi - self.p_hat).sum())
        total = float(self.p_hat.sum())
        for bound in (self.total_bound_osc, self.total_bound_var):
            if math.isfinite(bound) and total > bound + slack:
                return False
        return True

    def rows(self):
        """CSV rows: lag, p_hat, ci_lo, ci_hi, bounds, cumulative columns."""
        cum_p = np.cumsum(self.p_hat)
        cum_osc = None if self.bound_osc is None else np.cumsum(self.bound_osc)
        cum_var = None if self.bound_var is None else np.cumsum(self.bound_var)
        for i in range(self.n_lags):
            yield {
                "lag": i + 1,
                "p_hat": float(self.p_hat[i]),
                "ci_lo": float(self.ci_lo[i]),
                "ci_hi": float(self.ci_hi[i]),
                "bound_osc_recursion": math.nan
                if self.bound_osc is None
                else float(self.bound_osc[i]),
                "bound_renewal": math.nan
                if self.bound_var is None
                else float(self.bound_var[i]),
                "cum_p_hat": float(cum_p[i]),
                "cum_bound_osc": math.nan if cum_osc is None else float(cum_osc[i]),
                "cum_bound_renewal": math.nan if cum_var is None else float(cum_var[i]),
            }


def _check_partial_sum(seq: np.ndarray, weight_total: float, label: str) -> None:
    """The renewal solution for truncated weights w sums to w/(1-w) at most,
    so a partial sum exceeding that exposes a recursion bug."""
    if weight_total < 1.0:
        closed = weight_total / (1.0 - weight_total)
        if float(seq.sum()) > closed + 1e-9:
            raise RefutationError(
                f"{label} envelope partial sum exceeds its closed form {closed}"
            )


def disagreement_statistics(
    ensemble: CoupledEnsemble,
    prof: RegularityProfile,
    z: float = Z99,
) -> DisagreementStats:
    """Compare measured disagreement rates with the recursion envelopes."""
    n = ensemble.n_steps
    p_hat = ensemble.lag_counts / ensemble.n_runs
    ci_lo, ci_hi = wilson_interval(ensemble.lag_counts, ensemble.n_runs, z)

    osc_vals = prof.oscillation.certified_upper(n)
    alpha = disagreement_envelope(osc_vals, n)[1:]
    margin_lo = prof.osc_margin.lo
    total_osc = envelope_sum_bound(margin_lo) if margin_lo > 0 else math.inf
    _check_partial_sum(alpha, float(osc_vals[1:].sum()), "oscillation")

    var_vals = prof.variation.certified_upper(n - 1)
    gamma = first_disagreement_weights(var_vals, n)
    u_seq = renewal_recursion(gamma, n)[1:]
    product_lo = prof.var_product.lo
    total_var = envelope_sum_bound(product_lo) if product_lo > 0 else math.inf
    _check_partial_sum(u_seq, float(gamma[1:].sum()), "variation")

    return DisagreementStats(
        n_runs=ensemble.n_runs,
        p_hat=p_hat,
        ci_lo=np.asarray(ci_lo),
        ci_hi=np.asarray(ci_hi),
        bound_osc=alpha,
        bound_var=u_seq,
        total_bound_osc=total_osc,
        total_bound_var=total_var,
        confidence_z=z,
    )
