"""Experiment dispatch: build the kernel, run the kind, write reports.

Each experiment kind maps onto one library entry point.  Monte Carlo
kinds draw their runs through the fixed-block contract in ``seeding``,
which makes the CSV outputs byte-identical for any worker count; every
block task is a module-level callable so process pools can pickle it.
Observables cross the process boundary as plain spec dicts and are
rebuilt inside the task.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from . import __version__
from .concentration import (
    birkhoff_check_values,
    burn_in_length,
    deviation_check_values,
    dkw_check_devs,
    dkw_deviations,
    mgf_check_values,
)
from .config import ExperimentConfig, build_kernel, parse_past
from .coupling import CoupledEnsemble, coupled_paths, disagreement_statistics
from .distance import (
    DbarReport,
    _coefficient,
    bkf_lower_bound,
    dbar_upper_kl,
    dbar_upper_sup,
    kl_path_means,
    kl_rate_from_means,
    markov_approx_bound,
    witness_from_counts,
)
from .errors import (
    ConfigError,
    GuardError,
    NotApplicableError,
    ScumlabError,
    UncertifiedTailError,
    UndeterminedError,
)
from .families import (
    MarkovChain,
    RenewalKernel,
    WindowVoteKernel,
    markov_approximation,
    markov_blocks,
)
from .kernels import Kernel, PastSpec, sample_paths
from .observables import Observable, block_counts, block_frequency, weighted_sum
from .regularity import concentration_constants, gcb_constants, profile
from .renewal import (
    default_state_cap,
    gcb_classification,
    interarrival,
    renewal_markov_chain,
    stationary_marginals,
)
from .reports import format_cell, write_csv, write_text
from .seeding import DEFAULT_BLOCK_SIZE, run_blocks
from .stats import Z99, mean_interval_from_moments


@dataclass(frozen=True)
class ExperimentReport:
    """What one run produced: files on disk plus the headline verdict."""

    kind: str
    passed: bool
    csv_paths: tuple
    summary_path: str
    n_replicas: int
    wall_clock: float
    lines: tuple


@dataclass
class KindResult:
    columns: tuple
    rows: list
    lines: list
    passed: bool
    n_replicas: int
    extra: list = field(default_factory=list)


def default_symbol(kernel: Kernel) -> int:
    return 1 if 1 in kernel.alphabet else kernel.alphabet[-1]


def build_observable(spec, n_symbols: int) -> Observable:
    """Rebuild an observable from its JSON spec (done inside block tasks)."""
    kind = spec.get("type")
    if kind == "weighted-sum":
        return weighted_sum(spec["weights"], symbol=int(spec.get("symbol", 1)))
    if kind == "block-frequency":
        return block_frequency(spec["pattern"], int(spec["window"]), n_symbols)
    raise ConfigError([f"observable: unknown type {kind!r}"])


def _default_past(kernel: Kernel, params: dict, key: str = "past") -> PastSpec:
    errors: "list[str]" = []
    spec = parse_past(params.get(key), errors, f"params.{key}")
    if errors:
        raise ConfigError(errors)
    if spec is not None:
        return spec
    if key == "past_right":
        return PastSpec.constant(kernel.alphabet[-1])
    return PastSpec.constant(kernel.alphabet[0])


def _concat(blocks) -> np.ndarray:
    return np.concatenate([np.asarray(b) for b in blocks])


def _interval_text(name: str, lo: float, hi: float) -> str:
    return f"{name} in [{format_cell(lo)}, {format_cell(hi)}]"


# ---------------------------------------------------------------------------
# block tasks (module level so process pools can pickle them)


def _values_block(count, rng, *, kernel, past, obs_spec, n_symbols):
    obs = build_observable(obs_spec, n_symbols)
    paths = sample_paths(kernel, past, obs.window, count, rng)
    return obs(paths)


def _birkhoff_block(count, rng, *, kernel, past, obs_spec, n_symbols, n_terms):
    from .observables import birkhoff_sum

    local = build_observable(obs_spec, n_symbols)
    total = birkhoff_sum(local, n_terms)
    paths = sample_paths(kernel, past, total.window, count, rng)
    return total(paths) / n_terms


def _couple_block(count, rng, *, kernel, past_left, past_right, n_steps):
    ens = coupled_paths(kernel, kernel, past_left, past_right, n_steps, count, rng)
    return ens.lag_counts, ens.window_counts


def _dkw_block(count, rng, *, kernel, k, n, reference, past, burn_in):
    return dkw_deviations(kernel, k, n, count, rng, reference, past, burn_in)


def _witness_block(count, rng, *, kernel_h, kernel_g, past, burn_in, n_steps):
    ens = coupled_paths(
        kernel_h,
        kernel_g,
        past,
        past,
        burn_in + n_steps,
        count,
        rng,
        window_start=burn_in,
    )
    return ens.window_counts


def _kl_block(count, rng, *, kernel_h, kernel_g, past, n_steps, burn_in):
    return kl_path_means(kernel_h, kernel_g, past, n_steps, count, rng, burn_in)


def _block_moment_stats(window: np.ndarray, ks) -> dict:
    out = {}
    for k in ks:
        counts = block_counts(window, k, 2)
        freqs = counts / (window.shape[1] - k + 1)
        out[k] = (freqs.sum(axis=0), (freqs * freqs).sum(axis=0), len(freqs))
    return out


def _renewal_freq_block(count, rng, *, kernel, past, burn_in, n_steps, ks):
    paths = sample_paths(kernel, past, burn_in + n_steps, count, rng)
    return _block_moment_stats(paths[:, burn_in:], ks)


def _gap_chain_paths(matrix, n_steps, n_runs, rng) -> np.ndarray:
    """Binary image of the finite gap chain; a symbol is 1 on each return."""
    cap = matrix.shape[0] - 1
    hazard = matrix[:, 0]
    states = np.zeros(n_runs, dtype=np.int64)
    symbols = np.empty((n_runs, n_steps), dtype=np.int64)
    for t in range(n_steps):
        renew = rng.random(n_runs) < hazard[states]
        states = np.where(renew, 0, np.minimum(states + 1, cap))
        symbols[:, t] = renew
    return symbols


def _gap_chain_block(count, rng, *, matrix, burn_in, n_steps, ks):
    paths = _gap_chain_paths(matrix, burn_in + n_steps, count, rng)
    return _block_moment_stats(paths[:, burn_in:], ks)


def _merge_moment_stats(blocks, ks) -> dict:
    merged = {}
    for k in ks:
        total = None
        for b in blocks:
            s, sq, n = b[k]
            if total is None:
                total = [np.array(s), np.array(sq), n]
            else:
                total[0] += s
                total[1] += sq
                total[2] += n
        merged[k] = total
    return merged


# ---------------------------------------------------------------------------
# kind runners


def _run_regularity(kernel, params, seed, workers, block_size) -> KindResult:
    max_lag = int(params.get("max_lag", 64))
    prof = profile(kernel, max_lag=max_lag)
    rows = []
    for table, name in ((prof.oscillation, "osc"), (prof.variation, "var")):
        for i, iv in enumerate(table.per_lag):
            rows.append((name, table.start + i, iv.lo, iv.hi))
    rows.append(("delta", None, prof.osc_margin.lo, prof.osc_margin.hi))
    rows.append(("gamma", None, prof.var_product.lo, prof.var_product.hi))
    rows.append(("inf_g", None, prof.infimum.lo, prof.infimum.hi))
    lines = [
        _interval_text("delta", prof.osc_margin.lo, prof.osc_margin.hi),
        _interval_text("gamma", prof.var_product.lo, prof.var_product.hi),
        _interval_text("inf_g", prof.infimum.lo, prof.infimum.hi),
        f"delta certified positive: {prof.osc_margin.lo > 0}",
        f"gamma certified positive: {prof.var_product.lo > 0}",
    ]
    try:
        consts = gcb_constants(prof.osc_margin, prof.var_product)
        for name, value in (
            ("coefficient", consts.coefficient),
            ("mgf_factor", consts.mgf_factor),
            ("deviation_rate", consts.deviation_rate),
        ):
            rows.append((name, None, value, value))
        lines.append(
            f"concentration constants from the {consts.source}: "
            f"C = {format_cell(consts.coefficient)}"
        )
    except NotApplicableError:
        lines.append("no certified concentration regime (delta <= 0 and gamma <= 0)")
    return KindResult(
        columns=("quantity", "lag", "lo", "hi"),
        rows=rows,
        lines=lines,
        passed=True,
        n_replicas=0,
    )


_COUPLE_COLUMNS = (
    "lag",
    "p_hat",
    "ci_lo",
    "ci_hi",
    "bound_osc_recursion",
    "bound_renewal",
    "cum_p_hat",
    "cum_bound_osc",
    "cum_bound_renewal",
)


def _run_couple(kernel, params, seed, workers, block_size) -> KindResult:
    n_steps = int(params.get("n_steps", 100))
    n_runs = int(params.get("n_runs", 20000))
    max_lag = int(params.get("max_lag", max(64, n_steps)))
    z = float(params.get("confidence_z", Z99))
    past_left = _default_past(kernel, params, "past")
    past_right = _default_past(kernel, params, "past_right")
    task = partial(
        _couple_block,
        kernel=kernel,
        past_left=past_left,
        past_right=past_right,
        n_steps=n_steps,
    )
    blocks = run_blocks(
        task,
        n_runs,
        master_seed=seed,
        kind="couple",
        workers=workers,
        block_size=block_size,
    )
    lag_counts = np.sum([b[0] for b in blocks], axis=0)
    window_counts = _concat([b[1] for b in blocks])
    ensemble = CoupledEnsemble(
        n_runs=n_runs,
        n_steps=n_steps,
        lag_counts=lag_counts,
        window_counts=window_counts,
        window_start=0,
    )
    prof = profile(kernel, max_lag=max_lag)
    stats = disagreement_statistics(ensemble, prof, z=z)
    refuted = stats.refuted_lags()
    cum_ok = stats.cumulative_ok()
    passed = len(refuted) == 0 and cum_ok
    lines = [
        f"coupled runs: {n_runs}, lags checked: {stats.n_lags}",
        f"refuted lags: {', '.join(str(v) for v in refuted) if len(refuted) else 'none'}",
        f"cumulative disagreement under the envelope totals: {cum_ok}",
        _interval_text("delta", prof.osc_margin.lo, prof.osc_margin.hi),
        _interval_text("gamma", prof.var_product.lo, prof.var_product.hi),
    ]
    return KindResult(
        columns=_COUPLE_COLUMNS,
        rows=list(stats.rows()),
        lines=lines,
        passed=passed,
        n_replicas=n_runs,
    )


_CHECK_COLUMNS = (
    "parameter",
    "estimate",
    "ci_lo",
    "ci_hi",
    "bound",
    "margin",
    "verdict",
)


def _obs_spec(kernel, params, default_weights) -> dict:
    spec = params.get("observable")
    if spec is None:
        spec = {
            "type": "weighted-sum",
            "weights": default_weights,
            "symbol": int(params.get("symbol", default_symbol(kernel))),
        }
    return spec


def _run_gcb(kind, kernel, params, seed, workers, block_size) -> KindResult:
    n_runs = int(params.get("n_runs", 20000))
    z = float(params.get("confidence_z", Z99))
    past = _default_past(kernel, params)
    n_sym = len(kernel.alphabet)
    max_lag = int(params.get("max_lag", 64))
    consts = concentration_constants(kernel, max_lag)

    if kind == "birkhoff":
        n_terms = int(params.get("n_terms", 100))
        us = params.get("us", [0.02, 0.05, 0.1])
        spec = _obs_spec(kernel, params, [1.0])
        task = partial(
            _birkhoff_block,
            kernel=kernel,
            past=past,
            obs_spec=spec,
            n_symbols=n_sym,
            n_terms=n_terms,
        )
        averages = _concat(
            run_blocks(
                task,
                n_runs,
                master_seed=seed,
                kind=kind,
                workers=workers,
                block_size=block_size,
            )
        )
        local = build_observable(spec, n_sym)
        check = birkhoff_check_values(averages, local, n_terms, us, consts, z=z)
    else:
        n_steps = int(params.get("n_steps", 100))
        spec = _obs_spec(kernel, params, [1.0] * n_steps)
        obs = build_observable(spec, n_sym)
        task = partial(
            _values_block, kernel=kernel, past=past, obs_spec=spec, n_symbols=n_sym
        )
        values = _concat(
            run_blocks(
                task,
                n_runs,
                master_seed=seed,
                kind=kind,
                workers=workers,
                block_size=block_size,
            )
        )
        if kind == "gcb-mgf":
            thetas = params.get("thetas", [0.5, -0.5, 1.0, -1.0])
            check = mgf_check_values(values, obs, thetas, consts, z=z)
        else:
            us = params.get("us", [2.0, 4.0, 8.0, 16.0, 32.0])
            check = deviation_check_values(values, obs, us, consts, z=z)

    rows = list(check.rows())
    lines = [
        f"runs: {n_runs}, constants from the {consts.source}, "
        f"C = {format_cell(consts.coefficient)}",
    ]
    for row in rows:
        lines.append(
            f"{check.kind} at {format_cell(row['parameter'])}: estimate "
            f"{format_cell(row['estimate'])} vs bound {format_cell(row['bound'])} "
            f"-> {row['verdict']}"
        )
    return KindResult(
        columns=_CHECK_COLUMNS,
        rows=rows,
        lines=lines,
        passed=check.passed,
        n_replicas=n_runs,
    )


def _dkw_reference(kernel, params, k: int) -> np.ndarray:
    explicit = params.get("reference")
    if explicit is not None:
        ref = np.asarray(explicit, dtype=float)
        if len(ref) != len(kernel.alphabet) ** k:
            raise ConfigError(
                [f"params.reference: needs {len(kernel.alphabet) ** k} masses for k={k}"]
            )
        return ref
    if isinstance(kernel, MarkovChain):
        return markov_blocks(kernel.matrix, k)
    raise GuardError(
        "no stationary reference available for this kernel family; pass "
        "params.reference explicitly"
    )


def _run_dkw(kernel, params, seed, workers, block_size) -> KindResult:
    ks = [int(v) for v in params.get("ks", [1])]
    n = int(params.get("n", 4096))
    n_paths = int(params.get("n_paths", 2000))
    us = params.get("us", [1.0, 2.0, 3.0])
    z = float(params.get("confidence_z", Z99))
    budget = float(params.get("reference_budget", 1e-9))
    prof = profile(kernel, max_lag=int(params.get("max_lag", 64)))
    gamma_lo = prof.var_product.lo
    if gamma_lo <= 0:
        raise GuardError("the variation product is not certified positive")
    burn_in = params.get("burn_in")
    burn_in = burn_in_length(prof) if burn_in is None else int(burn_in)
    past = _default_past(kernel, params)

    rows = []
    lines = [
        f"paths: {n_paths} of length {n}, burn-in {burn_in}, "
        f"gamma floor {format_cell(gamma_lo)}"
    ]
    passed = True
    for k in ks:
        reference = _dkw_reference(kernel, params, k)
        task = partial(
            _dkw_block,
            kernel=kernel,
            k=k,
            n=n,
            reference=reference,
            past=past,
            burn_in=burn_in,
        )
        sup_dev = _concat(
            run_blocks(
                task,
                n_paths,
                master_seed=seed,
                kind=f"dkw:k={k}",
                workers=workers,
                block_size=block_size,
            )
        )
        check = dkw_check_devs(sup_dev, us, k, n, gamma_lo, reference_budget=budget, z=z)
        passed = passed and check.passed
        for row in check.rows():
            rows.append({"k": k, **row})
            lines.append(
                f"k={k} u={format_cell(row['parameter'])}: exceedance "
                f"{format_cell(row['estimate'])} vs bound "
                f"{format_cell(row['bound'])} -> {row['verdict']}"
            )
    return KindResult(
        columns=("k",) + _CHECK_COLUMNS,
        rows=rows,
        lines=lines,
        passed=passed,
        n_replicas=n_paths * len(ks),
    )


def _dbar_target(kernel, k: int, past: PastSpec):
    """Approximation kernel, its Markov order, and the exact lower bound."""
    if isinstance(kernel, WindowVoteKernel):
        if not 1 <= k <= len(kernel.windows):
            raise ConfigError(
                [f"params.ks: k={k} outside 1..{len(kernel.windows)} windows"]
            )
        approx = kernel.truncated(k)
        return approx, kernel.windows[k - 1], bkf_lower_bound(kernel.eps, kernel.weights, k)
    return markov_approximation(kernel, k, past), k, 0.0


def _run_dbar(kernel, params, seed, workers, block_size) -> KindResult:
    ks = [int(v) for v in params.get("ks", [1])]
    burn_in = int(params.get("burn_in", 256))
    n_steps = int(params.get("n_steps", 64))
    n_runs = int(params.get("n_runs", 10000))
    depth = params.get("depth")
    z = float(params.get("confidence_z", Z99))
    past = _default_past(kernel, params)
    lower_bounds = params.get("lower_bounds")
    if lower_bounds is not None and len(lower_bounds) != len(ks):
        raise ConfigError(["params.lower_bounds: needs one value per entry of ks"])

    rows = []
    lines = [f"runs: {n_runs} of {n_steps} steps after burn-in {burn_in}"]
    passed = True
    for idx, k in enumerate(ks):
        approx, order, lower = _dbar_target(kernel, k, past)
        if lower_bounds is not None:
            lower = float(lower_bounds[idx])
        enum_depth = int(depth) if depth is not None else order
        prof = profile(kernel, max_lag=max(64, enum_depth, order))
        witness_task = partial(
            _witness_block,
            kernel_h=approx,
            kernel_g=kernel,
            past=past,
            burn_in=burn_in,
            n_steps=n_steps,
        )
        counts = _concat(
            run_blocks(
                witness_task,
                n_runs,
                master_seed=seed,
                kind=f"dbar-witness:k={k}",
                workers=workers,
                block_size=block_size,
            )
        )
        witness = witness_from_counts(counts, n_steps, burn_in, z=z)
        kl_task = partial(
            _kl_block,
            kernel_h=approx,
            kernel_g=kernel,
            past=past,
            n_steps=n_steps,
            burn_in=burn_in,
        )
        means = _concat(
            run_blocks(
                kl_task,
                n_runs,
                master_seed=seed,
                kind=f"dbar-rate:k={k}",
                workers=workers,
                block_size=block_size,
            )
        )
        rate = kl_rate_from_means(means, n_steps, burn_in, z=z)
        bound_kl = dbar_upper_kl(rate, _coefficient(prof))
        bound_sup = dbar_upper_sup(approx, kernel, enum_depth, prof_g=prof)
        approx_bound = markov_approx_bound(kernel, order, max_lag=max(64, order))
        report = DbarReport(
            k=order,
            lower_bound=lower,
            witness=witness.value,
            witness_ci=witness.halfwidth,
            bound_kl=bound_kl.certified,
            bound_sup=bound_sup.certified,
            bound_corollary=approx_bound.corollary,
        )
        ok = report.ordered()
        passed = passed and ok
        rows.append(report.row())
        lines.append(
            f"order {order}: lower {format_cell(lower)} <= witness "
            f"{format_cell(witness.value)} +- {format_cell(witness.halfwidth)} "
            f"<= min(kl {format_cell(report.bound_kl)}, sup "
            f"{format_cell(report.bound_sup)}, corollary "
            f"{format_cell(report.bound_corollary)}) -> "
            f"{'pass' if ok else 'FAIL'}"
        )
    return KindResult(
        columns=DbarReport.COLUMNS,
        rows=rows,
        lines=lines,
        passed=passed,
        n_replicas=2 * n_runs * len(ks),
    )


_RENEWAL_COLUMNS = (
    "check",
    "k",
    "pattern",
    "estimate",
    "ci_lo",
    "ci_hi",
    "target_lo",
    "target_hi",
    "verdict",
)

_CLASSIFICATION_COLUMNS = (
    "q_prefix",
    "q_limit",
    "tail",
    "exists",
    "has_gcb",
    "evidence",
    "f_prefix",
)


def _tail_text(kernel: RenewalKernel) -> str:
    tail = kernel.tail
    if tail is None:
        return ""
    name = type(tail).__name__
    if name == "PowerTail":
        return f"power({format_cell(tail.coeff)},{format_cell(tail.exponent)})"
    return f"geometric({format_cell(tail.coeff)},{format_cell(tail.ratio)})"


def _classification_row(kernel: RenewalKernel, law) -> "tuple[dict, str, bool]":
    try:
        cls = gcb_classification(kernel)
        has_gcb = cls.has_gcb
        evidence = cls.evidence
        exists = cls.exists
    except UndeterminedError as exc:
        has_gcb = None
        evidence = str(exc)
        exists = True
    row = {
        "q_prefix": ";".join(format_cell(q) for q in kernel.prefix),
        "q_limit": kernel.limit,
        "tail": _tail_text(kernel),
        "exists": exists,
        "has_gcb": has_gcb,
        "evidence": evidence,
        "f_prefix": ";".join(format_cell(v) for v in law.f[1:9]),
    }
    return row, evidence, exists


def _pattern_text(code: int, k: int) -> str:
    return format(code, f"0{k}b")


def _run_renewal(kernel, params, seed, workers, block_size) -> KindResult:
    if not isinstance(kernel, RenewalKernel):
        raise GuardError("the renewal experiment needs a renewal kernel")
    n_max = int(params.get("n_max", 512))
    ks = [int(v) for v in params.get("ks", [1, 2, 3])]
    n_steps = int(params.get("n_steps", 2000))
    n_runs = int(params.get("n_runs", 2000))
    burn_in = int(params.get("burn_in", 256))
    z = float(params.get("confidence_z", Z99))

    law = interarrival(kernel, n_max)
    gap = abs(law.normalization_gap())
    norm_ok = gap <= 1e-10
    cls_row, evidence, exists = _classification_row(kernel, law)
    lines = [
        f"inter-arrival law over {law.n_max} terms, normalization gap "
        f"{format_cell(gap)} -> {'pass' if norm_ok else 'FAIL'}",
        f"stationary law exists: {exists}; {evidence}",
    ]
    extra = [("classification.csv", _CLASSIFICATION_COLUMNS, [cls_row])]
    rows = [
        {
            "check": "normalization",
            "k": None,
            "pattern": "",
            "estimate": gap,
            "ci_lo": gap,
            "ci_hi": gap,
            "target_lo": 0.0,
            "target_hi": 1e-10,
            "verdict": "pass" if norm_ok else "FAIL",
        }
    ]
    passed = norm_ok

    if not exists:
        lines.append("no stationary law; the frequency checks do not apply")
        return KindResult(
            columns=_RENEWAL_COLUMNS,
            rows=rows,
            lines=lines,
            passed=passed,
            n_replicas=0,
            extra=extra,
        )

    try:
        marg = stationary_marginals(kernel, n_max)
    except UncertifiedTailError as exc:
        lines.append(f"frequency checks skipped: {exc}")
        return KindResult(
            columns=_RENEWAL_COLUMNS,
            rows=rows,
            lines=lines,
            passed=passed,
            n_replicas=0,
            extra=extra,
        )
    past = PastSpec.constant(1)
    freq_task = partial(
        _renewal_freq_block,
        kernel=kernel,
        past=past,
        burn_in=burn_in,
        n_steps=n_steps,
        ks=ks,
    )
    direct = _merge_moment_stats(
        run_blocks(
            freq_task,
            n_runs,
            master_seed=seed,
            kind="renewal:kernel",
            workers=workers,
            block_size=block_size,
        ),
        ks,
    )
    cap = default_state_cap(kernel)
    matrix = renewal_markov_chain(kernel, cap)
    chain_task = partial(
        _gap_chain_block, matrix=matrix, burn_in=burn_in, n_steps=n_steps, ks=ks
    )
    image = _merge_moment_stats(
        run_blocks(
            chain_task,
            n_runs,
            master_seed=seed,
            kind="renewal:gap-chain",
            workers=workers,
            block_size=block_size,
        ),
        ks,
    )
    lines.append(
        f"runs: {2 * n_runs} of {n_steps} steps after burn-in {burn_in}; "
        f"gap chain capped at {cap} states"
    )

    def estimates(stats, k):
        sums, sqs, count = stats[k]
        pairs = [
            mean_interval_from_moments(sums[c], sqs[c], count, z)
            for c in range(len(sums))
        ]
        return pairs

    def add_row(check, k, pattern, est, half, target_lo, target_hi):
        ok = est - half <= target_hi and target_lo <= est + half
        rows.append(
            {
                "check": check,
                "k": k,
                "pattern": pattern,
                "estimate": est,
                "ci_lo": est - half,
                "ci_hi": est + half,
                "target_lo": target_lo,
                "target_hi": target_hi,
                "verdict": "pass" if ok else "FAIL",
            }
        )
        return ok

    one_est, one_half = estimates(direct, 1)[1]
    passed &= add_row("freq_one", 1, "1", one_est, one_half, marg.one.lo, marg.one.hi)
    lines.append(
        f"frequency of 1: {format_cell(one_est)} +- {format_cell(one_half)} vs "
        f"certified [{format_cell(marg.one.lo)}, {format_cell(marg.one.hi)}]"
    )
    for k in ks:
        zero_run = marg.zero_run(k)
        direct_pairs = estimates(direct, k)
        image_pairs = estimates(image, k)
        est, half = direct_pairs[0]
        passed &= add_row(
            "zero_run", k, _pattern_text(0, k), est, half, zero_run.lo, zero_run.hi
        )
        for code in range(len(direct_pairs)):
            d_est, d_half = direct_pairs[code]
            i_est, i_half = image_pairs[code]
            ok = abs(d_est - i_est) <= math.hypot(d_half, i_half)
            rows.append(
                {
                    "check": "image_block",
                    "k": k,
                    "pattern": _pattern_text(code, k),
                    "estimate": d_est,
                    "ci_lo": d_est - d_half,
                    "ci_hi": d_est + d_half,
                    "target_lo": i_est - i_half,
                    "target_hi": i_est + i_half,
                    "verdict": "pass" if ok else "FAIL",
                }
            )
            passed = passed and ok
    bad = [r for r in rows if r["verdict"] == "FAIL"]
    lines.append(
        f"frequency checks: {len(rows) - len(bad)} of {len(rows)} pass"
        + (f" (failing: {', '.join(r['check'] for r in bad)})" if bad else "")
    )
    return KindResult(
        columns=_RENEWAL_COLUMNS,
        rows=rows,
        lines=lines,
        passed=passed,
        n_replicas=2 * n_runs,
        extra=extra,
    )


_RUNNERS = {
    "regularity": _run_regularity,
    "couple": _run_couple,
    "gcb-mgf": partial(_run_gcb, "gcb-mgf"),
    "gcb-deviation": partial(_run_gcb, "gcb-deviation"),
    "birkhoff": partial(_run_gcb, "birkhoff"),
    "dkw": _run_dkw,
    "dbar": _run_dbar,
    "renewal": _run_renewal,
}


def run(cfg: ExperimentConfig, block_size: int = DEFAULT_BLOCK_SIZE) -> ExperimentReport:
    """Execute the configured experiment and write its CSV and summary."""
    start = time.perf_counter()
    kernel = build_kernel(cfg.kernel)
    result = _RUNNERS[cfg.kind](kernel, cfg.params, cfg.seed, cfg.workers, block_size)
    elapsed = time.perf_counter() - start

    os.makedirs(cfg.out, exist_ok=True)
    csv_path = os.path.join(cfg.out, f"{cfg.kind}.csv")
    write_csv(csv_path, result.columns, result.rows)
    paths = [csv_path]
    for name, cols, extra_rows in result.extra:
        extra_path = os.path.join(cfg.out, name)
        write_csv(extra_path, cols, extra_rows)
        paths.append(extra_path)
    lines = [
        f"scumlab {__version__}",
        f"kind: {cfg.kind}",
        f"config: {cfg.echo()}",
        f"seed: {cfg.seed}  workers: {cfg.workers}  block size: {block_size}",
        f"replicas: {result.n_replicas}",
        f"wall clock: {elapsed:.2f} s",
        *result.lines,
        f"verdict: {'pass' if result.passed else 'REFUTED'}",
    ]
    summary_path = os.path.join(cfg.out, "summary.txt")
    write_text(summary_path, lines)
    return ExperimentReport(
        kind=cfg.kind,
        passed=result.passed,
        csv_paths=tuple(paths),
        summary_path=summary_path,
        n_replicas=result.n_replicas,
        wall_clock=elapsed,
        lines=tuple(lines),
    )


def validate(cfg: ExperimentConfig) -> "list[str]":
    """Applicability diagnostics for a parsed config, without running it."""
    notes: "list[str]" = []
    try:
        kernel = build_kernel(cfg.kernel)
    except ConfigError as exc:
        return list(exc.messages)
    params = cfg.params

    def certified_profile():
        try:
            return profile(kernel, max_lag=int(params.get("max_lag", 64)))
        except ScumlabError as exc:
            notes.append(f"{cfg.kind}: regularity profile failed ({exc})")
            return None

    if cfg.kind == "dbar":
        if not kernel.is_finite:
            notes.append(
                "dbar: the distance bounds need a finite alphabet (the "
                "documented strong non-nullness restriction); cap the counts "
                "or pick a finite family"
            )
        else:
            prof = certified_profile()
            if prof is not None and prof.infimum.lo <= 0:
                notes.append(
                    "dbar: inf g is not certified positive, so the "
                    "approximation constant is undefined"
                )
            for k in params.get("ks", [1]):
                try:
                    _dbar_target(kernel, int(k), _default_past(kernel, params))
                except ConfigError as exc:
                    notes.extend(exc.messages)
    if cfg.kind in ("gcb-mgf", "gcb-deviation", "birkhoff"):
        try:
            concentration_constants(kernel, int(params.get("max_lag", 64)))
        except ScumlabError as exc:
            notes.append(f"{cfg.kind}: {exc}")
        if cfg.kind == "gcb-mgf":
            n_steps = int(params.get("n_steps", 100))
            spec = _obs_spec(kernel, params, [1.0] * n_steps)
            obs = build_observable(spec, len(kernel.alphabet))
            thetas = params.get("thetas", [0.5, -0.5, 1.0, -1.0])
            worst = max(abs(float(t)) for t in thetas) * obs.range_bound
            if worst > 20.0:
                notes.append(
                    f"gcb-mgf: theta*range = {worst:.2f} exceeds 20; the "
                    "empirical moment would be variance-dominated"
                )
    if cfg.kind == "dkw":
        prof = certified_profile()
        if prof is not None and prof.var_product.lo <= 0:
            notes.append("dkw: the variation product is not certified positive")
        if params.get("reference") is None and not isinstance(kernel, MarkovChain):
            notes.append(
                "dkw: no stationary reference available for this kernel "
                "family; pass params.reference explicitly"
            )
    if cfg.kind == "couple":
        prof = certified_profile()
        if prof is not None and prof.osc_margin.lo <= 0 and prof.var_product.lo <= 0:
            notes.append(
                "couple: neither envelope is certified positive, so the "
                "disagreement estimates would have no bound to refute"
            )
    if cfg.kind == "renewal" and not isinstance(kernel, RenewalKernel):
        notes.append("renewal: this experiment needs a renewal kernel")
    return notes
