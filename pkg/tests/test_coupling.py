from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scumlab.coupling import (
    _check_partial_sum,
    disagreement_statistics,
    maximal_coupling_step,
    sample_coupled_paths,
    single_coupled_run,
)
from scumlab.errors import RefutationError
from scumlab.families import MarkovChain
from scumlab.kernels import ConditionalDistribution, PastSpec, total_variation
from scumlab.regularity import profile
from scumlab.stats import wilson_interval


def dist(probs, truncation: float = 0.0) -> ConditionalDistribution:
    return ConditionalDistribution(range(len(probs)), probs, truncation)


def test_identical_laws_couple_on_the_diagonal() -> None:
    d = dist((0.2, 0.3, 0.5))
    step = maximal_coupling_step(d, d)
    assert step.off_diagonal_mass() == pytest.approx(0.0, abs=1e-15)
    np.testing.assert_allclose(step.diagonal(), (0.2, 0.3, 0.5), atol=1e-15)
    assert step.total() == pytest.approx(1.0, abs=1e-12)


def test_coupling_marginals_diagonal_and_mass() -> None:
    left = dist((0.5, 0.3, 0.2))
    right = dist((0.1, 0.3, 0.6))
    step = maximal_coupling_step(left, right)
    np.testing.assert_allclose(step.matrix.sum(axis=1), left.probs, atol=1e-12)
    np.testing.assert_allclose(step.matrix.sum(axis=0), right.probs, atol=1e-12)
    np.testing.assert_allclose(
        step.diagonal(), np.minimum(left.probs, right.probs), atol=1e-14
    )
    assert step.off_diagonal_mass() == pytest.approx(
        total_variation(left, right), abs=1e-12
    )
    assert np.all(step.matrix >= 0)


@settings(max_examples=200, deadline=None)
@given(
    st.integers(2, 8).flatmap(
        lambda n: st.tuples(
            st.lists(st.floats(0.01, 1.0), min_size=n, max_size=n),
            st.lists(st.floats(0.01, 1.0), min_size=n, max_size=n),
        )
    )
)
def test_coupling_exactness_randomized(pair: tuple) -> None:
    raw_p, raw_q = pair
    p = np.asarray(raw_p) / math.fsum(raw_p)
    q = np.asarray(raw_q) / math.fsum(raw_q)
    left, right = dist(p), dist(q)
    step = maximal_coupling_step(left, right)
    np.testing.assert_allclose(step.matrix.sum(axis=1), p, atol=1e-10)
    np.testing.assert_allclose(step.matrix.sum(axis=0), q, atol=1e-10)
    np.testing.assert_allclose(step.diagonal(), np.minimum(p, q), atol=1e-12)
    assert abs(step.off_diagonal_mass() - total_variation(left, right)) < 1e-10


def test_coupling_keeps_truncation_overflow() -> None:
    left = dist((0.6, 0.3), truncation=0.1)
    right = dist((0.5, 0.5))
    step = maximal_coupling_step(left, right)
    assert step.has_overflow
    assert step.total() == pytest.approx(1.0, abs=1e-12)


def test_same_kernel_same_past_never_disagrees(rng: np.random.Generator) -> None:
    chain = MarkovChain([[0.9, 0.1], [0.2, 0.8]])
    ens = sample_coupled_paths(chain, PastSpec.constant(0), 1, 1, 50, rng, n_runs=64)
    assert ens.lag_counts.sum() == 0
    assert ens.window_counts.sum() == 0


def test_first_step_disagreement_is_row_tv(rng: np.random.Generator) -> None:
    chain = MarkovChain([[0.9, 0.1], [0.2, 0.8]])
    n_runs = 20000
    ens = sample_coupled_paths(chain, PastSpec.constant(0), 0, 1, 3, rng, n_runs=n_runs)
    lo, hi = wilson_interval(int(ens.lag_counts[0]), n_runs, 3.0)
    assert lo <= 0.7 <= hi  # maximal coupling realizes the TV exactly


def test_single_coupled_run_shapes(rng: np.random.Generator) -> None:
    chain = MarkovChain([[0.9, 0.1], [0.2, 0.8]])
    run = single_coupled_run(chain, PastSpec.constant(0), 0, 1, 12, rng)
    assert run.path_left.shape == (12,)
    assert run.path_right.shape == (12,)
    assert run.first == (0, 1)
    assert run.disagreement.dtype == np.uint8


def test_disagreement_statistics_bounds_hold(rng: np.random.Generator) -> None:
    chain = MarkovChain([[0.9, 0.1], [0.2, 0.8]])
    prof = profile(chain)
    ens = sample_coupled_paths(
        chain, PastSpec.constant(0), 0, 1, 30, rng, n_runs=20000
    )
    stats = disagreement_statistics(ens, prof)
    assert stats.refuted_lags().size == 0
    assert stats.cumulative_ok()
    rows = list(stats.rows())
    assert len(rows) == 30
    assert rows[0]["lag"] == 1
    # for the sticky two-state chain both routes give the geometric bound
    assert rows[0]["bound_osc_recursion"] == pytest.approx(0.7, abs=1e-9)
    assert rows[1]["bound_osc_recursion"] == pytest.approx(0.49, abs=1e-9)


def test_partial_sum_guard_raises_on_impossible_sequence() -> None:
    with pytest.raises(RefutationError):
        _check_partial_sum(np.array([5.0, 5.0]), 0.5, "oscillation")
    _check_partial_sum(np.array([0.5, 0.25]), 0.5, "oscillation")  # fine: 0.75 < 1
