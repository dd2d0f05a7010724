from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.special import expit

from scumlab.errors import NormalizationError
from scumlab.families import (
    BinaryAR,
    MarkovChain,
    MarkovMixture,
    RenewalKernel,
    WindowVoteKernel,
    iid_blocks,
    markov_approximation,
    markov_blocks,
    stationary_distribution,
)
from scumlab.kernels import History, PastSpec
from scumlab.series import GeometricTail, LagSeries, PowerTail


STICKY = [[0.9, 0.1], [0.2, 0.8]]


def hist(past_symbol: int, *word: int) -> History:
    return History(PastSpec.constant(past_symbol), tuple(word))


# -- MarkovChain ------------------------------------------------------------


def test_markov_rejects_bad_rows() -> None:
    with pytest.raises(NormalizationError):
        MarkovChain([[0.9, 0.2], [0.2, 0.8]])
    with pytest.raises(NormalizationError):
        MarkovChain([[1.0, 0.0]])


def test_markov_conditional_reads_last_symbol() -> None:
    chain = MarkovChain(STICKY)
    assert chain.conditional(hist(0)).prob_of(1) == 0.1
    assert chain.conditional(hist(0, 1)).prob_of(1) == 0.8
    assert chain.infimum_probability().lo <= 0.1


def test_markov_regularity_tables() -> None:
    chain = MarkovChain(STICKY)
    osc = chain.oscillation_bounds(4)
    var = chain.variation_bounds(4)
    # one-step memory: everything sits at the first lag
    assert 0.7 in osc.value(1)
    assert osc.value(2).hi == 0.0
    assert 0.7 in var.value(0)
    assert var.value(1).hi == 0.0


# -- BinaryAR ----------------------------------------------------------------


def test_binary_ar_zero_coefficients_is_fair() -> None:
    kernel = BinaryAR(0.0, LagSeries((0.0,), start=1))
    dist = kernel.conditional(hist(1, -1, 1))
    assert dist.prob_of(1) == pytest.approx(0.5)
    assert dist.prob_of(-1) == pytest.approx(0.5)


def test_binary_ar_conditional_matches_logistic_field() -> None:
    kernel = BinaryAR(0.2, LagSeries((0.3, -0.1), start=1))
    h = hist(1, 1, -1)  # x_{-1} = -1, x_{-2} = 1, constant +1 beyond
    field = 0.2 + 0.3 * (-1) + (-0.1) * 1
    assert kernel.conditional(h).prob_of(1) == pytest.approx(expit(2 * field))


def test_binary_ar_oscillation_is_tanh_of_coefficient() -> None:
    kernel = BinaryAR(0.0, LagSeries((0.4, 0.2), start=1))
    osc = kernel.oscillation_bounds(3)
    assert osc.value(1).hi == pytest.approx(math.tanh(0.4), abs=1e-12)
    assert osc.value(2).hi == pytest.approx(math.tanh(0.2), abs=1e-12)
    assert osc.value(3).hi == 0.0
    # the certified lower witness cannot cross the analytic ceiling
    assert osc.value(1).lo <= osc.value(1).hi


def test_binary_ar_finite_memory_length() -> None:
    kernel = BinaryAR(0.0, LagSeries((0.3, 0.2), start=1))
    assert kernel.memory_length == 2


def test_binary_ar_rejects_divergent_coefficients() -> None:
    with pytest.raises(ValueError):
        BinaryAR(0.0, LagSeries((), tail=PowerTail(1.0, 0.9), start=1))


# -- MarkovMixture -----------------------------------------------------------


def test_mixture_single_component_reduces_to_markov() -> None:
    chain = MarkovChain(STICKY)
    mix = MarkovMixture([(1, STICKY)], [1.0])
    for h in (hist(0), hist(1), hist(0, 1, 0)):
        assert mix.conditional(h).prob_of(1) == pytest.approx(
            chain.conditional(h).prob_of(1)
        )


def test_mixture_blends_component_rows() -> None:
    order0 = [[0.5, 0.5]]
    order1 = [[0.7, 0.3], [0.4, 0.6]]
    mix = MarkovMixture([(0, order0), (1, order1)], [0.25, 0.75])
    got = mix.conditional(hist(0, 1)).prob_of(1)
    assert got == pytest.approx(0.25 * 0.5 + 0.75 * 0.6)


def test_mixture_oscillation_counts_weight_at_or_beyond_lag() -> None:
    mix = MarkovMixture(
        [(0, [[0.5, 0.5]]), (1, [[0.7, 0.3], [0.4, 0.6]]), (2, np.full((4, 2), 0.5))],
        [0.4, 0.4, 0.2],
    )
    osc = mix.oscillation_bounds(4)
    assert osc.value(1).hi == pytest.approx(0.6)
    assert osc.value(2).hi == pytest.approx(0.2)
    assert osc.value(3).hi == 0.0


# -- RenewalKernel -----------------------------------------------------------


def test_renewal_constant_hazard_is_iid() -> None:
    kernel = RenewalKernel((), 0.3)
    for h in (hist(0), hist(1), hist(0, 1, 0, 0)):
        assert kernel.conditional(h).prob_of(1) == pytest.approx(0.3)


def test_renewal_hazard_lookup() -> None:
    kernel = RenewalKernel((0.6, 0.5), 0.2, tail=GeometricTail(0.1, 0.5))
    assert kernel.hazard(0) == 0.6
    assert kernel.hazard(1) == 0.5
    assert kernel.hazard(3) == pytest.approx(0.2 + 0.1 * 0.5**3)
    assert kernel.hazard(-1) == 0.2  # eventless past falls back to the limit
    assert kernel.is_monotone()


def test_renewal_gap_reading() -> None:
    kernel = RenewalKernel((0.6, 0.5, 0.4), 0.2)
    assert kernel.conditional(hist(0, 1)).prob_of(1) == 0.6
    assert kernel.conditional(hist(0, 1, 0)).prob_of(1) == 0.5
    assert kernel.conditional(hist(0, 1, 0, 0)).prob_of(1) == 0.4
    # no event anywhere: the limit hazard applies
    assert kernel.conditional(hist(0)).prob_of(1) == pytest.approx(0.2)


def test_renewal_rejects_bad_hazards() -> None:
    with pytest.raises(NormalizationError):
        RenewalKernel((1.2,), 0.0)
    with pytest.raises(NormalizationError):
        RenewalKernel((0.5,), -0.1)


# -- WindowVoteKernel ---------------------------------------------------------


def test_window_vote_up_probability_by_hand() -> None:
    kernel = WindowVoteKernel(0.1, (0.6, 0.4), (1, 3), phi="linear")
    h = hist(-1, 1, -1, 1)  # last three symbols: 1, -1, 1
    phi1 = 0.5 + 0.4 * 1.0
    phi3 = 0.5 + 0.4 * (1.0 / 3.0)
    assert kernel.conditional(h).prob_of(1) == pytest.approx(0.6 * phi1 + 0.4 * phi3)


def test_window_vote_phi_is_pinned_at_extremes() -> None:
    kernel = WindowVoteKernel(0.1, (1.0,), (3,), phi="linear")
    assert kernel.conditional(hist(1)).prob_of(1) == pytest.approx(0.9)
    assert kernel.conditional(hist(-1)).prob_of(1) == pytest.approx(0.1)


def test_window_vote_truncation_moves_mass_to_tail() -> None:
    full = WindowVoteKernel(0.1, (0.5, 0.3, 0.2), (1, 3, 5), phi="linear")
    cut = full.truncated(1)
    assert cut.windows == (1,)
    assert cut.tail_weight == pytest.approx(0.5)
    # on the all-plus history the dropped windows would have voted phi(1),
    # which is exactly where the tail mass is pinned
    assert cut.conditional(hist(1)).prob_of(1) == pytest.approx(
        full.conditional(hist(1)).prob_of(1)
    )


def test_window_vote_validation() -> None:
    with pytest.raises(NormalizationError):
        WindowVoteKernel(0.1, (0.5, 0.5), (1, 2))  # even window
    with pytest.raises(NormalizationError):
        WindowVoteKernel(0.1, (0.5, 0.4), (1, 3))  # mass missing
    with pytest.raises(NormalizationError):
        WindowVoteKernel(0.7, (1.0,), (1,))  # eps out of range


# -- Markov approximation ------------------------------------------------------


def test_markov_approximation_exact_at_full_memory() -> None:
    chain = MarkovChain(STICKY)
    approx = markov_approximation(chain, 1, PastSpec.constant(0))
    for h in (hist(0), hist(1), hist(1, 0, 1)):
        assert approx.conditional(h).prob_of(1) == pytest.approx(
            chain.conditional(h).prob_of(1)
        )


# -- stationary helpers ---------------------------------------------------------


def eig_stationary(matrix: np.ndarray) -> np.ndarray:
    values, vectors = np.linalg.eig(np.asarray(matrix, dtype=float).T)
    idx = int(np.argmin(np.abs(values - 1.0)))
    pi = np.real(vectors[:, idx])
    return pi / pi.sum()


def test_stationary_distribution_matches_eigenvector() -> None:
    pi = stationary_distribution(np.asarray(STICKY))
    np.testing.assert_allclose(pi, eig_stationary(np.asarray(STICKY)), atol=1e-12)
    np.testing.assert_allclose(pi, [2.0 / 3.0, 1.0 / 3.0], atol=1e-12)


def test_markov_blocks_pair_masses() -> None:
    q = np.asarray(STICKY)
    pi = eig_stationary(q)
    blocks = markov_blocks(q, 2)
    # block code orders the oldest symbol first
    expected = np.array(
        [pi[0] * q[0, 0], pi[0] * q[0, 1], pi[1] * q[1, 0], pi[1] * q[1, 1]]
    )
    np.testing.assert_allclose(blocks, expected, atol=1e-12)
    assert blocks.sum() == pytest.approx(1.0)


def test_iid_blocks_uniform() -> None:
    np.testing.assert_allclose(iid_blocks((0.5, 0.5), 3), np.full(8, 0.125))
