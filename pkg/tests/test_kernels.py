from __future__ import annotations

import math

import numpy as np
import pytest

from scumlab.errors import NormalizationError
from scumlab.families import MarkovChain
from scumlab.kernels import (
    ConditionalDistribution,
    History,
    PastSpec,
    path_log_likelihood,
    logprob_along,
    sample_paths,
    total_variation,
)


def fair_coin() -> MarkovChain:
    return MarkovChain([[0.5, 0.5], [0.5, 0.5]])


def test_past_spec_periodic_fill() -> None:
    past = PastSpec(explicit=(1, 0), fill=(2, 3))
    # the most recent coordinate is explicit[-1]; deeper lags cycle the fill
    assert past.at(1) == 0
    assert past.at(2) == 1
    assert past.at(3) == 3
    assert past.at(4) == 2
    assert past.at(5) == 3


def test_past_spec_constant() -> None:
    past = PastSpec.constant(7)
    assert past.at(1) == 7
    assert past.at(100) == 7


def test_past_spec_shifted_prepends() -> None:
    past = PastSpec.constant(0).shifted(5)
    assert past.at(1) == 5
    assert past.at(2) == 0


def test_history_crosses_word_boundary() -> None:
    hist = History(PastSpec.constant(9), word=(4, 5))
    assert hist.at(1) == 5
    assert hist.at(2) == 4
    assert hist.at(3) == 9
    longer = hist.extended(6)
    assert longer.at(1) == 6
    assert longer.at(2) == 5


def test_conditional_distribution_checks_normalization() -> None:
    with pytest.raises(NormalizationError):
        ConditionalDistribution((0, 1), (0.7, 0.7))
    dist = ConditionalDistribution((0, 1), (0.25, 0.5), truncation_mass=0.25)
    assert dist.prob_of(1) == 0.5
    assert dist.as_dict() == {0: 0.25, 1: 0.5}


def test_total_variation_matches_direct_half_sum() -> None:
    d1 = ConditionalDistribution((0, 1, 2), (0.2, 0.3, 0.5))
    d2 = ConditionalDistribution((0, 1, 2), (0.5, 0.3, 0.2))
    assert total_variation(d1, d2) == pytest.approx(0.5 * (0.3 + 0.0 + 0.3))


def test_total_variation_counts_truncation_mass() -> None:
    d1 = ConditionalDistribution((0,), (0.9,), truncation_mass=0.1)
    d2 = ConditionalDistribution((0,), (0.9,), truncation_mass=0.1)
    assert total_variation(d1, d2) == pytest.approx(0.1)


def test_sim_step_inverse_cdf_bins() -> None:
    chain = MarkovChain([[0.3, 0.7], [0.6, 0.4]])
    state = chain.sim_init(PastSpec.constant(0), 3)
    probs = chain.sim_probs(state)
    np.testing.assert_allclose(probs, [[0.3, 0.7]] * 3)
    symbols = chain.sim_step(state, np.array([0.1, 0.3 + 1e-9, 0.99]))
    assert symbols.tolist() == [0, 1, 1]


def test_sample_paths_deterministic_per_seed() -> None:
    chain = fair_coin()
    past = PastSpec.constant(0)
    a = sample_paths(chain, past, 20, 8, np.random.default_rng(3))
    b = sample_paths(chain, past, 20, 8, np.random.default_rng(3))
    assert a.shape == (8, 20)
    np.testing.assert_array_equal(a, b)


def test_iid_word_log_likelihood() -> None:
    # any length-4 word under the fair coin scores 4 log(1/2)
    value = path_log_likelihood(fair_coin(), PastSpec.constant(0), (0, 1, 1, 0))
    assert value == pytest.approx(4.0 * math.log(0.5))


def test_logprob_along_matches_scalar_path() -> None:
    chain = MarkovChain([[0.3, 0.7], [0.6, 0.4]])
    past = PastSpec.constant(1)
    paths = np.array([[0, 1, 1], [1, 0, 0]])
    table = logprob_along(chain, past, paths)
    for i in range(2):
        assert table[i].sum() == pytest.approx(
            path_log_likelihood(chain, past, tuple(paths[i]))
        )


def test_sim_logprob_rejects_foreign_symbol() -> None:
    chain = fair_coin()
    state = chain.sim_init(PastSpec.constant(0), 2)
    with pytest.raises(ValueError):
        chain.sim_logprob(state, np.array([0, 5]))
