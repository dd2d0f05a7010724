"""Core abstractions: pasts, histories, conditional laws, kernel protocol.

A kernel is a map from an infinite past to a probability distribution on the
next symbol.  Pasts are specified by a finite explicit window plus a periodic
fill pattern extending to minus infinity, which keeps every quantity the
package computes exactly evaluable.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .errors import NormalizationError

PROB_TOL = 1e-12


@dataclass(frozen=True)
class PastSpec:
    """A fixed infinite past: explicit recent window, periodic fill beyond.

    ``explicit`` lists the most recent coordinates with the most recent one
    last, so ``explicit[-1]`` sits at lag 1.  ``fill`` repeats leftwards past
    the explicit window: lag ``len(explicit) + 1`` reads ``fill[-1]``, the
    lag after that ``fill[-2]``, wrapping around.
    """

    explicit: tuple = ()
    fill: tuple = (0,)

    def __post_init__(self):
        object.__setattr__(self, "explicit", tuple(int(v) for v in self.explicit))
        object.__setattr__(self, "fill", tuple(int(v) for v in self.fill))
        if not self.fill:
            raise ValueError("fill pattern must be non-empty")

    @classmethod
    def constant(cls, symbol: int, explicit: tuple = ()) -> "PastSpec":
        return cls(explicit=explicit, fill=(symbol,))

    def at(self, lag: int) -> int:
        """Coordinate at distance ``lag`` >= 1 into the past."""
        if lag < 1:
            raise IndexError(f"lag must be >= 1, got {lag}")
        span = len(self.explicit)
        if lag <= span:
            return self.explicit[span - lag]
        period = len(self.fill)
        return self.fill[period - 1 - ((lag - span - 1) % period)]

    def shifted(self, symbol: int) -> "PastSpec":
        """The past seen after emitting one more symbol."""
        return PastSpec(self.explicit + (int(symbol),), self.fill)


@dataclass(frozen=True)
class History:
    """A fixed past extended by the symbols generated so far (oldest first)."""

    past: PastSpec
    word: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "word", tuple(int(v) for v in self.word))

    def at(self, lag: int) -> int:
        n = len(self.word)
        if lag < 1:
            raise IndexError(f"lag must be >= 1, got {lag}")
        if lag <= n:
            return self.word[n - lag]
        return self.past.at(lag - n)

    def extended(self, symbol: int) -> "History":
        return History(self.past, self.word + (int(symbol),))


class ConditionalDistribution:
    """Distribution of the next symbol given one fixed history.

    ``symbols`` lists the support, ``probs`` the matching probabilities.
    ``truncation_mass`` records mass dropped when a countable support was
    cut off; it must stay below the declared truncation threshold, and the
    listed probabilities plus the dropped mass must sum to one.
    """

    __slots__ = ("symbols", "probs", "truncation_mass")

    def __init__(self, symbols, probs, truncation_mass: float = 0.0):
        self.symbols = tuple(int(s) for s in symbols)
        self.probs = np.asarray(probs, dtype=float)
        self.truncation_mass = float(truncation_mass)
        if self.probs.shape != (len(self.symbols),):
            raise NormalizationError("probability vector does not match support")
        if np.any(self.probs < -PROB_TOL):
            raise NormalizationError(f"negative probability: min={self.probs.min()}")
        total = self.probs.sum() + self.truncation_mass
        if abs(total - 1.0) > PROB_TOL * max(1, len(self.symbols)):
            raise NormalizationError(f"probabilities sum to {total!r}, not 1")

    def prob_of(self, symbol: int) -> float:
        try:
            return float(self.probs[self.symbols.index(int(symbol))])
        except ValueError:
            return 0.0

    def as_dict(self) -> dict:
        return dict(zip(self.symbols, self.probs.tolist()))


def total_variation(d1: ConditionalDistribution, d2: ConditionalDistribution) -> float:
    """TV distance between two conditional laws on a shared countable support."""
    symbols = sorted(set(d1.symbols) | set(d2.symbols))
    p = np.array([d1.prob_of(s) for s in symbols])
    q = np.array([d2.prob_of(s) for s in symbols])
    # truncated mass is unsigned, so it can only widen the distance
    return 0.5 * float(np.abs(p - q).sum()) + 0.5 * (d1.truncation_mass + d2.truncation_mass)


class Kernel(ABC):
    """One-step transition law g(a | past).

    Finite-alphabet kernels expose ``alphabet`` as a tuple of symbols and
    vectorized simulation probabilities; countable kernels (alphabet None)
    must override the sampling and log-probability hooks instead.
    """

    alphabet: "tuple | None" = None
    #: number of most-recent coordinates the conditional law depends on,
    #: or None when the dependence genuinely reaches all the way back
    memory_length: "int | None" = None

    @property
    def is_finite(self) -> bool:
        return self.alphabet is not None

    @abstractmethod
    def conditional(self, history) -> ConditionalDistribution:
        """Exact conditional law given an object with an ``at(lag)`` method."""

    # -- vectorized simulation protocol ------------------------------------
    # A state bundles everything needed to evolve n_runs histories that all
    # start from the same fixed past.  Families override these with O(N)
    # array implementations; the generic fallbacks loop over runs.

    def sim_init(self, past: PastSpec, n_runs: int):
        return _GenericState(self, past, n_runs)

    def sim_probs(self, state) -> np.ndarray:
        if not self.is_finite:
            raise NotImplementedError("countable-alphabet kernels must override sampling")
        out = np.empty((len(state.histories), len(self.alphabet)))
        for i, h in enumerate(state.histories):
            dist = self.conditional(h)
            out[i] = [dist.prob_of(s) for s in self.alphabet]
        return out

    def sim_advance(self, state, symbols: np.ndarray) -> None:
        state.histories = [
            h.extended(s) for h, s in zip(state.histories, symbols.tolist())
        ]

    def sim_step(self, state, u: np.ndarray) -> np.ndarray:
        """Draw one symbol per run from uniforms, by inverse CDF."""
        probs = self.sim_probs(state)
        cum = np.cumsum(probs, axis=1)
        idx = (cum < u[:, None] * cum[:, -1:]).sum(axis=1)
        return np.asarray(self.alphabet, dtype=np.int64)[idx]

    def sim_logprob(self, state, symbols: np.ndarray) -> np.ndarray:
        """log g(symbols | history), one value per run, without advancing."""
        probs = self.sim_probs(state)
        alpha = np.asarray(self.alphabet, dtype=np.int64)
        idx = np.searchsorted(alpha, symbols)
        if np.any(alpha[np.clip(idx, 0, len(alpha) - 1)] != symbols):
            raise ValueError("symbol outside kernel alphabet")
        return np.log(probs[np.arange(len(idx)), idx])


class _GenericState:
    __slots__ = ("kernel", "histories")

    def __init__(self, kernel: Kernel, past: PastSpec, n_runs: int):
        self.kernel = kernel
        self.histories = [History(past) for _ in range(n_runs)]


def sample_paths(
    kernel: Kernel,
    past: PastSpec,
    n_steps: int,
    n_runs: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Simulate ``n_runs`` paths of length ``n_steps`` from one fixed past.

    Uniform variates are drawn step-major so the sampled paths depend only
    on the generator stream, not on how callers batch the runs.
    """
    state = kernel.sim_init(past, n_runs)
    out = np.empty((n_runs, n_steps), dtype=np.int64)
    for t in range(n_steps):
        u = rng.random(n_runs)
        symbols = kernel.sim_step(state, u)
        out[:, t] = symbols
        kernel.sim_advance(state, symbols)
    return out


def sample_symbol(dist: ConditionalDistribution, rng: np.random.Generator) -> int:
    u = rng.random()
    cum = np.cumsum(dist.probs)
    idx = int((cum < u * cum[-1]).sum())
    return dist.symbols[min(idx, len(dist.symbols) - 1)]


def path_log_likelihood(kernel: Kernel, past: PastSpec, word) -> float:
    """Exact log-likelihood of ``word`` emitted from ``past`` under ``kernel``."""
    history = History(past)
    total = 0.0
    for symbol in word:
        p = kernel.conditional(history).prob_of(symbol)
        if p <= 0.0:
            return -np.inf
        total += np.log(p)
        history = history.extended(symbol)
    return float(total)


def logprob_along(kernel: Kernel, past: PastSpec, paths: np.ndarray) -> np.ndarray:
    """Per-step log-likelihood of given paths, vectorized over runs.

    Returns an array of shape ``paths.shape`` whose (i, t) entry is
    log g(paths[i, t] | past . paths[i, :t]).
    """
    n_runs, n_steps = paths.shape
    state = kernel.sim_init(past, n_runs)
    out = np.empty((n_runs, n_steps))
    for t in range(n_steps):
        out[:, t] = kernel.sim_logprob(state, paths[:, t])
        kernel.sim_advance(state, paths[:, t])
    return out
