"""Built-in kernel families.

Each family evaluates its conditional law exactly on explicit pasts, runs a
vectorized many-path simulation, and certifies per-lag oscillation and
variation bounds with explicit intervals.  Lower ends of the certified
intervals come from witness pasts (any evaluated pair is a valid lower bound
for a supremum); upper ends come from the family's analytic envelope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, zeta
from scipy.stats import poisson

from .errors import NoStationaryMeasureError, NormalizationError, SupportCapError
from .intervals import Interval, enclose, isum
from .kernels import ConditionalDistribution, History, Kernel, PastSpec, total_variation
from .regularity import BoundTable
from .series import GeometricTail, LagSeries, PowerTail

SUPPORT_CAP = 1_000_000


# ---------------------------------------------------------------------------
# helpers shared by the autoregressive families


def _frozen_field(series: LagSeries, past: PastSpec, shift: int, weigh) -> float:
    """sum_{m >= 1} series(shift + m) * weigh(past.at(m)).

    The past is eventually periodic and the series eventually analytic, so
    the sum splits into a finite direct part and per-residue tail sums
    (Hurwitz zeta for power tails, plain geometric sums otherwise).
    """
    span = len(past.explicit)
    if series.tail is None:
        m_hi = max(0, series.tail_start - 1 - shift)
        return math.fsum(
            series.value(shift + m) * weigh(past.at(m)) for m in range(1, m_hi + 1)
        )
    m0 = max(span, series.tail_start - 1 - shift, 0)
    direct = math.fsum(
        series.value(shift + m) * weigh(past.at(m)) for m in range(1, m0 + 1)
    )
    period = len(past.fill)
    tail = series.tail
    total = direct
    for s in range(period):
        m = m0 + 1 + s
        w = weigh(past.at(m))
        if w == 0.0:
            continue
        j0 = shift + m  # first absolute lag in this residue class
        if isinstance(tail, PowerTail):
            part = tail.coeff * period ** (-tail.exponent) * zeta(tail.exponent, j0 / period)
        else:
            part = tail.coeff * tail.ratio**j0 / (1.0 - tail.ratio**period)
        total += w * part
    return total


def _history_field(series: LagSeries, history, weigh) -> float:
    """sum_{j >= 1} series(j) * weigh(history.at(j)) for History over PastSpec."""
    if isinstance(history, History):
        t = len(history.word)
        word_part = math.fsum(
            series.value(j) * weigh(history.word[t - j]) for j in range(1, t + 1)
        )
        return word_part + _frozen_field(series, history.past, t, weigh)
    if isinstance(history, PastSpec):
        return _frozen_field(series, history, 0, weigh)
    # arbitrary history: only usable when the series has finite reach
    if series.finite_length is None:
        raise TypeError("a tailed coefficient series needs a periodic past")
    return math.fsum(
        series.value(j) * weigh(history.at(j))
        for j in range(series.start, series.tail_start)
    )


class _FieldState:
    """Shared simulation state for the field-driven families.

    Keeps a ring of the last ``reach`` weighed symbols when the coefficient
    series is finite, or the full weighed path plus cached fixed-past
    contributions when it has an analytic tail.
    """

    __slots__ = ("n_runs", "ring", "cols", "t", "past", "past_contrib")

    def __init__(self, series: LagSeries, past: PastSpec, n_runs: int, weigh):
        self.n_runs = n_runs
        self.t = 0
        self.past = past
        reach = series.finite_length
        if reach is not None:
            self.ring = np.empty((n_runs, reach))
            for lag in range(1, reach + 1):
                self.ring[:, reach - lag] = weigh(past.at(lag))
            self.cols = None
        else:
            self.ring = None
            self.cols = np.empty((n_runs, 64))
        self.past_contrib = []


def _field_values(series: LagSeries, state: _FieldState, weigh) -> np.ndarray:
    if state.ring is not None:
        reach = state.ring.shape[1]
        w = np.array([series.value(reach - i) for i in range(reach)])
        return state.ring @ w
    t = state.t
    while len(state.past_contrib) <= t:
        state.past_contrib.append(
            _frozen_field(series, state.past, len(state.past_contrib), weigh)
        )
    field = np.full(state.n_runs, state.past_contrib[t])
    if t > 0:
        w = np.array([series.value(t - i) for i in range(t)])
        field += state.cols[:, :t] @ w
    return field


def _field_advance(state: _FieldState, weighed: np.ndarray) -> None:
    if state.ring is not None:
        if state.ring.shape[1] > 0:
            state.ring[:, :-1] = state.ring[:, 1:]
            state.ring[:, -1] = weighed
    else:
        if state.t == state.cols.shape[1]:
            state.cols = np.concatenate(
                [state.cols, np.empty_like(state.cols)], axis=1
            )
        state.cols[:, state.t] = weighed
    state.t += 1


def _witness_tv(kernel: Kernel, x: PastSpec, y: PastSpec) -> float:
    return total_variation(kernel.conditional(History(x)), kernel.conditional(History(y)))


def _second_order_tail(series_abs: LagSeries, max_lag: int) -> float:
    """Upper bound on sum_{j > max_lag} sum_{k > j} |xi_k|, which equals
    sum_{k > max_lag + 1} (k - max_lag - 1) |xi_k|.  Infinite when the
    first-moment series diverges."""
    if series_abs.finite_length is not None:
        if max_lag >= series_abs.finite_length:
            return 0.0
        terms = [
            Interval.point((k - max_lag - 1) * series_abs.value(k))
            for k in range(max_lag + 2, series_abs.tail_start)
        ]
        return isum(terms).hi
    if not series_abs.tails_summable():
        return math.inf
    tail = series_abs.tail
    split = max(max_lag + 2, series_abs.tail_start)
    direct = isum(
        Interval.point((k - max_lag - 1) * series_abs.value(k))
        for k in range(max_lag + 2, split)
    )
    if isinstance(tail, PowerTail):
        # (k - max_lag - 1) k^-p <= k^{1-p}
        analytic = PowerTail(tail.coeff, tail.exponent - 1.0).tail_sum(split).hi
    else:
        # sum_{k >= split} k r^k in closed form, padded outward
        r, c = tail.ratio, tail.coeff
        analytic = enclose(
            c * r**split * (split - (split - 1) * r) / (1 - r) ** 2
        ).hi
    return direct.hi + analytic


# ---------------------------------------------------------------------------
# finite-order Markov chain


class MarkovChain(Kernel):
    """Order-one chain on {0, .., A-1} given by a row-stochastic matrix."""

    def __init__(self, matrix):
        self.matrix = np.asarray(matrix, dtype=float)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise NormalizationError("transition matrix must be square")
        if np.any(self.matrix < 0):
            raise NormalizationError("transition matrix has negative entries")
        rows = self.matrix.sum(axis=1)
        if np.any(np.abs(rows - 1.0) > 1e-12):
            raise NormalizationError(f"rows must sum to 1, got {rows}")
        self.alphabet = tuple(range(self.matrix.shape[0]))
        self.memory_length = 1

    def conditional(self, history) -> ConditionalDistribution:
        return ConditionalDistribution(self.alphabet, self.matrix[history.at(1)])

    def sim_init(self, past: PastSpec, n_runs: int):
        return _MarkovState(np.full(n_runs, past.at(1), dtype=np.int64))

    def sim_probs(self, state) -> np.ndarray:
        return self.matrix[state.current]

    def sim_advance(self, state, symbols: np.ndarray) -> None:
        state.current = symbols

    # regularity: only the first lag matters
    def _contraction(self) -> float:
        q = self.matrix
        diff = 0.5 * np.abs(q[:, None, :] - q[None, :, :]).sum(axis=2)
        return float(diff.max())

    def oscillation_bounds(self, max_lag: int) -> BoundTable:
        d = enclose(self._contraction())
        table = (d,) + (Interval.point(0.0),) * (max_lag - 1)
        return BoundTable(table, start=1, tail=Interval.point(0.0), tail_sup=0.0)

    def variation_bounds(self, max_lag: int) -> BoundTable:
        d = enclose(self._contraction())
        table = (d,) + (Interval.point(0.0),) * max_lag
        return BoundTable(table, start=0, tail=Interval.point(0.0), tail_sup=0.0)

    def infimum_probability(self) -> Interval:
        return enclose(float(self.matrix.min()))


class _MarkovState:
    __slots__ = ("current",)

    def __init__(self, current):
        self.current = current


# ---------------------------------------------------------------------------
# binary autoregression with logistic link


def _psi(u):
    return expit(2.0 * u)


class BinaryAR(Kernel):
    """Kernel on {-1, +1} with g(a | x) = psi(a * (xi0 + sum_j xi_j x_{-j})).

    The link is the logistic sigmoid psi(u) = 1 / (1 + exp(-2u)), whose
    exact span modulus sup_{|u - v| <= 2h} |psi(u) - psi(v)| = tanh(h)
    sharpens both the per-lag oscillation and the variation envelopes.
    """

    alphabet = (-1, 1)

    def __init__(self, xi0: float, xi: LagSeries):
        if xi.start != 1:
            raise ValueError("coefficient series must start at lag 1")
        if not xi.summable:
            raise ValueError("coefficient series must be absolutely summable")
        self.xi0 = float(xi0)
        self.xi = xi
        self._abs = xi.abs()
        if xi.finite_length is not None:
            self.memory_length = xi.start - 1 + xi.finite_length

    def field(self, history) -> float:
        return self.xi0 + _history_field(self.xi, history, lambda s: float(s))

    def conditional(self, history) -> ConditionalDistribution:
        p_up = _psi(self.field(history))
        return ConditionalDistribution(self.alphabet, (1.0 - p_up, p_up))

    def sim_init(self, past: PastSpec, n_runs: int):
        return _FieldState(self.xi, past, n_runs, lambda s: float(s))

    def sim_probs(self, state) -> np.ndarray:
        p_up = _psi(self.xi0 + _field_values(self.xi, state, lambda s: float(s)))
        return np.column_stack([1.0 - p_up, p_up])

    def sim_advance(self, state, symbols: np.ndarray) -> None:
        _field_advance(state, symbols.astype(float))

    # -- regularity providers ----------------------------------------------

    def _radius(self, beyond: int) -> Interval:
        """Enclosure of sum_{j > beyond} |xi_j|."""
        return self._abs.tail_sum(beyond + 1)

    def oscillation_bounds(self, max_lag: int) -> BoundTable:
        per_lag = []
        for j in range(1, max_lag + 1):
            hi = math.tanh(abs(self.xi.value(j)))
            lo = self._osc_witness(j) if hi > 0 else 0.0
            per_lag.append(Interval(min(lo, hi), enclose(hi).hi))
        # beyond the table: tanh|xi_j| <= |xi_j|, so the coefficient tail
        # sum dominates; the lower end is not tracked out there
        tail_hi = self._radius(max_lag).hi
        rest = [abs(self.xi.value(j)) for j in range(max_lag + 1, self.xi.tail_start)]
        if self.xi.tail is not None:
            rest.append(abs(self.xi.tail.value(max(max_lag + 1, self.xi.tail_start))))
        tail_sup = max(rest, default=0.0)
        return BoundTable(
            tuple(per_lag), start=1, tail=Interval(0.0, tail_hi), tail_sup=tail_sup
        )

    def variation_bounds(self, max_lag: int) -> BoundTable:
        per_lag = []
        for j in range(0, max_lag + 1):
            radius = self._radius(j)
            hi = math.tanh(radius.hi)
            lo = self._var_witness(j) if radius.hi > 0 else 0.0
            per_lag.append(Interval(min(lo, hi), enclose(hi).hi))
        # sum_{j > max_lag} Var_j <= sum_{j > max_lag} sum_{k > j} |xi_k|
        tail_hi = _second_order_tail(self._abs, max_lag)
        tail_sup = math.tanh(self._radius(max_lag + 1).hi)
        summable = self.xi.tails_summable()
        # When the iterated tails diverge the lower bounds do too: the field
        # stays in a compact bracket where the logistic slope has a positive
        # floor, so Var_j >= floor * sum_{k > j} |xi_k| termwise.
        return BoundTable(
            tuple(per_lag),
            start=0,
            tail=Interval(0.0, tail_hi) if summable else Interval(math.inf, math.inf),
            tail_sup=tail_sup,
            summable=summable,
            lower_diverges=not summable,
        )

    def _osc_witness(self, j: int) -> float:
        x = PastSpec(explicit=(1,) * j, fill=(1,))
        y = PastSpec(explicit=(-1,) + (1,) * (j - 1), fill=(1,))
        return _witness_tv(self, x, y)

    def _var_witness(self, j: int) -> float:
        x = PastSpec(explicit=(1,) * j, fill=(1,))
        y = PastSpec(explicit=(1,) * j, fill=(-1,))
        return _witness_tv(self, x, y)

    def infimum_probability(self) -> Interval:
        r = self._abs.total()
        lo = min(_psi(self.xi0 - r.hi), 1.0 - _psi(self.xi0 + r.hi))
        hi = min(_psi(self.xi0 - r.lo), 1.0 - _psi(self.xi0 + r.lo))
        return Interval(enclose(lo).lo, enclose(hi).hi)


# ---------------------------------------------------------------------------
# Poisson regression on counts


class PoissonRegression(Kernel):
    """Counts with intensity v(x) = exp(sum_j xi_j min(x_{-j}, cap)), xi <= 0.

    Nonpositive coefficients keep the intensity at or below one, which is
    what makes the e^{-1} envelope in the oscillation bound valid.
    """

    alphabet = None

    def __init__(self, xi: LagSeries, cap: int, truncation: float = 1e-12):
        if xi.start != 1:
            raise ValueError("coefficient series must start at lag 1")
        if not xi.summable:
            raise ValueError("coefficient series must be absolutely summable")
        if any(v > 0 for v in xi.prefix):
            raise ValueError("coefficients must be nonpositive")
        if xi.tail is not None and xi.tail.coeff > 0:
            raise ValueError("coefficient tail must be nonpositive")
        if cap < 1:
            raise ValueError("count cap must be a positive integer")
        self.xi = xi
        self.cap = int(cap)
        if xi.finite_length is not None:
            self.memory_length = xi.start - 1 + xi.finite_length
        self.truncation = float(truncation)
        self._abs = xi.abs()

    def _weigh(self, s) -> float:
        return float(min(s, self.cap))

    def intensity(self, history) -> float:
        return math.exp(_history_field(self.xi, history, self._weigh))

    def conditional(self, history) -> ConditionalDistribution:
        lam = self.intensity(history)
        support_end = int(poisson.isf(self.truncation, lam)) + 1
        if support_end > SUPPORT_CAP:
            raise SupportCapError(f"support needs {support_end} atoms")
        symbols = np.arange(support_end + 1)
        probs = poisson.pmf(symbols, lam)
        dropped = float(poisson.sf(support_end, lam))
        return ConditionalDistribution(symbols, probs, truncation_mass=dropped)

    def sim_init(self, past: PastSpec, n_runs: int):
        return _FieldState(self.xi, past, n_runs, self._weigh)

    def _intensities(self, state) -> np.ndarray:
        return np.exp(_field_values(self.xi, state, self._weigh))

    def sim_step(self, state, u: np.ndarray) -> np.ndarray:
        lam = self._intensities(state)
        counts = poisson.ppf(np.clip(u, 1e-300, None), lam)
        return np.maximum(counts, 0.0).astype(np.int64)

    def sim_logprob(self, state, symbols: np.ndarray) -> np.ndarray:
        return poisson.logpmf(symbols, self._intensities(state))

    def sim_advance(self, state, symbols: np.ndarray) -> None:
        _field_advance(state, np.minimum(symbols, self.cap).astype(float))

    # -- regularity providers ----------------------------------------------

    _ENVELOPE = math.exp(-1.0)  # sup of lambda * exp(-lambda) over lambda <= 1

    def oscillation_bounds(self, max_lag: int) -> BoundTable:
        per_lag = []
        for j in range(1, max_lag + 1):
            hi = min(1.0, self._ENVELOPE * self.cap * abs(self.xi.value(j)))
            lo = self._osc_witness(j) if hi > 0 else 0.0
            per_lag.append(Interval(min(lo, hi), enclose(hi).hi))
        tail_hi = self._ENVELOPE * self.cap * self._abs.tail_sum(max_lag + 1).hi
        tail_sup = (
            min(1.0, self._ENVELOPE * self.cap * abs(self.xi.value(max_lag + 1)))
            if self.xi.tail is not None
            else 0.0
        )
        return BoundTable(
            tuple(per_lag), start=1, tail=Interval(0.0, enclose(tail_hi).hi), tail_sup=tail_sup
        )

    def variation_bounds(self, max_lag: int) -> BoundTable:
        per_lag = []
        for j in range(0, max_lag + 1):
            hi = min(1.0, self._ENVELOPE * self.cap * self._abs.tail_sum(j + 1).hi)
            lo = self._var_witness(j) if hi > 0 else 0.0
            per_lag.append(Interval(min(lo, hi), enclose(hi).hi))
        if not self.xi.tails_summable():
            return BoundTable(
                tuple(per_lag), start=0, tail=Interval(0.0, math.inf),
                tail_sup=1.0, summable=False,
            )
        tail_hi = self._ENVELOPE * self.cap * _second_order_tail(self._abs, max_lag)
        tail_sup = min(
            1.0, self._ENVELOPE * self.cap * self._abs.tail_sum(max_lag + 2).hi
        )
        return BoundTable(
            tuple(per_lag), start=0, tail=Interval(0.0, enclose(tail_hi).hi),
            tail_sup=tail_sup,
        )

    def _osc_witness(self, j: int) -> float:
        x = PastSpec(explicit=(0,) * j, fill=(0,))
        y = PastSpec(explicit=(self.cap,) + (0,) * (j - 1), fill=(0,))
        return _witness_tv(self, x, y)

    def _var_witness(self, j: int) -> float:
        x = PastSpec(explicit=(0,) * j, fill=(0,))
        y = PastSpec(explicit=(0,) * j, fill=(self.cap,))
        return _witness_tv(self, x, y)

    def infimum_probability(self) -> Interval:
        return Interval.point(0.0)


# ---------------------------------------------------------------------------
# finite mixture of finite-order chains


class MarkovMixture(Kernel):
    """Convex mixture of finite-order transition tables on {0, .., A-1}.

    Component i has order k_i >= 0 and a table of shape (A**k_i, A); a row
    index reads the context with the oldest symbol as the most significant
    base-A digit.  Order zero means an i.i.d. component.
    """

    def __init__(self, components, weights):
        self.weights = tuple(float(w) for w in weights)
        if len(self.weights) != len(components):
            raise NormalizationError("one weight per component")
        if any(w <= 0 for w in self.weights):
            raise NormalizationError("component weights must be positive")
        if abs(sum(self.weights) - 1.0) > 1e-12:
            raise NormalizationError(f"weights sum to {sum(self.weights)}, not 1")
        self.orders = []
        self.tables = []
        n_symbols = None
        for order, table in components:
            order = int(order)
            table = np.asarray(table, dtype=float)
            if order < 0:
                raise NormalizationError("component order must be >= 0")
            if n_symbols is None:
                n_symbols = table.shape[-1]
            if table.shape != (n_symbols**order, n_symbols):
                raise NormalizationError(
                    f"order-{order} table must have shape {(n_symbols**order, n_symbols)}"
                )
            if np.any(table < 0) or np.any(np.abs(table.sum(axis=1) - 1.0) > 1e-12):
                raise NormalizationError("component rows must be distributions")
            self.orders.append(order)
            self.tables.append(table)
        self.alphabet = tuple(range(n_symbols))
        self.max_order = max(self.orders, default=0)
        self.memory_length = self.max_order

    def _code(self, history, order: int) -> int:
        code = 0
        for lag in range(order, 0, -1):
            code = code * len(self.alphabet) + history.at(lag)
        return code

    def conditional(self, history) -> ConditionalDistribution:
        probs = np.zeros(len(self.alphabet))
        for w, order, table in zip(self.weights, self.orders, self.tables):
            probs += w * table[self._code(history, order)]
        return ConditionalDistribution(self.alphabet, probs)

    def sim_init(self, past: PastSpec, n_runs: int):
        ring = np.empty((n_runs, self.max_order), dtype=np.int64)
        for lag in range(1, self.max_order + 1):
            ring[:, self.max_order - lag] = past.at(lag)
        return _RingState(ring)

    def sim_probs(self, state) -> np.ndarray:
        n_runs = state.ring.shape[0]
        probs = np.zeros((n_runs, len(self.alphabet)))
        base = len(self.alphabet)
        for w, order, table in zip(self.weights, self.orders, self.tables):
            codes = np.zeros(n_runs, dtype=np.int64)
            for lag in range(order, 0, -1):
                codes = codes * base + state.ring[:, -lag]
            probs += w * table[codes]
        return probs

    def sim_advance(self, state, symbols: np.ndarray) -> None:
        if self.max_order > 0:
            state.ring[:, :-1] = state.ring[:, 1:]
            state.ring[:, -1] = symbols

    # -- regularity providers ----------------------------------------------

    def _weight_beyond(self, lag: int) -> float:
        return math.fsum(w for w, k in zip(self.weights, self.orders) if k > lag)

    def oscillation_bounds(self, max_lag: int) -> BoundTable:
        per_lag = []
        for j in range(1, max_lag + 1):
            hi = self._weight_beyond(j - 1)  # components with order >= j
            per_lag.append(Interval(0.0, enclose(hi).hi))
        return BoundTable(
            tuple(per_lag), start=1, tail=Interval.point(0.0), tail_sup=0.0
        )

    def variation_bounds(self, max_lag: int) -> BoundTable:
        per_lag = []
        for j in range(0, max_lag + 1):
            hi = self._weight_beyond(j)
            per_lag.append(Interval(0.0, enclose(hi).hi))
        return BoundTable(
            tuple(per_lag), start=0, tail=Interval.point(0.0), tail_sup=0.0
        )

    def infimum_probability(self) -> Interval:
        mins = [
            math.fsum(w * float(t[:, a].min()) for w, t in zip(self.weights, self.tables))
            for a in range(len(self.alphabet))
        ]
        lo = min(mins)
        witness = self.conditional(PastSpec.constant(0))
        hi = float(witness.probs.min())
        return Interval(enclose(lo).lo, enclose(hi).hi)


class _RingState:
    __slots__ = ("ring",)

    def __init__(self, ring):
        self.ring = ring


# ---------------------------------------------------------------------------
# renewal kernel (hazard of a fresh event given the current gap)


class RenewalKernel(Kernel):
    """Binary kernel where g(1 | x) depends only on the gap since the last 1.

    The gap ell(x) counts the zeros since the most recent event: ell = 0
    when x_{-1} = 1.  Hazards are an explicit prefix, then ``limit`` plus an
    optional analytic tail.  A past with no event at all uses the limit.
    """

    alphabet = (0, 1)

    def __init__(self, prefix, limit: float, tail=None):
        self.prefix = tuple(float(q) for q in prefix)
        self.limit = float(limit)
        self.tail = tail
        if not 0.0 <= self.limit <= 1.0:
            raise NormalizationError("hazard limit must lie in [0, 1]")
        for q in self.prefix:
            if not 0.0 <= q <= 1.0:
                raise NormalizationError(f"hazard {q} outside [0, 1]")
        if tail is not None:
            first = self.limit + tail.value(len(self.prefix))
            if not 0.0 <= first <= 1.0 + 1e-12:
                raise NormalizationError("hazard tail leaves [0, 1]")

    def hazard(self, gap: int) -> float:
        if gap < 0:
            return self.limit
        if gap < len(self.prefix):
            return self.prefix[gap]
        if self.tail is None:
            return self.limit
        return self.limit + self.tail.value(gap)

    def is_monotone(self) -> bool:
        seq = list(self.prefix) + [self.hazard(len(self.prefix) + i) for i in range(4)]
        decreasing = all(a >= b - 1e-15 for a, b in zip(seq, seq[1:]))
        tail_ok = self.tail is None or (
            self.tail.coeff >= 0
            if isinstance(self.tail, (PowerTail, GeometricTail))
            else False
        )
        above = all(q >= self.limit - 1e-15 for q in self.prefix)
        return decreasing and tail_ok and above

    @staticmethod
    def _gap_of_past(past: PastSpec) -> int:
        span = len(past.explicit)
        for lag in range(1, span + 1):
            if past.at(lag) == 1:
                return lag - 1
        if 1 in past.fill:
            for lag in range(span + 1, span + len(past.fill) + 1):
                if past.at(lag) == 1:
                    return lag - 1
        return -1  # no event anywhere in the past

    def _gap(self, history) -> int:
        if isinstance(history, History):
            word = history.word
            for back, s in enumerate(reversed(word)):
                if s == 1:
                    return back
            tail_gap = self._gap_of_past(history.past)
            return -1 if tail_gap < 0 else tail_gap + len(word)
        if isinstance(history, PastSpec):
            return self._gap_of_past(history)
        lag = 1
        while lag <= 100_000:
            if history.at(lag) == 1:
                return lag - 1
            lag += 1
        return -1

    def conditional(self, history) -> ConditionalDistribution:
        q = self.hazard(self._gap(history))
        return ConditionalDistribution(self.alphabet, (1.0 - q, q))

    def sim_init(self, past: PastSpec, n_runs: int):
        return _GapState(np.full(n_runs, self._gap_of_past(past), dtype=np.int64))

    def _hazards(self, gaps: np.ndarray) -> np.ndarray:
        out = np.full(gaps.shape, self.limit)
        if self.prefix:
            head = (gaps >= 0) & (gaps < len(self.prefix))
            out[head] = np.asarray(self.prefix)[gaps[head]]
        if self.tail is not None:
            far = gaps >= len(self.prefix)
            out[far] = self.limit + self.tail.value(gaps[far].astype(float))
        return out

    def sim_probs(self, state) -> np.ndarray:
        q = self._hazards(state.gaps)
        return np.column_stack([1.0 - q, q])

    def sim_advance(self, state, symbols: np.ndarray) -> None:
        renewed = symbols == 1
        state.gaps = np.where(
            renewed, 0, np.where(state.gaps < 0, -1, state.gaps + 1)
        )

    # -- regularity providers ----------------------------------------------
    # Both coefficients reduce to ranges of the hazard sequence: a gap of g
    # is realized by the past 1 0^g, a gap of infinity by the all-zero past,
    # and nothing else about the past matters.  Beyond the hazard prefix the
    # analytic tail has monotone magnitude, so a finite scan closes the sup.

    def _spread(self, g: int) -> float:
        return self.hazard(g) - self.limit

    def _hazard_range_beyond(self, first: int) -> "tuple[float, float]":
        """Exact [min, max] of hazards over gaps >= first plus infinity."""
        end = max(len(self.prefix), first) + 1
        vals = [self.hazard(g) for g in range(first, end + 1)]
        vals.append(self.limit)
        return min(vals), max(vals)

    def oscillation_bounds(self, max_lag: int) -> BoundTable:
        per_lag = []
        for j in range(1, max_lag + 1):
            pivot = self.hazard(j - 1)
            lo_r, hi_r = self._hazard_range_beyond(j)
            per_lag.append(enclose(max(abs(pivot - lo_r), abs(pivot - hi_r))))
        summable = self.tail is None or self.tail.summable
        if self.is_monotone():
            tail = self._spread_tail(max_lag)  # Osc_j = spread(j - 1) exactly
        elif summable:
            tail = Interval(
                0.0, self._abs_spread_tail(max_lag) + self._sup_spread_sum(max_lag + 1)
            )
        else:
            tail = Interval(0.0, math.inf)
        tail_sup = min(1.0, 2.0 * self._sup_spread(max_lag))
        return BoundTable(
            tuple(per_lag), start=1, tail=tail, tail_sup=tail_sup, summable=summable
        )

    def variation_bounds(self, max_lag: int) -> BoundTable:
        per_lag = []
        for j in range(0, max_lag + 1):
            lo_r, hi_r = self._hazard_range_beyond(j)
            per_lag.append(enclose(hi_r - lo_r))
        summable = self.tail is None or self.tail.summable
        if self.is_monotone():
            tail = self._spread_tail(max_lag + 1)  # Var_j = spread(j) exactly
        elif summable:
            tail = Interval(0.0, 2.0 * self._sup_spread_sum(max_lag + 1))
        else:
            tail = Interval(0.0, math.inf)
        lo_r, hi_r = self._hazard_range_beyond(max_lag + 1)
        return BoundTable(
            tuple(per_lag), start=0, tail=tail,
            tail_sup=min(1.0, hi_r - lo_r), summable=summable,
        )

    def _spread_tail(self, first: int) -> Interval:
        """Enclosure of sum_{gap >= first} (hazard(gap) - limit)."""
        head = isum(
            Interval.point(self._spread(g))
            for g in range(first, len(self.prefix))
        )
        if self.tail is None:
            return head
        if not self.tail.summable:
            return Interval(head.lo, math.inf)
        return head + self.tail.tail_sum(max(first, len(self.prefix)))

    def _abs_spread_tail(self, first: int) -> float:
        """Upper bound on sum_{gap >= first} |hazard(gap) - limit|."""
        head = math.fsum(
            abs(self._spread(g)) for g in range(first, len(self.prefix))
        )
        if self.tail is None:
            return head
        start = max(first, len(self.prefix))
        return head + self.tail.magnitude().tail_sum(start).hi

    def _sup_spread(self, first: int) -> float:
        """Upper bound on sup_{g >= first} |spread(g)|."""
        end = len(self.prefix)
        head = max((abs(self._spread(g)) for g in range(first, end)), default=0.0)
        if self.tail is None:
            return head
        return max(head, abs(self.tail.value(max(first, end))))

    def _sup_spread_sum(self, first: int) -> float:
        """Upper bound on sum_{j >= first} sup_{g >= j} |spread(g)|."""
        end = len(self.prefix)
        total = math.fsum(self._sup_spread(j) for j in range(first, end))
        if self.tail is not None:
            start = max(first, end)
            total += self.tail.magnitude().tail_sum(start).hi
        return total

    def infimum_probability(self) -> Interval:
        lo_r, hi_r = self._hazard_range_beyond(0)
        return enclose(min(lo_r, 1.0 - hi_r))


class _GapState:
    __slots__ = ("gaps",)

    def __init__(self, gaps):
        self.gaps = gaps


# ---------------------------------------------------------------------------
# window-average voting kernel


class WindowVoteKernel(Kernel):
    """Kernel on {-1, +1} mixing monotone functions of window averages.

    g(+1 | x) = sum_i weight_i * phi(mean of x over the last window_i
    coordinates) + (1 - eps) * tail_weight.  Windows are odd and strictly
    increasing so the averages never vanish; phi is either the linear ramp
    1/2 + (1/2 - eps) s or the step eps / 1 - eps on the sign of s, both
    mapping [-1, 1] into [eps, 1 - eps].  ``tail_weight`` is the mass of
    dropped long windows pinned at the all-plus value phi(1) = 1 - eps,
    which is how the truncated approximation of a full kernel is expressed
    inside the same family.
    """

    alphabet = (-1, 1)

    def __init__(self, eps: float, weights, windows, phi: str = "linear",
                 tail_weight: float = 0.0):
        self.eps = float(eps)
        self.weights = tuple(float(w) for w in weights)
        self.windows = tuple(int(m) for m in windows)
        self.phi = phi
        self.tail_weight = float(tail_weight)
        if not 0.0 < self.eps < 0.5:
            raise NormalizationError("eps must lie in (0, 1/2)")
        if phi not in ("linear", "step"):
            raise ValueError(f"unknown phi {phi!r}")
        if len(self.weights) != len(self.windows):
            raise NormalizationError("one weight per window")
        if any(w <= 0 for w in self.weights):
            raise NormalizationError("weights must be positive")
        if self.tail_weight < 0:
            raise NormalizationError("tail weight must be nonnegative")
        if abs(sum(self.weights) + self.tail_weight - 1.0) > 1e-12:
            raise NormalizationError("weights plus tail weight must sum to 1")
        if any(m < 1 or m % 2 == 0 for m in self.windows):
            raise NormalizationError("windows must be odd positive integers")
        if any(a >= b for a, b in zip(self.windows, self.windows[1:])):
            raise NormalizationError("windows must be strictly increasing")
        self.memory_length = max(self.windows)

    def _phi(self, s):
        if self.phi == "linear":
            return 0.5 + (0.5 - self.eps) * s
        return np.where(s > 0, 1.0 - self.eps, np.where(s < 0, self.eps, 0.5))

    def up_probability(self, history) -> float:
        total = (1.0 - self.eps) * self.tail_weight
        for w, m in zip(self.weights, self.windows):
            s = math.fsum(history.at(lag) for lag in range(1, m + 1)) / m
            total += w * float(self._phi(s))
        return total

    def conditional(self, history) -> ConditionalDistribution:
        p_up = self.up_probability(history)
        return ConditionalDistribution(self.alphabet, (1.0 - p_up, p_up))

    def sim_init(self, past: PastSpec, n_runs: int):
        m_max = self.windows[-1] if self.windows else 1
        ring = np.empty((n_runs, m_max))
        for lag in range(1, m_max + 1):
            ring[:, m_max - lag] = past.at(lag)
        return _RingState(ring)

    def sim_probs(self, state) -> np.ndarray:
        p_up = np.full(state.ring.shape[0], (1.0 - self.eps) * self.tail_weight)
        for w, m in zip(self.weights, self.windows):
            s = state.ring[:, -m:].sum(axis=1) / m
            p_up += w * self._phi(s)
        return np.column_stack([1.0 - p_up, p_up])

    def sim_advance(self, state, symbols: np.ndarray) -> None:
        state.ring[:, :-1] = state.ring[:, 1:]
        state.ring[:, -1] = symbols.astype(float)

    def truncated(self, keep: int) -> "WindowVoteKernel":
        """Drop all but the first ``keep`` windows, pinning their mass at
        the all-plus value.  Memory shrinks to windows[keep - 1]."""
        if not 0 < keep <= len(self.windows):
            raise ValueError(f"keep must be in 1..{len(self.windows)}")
        dropped = math.fsum(self.weights[keep:])
        return WindowVoteKernel(
            self.eps,
            self.weights[:keep],
            self.windows[:keep],
            phi=self.phi,
            tail_weight=self.tail_weight + dropped,
        )

    # -- regularity providers ----------------------------------------------

    def _osc_value(self, lag: int) -> float:
        gain = 1.0 - 2.0 * self.eps
        if self.phi == "linear":
            return gain * math.fsum(
                w / m for w, m in zip(self.weights, self.windows) if m >= lag
            )
        return gain * math.fsum(
            w for w, m in zip(self.weights, self.windows) if m >= lag
        )

    def _var_value(self, lag: int) -> float:
        gain = 1.0 - 2.0 * self.eps
        if self.phi == "linear":
            return gain * math.fsum(
                w * (m - lag) / m
                for w, m in zip(self.weights, self.windows)
                if m > lag
            )
        return gain * math.fsum(
            w for w, m in zip(self.weights, self.windows) if m > lag
        )

    def oscillation_bounds(self, max_lag: int) -> BoundTable:
        per_lag = [enclose(self._osc_value(j)) for j in range(1, max_lag + 1)]
        return BoundTable(tuple(per_lag), start=1, tail=Interval.point(0.0), tail_sup=0.0)

    def variation_bounds(self, max_lag: int) -> BoundTable:
        exact = self.phi == "linear"
        per_lag = []
        for j in range(0, max_lag + 1):
            v = enclose(self._var_value(j))
            per_lag.append(v if exact else Interval(0.0, v.hi))
        return BoundTable(tuple(per_lag), start=0, tail=Interval.point(0.0), tail_sup=0.0)

    def infimum_probability(self) -> Interval:
        return enclose(self.eps)


# ---------------------------------------------------------------------------
# generic finite-memory freeze of an arbitrary kernel


class _SplicedHistory:
    """History that reads the inner history up to ``window`` lags, then a
    fixed replacement past beyond it."""

    __slots__ = ("inner", "window", "beyond")

    def __init__(self, inner, window: int, beyond: PastSpec):
        self.inner = inner
        self.window = window
        self.beyond = beyond

    def at(self, lag: int) -> int:
        if lag <= self.window:
            return self.inner.at(lag)
        return self.beyond.at(lag - self.window)


class _ContextHistory:
    __slots__ = ("context",)

    def __init__(self, context):
        self.context = context  # most recent last

    def at(self, lag: int) -> int:
        return self.context[-lag]


class FrozenTailKernel(Kernel):
    """Markov approximation of ``base``: keep ``window`` real coordinates,
    replace everything older with the fixed past ``beyond``."""

    def __init__(self, base: Kernel, window: int, beyond: PastSpec):
        if window < 1:
            raise ValueError("window must be >= 1")
        self.base = base
        self.window = int(window)
        self.beyond = beyond
        self.alphabet = base.alphabet
        self.memory_length = self.window

    def conditional(self, history) -> ConditionalDistribution:
        return self.base.conditional(_SplicedHistory(history, self.window, self.beyond))

    def sim_init(self, past: PastSpec, n_runs: int):
        if not self.is_finite:
            return super().sim_init(past, n_runs)
        ring = np.empty((n_runs, self.window), dtype=np.int64)
        index = {s: i for i, s in enumerate(self.alphabet)}
        for lag in range(1, self.window + 1):
            ring[:, self.window - lag] = index[past.at(lag)]
        return _FrozenState(ring)

    def sim_probs(self, state) -> np.ndarray:
        if not self.is_finite:
            return super().sim_probs(state)
        base_n = len(self.alphabet)
        codes = np.zeros(state.ring.shape[0], dtype=np.int64)
        for col in range(state.ring.shape[1]):
            codes = codes * base_n + state.ring[:, col]
        rows = np.empty((len(codes), base_n))
        fresh = np.unique(codes)
        for code in fresh.tolist():
            if code not in state.cache:
                digits = []
                c = code
                for _ in range(self.window):
                    digits.append(self.alphabet[c % base_n])
                    c //= base_n
                context = tuple(reversed(digits))  # most recent last
                dist = self.conditional(_ContextHistory(context))
                state.cache[code] = np.array(
                    [dist.prob_of(s) for s in self.alphabet]
                )
            rows[codes == code] = state.cache[code]
        return rows

    def sim_advance(self, state, symbols: np.ndarray) -> None:
        if not self.is_finite:
            super().sim_advance(state, symbols)
            return
        idx = np.searchsorted(np.asarray(self.alphabet), symbols)
        state.ring[:, :-1] = state.ring[:, 1:]
        state.ring[:, -1] = idx

    # freezes only remove variability, so the base upper bounds carry over
    def oscillation_bounds(self, max_lag: int) -> BoundTable:
        if max_lag < self.window:
            raise ValueError("max_lag must reach the approximation window")
        base = self.base.oscillation_bounds(max_lag)
        per_lag = tuple(
            Interval(0.0, b.hi) if (j + 1) <= self.window else Interval.point(0.0)
            for j, b in enumerate(base.per_lag)
        )
        return BoundTable(per_lag, start=1, tail=Interval.point(0.0), tail_sup=0.0)

    def variation_bounds(self, max_lag: int) -> BoundTable:
        if max_lag < self.window:
            raise ValueError("max_lag must reach the approximation window")
        base = self.base.variation_bounds(max_lag)
        per_lag = tuple(
            Interval(0.0, b.hi) if j < self.window else Interval.point(0.0)
            for j, b in enumerate(base.per_lag)
        )
        return BoundTable(per_lag, start=0, tail=Interval.point(0.0), tail_sup=0.0)

    def infimum_probability(self) -> Interval:
        base = self.base.infimum_probability()
        return Interval(base.lo, 1.0)


class _FrozenState:
    __slots__ = ("ring", "cache")

    def __init__(self, ring):
        self.ring = ring
        self.cache = {}


def markov_approximation(base: Kernel, window: int, beyond: PastSpec) -> Kernel:
    """The order-``window`` Markov kernel that freezes the far past of ``base``."""
    return FrozenTailKernel(base, window, beyond)


# ---------------------------------------------------------------------------
# stationary laws of finite-order chains (references for the empirical checks)


def stationary_distribution(matrix: np.ndarray) -> np.ndarray:
    """The stationary row vector of an irreducible stochastic matrix.

    Solves pi (Q - I) = 0 with the normalization row appended; raises if
    the solution is not a proper distribution (reducible or periodic input
    can produce one all the same, so only degenerate failures surface).
    """
    q = np.asarray(matrix, dtype=float)
    n = q.shape[0]
    a = np.vstack([q.T - np.eye(n), np.ones(n)])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(a, b, rcond=None)
    if np.any(pi < -1e-10) or abs(pi.sum() - 1.0) > 1e-9:
        raise NoStationaryMeasureError(f"no proper stationary vector: {pi}")
    return np.clip(pi, 0.0, None) / pi.sum()


def markov_blocks(matrix: np.ndarray, k: int) -> np.ndarray:
    """Stationary k-block masses of a one-step chain, indexed by word code.

    The code reads the block with its first (oldest) symbol as the most
    significant base-A digit, matching the block-count encoding.
    """
    q = np.asarray(matrix, dtype=float)
    n = q.shape[0]
    pi = stationary_distribution(q)
    masses = pi.copy()
    for _ in range(k - 1):
        last = np.arange(len(masses)) % n
        masses = (masses[:, None] * q[last]).ravel()
    return masses


def iid_blocks(probs, k: int) -> np.ndarray:
    """Product-measure k-block masses for an i.i.d. law, by word code."""
    p = np.asarray(probs, dtype=float)
    masses = p.copy()
    for _ in range(k - 1):
        masses = (masses[:, None] * p[None, :]).ravel()
    return masses
