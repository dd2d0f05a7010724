"""Path observables with certified per-coordinate sensitivity vectors.

An observable evaluates words of a fixed window length and carries an upper
bound delta[j] on how much its value can move when coordinate j alone
changes.  The squared 2-norm of that vector is what the Gaussian moment and
deviation bounds consume, so every builder here documents where its vector
comes from: exact arithmetic, a declared inequality, or brute enumeration.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import IntractableError


@dataclass(frozen=True)
class Observable:
    """A function of ``window`` consecutive symbols plus its delta vector.

    ``fn`` maps an integer array of shape (runs, window) to a float vector
    of length runs.  ``provenance`` records whether ``delta`` is exact,
    a declared upper bound, or enumerated after the fact.
    """

    window: int
    fn: "callable"
    delta: np.ndarray
    provenance: str = "declared"
    name: str = ""

    def __post_init__(self):
        object.__setattr__(
            self, "delta", np.asarray(self.delta, dtype=float).reshape(-1)
        )
        if len(self.delta) != self.window:
            raise ValueError(
                f"delta vector has {len(self.delta)} entries for window {self.window}"
            )
        if np.any(self.delta < 0) or not np.all(np.isfinite(self.delta)):
            raise ValueError("delta entries must be finite and nonnegative")

    def __call__(self, paths: np.ndarray) -> np.ndarray:
        paths = np.asarray(paths)
        squeeze = paths.ndim == 1
        if squeeze:
            paths = paths[None, :]
        if paths.shape[1] < self.window:
            raise ValueError(
                f"paths of length {paths.shape[1]} cannot fill window {self.window}"
            )
        values = np.asarray(self.fn(paths[:, : self.window]), dtype=float)
        return float(values[0]) if squeeze else values

    @property
    def norm2_sq(self) -> float:
        return float(np.dot(self.delta, self.delta))

    @property
    def norm1(self) -> float:
        return float(self.delta.sum())

    @property
    def norm_inf(self) -> float:
        return float(self.delta.max())

    @property
    def range_bound(self) -> float:
        """Coordinatewise telescoping bounds the total spread by sum(delta)."""
        return self.norm1


def weighted_sum(weights, symbol: int = 1, name: str = "") -> Observable:
    """f = sum_j w_j 1{omega_j = symbol}; delta_j = |w_j| exactly."""
    w = np.asarray(weights, dtype=float)
    sym = int(symbol)

    def fn(paths: np.ndarray) -> np.ndarray:
        return (paths == sym) @ w

    return Observable(
        window=len(w),
        fn=fn,
        delta=np.abs(w),
        provenance="exact",
        name=name or f"weighted_sum[{len(w)}]",
    )


def window_cover_counts(window: int, k: int) -> np.ndarray:
    """cover[j] = number of length-k sliding blocks that contain coordinate j."""
    if not 1 <= k <= window:
        raise ValueError(f"block length {k} does not fit window {window}")
    n = window - 1
    j = np.arange(window)
    return np.minimum(j, n - k + 1) - np.maximum(0, j - k + 1) + 1


def _block_codes(paths: np.ndarray, k: int, n_symbols: int) -> np.ndarray:
    """Encode each sliding k-block as an integer, oldest symbol leading."""
    n_runs, width = paths.shape
    m = width - k + 1
    powers = n_symbols ** np.arange(k - 1, -1, -1)
    codes = np.zeros((n_runs, m), dtype=np.int64)
    for off in range(k):
        codes += paths[:, off : off + m] * powers[off]
    return codes


def block_counts(paths: np.ndarray, k: int, n_symbols: int) -> np.ndarray:
    """Sliding-window pattern counts per run, shape (runs, n_symbols**k)."""
    paths = np.atleast_2d(np.asarray(paths))
    codes = _block_codes(paths, k, n_symbols)
    n_runs, m = codes.shape
    flat = (codes + (n_symbols**k) * np.arange(n_runs)[:, None]).ravel()
    counts = np.bincount(flat, minlength=n_runs * n_symbols**k)
    return counts.reshape(n_runs, n_symbols**k)


def pattern_code(pattern, n_symbols: int) -> int:
    code = 0
    for s in pattern:
        s = int(s)
        if not 0 <= s < n_symbols:
            raise ValueError(f"symbol {s} outside 0..{n_symbols - 1}")
        code = code * n_symbols + s
    return code


@dataclass(frozen=True)
class EmpiricalBlockLaw:
    """Sliding-window block frequencies of one path.

    ``counts[c]`` counts the occurrences of the pattern encoded by c among
    the ``n - k + 2`` windows of a path on coordinates 0..n.
    """

    k: int
    n: int
    n_symbols: int
    counts: np.ndarray

    @property
    def normalizer(self) -> int:
        return self.n - self.k + 2

    def frequency(self, pattern) -> float:
        return float(
            self.counts[pattern_code(pattern, self.n_symbols)] / self.normalizer
        )

    def frequencies(self) -> np.ndarray:
        return self.counts / self.normalizer

    def as_dict(self) -> dict:
        out = {}
        for code, count in enumerate(self.counts):
            if count:
                word = []
                c = int(code)
                for _ in range(self.k):
                    c, digit = divmod(c, self.n_symbols)
                    word.append(digit)
                out[tuple(reversed(word))] = int(count)
        return out


def empirical_blocks(path: np.ndarray, k: int, n_symbols: int) -> EmpiricalBlockLaw:
    """Count the k-blocks of one path on coordinates 0..n."""
    path = np.asarray(path).reshape(-1)
    n = len(path) - 1
    if k > n + 1:
        raise ValueError(f"block length {k} exceeds path length {n + 1}")
    counts = block_counts(path[None, :], k, n_symbols)[0]
    law = EmpiricalBlockLaw(k=k, n=n, n_symbols=n_symbols, counts=counts)
    assert counts.sum() == law.normalizer
    return law


def block_frequency(pattern, window: int, n_symbols: int, name: str = "") -> Observable:
    """f = sliding frequency of ``pattern`` among the window's k-blocks.

    delta_j = cover_j / (n - k + 2): changing coordinate j can flip exactly
    the windows that contain it, no others.
    """
    pattern = tuple(int(s) for s in pattern)
    k = len(pattern)
    code = pattern_code(pattern, n_symbols)
    norm = window - k + 1

    def fn(paths: np.ndarray) -> np.ndarray:
        codes = _block_codes(paths, k, n_symbols)
        return (codes == code).sum(axis=1) / norm

    return Observable(
        window=window,
        fn=fn,
        delta=window_cover_counts(window, k) / norm,
        provenance="exact",
        name=name or f"block_freq{pattern}",
    )


def sup_block_deviation(
    reference: np.ndarray, k: int, window: int, n_symbols: int, name: str = ""
) -> Observable:
    """f = max over patterns of |empirical frequency - reference|.

    ``reference`` is indexed by pattern code and must sum to one.  The
    delta vector is the same cover-based one as for a single pattern: one
    coordinate change moves every pattern's count by at most the number of
    windows containing it, and the sup moves by no more than the largest
    single change.
    """
    ref = np.asarray(reference, dtype=float).reshape(-1)
    if len(ref) != n_symbols**k:
        raise ValueError(f"reference must list all {n_symbols**k} pattern masses")
    if abs(ref.sum() - 1.0) > 1e-9:
        raise ValueError(f"reference masses sum to {ref.sum()!r}")
    norm = window - k + 1

    def fn(paths: np.ndarray) -> np.ndarray:
        counts = block_counts(paths, k, n_symbols)
        return np.abs(counts / norm - ref).max(axis=1)

    return Observable(
        window=window,
        fn=fn,
        delta=window_cover_counts(window, k) / norm,
        provenance="exact",
        name=name or f"sup_dev[k={k}]",
    )


def birkhoff_sum(local: Observable, n_terms: int, name: str = "") -> Observable:
    """f = sum of ``local`` over ``n_terms`` shifted windows.

    The path window grows to n_terms + w - 1; delta is the convolution of
    the local vector with a box of ones, an upper bound via the triangle
    inequality (exact when the local deltas are achieved with one sign).
    """
    if n_terms < 1:
        raise ValueError("need at least one term")
    w = local.window

    def fn(paths: np.ndarray) -> np.ndarray:
        total = np.zeros(len(paths))
        for i in range(n_terms):
            total += local.fn(paths[:, i : i + w])
        return total

    return Observable(
        window=n_terms + w - 1,
        fn=fn,
        delta=np.convolve(local.delta, np.ones(n_terms)),
        provenance="declared",
        name=name or f"birkhoff[{local.name or 'phi'}x{n_terms}]",
    )


def tabulated(values, window: int, n_symbols: int, name: str = "") -> Observable:
    """Observable from a full value table indexed by word code.

    The delta vector comes straight off the table (largest spread along
    each coordinate axis), so it is exact by construction.
    """
    table = np.asarray(values, dtype=float).reshape(-1)
    if len(table) != n_symbols**window:
        raise ValueError(
            f"table needs {n_symbols**window} entries, got {len(table)}"
        )
    grid = table.reshape((n_symbols,) * window)
    delta = [
        float((grid.max(axis=j) - grid.min(axis=j)).max()) for j in range(window)
    ]

    def fn(paths: np.ndarray) -> np.ndarray:
        codes = _block_codes(paths, window, n_symbols)[:, 0]
        return table[codes]

    return Observable(
        window=window,
        fn=fn,
        delta=delta,
        provenance="enumerated",
        name=name or f"table[{window}]",
    )


ENUMERATION_BUDGET = 10**6


def exact_deltas(obs: Observable, n_symbols: int) -> np.ndarray:
    """Brute-force per-coordinate oscillations over every word in the window.

    Evaluates the observable on all n_symbols**window words and takes, for
    each coordinate, the largest spread across words differing only there.
    """
    total = n_symbols**obs.window
    if total > ENUMERATION_BUDGET:
        raise IntractableError(
            f"{total} words exceed the enumeration budget {ENUMERATION_BUDGET}"
        )
    words = np.array(
        list(itertools.product(range(n_symbols), repeat=obs.window)), dtype=np.int64
    )
    values = obs(words)
    grid = values.reshape((n_symbols,) * obs.window)
    out = np.empty(obs.window)
    for j in range(obs.window):
        out[j] = float((grid.max(axis=j) - grid.min(axis=j)).max())
    return out
