"""Co-trading scores and daily co-trading matrices.

Two trades co-occur when their timestamps are strictly within ``delta_ns`` of
each other (open interval). For a symbol pair the windowed pair count is
normalized by the geometric mean of the two tapes' activity, giving a score
that is invariant to rescaling both activity levels. A volume variant weights
co-occurrences by executed quantity instead of counting them.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

from .trade_model import TradeTape

__all__ = [
    "CoTradingMatrix",
    "count_cross_cooccurrences",
    "sum_cross_quantities",
    "cotrading_score",
    "build_daily_matrix",
    "aggregate_matrices",
]

DEFAULT_DELTA_NS = 500_000_000  # 500 ms

_DIRECTIONS = ("buy", "sell", "all")
_MEASURES = ("count", "volume")


@dataclass(frozen=True)
class CoTradingMatrix:
    """Symmetric non-negative co-trading score matrix for one day or period.

    ``within_sector`` is only populated on sector meta-networks, where the
    matrix rows are sectors and the diagonal convention (zero) would
    otherwise discard the within-sector mean.
    """

    label: str
    values: np.ndarray
    delta_ns: int
    direction_pair: tuple[str, str] = ("all", "all")
    measure: str = "count"
    symbols: tuple[int | str, ...] | None = None
    within_sector: np.ndarray | None = None

    def __post_init__(self) -> None:
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", v)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("values must be a square matrix")
        if not np.all(np.isfinite(v)):
            raise ValueError("matrix entries must be finite")
        if np.any(v < 0):
            raise ValueError("matrix entries must be non-negative")
        if not np.array_equal(v, v.T):
            raise ValueError("matrix must be symmetric")
        if np.any(np.diagonal(v) != 0):
            raise ValueError("diagonal must be zero by convention")
        if self.delta_ns <= 0:
            raise ValueError("delta_ns must be positive")
        for d in self.direction_pair:
            if d not in _DIRECTIONS:
                raise ValueError(f"direction must be one of {_DIRECTIONS}, got {d!r}")
        if self.measure not in _MEASURES:
            raise ValueError(f"measure must be one of {_MEASURES}, got {self.measure!r}")
        if self.symbols is not None:
            object.__setattr__(self, "symbols", tuple(self.symbols))
            if len(self.symbols) != v.shape[0]:
                raise ValueError("symbols must align with matrix rows")

    @property
    def n(self) -> int:
        return int(self.values.shape[0])


@njit(cache=True, nogil=True)
def _window_count(anchor: np.ndarray, other: np.ndarray, delta: np.int64) -> np.int64:
    # Two-pointer sweep over both sorted arrays: O(len(anchor) + len(other)).
    lo = 0
    hi = 0
    m = other.size
    total = np.int64(0)
    for k in range(anchor.size):
        t = anchor[k]
        while lo < m and other[lo] <= t - delta:
            lo += 1
        if hi < lo:
            hi = lo
        while hi < m and other[hi] < t + delta:
            hi += 1
        total += hi - lo
    return total


@njit(cache=True, nogil=True)
def _window_qty_sum(anchor: np.ndarray, other: np.ndarray,
                    other_qty_prefix: np.ndarray, delta: np.int64) -> np.int64:
    # Same sweep, summing quantities of the co-occurring trades via a prefix
    # sum (other_qty_prefix[i] = sum of quantities before index i).
    lo = 0
    hi = 0
    m = other.size
    total = np.int64(0)
    for k in range(anchor.size):
        t = anchor[k]
        while lo < m and other[lo] <= t - delta:
            lo += 1
        if hi < lo:
            hi = lo
        while hi < m and other[hi] < t + delta:
            hi += 1
        total += other_qty_prefix[hi] - other_qty_prefix[lo]
    return total


def _times(tape_or_times: TradeTape | np.ndarray) -> np.ndarray:
    if isinstance(tape_or_times, TradeTape):
        return tape_or_times.timestamps
    ts = np.ascontiguousarray(tape_or_times, dtype=np.int64)
    if ts.ndim != 1:
        raise ValueError("timestamps must be one-dimensional")
    if ts.size and np.any(ts[1:] < ts[:-1]):
        raise ValueError("timestamps must be sorted non-decreasing")
    return ts


def count_cross_cooccurrences(
    tape_i: TradeTape | np.ndarray,
    tape_j: TradeTape | np.ndarray,
    delta_ns: int,
) -> tuple[int, int]:
    """Windowed pair counts (L_i_to_j, L_j_to_i) for two sorted tapes.

    L_j_to_i anchors on tape_i's trades and counts tape_j trades strictly
    inside each open window (t - delta_ns, t + delta_ns); L_i_to_j swaps the
    roles. Symmetric windows make the two counts equal; both are computed.
    """
    if delta_ns <= 0:
        raise ValueError("delta_ns must be positive")
    ti = _times(tape_i)
    tj = _times(tape_j)
    d = np.int64(delta_ns)
    l_i_to_j = int(_window_count(tj, ti, d))  # anchored on j, counting i
    l_j_to_i = int(_window_count(ti, tj, d))  # anchored on i, counting j
    return l_i_to_j, l_j_to_i


def _qty_prefix(tape: TradeTape) -> np.ndarray:
    pref = np.zeros(len(tape) + 1, dtype=np.int64)
    np.cumsum(tape.quantities, out=pref[1:])
    return pref


def sum_cross_quantities(
    tape_i: TradeTape, tape_j: TradeTape, delta_ns: int
) -> tuple[int, int]:
    """Windowed quantity sums (V_i_to_j, V_j_to_i).

    V_j_to_i anchors on tape_i's trades and sums the quantities of tape_j
    trades strictly inside each window.
    """
    if delta_ns <= 0:
        raise ValueError("delta_ns must be positive")
    d = np.int64(delta_ns)
    v_i_to_j = int(_window_qty_sum(tape_j.timestamps, tape_i.timestamps, _qty_prefix(tape_i), d))
    v_j_to_i = int(_window_qty_sum(tape_i.timestamps, tape_j.timestamps, _qty_prefix(tape_j), d))
    return v_i_to_j, v_j_to_i


def cotrading_score(
    tape_i: TradeTape,
    tape_j: TradeTape,
    delta_ns: int,
    measure: str = "count",
) -> float:
    """Normalized co-trading score for a symbol pair.

    count:  (L_i_to_j + L_j_to_i) / sqrt(|S_i| * |S_j|)
    volume: (V_i_to_j + V_j_to_i) / sqrt(sum q_i * sum q_j)

    Empty tapes (or zero total volume) give a score of 0. Tapes should be
    pre-filtered by direction when a directed variant is wanted.
    """
    if measure == "count":
        n_i, n_j = len(tape_i), len(tape_j)
        if n_i == 0 or n_j == 0:
            return 0.0
        l_ij, l_ji = count_cross_cooccurrences(tape_i, tape_j, delta_ns)
        return (l_ij + l_ji) / float(np.sqrt(float(n_i) * float(n_j)))
    if measure == "volume":
        q_i, q_j = tape_i.total_quantity, tape_j.total_quantity
        if q_i == 0 or q_j == 0:
            return 0.0
        v_ij, v_ji = sum_cross_quantities(tape_i, tape_j, delta_ns)
        return (v_ij + v_ji) / float(np.sqrt(float(q_i) * float(q_j)))
    raise ValueError(f"measure must be one of {_MEASURES}, got {measure!r}")


def build_daily_matrix(
    tapes: Sequence[TradeTape],
    delta_ns: int = DEFAULT_DELTA_NS,
    direction_i: str = "all",
    direction_j: str = "all",
    measure: str = "count",
    threads: int = 1,
) -> CoTradingMatrix:
    """All-pairs co-trading matrix for one day.

    Row order follows the input tape order. Entry (i, j) for i < j scores
    tape i filtered by ``direction_i`` against tape j filtered by
    ``direction_j``; the matrix is symmetric by construction and the diagonal
    is zero. With ``threads > 1`` pairs are scored concurrently (results are
    identical to the sequential run).
    """
    if direction_i not in _DIRECTIONS or direction_j not in _DIRECTIONS:
        raise ValueError(f"directions must be one of {_DIRECTIONS}")
    if not tapes:
        raise ValueError("need at least one tape")
    days = {t.day for t in tapes}
    if len(days) != 1:
        raise ValueError(f"tapes span multiple days: {sorted(map(str, days))}")
    symbols = [t.symbol for t in tapes]
    if len(set(symbols)) != len(symbols):
        raise ValueError("duplicate symbol in input tapes")

    n = len(tapes)
    side_i = [t.filtered(direction_i) for t in tapes]
    side_j = side_i if direction_j == direction_i else [t.filtered(direction_j) for t in tapes]
    values = np.zeros((n, n), dtype=np.float64)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]

    def score_pair(pair: tuple[int, int]) -> None:
        i, j = pair
        s = cotrading_score(side_i[i], side_j[j], delta_ns, measure)
        values[i, j] = s
        values[j, i] = s

    if threads > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(score_pair, pairs))
    else:
        for pair in pairs:
            score_pair(pair)

    return CoTradingMatrix(
        label=tapes[0].day.isoformat(),
        values=values,
        delta_ns=delta_ns,
        direction_pair=(direction_i, direction_j),
        measure=measure,
        symbols=tuple(symbols),
    )


def aggregate_matrices(matrices: Sequence[CoTradingMatrix]) -> CoTradingMatrix:
    """Elementwise arithmetic mean of per-day matrices over a period.

    All inputs must agree on shape, delta, directions, and measure. The
    period label covers the input range.
    """
    if not matrices:
        raise ValueError("cannot aggregate an empty list of matrices")
    first = matrices[0]
    for m in matrices[1:]:
        if m.values.shape != first.values.shape:
            raise ValueError("matrix shape mismatch")
        if m.delta_ns != first.delta_ns:
            raise ValueError("delta_ns mismatch")
        if m.direction_pair != first.direction_pair:
            raise ValueError("direction_pair mismatch")
        if m.measure != first.measure:
            raise ValueError("measure mismatch")
        if m.symbols != first.symbols:
            raise ValueError("symbol ordering mismatch")
    stack = np.stack([m.values for m in matrices])
    mean = stack.mean(axis=0)
    np.fill_diagonal(mean, 0.0)
    label = first.label if len(matrices) == 1 else f"{matrices[0].label}..{matrices[-1].label}"
    return CoTradingMatrix(
        label=label,
        values=mean,
        delta_ns=first.delta_ns,
        direction_pair=first.direction_pair,
        measure=first.measure,
        symbols=first.symbols,
    )
