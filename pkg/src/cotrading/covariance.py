"""Intraday realized covariance and its cluster-structured shrinkage.

Per-day return panels on a fixed intraday grid feed an uncentered realized
covariance (sum of outer products over the grid). Its eigendecomposition is
split into a low-rank systematic part and a residual; zeroing residual
entries across clusters yields a block-diagonal residual whose sum with the
systematic part stays positive definite whenever every cluster is smaller
than the rank of the raw estimate.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .clustering import Partition

__all__ = [
    "ReturnPanel",
    "CovarianceEstimate",
    "FactorSplit",
    "grid_log_returns",
    "open_close_returns",
    "realized_covariance",
    "factor_split",
    "block_threshold",
    "estimate_cluster_covariance",
]

_PIVOT_TOL = 1e-12


@dataclass(frozen=True)
class ReturnPanel:
    """N x m panel of grid log returns for one day.

    The grid holds the left endpoints of the m sampling intervals; m is
    exactly (close - open) / delta. ``backfilled`` lists the row indices
    whose return computation had to fall back to the first available
    observation for lookups before the series began.
    """

    grid: np.ndarray  # int64 ns, left endpoints
    returns: np.ndarray  # N x m float64
    open_ns: int
    close_ns: int
    delta_ns: int
    symbols: tuple[int | str, ...] | None = None
    label: str | None = None
    backfilled: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        g = np.ascontiguousarray(self.grid, dtype=np.int64)
        r = np.ascontiguousarray(self.returns, dtype=np.float64)
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "returns", r)
        object.__setattr__(self, "backfilled", tuple(int(i) for i in self.backfilled))
        if self.open_ns >= self.close_ns:
            raise ValueError("open must precede close")
        if self.delta_ns <= 0:
            raise ValueError("delta_ns must be positive")
        span = self.close_ns - self.open_ns
        if span % self.delta_ns != 0:
            raise ValueError("delta must divide the session length exactly")
        m = span // self.delta_ns
        if g.ndim != 1 or g.size != m:
            raise ValueError(f"grid must hold m = {m} left endpoints")
        expected = self.open_ns + self.delta_ns * np.arange(m, dtype=np.int64)
        if not np.array_equal(g, expected):
            raise ValueError("grid must be open, open+delta, ..., close-delta")
        if r.ndim != 2 or r.shape[1] != m:
            raise ValueError(f"returns must be N x {m}")
        if not np.all(np.isfinite(r)):
            raise ValueError("returns must be finite")
        if self.symbols is not None:
            object.__setattr__(self, "symbols", tuple(self.symbols))
            if len(self.symbols) != r.shape[0]:
                raise ValueError("symbols must align with panel rows")

    @property
    def n(self) -> int:
        return int(self.returns.shape[0])

    @property
    def m(self) -> int:
        return int(self.returns.shape[1])


@dataclass(frozen=True)
class CovarianceEstimate:
    """Symmetric covariance estimate plus diagnostics.

    ``kind`` is "realized" for the raw summed-outer-product estimate,
    "factor_block" for the cluster-structured one, and "population" for an
    exactly known matrix (synthetic truth). The condition number is
    the eigenvalue ratio (infinite when the smallest eigenvalue is not
    strictly positive); positive definiteness is decided by a Cholesky
    attempt with pivot tolerance 1e-12.
    """

    values: np.ndarray
    kind: str
    condition_number: float
    positive_definite: bool
    k_factors: int | None = None
    label: str | None = None
    symbols: tuple[int | str, ...] | None = None

    def __post_init__(self) -> None:
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", v)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("covariance must be square")
        if not np.all(np.isfinite(v)):
            raise ValueError("covariance entries must be finite")
        if not np.allclose(v, v.T, rtol=0.0, atol=0.0):
            raise ValueError("covariance must be symmetric")
        if self.kind not in ("realized", "factor_block", "population"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.symbols is not None:
            object.__setattr__(self, "symbols", tuple(self.symbols))
            if len(self.symbols) != v.shape[0]:
                raise ValueError("symbols must align with matrix rows")

    @property
    def n(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True)
class FactorSplit:
    """Eigendecomposition split sigma = factor + idio at a given k."""

    factor: np.ndarray
    idio: np.ndarray
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns aligned with eigenvalues


def is_positive_definite(matrix: np.ndarray, pivot_tol: float = _PIVOT_TOL) -> bool:
    """Cholesky-based PD check: all pivots must exceed ``pivot_tol``."""
    try:
        factor = np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError:
        return False
    pivots = np.square(np.diagonal(factor))
    return bool(pivots.min() > pivot_tol)


def condition_number(matrix: np.ndarray) -> float:
    """Eigenvalue ratio lambda_max / lambda_min; +inf if lambda_min <= 0."""
    eigvals = np.linalg.eigvalsh(matrix)
    smallest, largest = float(eigvals[0]), float(eigvals[-1])
    if smallest <= 0.0:
        return math.inf
    return largest / smallest


def _last_at_or_before(times: np.ndarray, values: np.ndarray, t: int) -> tuple[float, bool]:
    """Value of the last observation at or before t.

    Falls back to the first observation (flagged) when the series starts
    after t.
    """
    pos = int(np.searchsorted(times, t, side="right")) - 1
    if pos < 0:
        return float(values[0]), True
    return float(values[pos]), False


def grid_log_returns(
    midprice_series: Sequence[tuple[np.ndarray, np.ndarray]],
    open_ns: int,
    close_ns: int,
    delta_ns: int,
    symbols: Sequence[int] | None = None,
    label: str | None = None,
) -> ReturnPanel:
    """Log returns on the fixed grid of interval left endpoints.

    Each series is (times, midprices), time-sorted with strictly positive
    prices. The slot at left endpoint t holds the return over [t, t + delta],
    log P(t + delta) - log P(t), with P(.) the last observation at or before
    the lookup time; lookups before the first observation use the first
    observation and flag the symbol as backfilled. Row sums therefore
    telescope to the open-to-close log return.
    """
    if open_ns >= close_ns:
        raise ValueError("open must precede close")
    if delta_ns <= 0:
        raise ValueError("delta_ns must be positive")
    if (close_ns - open_ns) % delta_ns != 0:
        raise ValueError("delta must divide the session length exactly")
    m = (close_ns - open_ns) // delta_ns
    grid = open_ns + delta_ns * np.arange(m, dtype=np.int64)

    rows = []
    backfilled = []
    for i, (times, prices) in enumerate(midprice_series):
        t_arr = np.ascontiguousarray(times, dtype=np.int64)
        p_arr = np.ascontiguousarray(prices, dtype=np.float64)
        if t_arr.ndim != 1 or t_arr.size != p_arr.size:
            raise ValueError(f"series {i}: times and prices must align")
        if t_arr.size == 0:
            raise ValueError(f"series {i}: no observations")
        if np.any(t_arr[1:] < t_arr[:-1]):
            raise ValueError(f"series {i}: times must be sorted")
        if np.any(p_arr <= 0) or not np.all(np.isfinite(p_arr)):
            raise ValueError(f"series {i}: prices must be positive and finite")
        used_backfill = False
        logp = np.log(p_arr)
        row = np.empty(m, dtype=np.float64)
        for j, t in enumerate(grid):
            p_end, bf_end = _last_at_or_before(t_arr, logp, int(t) + delta_ns)
            p_start, bf_start = _last_at_or_before(t_arr, logp, int(t))
            used_backfill = used_backfill or bf_end or bf_start
            row[j] = p_end - p_start
        rows.append(row)
        if used_backfill:
            backfilled.append(i)

    return ReturnPanel(
        grid=grid,
        returns=np.vstack(rows) if rows else np.zeros((0, m)),
        open_ns=open_ns,
        close_ns=close_ns,
        delta_ns=delta_ns,
        symbols=tuple(symbols) if symbols is not None else None,
        label=label,
        backfilled=tuple(backfilled),
    )


def open_close_returns(panel: ReturnPanel) -> np.ndarray:
    """Open-to-close log return per symbol: the row sum of grid returns."""
    return panel.returns.sum(axis=1)


def realized_covariance(panel: ReturnPanel) -> CovarianceEstimate:
    """Uncentered realized covariance: the sum of r_t r_t' over the grid.

    Positive semidefinite by construction with rank at most m, hence
    singular whenever N > m.
    """
    r = panel.returns
    sigma = r @ r.T
    sigma = (sigma + sigma.T) / 2.0
    return CovarianceEstimate(
        values=sigma,
        kind="realized",
        condition_number=condition_number(sigma),
        positive_definite=is_positive_definite(sigma),
        label=panel.label,
        symbols=panel.symbols,
    )


def _fix_eigvec_signs(vecs: np.ndarray) -> np.ndarray:
    """Deterministic eigenvector signs: largest-|entry| component positive."""
    out = vecs.copy()
    for c in range(out.shape[1]):
        col = out[:, c]
        lead = int(np.argmax(np.abs(col)))  # first index on magnitude ties
        if col[lead] < 0:
            out[:, c] = -col
    return out


def factor_split(sigma: np.ndarray | CovarianceEstimate, k: int) -> FactorSplit:
    """Split sigma into the top-k eigenpair part and the remainder.

    Eigenpairs are sorted by descending eigenvalue (ties keep the original
    decomposition order); factor = sum of the k leading lambda v v', idio is
    the difference. factor + idio reconstructs sigma exactly up to roundoff.
    """
    values = sigma.values if isinstance(sigma, CovarianceEstimate) else np.asarray(sigma, dtype=np.float64)
    n = values.shape[0]
    if not (1 <= k < n):
        raise ValueError(f"k must be in [1, {n - 1}], got {k}")
    eigvals, eigvecs = np.linalg.eigh(values)  # ascending
    eigvals = eigvals[::-1].copy()
    eigvecs = _fix_eigvec_signs(eigvecs[:, ::-1].copy())
    lead_vals = eigvals[:k]
    lead_vecs = eigvecs[:, :k]
    factor = (lead_vecs * lead_vals) @ lead_vecs.T
    factor = (factor + factor.T) / 2.0
    idio = values - factor
    idio = (idio + idio.T) / 2.0
    return FactorSplit(factor=factor, idio=idio, eigenvalues=eigvals, eigenvectors=eigvecs)


def block_threshold(idio: np.ndarray, partition: Partition | np.ndarray) -> np.ndarray:
    """Zero all entries whose row and column fall in different clusters.

    The diagonal is always kept. Same-cluster entries pass through
    unchanged, so the result is block diagonal after grouping by cluster.
    """
    values = np.asarray(idio, dtype=np.float64)
    labels = partition.assignments if isinstance(partition, Partition) else np.asarray(partition, dtype=np.int64)
    if labels.ndim != 1 or labels.size != values.shape[0]:
        raise ValueError("partition must assign every row of the matrix")
    mask = labels[:, None] == labels[None, :]
    return np.where(mask, values, 0.0)


def estimate_cluster_covariance(
    panel: ReturnPanel,
    k_factors: int,
    partition: Partition | np.ndarray,
) -> CovarianceEstimate:
    """Cluster-structured covariance: top-k systematic part plus the
    cluster-blocked residual.

    Guaranteed positive definite when every cluster is smaller than the rank
    of the realized estimate (at most m); a warning is emitted when a
    cluster reaches the panel's m.
    """
    raw = realized_covariance(panel)
    labels = partition.assignments if isinstance(partition, Partition) else np.asarray(partition, dtype=np.int64)
    if labels.size != raw.n:
        raise ValueError("partition must assign every symbol in the panel")
    largest = int(np.bincount(labels).max()) if labels.size else 0
    if largest >= panel.m:
        warnings.warn(
            f"largest cluster ({largest}) is not smaller than m ({panel.m}); "
            "positive definiteness is no longer guaranteed", stacklevel=2)
    split = factor_split(raw.values, k_factors)
    blocked = block_threshold(split.idio, partition)
    sigma = split.factor + blocked
    sigma = (sigma + sigma.T) / 2.0
    return CovarianceEstimate(
        values=sigma,
        kind="factor_block",
        condition_number=condition_number(sigma),
        positive_definite=is_positive_definite(sigma),
        k_factors=k_factors,
        label=panel.label,
        symbols=panel.symbols,
    )
