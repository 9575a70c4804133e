"""Spectral clustering of co-trading matrices and partition comparison.

The clustering pipeline: degrees excluding the diagonal, unnormalized
Laplacian L = D - A, symmetric normalization D^{-1/2} L D^{-1/2}, the K
eigenvectors of the smallest eigenvalues as an embedding, row normalization
to unit length, then seeded k-means++ / Lloyd iterations. Partitions are
compared with the adjusted Rand index, day-by-day cluster regimes are found
by clustering the pairwise-ARI heatmap itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cooccurrence import CoTradingMatrix

__all__ = [
    "Partition",
    "AriSeries",
    "AriSummary",
    "kmeans",
    "spectral_clustering",
    "adjusted_rand_index",
    "ari_series",
    "pairwise_ari_heatmap",
    "detect_regimes",
    "ari_summary",
]

_DEGREE_EPS = 1e-12


@dataclass(frozen=True)
class Partition:
    """Cluster assignment of n items into k clusters (ids 0..k-1).

    Empty clusters are permitted; ``empty_clusters`` reports them.
    """

    assignments: np.ndarray
    k: int
    seed: int | None = None

    def __post_init__(self) -> None:
        a = np.ascontiguousarray(self.assignments, dtype=np.int64)
        object.__setattr__(self, "assignments", a)
        if a.ndim != 1:
            raise ValueError("assignments must be one-dimensional")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if a.size and (a.min() < 0 or a.max() >= self.k):
            raise ValueError("cluster ids must lie in [0, k)")

    def __len__(self) -> int:
        return int(self.assignments.size)

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.k)

    @property
    def empty_clusters(self) -> tuple[int, ...]:
        return tuple(int(c) for c in np.flatnonzero(self.sizes == 0))


@dataclass(frozen=True)
class AriSeries:
    """Daily ARI values against a fixed reference partition."""

    dates: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "dates", tuple(str(d) for d in self.dates))
        if v.ndim != 1 or v.size != len(self.dates):
            raise ValueError("values must align with dates")
        if v.size and v.max() > 1.0 + 1e-12:
            raise ValueError("ARI values cannot exceed 1")

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class AriSummary:
    mean: float
    stdev: float
    snr: float


def _kmeans_pp_centers(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: D^2-weighted sampling of initial centers."""
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]), dtype=np.float64)
    first = int(rng.integers(n))
    centers[0] = points[first]
    d2 = np.square(points - centers[0]).sum(axis=1)
    for c in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            pick = int(rng.integers(n))  # all points coincide with a center
        else:
            pick = int(rng.choice(n, p=d2 / total))
        centers[c] = points[pick]
        d2 = np.minimum(d2, np.square(points - centers[c]).sum(axis=1))
    return centers


def _lloyd(points: np.ndarray, centers: np.ndarray, max_iter: int, tol: float
           ) -> tuple[np.ndarray, np.ndarray, list[float]]:
    """Lloyd iterations. Returns (assignments, centers, inertia history)."""
    k = centers.shape[0]
    history: list[float] = []
    assign = np.zeros(points.shape[0], dtype=np.int64)
    for _ in range(max_iter):
        # squared distances, n x k; argmin breaks ties at the lowest index
        d2 = np.square(points[:, None, :] - centers[None, :, :]).sum(axis=2)
        assign = d2.argmin(axis=1)
        history.append(float(d2[np.arange(points.shape[0]), assign].sum()))
        new_centers = centers.copy()  # empty clusters keep their center
        for c in range(k):
            members = points[assign == c]
            if members.shape[0]:
                new_centers[c] = members.mean(axis=0)
        shift = float(np.sqrt(np.square(new_centers - centers).sum(axis=1)).max())
        centers = new_centers
        if shift < tol:
            break
    return assign, centers, history


def kmeans(
    points: np.ndarray,
    k: int,
    seed: int,
    max_iter: int = 300,
    tol: float = 1e-9,
) -> Partition:
    """Seeded k-means++ with a single restart.

    Deterministic for fixed (points, k, seed). Nearest-centroid ties go to
    the lowest centroid index; clusters may end up empty.
    """
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if pts.ndim != 2:
        raise ValueError("points must be a 2-d array")
    n = pts.shape[0]
    if not (1 <= k <= n):
        raise ValueError(f"k must be in [1, {n}], got {k}")
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp_centers(pts, k, rng)
    assign, _, history = _lloyd(pts, centers, max_iter, tol)
    for prev, cur in zip(history, history[1:]):  # Lloyd never increases inertia
        if cur > prev * (1 + 1e-12) + 1e-12:
            raise AssertionError(f"inertia increased: {prev} -> {cur}")
    return Partition(assignments=assign, k=k, seed=seed)


def spectral_clustering(
    matrix: CoTradingMatrix | np.ndarray,
    k: int,
    seed: int,
) -> Partition:
    """Normalized spectral clustering of a symmetric non-negative affinity.

    Degrees exclude the diagonal; zero degrees are floored at 1e-12 before
    inversion. The embedding rows are scaled to unit length (all-zero rows
    are left as zero vectors) and clustered with seeded k-means.
    """
    a = matrix.values if isinstance(matrix, CoTradingMatrix) else np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("affinity must be square")
    if not np.allclose(a, a.T, rtol=1e-12, atol=1e-12):
        raise ValueError("affinity must be symmetric")
    if np.any(a < 0):
        raise ValueError("affinity must be non-negative")
    n = a.shape[0]
    if not (2 <= k <= n):
        raise ValueError(f"k must be in [2, {n}], got {k}")

    off = a.copy()
    np.fill_diagonal(off, 0.0)
    degrees = off.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(np.maximum(degrees, _DEGREE_EPS))
    lap = np.diag(degrees) - a
    lap_sym = inv_sqrt[:, None] * lap * inv_sqrt[None, :]
    lap_sym = (lap_sym + lap_sym.T) / 2.0  # keep eigh on an exactly symmetric input

    eigvals, eigvecs = np.linalg.eigh(lap_sym)
    q = eigvecs[:, :k]  # ascending order: the k smallest
    norms = np.sqrt(np.square(q).sum(axis=1))
    safe = np.where(norms == 0.0, 1.0, norms)
    q = q / safe[:, None]
    return kmeans(q, k, seed)


def adjusted_rand_index(
    a: Partition | Sequence[int] | np.ndarray,
    b: Partition | Sequence[int] | np.ndarray,
) -> float:
    """Adjusted Rand index of two labelings of the same items.

    Contingency-table form with all pair counts in exact integers; only the
    final ratio is floating point. Label-permutation invariant; 1.0 iff the
    partitions are identical up to relabeling.
    """
    x = a.assignments if isinstance(a, Partition) else np.asarray(a, dtype=np.int64)
    y = b.assignments if isinstance(b, Partition) else np.asarray(b, dtype=np.int64)
    if x.ndim != 1 or y.ndim != 1:
        raise ValueError("labelings must be one-dimensional")
    if x.size != y.size:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    n = int(x.size)
    if n == 0:
        raise ValueError("cannot compare empty labelings")

    _, xi = np.unique(x, return_inverse=True)
    _, yi = np.unique(y, return_inverse=True)
    table = np.zeros((int(xi.max()) + 1, int(yi.max()) + 1), dtype=np.int64)
    np.add.at(table, (xi, yi), 1)

    def comb2(v: np.ndarray) -> int:
        v = v.astype(object)  # exact integers, no overflow
        return int(((v * (v - 1)) // 2).sum())

    sum_cells = comb2(table.ravel())
    sum_rows = comb2(table.sum(axis=1))
    sum_cols = comb2(table.sum(axis=0))
    total = n * (n - 1) // 2
    if total == 0:
        return 1.0  # single item: trivially identical
    expected = sum_rows * sum_cols / total
    maximum = (sum_rows + sum_cols) / 2.0
    denom = maximum - expected
    if denom == 0.0:
        return 1.0  # both trivial partitions (all-one-cluster or all-singletons)
    return float((sum_cells - expected) / denom)


def ari_series(
    dates: Sequence[str],
    partitions: Sequence[Partition],
    reference: Partition,
) -> AriSeries:
    """Daily ARI of each partition against a fixed reference."""
    if len(dates) != len(partitions):
        raise ValueError("dates must align with partitions")
    values = np.array([adjusted_rand_index(p, reference) for p in partitions])
    return AriSeries(dates=tuple(dates), values=values)


def pairwise_ari_heatmap(partitions: Sequence[Partition]) -> np.ndarray:
    """T x T symmetric matrix of pairwise ARIs with unit diagonal."""
    t = len(partitions)
    if t == 0:
        raise ValueError("need at least one partition")
    sizes = {len(p) for p in partitions}
    if len(sizes) != 1:
        raise ValueError("all partitions must cover the same items")
    heat = np.eye(t, dtype=np.float64)
    for i in range(t):
        for j in range(i + 1, t):
            v = adjusted_rand_index(partitions[i], partitions[j])
            heat[i, j] = v
            heat[j, i] = v
    return heat


def detect_regimes(ari_heatmap: np.ndarray, n_regimes: int, seed: int) -> Partition:
    """Cluster days into regimes by spectral clustering of the ARI heatmap.

    Negative ARIs are clamped to zero so the heatmap is a valid affinity.
    """
    heat = np.asarray(ari_heatmap, dtype=np.float64)
    clamped = np.maximum(heat, 0.0)
    return spectral_clustering(clamped, n_regimes, seed)


def ari_summary(series: AriSeries | Sequence[float] | np.ndarray) -> AriSummary:
    """Mean, sample standard deviation (n-1), and their ratio.

    A zero standard deviation (including the single-observation case) is
    flagged with an infinite ratio.
    """
    values = series.values if isinstance(series, AriSeries) else np.asarray(series, dtype=np.float64)
    if values.size == 0:
        raise ValueError("cannot summarize an empty series")
    mean = float(values.mean())
    if values.size == 1 or values.min() == values.max():
        # constant series: exactly zero spread, not mean-subtraction noise
        stdev = 0.0
    else:
        stdev = float(values.std(ddof=1))
    snr = mean / stdev if stdev > 0.0 else math.inf
    return AriSummary(mean=mean, stdev=stdev, snr=snr)
