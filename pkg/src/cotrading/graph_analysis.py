"""Network summaries of co-trading matrices.

Maximum spanning trees, top-fraction edge thresholds, eigenvector centrality,
and sector-level meta-networks.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cooccurrence import CoTradingMatrix

__all__ = [
    "EdgeList",
    "ConvergenceError",
    "max_spanning_tree",
    "threshold_top_fraction",
    "eigenvector_centrality",
    "sector_meta_network",
]


class ConvergenceError(RuntimeError):
    """Iteration failed to converge. Carries the last residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class EdgeList:
    """Undirected weighted edges (i, j, w) with i < j, over n vertices."""

    n: int
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "edges", tuple((int(i), int(j), float(w)) for i, j, w in self.edges))
        seen = set()
        for i, j, w in self.edges:
            if not (0 <= i < j < self.n):
                raise ValueError(f"edge ({i}, {j}) out of range or not i < j")
            if w < 0:
                raise ValueError(f"edge weight must be >= 0, got {w}")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i}, {j})")
            seen.add((i, j))

    def __len__(self) -> int:
        return len(self.edges)

    @property
    def total_weight(self) -> float:
        return float(sum(w for _, _, w in self.edges))

    def pair_set(self) -> frozenset[tuple[int, int]]:
        return frozenset((i, j) for i, j, _ in self.edges)


def _as_matrix(matrix: CoTradingMatrix | np.ndarray) -> np.ndarray:
    v = matrix.values if isinstance(matrix, CoTradingMatrix) else np.asarray(matrix, dtype=np.float64)
    if v.ndim != 2 or v.shape[0] != v.shape[1]:
        raise ValueError("matrix must be square")
    if not np.allclose(v, v.T, rtol=0.0, atol=0.0):
        raise ValueError("matrix must be symmetric")
    return v


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:  # path compression
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True


def _sorted_positive_edges(values: np.ndarray) -> list[tuple[int, int, float]]:
    iu, ju = np.triu_indices(values.shape[0], k=1)
    w = values[iu, ju]
    keep = w > 0
    edges = list(zip(iu[keep].tolist(), ju[keep].tolist(), w[keep].tolist()))
    # weight descending, then lexicographic (i, j) for reproducible ties
    edges.sort(key=lambda e: (-e[2], e[0], e[1]))
    return edges


def max_spanning_tree(matrix: CoTradingMatrix | np.ndarray) -> EdgeList:
    """Maximum-weight spanning tree by Kruskal's algorithm.

    Only strictly positive weights are considered edges. If the positive
    graph is disconnected a spanning forest is returned and a warning is
    emitted. Ties are broken by (weight desc, i, j) so the result is unique.
    """
    values = _as_matrix(matrix)
    n = values.shape[0]
    if n < 2:
        raise ValueError("need at least 2 vertices for a spanning tree")
    uf = _UnionFind(n)
    chosen: list[tuple[int, int, float]] = []
    for i, j, w in _sorted_positive_edges(values):
        if uf.union(i, j):
            chosen.append((i, j, w))
            if len(chosen) == n - 1:
                break
    if len(chosen) < n - 1:
        warnings.warn(
            f"graph is disconnected: spanning forest with {len(chosen)} edges "
            f"instead of {n - 1}", stacklevel=2)
    return EdgeList(n=n, edges=tuple(chosen))


def threshold_top_fraction(matrix: CoTradingMatrix | np.ndarray, p: float) -> EdgeList:
    """Keep the ceil(p * E) highest-weight of the E = n(n-1)/2 pairs.

    Ties at the cutoff resolve in lexicographic (i, j) order. Zero-weight
    pairs are never emitted as edges, so p = 1 yields all positive edges.
    """
    if not (0.0 < p <= 1.0):
        raise ValueError(f"p must be in (0, 1], got {p}")
    values = _as_matrix(matrix)
    n = values.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    w = values[iu, ju]
    n_pairs = w.size
    if n_pairs == 0:
        raise ValueError("matrix has no off-diagonal pairs")
    k = math.ceil(p * n_pairs)
    ranked = sorted(zip(iu.tolist(), ju.tolist(), w.tolist()),
                    key=lambda e: (-e[2], e[0], e[1]))
    chosen = [(i, j, wt) for i, j, wt in ranked[:k] if wt > 0]
    return EdgeList(n=n, edges=tuple(chosen))


def eigenvector_centrality(
    matrix: CoTradingMatrix | np.ndarray,
    tol: float = 1e-10,
    max_iter: int = 10_000,
) -> np.ndarray:
    """Unit-norm non-negative dominant eigenvector by power iteration.

    Iterates on the spectrally shifted matrix C + s*I (s = max row sum),
    which has the same dominant eigenvector but cannot oscillate on
    bipartite-like structures. Starts from the uniform vector and stops when
    successive normalized iterates differ by less than ``tol`` in max norm.
    """
    values = _as_matrix(matrix)
    if np.any(values < 0):
        raise ValueError("matrix entries must be non-negative")
    n = values.shape[0]
    if n == 0:
        raise ValueError("matrix is empty")
    shift = float(values.sum(axis=1).max())
    if shift == 0.0:
        raise ValueError("matrix is all zero; centrality undefined")
    shifted = values + shift * np.eye(n)
    v = np.full(n, 1.0 / math.sqrt(n))
    diff = math.inf
    for _ in range(max_iter):
        w = shifted @ v
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            raise ConvergenceError("power iteration collapsed to zero", residual=diff)
        w /= norm
        diff = float(np.max(np.abs(w - v)))
        v = w
        if diff < tol:
            break
    else:
        raise ConvergenceError(
            f"power iteration did not converge in {max_iter} iterations", residual=diff)
    return np.abs(v)  # non-negative by Perron-Frobenius; abs guards roundoff


def sector_meta_network(
    matrix: CoTradingMatrix,
    sector_labels: Sequence[str],
) -> CoTradingMatrix:
    """Collapse a stock-level matrix to a sector-level meta-network.

    Off-diagonal entry (a, b) is the mean score over all cross-sector stock
    pairs; the within-sector mean over unordered pairs (0 for size-1
    sectors) is reported in ``within_sector``, keeping the zero-diagonal
    matrix convention. Sector order is sorted by label.
    """
    values = matrix.values
    n = values.shape[0]
    labels = list(sector_labels)
    if len(labels) != n:
        raise ValueError(f"need one sector label per symbol ({n}), got {len(labels)}")
    for lab in labels:
        if not isinstance(lab, str) or not lab:
            raise ValueError(f"invalid sector label {lab!r}")
    sectors = sorted(set(labels))
    idx = {s: np.flatnonzero(np.asarray(labels, dtype=object) == s) for s in sectors}
    k = len(sectors)
    meta = np.zeros((k, k), dtype=np.float64)
    within = np.zeros(k, dtype=np.float64)
    for a in range(k):
        ia = idx[sectors[a]]
        if ia.size > 1:
            block = values[np.ix_(ia, ia)]
            iu, ju = np.triu_indices(ia.size, k=1)
            within[a] = float(block[iu, ju].mean())
        for b in range(a + 1, k):
            ib = idx[sectors[b]]
            cross = float(values[np.ix_(ia, ib)].mean())
            meta[a, b] = cross
            meta[b, a] = cross
    return CoTradingMatrix(
        label=matrix.label,
        values=meta,
        delta_ns=matrix.delta_ns,
        direction_pair=matrix.direction_pair,
        measure=matrix.measure,
        symbols=tuple(sectors),
        within_sector=within,
    )
