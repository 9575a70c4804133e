"""Independent reference implementations used to verify the package.

Everything here favors obviousness over speed: quadratic brute force,
exhaustive enumeration, rational arithmetic. Nothing imports from the
package under test.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np


# -- co-occurrence ---------------------------------------------------------------

def brute_window_count(anchor: np.ndarray, other: np.ndarray, delta_ns: int) -> int:
    """All-pairs count of other-trades strictly inside (t - delta, t + delta)."""
    a = np.asarray(anchor, dtype=np.int64)
    o = np.asarray(other, dtype=np.int64)
    if a.size == 0 or o.size == 0:
        return 0
    diff = np.abs(o[None, :] - a[:, None])
    return int((diff < delta_ns).sum())


def brute_window_qty_sum(anchor: np.ndarray, other: np.ndarray,
                         other_qty: np.ndarray, delta_ns: int) -> int:
    """Sum of other-trade quantities strictly inside each anchor window."""
    a = np.asarray(anchor, dtype=np.int64)
    o = np.asarray(other, dtype=np.int64)
    q = np.asarray(other_qty, dtype=np.int64)
    if a.size == 0 or o.size == 0:
        return 0
    mask = np.abs(o[None, :] - a[:, None]) < delta_ns
    return int((mask * q[None, :]).sum())


def brute_count_score(times_i, times_j, delta_ns) -> float:
    ti = np.asarray(times_i, dtype=np.int64)
    tj = np.asarray(times_j, dtype=np.int64)
    if ti.size == 0 or tj.size == 0:
        return 0.0
    l_ij = brute_window_count(tj, ti, delta_ns)  # i's trades near j's anchors
    l_ji = brute_window_count(ti, tj, delta_ns)
    return (l_ij + l_ji) / np.sqrt(ti.size * tj.size)


def brute_volume_score(times_i, qty_i, times_j, qty_j, delta_ns) -> float:
    ti = np.asarray(times_i, dtype=np.int64)
    tj = np.asarray(times_j, dtype=np.int64)
    qi = np.asarray(qty_i, dtype=np.int64)
    qj = np.asarray(qty_j, dtype=np.int64)
    tot_i, tot_j = int(qi.sum()) if qi.size else 0, int(qj.sum()) if qj.size else 0
    if tot_i <= 0 or tot_j <= 0:
        return 0.0
    v_ij = brute_window_qty_sum(tj, ti, qi, delta_ns)  # i-volume near j's anchors
    v_ji = brute_window_qty_sum(ti, tj, qj, delta_ns)
    return (v_ij + v_ji) / np.sqrt(tot_i * tot_j)


# -- spanning trees ----------------------------------------------------------------

def _tree_from_pruefer(seq: tuple[int, ...], n: int) -> list[tuple[int, int]]:
    """Decode a Pruefer sequence into the labeled tree's edge list."""
    degree = [1] * n
    for v in seq:
        degree[v] += 1
    edges = []
    for v in seq:
        for leaf in range(n):
            if degree[leaf] == 1:
                edges.append((min(leaf, v), max(leaf, v)))
                degree[leaf] -= 1
                degree[v] -= 1
                break
    last = [v for v in range(n) if degree[v] == 1]
    edges.append((min(last), max(last)))
    return edges


def all_spanning_trees(n: int):
    """Every labeled spanning tree of K_n (n^(n-2) of them). Keep n small."""
    if n == 1:
        yield []
        return
    if n == 2:
        yield [(0, 1)]
        return
    for seq in itertools.product(range(n), repeat=n - 2):
        yield _tree_from_pruefer(seq, n)


def max_tree_weight_enumerated(weights: np.ndarray) -> float:
    """Maximum total weight over all spanning trees of the complete graph."""
    n = weights.shape[0]
    best = -np.inf
    for tree in all_spanning_trees(n):
        total = sum(weights[i, j] for i, j in tree)
        best = max(best, total)
    return float(best)


# -- eigensolver --------------------------------------------------------------------

def jacobi_eigh(matrix: np.ndarray, sweeps: int = 100, tol: float = 1e-14):
    """Cyclic Jacobi rotations for a symmetric matrix.

    Returns (eigenvalues ascending, eigenvectors as columns). Independent of
    LAPACK: only rotations and comparisons.
    """
    a = np.array(matrix, dtype=np.float64, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    for _ in range(sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off < tol * max(1.0, np.abs(np.diag(a)).max()):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) < 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = c
                rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                v = v @ rot
    order = np.argsort(np.diag(a), kind="stable")
    return np.diag(a)[order].copy(), v[:, order].copy()


# -- k-means ---------------------------------------------------------------------

def exhaustive_kmeans_inertia(points: np.ndarray, k: int) -> float:
    """Global minimum inertia over every assignment of points to k clusters.

    Exponential; only for tiny instances (k^N assignments).
    """
    pts = np.asarray(points, dtype=np.float64)
    n = pts.shape[0]
    best = np.inf
    for assign in itertools.product(range(k), repeat=n):
        lab = np.asarray(assign)
        inertia = 0.0
        for c in range(k):
            members = pts[lab == c]
            if members.shape[0]:
                centroid = members.mean(axis=0)
                inertia += float(((members - centroid) ** 2).sum())
        best = min(best, inertia)
    return best


def exhaustive_kmeans_inertia_fast(points: np.ndarray, k: int) -> float:
    """Same minimum as exhaustive_kmeans_inertia, vectorized over assignments.

    Uses the within-cluster identity SS = sum |x|^2 - |sum x|^2 / n. Memory
    grows as k^N; keep N <= 12.
    """
    pts = np.asarray(points, dtype=np.float64)
    n, d = pts.shape
    total = k ** n
    codes = np.arange(total)
    labels = np.empty((total, n), dtype=np.int8)
    for pos in range(n):
        labels[:, pos] = codes % k
        codes //= k
    sq = (pts ** 2).sum(axis=1)
    inertia = np.zeros(total)
    for c in range(k):
        mask = (labels == c)
        counts = mask.sum(axis=1)
        sums = mask.astype(np.float64) @ pts
        sq_in = mask.astype(np.float64) @ sq
        norm = np.zeros(total)
        nz = counts > 0
        norm[nz] = (sums[nz] ** 2).sum(axis=1) / counts[nz]
        inertia += sq_in - norm
    return float(inertia.min())


# -- adjusted Rand index ----------------------------------------------------------

def pair_counting_ari(a, b) -> Fraction:
    """ARI via explicit pair counting, exact rational arithmetic.

    Over all unordered pairs: s = together in both, d = apart in both,
    and the Hubert–Arabie form computed from the contingency table.
    """
    a = list(a)
    b = list(b)
    n = len(a)
    if n == 0:
        raise ValueError("empty partitions")
    labels_a = sorted(set(a))
    labels_b = sorted(set(b))
    table = {(la, lb): 0 for la in labels_a for lb in labels_b}
    for la, lb in zip(a, b):
        table[(la, lb)] += 1

    def comb2(x: int) -> Fraction:
        return Fraction(x * (x - 1), 2)

    sum_cells = sum(comb2(v) for v in table.values())
    sum_rows = sum(comb2(sum(table[(la, lb)] for lb in labels_b)) for la in labels_a)
    sum_cols = sum(comb2(sum(table[(la, lb)] for la in labels_a)) for lb in labels_b)
    total = comb2(n)
    if total == 0:
        return Fraction(1)
    expected = sum_rows * sum_cols / total
    maximum = Fraction(sum_rows + sum_cols, 2)
    if maximum == expected:
        return Fraction(1)
    return (sum_cells - expected) / (maximum - expected)


# -- covariance -----------------------------------------------------------------

def last_at_or_before_linear(times, values, t):
    """Linear scan for the last observation at or before t.

    Returns (value, backfilled): before the first observation, the first
    value is used and flagged.
    """
    best = None
    for ts, val in zip(times, values):
        if ts <= t:
            best = val
        else:
            break
    if best is None:
        return values[0], True
    return best, False


def realized_cov_loops(returns: np.ndarray) -> np.ndarray:
    """Entry-by-entry uncentered covariance: sum over intervals of r_i r_j."""
    r = np.asarray(returns, dtype=np.float64)
    n, m = r.shape
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for t in range(m):
                acc += r[i, t] * r[j, t]
            out[i, j] = acc
    return out


# -- portfolio -------------------------------------------------------------------

def gmv_closed_form(sigma: np.ndarray) -> np.ndarray:
    """Minimum-variance fully-invested weights via a direct linear solve."""
    ones = np.ones(sigma.shape[0])
    x = np.linalg.solve(sigma, ones)
    return x / float(ones @ x)


def qap_pvalue_exhaustive(y: np.ndarray, x: np.ndarray) -> float:
    """Exact one-sided QAP p-value over all n! joint permutations.

    Both inputs are symmetric matrices with zero diagonal; n must be tiny.
    """
    n = x.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    yv = y[iu, ju]

    def gamma(mat):
        xv = mat[iu, ju]
        return float(xv @ yv) / float(xv @ xv)

    obs = gamma(x)
    exceed = 0
    count = 0
    for perm in itertools.permutations(range(n)):
        p = np.asarray(perm)
        count += 1
        if gamma(x[np.ix_(p, p)]) >= obs:
            exceed += 1
    return exceed / count
