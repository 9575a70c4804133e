"""Network-on-network regressions with permutation inference.

Matrices are compared entrywise by ordinary least squares through the origin
on their vectorized upper triangles. Significance comes from quadratic
assignment procedures: joint row/column permutations of a regressor destroy
its alignment with the response while preserving its value multiset, giving
an exact-style null. With several regressors the double-semi-partialing
variant permutes the residual of the tested regressor on the others.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cooccurrence import CoTradingMatrix

__all__ = [
    "SectorMatrix",
    "RegressionResult",
    "RegressionSummary",
    "sector_indicator",
    "vectorize_offdiag",
    "matrix_from_offdiag",
    "fit_networks",
    "qap_test",
    "mrqap_dsp_test",
    "daily_regression_summary",
]

DEFAULT_N_PERMUTATIONS = 2000
SIGNIFICANCE_LEVEL = 0.05


@dataclass(frozen=True)
class SectorMatrix:
    """Binary same-sector indicator with zero diagonal."""

    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", v)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("sector matrix must be square")
        if not np.array_equal(v, v.T):
            raise ValueError("sector matrix must be symmetric")
        if np.any((v != 0.0) & (v != 1.0)):
            raise ValueError("sector matrix entries must be 0 or 1")
        if np.any(np.diagonal(v) != 0.0):
            raise ValueError("sector matrix diagonal must be zero")


@dataclass(frozen=True)
class RegressionResult:
    """Coefficients and permutation p-values for one regression.

    ``gamma_c``/``p_value_c`` describe the primary regressor;
    ``gamma_s``/``p_value_s`` the (single) control when present.
    """

    gamma_c: float
    p_value_c: float
    n_permutations: int
    seed: int
    gamma_s: float | None = None
    p_value_s: float | None = None
    date: str | None = None


@dataclass(frozen=True)
class RegressionSummary:
    mean: float
    median: float
    stdev: float
    pct_positive: float
    pct_significant: float


def sector_indicator(labels: Sequence[str]) -> SectorMatrix:
    """Same-sector indicator matrix from per-symbol sector labels."""
    labs = list(labels)
    if not labs:
        raise ValueError("labels must be non-empty")
    arr = np.asarray(labs, dtype=object)
    values = (arr[:, None] == arr[None, :]).astype(np.float64)
    np.fill_diagonal(values, 0.0)
    return SectorMatrix(values=values)


def _as_square(matrix: CoTradingMatrix | SectorMatrix | np.ndarray) -> np.ndarray:
    if isinstance(matrix, (CoTradingMatrix, SectorMatrix)):
        return matrix.values
    v = np.asarray(matrix, dtype=np.float64)
    if v.ndim != 2 or v.shape[0] != v.shape[1]:
        raise ValueError("matrix must be square")
    return v


def vectorize_offdiag(
    matrix: CoTradingMatrix | SectorMatrix | np.ndarray,
    include_diagonal: bool = False,
) -> np.ndarray:
    """Upper-triangle entries in row-major order (diagonal excluded by default)."""
    v = _as_square(matrix)
    iu, ju = np.triu_indices(v.shape[0], k=0 if include_diagonal else 1)
    return v[iu, ju]


def matrix_from_offdiag(vec: np.ndarray, n: int) -> np.ndarray:
    """Inverse of vectorize_offdiag: symmetric matrix with zero diagonal."""
    vec = np.asarray(vec, dtype=np.float64)
    iu, ju = np.triu_indices(n, k=1)
    if vec.size != iu.size:
        raise ValueError(f"expected {iu.size} entries for n = {n}, got {vec.size}")
    out = np.zeros((n, n), dtype=np.float64)
    out[iu, ju] = vec
    out[ju, iu] = vec
    return out


def _ols_origin(design: np.ndarray, response: np.ndarray, check_rank: bool) -> np.ndarray:
    if design.shape[1] == 1:
        # single column: closed form, avoids an SVD per permutation replicate
        xx = float(design[:, 0] @ design[:, 0])
        if xx <= 0.0:
            if check_rank:
                raise ValueError("rank-deficient design: zero regressor column")
            return np.zeros(1)
        return np.array([float(design[:, 0] @ response) / xx])
    coefs, _, rank, _ = np.linalg.lstsq(design, response, rcond=None)
    if check_rank and rank < design.shape[1]:
        raise ValueError(
            f"rank-deficient design: rank {rank} < {design.shape[1]} columns")
    return coefs


def fit_networks(
    y_matrix: CoTradingMatrix | np.ndarray,
    x_matrices: Sequence[CoTradingMatrix | SectorMatrix | np.ndarray],
    include_diagonal: bool = False,
    intercept: bool = False,
) -> np.ndarray:
    """OLS coefficients of y on the x's, entrywise on vectorized triangles.

    Through the origin unless ``intercept`` is set, in which case the
    intercept coefficient is appended last.
    """
    if not x_matrices:
        raise ValueError("need at least one regressor matrix")
    y = vectorize_offdiag(y_matrix, include_diagonal)
    cols = [vectorize_offdiag(x, include_diagonal) for x in x_matrices]
    for c in cols:
        if c.size != y.size:
            raise ValueError("regressor shape mismatch with response")
    if intercept:
        cols.append(np.ones_like(y))
    design = np.column_stack(cols)
    return _ols_origin(design, y, check_rank=True)


def _permute_matrix(values: np.ndarray, perm: np.ndarray) -> np.ndarray:
    """Simultaneous row and column permutation: out[i, j] = in[perm[i], perm[j]]."""
    return values[np.ix_(perm, perm)]


def _replicate_rngs(seed: int, count: int) -> list[np.random.Generator]:
    # one child stream per permutation replicate: the reduction is a count,
    # so any evaluation order gives the same result for a fixed master seed
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def qap_test(
    y_matrix: CoTradingMatrix | np.ndarray,
    x_matrix: CoTradingMatrix | SectorMatrix | np.ndarray,
    n_permutations: int = DEFAULT_N_PERMUTATIONS,
    seed: int = 0,
    two_sided: bool = False,
    include_diagonal: bool = False,
    date: str | None = None,
    permutations: Sequence[np.ndarray] | None = None,
) -> RegressionResult:
    """Single-regressor quadratic assignment test.

    The observed coefficient is compared with coefficients refit after
    jointly permuting rows and columns of x. The p-value is
    (1 + #{gamma_perm >= gamma_obs}) / (1 + n_permutations), upper tail
    (absolute values when ``two_sided``). ``permutations`` replaces the
    seeded draws with an explicit sequence (testing hook); its length
    overrides n_permutations.
    """
    y = vectorize_offdiag(y_matrix, include_diagonal)
    xv = _as_square(x_matrix)
    n = xv.shape[0]
    design = vectorize_offdiag(xv, include_diagonal)[:, None]
    gamma_obs = float(_ols_origin(design, y, check_rank=True)[0])

    if permutations is not None:
        perms = [np.asarray(p, dtype=np.int64) for p in permutations]
        n_permutations = len(perms)
    else:
        perms = None
    if n_permutations < 1:
        raise ValueError("n_permutations must be >= 1")

    exceed = 0
    if perms is None:
        perms = (rng.permutation(n) for rng in _replicate_rngs(seed, n_permutations))
    base_sorted = np.sort(design[:, 0])
    for perm in perms:
        xp = vectorize_offdiag(_permute_matrix(xv, perm), include_diagonal)
        # joint row/column permutation must preserve the entry multiset
        assert np.array_equal(np.sort(xp), base_sorted)
        gamma_p = float(_ols_origin(xp[:, None], y, check_rank=False)[0])
        if two_sided:
            exceed += abs(gamma_p) >= abs(gamma_obs)
        else:
            exceed += gamma_p >= gamma_obs
    p_value = (1 + exceed) / (1 + n_permutations)
    return RegressionResult(
        gamma_c=gamma_obs,
        p_value_c=p_value,
        n_permutations=n_permutations,
        seed=seed,
        date=date,
    )


def mrqap_dsp_test(
    y_matrix: CoTradingMatrix | np.ndarray,
    x_primary: CoTradingMatrix | SectorMatrix | np.ndarray,
    x_controls: CoTradingMatrix | SectorMatrix | np.ndarray
    | Sequence[CoTradingMatrix | SectorMatrix | np.ndarray],
    n_permutations: int = DEFAULT_N_PERMUTATIONS,
    seed: int = 0,
    two_sided: bool = False,
    include_diagonal: bool = False,
    date: str | None = None,
) -> RegressionResult:
    """Multiple regression QAP with double semi-partialing.

    For each tested regressor: regress it on the remaining regressors,
    reshape the residual into a symmetric matrix, jointly permute its rows
    and columns, substitute the permuted residual for the tested column, and
    refit the full model. Reported coefficients come from the unpermuted
    regression. The result carries the primary coefficient as gamma_c and,
    when exactly one control is given, that control as gamma_s.
    """
    if n_permutations < 1:
        raise ValueError("n_permutations must be >= 1")
    if isinstance(x_controls, (CoTradingMatrix, SectorMatrix, np.ndarray)):
        controls = [x_controls]
    else:
        controls = list(x_controls)
    xs = [_as_square(x_primary)] + [_as_square(c) for c in controls]
    n = xs[0].shape[0]
    y = vectorize_offdiag(y_matrix, include_diagonal)
    cols = np.column_stack([vectorize_offdiag(x, include_diagonal) for x in xs])
    gammas = _ols_origin(cols, y, check_rank=True)

    p_values: list[float] = []
    root = np.random.SeedSequence(seed)
    coef_seqs = root.spawn(len(xs))
    for idx, (x, seq) in enumerate(zip(xs, coef_seqs)):
        others = np.delete(cols, idx, axis=1)
        if others.shape[1]:
            beta = _ols_origin(others, cols[:, idx], check_rank=False)
            resid_vec = cols[:, idx] - others @ beta
        else:
            resid_vec = cols[:, idx].copy()
        iu, ju = np.triu_indices(n, k=0 if include_diagonal else 1)
        resid_mat = np.zeros((n, n))
        resid_mat[iu, ju] = resid_vec
        resid_mat[ju, iu] = resid_vec
        exceed = 0
        design = cols.copy()
        resid_sorted = np.sort(resid_vec)
        for child in seq.spawn(n_permutations):
            rng = np.random.default_rng(child)
            perm = rng.permutation(n)
            design[:, idx] = vectorize_offdiag(_permute_matrix(resid_mat, perm), include_diagonal)
            # joint row/column permutation must preserve the entry multiset
            assert np.array_equal(np.sort(design[:, idx]), resid_sorted)
            coefs = _ols_origin(design, y, check_rank=False)
            if two_sided:
                exceed += abs(coefs[idx]) >= abs(gammas[idx])
            else:
                exceed += coefs[idx] >= gammas[idx]
        p_values.append((1 + exceed) / (1 + n_permutations))

    return RegressionResult(
        gamma_c=float(gammas[0]),
        p_value_c=p_values[0],
        gamma_s=float(gammas[1]) if len(controls) == 1 else None,
        p_value_s=p_values[1] if len(controls) == 1 else None,
        n_permutations=n_permutations,
        seed=seed,
        date=date,
    )


def daily_regression_summary(
    results: Sequence[RegressionResult],
    which: str = "primary",
    alpha: float = SIGNIFICANCE_LEVEL,
) -> RegressionSummary:
    """Aggregate daily coefficients: mean, median, sample stdev, percent
    positive, and percent significant at ``alpha``."""
    if not results:
        raise ValueError("need at least one regression result")
    if which == "primary":
        gammas = np.array([r.gamma_c for r in results])
        pvals = np.array([r.p_value_c for r in results])
    elif which == "control":
        if any(r.gamma_s is None for r in results):
            raise ValueError("some results have no control coefficient")
        gammas = np.array([r.gamma_s for r in results])
        pvals = np.array([r.p_value_s for r in results])
    else:
        raise ValueError("which must be 'primary' or 'control'")
    stdev = float(gammas.std(ddof=1)) if gammas.size > 1 else 0.0
    return RegressionSummary(
        mean=float(gammas.mean()),
        median=float(np.median(gammas)),
        stdev=stdev,
        pct_positive=float(100.0 * (gammas > 0).mean()),
        pct_significant=float(100.0 * (pvals < alpha).mean()),
    )
