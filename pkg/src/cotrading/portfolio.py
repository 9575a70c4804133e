"""Minimum-variance portfolios under a leverage budget, plus backtesting.

The unconstrained global minimum variance portfolio has the closed form
w = sigma^{-1} 1 / (1' sigma^{-1} 1). With an l1 budget ||w||_1 <= l the
problem is solved as a convex QP via the positive/negative split
w = w_plus - w_minus; the returned weights must satisfy the KKT conditions
of the original problem to 1e-8, which is enforced by an active-set polish
on top of the numerical solver and verified explicitly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .covariance import CovarianceEstimate

__all__ = [
    "PortfolioWeights",
    "BacktestReport",
    "PerformanceStats",
    "NotPositiveDefiniteError",
    "InfeasibleLeverageError",
    "SolverError",
    "gmv_weights",
    "mean_variance_weights",
    "kkt_residual",
    "backtest",
    "performance_stats",
]

logger = logging.getLogger(__name__)

TRADING_DAYS_PER_YEAR = 252
DEFAULT_CONDITION_LIMIT = 1e9
KKT_TOLERANCE = 1e-8


class NotPositiveDefiniteError(ValueError):
    """Covariance input is not positive definite."""


class InfeasibleLeverageError(ValueError):
    """No w can satisfy sum(w) = 1 with ||w||_1 <= l < 1."""


class SolverError(RuntimeError):
    """QP solve failed to reach the KKT tolerance. Carries the residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (KKT residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class PortfolioWeights:
    """Weights for one trading day."""

    date: str
    weights: np.ndarray
    leverage_used: float
    traded: bool

    def __post_init__(self) -> None:
        w = np.ascontiguousarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "weights", w)
        if self.traded and abs(float(w.sum()) - 1.0) > 1e-8:
            raise ValueError("traded weights must sum to 1 within 1e-8")


@dataclass(frozen=True)
class PerformanceStats:
    ann_vol: float
    sharpe: float
    cum_path: np.ndarray


@dataclass(frozen=True)
class BacktestReport:
    """Daily strategy returns and their summary statistics.

    Covers every day after the first (which has no prior estimate);
    ``skipped_days`` counts the days gated out by the condition limit.
    """

    dates: tuple[str, ...]
    daily_returns: np.ndarray
    ann_vol: float
    sharpe: float
    cum_path: np.ndarray
    skipped_days: int
    weights: tuple[PortfolioWeights, ...]

    def __post_init__(self) -> None:
        r = np.ascontiguousarray(self.daily_returns, dtype=np.float64)
        object.__setattr__(self, "daily_returns", r)
        if r.size != len(self.dates):
            raise ValueError("daily returns must align with dates")


def _check_covariance(sigma: np.ndarray) -> np.ndarray:
    s = np.ascontiguousarray(sigma, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError("covariance must be square")
    if not np.allclose(s, s.T, rtol=1e-10, atol=1e-12):
        raise ValueError("covariance must be symmetric")
    return (s + s.T) / 2.0


def gmv_weights(sigma: np.ndarray | CovarianceEstimate) -> np.ndarray:
    """Closed-form global minimum variance weights via a Cholesky solve."""
    values = sigma.values if isinstance(sigma, CovarianceEstimate) else sigma
    s = _check_covariance(values)
    try:
        chol = scipy.linalg.cho_factor(s, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"covariance is not positive definite: {exc}") from None
    ones = np.ones(s.shape[0])
    raw = scipy.linalg.cho_solve(chol, ones)
    return raw / float(raw.sum())


def _gmv_via_kkt(sigma: np.ndarray) -> np.ndarray:
    """GMV by solving the bordered stationarity system (independent route)."""
    n = sigma.shape[0]
    kkt = np.zeros((n + 1, n + 1))
    kkt[:n, :n] = 2.0 * sigma
    kkt[:n, n] = 1.0
    kkt[n, :n] = 1.0
    rhs = np.zeros(n + 1)
    rhs[n] = 1.0
    return np.linalg.solve(kkt, rhs)[:n]


def kkt_residual(sigma: np.ndarray, weights: np.ndarray, leverage: float) -> float:
    """Max violation of the KKT system of min w'Sw s.t. 1'w = 1, ||w||_1 <= l.

    In the split form the multipliers are nu (budget) and mu >= 0
    (leverage); stationarity pins lambda_plus = 2Sw + (nu + mu) 1 >= 0 and
    lambda_minus = -2Sw + (mu - nu) 1 >= 0 with complementary slackness on
    the positive and negative parts of w. The multipliers are reconstructed
    from the active coordinates and the worst violation is returned.
    """
    s = np.asarray(sigma, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    grad = 2.0 * (s @ w)
    l1 = float(np.abs(w).sum())
    scale = max(1.0, float(np.abs(grad).max()))
    primal = abs(float(w.sum()) - 1.0)
    if math.isfinite(leverage):
        primal = max(primal, l1 - leverage)

    zero_tol = 1e-9 * max(1.0, float(np.abs(w).max()))
    pos = w > zero_tol
    neg = w < -zero_tol
    slack = math.isinf(leverage) or l1 < leverage - 1e-7 * max(1.0, leverage)

    # reconstruct nu (and mu) from stationarity on the active coordinates
    if not pos.any():
        return max(primal, 1.0)  # sum(w) = 1 needs a positive weight
    if slack:
        mu = 0.0
        active = pos | neg
        nu = float(-grad[active].mean())
    elif neg.any():
        a = float(-grad[pos].mean())  # estimates nu + mu
        b = float(grad[neg].mean())   # estimates mu - nu
        mu = (a + b) / 2.0
        nu = (a - b) / 2.0
    else:
        # boundary without shorts (l = 1): only nu + mu is identified
        a = float(-grad[pos].mean())
        mu_min = float((a + grad.max()) / 2.0)  # smallest mu keeping lambda_minus >= 0
        mu = max(0.0, mu_min)
        nu = a - mu

    lam_plus = grad + (nu + mu)
    lam_minus = -grad + (mu - nu)
    dual = max(0.0, float(-mu))
    dual = max(dual, float(np.maximum(-lam_plus, 0.0).max()))
    dual = max(dual, float(np.maximum(-lam_minus, 0.0).max()))
    comp = float(np.abs(lam_plus * np.maximum(w, 0.0)).max())
    comp = max(comp, float(np.abs(lam_minus * np.maximum(-w, 0.0)).max()))
    if math.isfinite(leverage):
        comp = max(comp, abs(mu * (leverage - l1)))
    return max(primal, dual / scale, comp / scale)


def _solve_split_qp(sigma: np.ndarray, leverage: float) -> np.ndarray:
    """Leverage-bound QP via cvxpy on the w = w_plus - w_minus split."""
    import cvxpy as cp

    n = sigma.shape[0]
    chol = np.linalg.cholesky(sigma)
    w_plus = cp.Variable(n, nonneg=True)
    w_minus = cp.Variable(n, nonneg=True)
    w = w_plus - w_minus
    objective = cp.Minimize(cp.sum_squares(chol.T @ w))
    constraints = [cp.sum(w) == 1, cp.sum(w_plus + w_minus) <= leverage]
    problem = cp.Problem(objective, constraints)
    solvers: list[tuple[str, dict]] = [
        ("CLARABEL", {}),
        ("OSQP", {"eps_abs": 1e-10, "eps_rel": 1e-10, "max_iter": 200_000}),
        ("SCS", {"eps": 1e-9}),
    ]
    last_error: Exception | None = None
    for name, opts in solvers:
        if name not in cp.installed_solvers():
            continue
        try:
            problem.solve(solver=name, **opts)
        except cp.error.SolverError as exc:
            last_error = exc
            continue
        if w_plus.value is not None:
            return np.asarray(w_plus.value - w_minus.value, dtype=np.float64)
    raise SolverError(f"all QP solvers failed ({last_error})", residual=math.inf)


def _polish_active_set(sigma: np.ndarray, leverage: float, start: np.ndarray) -> np.ndarray | None:
    """Refine a near-solution to machine precision on its active face.

    Solves the equality-constrained QP restricted to the sign pattern of
    ``start`` (with the leverage constraint tight), moving coordinates whose
    sign flips into the zero set and retrying. Returns None if no
    consistent face is found.
    """
    n = sigma.shape[0]
    scale = float(np.abs(start).max())
    signs = np.sign(np.where(np.abs(start) > 1e-7 * max(1.0, scale), start, 0.0))
    for _ in range(25):
        active = np.flatnonzero(signs)
        if active.size == 0:
            return None
        s_act = signs[active]
        if np.all(s_act > 0) or np.all(s_act < 0):
            return None  # leverage row collinear with the budget row
        k = active.size
        kkt = np.zeros((k + 2, k + 2))
        kkt[:k, :k] = 2.0 * sigma[np.ix_(active, active)]
        kkt[:k, k] = 1.0
        kkt[k, :k] = 1.0
        kkt[:k, k + 1] = s_act
        kkt[k + 1, :k] = s_act
        rhs = np.zeros(k + 2)
        rhs[k] = 1.0
        rhs[k + 1] = leverage
        try:
            sol = np.linalg.solve(kkt, rhs)
        except np.linalg.LinAlgError:
            return None
        w_act = sol[:k]
        flipped = np.sign(w_act) * s_act < 0
        if flipped.any():
            bad = active[flipped]
            signs[bad] = 0.0
            continue
        w = np.zeros(n)
        w[active] = w_act
        return w
    return None


def _polish_long_only(sigma: np.ndarray, start: np.ndarray) -> np.ndarray | None:
    """Polish for the l = 1 face, where all weights are non-negative."""
    n = sigma.shape[0]
    active_mask = start > 1e-7 * max(1.0, float(np.abs(start).max()))
    for _ in range(25):
        active = np.flatnonzero(active_mask)
        if active.size == 0:
            return None
        k = active.size
        kkt = np.zeros((k + 1, k + 1))
        kkt[:k, :k] = 2.0 * sigma[np.ix_(active, active)]
        kkt[:k, k] = 1.0
        kkt[k, :k] = 1.0
        rhs = np.zeros(k + 1)
        rhs[k] = 1.0
        try:
            sol = np.linalg.solve(kkt, rhs)
        except np.linalg.LinAlgError:
            return None
        w_act = sol[:k]
        if (w_act < 0).any():
            active_mask[active[w_act < 0]] = False
            continue
        w = np.zeros(n)
        w[active] = w_act
        return w
    return None


def mean_variance_weights(
    sigma: np.ndarray | CovarianceEstimate,
    leverage: float = math.inf,
    kkt_tol: float = KKT_TOLERANCE,
) -> np.ndarray:
    """Minimum-variance weights subject to sum(w) = 1 and ||w||_1 <= leverage.

    When the leverage bound does not bind (including leverage = inf) the
    exact stationarity system is solved directly and must agree with
    ``gmv_weights``. Otherwise the split QP is solved numerically and
    polished; the result is only returned if its KKT residual is within
    ``kkt_tol``.
    """
    values = sigma.values if isinstance(sigma, CovarianceEstimate) else sigma
    s = _check_covariance(values)
    if not _cholesky_ok(s):
        raise NotPositiveDefiniteError("covariance is not positive definite")
    if leverage < 1.0:
        raise InfeasibleLeverageError(
            f"leverage {leverage} < 1 is infeasible with fully invested weights")

    w_gmv = _gmv_via_kkt(s)
    if not math.isfinite(leverage) or float(np.abs(w_gmv).sum()) <= leverage + 1e-12:
        return w_gmv  # budget is slack: the GMV point already satisfies KKT

    raw = _solve_split_qp(s, leverage)
    if abs(leverage - 1.0) <= 1e-12:
        polished = _polish_long_only(s, raw)
    else:
        polished = _polish_active_set(s, leverage, raw)

    best: np.ndarray | None = None
    best_res = math.inf
    for cand in (polished, raw):
        if cand is None:
            continue
        res = kkt_residual(s, cand, leverage)
        if res < best_res:
            best, best_res = cand, res
        if res <= kkt_tol:
            return cand
    assert best is not None
    raise SolverError("QP solution failed KKT verification", residual=best_res)


def _cholesky_ok(matrix: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(matrix)
        return True
    except np.linalg.LinAlgError:
        return False


def backtest(
    estimates: Sequence[CovarianceEstimate],
    returns: np.ndarray,
    dates: Sequence[str],
    leverage: float = math.inf,
    cond_limit: float = DEFAULT_CONDITION_LIMIT,
) -> BacktestReport:
    """Walk-forward daily backtest.

    Day t uses the estimate of day t-1; the first day is skipped outright.
    Days whose prior estimate has condition number above ``cond_limit`` are
    not traded (zero weights, zero return) and counted as skipped.
    ``returns`` holds one open-to-close log return vector per day (T x N).
    """
    r = np.asarray(returns, dtype=np.float64)
    if r.ndim != 2:
        raise ValueError("returns must be a T x N array")
    t_days = r.shape[0]
    if len(estimates) != t_days or len(dates) != t_days:
        raise ValueError("estimates, returns, and dates must align")
    for est, date in zip(estimates, dates):
        if est.label is not None and est.label != str(date):
            raise ValueError(f"estimate label {est.label!r} does not match date {date!r}")
    if t_days < 2:
        raise ValueError("need at least two days to trade")

    out_dates: list[str] = []
    out_returns: list[float] = []
    weights_log: list[PortfolioWeights] = []
    skipped = 0
    n = r.shape[1]
    for t in range(1, t_days):
        est = estimates[t - 1]
        date = str(dates[t])
        if est.condition_number > cond_limit:
            skipped += 1
            w = np.zeros(n)
            weights_log.append(PortfolioWeights(date, w, 0.0, traded=False))
            out_returns.append(0.0)
        else:
            w = mean_variance_weights(est.values, leverage)
            weights_log.append(PortfolioWeights(date, w, float(np.abs(w).sum()), traded=True))
            out_returns.append(float(w @ r[t]))
        out_dates.append(date)

    daily = np.asarray(out_returns)
    stats = performance_stats(daily)
    logger.info("backtest: %d days, %d skipped, ann vol %.4f, sharpe %.3f",
                daily.size, skipped, stats.ann_vol, stats.sharpe)
    return BacktestReport(
        dates=tuple(out_dates),
        daily_returns=daily,
        ann_vol=stats.ann_vol,
        sharpe=stats.sharpe,
        cum_path=stats.cum_path,
        skipped_days=skipped,
        weights=tuple(weights_log),
    )


def performance_stats(daily_returns: np.ndarray | Sequence[float]) -> PerformanceStats:
    """Annualized volatility and Sharpe ratio of daily log returns.

    vol = stdev(r) * sqrt(252) with the n-1 convention; sharpe =
    mean(r) * 252 / vol (no risk-free adjustment). Zero volatility is
    flagged with a signed infinite Sharpe (nan when the mean is also zero).
    The cumulative path is the running sum of log returns.
    """
    r = np.asarray(daily_returns, dtype=np.float64)
    if r.ndim != 1 or r.size == 0:
        raise ValueError("daily returns must be a non-empty vector")
    stdev = float(r.std(ddof=1)) if r.size > 1 else 0.0
    ann_vol = stdev * math.sqrt(TRADING_DAYS_PER_YEAR)
    mean = float(r.mean())
    if ann_vol > 0.0:
        sharpe = mean * TRADING_DAYS_PER_YEAR / ann_vol
    else:
        sharpe = math.inf if mean > 0 else (-math.inf if mean < 0 else math.nan)
    return PerformanceStats(ann_vol=ann_vol, sharpe=sharpe, cum_path=np.cumsum(r))
