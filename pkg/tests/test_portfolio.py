"""Mean-variance weights, the GMV solution, backtesting, and performance stats."""

from __future__ import annotations

import math

import numpy as np
import pytest

from cotrading import (
    InfeasibleLeverageError,
    NotPositiveDefiniteError,
    backtest,
    gmv_weights,
    kkt_residual,
    mean_variance_weights,
    performance_stats,
)
from cotrading.covariance import CovarianceEstimate

import oracles
from conftest import random_spd


def estimate(values, label=None, cond=None) -> CovarianceEstimate:
    values = np.asarray(values, dtype=np.float64)
    if cond is None:
        ev = np.linalg.eigvalsh(values)
        cond = float(ev[-1] / ev[0]) if ev[0] > 0 else math.inf
    return CovarianceEstimate(values=values, kind="realized", condition_number=cond,
                              positive_definite=bool(cond < math.inf), label=label)


# -- GMV ---------------------------------------------------------------------------

def test_gmv_identity():
    assert gmv_weights(np.eye(4)) == pytest.approx([0.25] * 4, abs=1e-12)


def test_gmv_diag_example():
    w = gmv_weights(np.diag([1.0, 4.0]))
    assert w == pytest.approx([0.8, 0.2], abs=1e-12)


def test_gmv_matches_solve_oracle(rng):
    for _ in range(20):
        sigma = random_spd(rng, 6)
        assert gmv_weights(sigma) == pytest.approx(
            oracles.gmv_closed_form(sigma), abs=1e-10)


def test_gmv_monte_carlo_optimality(rng):
    sigma = random_spd(rng, 5)
    w = gmv_weights(sigma)
    best = w @ sigma @ w
    for _ in range(1000):
        v = rng.normal(size=5)
        if abs(v.sum()) < 1e-9:
            continue
        v = v / v.sum()
        assert best <= v @ sigma @ v + 1e-12


def test_gmv_budget_constraint(rng):
    sigma = random_spd(rng, 7)
    assert gmv_weights(sigma).sum() == pytest.approx(1.0, abs=1e-10)


def test_gmv_rejects_non_pd():
    with pytest.raises(NotPositiveDefiniteError):
        gmv_weights(np.diag([1.0, -2.0]))
    with pytest.raises(NotPositiveDefiniteError):
        gmv_weights(np.ones((3, 3)))


# -- leverage-constrained weights --------------------------------------------------

def test_mv_leverage_one_is_long_only(rng):
    for _ in range(10):
        sigma = random_spd(rng, 5)
        w = mean_variance_weights(sigma, leverage=1.0)
        assert (w >= -1e-10).all()
        assert w.sum() == pytest.approx(1.0, abs=1e-8)
        assert np.abs(w).sum() <= 1.0 + 1e-8


def test_mv_unbounded_matches_gmv():
    w = mean_variance_weights(np.diag([1.0, 4.0]), leverage=math.inf)
    assert w == pytest.approx([0.8, 0.2], abs=1e-6)


def test_mv_unbounded_matches_gmv_random(rng):
    for _ in range(10):
        sigma = random_spd(rng, 6)
        w = mean_variance_weights(sigma, leverage=math.inf)
        assert w == pytest.approx(gmv_weights(sigma), abs=1e-6)


def test_mv_objective_monotone_in_leverage():
    # a strong negative-correlation pair rewards shorting elsewhere
    sigma = np.asarray([
        [1.0, -0.9, 0.1, 0.05],
        [-0.9, 1.0, 0.05, 0.1],
        [0.1, 0.05, 0.6, 0.0],
        [0.05, 0.1, 0.0, 0.6],
    ])
    assert np.all(np.linalg.eigvalsh(sigma) > 0)
    objectives = []
    for lev in (1.0, 3.0, 5.0, math.inf):
        w = mean_variance_weights(sigma, leverage=lev)
        assert np.abs(w).sum() <= (lev if math.isfinite(lev) else np.inf) + 1e-8
        objectives.append(float(w @ sigma @ w))
    for tighter, looser in zip(objectives, objectives[1:]):
        assert looser <= tighter + 1e-9


def test_mv_binding_constraint_hits_leverage(rng):
    sigma = np.asarray([[1.0, -0.95], [-0.95, 1.0]])
    w_free = gmv_weights(sigma)
    lev = 0.5 * np.abs(w_free).sum() + 0.5  # strictly between 1 and the GMV leverage
    if lev < np.abs(w_free).sum():
        w = mean_variance_weights(sigma, leverage=lev)
        assert np.abs(w).sum() == pytest.approx(lev, abs=1e-6)


def test_mv_scale_equivariance(rng):
    sigma = random_spd(rng, 4)
    for lev in (1.0, 2.0, math.inf):
        a = mean_variance_weights(sigma, leverage=lev)
        b = mean_variance_weights(25.0 * sigma, leverage=lev)
        assert a == pytest.approx(b, abs=1e-6)


def test_mv_kkt_certificate(rng):
    for _ in range(5):
        sigma = random_spd(rng, 5)
        for lev in (1.0, 1.5, math.inf):
            w = mean_variance_weights(sigma, leverage=lev)
            assert kkt_residual(sigma, w, lev) <= 1e-8


def test_mv_infeasible_leverage():
    with pytest.raises(InfeasibleLeverageError):
        mean_variance_weights(np.eye(3), leverage=0.5)


def test_mv_rejects_non_pd():
    with pytest.raises(NotPositiveDefiniteError):
        mean_variance_weights(np.diag([1.0, 0.0]), leverage=2.0)


# -- backtest ---------------------------------------------------------------------

def test_backtest_all_gated():
    t, n = 5, 3
    ests = [estimate(np.eye(n), cond=1e12, label=f"2000-01-{3 + d:02d}")
            for d in range(t)]
    rets = np.full((t, n), 0.01)
    dates = [f"2000-01-{3 + d:02d}" for d in range(t)]
    report = backtest(ests, rets, dates)
    assert report.skipped_days == t - 1
    assert np.array_equal(report.daily_returns, np.zeros(t - 1))
    assert all(not w.traded for w in report.weights)
    assert report.ann_vol == 0.0


def test_backtest_single_asset_tracks_returns(rng):
    t = 6
    ests = [estimate([[1.0]]) for _ in range(t)]
    rets = rng.normal(0, 0.01, size=(t, 1))
    dates = [f"2000-01-{3 + d:02d}" for d in range(t)]
    report = backtest(ests, rets, dates)
    assert report.daily_returns == pytest.approx(rets[1:, 0], abs=1e-10)
    stats = performance_stats(rets[1:, 0])
    assert report.ann_vol == pytest.approx(stats.ann_vol)
    assert report.sharpe == pytest.approx(stats.sharpe)


def test_backtest_first_day_excluded(rng):
    t, n = 4, 2
    ests = [estimate(random_spd(rng, n)) for _ in range(t)]
    rets = rng.normal(0, 0.01, size=(t, n))
    dates = [f"2000-01-{3 + d:02d}" for d in range(t)]
    report = backtest(ests, rets, dates)
    assert len(report.daily_returns) == t - 1
    assert report.dates == tuple(dates[1:])


def test_backtest_uses_prior_day_estimate(rng):
    # day 1 trades on day 0's estimate: verify the weights match it exactly
    sig0 = random_spd(rng, 3)
    sig1 = random_spd(rng, 3)
    ests = [estimate(sig0), estimate(sig1)]
    rets = rng.normal(0, 0.01, size=(2, 3))
    report = backtest(ests, rets, ["2000-01-03", "2000-01-04"])
    w = report.weights[0]
    assert w.traded
    assert w.weights == pytest.approx(mean_variance_weights(sig0, math.inf), abs=1e-12)
    assert report.daily_returns[0] == pytest.approx(float(w.weights @ rets[1]))


def test_backtest_mixed_gating(rng):
    n = 2
    good = estimate(np.eye(n))
    bad = estimate(np.eye(n), cond=1e10)
    ests = [good, bad, good, good]
    rets = rng.normal(0, 0.01, size=(4, n))
    dates = [f"2000-01-{3 + d:02d}" for d in range(4)]
    report = backtest(ests, rets, dates, cond_limit=1e9)
    assert report.skipped_days == 1
    assert report.daily_returns[1] == 0.0
    assert report.weights[1].traded is False
    assert report.weights[0].traded and report.weights[2].traded


def test_backtest_misalignment_rejected(rng):
    ests = [estimate(np.eye(2)) for _ in range(3)]
    rets = rng.normal(size=(4, 2))
    with pytest.raises(ValueError):
        backtest(ests, rets, [f"2000-01-{3 + d:02d}" for d in range(4)])


def test_backtest_label_date_mismatch_rejected(rng):
    ests = [estimate(np.eye(2), label="1999-12-31") for _ in range(2)]
    rets = rng.normal(size=(2, 2))
    with pytest.raises(ValueError):
        backtest(ests, rets, ["2000-01-03", "2000-01-04"])


# -- performance stats ----------------------------------------------------------

def test_stats_constant_returns():
    s = performance_stats([0.001, 0.001, 0.001])
    assert s.ann_vol == 0.0
    assert math.isinf(s.sharpe)
    assert s.cum_path == pytest.approx([0.001, 0.002, 0.003])


def test_stats_zero_mean():
    s = performance_stats([0.01, -0.01])
    assert s.sharpe == pytest.approx(0.0, abs=1e-12)


def test_stats_hand_case():
    s = performance_stats([0.01, 0.02, 0.00])
    stdev = 0.01
    assert s.ann_vol == pytest.approx(stdev * math.sqrt(252), rel=1e-12)
    assert s.ann_vol == pytest.approx(0.15874507866387544, rel=1e-12)
    mean = 0.01
    assert s.sharpe == pytest.approx(mean * 252 / (stdev * math.sqrt(252)), rel=1e-12)
    assert s.sharpe == pytest.approx(15.874507866387544, rel=1e-9)


def test_stats_cum_path_is_running_sum(rng):
    r = rng.normal(0, 0.01, size=20)
    s = performance_stats(r)
    assert s.cum_path == pytest.approx(np.cumsum(r), abs=1e-14)


def test_stats_empty_rejected():
    with pytest.raises(ValueError):
        performance_stats([])
