"""Grid returns, realized covariance, factor split, and block thresholding."""

from __future__ import annotations

import math

import numpy as np
import pytest

from cotrading import (
    block_threshold,
    condition_number,
    estimate_cluster_covariance,
    factor_split,
    grid_log_returns,
    is_positive_definite,
    open_close_returns,
    realized_covariance,
)
from cotrading.clustering import Partition
from cotrading.covariance import ReturnPanel

import oracles

OPEN = 34_200_000_000_000   # 09:30 in ns since midnight
CLOSE = 57_600_000_000_000  # 16:00
FIVE_MIN = 300_000_000_000


def make_panel(returns, delta_ns=1, label=None) -> ReturnPanel:
    r = np.asarray(returns, dtype=np.float64)
    m = r.shape[1]
    return ReturnPanel(grid=np.arange(m, dtype=np.int64) * delta_ns, returns=r,
                       open_ns=0, close_ns=m * delta_ns, delta_ns=delta_ns,
                       symbols=tuple(range(r.shape[0])), label=label)


# -- grid returns -----------------------------------------------------------------

def test_session_grid_has_78_intervals():
    ticks = (np.asarray([OPEN - 1000]), np.asarray([100.0]))
    panel = grid_log_returns([ticks], OPEN, CLOSE, FIVE_MIN)
    assert panel.returns.shape == (1, 78)
    assert panel.grid[0] == OPEN
    assert panel.grid[-1] == CLOSE - FIVE_MIN


def test_constant_price_gives_zero_row():
    times = np.arange(OPEN - 1000, CLOSE, 60_000_000_000)
    ticks = (times, np.full(times.size, 250.0))
    panel = grid_log_returns([ticks], OPEN, CLOSE, FIVE_MIN)
    assert np.array_equal(panel.returns, np.zeros((1, 78)))


def test_single_step_log_return():
    # price moves from 100 to 100 e^{0.01} across the first interval
    times = np.asarray([OPEN - 1, OPEN + FIVE_MIN])
    prices = np.asarray([100.0, 100.0 * math.exp(0.01)])
    panel = grid_log_returns([ticks for ticks in [(times, prices)]][0:1],
                             OPEN, CLOSE, FIVE_MIN)
    assert panel.returns[0, 0] == pytest.approx(0.01, abs=1e-14)
    assert np.allclose(panel.returns[0, 1:], 0.0)


def test_snapping_matches_linear_scan_oracle(rng):
    n_ticks = 400
    times = np.sort(rng.integers(OPEN - 10**9, CLOSE, size=n_ticks))
    prices = np.exp(rng.normal(4.6, 0.01, size=n_ticks))
    panel = grid_log_returns([(times, prices)], OPEN, CLOSE, FIVE_MIN)
    logp = np.log(prices).tolist()
    tl = times.tolist()
    for j, t in enumerate(panel.grid):
        p_end, _ = oracles.last_at_or_before_linear(tl, logp, int(t) + FIVE_MIN)
        p_start, _ = oracles.last_at_or_before_linear(tl, logp, int(t))
        assert panel.returns[0, j] == pytest.approx(p_end - p_start, abs=1e-14)


def test_row_sums_telescope_to_open_close(rng):
    times = np.sort(rng.integers(OPEN - 10**9, CLOSE, size=300))
    prices = np.exp(rng.normal(4.6, 0.02, size=300))
    panel = grid_log_returns([(times, prices)], OPEN, CLOSE, FIVE_MIN)
    logp = np.log(prices).tolist()
    tl = times.tolist()
    p_open, _ = oracles.last_at_or_before_linear(tl, logp, OPEN)
    p_close, _ = oracles.last_at_or_before_linear(tl, logp, CLOSE)
    assert open_close_returns(panel)[0] == pytest.approx(p_close - p_open, abs=1e-12)


def test_backfill_flagged_when_first_tick_is_late():
    late = (np.asarray([OPEN + 2 * FIVE_MIN + 5]), np.asarray([50.0]))
    early = (np.asarray([OPEN - 5]), np.asarray([60.0]))
    panel = grid_log_returns([late, early], OPEN, CLOSE, FIVE_MIN)
    assert panel.backfilled == (0,)
    assert np.array_equal(panel.returns[0], np.zeros(78))  # constant after backfill


def test_nonpositive_price_rejected():
    with pytest.raises(ValueError):
        grid_log_returns([(np.asarray([OPEN]), np.asarray([0.0]))],
                         OPEN, CLOSE, FIVE_MIN)


def test_indivisible_delta_rejected():
    with pytest.raises(ValueError):
        grid_log_returns([(np.asarray([OPEN]), np.asarray([1.0]))],
                         OPEN, CLOSE, FIVE_MIN + 1)


# -- realized covariance -----------------------------------------------------------

def test_realized_zero_panel():
    est = realized_covariance(make_panel(np.zeros((3, 5))))
    assert np.array_equal(est.values, np.zeros((3, 3)))
    assert est.kind == "realized"


def test_realized_single_interval_outer_product():
    est = realized_covariance(make_panel([[1.0], [2.0]]))
    assert np.allclose(est.values, [[1.0, 2.0], [2.0, 4.0]], atol=1e-15)


def test_realized_uncentered():
    # constant nonzero returns must NOT wash out to zero
    est = realized_covariance(make_panel(np.full((2, 4), 0.5)))
    assert np.allclose(est.values, np.full((2, 2), 4 * 0.25), atol=1e-15)


def test_realized_psd_random(rng):
    r = rng.normal(size=(6, 10))
    est = realized_covariance(make_panel(r))
    for _ in range(50):
        x = rng.normal(size=6)
        assert x @ est.values @ x >= -1e-12


def test_realized_matches_loop_oracle(rng):
    r = rng.normal(size=(4, 7))
    est = realized_covariance(make_panel(r))
    assert np.allclose(est.values, oracles.realized_cov_loops(r), atol=1e-13)


def test_realized_interval_order_invariance(rng):
    r = rng.normal(size=(3, 9))
    shuffled = r[:, rng.permutation(9)]
    a = realized_covariance(make_panel(r)).values
    b = realized_covariance(make_panel(shuffled)).values
    assert np.allclose(a, b, atol=1e-14)


# -- factor split -----------------------------------------------------------------

def test_factor_split_diagonal_case():
    split = factor_split(np.diag([4.0, 1.0]), 1)
    assert np.allclose(split.factor, [[4.0, 0.0], [0.0, 0.0]], atol=1e-12)
    assert np.allclose(split.idio, [[0.0, 0.0], [0.0, 1.0]], atol=1e-12)
    assert split.eigenvalues[0] == pytest.approx(4.0)
    assert split.eigenvalues[1] == pytest.approx(1.0)


def test_factor_split_additivity(rng):
    from conftest import random_spd
    sigma = random_spd(rng, 8)
    for k in (1, 3, 7):
        split = factor_split(sigma, k)
        recon = split.factor + split.idio
        assert np.max(np.abs(recon - sigma)) < 1e-10 * np.max(np.abs(sigma))


def test_factor_split_matches_jacobi(rng):
    from conftest import random_spd
    sigma = random_spd(rng, 6)
    split = factor_split(sigma, 2)
    evals, evecs = oracles.jacobi_eigh(sigma)
    # oracle ascending; estimator descending
    want = sorted(evals, reverse=True)
    assert split.eigenvalues == pytest.approx(want, rel=1e-8)
    top = evecs[:, -2:]
    factor_oracle = sum(
        want[i] * np.outer(v, v)
        for i, v in enumerate([evecs[:, -1], evecs[:, -2]])
    )
    assert np.allclose(split.factor, factor_oracle, atol=1e-8)


def test_factor_split_sign_convention(rng):
    from conftest import random_spd
    split = factor_split(random_spd(rng, 5), 3)
    for col in range(split.eigenvectors.shape[1]):
        v = split.eigenvectors[:, col]
        assert v[np.argmax(np.abs(v))] > 0


def test_factor_split_k_bounds():
    sigma = np.eye(3)
    with pytest.raises(ValueError):
        factor_split(sigma, 0)
    with pytest.raises(ValueError):
        factor_split(sigma, 3)


# -- block thresholding -------------------------------------------------------------

def test_block_threshold_one_cluster(rng):
    idio = rng.normal(size=(5, 5))
    idio = (idio + idio.T) / 2
    part = Partition(np.zeros(5, dtype=np.int64), 1, 0)
    assert np.array_equal(block_threshold(idio, part), idio)


def test_block_threshold_singletons(rng):
    idio = rng.normal(size=(4, 4))
    idio = (idio + idio.T) / 2
    part = Partition(np.arange(4), 4, 0)
    assert np.array_equal(block_threshold(idio, part), np.diag(np.diag(idio)))


def test_block_threshold_hand_mask():
    idio = np.arange(16, dtype=np.float64).reshape(4, 4)
    idio = (idio + idio.T) / 2
    part = Partition(np.asarray([0, 0, 1, 1]), 2, 0)
    out = block_threshold(idio, part)
    want = idio.copy()
    want[0:2, 2:4] = 0.0
    want[2:4, 0:2] = 0.0
    assert np.array_equal(out, want)


def test_block_threshold_preserves_trace(rng):
    idio = rng.normal(size=(6, 6))
    idio = (idio + idio.T) / 2
    part = Partition(np.asarray([0, 1, 0, 2, 1, 2]), 3, 0)
    out = block_threshold(idio, part)
    assert np.trace(out) == pytest.approx(np.trace(idio), abs=1e-14)
    assert np.array_equal(np.diag(out), np.diag(idio))


def test_block_threshold_refinement_monotone(rng):
    idio = np.abs(rng.normal(size=(6, 6))) + 0.1
    idio = (idio + idio.T) / 2
    coarse = Partition(np.asarray([0, 0, 0, 1, 1, 1]), 2, 0)
    fine = Partition(np.asarray([0, 0, 2, 1, 1, 3]), 4, 0)  # splits both
    zc = block_threshold(idio, coarse) == 0
    zf = block_threshold(idio, fine) == 0
    assert (zf | ~zc).all() or (zc <= zf).all()
    assert zf.sum() >= zc.sum()


def test_block_threshold_length_mismatch():
    with pytest.raises(ValueError):
        block_threshold(np.eye(3), Partition(np.asarray([0, 1]), 2, 0))


# -- composed estimator ------------------------------------------------------------

def test_cluster_estimator_single_cluster_reproduces_realized(rng):
    r = rng.normal(0, 0.01, size=(5, 20))  # N < m so realized is PD
    panel = make_panel(r)
    part = Partition(np.zeros(5, dtype=np.int64), 1, 0)
    est = estimate_cluster_covariance(panel, 2, part)
    raw = realized_covariance(panel)
    assert np.allclose(est.values, raw.values, atol=1e-12)
    assert est.kind == "factor_block"
    assert est.k_factors == 2


def test_cluster_estimator_condition_number_consistency(rng):
    r = rng.normal(0, 0.01, size=(6, 30))
    panel = make_panel(r)
    part = Partition(np.asarray([0, 0, 0, 1, 1, 1]), 2, 0)
    est = estimate_cluster_covariance(panel, 2, part)
    evals, _ = oracles.jacobi_eigh(est.values)
    want = float(evals[-1] / evals[0]) if evals[0] > 0 else math.inf
    assert est.condition_number == pytest.approx(want, rel=1e-6)


def test_cluster_estimator_pd_flag_consistency(rng):
    r = rng.normal(0, 0.01, size=(6, 30))
    panel = make_panel(r)
    part = Partition(np.asarray([0, 1, 0, 1, 0, 1]), 2, 0)
    est = estimate_cluster_covariance(panel, 1, part)
    assert est.positive_definite == is_positive_definite(est.values)


# -- conditioning helpers -----------------------------------------------------------

def test_condition_number_identity():
    assert condition_number(np.eye(4)) == pytest.approx(1.0)


def test_condition_number_diag():
    assert condition_number(np.diag([10.0, 1.0, 2.0])) == pytest.approx(10.0)


def test_condition_number_singular_is_inf():
    assert math.isinf(condition_number(np.diag([1.0, 0.0])))


def test_is_positive_definite_cases():
    assert is_positive_definite(np.eye(3))
    assert not is_positive_definite(np.diag([1.0, -1.0, 2.0]))
    assert not is_positive_definite(np.diag([1.0, 0.0]))
