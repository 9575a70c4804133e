"""Synthetic trade tapes and factor return panels with planted structure.

Trades: each cluster fires Poisson bursts; a burst puts one trade per
member within a tight jitter window, on top of independent per-symbol
Poisson background trades. Keeping the jitter width below the co-occurrence
window makes every intra-burst pair co-occur, so the planted partition is
recoverable from the co-trading matrix.

Returns: r = B f + u with Gaussian factors and idiosyncratic shocks whose
covariance is block diagonal along the same planted partition. The exact
population covariance is returned for oracle comparisons, scaled to match
the summed-outer-product realized estimator.
"""

from __future__ import annotations

import datetime as dt
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .clustering import Partition
from .covariance import ReturnPanel
from .trade_model import TradeTape, merge_same_stamp

__all__ = [
    "SynthConfig",
    "planted_partition",
    "gen_clustered_trades",
    "gen_factor_returns",
]

NS_PER_HOUR = 3_600_000_000_000
DEFAULT_OPEN_NS = 34_200_000_000_000  # 09:30
DEFAULT_CLOSE_NS = 57_600_000_000_000  # 16:00


@dataclass(frozen=True)
class SynthConfig:
    """Knobs of the synthetic world.

    Defaults give 50 symbols in 5 clusters with 60 bursts per cluster-hour,
    600 background trades per symbol-hour, 200 ms jitter, and a 500 ms
    co-occurrence window.
    """

    n_symbols: int = 50
    n_clusters: int = 5
    cluster_sizes: tuple[int, ...] | None = None
    days: int = 5
    open_ns: int = DEFAULT_OPEN_NS
    close_ns: int = DEFAULT_CLOSE_NS
    burst_rate_per_hour: float = 60.0
    background_rate_per_hour: float = 600.0
    jitter_ns: int = 200_000_000
    delta_ns: int = 500_000_000
    n_factors: int = 3
    factor_vol: float = 0.002
    idio_vol: float = 0.002
    block_correlation: float = 0.3
    sampling_delta_ns: int = 300_000_000_000  # 5 minutes
    start_date: dt.date = dt.date(2000, 1, 3)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_symbols < 1:
            raise ValueError("n_symbols must be >= 1")
        if not (1 <= self.n_clusters <= self.n_symbols):
            raise ValueError("n_clusters must be in [1, n_symbols]")
        if self.cluster_sizes is not None:
            sizes = tuple(int(s) for s in self.cluster_sizes)
            object.__setattr__(self, "cluster_sizes", sizes)
            if len(sizes) != self.n_clusters or any(s < 1 for s in sizes):
                raise ValueError("cluster_sizes must give a positive size per cluster")
            if sum(sizes) != self.n_symbols:
                raise ValueError("cluster_sizes must sum to n_symbols")
        if self.days < 1:
            raise ValueError("days must be >= 1")
        if self.open_ns >= self.close_ns:
            raise ValueError("open must precede close")
        if self.burst_rate_per_hour < 0 or self.background_rate_per_hour < 0:
            raise ValueError("rates must be non-negative")
        if self.jitter_ns <= 0:
            raise ValueError("jitter_ns must be positive")
        if self.jitter_ns >= self.delta_ns:
            raise ValueError(
                "jitter width must stay below delta_ns so intra-burst trades co-occur")
        if self.n_factors < 1:
            raise ValueError("n_factors must be >= 1")
        if self.factor_vol <= 0 or self.idio_vol <= 0:
            raise ValueError("volatilities must be positive")
        if (self.close_ns - self.open_ns) % self.sampling_delta_ns != 0:
            raise ValueError("sampling_delta_ns must divide the session length")

    @property
    def sizes(self) -> tuple[int, ...]:
        if self.cluster_sizes is not None:
            return self.cluster_sizes
        base, extra = divmod(self.n_symbols, self.n_clusters)
        return tuple(base + (1 if c < extra else 0) for c in range(self.n_clusters))

    @property
    def session_hours(self) -> float:
        return (self.close_ns - self.open_ns) / NS_PER_HOUR

    @property
    def m_intervals(self) -> int:
        return (self.close_ns - self.open_ns) // self.sampling_delta_ns

    def dates(self) -> list[dt.date]:
        return [self.start_date + dt.timedelta(days=i) for i in range(self.days)]


def planted_partition(config: SynthConfig) -> Partition:
    """The ground-truth cluster assignment implied by the config."""
    labels = np.repeat(np.arange(config.n_clusters, dtype=np.int64), config.sizes)
    return Partition(assignments=labels, k=config.n_clusters, seed=config.seed)


def _log_uniform_quantities(rng: np.random.Generator, size: int) -> np.ndarray:
    q = np.exp(rng.uniform(math.log(100.0), math.log(1000.0), size))
    return np.clip(np.rint(q).astype(np.int64), 100, 1000)


def _day_tapes(config: SynthConfig, day: dt.date, rng: np.random.Generator) -> list[TradeTape]:
    hours = config.session_hours
    half_jitter = config.jitter_ns // 2
    labels = planted_partition(config).assignments

    times: list[list[np.ndarray]] = [[] for _ in range(config.n_symbols)]
    members_of = [np.flatnonzero(labels == c) for c in range(config.n_clusters)]
    for c in range(config.n_clusters):
        n_bursts = int(rng.poisson(config.burst_rate_per_hour * hours))
        centers = rng.integers(config.open_ns + half_jitter,
                               config.close_ns - half_jitter + 1,
                               size=n_bursts, dtype=np.int64)
        for sym in members_of[c]:
            jitter = rng.integers(-half_jitter + 1, half_jitter, size=n_bursts, dtype=np.int64)
            times[sym].append(centers + jitter)
    for sym in range(config.n_symbols):
        n_bg = int(rng.poisson(config.background_rate_per_hour * hours))
        times[sym].append(rng.integers(config.open_ns, config.close_ns + 1,
                                       size=n_bg, dtype=np.int64))

    tapes = []
    for sym in range(config.n_symbols):
        ts = np.concatenate(times[sym]) if times[sym] else np.empty(0, dtype=np.int64)
        dirs = np.where(rng.integers(0, 2, size=ts.size) == 1, 1, -1).astype(np.int8)
        qtys = _log_uniform_quantities(rng, ts.size)
        t, d, q = merge_same_stamp(ts, dirs, qtys)
        tapes.append(TradeTape(symbol=sym, day=day, timestamps=t, directions=d, quantities=q))
    return tapes


def gen_clustered_trades(config: SynthConfig) -> tuple[list[tuple[dt.date, list[TradeTape]]], Partition]:
    """Per-day trade tapes with planted cluster bursts.

    Deterministic for a fixed config (day streams are derived from the seed,
    so days are independent and could be generated in parallel).
    """
    hours = config.session_hours
    starved = any(
        rate > 0 and rate * hours < 1
        for rate in (config.burst_rate_per_hour, config.background_rate_per_hour)
    )
    if starved:
        warnings.warn("session too short for the configured rates; "
                      "expect empty or degenerate tapes", stacklevel=2)
    # trades get subtree 0, returns subtree 1: independent streams per day
    root = np.random.SeedSequence(config.seed).spawn(2)[0]
    day_seqs = root.spawn(config.days)
    out = []
    for day, seq in zip(config.dates(), day_seqs):
        rng = np.random.default_rng(seq)
        out.append((day, _day_tapes(config, day, rng)))
    return out, planted_partition(config)


def _idio_covariance(config: SynthConfig) -> np.ndarray:
    """Block-diagonal equicorrelated idiosyncratic covariance."""
    rho = config.block_correlation
    max_size = max(config.sizes)
    if not (-1.0 / max(max_size - 1, 1) < rho < 1.0):
        raise ValueError(
            f"block_correlation {rho} makes the idiosyncratic covariance non-PD "
            f"(needs -1/{max_size - 1} < rho < 1)")
    labels = planted_partition(config).assignments
    same = labels[:, None] == labels[None, :]
    var = config.idio_vol ** 2
    sigma_u = np.where(same, var * rho, 0.0)
    np.fill_diagonal(sigma_u, var)
    return sigma_u


def gen_factor_returns(config: SynthConfig) -> tuple[list[ReturnPanel], np.ndarray]:
    """Per-day factor-model return panels and the exact covariance.

    Returns follow r = B f + u per grid interval with f ~ N(0, factor_vol^2 I)
    and u block-correlated along the planted partition. The returned truth
    is m * (factor_vol^2 B B' + Sigma_u), the expectation of the uncentered
    summed-outer-product estimator, and is asserted positive definite by
    factorization.
    """
    sigma_u = _idio_covariance(config)
    root = np.random.SeedSequence(config.seed).spawn(2)[1]
    streams = root.spawn(config.days + 1)
    beta_rng = np.random.default_rng(streams[0])
    beta = beta_rng.normal(0.0, 1.0, size=(config.n_symbols, config.n_factors))

    m = config.m_intervals
    truth = m * (config.factor_vol ** 2 * beta @ beta.T + sigma_u)
    truth = (truth + truth.T) / 2.0
    np.linalg.cholesky(truth)  # generated covariance must be PD

    labels = planted_partition(config).assignments
    rho = config.block_correlation
    # rho >= 0 uses the shared-Gaussian decomposition; negative equicorrelation
    # needs the explicit factor of the block matrix
    chol_u = None if rho >= 0 else np.linalg.cholesky(sigma_u)
    grid = config.open_ns + config.sampling_delta_ns * np.arange(m, dtype=np.int64)
    panels = []
    for day, seq in zip(config.dates(), streams[1:]):
        rng = np.random.default_rng(seq)
        factors = rng.normal(0.0, config.factor_vol, size=(m, config.n_factors))
        if chol_u is None:
            z = rng.normal(0.0, 1.0, size=(config.n_symbols, m))
            shared = rng.normal(0.0, 1.0, size=(config.n_clusters, m))
            u = config.idio_vol * (math.sqrt(rho) * shared[labels] + math.sqrt(1 - rho) * z)
        else:
            u = chol_u @ rng.normal(0.0, 1.0, size=(config.n_symbols, m))
        returns = beta @ factors.T + u
        panels.append(ReturnPanel(
            grid=grid,
            returns=returns,
            open_ns=config.open_ns,
            close_ns=config.close_ns,
            delta_ns=config.sampling_delta_ns,
            symbols=tuple(range(config.n_symbols)),
            label=day.isoformat(),
        ))
    return panels, truth


def default_config(**overrides) -> SynthConfig:
    """The documented default configuration, with keyword overrides."""
    return replace(SynthConfig(), **overrides) if overrides else SynthConfig()
