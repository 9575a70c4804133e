"""Shared fixtures and builders for the test suite."""

from __future__ import annotations

import datetime as dt

import numpy as np
import pytest

from cotrading import TradeTape

DAY = dt.date(2000, 1, 3)


def make_tape(timestamps, directions=None, quantities=None, symbol=0, day=DAY):
    """Build a tape from plain lists; fills directions/quantities if omitted.

    Sorts by timestamp and merges duplicate (timestamp, direction) rows so
    arbitrary random draws are always valid tapes.
    """
    ts = np.asarray(timestamps, dtype=np.int64)
    n = ts.size
    if directions is None:
        # alternate so duplicates at one stamp can still merge cleanly
        directions = np.where(np.arange(n) % 2 == 0, 1, -1)
    dr = np.asarray(directions, dtype=np.int8)
    if quantities is None:
        quantities = np.full(n, 100, dtype=np.int64)
    qt = np.asarray(quantities, dtype=np.int64)
    order = np.argsort(ts, kind="stable")
    ts, dr, qt = ts[order], dr[order], qt[order]
    # merge duplicates of the same (timestamp, direction)
    if n:
        key = ts * 2 + (dr > 0).astype(np.int64)
        uniq, inverse = np.unique(key, return_inverse=True)
        if uniq.size != key.size:
            mts = np.zeros(uniq.size, dtype=np.int64)
            mdr = np.zeros(uniq.size, dtype=np.int8)
            mqt = np.zeros(uniq.size, dtype=np.int64)
            for pos, grp in enumerate(inverse):
                mts[grp] = ts[pos]
                mdr[grp] = dr[pos]
                mqt[grp] += qt[pos]
            ts, dr, qt = mts, mdr, mqt
    return TradeTape(symbol=symbol, day=day, timestamps=ts,
                     directions=dr, quantities=qt)


def random_tape(rng: np.random.Generator, n_trades: int, symbol: int = 0,
                span_ns: int = 10_000_000_000) -> TradeTape:
    ts = rng.integers(0, span_ns, size=n_trades)
    dr = rng.choice([-1, 1], size=n_trades)
    qt = rng.integers(1, 500, size=n_trades)
    return make_tape(ts, dr, qt, symbol=symbol)


def random_spd(rng: np.random.Generator, n: int, jitter: float = 0.5) -> np.ndarray:
    """Random symmetric positive definite matrix with bounded conditioning."""
    a = rng.standard_normal((n, n))
    return a @ a.T + (jitter + n) * np.eye(n)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(2024)
