"""Trade events and per-symbol trade tapes.

Raw order-book event files (one file per symbol and day, in the style of
exchange message feeds) are reduced to clean execution tapes: only execution
events are kept, executions sharing a timestamp and direction are merged into
a single trade, and the direction of each trade is the opposite of the side
of the resting limit order it consumed.
"""

from __future__ import annotations

import csv
import datetime as dt
import re
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

__all__ = [
    "Direction",
    "Trade",
    "TradeTape",
    "SymbolTable",
    "ParseError",
    "EVENT_FIELDS",
    "EXECUTION_EVENT_TYPES",
    "lobster_event_type",
    "parse_execution_events",
    "filter_session",
    "merge_same_stamp",
]

# Normalized event-file schema. One row per order-book event.
EVENT_FIELDS = ("timestamp_ns", "event_type", "size", "price", "side")

# Event vocabulary for the normalized files. Numeric message codes from
# exchange feeds map onto these via lobster_event_type().
EVENT_TYPES = (
    "submission",
    "cancellation",
    "deletion",
    "execution",
    "execution_hidden",
    "cross_trade",
    "trading_halt",
)
EXECUTION_EVENT_TYPES = frozenset({"execution", "execution_hidden"})

_LOBSTER_CODES = {
    1: "submission",
    2: "cancellation",
    3: "deletion",
    4: "execution",
    5: "execution_hidden",
    6: "cross_trade",
    7: "trading_halt",
}

# TICKER_YYYY-MM-DD_* file naming convention used by message-feed dumps.
_FILENAME_RE = re.compile(r"^(?P<ticker>[A-Za-z0-9.]+)_(?P<date>\d{4}-\d{2}-\d{2})(?:_|$)")


def lobster_event_type(code: int) -> str:
    """Map a numeric exchange message code (1..7) to the normalized name."""
    try:
        return _LOBSTER_CODES[code]
    except KeyError:
        raise ValueError(f"unknown event code {code!r}") from None


def _parse_side(raw: str) -> "Direction":
    """Resting-order side: 'B'/'S' letters or the +1/-1 numeric convention."""
    if raw in ("B", "S"):
        return Direction.from_letter(raw)
    if raw in ("1", "+1"):
        return Direction.BUY
    if raw == "-1":
        return Direction.SELL
    raise ValueError(f"side must be B, S, 1, or -1, got {raw!r}")


class Direction(IntEnum):
    """Direction of the aggressing trade. Stored as +1 / -1."""

    BUY = 1
    SELL = -1

    @classmethod
    def from_letter(cls, letter: str) -> "Direction":
        if letter == "B":
            return cls.BUY
        if letter == "S":
            return cls.SELL
        raise ValueError(f"direction letter must be 'B' or 'S', got {letter!r}")

    @property
    def letter(self) -> str:
        return "B" if self is Direction.BUY else "S"

    @property
    def flipped(self) -> "Direction":
        return Direction.SELL if self is Direction.BUY else Direction.BUY


@dataclass(frozen=True)
class Trade:
    """A single (possibly merged) execution."""

    timestamp: int  # integer nanoseconds since midnight
    symbol: int
    direction: Direction
    quantity: int

    def __post_init__(self) -> None:
        if self.timestamp < 0:
            raise ValueError(f"timestamp must be >= 0, got {self.timestamp}")
        if self.quantity <= 0:
            raise ValueError(f"quantity must be positive, got {self.quantity}")


class ParseError(ValueError):
    """Malformed event row. Carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class TradeTape:
    """All trades of one symbol on one day, time-sorted.

    Stored as parallel arrays for fast windowed scans. Invariants checked at
    construction: sorted timestamps, positive quantities, and no two trades
    sharing both timestamp and direction (guaranteed by merging upstream).
    """

    symbol: int
    day: dt.date
    timestamps: np.ndarray  # int64 ns since midnight
    directions: np.ndarray  # int8, +1 buy / -1 sell
    quantities: np.ndarray  # int64 shares

    def __post_init__(self) -> None:
        ts = np.ascontiguousarray(self.timestamps, dtype=np.int64)
        dr = np.ascontiguousarray(self.directions, dtype=np.int8)
        qt = np.ascontiguousarray(self.quantities, dtype=np.int64)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "directions", dr)
        object.__setattr__(self, "quantities", qt)
        if not (ts.ndim == dr.ndim == qt.ndim == 1):
            raise ValueError("tape arrays must be one-dimensional")
        if not (ts.size == dr.size == qt.size):
            raise ValueError("tape arrays must have equal length")
        if ts.size:
            if np.any(ts[1:] < ts[:-1]):
                raise ValueError("timestamps must be non-decreasing")
            if ts[0] < 0:
                raise ValueError("timestamps must be >= 0")
            if np.any(qt <= 0):
                raise ValueError("quantities must be positive")
            if not np.all(np.abs(dr) == 1):
                raise ValueError("directions must be +1 or -1")
            # same (timestamp, direction) must have been merged already
            key = ts * 2 + (dr > 0)
            if np.unique(key).size != key.size:
                raise ValueError("duplicate (timestamp, direction) pair; merge first")

    def __len__(self) -> int:
        return int(self.timestamps.size)

    def __iter__(self) -> Iterator[Trade]:
        for t, d, q in zip(self.timestamps, self.directions, self.quantities):
            yield Trade(int(t), self.symbol, Direction(int(d)), int(q))

    @property
    def total_quantity(self) -> int:
        return int(self.quantities.sum())

    def filtered(self, direction: Direction | str | None) -> "TradeTape":
        """Sub-tape restricted to one trade direction. None or 'all' keeps all."""
        if direction is None or direction == "all":
            return self
        if isinstance(direction, str):
            direction = Direction.BUY if direction == "buy" else (
                Direction.SELL if direction == "sell" else Direction.from_letter(direction))
        mask = self.directions == int(direction)
        return TradeTape(self.symbol, self.day, self.timestamps[mask],
                         self.directions[mask], self.quantities[mask])


@dataclass
class SymbolTable:
    """Bijection between tickers and dense integer ids, with optional sectors."""

    tickers: tuple[str, ...]
    sectors: tuple[str | None, ...] | None = None
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.tickers = tuple(self.tickers)
        if len(set(self.tickers)) != len(self.tickers):
            raise ValueError("duplicate ticker in symbol table")
        if self.sectors is not None:
            self.sectors = tuple(self.sectors)
            if len(self.sectors) != len(self.tickers):
                raise ValueError("sectors must align with tickers")
        self._index = {t: i for i, t in enumerate(self.tickers)}

    def __len__(self) -> int:
        return len(self.tickers)

    def id_of(self, ticker: str) -> int:
        try:
            return self._index[ticker]
        except KeyError:
            raise KeyError(f"unknown ticker {ticker!r}") from None

    def ticker_of(self, symbol: int) -> str:
        return self.tickers[symbol]

    def sector_labels(self) -> list[str]:
        """Sector per symbol. Raises if any symbol is unlabeled."""
        if self.sectors is None:
            raise ValueError("symbol table has no sector labels")
        out = []
        for tick, sec in zip(self.tickers, self.sectors):
            if not sec:
                raise ValueError(f"symbol {tick!r} has no sector label")
            out.append(sec)
        return out


def merge_same_stamp(
    timestamps: np.ndarray, directions: np.ndarray, quantities: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sort by time and merge records sharing (timestamp, direction).

    Quantities of merged records are summed; total quantity is conserved.
    Idempotent: applying it to already-merged arrays is a no-op.
    """
    ts = np.asarray(timestamps, dtype=np.int64)
    dr = np.asarray(directions, dtype=np.int8)
    qt = np.asarray(quantities, dtype=np.int64)
    if ts.size == 0:
        return ts, dr, qt
    if np.any(ts < 0):
        raise ValueError("timestamps must be >= 0")
    # key orders by time, then sell before buy at equal stamps
    key = ts * 2 + (dr > 0)
    uniq, inverse = np.unique(key, return_inverse=True)
    out_q = np.zeros(uniq.size, dtype=np.int64)
    np.add.at(out_q, inverse, qt)
    out_t = uniq // 2
    out_d = np.where(uniq % 2 == 1, 1, -1).astype(np.int8)
    return out_t, out_d, out_q


def _infer_from_filename(path: Path) -> tuple[str | None, dt.date | None]:
    m = _FILENAME_RE.match(path.name)
    if not m:
        return None, None
    return m.group("ticker"), dt.date.fromisoformat(m.group("date"))


def parse_execution_events(
    event_file: str | Path,
    day_bounds: tuple[int, int],
    *,
    symbol: int = 0,
    day: dt.date | None = None,
) -> list[TradeTape]:
    """Parse one normalized event file into execution tapes.

    The file holds one symbol's events for one day with header
    ``timestamp_ns,event_type,size,price,side``. Only execution events are
    retained; the trade direction is the flip of the resting order's side;
    executions sharing (timestamp, direction) are merged; timestamps outside
    the closed ``day_bounds`` interval are dropped.

    ``day`` is read from a ``TICKER_YYYY-MM-DD_*`` file name when not given.
    Returns an empty list for a file with no data rows, else a single tape.
    """
    path = Path(event_file)
    open_ns, close_ns = int(day_bounds[0]), int(day_bounds[1])
    if open_ns >= close_ns:
        raise ValueError("day_bounds must satisfy open < close")
    if day is None:
        _, day = _infer_from_filename(path)
        if day is None:
            raise ValueError(
                f"cannot infer date from {path.name!r}; pass day= explicitly")

    times: list[int] = []
    dirs: list[int] = []
    qtys: list[int] = []
    n_rows = 0
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return []
        if tuple(h.strip() for h in header) != EVENT_FIELDS:
            raise ParseError(f"expected header {','.join(EVENT_FIELDS)}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            n_rows += 1
            if len(row) != len(EVENT_FIELDS):
                raise ParseError(f"expected {len(EVENT_FIELDS)} fields, got {len(row)}", lineno)
            raw_ts, ev, raw_size, raw_price, side = (f.strip() for f in row)
            if ev not in EVENT_TYPES:
                # thin adapter: native numeric message codes map to names
                try:
                    ev = lobster_event_type(int(ev))
                except ValueError:
                    raise ParseError(f"unknown event_type {ev!r}", lineno) from None
            try:
                ts = int(raw_ts)
                size = int(raw_size)
                price = float(raw_price)
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            if ts < 0:
                raise ParseError(f"negative timestamp {ts}", lineno)
            if ev not in EXECUTION_EVENT_TYPES:
                # non-executions (halts, deletions) may carry size 0
                continue
            if size <= 0:
                raise ParseError(f"size must be positive, got {size}", lineno)
            if not np.isfinite(price) or price <= 0:
                raise ParseError(f"price must be positive, got {raw_price}", lineno)
            if not (open_ns <= ts <= close_ns):
                continue
            # an executed resting sell order means an aggressive buy, and
            # vice versa
            try:
                resting = _parse_side(side)
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            times.append(ts)
            dirs.append(int(resting.flipped))
            qtys.append(size)

    if n_rows == 0:
        return []
    t, d, q = merge_same_stamp(
        np.asarray(times, dtype=np.int64),
        np.asarray(dirs, dtype=np.int8),
        np.asarray(qtys, dtype=np.int64),
    )
    return [TradeTape(symbol=symbol, day=day, timestamps=t, directions=d, quantities=q)]


def filter_session(tape: TradeTape, open_ns: int, close_ns: int) -> TradeTape:
    """Trades with open_ns <= t <= close_ns (closed interval)."""
    if open_ns >= close_ns:
        raise ValueError("filter_session requires open < close")
    mask = (tape.timestamps >= open_ns) & (tape.timestamps <= close_ns)
    return TradeTape(tape.symbol, tape.day, tape.timestamps[mask],
                     tape.directions[mask], tape.quantities[mask])


def tapes_from_trades(
    symbol: int,
    day: dt.date,
    timestamps: Sequence[int],
    directions: Sequence[int],
    quantities: Sequence[int],
) -> TradeTape:
    """Build a tape from unsorted, possibly colliding trade records."""
    t, d, q = merge_same_stamp(
        np.asarray(timestamps, dtype=np.int64),
        np.asarray(directions, dtype=np.int8),
        np.asarray(quantities, dtype=np.int64),
    )
    return TradeTape(symbol=symbol, day=day, timestamps=t, directions=d, quantities=q)
