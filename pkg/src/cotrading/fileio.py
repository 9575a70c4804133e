"""CSV and JSON serialization for every on-disk artifact.

All writers are deterministic: floats are rendered with repr (shortest
round-trip form), JSON keys are sorted, rows follow a documented order,
and nothing timestamp-like is ever embedded. Rerunning a command with the
same inputs must produce byte-identical files.
"""

from __future__ import annotations

import csv
import datetime as dt
import hashlib
import io
import json
import os
from typing import Iterable, Mapping, Sequence

import numpy as np

from .clustering import AriSeries, Partition
from .cooccurrence import CoTradingMatrix
from .covariance import CovarianceEstimate, ReturnPanel
from .graph_analysis import EdgeList
from .trade_model import Direction, SymbolTable, TradeTape

__all__ = [
    "write_matrix_csv", "read_matrix_csv",
    "write_tapes_csv", "read_tapes_csv",
    "write_partition_csv", "read_partition_csv",
    "write_ari_csv", "read_ari_csv",
    "write_heatmap_csv", "read_heatmap_csv",
    "write_edges_csv",
    "write_centrality_csv",
    "write_covariance_csv", "read_covariance_csv",
    "write_regression_csv", "read_regression_csv",
    "write_panel_csv", "read_panel_csv",
    "write_symbols_csv", "read_symbols_csv",
    "write_o2c_csv", "read_o2c_csv",
    "write_daily_returns_csv", "read_daily_returns_csv",
    "write_json", "read_json",
    "write_manifest", "file_sha256",
    "load_config_file", "parse_overrides", "coerce_config_value",
]


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_rows(path: str | os.PathLike, rows: Iterable[Sequence[str]]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in rows:
        writer.writerow(row)
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


def _read_rows(path: str | os.PathLike) -> list[list[str]]:
    with open(path, newline="") as fh:
        return [row for row in csv.reader(fh)]


def _tickers(n: int, symbols: SymbolTable | Sequence[str | int] | None) -> list[str]:
    if symbols is None:
        return [f"S{i:04d}" for i in range(n)]
    if isinstance(symbols, SymbolTable):
        names = list(symbols.tickers)
    else:
        # integer ids carry the default naming convention by value
        names = [f"S{s:04d}" if isinstance(s, (int, np.integer)) else str(s)
                 for s in symbols]
    if len(names) != n:
        raise ValueError(f"expected {n} tickers, got {len(names)}")
    return names


# -- dense symmetric matrices -------------------------------------------------

def write_matrix_csv(path: str | os.PathLike, matrix: CoTradingMatrix,
                     symbols: SymbolTable | Sequence[str] | None = None) -> None:
    """Ticker-labelled dense matrix plus a .json sidecar with metadata."""
    names = _tickers(matrix.n, symbols if symbols is not None else matrix.symbols)
    rows: list[Sequence[str]] = [["ticker"] + names]
    for i, name in enumerate(names):
        rows.append([name] + [_fmt(v) for v in matrix.values[i]])
    _write_rows(path, rows)
    meta = {
        "period": matrix.label,
        "delta_ns": matrix.delta_ns,
        "directions": list(matrix.direction_pair),
        "measure": matrix.measure,
    }
    write_json(_sidecar(path), meta)


def read_matrix_csv(path: str | os.PathLike) -> CoTradingMatrix:
    rows = _read_rows(path)
    if not rows or rows[0][:1] != ["ticker"]:
        raise ValueError(f"{path}: expected a 'ticker' header row")
    names = rows[0][1:]
    n = len(names)
    values = np.empty((n, n), dtype=np.float64)
    if len(rows) != n + 1:
        raise ValueError(f"{path}: expected {n} data rows, got {len(rows) - 1}")
    for i, row in enumerate(rows[1:]):
        if row[0] != names[i] or len(row) != n + 1:
            raise ValueError(f"{path}: malformed row {i + 2}")
        values[i] = [float(v) for v in row[1:]]
    meta = read_json(_sidecar(path))
    return CoTradingMatrix(
        label=meta["period"],
        values=values,
        delta_ns=int(meta["delta_ns"]),
        direction_pair=tuple(meta["directions"]),
        measure=meta["measure"],
        symbols=tuple(names),
    )


def _sidecar(path: str | os.PathLike) -> str:
    base, _ = os.path.splitext(os.fspath(path))
    return base + ".json"


# -- trade tapes --------------------------------------------------------------

def write_tapes_csv(path: str | os.PathLike, tapes: Sequence[TradeTape],
                    symbols: SymbolTable | Sequence[str] | None = None) -> None:
    """All symbols of one day in a single file, ordered by symbol then time."""
    if not tapes:
        raise ValueError("need at least one tape")
    day = tapes[0].day
    if any(t.day != day for t in tapes):
        raise ValueError("tapes must share a day")
    n = 1 + max(t.symbol for t in tapes)
    names = _tickers(n, symbols)
    rows: list[Sequence[str]] = [["timestamp_ns", "symbol", "direction", "quantity"]]
    for tape in sorted(tapes, key=lambda t: t.symbol):
        name = names[tape.symbol]
        for ts, dr, q in zip(tape.timestamps, tape.directions, tape.quantities):
            rows.append([str(int(ts)), name, Direction(int(dr)).letter, str(int(q))])
    _write_rows(path, rows)
    write_json(_sidecar(path), {"day": day.isoformat(), "tickers": names})


def read_tapes_csv(path: str | os.PathLike) -> tuple[list[TradeTape], list[str]]:
    rows = _read_rows(path)
    header = ["timestamp_ns", "symbol", "direction", "quantity"]
    if not rows or rows[0] != header:
        raise ValueError(f"{path}: expected header {header}")
    meta = read_json(_sidecar(path))
    day = dt.date.fromisoformat(meta["day"])
    names = list(meta["tickers"])
    index = {name: i for i, name in enumerate(names)}
    per_symbol: dict[int, list[tuple[int, int, int]]] = {i: [] for i in range(len(names))}
    for row in rows[1:]:
        ts, name, letter, qty = row
        per_symbol[index[name]].append(
            (int(ts), int(Direction.from_letter(letter)), int(qty)))
    tapes = []
    for sym in range(len(names)):
        recs = per_symbol[sym]
        ts = np.array([r[0] for r in recs], dtype=np.int64)
        dr = np.array([r[1] for r in recs], dtype=np.int8)
        qt = np.array([r[2] for r in recs], dtype=np.int64)
        order = np.argsort(ts, kind="stable")
        tapes.append(TradeTape(symbol=sym, day=day, timestamps=ts[order],
                               directions=dr[order], quantities=qt[order]))
    return tapes, names


# -- partitions, ARI series, heatmaps ----------------------------------------

def write_partition_csv(path: str | os.PathLike, partition: Partition,
                        symbols: SymbolTable | Sequence[str] | None = None) -> None:
    names = _tickers(partition.assignments.size, symbols)
    rows: list[Sequence[str]] = [["ticker", "cluster_id"]]
    rows += [[name, str(int(c))] for name, c in zip(names, partition.assignments)]
    _write_rows(path, rows)
    write_json(_sidecar(path), {"k": partition.k, "seed": partition.seed})


def read_partition_csv(path: str | os.PathLike) -> tuple[Partition, list[str]]:
    rows = _read_rows(path)
    if not rows or rows[0] != ["ticker", "cluster_id"]:
        raise ValueError(f"{path}: expected header ticker,cluster_id")
    names = [row[0] for row in rows[1:]]
    labels = np.array([int(row[1]) for row in rows[1:]], dtype=np.int64)
    meta = read_json(_sidecar(path))
    seed = meta.get("seed")
    part = Partition(assignments=labels, k=int(meta["k"]),
                     seed=None if seed is None else int(seed))
    return part, names


def write_ari_csv(path: str | os.PathLike, series: AriSeries) -> None:
    rows: list[Sequence[str]] = [["date", "ari"]]
    rows += [[d, _fmt(v)] for d, v in zip(series.dates, series.values)]
    _write_rows(path, rows)


def read_ari_csv(path: str | os.PathLike) -> AriSeries:
    rows = _read_rows(path)
    if not rows or rows[0] != ["date", "ari"]:
        raise ValueError(f"{path}: expected header date,ari")
    dates = tuple(row[0] for row in rows[1:])
    values = np.array([float(row[1]) for row in rows[1:]], dtype=np.float64)
    return AriSeries(dates=dates, values=values)


def write_heatmap_csv(path: str | os.PathLike, heatmap: np.ndarray,
                      dates: Sequence[str]) -> None:
    t = heatmap.shape[0]
    if heatmap.shape != (t, t) or len(dates) != t:
        raise ValueError("heatmap must be square with one date per row")
    rows: list[Sequence[str]] = [["date"] + list(dates)]
    for i, d in enumerate(dates):
        rows.append([d] + [_fmt(v) for v in heatmap[i]])
    _write_rows(path, rows)


def read_heatmap_csv(path: str | os.PathLike) -> tuple[np.ndarray, list[str]]:
    rows = _read_rows(path)
    if not rows or rows[0][:1] != ["date"]:
        raise ValueError(f"{path}: expected a 'date' header row")
    dates = rows[0][1:]
    t = len(dates)
    values = np.empty((t, t), dtype=np.float64)
    for i, row in enumerate(rows[1:]):
        values[i] = [float(v) for v in row[1:]]
    return values, dates


# -- graphs -------------------------------------------------------------------

def write_edges_csv(path: str | os.PathLike, edges: EdgeList,
                    symbols: SymbolTable | Sequence[str] | None = None) -> None:
    names = _tickers(edges.n, symbols)
    rows: list[Sequence[str]] = [["src_ticker", "dst_ticker", "weight"]]
    rows += [[names[i], names[j], _fmt(w)] for i, j, w in edges.edges]
    _write_rows(path, rows)


def write_centrality_csv(path: str | os.PathLike, scores: np.ndarray,
                         symbols: SymbolTable | Sequence[str] | None = None) -> None:
    """Ticker and score, sorted by descending score (ties by ticker)."""
    names = _tickers(scores.size, symbols)
    order = sorted(range(scores.size), key=lambda i: (-scores[i], names[i]))
    rows: list[Sequence[str]] = [["ticker", "score"]]
    rows += [[names[i], _fmt(scores[i])] for i in order]
    _write_rows(path, rows)


# -- covariance estimates and return panels -----------------------------------

def write_covariance_csv(path: str | os.PathLike, estimate: CovarianceEstimate,
                         symbols: SymbolTable | Sequence[str] | None = None) -> None:
    n = estimate.values.shape[0]
    names = _tickers(n, symbols if symbols is not None else estimate.symbols)
    rows: list[Sequence[str]] = [["ticker"] + names]
    for i, name in enumerate(names):
        rows.append([name] + [_fmt(v) for v in estimate.values[i]])
    _write_rows(path, rows)
    meta = {
        "kind": estimate.kind,
        "k_factors": estimate.k_factors,
        "condition_number": (
            None if np.isinf(estimate.condition_number)
            else float(estimate.condition_number)),
        "positive_definite": bool(estimate.positive_definite),
        "date": estimate.label,
    }
    write_json(_sidecar(path), meta)


def read_covariance_csv(path: str | os.PathLike) -> CovarianceEstimate:
    rows = _read_rows(path)
    if not rows or rows[0][:1] != ["ticker"]:
        raise ValueError(f"{path}: expected a 'ticker' header row")
    names = rows[0][1:]
    n = len(names)
    values = np.empty((n, n), dtype=np.float64)
    for i, row in enumerate(rows[1:]):
        values[i] = [float(v) for v in row[1:]]
    meta = read_json(_sidecar(path))
    cond = meta["condition_number"]
    return CovarianceEstimate(
        values=values,
        kind=meta["kind"],
        condition_number=np.inf if cond is None else float(cond),
        positive_definite=bool(meta["positive_definite"]),
        k_factors=meta["k_factors"],
        label=meta["date"],
        symbols=tuple(names),
    )


def write_panel_csv(path: str | os.PathLike, panel: ReturnPanel,
                    symbols: SymbolTable | Sequence[str] | None = None) -> None:
    """Rows are grid times, columns tickers; session geometry in the sidecar."""
    n = panel.returns.shape[0]
    names = _tickers(n, symbols if symbols is not None else panel.symbols)
    rows: list[Sequence[str]] = [["grid_ns"] + names]
    for j, t in enumerate(panel.grid):
        rows.append([str(int(t))] + [_fmt(panel.returns[i, j]) for i in range(n)])
    _write_rows(path, rows)
    write_json(_sidecar(path), {
        "open_ns": panel.open_ns,
        "close_ns": panel.close_ns,
        "delta_ns": panel.delta_ns,
        "date": panel.label,
        "backfilled": sorted(int(i) for i in panel.backfilled),
    })


def read_panel_csv(path: str | os.PathLike) -> ReturnPanel:
    rows = _read_rows(path)
    if not rows or rows[0][:1] != ["grid_ns"]:
        raise ValueError(f"{path}: expected a 'grid_ns' header row")
    names = rows[0][1:]
    n = len(names)
    m = len(rows) - 1
    grid = np.empty(m, dtype=np.int64)
    returns = np.empty((n, m), dtype=np.float64)
    for j, row in enumerate(rows[1:]):
        grid[j] = int(row[0])
        returns[:, j] = [float(v) for v in row[1:]]
    meta = read_json(_sidecar(path))
    return ReturnPanel(
        grid=grid,
        returns=returns,
        open_ns=int(meta["open_ns"]),
        close_ns=int(meta["close_ns"]),
        delta_ns=int(meta["delta_ns"]),
        symbols=tuple(names),
        label=meta["date"],
        backfilled=tuple(meta.get("backfilled", ())),
    )


# -- network regression results ------------------------------------------------

def write_regression_csv(path: str | os.PathLike, results: Sequence) -> None:
    """Per-day coefficients and permutation p-values.

    Columns: date, gamma_C (co-trading coefficient), p_C, gamma_S (sector
    control coefficient, blank when absent), p_S.
    """
    rows: list[Sequence[str]] = [["date", "gamma_C", "p_C", "gamma_S", "p_S"]]
    for r in results:
        rows.append([
            r.date if r.date is not None else "",
            _fmt(r.gamma_c), _fmt(r.p_value_c),
            "" if r.gamma_s is None else _fmt(r.gamma_s),
            "" if r.p_value_s is None else _fmt(r.p_value_s),
        ])
    _write_rows(path, rows)


def read_regression_csv(path: str | os.PathLike) -> list[dict]:
    rows = _read_rows(path)
    header = ["date", "gamma_C", "p_C", "gamma_S", "p_S"]
    if not rows or rows[0] != header:
        raise ValueError(f"{path}: expected header {header}")
    out = []
    for row in rows[1:]:
        out.append({
            "date": row[0] or None,
            "gamma_C": float(row[1]),
            "p_C": float(row[2]),
            "gamma_S": float(row[3]) if row[3] else None,
            "p_S": float(row[4]) if row[4] else None,
        })
    return out


# -- symbol tables and open-to-close return matrices --------------------------

def write_symbols_csv(path: str | os.PathLike, table: SymbolTable) -> None:
    rows: list[Sequence[str]] = [["ticker", "sector"]]
    sectors = table.sectors if table.sectors is not None else [""] * len(table.tickers)
    rows += [[t, s] for t, s in zip(table.tickers, sectors)]
    _write_rows(path, rows)


def read_symbols_csv(path: str | os.PathLike) -> SymbolTable:
    rows = _read_rows(path)
    if not rows or rows[0] != ["ticker", "sector"]:
        raise ValueError(f"{path}: expected header ticker,sector")
    tickers = tuple(row[0] for row in rows[1:])
    sectors = tuple(row[1] for row in rows[1:])
    if all(s == "" for s in sectors):
        return SymbolTable(tickers=tickers)
    return SymbolTable(tickers=tickers, sectors=sectors)


def write_o2c_csv(path: str | os.PathLike, dates: Sequence[str], returns: np.ndarray,
                  symbols: SymbolTable | Sequence[str] | None = None) -> None:
    """T x N open-to-close simple or log returns, one row per date."""
    t, n = returns.shape
    if len(dates) != t:
        raise ValueError("one date per row required")
    names = _tickers(n, symbols)
    rows: list[Sequence[str]] = [["date"] + names]
    for i, d in enumerate(dates):
        rows.append([d] + [_fmt(v) for v in returns[i]])
    _write_rows(path, rows)


def read_o2c_csv(path: str | os.PathLike) -> tuple[list[str], np.ndarray, list[str]]:
    rows = _read_rows(path)
    if not rows or rows[0][:1] != ["date"]:
        raise ValueError(f"{path}: expected a 'date' header row")
    names = rows[0][1:]
    dates = [row[0] for row in rows[1:]]
    values = np.array([[float(v) for v in row[1:]] for row in rows[1:]],
                      dtype=np.float64).reshape(len(dates), len(names))
    return dates, values, names


def write_daily_returns_csv(path: str | os.PathLike, dates: Sequence[str],
                            daily: np.ndarray, cum_path: np.ndarray) -> None:
    """Backtest daily returns and the running sum of log returns."""
    rows: list[Sequence[str]] = [["date", "daily_return", "cum_log_return"]]
    for d, r, c in zip(dates, daily, cum_path):
        rows.append([d, _fmt(r), _fmt(c)])
    _write_rows(path, rows)


def read_daily_returns_csv(path: str | os.PathLike) -> tuple[list[str], np.ndarray, np.ndarray]:
    rows = _read_rows(path)
    if not rows or rows[0] != ["date", "daily_return", "cum_log_return"]:
        raise ValueError(f"{path}: expected header date,daily_return,cum_log_return")
    dates = [row[0] for row in rows[1:]]
    daily = np.array([float(row[1]) for row in rows[1:]], dtype=np.float64)
    cum = np.array([float(row[2]) for row in rows[1:]], dtype=np.float64)
    return dates, daily, cum


# -- JSON, manifests, configs --------------------------------------------------

def write_json(path: str | os.PathLike, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path: str | os.PathLike):
    with open(path) as fh:
        return json.load(fh)


def file_sha256(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path: str | os.PathLike, *, command: str,
                   config: Mapping[str, object], seed: int | None,
                   inputs: Sequence[str | os.PathLike] = (),
                   outputs: Sequence[str | os.PathLike] = ()) -> None:
    """Record what produced a directory of outputs.

    Holds the resolved config, the seed, a sha256 per input file, and one
    per output file (paths relative to the manifest directory). Deliberately
    records no timestamps or host details so reruns are byte-identical.
    """
    base = os.path.dirname(os.path.abspath(os.fspath(path)))

    def _hashes(paths: Sequence[str | os.PathLike]) -> dict[str, str]:
        out: dict[str, str] = {}
        for p in sorted(os.fspath(q) for q in paths):
            rel = os.path.relpath(os.path.abspath(p), base)
            out[rel.replace(os.sep, "/")] = file_sha256(p)
        return out

    write_json(path, {
        "command": command,
        "config": dict(sorted(config.items())),
        "seed": seed,
        "inputs": _hashes(inputs),
        "outputs": _hashes(outputs),
    })


def coerce_config_value(raw: str):
    """String to bool/int/float when unambiguous, else the string itself."""
    text = raw.strip()
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def load_config_file(path: str | os.PathLike) -> dict[str, object]:
    """Flat key=value file; '#' starts a comment, blank lines are skipped."""
    out: dict[str, object] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = stripped.partition("=")
            out[key.strip()] = coerce_config_value(value)
    return out


def parse_overrides(pairs: Sequence[str]) -> dict[str, object]:
    """key=value strings from the command line, coerced like the config file."""
    out: dict[str, object] = {}
    for pair in pairs:
        if "=" not in pair:
            raise ValueError(f"expected key=value, got {pair!r}")
        key, _, value = pair.partition("=")
        out[key.strip()] = coerce_config_value(value)
    return out
