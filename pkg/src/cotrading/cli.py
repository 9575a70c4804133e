"""Command-line toolkit: the pipeline as composable subcommands.

Interchange is file-based (CSV with JSON sidecars). Every subcommand is
deterministic for fixed inputs and seed, logs to stderr only, and writes
data only to the paths it was given. Exit codes: 0 success, 1 validation
error (bad flags, bad config, malformed inputs), 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import fileio
from .clustering import (
    Partition,
    ari_series,
    ari_summary,
    detect_regimes,
    pairwise_ari_heatmap,
    spectral_clustering,
)
from .cooccurrence import DEFAULT_DELTA_NS, aggregate_matrices, build_daily_matrix
from .covariance import (
    CovarianceEstimate,
    condition_number,
    estimate_cluster_covariance,
    is_positive_definite,
    open_close_returns,
    realized_covariance,
)
from .graph_analysis import (
    eigenvector_centrality,
    max_spanning_tree,
    sector_meta_network,
    threshold_top_fraction,
)
from .network_regression import (
    DEFAULT_N_PERMUTATIONS,
    daily_regression_summary,
    mrqap_dsp_test,
    qap_test,
    sector_indicator,
)
from .portfolio import DEFAULT_CONDITION_LIMIT, backtest
from .synth import (
    DEFAULT_CLOSE_NS,
    DEFAULT_OPEN_NS,
    SynthConfig,
    gen_clustered_trades,
    gen_factor_returns,
    planted_partition,
)
from .trade_model import SymbolTable, _infer_from_filename, parse_execution_events

log = logging.getLogger("cotrading")

__all__ = ["main", "run_subcommand"]


# -- config/flag resolution ----------------------------------------------------


class _Resolver:
    """Merge a flat key=value config file with explicit CLI flags.

    A flag given on the command line wins; otherwise the config file value;
    otherwise the documented default. Flags all default to None so absence
    is detectable.
    """

    def __init__(self, args: argparse.Namespace):
        self._args = vars(args)
        path = self._args.get("config")
        self.config: dict[str, object] = fileio.load_config_file(path) if path else {}
        self.used: dict[str, object] = {}

    def get(self, key: str, default=None, cast=None):
        val = self._args.get(key)
        if val is None:
            val = self.config.get(key, default)
        if val is not None and cast is not None:
            val = cast(val)
        self.used[key] = _jsonable(val)
        return val


def _jsonable(val):
    if isinstance(val, float) and not math.isfinite(val):
        return repr(val)
    if isinstance(val, dt.date):
        return val.isoformat()
    return val


def _parse_leverage(raw) -> float:
    if isinstance(raw, str) and raw.strip().lower() in ("inf", "infinity"):
        return math.inf
    lev = float(raw)
    if math.isnan(lev):
        raise ValueError("leverage must be a number or 'inf'")
    return lev


def _parse_date(raw) -> dt.date:
    return raw if isinstance(raw, dt.date) else dt.date.fromisoformat(str(raw))


def _stem(path) -> str:
    return Path(path).stem


def _with_sidecars(paths) -> list[str]:
    out = []
    for p in paths:
        out.append(os.fspath(p))
        side = os.path.splitext(os.fspath(p))[0] + ".json"
        if side != os.fspath(p) and os.path.exists(side):
            out.append(side)
    return out


def _read_labeled_square(path) -> tuple[np.ndarray, list[str]]:
    """Ticker-headed dense CSV as a plain array, sidecar-agnostic."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or len(rows[0]) < 2:
        raise ValueError(f"{path}: expected a labeled square matrix")
    names = rows[0][1:]
    n = len(names)
    if len(rows) != n + 1:
        raise ValueError(f"{path}: expected {n} data rows")
    values = np.array([[float(v) for v in row[1:]] for row in rows[1:]],
                      dtype=np.float64)
    return values, names


# -- subcommand bodies ----------------------------------------------------------


def _cmd_ingest(args: argparse.Namespace) -> int:
    res = _Resolver(args)
    open_ns = res.get("open_ns", DEFAULT_OPEN_NS, int)
    close_ns = res.get("close_ns", DEFAULT_CLOSE_NS, int)
    tapes = []
    names: list[str] = []
    for path in sorted(args.events):
        ticker, day = _infer_from_filename(Path(path))
        parsed = parse_execution_events(path, (open_ns, close_ns),
                                        symbol=len(tapes), day=day)
        for tape in parsed:
            tapes.append(tape)
            names.append(ticker if ticker else f"S{tape.symbol:04d}")
    if not tapes:
        raise ValueError("no executions found in any input file")
    fileio.write_tapes_csv(args.out, tapes, names)
    log.info("ingest: %d symbols, %d trades -> %s",
             len(tapes), sum(t.timestamps.size for t in tapes), args.out)
    return 0


def _resolve_delta(args: argparse.Namespace, res: _Resolver) -> int:
    if getattr(args, "delta_ns", None) is not None:
        res.used["delta_ns"] = int(args.delta_ns)
        return int(args.delta_ns)
    if getattr(args, "delta_ms", None) is not None:
        res.used["delta_ns"] = int(round(args.delta_ms * 1e6))
        return int(round(args.delta_ms * 1e6))
    return res.get("delta_ns", DEFAULT_DELTA_NS, int)


def _cmd_cooccur(args: argparse.Namespace) -> int:
    res = _Resolver(args)
    delta_ns = _resolve_delta(args, res)
    tapes, names = fileio.read_tapes_csv(args.tapes)
    matrix = build_daily_matrix(
        tapes,
        delta_ns=delta_ns,
        direction_i=res.get("direction_i", "all"),
        direction_j=res.get("direction_j", "all"),
        measure=res.get("measure", "count"),
        threads=res.get("threads", 1, int),
    )
    fileio.write_matrix_csv(args.out, matrix, names)
    log.info("cooccur: %d symbols, delta=%d ns -> %s", matrix.n, delta_ns, args.out)
    return 0


def _cmd_aggregate(args: argparse.Namespace) -> int:
    matrices = [fileio.read_matrix_csv(p) for p in sorted(args.matrices)]
    combined = aggregate_matrices(matrices)
    fileio.write_matrix_csv(args.out, combined, combined.symbols)
    log.info("aggregate: %d daily matrices -> %s", len(matrices), args.out)
    return 0


def _cmd_mst(args: argparse.Namespace) -> int:
    matrix = fileio.read_matrix_csv(args.matrix)
    tree = max_spanning_tree(matrix)
    fileio.write_edges_csv(args.out, tree, matrix.symbols)
    log.info("mst: %d edges, total weight %.6g -> %s",
             len(tree.edges), tree.total_weight, args.out)
    return 0


def _cmd_threshold(args: argparse.Namespace) -> int:
    matrix = fileio.read_matrix_csv(args.matrix)
    kept = threshold_top_fraction(matrix, args.fraction)
    fileio.write_edges_csv(args.out, kept, matrix.symbols)
    log.info("threshold: kept %d edges at fraction %g -> %s",
             len(kept.edges), args.fraction, args.out)
    return 0


def _cmd_centrality(args: argparse.Namespace) -> int:
    res = _Resolver(args)
    matrix = fileio.read_matrix_csv(args.matrix)
    scores = eigenvector_centrality(
        matrix,
        tol=res.get("tol", 1e-10, float),
        max_iter=res.get("max_iter", 10_000, int),
    )
    fileio.write_centrality_csv(args.out, scores, matrix.symbols)
    log.info("centrality: %d symbols -> %s", scores.size, args.out)
    return 0


def _sector_of(table: SymbolTable, names) -> list[str]:
    if table.sectors is None:
        raise ValueError("symbols file has no sector column values")
    lookup = dict(zip(table.tickers, table.sectors))
    missing = [n for n in names if n not in lookup]
    if missing:
        raise ValueError(f"tickers missing from symbols file: {missing[:5]}")
    return [lookup[n] for n in names]


def _cmd_meta(args: argparse.Namespace) -> int:
    matrix = fileio.read_matrix_csv(args.matrix)
    table = fileio.read_symbols_csv(args.symbols)
    if matrix.symbols is None:
        raise ValueError("matrix file lacks ticker labels")
    labels = _sector_of(table, matrix.symbols)
    meta = sector_meta_network(matrix, labels)
    fileio.write_matrix_csv(args.out, meta, meta.symbols)
    within = {s: float(w) for s, w in zip(meta.symbols, meta.within_sector)}
    base, _ext = os.path.splitext(os.fspath(args.out))
    fileio.write_json(base + "_within.json", within)
    log.info("meta: %d sectors -> %s", meta.n, args.out)
    return 0


def _cmd_cluster(args: argparse.Namespace) -> int:
    res = _Resolver(args)
    matrix = fileio.read_matrix_csv(args.matrix)
    part = spectral_clustering(
        matrix,
        k=res.get("clusters", 5, int),
        seed=res.get("seed", 0, int),
    )
    fileio.write_partition_csv(args.out, part, matrix.symbols)
    log.info("cluster: k=%d sizes=%s -> %s", part.k, list(part.sizes), args.out)
    return 0


def _cmd_ari(args: argparse.Namespace) -> int:
    reference, _names = fileio.read_partition_csv(args.reference)
    parts = []
    dates = []
    for path in sorted(args.partitions):
        part, _n = fileio.read_partition_csv(path)
        parts.append(part)
        dates.append(_stem(path))
    series = ari_series(dates, parts, reference)
    fileio.write_ari_csv(args.out, series)
    if args.summary_out:
        summ = ari_summary(series)
        fileio.write_json(args.summary_out, {
            "mean": summ.mean,
            "stdev": summ.stdev,
            "snr": _jsonable(summ.snr),
            "n_days": len(dates),
        })
    log.info("ari: %d days, mean %.4f -> %s",
             len(dates), float(np.mean(series.values)), args.out)
    return 0


def _cmd_heatmap(args: argparse.Namespace) -> int:
    parts = []
    dates = []
    for path in sorted(args.partitions):
        part, _n = fileio.read_partition_csv(path)
        parts.append(part)
        dates.append(_stem(path))
    grid = pairwise_ari_heatmap(parts)
    fileio.write_heatmap_csv(args.out, grid, dates)
    log.info("heatmap: %d x %d -> %s", len(dates), len(dates), args.out)
    return 0


def _cmd_regimes(args: argparse.Namespace) -> int:
    res = _Resolver(args)
    grid, dates = fileio.read_heatmap_csv(args.heatmap)
    part = detect_regimes(
        grid,
        n_regimes=res.get("regimes", 2, int),
        seed=res.get("seed", 0, int),
    )
    fileio.write_partition_csv(args.out, part, dates)
    log.info("regimes: %d regimes over %d days -> %s",
             part.k, len(dates), args.out)
    return 0


def _cmd_rcov(args: argparse.Namespace) -> int:
    os.makedirs(args.out_dir, exist_ok=True)
    for path in sorted(args.panels):
        panel = fileio.read_panel_csv(path)
        est = realized_covariance(panel)
        out = os.path.join(args.out_dir, _stem(path) + ".csv")
        fileio.write_covariance_csv(out, est, panel.symbols)
    log.info("rcov: %d panels -> %s", len(args.panels), args.out_dir)
    return 0


def _cmd_estimate(args: argparse.Namespace) -> int:
    res = _Resolver(args)
    factors = res.get("factors", 3, int)
    part, _names = fileio.read_partition_csv(args.partition)
    os.makedirs(args.out_dir, exist_ok=True)
    for path in sorted(args.panels):
        panel = fileio.read_panel_csv(path)
        est = estimate_cluster_covariance(panel, factors, part)
        out = os.path.join(args.out_dir, _stem(path) + ".csv")
        fileio.write_covariance_csv(out, est, panel.symbols)
    log.info("estimate: %d panels, %d factors -> %s",
             len(args.panels), factors, args.out_dir)
    return 0


def _cmd_regress(args: argparse.Namespace) -> int:
    res = _Resolver(args)
    n_perm = res.get("n_perm", DEFAULT_N_PERMUTATIONS, int)
    seed = res.get("seed", 0, int)
    y_paths = {_stem(p): p for p in args.y}
    x_paths = {_stem(p): p for p in args.x}
    if sorted(y_paths) != sorted(x_paths):
        raise ValueError("y and x files must align by date (file stem)")
    sector = None
    if args.sectors:
        table = fileio.read_symbols_csv(args.sectors)
        _values0, names0 = _read_labeled_square(y_paths[sorted(y_paths)[0]])
        sector = sector_indicator(_sector_of(table, names0))
    results = []
    for i, date in enumerate(sorted(y_paths)):
        y_values, _yn = _read_labeled_square(y_paths[date])
        x_values, _xn = _read_labeled_square(x_paths[date])
        if sector is None:
            result = qap_test(y_values, x_values, n_permutations=n_perm,
                              seed=seed + i, date=date)
        else:
            result = mrqap_dsp_test(y_values, x_values, sector,
                                    n_permutations=n_perm, seed=seed + i,
                                    date=date)
        results.append(result)
        log.info("regress %s: gamma_C=%.4f p=%.4f", date,
                 result.gamma_c, result.p_value_c)
    fileio.write_regression_csv(args.out, results)
    if args.summary_out:
        summary = {"n_days": len(results), "n_permutations": n_perm}
        prim = daily_regression_summary(results, which="primary")
        summary["gamma_C"] = {
            "mean": prim.mean, "median": prim.median, "stdev": prim.stdev,
            "pct_positive": prim.pct_positive,
            "pct_significant": prim.pct_significant,
        }
        if sector is not None:
            ctrl = daily_regression_summary(results, which="control")
            summary["gamma_S"] = {
                "mean": ctrl.mean, "median": ctrl.median, "stdev": ctrl.stdev,
                "pct_positive": ctrl.pct_positive,
                "pct_significant": ctrl.pct_significant,
            }
        fileio.write_json(args.summary_out, summary)
    return 0


def _cmd_backtest(args: argparse.Namespace) -> int:
    res = _Resolver(args)
    leverage = res.get("leverage", math.inf, _parse_leverage)
    cond_limit = res.get("cond_limit", DEFAULT_CONDITION_LIMIT, float)
    dates, returns, _names = fileio.read_o2c_csv(args.returns)
    est_paths = {_stem(p): p for p in args.estimates}
    if sorted(est_paths) != sorted(dates):
        raise ValueError("estimate files must align with return dates by stem")
    estimates = [fileio.read_covariance_csv(est_paths[d]) for d in dates]
    report = backtest(estimates, returns, dates,
                      leverage=leverage, cond_limit=cond_limit)
    os.makedirs(args.out_dir, exist_ok=True)
    _write_backtest(args.out_dir, report, leverage, cond_limit)
    log.info("backtest: %d days, ann_vol=%.4g sharpe=%s -> %s",
             len(report.dates), report.ann_vol, report.sharpe, args.out_dir)
    return 0


def _write_backtest(out_dir, report, leverage, cond_limit) -> list[str]:
    report_path = os.path.join(out_dir, "report.json")
    fileio.write_json(report_path, {
        "ann_vol": _jsonable(report.ann_vol),
        "sharpe": _jsonable(report.sharpe),
        "n_days": len(report.dates),
        "skipped_days": report.skipped_days,
        "leverage": _jsonable(leverage),
        "cond_limit": cond_limit,
    })
    daily_path = os.path.join(out_dir, "daily_returns.csv")
    fileio.write_daily_returns_csv(daily_path, report.dates,
                                   report.daily_returns, report.cum_path)
    return [report_path, daily_path]


# -- synth and pipeline ----------------------------------------------------------


def _synth_config(res: _Resolver, args: argparse.Namespace) -> SynthConfig:
    return SynthConfig(
        n_symbols=res.get("symbols", 50, int),
        n_clusters=res.get("clusters", 5, int),
        days=res.get("days", 5, int),
        open_ns=res.get("open_ns", DEFAULT_OPEN_NS, int),
        close_ns=res.get("close_ns", DEFAULT_CLOSE_NS, int),
        burst_rate_per_hour=res.get("burst_rate_per_hour", 60.0, float),
        background_rate_per_hour=res.get("background_rate_per_hour", 600.0, float),
        jitter_ns=res.get("jitter_ns", 200_000_000, int),
        delta_ns=_resolve_delta(args, res),
        n_factors=res.get("factors", 3, int),
        factor_vol=res.get("factor_vol", 0.002, float),
        idio_vol=res.get("idio_vol", 0.002, float),
        block_correlation=res.get("block_correlation", 0.3, float),
        sampling_delta_ns=res.get("sampling_delta_ns", 300_000_000_000, int),
        start_date=res.get("start_date", dt.date(2000, 1, 3), _parse_date),
        seed=res.get("seed", 0, int),
    )


def _emit_synth(out_dir: str, cfg: SynthConfig) -> tuple[list[str], list[str], SymbolTable]:
    """Write the synthetic world under out_dir; returns (outputs, dates, table)."""
    os.makedirs(os.path.join(out_dir, "tapes"), exist_ok=True)
    os.makedirs(os.path.join(out_dir, "panels"), exist_ok=True)
    planted = planted_partition(cfg)
    tickers = tuple(f"S{i:04d}" for i in range(cfg.n_symbols))
    sectors = tuple(f"G{c}" for c in planted.assignments)
    table = SymbolTable(tickers=tickers, sectors=sectors)
    outputs: list[str] = []

    path = os.path.join(out_dir, "symbols.csv")
    fileio.write_symbols_csv(path, table)
    outputs.append(path)

    path = os.path.join(out_dir, "partition_planted.csv")
    fileio.write_partition_csv(path, planted, table)
    outputs.append(path)

    per_day, _planted = gen_clustered_trades(cfg)
    for day, tapes in per_day:
        path = os.path.join(out_dir, "tapes", day.isoformat() + ".csv")
        fileio.write_tapes_csv(path, tapes, table)
        outputs.append(path)

    panels, truth = gen_factor_returns(cfg)
    o2c = np.empty((len(panels), cfg.n_symbols), dtype=np.float64)
    dates = []
    for i, panel in enumerate(panels):
        path = os.path.join(out_dir, "panels", panel.label + ".csv")
        fileio.write_panel_csv(path, panel, table)
        outputs.append(path)
        o2c[i] = open_close_returns(panel)
        dates.append(panel.label)

    path = os.path.join(out_dir, "o2c_returns.csv")
    fileio.write_o2c_csv(path, dates, o2c, table)
    outputs.append(path)

    truth_est = CovarianceEstimate(
        values=truth,
        kind="population",
        condition_number=condition_number(truth),
        positive_definite=is_positive_definite(truth),
        k_factors=cfg.n_factors,
        label=None,
    )
    path = os.path.join(out_dir, "true_sigma.csv")
    fileio.write_covariance_csv(path, truth_est, table)
    outputs.append(path)
    return outputs, dates, table


def _cmd_synth(args: argparse.Namespace) -> int:
    res = _Resolver(args)
    cfg = _synth_config(res, args)
    outputs, dates, _table = _emit_synth(args.out, cfg)
    fileio.write_manifest(
        os.path.join(args.out, "manifest.json"),
        command="synth", config=res.used, seed=cfg.seed,
        outputs=_with_sidecars(outputs))
    log.info("synth: %d days, %d symbols -> %s", len(dates), cfg.n_symbols, args.out)
    return 0


def _cmd_pipeline(args: argparse.Namespace) -> int:
    res = _Resolver(args)
    cfg = _synth_config(res, args)
    threads = res.get("threads", 1, int)
    leverage = res.get("leverage", math.inf, _parse_leverage)
    cond_limit = res.get("cond_limit", DEFAULT_CONDITION_LIMIT, float)
    res.get("n_perm", DEFAULT_N_PERMUTATIONS, int)  # recorded; regress not chained
    measure = res.get("measure", "count")
    direction_i = res.get("direction_i", "all")
    direction_j = res.get("direction_j", "all")
    out_dir = args.out

    outputs, dates, table = _emit_synth(out_dir, cfg)
    planted = planted_partition(cfg)

    for sub in ("matrices", "partitions", "rcov", "estimates", "backtest"):
        os.makedirs(os.path.join(out_dir, sub), exist_ok=True)

    # co-trading matrices and detected clusters, one per day
    parts = []
    for date in dates:
        tapes, names = fileio.read_tapes_csv(
            os.path.join(out_dir, "tapes", date + ".csv"))
        matrix = build_daily_matrix(
            tapes, delta_ns=cfg.delta_ns, direction_i=direction_i,
            direction_j=direction_j, measure=measure, threads=threads)
        mat_path = os.path.join(out_dir, "matrices", date + ".csv")
        fileio.write_matrix_csv(mat_path, matrix, names)
        outputs.append(mat_path)

        part = spectral_clustering(matrix, k=cfg.n_clusters, seed=cfg.seed)
        part_path = os.path.join(out_dir, "partitions", date + ".csv")
        fileio.write_partition_csv(part_path, part, names)
        outputs.append(part_path)
        parts.append(part)
        log.info("pipeline %s: clusters sized %s", date, list(part.sizes))

    series = ari_series(dates, parts, planted)
    ari_path = os.path.join(out_dir, "ari_vs_planted.csv")
    fileio.write_ari_csv(ari_path, series)
    outputs.append(ari_path)

    # covariance estimates from the return panels
    estimates = []
    for date, part in zip(dates, parts):
        panel = fileio.read_panel_csv(os.path.join(out_dir, "panels", date + ".csv"))
        raw = realized_covariance(panel)
        raw_path = os.path.join(out_dir, "rcov", date + ".csv")
        fileio.write_covariance_csv(raw_path, raw, table)
        outputs.append(raw_path)

        est = estimate_cluster_covariance(panel, cfg.n_factors, part)
        est_path = os.path.join(out_dir, "estimates", date + ".csv")
        fileio.write_covariance_csv(est_path, est, table)
        outputs.append(est_path)
        estimates.append(est)

    _dates2, o2c, _names2 = fileio.read_o2c_csv(os.path.join(out_dir, "o2c_returns.csv"))
    report = backtest(estimates, o2c, dates, leverage=leverage, cond_limit=cond_limit)
    outputs.extend(_write_backtest(os.path.join(out_dir, "backtest"),
                                   report, leverage, cond_limit))

    summary = {
        "ari_vs_planted": float(np.mean(series.values)),
        "ari_min": float(np.min(series.values)),
        "ann_vol": _jsonable(report.ann_vol),
        "sharpe": _jsonable(report.sharpe),
        "skipped_days": report.skipped_days,
        "n_days": len(report.dates),
        "clusters": cfg.n_clusters,
        "factors": cfg.n_factors,
        "leverage": _jsonable(leverage),
        "seed": cfg.seed,
    }
    summary_path = os.path.join(out_dir, "summary.json")
    fileio.write_json(summary_path, summary)
    outputs.append(summary_path)

    fileio.write_manifest(
        os.path.join(out_dir, "manifest.json"),
        command="pipeline", config=res.used, seed=cfg.seed,
        outputs=_with_sidecars(outputs))
    log.info("pipeline: ari_vs_planted=%.4f ann_vol=%s -> %s",
             summary["ari_vs_planted"], summary["ann_vol"], out_dir)
    return 0


# -- parser wiring ----------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cotrading",
        description="Co-trading network toolkit: tapes to matrices to "
                    "clusters to covariance to backtests.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str, func) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.set_defaults(func=func)
        p.add_argument("--config", metavar="FILE",
                       help="flat key=value config file; flags override it")
        return p

    p = add("ingest", "parse raw event CSVs into a one-day trade tape file",
            _cmd_ingest)
    p.add_argument("--events", nargs="+", required=True, metavar="FILE",
                   help="raw event CSVs, one symbol-day each")
    p.add_argument("--out", required=True, help="output tape CSV")
    p.add_argument("--open-ns", type=int, dest="open_ns",
                   help="session open (ns after midnight, default 09:30)")
    p.add_argument("--close-ns", type=int, dest="close_ns",
                   help="session close (ns after midnight, default 16:00)")

    p = add("cooccur", "build the daily co-trading matrix from a tape file",
            _cmd_cooccur)
    p.add_argument("--tapes", required=True, help="tape CSV from ingest/synth")
    p.add_argument("--out", required=True, help="output matrix CSV")
    p.add_argument("--delta-ms", type=float, dest="delta_ms",
                   help="co-occurrence half-window in milliseconds (default 500)")
    p.add_argument("--delta-ns", type=int, dest="delta_ns",
                   help="co-occurrence half-window in nanoseconds")
    p.add_argument("--direction-i", dest="direction_i",
                   choices=["buy", "sell", "all"],
                   help="direction filter for the row symbol (default all)")
    p.add_argument("--direction-j", dest="direction_j",
                   choices=["buy", "sell", "all"],
                   help="direction filter for the column symbol (default all)")
    p.add_argument("--measure", choices=["count", "volume"],
                   help="normalized count or quantity-weighted score")
    p.add_argument("--threads", type=int, help="worker cap for pair scoring")

    p = add("aggregate", "average daily matrices into a period matrix",
            _cmd_aggregate)
    p.add_argument("--matrices", nargs="+", required=True, metavar="FILE")
    p.add_argument("--out", required=True)

    p = add("mst", "maximum spanning tree of a co-trading matrix", _cmd_mst)
    p.add_argument("--matrix", required=True)
    p.add_argument("--out", required=True, help="output edge CSV")

    p = add("threshold", "keep the top fraction of edges by weight",
            _cmd_threshold)
    p.add_argument("--matrix", required=True)
    p.add_argument("--fraction", type=float, required=True,
                   help="fraction of all pairs to keep, in (0, 1]")
    p.add_argument("--out", required=True, help="output edge CSV")

    p = add("centrality", "eigenvector centrality of a co-trading matrix",
            _cmd_centrality)
    p.add_argument("--matrix", required=True)
    p.add_argument("--out", required=True, help="output ticker,score CSV")
    p.add_argument("--tol", type=float, help="convergence tolerance (default 1e-10)")
    p.add_argument("--max-iter", type=int, dest="max_iter",
                   help="iteration cap (default 10000)")

    p = add("meta", "collapse a matrix to a sector-level meta-network", _cmd_meta)
    p.add_argument("--matrix", required=True)
    p.add_argument("--symbols", required=True,
                   help="ticker,sector CSV giving each ticker's sector")
    p.add_argument("--out", required=True)

    p = add("cluster", "spectral clustering of a co-trading matrix", _cmd_cluster)
    p.add_argument("--matrix", required=True)
    p.add_argument("--out", required=True, help="output ticker,cluster_id CSV")
    p.add_argument("--clusters", type=int, help="number of clusters (default 5)")
    p.add_argument("--seed", type=int, help="k-means seed (default 0)")

    p = add("ari", "adjusted Rand index of partitions against a reference",
            _cmd_ari)
    p.add_argument("--reference", required=True, help="reference partition CSV")
    p.add_argument("--partitions", nargs="+", required=True, metavar="FILE")
    p.add_argument("--out", required=True, help="output date,ari CSV")
    p.add_argument("--summary-out", dest="summary_out",
                   help="optional JSON with mean/stdev/snr")

    p = add("heatmap", "pairwise ARI heatmap across daily partitions",
            _cmd_heatmap)
    p.add_argument("--partitions", nargs="+", required=True, metavar="FILE")
    p.add_argument("--out", required=True)

    p = add("regimes", "cluster the ARI heatmap into temporal regimes",
            _cmd_regimes)
    p.add_argument("--heatmap", required=True)
    p.add_argument("--out", required=True, help="output date,cluster_id CSV")
    p.add_argument("--regimes", type=int, help="number of regimes (default 2)")
    p.add_argument("--seed", type=int, help="k-means seed (default 0)")

    p = add("rcov", "realized covariance from intraday return panels", _cmd_rcov)
    p.add_argument("--panels", nargs="+", required=True, metavar="FILE")
    p.add_argument("--out-dir", dest="out_dir", required=True)

    p = add("estimate", "factor plus cluster-blocked covariance estimates",
            _cmd_estimate)
    p.add_argument("--panels", nargs="+", required=True, metavar="FILE")
    p.add_argument("--partition", required=True, help="cluster partition CSV")
    p.add_argument("--factors", type=int, help="factor count (default 3)")
    p.add_argument("--out-dir", dest="out_dir", required=True)

    p = add("regress", "permutation tests of matrix-on-matrix regressions",
            _cmd_regress)
    p.add_argument("--y", nargs="+", required=True, metavar="FILE",
                   help="dependent matrices, one per date")
    p.add_argument("--x", nargs="+", required=True, metavar="FILE",
                   help="explanatory matrices aligned with --y by file stem")
    p.add_argument("--sectors", help="ticker,sector CSV; adds a same-sector "
                                     "control via the semi-partialing test")
    p.add_argument("--n-perm", type=int, dest="n_perm",
                   help="permutations per test (default 2000)")
    p.add_argument("--seed", type=int, help="permutation seed (default 0)")
    p.add_argument("--out", required=True, help="output per-day results CSV")
    p.add_argument("--summary-out", dest="summary_out",
                   help="optional JSON summary across days")

    p = add("backtest", "walk-forward minimum-variance backtest", _cmd_backtest)
    p.add_argument("--estimates", nargs="+", required=True, metavar="FILE",
                   help="covariance CSVs named <date>.csv")
    p.add_argument("--returns", required=True,
                   help="open-to-close returns CSV (dates x tickers)")
    p.add_argument("--leverage", help="gross leverage cap, number or 'inf'")
    p.add_argument("--cond-limit", type=float, dest="cond_limit",
                   help="condition-number gate (default 1e9)")
    p.add_argument("--out-dir", dest="out_dir", required=True)

    p = add("synth", "generate a seeded synthetic world with planted clusters",
            _cmd_synth)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--days", type=int, help="number of days (default 5)")
    p.add_argument("--symbols", type=int, help="number of symbols (default 50)")
    p.add_argument("--clusters", type=int, help="planted cluster count (default 5)")
    p.add_argument("--factors", type=int, help="return factor count (default 3)")
    p.add_argument("--delta-ms", type=float, dest="delta_ms",
                   help="co-occurrence half-window in ms (default 500)")
    p.add_argument("--delta-ns", type=int, dest="delta_ns",
                   help="co-occurrence half-window in ns")

    p = add("pipeline", "synth, cooccur, cluster, rcov, estimate, backtest "
                        "in one run with a summary JSON", _cmd_pipeline)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--days", type=int, help="number of days (default 5)")
    p.add_argument("--symbols", type=int, help="number of symbols (default 50)")
    p.add_argument("--clusters", type=int, help="cluster count (default 5)")
    p.add_argument("--factors", type=int, help="factor count (default 3)")
    p.add_argument("--leverage", help="gross leverage cap, number or 'inf'")
    p.add_argument("--cond-limit", type=float, dest="cond_limit",
                   help="condition-number gate (default 1e9)")
    p.add_argument("--delta-ms", type=float, dest="delta_ms",
                   help="co-occurrence half-window in ms (default 500)")
    p.add_argument("--delta-ns", type=int, dest="delta_ns",
                   help="co-occurrence half-window in ns")
    p.add_argument("--measure", choices=["count", "volume"],
                   help="co-trading measure (default count)")
    p.add_argument("--threads", type=int, help="worker cap for pair scoring")

    return parser


def run_subcommand(argv) -> int:
    """Parse and run one subcommand; raises on failure, returns 0 on success."""
    parser = _build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(message)s")
    if argv is None:
        argv = sys.argv[1:]
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help and 2 for usage mistakes; usage
        # mistakes are validation errors here
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except (ValueError, KeyError, FileNotFoundError, IsADirectoryError,
            NotADirectoryError) as exc:
        log.error("%s", exc)
        return 1
    except Exception as exc:  # solver failures, I/O mid-run, internal errors
        log.error("%s: %s", type(exc).__name__, exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
