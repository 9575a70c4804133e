"""Co-trading network toolkit.

From raw trade events to co-trading matrices, spectral clusters, network
permutation regressions, cluster-structured covariance estimates, and
walk-forward minimum-variance backtests, with seeded synthetic generators
planting recoverable structure for end-to-end verification.
"""

from .clustering import (
    AriSeries,
    AriSummary,
    Partition,
    adjusted_rand_index,
    ari_series,
    ari_summary,
    detect_regimes,
    kmeans,
    pairwise_ari_heatmap,
    spectral_clustering,
)
from .cooccurrence import (
    DEFAULT_DELTA_NS,
    CoTradingMatrix,
    aggregate_matrices,
    build_daily_matrix,
    cotrading_score,
    count_cross_cooccurrences,
    sum_cross_quantities,
)
from .covariance import (
    CovarianceEstimate,
    FactorSplit,
    ReturnPanel,
    block_threshold,
    condition_number,
    estimate_cluster_covariance,
    factor_split,
    grid_log_returns,
    is_positive_definite,
    open_close_returns,
    realized_covariance,
)
from .graph_analysis import (
    ConvergenceError,
    EdgeList,
    eigenvector_centrality,
    max_spanning_tree,
    sector_meta_network,
    threshold_top_fraction,
)
from .network_regression import (
    RegressionResult,
    RegressionSummary,
    SectorMatrix,
    daily_regression_summary,
    fit_networks,
    matrix_from_offdiag,
    mrqap_dsp_test,
    qap_test,
    sector_indicator,
    vectorize_offdiag,
)
from .portfolio import (
    BacktestReport,
    InfeasibleLeverageError,
    NotPositiveDefiniteError,
    PerformanceStats,
    PortfolioWeights,
    SolverError,
    backtest,
    gmv_weights,
    kkt_residual,
    mean_variance_weights,
    performance_stats,
)
from .synth import (
    SynthConfig,
    gen_clustered_trades,
    gen_factor_returns,
    planted_partition,
)
from .trade_model import (
    Direction,
    ParseError,
    SymbolTable,
    Trade,
    TradeTape,
    filter_session,
    merge_same_stamp,
    parse_execution_events,
)

__version__ = "0.1.0"
