"""edgelab: simulation toolkit for systematic market edges.

Subpackages cover growth-optimal bet sizing for simultaneous games, shared
jackpot lotteries, mean-reverting market models with dynamic sizing policies,
discrete delta-hedge P&L versus the volatility-gap accrual, and order-impact
asymmetry.  Everything is a pure function of configuration plus a master seed.
"""

from .core import (
    Path,
    PathBundle,
    Seed,
    SummaryStats,
    derive_stream,
    generator,
    standard_normals,
    summarize,
    uniforms,
)
from .kelly import (
    Allocation,
    GameSpec,
    expected_log_growth,
    kelly_multi_paper,
    kelly_single,
    optimize_fraction,
    simulate_rounds,
)
from .lottery import LotteryRunStats, LotterySpec, best_number, expected_ticket_value, simulate_lottery
from .sde import (
    GridSpec,
    StochasticDriftParams,
    TrendOUParams,
    ou_step_exact,
    simulate_gbm,
    simulate_gbm_paths,
    simulate_stochastic_drift,
    simulate_stochastic_drift_paths,
    simulate_trend_ou,
    simulate_trend_ou_paths,
)
from .strategies import (
    ArenaReport,
    BacktestResult,
    BuyAndHold,
    DiscreteMarket,
    DynamicKellyOU,
    FixedFraction,
    GBMMarket,
    MultiGameKelly,
    RollingDriftKelly,
    SingleGameKelly,
    StaticKellyOU,
    StochasticDriftMarket,
    TrendOUMarket,
    TrendReversion,
    arena,
    backtest_continuous,
    backtest_discrete,
    policy_label,
)
from .hedging import HedgeConfig, HedgeReport, OptionSpec, bs_value_delta_gamma, delta_hedge_pnl
from .impact import (
    CycleReport,
    ImpactParams,
    MarketState,
    Order,
    apply_order,
    commutator,
    run_sequence,
    two_venue_cycle,
)

__version__ = "0.1.0"
