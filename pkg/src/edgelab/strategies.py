"""Investor policies, backtests, and an arena racing policies on shared randomness.

Policies are small frozen dataclasses.  Discrete-game policies size a stake for
repeated simultaneous double-or-nothing games and are long-only; continuous
policies map market state to a wealth fraction each rebalancing step and may
short where the sizing rule goes negative.

Backtests use common random numbers: every policy run under the same seed sees
the identical market draws, so cross-policy differences are paired and
low-variance.  The arena runs a list of policies over many seeds and reports
growth statistics, pairwise win rates, and paired-difference standard errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .core import (
    Path,
    PathBundle,
    Seed,
    SummaryStats,
    derive_stream,
    path_metrics,
    stats_from_metrics,
)
from .kelly import (
    GameSpec,
    kelly_multi_paper,
    kelly_single,
    log_wealth_from_wins,
    optimize_fraction,
    round_outcomes,
)
from .sde import (
    GridSpec,
    StochasticDriftParams,
    TrendOUParams,
    simulate_gbm_paths,
    simulate_stochastic_drift_paths,
    simulate_trend_ou_paths,
)

BANKRUPTCY_FLOOR = 1e-12


# ---------------------------------------------------------------------------
# Policies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FixedFraction:
    """Constant wealth fraction in the risky side (equal-split in game markets).

    Long-only; shorting is reserved for the policies whose sizing rule itself
    goes negative (TrendReversion, DynamicKellyOU, RollingDriftKelly).
    """

    f: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.f) or self.f < 0.0:
            raise ValueError(f"fraction must be finite and non-negative, got {self.f}")


@dataclass(frozen=True)
class SingleGameKelly:
    """Bets 2p - 1 on one game only, ignoring the other n - 1 (local optimizer)."""


@dataclass(frozen=True)
class MultiGameKelly:
    """Diversified total stake, split equally across all games.

    source="paper" uses the closed form (p^n - q^n)/(p^n + q^n); source="numeric"
    uses the numeric optimizer of expected log growth (they differ for n >= 3).
    """

    source: str = "numeric"

    def __post_init__(self) -> None:
        if self.source not in ("paper", "numeric"):
            raise ValueError(f"source must be 'paper' or 'numeric', got {self.source!r}")


@dataclass(frozen=True)
class DynamicKellyOU:
    """Continuous-market fraction lam_t / sigma from the current risk premium."""


@dataclass(frozen=True)
class StaticKellyOU:
    """Fraction lambda_hat / sigma using only the long-run premium level."""

    lambda_hat: float


@dataclass(frozen=True)
class BuyAndHold:
    """Fraction 1 always; no exit point."""


@dataclass(frozen=True)
class TrendReversion:
    """Sizing against deviations from the trend line of a trending OU asset.

    The instantaneous level drift is mu - kappa (S - mu t); the log-optimal
    share holding for an arithmetic asset is (drift - r S) W / sigma^2, which
    as a wealth fraction reads f = S (mu - kappa (S - mu t) - r S) / sigma^2.
    That translation is one admissible reading of a sizing rule the model
    leaves open, so the fraction is clamped to [-leverage_cap, +leverage_cap].
    """

    mu: float
    kappa: float
    leverage_cap: float = 1.0

    def __post_init__(self) -> None:
        if self.leverage_cap <= 0.0:
            raise ValueError(f"leverage cap must be positive, got {self.leverage_cap}")


@dataclass(frozen=True)
class RollingDriftKelly:
    """Proxy sizing for an investor who cannot observe the risk premium.

    Estimates the price drift from a rolling window of simple returns and
    sizes f = (drift_est - r) / sigma^2; stays in cash until the window fills.
    """

    window: int

    def __post_init__(self) -> None:
        if self.window < 1:
            raise ValueError(f"window must be at least one step, got {self.window}")


DiscretePolicy = Union[FixedFraction, SingleGameKelly, MultiGameKelly]
ContinuousPolicy = Union[
    FixedFraction, DynamicKellyOU, StaticKellyOU, BuyAndHold, TrendReversion, RollingDriftKelly
]
Policy = Union[DiscretePolicy, ContinuousPolicy]

_DISCRETE_TYPES = (FixedFraction, SingleGameKelly, MultiGameKelly)
_CONTINUOUS_TYPES = (
    FixedFraction,
    DynamicKellyOU,
    StaticKellyOU,
    BuyAndHold,
    TrendReversion,
    RollingDriftKelly,
)


def policy_label(policy: Policy) -> str:
    """Short stable label used in reports and CSV output."""
    if isinstance(policy, FixedFraction):
        return f"fixed({policy.f:g})"
    if isinstance(policy, SingleGameKelly):
        return "single_kelly"
    if isinstance(policy, MultiGameKelly):
        return f"multi_kelly[{policy.source}]"
    if isinstance(policy, DynamicKellyOU):
        return "dynamic_kelly_ou"
    if isinstance(policy, StaticKellyOU):
        return f"static_kelly_ou({policy.lambda_hat:g})"
    if isinstance(policy, BuyAndHold):
        return "buy_and_hold"
    if isinstance(policy, TrendReversion):
        return f"trend_reversion(cap={policy.leverage_cap:g})"
    if isinstance(policy, RollingDriftKelly):
        return f"rolling_kelly(w={policy.window})"
    raise TypeError(f"unknown policy {policy!r}")


# ---------------------------------------------------------------------------
# Discrete backtest
# ---------------------------------------------------------------------------


def _discrete_total_fraction(policy: DiscretePolicy, game: GameSpec) -> float:
    if isinstance(policy, FixedFraction):
        if not 0.0 <= policy.f < 1.0:
            raise ValueError(f"game stakes must lie in [0, 1), got {policy.f}")
        return policy.f
    if isinstance(policy, MultiGameKelly):
        if policy.source == "paper":
            return kelly_multi_paper(game.p, game.n_games)
        return optimize_fraction(game.p, game.n_games)
    raise TypeError(f"{policy_label(policy)} does not define a total game stake")


def backtest_discrete(policy: DiscretePolicy, game: GameSpec, rounds: int, seed: Seed) -> Path:
    """Log-wealth path of a policy over repeated rounds.

    All policies draw the same (rounds, n_games) win matrix for a given seed,
    so comparisons across policies are paired.
    """
    if not isinstance(policy, _DISCRETE_TYPES):
        raise TypeError(f"{policy_label(policy)} is not a discrete-game policy")
    outcomes = round_outcomes(game, rounds, seed)
    if isinstance(policy, SingleGameKelly):
        # Bets only on game 0; the win count seen by the sizing is that game alone.
        wins = outcomes[:, 0].astype(np.int64)
        log_wealth = log_wealth_from_wins(wins, kelly_single(game.p), 1)
    else:
        wins = outcomes.sum(axis=1)
        fraction = _discrete_total_fraction(policy, game)
        log_wealth = log_wealth_from_wins(wins, fraction, game.n_games)
    times = np.arange(rounds + 1, dtype=np.float64)
    return Path(times=times, values=log_wealth)


# ---------------------------------------------------------------------------
# Continuous backtest
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BacktestResult:
    """Wealth path of a self-financing strategy plus the fractions it held.

    ``bankruptcy_time`` is the first grid time at which wealth would have hit
    zero; from then on the path is held at a floor of 1e-12.  None if solvent
    throughout.
    """

    wealth: Path
    fractions: np.ndarray
    bankruptcy_time: Optional[float]


def _fractions_for_step(
    policy: ContinuousPolicy,
    j: int,
    times: np.ndarray,
    prices: np.ndarray,
    lams: Optional[np.ndarray],
    r: float,
    sigma: float,
) -> np.ndarray:
    s_j = prices[:, j]
    if isinstance(policy, FixedFraction):
        return np.full_like(s_j, policy.f)
    if isinstance(policy, BuyAndHold):
        return np.ones_like(s_j)
    if isinstance(policy, DynamicKellyOU):
        assert lams is not None
        return lams[:, j] / sigma
    if isinstance(policy, StaticKellyOU):
        return np.full_like(s_j, policy.lambda_hat / sigma)
    if isinstance(policy, TrendReversion):
        drift = policy.mu - policy.kappa * (s_j - policy.mu * times[j])
        raw = s_j * (drift - r * s_j) / sigma**2
        return np.clip(raw, -policy.leverage_cap, policy.leverage_cap)
    if isinstance(policy, RollingDriftKelly):
        w = policy.window
        if j < w:
            return np.zeros_like(s_j)
        window_rets = prices[:, j - w + 1 : j + 1] / prices[:, j - w : j] - 1.0
        dt_window = (times[j] - times[j - w]) / w
        drift_est = window_rets.mean(axis=1) / dt_window
        return (drift_est - r) / sigma**2
    raise TypeError(f"{policy_label(policy)} is not a continuous-market policy")


def _backtest_continuous_matrix(
    policy: ContinuousPolicy,
    times: np.ndarray,
    prices: np.ndarray,
    lams: Optional[np.ndarray],
    r: float,
    sigma: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized-over-paths wealth evolution; returns (wealth, fractions, bankruptcy times)."""
    n_paths, n_points = prices.shape
    n_steps = n_points - 1
    wealth = np.empty((n_paths, n_points), dtype=np.float64)
    wealth[:, 0] = 1.0
    fractions = np.empty((n_paths, n_steps), dtype=np.float64)
    bankrupt_at = np.full(n_paths, np.nan)
    alive = np.ones(n_paths, dtype=bool)
    for j in range(n_steps):
        dt = times[j + 1] - times[j]
        f = _fractions_for_step(policy, j, times, prices, lams, r, sigma)
        fractions[:, j] = f
        s_now = prices[:, j]
        s_next = prices[:, j + 1]
        # Avoid 0/0 where the policy holds no exposure at a non-positive price.
        with np.errstate(divide="ignore", invalid="ignore"):
            risky_ret = np.where(f == 0.0, 0.0, f * (s_next / s_now - 1.0))
        growth = 1.0 + risky_ret + (1.0 - f) * r * dt
        w_next = wealth[:, j] * growth
        busted = alive & ((w_next <= 0.0) | ~np.isfinite(w_next))
        if np.any(busted):
            bankrupt_at[busted] = times[j + 1]
            alive &= ~busted
        # Bankrupt paths hold at the floor from their bust step onward.
        wealth[:, j + 1] = np.where(alive, w_next, BANKRUPTCY_FLOOR)
    return wealth, fractions, bankrupt_at


def backtest_continuous(
    policy: ContinuousPolicy,
    price: Path,
    lam: Optional[Path],
    r: float,
    sigma: float,
) -> BacktestResult:
    """Self-financing wealth path with per-step rebalancing.

    Each step applies W' = W (1 + f (S'/S - 1) + (1 - f) r dt).  A step that
    would drive wealth through zero marks bankruptcy: the path is floored at
    1e-12 and held there, and the time is reported on the result.
    """
    if not isinstance(policy, _CONTINUOUS_TYPES) or isinstance(policy, (SingleGameKelly, MultiGameKelly)):
        raise TypeError(f"{policy_label(policy)} is not a continuous-market policy")
    lam_values = None
    if isinstance(policy, DynamicKellyOU):
        if lam is None:
            raise ValueError("dynamic sizing requires the risk-premium path")
    if lam is not None:
        if not np.array_equal(lam.times, price.times):
            raise ValueError("price and risk-premium paths must share the same grid")
        lam_values = lam.values[None, :]
    if sigma <= 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    wealth, fractions, bankrupt_at = _backtest_continuous_matrix(
        policy, price.times, price.values[None, :], lam_values, r, sigma
    )
    bankruptcy_time = None if math.isnan(bankrupt_at[0]) else float(bankrupt_at[0])
    return BacktestResult(
        wealth=Path(times=price.times, values=wealth[0]),
        fractions=fractions[0],
        bankruptcy_time=bankruptcy_time,
    )


# ---------------------------------------------------------------------------
# Markets and the arena
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiscreteMarket:
    """Repeated simultaneous games; one seed = one realized win matrix."""

    game: GameSpec
    rounds: int

    def __post_init__(self) -> None:
        if self.rounds < 1:
            raise ValueError(f"rounds must be positive, got {self.rounds}")


@dataclass(frozen=True)
class StochasticDriftMarket:
    params: StochasticDriftParams
    grid: GridSpec


@dataclass(frozen=True)
class TrendOUMarket:
    params: TrendOUParams
    grid: GridSpec
    r: float = 0.0
    # Continuous backtests need the diffusion scale of the level; reuse params.sigma.


@dataclass(frozen=True)
class GBMMarket:
    mu: float
    sigma: float
    s0: float
    grid: GridSpec
    r: float = 0.0


Market = Union[DiscreteMarket, StochasticDriftMarket, TrendOUMarket, GBMMarket]


@dataclass(frozen=True)
class ArenaReport:
    """Race results: per-policy stats plus pairwise paired comparisons.

    win_rate[a, b] is the fraction of seeds where policy a finished with more
    wealth than policy b (ties count half, so win_rate[a, b] + win_rate[b, a]
    is always 1).  paired_diff_mean/se describe terminal log-wealth differences
    a minus b across seeds.  ranking lists policy indices by mean log growth,
    best first.
    """

    policies: tuple[str, ...]
    stats: tuple[SummaryStats, ...]
    win_rate: np.ndarray
    paired_diff_mean: np.ndarray
    paired_diff_se: np.ndarray
    ranking: tuple[int, ...]
    n_seeds: int


def _check_policies_for_market(policies: Sequence[Policy], market: Market) -> None:
    for policy in policies:
        if isinstance(market, DiscreteMarket):
            if not isinstance(policy, _DISCRETE_TYPES):
                raise TypeError(f"{policy_label(policy)} cannot run on a discrete game market")
        else:
            if isinstance(policy, (SingleGameKelly, MultiGameKelly)):
                raise TypeError(f"{policy_label(policy)} cannot run on a continuous market")
            if isinstance(policy, DynamicKellyOU) and not isinstance(market, StochasticDriftMarket):
                raise TypeError("dynamic sizing needs a market that exposes the risk premium")


def _arena_discrete_metrics(
    policies: Sequence[DiscretePolicy],
    market: DiscreteMarket,
    n_seeds: int,
    seed: Seed,
    first_seed_index: int = 0,
) -> dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Per-policy arrays of (growth rate, drawdown, terminal log wealth) across seeds."""
    game = market.game
    # Fraction lookups are deterministic; hoist them out of the seed loop.
    sized: list[tuple[str, float]] = []
    for policy in policies:
        if isinstance(policy, SingleGameKelly):
            sized.append(("single", kelly_single(game.p)))
        else:
            sized.append(("multi", _discrete_total_fraction(policy, game)))
    out = {
        i: (np.empty(n_seeds), np.empty(n_seeds), np.empty(n_seeds)) for i in range(len(policies))
    }
    times = np.arange(market.rounds + 1, dtype=np.float64)
    for s in range(n_seeds):
        run_seed = derive_stream(seed, f"seed:{first_seed_index + s}")
        outcomes = round_outcomes(game, market.rounds, run_seed)
        all_wins = outcomes.sum(axis=1)
        first_wins = outcomes[:, 0].astype(np.int64)
        for i, (mode, fraction) in enumerate(sized):
            if mode == "single":
                log_w = log_wealth_from_wins(first_wins, fraction, 1)
            else:
                log_w = log_wealth_from_wins(all_wins, fraction, game.n_games)
            bundle = PathBundle(times, log_w[None, :])
            g, d, t = path_metrics(bundle, log_domain=True)
            out[i][0][s], out[i][1][s], out[i][2][s] = g[0], d[0], t[0]
    return out


def _arena_continuous_metrics(
    policies: Sequence[ContinuousPolicy],
    market: Union[StochasticDriftMarket, TrendOUMarket, GBMMarket],
    n_seeds: int,
    seed: Seed,
    first_seed_index: int = 0,
) -> dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]]:
    lams = None
    if isinstance(market, StochasticDriftMarket):
        prices, lam_bundle = simulate_stochastic_drift_paths(
            market.params, market.grid, seed, n_seeds, first_index=first_seed_index
        )
        lams = lam_bundle.values
        r, sigma = market.params.r, market.params.sigma
    elif isinstance(market, TrendOUMarket):
        prices = simulate_trend_ou_paths(
            market.params, market.grid, seed, n_seeds, first_index=first_seed_index
        )
        r, sigma = market.r, market.params.sigma
    else:
        prices = simulate_gbm_paths(
            market.mu, market.sigma, market.s0, market.grid, seed, n_seeds, first_index=first_seed_index
        )
        r, sigma = market.r, market.sigma
    out = {}
    for i, policy in enumerate(policies):
        wealth, _, _ = _backtest_continuous_matrix(
            policy, prices.times, prices.values, lams, r, sigma
        )
        bundle = PathBundle(prices.times, np.log(wealth))
        out[i] = path_metrics(bundle, log_domain=True)
    return out


def arena_metrics(
    policies: Sequence[Policy],
    market: Market,
    n_seeds: int,
    seed: Seed,
    first_seed_index: int = 0,
) -> dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Per-policy per-seed metrics on common random numbers.

    Exposed separately from :func:`arena` so seed ranges can be computed in
    parallel workers and merged by index.
    """
    if not policies:
        raise ValueError("need at least one policy")
    if n_seeds < 1:
        raise ValueError(f"need at least one seed, got {n_seeds}")
    _check_policies_for_market(policies, market)
    if isinstance(market, DiscreteMarket):
        return _arena_discrete_metrics(policies, market, n_seeds, seed, first_seed_index)
    return _arena_continuous_metrics(policies, market, n_seeds, seed, first_seed_index)


def arena_report_from_metrics(
    policies: Sequence[Policy],
    metrics: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]],
) -> ArenaReport:
    """Assemble the report from per-policy metric arrays (seed-aligned)."""
    k = len(policies)
    n_seeds = metrics[0][0].shape[0]
    stats = tuple(stats_from_metrics(*metrics[i]) for i in range(k))
    terminal = np.vstack([metrics[i][2] for i in range(k)])
    win = np.zeros((k, k))
    diff_mean = np.zeros((k, k))
    diff_se = np.zeros((k, k))
    for a in range(k):
        for b in range(k):
            if a == b:
                win[a, b] = 0.5
                continue
            d = terminal[a] - terminal[b]
            win[a, b] = float(np.mean((d > 0) + 0.5 * (d == 0)))
            diff_mean[a, b] = float(np.mean(d))
            diff_se[a, b] = (
                float(np.std(d, ddof=1) / math.sqrt(n_seeds)) if n_seeds > 1 else 0.0
            )
    order = sorted(range(k), key=lambda i: -stats[i].mean_log_growth)
    return ArenaReport(
        policies=tuple(policy_label(p) for p in policies),
        stats=stats,
        win_rate=win,
        paired_diff_mean=diff_mean,
        paired_diff_se=diff_se,
        ranking=tuple(order),
        n_seeds=int(n_seeds),
    )


def arena(policies: Sequence[Policy], market: Market, n_seeds: int, seed: Seed) -> ArenaReport:
    """Race policies on identical market randomness over n_seeds independent runs."""
    metrics = arena_metrics(policies, market, n_seeds, seed)
    return arena_report_from_metrics(policies, metrics)
