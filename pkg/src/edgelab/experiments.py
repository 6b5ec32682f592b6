"""Experiment runners behind the CLI: strict configs, tidy result rows, presets.

Every experiment resolves to a validated parameter dict plus a master seed and
produces rows in one tidy long format (experiment, seed, case, metric, value)
along with a machine-readable summary.  Workloads that are embarrassingly
parallel over an index (paths, seeds) can fan out over processes; each index
derives its own random stream, so results are byte-identical at any worker
count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Callable, Sequence

import numpy as np

from . import hedging, impact, kelly, lottery, sde, strategies
from .core import Seed, derive_stream, generator


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending key."""


REQUIRED = object()

EXPERIMENT_KINDS = ("kelly", "lottery", "sde", "arena", "hedge", "impact")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    params: dict
    seed: int = 0
    parallel: int = 1


@dataclass(frozen=True)
class ExperimentResult:
    rows: list[dict]
    summary: dict


# ---------------------------------------------------------------------------
# Parameter validation
# ---------------------------------------------------------------------------


def _as_float(key: str, value) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"key '{key}' must be a number, got {value!r}") from None


def _as_int(key: str, value) -> int:
    if isinstance(value, bool):
        raise ConfigError(f"key '{key}' must be an integer, got {value!r}")
    try:
        as_float = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"key '{key}' must be an integer, got {value!r}") from None
    if as_float != int(as_float):
        raise ConfigError(f"key '{key}' must be an integer, got {value!r}")
    return int(as_float)


def _as_str(key: str, value) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"key '{key}' must be a string, got {value!r}")
    return value


def _as_float_list(key: str, value) -> list[float]:
    if isinstance(value, str):
        parts = [p for p in value.split(",") if p.strip()]
    elif isinstance(value, (list, tuple)):
        parts = list(value)
    else:
        raise ConfigError(f"key '{key}' must be a list of numbers, got {value!r}")
    return [_as_float(key, p) for p in parts]


def _as_int_list(key: str, value) -> list[int]:
    return [_as_int(key, v) for v in _as_float_list(key, value)]


def _as_str_list(key: str, value) -> list[str]:
    if isinstance(value, str):
        return [p.strip() for p in value.split(",") if p.strip()]
    if isinstance(value, (list, tuple)) and all(isinstance(p, str) for p in value):
        return list(value)
    raise ConfigError(f"key '{key}' must be a list of strings, got {value!r}")


def _as_dict(key: str, value) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"key '{key}' must be a mapping, got {value!r}")
    return value


def _as_strategy(key: str, value):
    if isinstance(value, str) and value == "best":
        return "best"
    return _as_int(key, value)


SCHEMAS: dict[str, dict[str, tuple[Callable, object]]] = {
    "kelly": {
        "p": (_as_float, REQUIRED),
        "n_max": (_as_int, 10),
        "tol": (_as_float, 1e-10),
    },
    "lottery": {
        "popularity": (_as_float_list, REQUIRED),
        "others": (_as_int, REQUIRED),
        "jackpot": (_as_float, REQUIRED),
        "ticket_price": (_as_float, REQUIRED),
        "draw_distribution": (_as_float_list, None),
        "strategy": (_as_strategy, "best"),
        "draws": (_as_int, 100_000),
    },
    "sde": {
        "model": (_as_str, REQUIRED),
        "paths": (_as_int, 1000),
        "t_end": (_as_float, 10.0),
        "n_steps": (_as_int, 2500),
        "store_paths": (_as_int, 10),
        "r": (_as_float, 0.0),
        "sigma": (_as_float, 0.2),
        "kappa": (_as_float, 1.0),
        "lambda_hat": (_as_float, 0.3),
        "sigma_hat": (_as_float, 0.4),
        "lambda0": (_as_float, 0.3),
        "s0": (_as_float, 1.0),
        "mu": (_as_float, 0.05),
    },
    "arena": {
        "market": (_as_dict, REQUIRED),
        "policies": (_as_str_list, REQUIRED),
        "seeds": (_as_int, 100),
    },
    "hedge": {
        "implied_vol": (_as_float, REQUIRED),
        "realized_vol": (_as_float, REQUIRED),
        "rate": (_as_float, 0.0),
        "s0": (_as_float, 100.0),
        "strike": (_as_float, None),
        "maturity": (_as_float, 1.0),
        "kind": (_as_str, "call"),
        "drift": (_as_float, None),
        "paths": (_as_int, 2000),
        "steps": (_as_int_list, (50, 500, 5000)),
        "control": (lambda k, v: bool(v), True),
    },
    "impact": {
        "control_pairs": (_as_int, 100),
        "round_trips": (_as_int, 1000),
        "cycle_rounds": (_as_int, 20),
        "size": (_as_float, 10.0),
        "probe_decay": (_as_float, 1.0),
        "probe_gap": (_as_float, 1.0),
        "cycle_size": (_as_float, 5.0),
    },
}

MARKET_SCHEMAS: dict[str, dict[str, tuple[Callable, object]]] = {
    "discrete": {
        "p": (_as_float, REQUIRED),
        "n_games": (_as_int, REQUIRED),
        "rounds": (_as_int, REQUIRED),
    },
    "stochastic_drift": {
        "r": (_as_float, 0.0),
        "sigma": (_as_float, REQUIRED),
        "kappa": (_as_float, REQUIRED),
        "lambda_hat": (_as_float, REQUIRED),
        "sigma_hat": (_as_float, REQUIRED),
        "lambda0": (_as_float, None),
        "s0": (_as_float, 1.0),
        "t_end": (_as_float, 10.0),
        "n_steps": (_as_int, 2500),
    },
    "trend_ou": {
        "mu": (_as_float, REQUIRED),
        "kappa": (_as_float, REQUIRED),
        "sigma": (_as_float, REQUIRED),
        "s0": (_as_float, 1.0),
        "r": (_as_float, 0.0),
        "t_end": (_as_float, 10.0),
        "n_steps": (_as_int, 2500),
    },
    "gbm": {
        "mu": (_as_float, REQUIRED),
        "sigma": (_as_float, REQUIRED),
        "s0": (_as_float, 1.0),
        "r": (_as_float, 0.0),
        "t_end": (_as_float, 10.0),
        "n_steps": (_as_int, 2500),
    },
}


def _apply_schema(schema: dict, raw: dict, context: str) -> dict:
    resolved = {}
    for key in raw:
        if key not in schema:
            raise ConfigError(f"unknown key '{key}' in {context}")
    for key, (convert, default) in schema.items():
        # An explicit null means "use the default", which keeps validation of
        # already-resolved parameter dicts idempotent.
        if raw.get(key) is not None:
            resolved[key] = convert(key, raw[key])
        elif default is REQUIRED:
            raise ConfigError(f"missing required key '{key}' in {context}")
        else:
            resolved[key] = default
    return resolved


def validate_params(experiment: str, params: dict) -> dict:
    if experiment not in SCHEMAS:
        raise ConfigError(
            f"unknown experiment '{experiment}'; expected one of {', '.join(EXPERIMENT_KINDS)}"
        )
    resolved = _apply_schema(SCHEMAS[experiment], params, f"experiment '{experiment}'")
    if experiment == "arena":
        market = dict(resolved["market"])
        market_type = market.pop("type", None)
        if market_type is None:
            raise ConfigError("missing required key 'type' in arena market")
        if market_type not in MARKET_SCHEMAS:
            raise ConfigError(
                f"unknown market type '{market_type}'; expected one of {', '.join(MARKET_SCHEMAS)}"
            )
        resolved_market = _apply_schema(
            MARKET_SCHEMAS[market_type], market, f"market '{market_type}'"
        )
        resolved_market["type"] = market_type
        resolved["market"] = resolved_market
        # Parse eagerly so bad policy strings fail at config time.
        build_policies(resolved["policies"], resolved_market)
    if experiment == "hedge":
        if resolved["strike"] is None:
            resolved["strike"] = resolved["s0"]
        if resolved["drift"] is None:
            resolved["drift"] = resolved["rate"]
    if experiment == "sde" and resolved["model"] not in ("stochastic_drift", "trend_ou", "gbm"):
        raise ConfigError(
            f"key 'model' must be one of stochastic_drift, trend_ou, gbm; got '{resolved['model']}'"
        )
    return resolved


# ---------------------------------------------------------------------------
# Policy and market construction
# ---------------------------------------------------------------------------


def build_policies(specs: Sequence[str], market: dict) -> list[strategies.Policy]:
    policies: list[strategies.Policy] = []
    for text in specs:
        name, _, arg = text.partition(":")
        name = name.strip()
        arg = arg.strip()
        try:
            if name == "fixed":
                policies.append(strategies.FixedFraction(float(arg)))
            elif name == "single_kelly":
                policies.append(strategies.SingleGameKelly())
            elif name == "multi_kelly":
                policies.append(strategies.MultiGameKelly(arg or "numeric"))
            elif name == "dynamic_kelly":
                policies.append(strategies.DynamicKellyOU())
            elif name == "static_kelly":
                lam = float(arg) if arg else market.get("lambda_hat")
                if lam is None:
                    raise ConfigError(
                        "policy 'static_kelly' needs a level, e.g. static_kelly:0.3"
                    )
                policies.append(strategies.StaticKellyOU(float(lam)))
            elif name == "buy_and_hold":
                policies.append(strategies.BuyAndHold())
            elif name == "trend_reversion":
                if market.get("type") != "trend_ou":
                    raise ConfigError("policy 'trend_reversion' requires a trend_ou market")
                cap = float(arg) if arg else 1.0
                policies.append(
                    strategies.TrendReversion(mu=market["mu"], kappa=market["kappa"], leverage_cap=cap)
                )
            elif name == "rolling_kelly":
                policies.append(strategies.RollingDriftKelly(int(arg) if arg else 50))
            else:
                raise ConfigError(f"unknown policy '{text}'")
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad policy spec '{text}': {exc}") from None
    if not policies:
        raise ConfigError("key 'policies' must name at least one policy")
    return policies


def build_market(market: dict) -> strategies.Market:
    kind = market["type"]
    if kind == "discrete":
        return strategies.DiscreteMarket(
            game=kelly.GameSpec(market["p"], market["n_games"]), rounds=market["rounds"]
        )
    grid = sde.GridSpec(t_end=market["t_end"], n_steps=market["n_steps"])
    if kind == "stochastic_drift":
        lambda0 = market["lambda0"] if market["lambda0"] is not None else market["lambda_hat"]
        params = sde.StochasticDriftParams(
            r=market["r"],
            sigma=market["sigma"],
            kappa=market["kappa"],
            lambda_hat=market["lambda_hat"],
            sigma_hat=market["sigma_hat"],
            lambda0=lambda0,
            s0=market["s0"],
        )
        return strategies.StochasticDriftMarket(params=params, grid=grid)
    if kind == "trend_ou":
        params = sde.TrendOUParams(
            mu=market["mu"], kappa=market["kappa"], sigma=market["sigma"], s0=market["s0"]
        )
        return strategies.TrendOUMarket(params=params, grid=grid, r=market["r"])
    return strategies.GBMMarket(
        mu=market["mu"], sigma=market["sigma"], s0=market["s0"], grid=grid, r=market["r"]
    )


# ---------------------------------------------------------------------------
# Parallel fan-out
# ---------------------------------------------------------------------------


def _index_ranges(total: int, workers: int) -> list[tuple[int, int]]:
    if workers <= 1:
        return [(0, total)]
    # One fat chunk per worker: per-index work is vectorized, so narrow chunks
    # trade numpy throughput for scheduling that buys nothing.
    chunk = max(1, math.ceil(total / workers))
    return [(a, min(a + chunk, total)) for a in range(0, total, chunk)]


def run_index_chunks(worker: Callable[[int, int], object], total: int, workers: int) -> list:
    """Apply worker(start, stop) over index ranges, in order.

    Every index derives its own random stream inside the worker, so the merged
    output is identical for any worker count.
    """
    ranges = _index_ranges(total, workers)
    if workers <= 1 or len(ranges) == 1:
        return [worker(a, b) for a, b in ranges]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(worker, a, b) for a, b in ranges]
        return [f.result() for f in futures]


def _row(experiment: str, seed, case: str, metric: str, value) -> dict:
    return {
        "experiment": experiment,
        "seed": seed,
        "case": case,
        "metric": metric,
        "value": value,
    }


def _stats_rows(experiment: str, case: str, stats) -> list[dict]:
    rows = [
        _row(experiment, "all", case, "mean_log_growth", stats.mean_log_growth),
        _row(experiment, "all", case, "growth_std_error", stats.growth_std_error),
        _row(experiment, "all", case, "max_drawdown", stats.max_drawdown),
    ]
    for q, v in stats.terminal_wealth_quantiles:
        rows.append(_row(experiment, "all", case, f"terminal_wealth_q{q:g}", v))
    return rows


def _stats_dict(stats) -> dict:
    return {
        "mean_log_growth": stats.mean_log_growth,
        "growth_std_error": stats.growth_std_error,
        "max_drawdown": stats.max_drawdown,
        "terminal_wealth_quantiles": [[q, v] for q, v in stats.terminal_wealth_quantiles],
        "n_paths": stats.n_paths,
    }


# ---------------------------------------------------------------------------
# Runners
# ---------------------------------------------------------------------------


def run_kelly(params: dict, seed: Seed, workers: int) -> ExperimentResult:
    p, n_max, tol = params["p"], params["n_max"], params["tol"]
    if not 0.5 < p < 1.0:
        raise ConfigError(f"key 'p' must lie in (0.5, 1) for the sizing table, got {p}")
    if not 1 <= n_max <= kelly.MAX_ENUMERATED_GAMES:
        raise ConfigError(
            f"key 'n_max' must lie in [1, {kelly.MAX_ENUMERATED_GAMES}], got {n_max}"
        )
    single_fraction = kelly.kelly_single(p)
    single_growth = kelly.expected_log_growth(p, 1, single_fraction)
    rows = []
    table = []
    for n in range(1, n_max + 1):
        paper = kelly.kelly_multi_paper(p, n)
        numeric = kelly.optimize_fraction(p, n, tol)
        growth_paper = kelly.expected_log_growth(p, n, min(paper, 1.0 - 1e-9))
        growth_numeric = kelly.expected_log_growth(p, n, numeric)
        case = f"n={n}"
        rows += [
            _row("kelly", "all", case, "closed_form_fraction", paper),
            _row("kelly", "all", case, "numeric_fraction", numeric),
            _row("kelly", "all", case, "growth_at_closed_form", growth_paper),
            _row("kelly", "all", case, "growth_at_numeric", growth_numeric),
            _row("kelly", "all", case, "single_game_growth", single_growth),
        ]
        table.append(
            {
                "n": n,
                "closed_form_fraction": paper,
                "numeric_fraction": numeric,
                "growth_at_closed_form": growth_paper,
                "growth_at_numeric": growth_numeric,
            }
        )
    summary = {
        "p": p,
        "single_game_fraction": single_fraction,
        "single_game_growth": single_growth,
        "table": table,
    }
    return ExperimentResult(rows, summary)


def run_lottery(params: dict, seed: Seed, workers: int) -> ExperimentResult:
    popularity = params["popularity"]
    spec = lottery.LotterySpec(
        n_numbers=len(popularity),
        popularity=tuple(popularity),
        n_other_players=params["others"],
        jackpot=params["jackpot"],
        ticket_price=params["ticket_price"],
        draw_distribution=tuple(params["draw_distribution"]) if params["draw_distribution"] else (),
    )
    rows = []
    values = []
    for i in range(spec.n_numbers):
        ev = lottery.expected_ticket_value(spec, i)
        values.append(ev)
        case = f"number={i}"
        rows += [
            _row("lottery", "all", case, "expected_value", ev),
            _row("lottery", "all", case, "expected_net", ev - spec.ticket_price),
            _row("lottery", "all", case, "popularity", spec.popularity[i]),
            _row("lottery", "all", case, "draw_probability", spec.draw_distribution[i]),
        ]
    best_index, best_value = lottery.best_number(spec)
    strategy = best_index if params["strategy"] == "best" else params["strategy"]
    if not 0 <= strategy < spec.n_numbers:
        raise ConfigError(f"key 'strategy' out of range [0, {spec.n_numbers})")
    stats = lottery.simulate_lottery(spec, strategy, params["draws"], derive_stream(seed, "lottery"))
    case = f"number={strategy}"
    rows += [
        _row("lottery", "all", case, "mc_mean_net", stats.mean_net_payoff),
        _row("lottery", "all", case, "mc_std_error", stats.std_error),
        _row("lottery", "all", case, "mc_hit_rate", stats.hit_rate),
        _row("lottery", "all", case, "mc_draws", float(stats.n_draws)),
    ]
    summary = {
        "expected_values": values,
        "best_number": best_index,
        "best_value": best_value,
        "played_number": strategy,
        "ticket_price": spec.ticket_price,
        "monte_carlo": {
            "mean_net_payoff": stats.mean_net_payoff,
            "std_error": stats.std_error,
            "draws": stats.n_draws,
            "hit_rate": stats.hit_rate,
        },
    }
    return ExperimentResult(rows, summary)


def _sde_chunk(model: str, params: dict, start: int, stop: int, seed: Seed) -> np.ndarray:
    grid = sde.GridSpec(t_end=params["t_end"], n_steps=params["n_steps"])
    n = stop - start
    if model == "stochastic_drift":
        drift_params = sde.StochasticDriftParams(
            r=params["r"],
            sigma=params["sigma"],
            kappa=params["kappa"],
            lambda_hat=params["lambda_hat"],
            sigma_hat=params["sigma_hat"],
            lambda0=params["lambda0"],
            s0=params["s0"],
        )
        prices, lams = sde.simulate_stochastic_drift_paths(
            drift_params, grid, seed, n, first_index=start
        )
        return np.stack([prices.values, lams.values])
    if model == "trend_ou":
        trend = sde.TrendOUParams(
            mu=params["mu"], kappa=params["kappa"], sigma=params["sigma"], s0=params["s0"]
        )
        return sde.simulate_trend_ou_paths(trend, grid, seed, n, first_index=start).values[None]
    gbm = sde.simulate_gbm_paths(
        params["mu"], params["sigma"], params["s0"], grid, seed, n, first_index=start
    )
    return gbm.values[None]


def run_sde(params: dict, seed: Seed, workers: int) -> ExperimentResult:
    model = params["model"]
    n_paths = params["paths"]
    if n_paths < 1:
        raise ConfigError(f"key 'paths' must be positive, got {n_paths}")
    grid = sde.GridSpec(t_end=params["t_end"], n_steps=params["n_steps"])
    times = grid.times()
    chunks = run_index_chunks(
        partial(_sde_chunk, model, params, seed=derive_stream(seed, "sde")), n_paths, workers
    )
    stacked = np.concatenate(chunks, axis=1)
    prices = stacked[0]
    lams = stacked[1] if stacked.shape[0] > 1 else None

    checkpoints = [0.25 * grid.t_end, 0.5 * grid.t_end, grid.t_end]
    rows = []
    moment_summary = []
    for t in checkpoints:
        j = int(np.argmin(np.abs(times - t)))
        t_j = float(times[j])
        case = f"t={t_j:g}"
        if model == "stochastic_drift":
            sample = lams[:, j]
            lam0, lam_hat = params["lambda0"], params["lambda_hat"]
            analytic_mean = lam_hat + (lam0 - lam_hat) * math.exp(-params["kappa"] * t_j)
            analytic_var = (
                params["sigma_hat"] ** 2
                * (1.0 - math.exp(-2.0 * params["kappa"] * t_j))
                / (2.0 * params["kappa"])
            )
            metric_prefix = "premium"
        elif model == "trend_ou":
            sample = prices[:, j]
            analytic_mean = params["mu"] * t_j + params["s0"] * math.exp(-params["kappa"] * t_j)
            analytic_var = (
                params["sigma"] ** 2
                * (1.0 - math.exp(-2.0 * params["kappa"] * t_j))
                / (2.0 * params["kappa"])
            )
            metric_prefix = "level"
        else:
            sample = prices[:, j]
            analytic_mean = params["s0"] * math.exp(params["mu"] * t_j)
            analytic_var = (
                params["s0"] ** 2
                * math.exp(2.0 * params["mu"] * t_j)
                * (math.exp(params["sigma"] ** 2 * t_j) - 1.0)
            )
            metric_prefix = "price"
        sample_mean = float(sample.mean())
        sample_var = float(sample.var(ddof=1)) if sample.size > 1 else 0.0
        rows += [
            _row("sde", "all", case, f"{metric_prefix}_mean", sample_mean),
            _row("sde", "all", case, f"{metric_prefix}_var", sample_var),
            _row("sde", "all", case, f"{metric_prefix}_mean_analytic", analytic_mean),
            _row("sde", "all", case, f"{metric_prefix}_var_analytic", analytic_var),
        ]
        moment_summary.append(
            {
                "t": t_j,
                "sample_mean": sample_mean,
                "sample_var": sample_var,
                "analytic_mean": analytic_mean,
                "analytic_var": analytic_var,
            }
        )

    stored = min(params["store_paths"], n_paths)
    for i in range(stored):
        for j in range(times.shape[0]):
            rows.append(_row("sde", i, f"t={times[j]:.10g}", "path_value", prices[i, j]))

    summary = {
        "model": model,
        "paths": n_paths,
        "grid": {"t_end": grid.t_end, "n_steps": grid.n_steps},
        "moments": moment_summary,
        "stored_paths": stored,
    }
    return ExperimentResult(rows, summary)


def _arena_chunk(policies, market, seed: Seed, start: int, stop: int):
    return strategies.arena_metrics(policies, market, stop - start, seed, first_seed_index=start)


def run_arena(params: dict, seed: Seed, workers: int) -> ExperimentResult:
    market_cfg = params["market"]
    market = build_market(market_cfg)
    policies = build_policies(params["policies"], market_cfg)
    n_seeds = params["seeds"]
    if n_seeds < 1:
        raise ConfigError(f"key 'seeds' must be positive, got {n_seeds}")
    arena_seed = derive_stream(seed, "arena")
    chunks = run_index_chunks(
        partial(_arena_chunk, policies, market, arena_seed), n_seeds, workers
    )
    metrics = {
        i: tuple(np.concatenate([c[i][m] for c in chunks]) for m in range(3))
        for i in range(len(policies))
    }
    report = strategies.arena_report_from_metrics(policies, metrics)

    rows = []
    horizon = (
        market.rounds if isinstance(market, strategies.DiscreteMarket) else market.grid.t_end
    )
    for i, label in enumerate(report.policies):
        rows += _stats_rows("arena", label, report.stats[i])
        rows.append(_row("arena", "all", label, "rank", float(report.ranking.index(i) + 1)))
        growths = metrics[i][0]
        for s in range(n_seeds):
            rows.append(_row("arena", s, label, "log_growth_rate", growths[s]))
    for a in range(len(policies)):
        for b in range(len(policies)):
            if a == b:
                continue
            case = f"{report.policies[a]} vs {report.policies[b]}"
            se = report.paired_diff_se[a, b]
            t_stat = report.paired_diff_mean[a, b] / se if se > 0 else 0.0
            rows += [
                _row("arena", "all", case, "win_rate", report.win_rate[a, b]),
                _row("arena", "all", case, "paired_diff_mean", report.paired_diff_mean[a, b]),
                _row("arena", "all", case, "paired_diff_se", se),
                _row("arena", "all", case, "paired_t_stat", t_stat),
            ]

    summary = {
        "market": market_cfg,
        "n_seeds": n_seeds,
        "horizon": horizon,
        "policies": list(report.policies),
        "ranking": [report.policies[i] for i in report.ranking],
        "stats": {report.policies[i]: _stats_dict(report.stats[i]) for i in range(len(policies))},
        "win_rate": report.win_rate.tolist(),
        "paired_diff_mean": report.paired_diff_mean.tolist(),
        "paired_diff_se": report.paired_diff_se.tolist(),
    }
    return ExperimentResult(rows, summary)


def _hedge_chunk(params: dict, steps: int, vol: float, seed: Seed, start: int, stop: int):
    grid = sde.GridSpec(t_end=params["maturity"], n_steps=steps)
    bundle = sde.simulate_gbm_paths(
        params["drift"], vol, params["s0"], grid, seed, stop - start, first_index=start
    )
    spec = hedging.OptionSpec(strike=params["strike"], maturity=params["maturity"], kind=params["kind"])
    config = hedging.HedgeConfig(
        implied_vol=params["implied_vol"],
        realized_vol=vol,
        rate=params["rate"],
        rehedge_steps=steps,
    )
    return hedging.hedge_pnl_batch(bundle.times, bundle.values, spec, config)


def _hedge_case_rows(label: str, pnl: np.ndarray, accrual: np.ndarray) -> tuple[list[dict], dict]:
    n = pnl.size
    gap = pnl - accrual
    mean_pnl = float(pnl.mean())
    pnl_se = float(pnl.std(ddof=1) / math.sqrt(n))
    mean_accrual = float(accrual.mean())
    accrual_se = float(accrual.std(ddof=1) / math.sqrt(n))
    gap_se = float(gap.std(ddof=1) / math.sqrt(n))
    mean_abs_gap = float(np.abs(gap).mean())
    stats = {
        "mean_pnl": mean_pnl,
        "pnl_se": pnl_se,
        "mean_accrual": mean_accrual,
        "accrual_se": accrual_se,
        "mean_gap": float(gap.mean()),
        "gap_se": gap_se,
        "mean_abs_gap": mean_abs_gap,
        "paths": n,
    }
    rows = [_row("hedge", "all", label, metric, value) for metric, value in stats.items()]
    return rows, stats


def run_hedge(params: dict, seed: Seed, workers: int) -> ExperimentResult:
    steps_list = params["steps"]
    if not steps_list:
        raise ConfigError("key 'steps' must name at least one rehedge count")
    n_paths = params["paths"]
    if n_paths < 2:
        raise ConfigError(f"key 'paths' must be at least 2, got {n_paths}")
    rows: list[dict] = []
    summary_cases = {}
    for steps in steps_list:
        chunk_seed = derive_stream(seed, f"hedge:{steps}")
        results = run_index_chunks(
            partial(_hedge_chunk, params, steps, params["realized_vol"], chunk_seed),
            n_paths,
            workers,
        )
        pnl = np.concatenate([r[0] for r in results])
        accrual = np.concatenate([r[1] for r in results])
        case = f"steps={steps}"
        case_rows, stats = _hedge_case_rows(case, pnl, accrual)
        rows += case_rows
        summary_cases[case] = stats
    if params["control"]:
        steps = max(steps_list)
        chunk_seed = derive_stream(seed, f"hedge-control:{steps}")
        control_params = dict(params, realized_vol=params["implied_vol"])
        results = run_index_chunks(
            partial(_hedge_chunk, control_params, steps, params["implied_vol"], chunk_seed),
            n_paths,
            workers,
        )
        pnl = np.concatenate([r[0] for r in results])
        accrual = np.concatenate([r[1] for r in results])
        case = f"steps={steps},control"
        case_rows, stats = _hedge_case_rows(case, pnl, accrual)
        rows += case_rows
        summary_cases[case] = stats
    summary = {
        "implied_vol": params["implied_vol"],
        "realized_vol": params["realized_vol"],
        "strike": params["strike"],
        "maturity": params["maturity"],
        "kind": params["kind"],
        "paths": n_paths,
        "cases": summary_cases,
    }
    return ExperimentResult(rows, summary)


def _random_round_trip_orders(rng: np.random.Generator) -> list[impact.Order]:
    n = int(rng.integers(1, 6))
    orders = []
    t = 0.0
    net = 0.0
    for _ in range(n):
        side = "buy" if rng.random() < 0.5 else "sell"
        size = float(rng.uniform(0.1, 5.0))
        t += float(rng.uniform(0.0, 2.0))
        orders.append(impact.Order(side, size, t))
        net += size if side == "buy" else -size
    if net != 0.0:
        t += float(rng.uniform(0.0, 2.0))
        orders.append(impact.Order("sell" if net > 0 else "buy", abs(net), t))
    return orders


def run_impact(params: dict, seed: Seed, workers: int) -> ExperimentResult:
    rows: list[dict] = []
    initial = impact.MarketState.initial(100.0)

    # Linear permanent impact commutes in the terminal price.
    linear = impact.ImpactParams(depth=1.0, exponent=1.0, decay=0.0, permanent_share=1.0)
    rng = generator(derive_stream(seed, "impact-control"))
    worst_gap = 0.0
    for _ in range(params["control_pairs"]):
        gap, _ = impact.commutator(
            _random_round_trip_orders(rng), _random_round_trip_orders(rng), linear, initial
        )
        worst_gap = max(worst_gap, abs(gap))
    rows.append(_row("impact", "all", "linear-control", "max_abs_price_gap", worst_gap))
    rows.append(_row("impact", "all", "linear-control", "pairs", float(params["control_pairs"])))

    # Concave impact with decay: buy-then-sell differs from sell-then-buy.
    probe = impact.ImpactParams(
        depth=1.0, exponent=0.5, decay=params["probe_decay"], permanent_share=0.5
    )
    price_gap, cash_gap = impact.commutator(
        [impact.Order("buy", params["size"], 0.0)],
        [impact.Order("sell", params["size"], params["probe_gap"])],
        probe,
        initial,
    )
    rows += [
        _row("impact", "all", "concave-decay-probe", "price_gap", price_gap),
        _row("impact", "all", "concave-decay-probe", "cash_gap", cash_gap),
    ]

    # Round trips never profit under linear impact, whatever decay and split.
    rng_rt = generator(derive_stream(seed, "impact-roundtrips"))
    max_cash = -math.inf
    for _ in range(params["round_trips"]):
        p = impact.ImpactParams(
            depth=float(rng_rt.uniform(0.5, 20.0)),
            exponent=1.0,
            decay=float(rng_rt.uniform(0.0, 5.0)),
            permanent_share=float(rng_rt.uniform(0.0, 1.0)),
        )
        state = impact.run_sequence(initial, _random_round_trip_orders(rng_rt), p)
        max_cash = max(max_cash, state.cash)
    rows += [
        _row("impact", "all", "round-trips", "max_net_cash", max_cash),
        _row("impact", "all", "round-trips", "trials", float(params["round_trips"])),
    ]

    # Two-venue cycle: identical venues as control, then a differential pair.
    sym = impact.ImpactParams(depth=2.0, exponent=1.0, decay=1.0, permanent_share=0.5)
    control = impact.two_venue_cycle(sym, sym, size=params["cycle_size"], rounds=params["cycle_rounds"])
    hot = impact.ImpactParams(depth=1.0, exponent=1.0, decay=0.01, permanent_share=0.0)
    cold = impact.ImpactParams(depth=50.0, exponent=1.0, decay=0.01, permanent_share=1.0)
    engine = impact.two_venue_cycle(hot, cold, size=params["cycle_size"], rounds=params["cycle_rounds"])
    rows.append(_row("impact", "all", "cycle-identical", "net_cash_per_round", control.net_cash_per_round))
    rows.append(_row("impact", "all", "cycle-differential", "net_cash_per_round", engine.net_cash_per_round))
    rows.append(_row("impact", "all", "cycle-differential", "engine_runs", float(engine.runs)))
    for k in range(params["cycle_rounds"]):
        rows.append(_row("impact", k, "cycle-identical", "round_cash", control.per_round_cash[k]))
        rows.append(_row("impact", k, "cycle-differential", "round_cash", engine.per_round_cash[k]))

    summary = {
        "linear_control_max_abs_price_gap": worst_gap,
        "concave_probe": {"price_gap": price_gap, "cash_gap": cash_gap},
        "round_trips_max_net_cash": max_cash,
        "cycle": {
            "identical_net_per_round": control.net_cash_per_round,
            "differential_net_per_round": engine.net_cash_per_round,
            "engine_runs": engine.runs,
        },
    }
    return ExperimentResult(rows, summary)


RUNNERS = {
    "kelly": run_kelly,
    "lottery": run_lottery,
    "sde": run_sde,
    "arena": run_arena,
    "hedge": run_hedge,
    "impact": run_impact,
}


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    params = validate_params(config.experiment, config.params)
    if config.parallel < 1:
        raise ConfigError(f"key 'parallel' must be at least 1, got {config.parallel}")
    seed = Seed(config.seed)
    return RUNNERS[config.experiment](params, seed, config.parallel)


# ---------------------------------------------------------------------------
# Presets: one canned experiment per studied effect
# ---------------------------------------------------------------------------

PRESETS: dict[str, dict] = {
    "local-vs-global": {
        "experiment": "arena",
        "params": {
            "market": {"type": "discrete", "p": 0.6, "n_games": 10, "rounds": 100_000},
            "policies": ["single_kelly", "multi_kelly:numeric", "multi_kelly:paper"],
            "seeds": 100,
        },
    },
    "lottery-pump": {
        "experiment": "lottery",
        "params": {
            "popularity": [0.9, 0.1],
            "others": 1,
            "jackpot": 1.0,
            "ticket_price": 0.3,
            "strategy": "best",
            "draws": 1_000_000,
        },
    },
    "dynamic-vs-static-kelly": {
        "experiment": "arena",
        "params": {
            "market": {
                "type": "stochastic_drift",
                "r": 0.0,
                "sigma": 0.2,
                "kappa": 1.0,
                "lambda_hat": 0.3,
                "sigma_hat": 0.4,
                "lambda0": 0.3,
                "s0": 1.0,
                "t_end": 20.0,
                "n_steps": 2000,
            },
            "policies": ["dynamic_kelly", "static_kelly:0.3", "buy_and_hold"],
            "seeds": 400,
        },
    },
    "trend-reversion": {
        "experiment": "arena",
        "params": {
            "market": {
                "type": "trend_ou",
                "mu": 0.5,
                "kappa": 2.0,
                "sigma": 0.5,
                "s0": 1.0,
                "r": 0.0,
                "t_end": 10.0,
                "n_steps": 2500,
            },
            "policies": ["buy_and_hold", "trend_reversion:1.0"],
            "seeds": 200,
        },
    },
    "gamma-accrual": {
        "experiment": "hedge",
        "params": {
            "implied_vol": 0.2,
            "realized_vol": 0.3,
            "rate": 0.0,
            "s0": 100.0,
            "maturity": 1.0,
            "kind": "call",
            "paths": 2000,
            "steps": [50, 500, 5000],
        },
    },
    "noncommutative-impact": {
        "experiment": "impact",
        "params": {
            "control_pairs": 100,
            "round_trips": 1000,
            "cycle_rounds": 20,
            "size": 10.0,
        },
    },
}

PRESET_ALIASES = {"myopic-vs-global": "local-vs-global"}


def preset_config(name: str) -> dict:
    canonical = PRESET_ALIASES.get(name, name)
    if canonical not in PRESETS:
        known = ", ".join(sorted(PRESETS) + sorted(PRESET_ALIASES))
        raise ConfigError(f"unknown preset '{name}'; available: {known}")
    preset = PRESETS[canonical]
    return {"experiment": preset["experiment"], "params": dict(preset["params"])}
