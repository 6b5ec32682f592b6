"""Discrete delta hedging of a European option and the volatility-gap accrual.

A hedger who is long an option valued and hedged at implied volatility, on an
underlying that actually moves at a different realized volatility, accrues
0.5 * Gamma * S^2 * (realized_var - implied_var) per unit time.  Note the S^2:
the convexity term is *dollar* gamma, the only reading under which the accrual
carries P&L units.  The simulator realizes both sides: the hedge ledger paid
out step by step, and the accrual predicted along the same path with gamma
evaluated at the hedger's own (implied) volatility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .core import Path

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class OptionSpec:
    strike: float
    maturity: float
    kind: str = "call"

    def __post_init__(self) -> None:
        if self.strike <= 0.0:
            raise ValueError(f"strike must be positive, got {self.strike}")
        if self.maturity <= 0.0:
            raise ValueError(f"maturity must be positive, got {self.maturity}")
        if self.kind not in ("call", "put"):
            raise ValueError(f"kind must be 'call' or 'put', got {self.kind!r}")


@dataclass(frozen=True)
class HedgeConfig:
    """implied_vol prices and hedges; realized_vol drives the simulated path."""

    implied_vol: float
    realized_vol: float
    rate: float = 0.0
    rehedge_steps: int = 250

    def __post_init__(self) -> None:
        if self.implied_vol <= 0.0:
            raise ValueError(f"implied vol must be positive, got {self.implied_vol}")
        if self.realized_vol <= 0.0:
            raise ValueError(f"realized vol must be positive, got {self.realized_vol}")
        if self.rehedge_steps < 1:
            raise ValueError(f"need at least one rehedge step, got {self.rehedge_steps}")


@dataclass(frozen=True)
class HedgeReport:
    """Ledger of one hedged path: realized P&L, predicted accrual, and their gap.

    gap == realized_pnl - predicted_accrual exactly.  The series cover the
    rebalancing grid: spot, gamma (at the hedger's vol; zero at expiry), and
    the share position held out of each grid point.
    """

    realized_pnl: float
    predicted_accrual: float
    gap: float
    times: np.ndarray
    spots: np.ndarray
    gammas: np.ndarray
    positions: np.ndarray


def _norm_pdf(x: np.ndarray) -> np.ndarray:
    return np.exp(-0.5 * x * x) / _SQRT_2PI


def bs_value_delta_gamma(spot, spec: OptionSpec, vol: float, rate: float, t):
    """Black-Scholes price, delta, gamma at time ``t`` (broadcasts over arrays).

    At or past expiry the value is intrinsic, delta snaps to {0, +/-1}, and
    gamma is zero.  Zero time/vol limits resolve to the discounted-intrinsic
    forms rather than NaN.
    """
    spot_arr = np.asarray(spot, dtype=np.float64)
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(spot_arr <= 0.0):
        raise ValueError("spot must be positive")
    if vol < 0.0:
        raise ValueError(f"vol must be non-negative, got {vol}")
    tau = spec.maturity - t_arr
    expired = tau <= 0.0
    tau_safe = np.where(expired, 1.0, tau)

    with np.errstate(divide="ignore", invalid="ignore"):
        sqrt_tau = np.sqrt(tau_safe)
        denom = vol * sqrt_tau
        log_m = np.log(spot_arr / spec.strike)
        d1 = (log_m + (rate + 0.5 * vol * vol) * tau_safe) / denom
        d2 = d1 - denom
        # vol == 0 makes d1 +/-inf by forward moneyness; ndtr maps that to
        # {0, 1}, and the at-the-forward boundary lands on the worthless side.
        degenerate = np.where(log_m + rate * tau_safe > 0.0, np.inf, -np.inf)
        d1 = np.where(denom > 0.0, d1, degenerate)
        d2 = np.where(denom > 0.0, d2, degenerate)
        disc_k = spec.strike * np.exp(-rate * tau_safe)
        n_d1 = ndtr(d1)
        n_d2 = ndtr(d2)
        if spec.kind == "call":
            value = spot_arr * n_d1 - disc_k * n_d2
            delta = n_d1
        else:
            value = disc_k * (1.0 - n_d2) - spot_arr * (1.0 - n_d1)
            delta = n_d1 - 1.0
        gamma = np.where(denom > 0.0, _norm_pdf(d1) / (spot_arr * denom), 0.0)

    intrinsic_sign = 1.0 if spec.kind == "call" else -1.0
    intrinsic = np.maximum(intrinsic_sign * (spot_arr - spec.strike), 0.0)
    expired_delta = np.where(
        intrinsic_sign * (spot_arr - spec.strike) > 0.0, intrinsic_sign, 0.0
    )
    value = np.where(expired, intrinsic, value)
    delta = np.where(expired, expired_delta, delta)
    gamma = np.where(expired, 0.0, gamma)
    if np.isscalar(spot) and np.isscalar(t):
        return float(value), float(delta), float(gamma)
    return value, delta, gamma


def intrinsic_value(spot, spec: OptionSpec):
    sign = 1.0 if spec.kind == "call" else -1.0
    return np.maximum(sign * (np.asarray(spot, dtype=np.float64) - spec.strike), 0.0)


def hedge_pnl_batch(
    times: np.ndarray, spots: np.ndarray, spec: OptionSpec, config: HedgeConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Realized P&L and predicted accrual for a matrix of paths (n_paths, n_steps + 1).

    The hedger buys the option at its implied-vol price, holds -delta shares
    against it, rebalances at every grid point, and finances cash at the rate
    with continuous compounding.  The accrual integrates
    0.5 * gamma * S^2 * (realized_var - implied_var) dt with gamma taken at the
    implied vol along the realized path.
    """
    if times.shape[0] != config.rehedge_steps + 1:
        raise ValueError(
            f"path grid has {times.shape[0] - 1} steps but the hedge expects {config.rehedge_steps}"
        )
    if abs(times[0]) > 1e-12 or abs(times[-1] - spec.maturity) > 1e-12:
        raise ValueError(
            f"path grid must cover [0, {spec.maturity}], got [{times[0]}, {times[-1]}]"
        )
    n_steps = config.rehedge_steps
    vol_gap = config.realized_vol**2 - config.implied_vol**2

    s0 = spots[:, 0]
    value0, delta, _ = bs_value_delta_gamma(s0, spec, config.implied_vol, config.rate, 0.0)
    cash = delta * s0 - value0  # bought the option, shorted delta shares
    accrual = np.zeros(spots.shape[0], dtype=np.float64)
    for j in range(n_steps):
        dt = times[j + 1] - times[j]
        s_j = spots[:, j]
        _, _, gamma_j = bs_value_delta_gamma(s_j, spec, config.implied_vol, config.rate, times[j])
        accrual += 0.5 * gamma_j * s_j * s_j * vol_gap * dt
        cash = cash * math.exp(config.rate * dt)
        s_next = spots[:, j + 1]
        if j + 1 < n_steps:
            _, delta_next, _ = bs_value_delta_gamma(
                s_next, spec, config.implied_vol, config.rate, times[j + 1]
            )
            cash += (delta_next - delta) * s_next
            delta = delta_next
    payoff = intrinsic_value(spots[:, -1], spec)
    pnl = payoff - delta * spots[:, -1] + cash
    return pnl, accrual


def delta_hedge_pnl(path: Path, spec: OptionSpec, config: HedgeConfig) -> HedgeReport:
    """Hedge one realized path and report P&L versus the predicted accrual.

    The path must have exactly ``config.rehedge_steps`` steps spanning
    [0, maturity] and must have been simulated at the realized volatility for
    the accrual comparison to mean anything.
    """
    spots = path.values[None, :]
    pnl, accrual = hedge_pnl_batch(path.times, spots, spec, config)
    values, deltas, gammas = bs_value_delta_gamma(
        path.values, spec, config.implied_vol, config.rate, path.times
    )
    del values
    positions = -deltas
    # No rebalance happens at expiry; the last position held is the prior one.
    positions[-1] = positions[-2] if positions.shape[0] > 1 else positions[-1]
    realized = float(pnl[0])
    predicted = float(accrual[0])
    return HedgeReport(
        realized_pnl=realized,
        predicted_accrual=predicted,
        gap=realized - predicted,
        times=path.times,
        spots=path.values,
        gammas=gammas,
        positions=positions,
    )
