"""Shared-jackpot lottery: how crowd-favorite numbers dilute the prize.

The modeled player holds one ticket on a chosen number.  A crowd of M other
players picks numbers independently from a popularity distribution each draw,
and the jackpot is split evenly among everyone holding the drawn number.  The
player's ticket always participates, so the jackpot is paid whenever their
number comes up; what varies is how many ways it splits.  Numbers held by
nobody roll over and are out of scope (individual-bettor view, not house
economics).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import Seed, derive_stream, generator

# Above this crowd size the closed form replaces the exact binomial sum.
_BINOMIAL_SUM_MAX_PLAYERS = 10_000
# Below this popularity the closed form is evaluated by series instead of
# dividing two vanishing quantities.
_SERIES_POPULARITY = 1e-12

_DISTRIBUTION_TOL = 1e-12


def _check_distribution(values, k: int, name: str) -> tuple[float, ...]:
    out = tuple(float(v) for v in values)
    if len(out) != k:
        raise ValueError(f"{name} must have {k} entries, got {len(out)}")
    if any(v < 0.0 for v in out):
        raise ValueError(f"{name} entries must be non-negative")
    total = math.fsum(out)
    if abs(total - 1.0) > _DISTRIBUTION_TOL:
        raise ValueError(f"{name} must sum to 1 within {_DISTRIBUTION_TOL}, got {total!r}")
    return out


@dataclass(frozen=True)
class LotterySpec:
    """K numbers, crowd pick weights, crowd size, jackpot, and ticket price.

    draw_distribution defaults to uniform; popularity is the crowd's habit,
    not the machine's.
    """

    n_numbers: int
    popularity: tuple[float, ...]
    n_other_players: int
    jackpot: float
    ticket_price: float
    draw_distribution: tuple[float, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.n_numbers < 1:
            raise ValueError(f"need at least one number, got {self.n_numbers}")
        if self.n_other_players < 0:
            raise ValueError(f"crowd size must be non-negative, got {self.n_other_players}")
        if self.jackpot <= 0.0:
            raise ValueError(f"jackpot must be positive, got {self.jackpot}")
        if self.ticket_price <= 0.0:
            raise ValueError(f"ticket price must be positive, got {self.ticket_price}")
        popularity = _check_distribution(self.popularity, self.n_numbers, "popularity")
        draw = self.draw_distribution
        if draw == () or draw is None:
            draw = tuple(1.0 / self.n_numbers for _ in range(self.n_numbers))
        draw = _check_distribution(draw, self.n_numbers, "draw_distribution")
        object.__setattr__(self, "popularity", popularity)
        object.__setattr__(self, "draw_distribution", draw)


def _check_number(spec: LotterySpec, number: int) -> int:
    if not isinstance(number, (int, np.integer)) or isinstance(number, bool):
        raise TypeError(f"number must be an integer index, got {number!r}")
    if not 0 <= number < spec.n_numbers:
        raise ValueError(f"number {number} out of range [0, {spec.n_numbers})")
    return int(number)


def expected_share_factor_sum(n_other_players: int, popularity_weight: float) -> float:
    """E[1 / (m + 1)] with m ~ Binomial(M, w), by explicit summation."""
    m = np.arange(n_other_players + 1, dtype=np.float64)
    # pmf in the log domain; w at the boundary handled by masking impossible terms
    w = popularity_weight
    if w == 0.0:
        return 1.0
    if w == 1.0:
        return 1.0 / (n_other_players + 1.0)
    from scipy.special import gammaln

    log_pmf = (
        gammaln(n_other_players + 1.0)
        - gammaln(m + 1.0)
        - gammaln(n_other_players - m + 1.0)
        + m * math.log(w)
        + (n_other_players - m) * math.log1p(-w)
    )
    return float(np.exp(log_pmf) @ (1.0 / (m + 1.0)))


def expected_share_factor_closed(n_other_players: int, popularity_weight: float) -> float:
    """E[1 / (m + 1)] in closed form: (1 - (1 - w)^(M + 1)) / ((M + 1) w).

    Falls back to the small-w series so the w -> 0 limit is smooth.
    """
    c = n_other_players + 1.0
    w = popularity_weight
    if w < _SERIES_POPULARITY:
        # (1 - (1 - w)^c) / (c w) = 1 - (c - 1) w / 2 + (c - 1)(c - 2) w^2 / 6 - ...
        return 1.0 - (c - 1.0) * w / 2.0 + (c - 1.0) * (c - 2.0) * w * w / 6.0
    if w >= 1.0:
        return 1.0 / c
    return -math.expm1(c * math.log1p(-w)) / (c * w)


def expected_ticket_value(spec: LotterySpec, number: int, method: str = "auto") -> float:
    """Exact expected payout of one ticket on ``number`` (price not deducted).

    This is draw_probability * jackpot * E[1 / (1 + other winners)], where the
    count of other winners is Binomial(M, popularity[number]).  ``method``
    picks the evaluation route: "sum" (explicit binomial sum), "closed"
    (closed form), or "auto" (sum for small crowds, closed for large).
    """
    n = _check_number(spec, number)
    w = spec.popularity[n]
    if method == "auto":
        method = "sum" if spec.n_other_players <= _BINOMIAL_SUM_MAX_PLAYERS else "closed"
    if method == "sum":
        factor = expected_share_factor_sum(spec.n_other_players, w)
    elif method == "closed":
        factor = expected_share_factor_closed(spec.n_other_players, w)
    else:
        raise ValueError(f"unknown method {method!r}; expected 'auto', 'sum', or 'closed'")
    return spec.draw_distribution[n] * spec.jackpot * factor


def best_number(spec: LotterySpec) -> tuple[int, float]:
    """Index with the highest expected ticket value (ties go to the lowest index)."""
    values = [expected_ticket_value(spec, i) for i in range(spec.n_numbers)]
    best = int(np.argmax(values))
    return best, values[best]


@dataclass(frozen=True)
class LotteryRunStats:
    """Monte Carlo estimate of the net payoff per draw for one strategy number."""

    mean_net_payoff: float
    std_error: float
    n_draws: int
    hit_rate: float


def simulate_lottery(spec: LotterySpec, strategy: int, draws: int, seed: Seed) -> LotteryRunStats:
    """Monte Carlo mean net payoff (payout - ticket price) of playing ``strategy``.

    The crowd re-samples its picks independently every draw; only the count of
    other players on the strategy number when it wins affects the payout, so
    that count is sampled directly.
    """
    strategy = _check_number(spec, strategy)
    if draws < 1:
        raise ValueError(f"draws must be positive, got {draws}")
    win_gen = generator(derive_stream(seed, "draws"))
    crowd_gen = generator(derive_stream(seed, "crowd"))

    winners = win_gen.choice(spec.n_numbers, size=draws, p=np.asarray(spec.draw_distribution))
    hits = winners == strategy
    n_hits = int(hits.sum())

    payouts = np.zeros(draws, dtype=np.float64)
    if n_hits:
        w = spec.popularity[strategy]
        if spec.n_other_players > 0 and w > 0.0:
            others = crowd_gen.binomial(spec.n_other_players, w, size=n_hits)
        else:
            others = np.zeros(n_hits, dtype=np.int64)
        payouts[hits] = spec.jackpot / (others + 1.0)

    net = payouts - spec.ticket_price
    mean = float(np.mean(net))
    std_error = float(np.std(net, ddof=1) / math.sqrt(draws)) if draws > 1 else 0.0
    return LotteryRunStats(
        mean_net_payoff=mean,
        std_error=std_error,
        n_draws=int(draws),
        hit_rate=n_hits / draws,
    )
