"""Order impact with a permanent share and an exponentially decaying transient.

An order of size q moves the quoted mid by sign(q) * (|q| / depth)^exponent;
a fixed share of that move is permanent and the rest decays between events.
Fills are at the midpoint of the order's own move (half the new impact), which
for *linear* impact makes any single-venue round trip cost non-negative: the
cost is the quadratic form of the kernel pi + (1 - pi) e^{-rho |dt|}, which is
positive semi-definite.  For concave impact (exponent < 1) that guarantee is
lost -- splitting one side into clips and closing in one order extracts cash --
so experiments that attribute profit to a venue differential pin exponent = 1.

Order sequences are non-commutative once impact is nonlinear or transient:
running A then B from the same start can end at a different price than B then
A.  The two-venue cycle probes whether that asymmetry can be worked like an
engine across one deep and one shallow pool sharing the permanent component.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class ImpactParams:
    """Liquidity scale, impact concavity, transient decay rate, permanent share."""

    depth: float
    exponent: float = 1.0
    decay: float = 0.0
    permanent_share: float = 1.0

    def __post_init__(self) -> None:
        if self.depth <= 0.0:
            raise ValueError(f"depth must be positive, got {self.depth}")
        if not 0.0 < self.exponent <= 1.0:
            raise ValueError(f"exponent must lie in (0, 1], got {self.exponent}")
        if self.decay < 0.0:
            raise ValueError(f"decay must be non-negative, got {self.decay}")
        if not 0.0 <= self.permanent_share <= 1.0:
            raise ValueError(f"permanent share must lie in [0, 1], got {self.permanent_share}")


@dataclass(frozen=True)
class Order:
    side: str
    size: float
    time: float = 0.0

    def __post_init__(self) -> None:
        if self.side not in ("buy", "sell"):
            raise ValueError(f"side must be 'buy' or 'sell', got {self.side!r}")
        if self.size <= 0.0:
            raise ValueError(f"size must be positive, got {self.size}")
        if self.time < 0.0:
            raise ValueError(f"time must be non-negative, got {self.time}")

    @property
    def signed_size(self) -> float:
        return self.size if self.side == "buy" else -self.size


@dataclass(frozen=True)
class MarketState:
    """Mid price decomposed as base + permanent + transient, plus a trading ledger.

    The decomposition is exact by construction: mid_price is derived, never
    stored.
    """

    base: float
    permanent: float = 0.0
    transient: float = 0.0
    cash: float = 0.0
    inventory: float = 0.0
    time: float = 0.0

    @property
    def mid_price(self) -> float:
        return self.base + self.permanent + self.transient

    @classmethod
    def initial(cls, mid_price: float = 100.0) -> "MarketState":
        return cls(base=mid_price)


def impact_of(order: Order, params: ImpactParams) -> float:
    sign = 1.0 if order.side == "buy" else -1.0
    return sign * (order.size / params.depth) ** params.exponent


def apply_order(state: MarketState, order: Order, params: ImpactParams) -> MarketState:
    """Execute one order: decay the transient, fill at midpoint, move the price.

    The fill price is the pre-order mid plus half the order's own impact; the
    impact then splits into the permanent and transient components.
    """
    elapsed = order.time - state.time
    if elapsed < 0.0:
        raise ValueError(
            f"orders must not move backwards in time (state at {state.time}, order at {order.time})"
        )
    transient = state.transient * math.exp(-params.decay * elapsed)
    impact = impact_of(order, params)
    fill_price = state.base + state.permanent + transient + 0.5 * impact
    return replace(
        state,
        permanent=state.permanent + params.permanent_share * impact,
        transient=transient + (1.0 - params.permanent_share) * impact,
        cash=state.cash - order.signed_size * fill_price,
        inventory=state.inventory + order.signed_size,
        time=order.time,
    )


def run_sequence(state: MarketState, orders: Sequence[Order], params: ImpactParams) -> MarketState:
    """Run a sequence whose order times are offsets from the sequence start.

    The sequence starts at the state's current time, so chaining sequences
    places the second one at the completion time of the first.
    """
    start = state.time
    last_offset = 0.0
    for order in orders:
        if order.time < last_offset:
            raise ValueError("order times within a sequence must be non-decreasing")
        last_offset = order.time
        state = apply_order(state, replace(order, time=start + order.time), params)
    return state


def commutator(
    seq_a: Sequence[Order],
    seq_b: Sequence[Order],
    params: ImpactParams,
    initial: MarketState,
) -> tuple[float, float]:
    """Terminal (mid price, cash) differences between A-then-B and B-then-A."""
    ab = run_sequence(run_sequence(initial, seq_a, params), seq_b, params)
    ba = run_sequence(run_sequence(initial, seq_b, params), seq_a, params)
    return ab.mid_price - ba.mid_price, ab.cash - ba.cash


@dataclass(frozen=True)
class CycleReport:
    """Cash extracted per round by the two-venue cycle; positive means it runs."""

    net_cash_per_round: float
    per_round_cash: np.ndarray
    total_cash: float
    runs: bool


def two_venue_cycle(
    params_hot: ImpactParams,
    params_cold: ImpactParams,
    size: float,
    rounds: int,
    dwell: float = 1.0,
    initial_mid: float = 100.0,
) -> CycleReport:
    """Work a fixed cycle between a shallow (hot) and a deep (cold) venue.

    Both venues quote the same asset: they share one permanent component while
    each keeps its own transient.  One round is buy on cold + sell on hot,
    wait ``dwell`` for transients to decay, sell on cold + buy on hot, wait
    again.  Net inventory is zero every round; any cash left is the work
    extracted from the liquidity differential.
    """
    if size <= 0.0:
        raise ValueError(f"size must be positive, got {size}")
    if rounds < 1:
        raise ValueError(f"rounds must be positive, got {rounds}")
    if dwell < 0.0:
        raise ValueError(f"dwell must be non-negative, got {dwell}")

    permanent = 0.0
    trans_hot = 0.0
    trans_cold = 0.0
    cash = 0.0
    now = 0.0
    per_round = np.empty(rounds, dtype=np.float64)

    def trade(venue: str, side: str, at: float) -> None:
        nonlocal permanent, trans_hot, trans_cold, cash, now
        elapsed = at - now
        trans_hot *= math.exp(-params_hot.decay * elapsed)
        trans_cold *= math.exp(-params_cold.decay * elapsed)
        now = at
        params = params_hot if venue == "hot" else params_cold
        order = Order(side=side, size=size, time=at)
        impact = impact_of(order, params)
        transient = trans_hot if venue == "hot" else trans_cold
        fill = initial_mid + permanent + transient + 0.5 * impact
        permanent += params.permanent_share * impact
        if venue == "hot":
            trans_hot += (1.0 - params.permanent_share) * impact
        else:
            trans_cold += (1.0 - params.permanent_share) * impact
        cash -= order.signed_size * fill

    for k in range(rounds):
        cash_before = cash
        t0 = k * 2.0 * dwell
        trade("cold", "buy", t0)
        trade("hot", "sell", t0)
        trade("cold", "sell", t0 + dwell)
        trade("hot", "buy", t0 + dwell)
        # Let transients decay before the next round starts.
        per_round[k] = cash - cash_before
    net = float(np.mean(per_round))
    return CycleReport(
        net_cash_per_round=net,
        per_round_cash=per_round,
        total_cash=float(cash),
        runs=net > 0.0,
    )
