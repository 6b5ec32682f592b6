"""Kelly sizing for one and for N simultaneous independent double-or-nothing games.

A double-or-nothing game returns twice the stake with probability ``p`` and
nothing otherwise.  A bettor restricted to a single game should stake the
fraction ``2p - 1`` of wealth.  For ``n`` independent games played each round
with an equal split of the total stake, two sizings are exposed side by side:

* :func:`kelly_multi_paper` — the closed form ``(p^n - q^n) / (p^n + q^n)``,
  which is the exact optimizer of expected log growth for n in {1, 2} only
  (it solves the first-order condition kept to the all-win/all-lose outcomes);
* :func:`optimize_fraction` — the numeric optimizer of the exact one-round
  expected log growth, which exceeds the closed form from n = 3 on.

Both are reported at full precision; rounding for display is the caller's job.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .core import Path, Seed, derive_stream, generator

# Enumerating more than this many simultaneous games loses accuracy in the
# binomial tail weights; refuse rather than return a degraded number.
MAX_ENUMERATED_GAMES = 60

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
# Keep the search bracket away from the log singularity at full stake.
_BRACKET_HIGH = 1.0 - 1e-9


def _check_probability(p: float, *, favorable: bool = False) -> float:
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError(f"win probability must lie in (0, 1), got {p}")
    if favorable and p <= 0.5:
        raise ValueError(f"win probability must exceed 0.5 for this sizing, got {p}")
    return p


def _check_n_games(n: int) -> int:
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        raise TypeError(f"number of games must be an integer, got {n!r}")
    if n < 1:
        raise ValueError(f"number of games must be at least 1, got {n}")
    return int(n)


@dataclass(frozen=True)
class GameSpec:
    """Parameters of one round: n_games independent games, each won w.p. p.

    p = 1 (a certain win) is accepted for degenerate checks; the sizing
    functions themselves require p strictly inside the unit interval.
    """

    p: float
    n_games: int = 1

    def __post_init__(self) -> None:
        if not 0.0 < float(self.p) <= 1.0:
            raise ValueError(f"win probability must lie in (0, 1], got {self.p}")
        _check_n_games(self.n_games)


@dataclass(frozen=True)
class Allocation:
    """Total stake per round and its equal per-game split.

    The invariant per_game_fraction * n_games == total_fraction holds exactly;
    build instances through :meth:`equal_split` to get the rounding right.
    """

    total_fraction: float
    per_game_fraction: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.total_fraction < 1.0:
            raise ValueError(f"total fraction must lie in [0, 1), got {self.total_fraction}")
        if self.per_game_fraction < 0.0:
            raise ValueError("per-game fraction must be non-negative")

    @classmethod
    def equal_split(cls, total_fraction: float, n_games: int) -> "Allocation":
        n = _check_n_games(n_games)
        per_game = float(total_fraction) / n
        # Store the product so the exact-consistency invariant holds by construction.
        return cls(total_fraction=per_game * n, per_game_fraction=per_game)

    def n_games(self) -> int:
        if self.per_game_fraction == 0.0:
            return 1
        return int(round(self.total_fraction / self.per_game_fraction))

    def consistent_with(self, game: GameSpec) -> bool:
        return self.per_game_fraction * game.n_games == self.total_fraction


def kelly_single(p: float) -> float:
    """Growth-optimal fraction for a single game: max(2p - 1, 0)."""
    p = _check_probability(p)
    return max(2.0 * p - 1.0, 0.0)


def kelly_multi_paper(p: float, n: int) -> float:
    """Closed-form total fraction (p^n - q^n) / (p^n + q^n) for n games, q = 1 - p.

    Exact optimizer of expected log growth only for n in {1, 2}; see
    :func:`optimize_fraction` for the numeric optimum.  Evaluated through
    (1 - (q/p)^n) / (1 + (q/p)^n) at large n so the result degrades gracefully
    to 1 instead of underflowing to 0/0.
    """
    p = _check_probability(p, favorable=True)
    n = _check_n_games(n)
    q = 1.0 - p
    if n <= 200:
        pn, qn = p**n, q**n
        return (pn - qn) / (pn + qn)
    ratio = math.exp(n * (math.log(q) - math.log(p)))
    return (1.0 - ratio) / (1.0 + ratio)


def expected_log_growth(p: float, n: int, f: float) -> float:
    """Exact one-round expected log growth at total stake f split equally.

    Sums Binomial(n, p) outcome weights against log(1 + f (2k - n) / n), the
    log wealth multiplier when k of the n games win.  Weights are computed in
    the log domain, which keeps the sum accurate up to n = 60 games; beyond
    that the function refuses — estimate by simulation instead
    (:func:`simulate_rounds`).
    """
    p = _check_probability(p)
    n = _check_n_games(n)
    f = float(f)
    if not 0.0 <= f < 1.0:
        raise ValueError(f"stake fraction must lie in [0, 1), got {f}")
    if n > MAX_ENUMERATED_GAMES:
        raise ValueError(
            f"binomial enumeration supports at most {MAX_ENUMERATED_GAMES} games, got {n}; "
            "use Monte Carlo (simulate_rounds) for larger n"
        )
    k = np.arange(n + 1, dtype=np.float64)
    log_weights = (
        gammaln(n + 1.0)
        - gammaln(k + 1.0)
        - gammaln(n - k + 1.0)
        + k * math.log(p)
        + (n - k) * math.log1p(-p)
    )
    log_multipliers = np.log1p(f * (2.0 * k - n) / n)
    return float(np.exp(log_weights) @ log_multipliers)


def _growth_derivative(p: float, n: int, f: float) -> float:
    """d/df of expected_log_growth, by the same binomial enumeration."""
    k = np.arange(n + 1, dtype=np.float64)
    log_weights = (
        gammaln(n + 1.0)
        - gammaln(k + 1.0)
        - gammaln(n - k + 1.0)
        + k * math.log(p)
        + (n - k) * math.log1p(-p)
    )
    m = (2.0 * k - n) / n
    return float(np.exp(log_weights) @ (m / (1.0 + f * m)))


def optimize_fraction(p: float, n: int, tol: float = 1e-10) -> float:
    """Numerically growth-optimal total fraction.

    Golden-section search on the strictly concave objective brackets the
    maximizer; because the objective flattens below float noise within about
    1e-8 of the optimum, the bracket is then polished by bisecting the sign of
    the growth derivative, which stays resolvable down to ~1e-15.  The result
    is within ``tol`` of the true maximizer on the bracket [0, 1 - 1e-9].
    """
    p = _check_probability(p, favorable=True)
    n = _check_n_games(n)
    tol = float(tol)
    if tol <= 0.0:
        raise ValueError(f"tolerance must be positive, got {tol}")

    def objective(f: float) -> float:
        return expected_log_growth(p, n, f)

    coarse = max(tol, 1e-6)
    lo, hi = 0.0, _BRACKET_HIGH
    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    gc, gd = objective(c), objective(d)
    while hi - lo > coarse:
        if gc < gd:
            lo, c, gc = c, d, gd
            d = lo + _INV_PHI * (hi - lo)
            gd = objective(d)
        else:
            hi, d, gd = d, c, gc
            c = hi - _INV_PHI * (hi - lo)
            gc = objective(c)
    if hi - lo <= tol:
        return 0.5 * (lo + hi)

    # Widen by one coarse step so golden-section comparison noise cannot have
    # pushed the true maximizer just outside the bracket.
    lo = max(0.0, lo - coarse)
    hi = min(_BRACKET_HIGH, hi + coarse)
    if _growth_derivative(p, n, lo) <= 0.0:
        return lo
    if _growth_derivative(p, n, hi) >= 0.0:
        return hi
    while hi - lo > tol and hi - lo > 4.0 * np.finfo(float).eps:
        mid = 0.5 * (lo + hi)
        if _growth_derivative(p, n, mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def round_outcomes(game: GameSpec, rounds: int, seed: Seed) -> np.ndarray:
    """Boolean (rounds, n_games) win matrix; the one source of randomness per seed.

    Every policy evaluated on the same seed sees this same matrix, which is
    what makes cross-policy comparisons paired.
    """
    if rounds < 1:
        raise ValueError(f"rounds must be positive, got {rounds}")
    gen = generator(derive_stream(seed, "outcomes"))
    return gen.random((int(rounds), game.n_games)) < game.p


def log_wealth_from_wins(wins_per_round: np.ndarray, total_fraction: float, n_games: int) -> np.ndarray:
    """Cumulative log wealth (starting at 0) from per-round win counts."""
    k = np.arange(n_games + 1, dtype=np.float64)
    log_mult_table = np.log1p(total_fraction * (2.0 * k - n_games) / n_games)
    log_wealth = np.empty(wins_per_round.shape[0] + 1, dtype=np.float64)
    log_wealth[0] = 0.0
    np.cumsum(log_mult_table[wins_per_round], out=log_wealth[1:])
    return log_wealth


def simulate_rounds(game: GameSpec, alloc: Allocation, rounds: int, seed: Seed) -> Path:
    """Simulate repeated rounds; returns the wealth trajectory in log space.

    values[t] is log of wealth after t rounds (0 at the start).  Log space is
    used because favorable games compound past the float range within a few
    thousand rounds; exponentiate segments as needed.
    """
    if not alloc.consistent_with(game):
        raise ValueError(
            f"allocation (total {alloc.total_fraction}, per-game {alloc.per_game_fraction}) "
            f"is not an equal split across {game.n_games} games"
        )
    wins = round_outcomes(game, rounds, seed).sum(axis=1)
    log_wealth = log_wealth_from_wins(wins, alloc.total_fraction, game.n_games)
    times = np.arange(rounds + 1, dtype=np.float64)
    return Path(times=times, values=log_wealth)
