import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edgelab.core import Seed
from edgelab.kelly import (
    Allocation,
    GameSpec,
    expected_log_growth,
    kelly_multi_paper,
    kelly_single,
    optimize_fraction,
    simulate_rounds,
)

# Frozen from the binomial-sum oracle: at three games the closed form is no
# longer stationary, the numeric optimum sits strictly above it.
NUMERIC_OPTIMUM_P06_N3 = 0.5525957852
PAPER_P06_N3 = 0.5428571428571428


def two_term_growth(p: float, f: float) -> float:
    """Independent oracle for the single-game objective."""
    return p * math.log(1.0 + f) + (1.0 - p) * math.log(1.0 - f)


class TestKellySingle:
    def test_p06(self):
        assert kelly_single(0.6) == pytest.approx(0.2, abs=1e-15)

    def test_fair_game_no_edge(self):
        assert kelly_single(0.5) == 0.0

    def test_p09(self):
        assert kelly_single(0.9) == pytest.approx(0.8, abs=1e-15)

    def test_unfavorable_clamps_to_zero(self):
        assert kelly_single(0.3) == 0.0

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
    def test_rejects_bad_probability(self, p):
        with pytest.raises(ValueError):
            kelly_single(p)


class TestKellyMultiPaper:
    def test_reduces_to_single_at_n1(self):
        for p in (0.51, 0.6, 0.75, 0.9):
            assert kelly_multi_paper(p, 1) == pytest.approx(2.0 * p - 1.0, abs=1e-12)

    def test_n2_value(self):
        # (p^2 - q^2) / (p^2 + q^2) at p = 0.6 is 5/13.
        assert kelly_multi_paper(0.6, 2) == pytest.approx(5.0 / 13.0, abs=1e-12)

    def test_large_n_approaches_full_stake(self):
        f = kelly_multi_paper(0.6, 50)
        assert f < 1.0
        assert 1.0 - f < 1e-8

    def test_monotone_in_n(self):
        # Strictly increasing until the float representation saturates at 1.
        values = [kelly_multi_paper(0.55, n) for n in range(1, 41)]
        assert all(b > a for a, b in zip(values, values[1:]))
        tail = [kelly_multi_paper(0.55, n) for n in range(41, 400, 13)]
        assert all(b >= a for a, b in zip(tail, tail[1:]))
        assert kelly_multi_paper(0.55, 10_000) == pytest.approx(1.0, abs=1e-12)

    def test_rejects_unfavorable(self):
        with pytest.raises(ValueError):
            kelly_multi_paper(0.5, 3)
        with pytest.raises(ValueError):
            kelly_multi_paper(0.4, 3)

    def test_rejects_bad_n(self):
        with pytest.raises(ValueError):
            kelly_multi_paper(0.6, 0)


class TestExpectedLogGrowth:
    def test_single_game_value(self):
        assert expected_log_growth(0.6, 1, 0.2) == pytest.approx(
            two_term_growth(0.6, 0.2), abs=1e-15
        )
        assert expected_log_growth(0.6, 1, 0.2) == pytest.approx(0.020136, abs=5e-7)

    def test_zero_stake_zero_growth(self):
        assert expected_log_growth(0.7, 4, 0.0) == 0.0

    def test_fair_game_negative(self):
        assert expected_log_growth(0.5, 1, 0.3) < 0.0
        assert expected_log_growth(0.5, 1, 0.3) == pytest.approx(
            two_term_growth(0.5, 0.3), abs=1e-15
        )

    def test_matches_direct_enumeration_n3(self):
        # Independent oracle: explicit 4-outcome enumeration.
        p, f = 0.6, 0.4
        q = 1.0 - p
        expected = (
            q**3 * math.log(1.0 - f)
            + 3 * p * q**2 * math.log(1.0 - f / 3.0)
            + 3 * p**2 * q * math.log(1.0 + f / 3.0)
            + p**3 * math.log(1.0 + f)
        )
        assert expected_log_growth(p, 3, f) == pytest.approx(expected, abs=1e-14)

    def test_rejects_full_stake(self):
        with pytest.raises(ValueError):
            expected_log_growth(0.6, 2, 1.0)

    def test_refuses_beyond_enumeration_limit(self):
        with pytest.raises(ValueError, match="Monte Carlo"):
            expected_log_growth(0.6, 61, 0.1)
        # The boundary itself still works.
        assert math.isfinite(expected_log_growth(0.6, 60, 0.1))

    @settings(max_examples=30, deadline=None)
    @given(
        p=st.floats(0.05, 0.95),
        n=st.integers(1, 20),
        f0=st.floats(0.0, 0.9),
        f2=st.floats(0.0, 0.9),
    )
    def test_midpoint_concavity(self, p, n, f0, f2):
        f1 = 0.5 * (f0 + f2)
        g0 = expected_log_growth(p, n, f0)
        g1 = expected_log_growth(p, n, f1)
        g2 = expected_log_growth(p, n, f2)
        assert g1 >= 0.5 * (g0 + g2) - 1e-12


class TestOptimizeFraction:
    def test_n1_recovers_single_kelly(self):
        assert optimize_fraction(0.6, 1) == pytest.approx(0.2, abs=1e-9)

    def test_n2_matches_closed_form(self):
        assert optimize_fraction(0.6, 2, tol=1e-10) == pytest.approx(
            kelly_multi_paper(0.6, 2), abs=1e-8
        )

    def test_n3_exceeds_closed_form(self):
        # From n = 3 on, the closed form is not a stationary point: the growth
        # derivative there is positive, so the true optimum lies above it.
        numeric = optimize_fraction(0.6, 3)
        assert numeric == pytest.approx(NUMERIC_OPTIMUM_P06_N3, abs=1e-8)
        assert numeric > PAPER_P06_N3 + 5e-3
        h = 1e-6
        slope = (
            expected_log_growth(0.6, 3, PAPER_P06_N3 + h)
            - expected_log_growth(0.6, 3, PAPER_P06_N3 - h)
        ) / (2.0 * h)
        assert slope > 0.0

    def test_dominates_single_game_sizing(self):
        for n in (1, 2, 5, 10, 20):
            assert optimize_fraction(0.6, n) >= 0.2 - 1e-9

    def test_growth_non_decreasing_in_n(self):
        growths = [
            expected_log_growth(0.6, n, optimize_fraction(0.6, n)) for n in range(1, 21)
        ]
        assert all(b >= a - 1e-12 for a, b in zip(growths, growths[1:]))

    def test_rejects_bad_tol(self):
        with pytest.raises(ValueError):
            optimize_fraction(0.6, 2, tol=0.0)


class TestAllocation:
    def test_equal_split_exact_product(self):
        for total, n in [(0.2, 3), (0.5, 7), (0.9, 11), (0.0, 4)]:
            alloc = Allocation.equal_split(total, n)
            assert alloc.per_game_fraction * n == alloc.total_fraction

    def test_rejects_full_fraction(self):
        with pytest.raises(ValueError):
            Allocation.equal_split(1.0, 2)

    def test_consistency_check(self):
        alloc = Allocation.equal_split(0.3, 3)
        assert alloc.consistent_with(GameSpec(0.6, 3))
        assert not alloc.consistent_with(GameSpec(0.6, 4))


class TestSimulateRounds:
    def test_zero_stake_constant_wealth(self):
        game = GameSpec(0.6, 2)
        path = simulate_rounds(game, Allocation.equal_split(0.0, 2), 50, Seed(1))
        assert np.all(path.values == 0.0)

    def test_certain_win_compounds_exactly(self):
        game = GameSpec(1.0, 1)
        path = simulate_rounds(game, Allocation.equal_split(0.5, 1), 10, Seed(1))
        assert math.exp(path.values[-1]) == pytest.approx(1.5**10, rel=1e-12)

    def test_realized_growth_matches_expectation(self):
        # Per-round log growth over many rounds converges on the enumerated value.
        game = GameSpec(0.6, 1)
        rounds = 100_000
        path = simulate_rounds(game, Allocation.equal_split(0.2, 1), rounds, Seed(99))
        per_round = np.diff(path.values)
        realized = per_round.mean()
        se = per_round.std(ddof=1) / math.sqrt(rounds)
        assert abs(realized - expected_log_growth(0.6, 1, 0.2)) <= 3.0 * se

    def test_same_seed_same_path(self):
        game = GameSpec(0.7, 3)
        alloc = Allocation.equal_split(0.4, 3)
        a = simulate_rounds(game, alloc, 100, Seed(5))
        b = simulate_rounds(game, alloc, 100, Seed(5))
        assert np.array_equal(a.values, b.values)

    def test_rejects_inconsistent_allocation(self):
        with pytest.raises(ValueError, match="split"):
            simulate_rounds(GameSpec(0.6, 4), Allocation.equal_split(0.2, 3), 10, Seed(1))
