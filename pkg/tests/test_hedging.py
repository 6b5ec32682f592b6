import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edgelab.core import Seed
from edgelab.hedging import (
    HedgeConfig,
    OptionSpec,
    bs_value_delta_gamma,
    delta_hedge_pnl,
    hedge_pnl_batch,
)
from edgelab.sde import GridSpec, simulate_gbm, simulate_gbm_paths

ATM_CALL = OptionSpec(strike=100.0, maturity=1.0, kind="call")


class TestBlackScholes:
    def test_deep_in_the_money_call(self):
        value, delta, gamma = bs_value_delta_gamma(500.0, OptionSpec(100.0, 0.05), 0.2, 0.0, 0.0)
        assert delta == pytest.approx(1.0, abs=1e-9)
        assert gamma == pytest.approx(0.0, abs=1e-9)
        assert value == pytest.approx(400.0, rel=1e-6)

    @settings(max_examples=50, deadline=None)
    @given(
        spot=st.floats(10.0, 500.0),
        strike=st.floats(10.0, 500.0),
        vol=st.floats(0.05, 1.0),
        rate=st.floats(-0.05, 0.1),
        tau=st.floats(0.01, 5.0),
    )
    def test_put_call_parity(self, spot, strike, vol, rate, tau):
        spec_c = OptionSpec(strike=strike, maturity=tau, kind="call")
        spec_p = OptionSpec(strike=strike, maturity=tau, kind="put")
        call, _, _ = bs_value_delta_gamma(spot, spec_c, vol, rate, 0.0)
        put, _, _ = bs_value_delta_gamma(spot, spec_p, vol, rate, 0.0)
        parity = spot - strike * math.exp(-rate * tau)
        assert call - put == pytest.approx(parity, abs=1e-10 * max(1.0, spot, strike))

    @pytest.mark.parametrize("kind", ["call", "put"])
    @pytest.mark.parametrize("spot", [80.0, 100.0, 125.0])
    def test_greeks_match_finite_differences(self, kind, spot):
        spec = OptionSpec(strike=100.0, maturity=0.75, kind=kind)
        vol, rate, t = 0.3, 0.02, 0.25
        h = spot * 1e-5
        v_plus, _, _ = bs_value_delta_gamma(spot + h, spec, vol, rate, t)
        v_minus, _, _ = bs_value_delta_gamma(spot - h, spec, vol, rate, t)
        v_mid, delta, gamma = bs_value_delta_gamma(spot, spec, vol, rate, t)
        fd_delta = (v_plus - v_minus) / (2.0 * h)
        fd_gamma = (v_plus - 2.0 * v_mid + v_minus) / (h * h)
        assert delta == pytest.approx(fd_delta, rel=1e-6)
        assert gamma == pytest.approx(fd_gamma, rel=1e-5)

    def test_expired_intrinsic_conventions(self):
        call = OptionSpec(100.0, 1.0, "call")
        put = OptionSpec(100.0, 1.0, "put")
        v, d, g = bs_value_delta_gamma(130.0, call, 0.2, 0.01, 1.0)
        assert (v, d, g) == (30.0, 1.0, 0.0)
        v, d, g = bs_value_delta_gamma(80.0, call, 0.2, 0.01, 1.5)
        assert (v, d, g) == (0.0, 0.0, 0.0)
        v, d, g = bs_value_delta_gamma(80.0, put, 0.2, 0.01, 1.0)
        assert (v, d, g) == (20.0, -1.0, 0.0)

    def test_zero_vol_discounted_intrinsic(self):
        spec = OptionSpec(100.0, 1.0, "call")
        v, d, g = bs_value_delta_gamma(120.0, spec, 0.0, 0.05, 0.0)
        assert v == pytest.approx(120.0 - 100.0 * math.exp(-0.05), abs=1e-12)
        assert d == 1.0
        assert g == 0.0

    def test_gamma_positive_and_symmetric_across_kind(self):
        for spot in (70.0, 100.0, 140.0):
            _, _, gc = bs_value_delta_gamma(spot, OptionSpec(100.0, 1.0, "call"), 0.2, 0.01, 0.0)
            _, _, gp = bs_value_delta_gamma(spot, OptionSpec(100.0, 1.0, "put"), 0.2, 0.01, 0.0)
            assert gc > 0.0
            assert gc == pytest.approx(gp, rel=1e-12)

    def test_vectorized_matches_scalar(self):
        spots = np.array([80.0, 100.0, 120.0])
        v, d, g = bs_value_delta_gamma(spots, ATM_CALL, 0.2, 0.01, 0.3)
        for i, s in enumerate(spots):
            vi, di, gi = bs_value_delta_gamma(float(s), ATM_CALL, 0.2, 0.01, 0.3)
            assert (v[i], d[i], g[i]) == (vi, di, gi)


def _hedge_sample(realized_vol: float, implied_vol: float, steps: int, n_paths: int, master: int):
    config = HedgeConfig(
        implied_vol=implied_vol, realized_vol=realized_vol, rate=0.0, rehedge_steps=steps
    )
    grid = GridSpec(t_end=ATM_CALL.maturity, n_steps=steps)
    bundle = simulate_gbm_paths(0.0, realized_vol, 100.0, grid, Seed(master), n_paths)
    pnl, accrual = hedge_pnl_batch(bundle.times, bundle.values, ATM_CALL, config)
    return pnl, accrual


class TestDeltaHedge:
    def test_matched_vols_mean_zero(self):
        pnl, _ = _hedge_sample(0.2, 0.2, steps=200, n_paths=4000, master=61)
        se = pnl.std(ddof=1) / math.sqrt(pnl.size)
        assert abs(pnl.mean()) <= 3.0 * se

    def test_cheap_option_long_gamma_profits(self):
        pnl, accrual = _hedge_sample(0.3, 0.2, steps=500, n_paths=4000, master=62)
        se = pnl.std(ddof=1) / math.sqrt(pnl.size)
        assert pnl.mean() > 0.0
        diff = pnl - accrual
        diff_se = diff.std(ddof=1) / math.sqrt(diff.size)
        assert abs(diff.mean()) <= 3.0 * diff_se

    def test_rich_option_long_gamma_bleeds(self):
        pnl, _ = _hedge_sample(0.2, 0.3, steps=500, n_paths=4000, master=63)
        se = pnl.std(ddof=1) / math.sqrt(pnl.size)
        assert pnl.mean() < 0.0
        assert abs(pnl.mean()) > 3.0 * se

    def test_gap_shrinks_with_rehedge_frequency(self):
        gaps = []
        for steps in (50, 500):
            pnl, accrual = _hedge_sample(0.3, 0.2, steps=steps, n_paths=2000, master=64)
            gaps.append(np.abs(pnl - accrual).mean())
        assert gaps[1] < gaps[0]

    def test_zero_realized_vol_loses_premium_exactly(self):
        # Deterministic path growing at the financing rate, strike above the
        # terminal spot: the hedge washes and the option expires worthless, so
        # the loss is the initial premium accrued.
        rate = 0.03
        steps = 64
        spec = OptionSpec(strike=150.0, maturity=1.0, kind="call")
        config = HedgeConfig(implied_vol=0.2, realized_vol=1e-9, rate=rate, rehedge_steps=steps)
        grid = GridSpec(1.0, steps)
        path = simulate_gbm(rate, 0.0, 100.0, grid, Seed(65))
        report = delta_hedge_pnl(path, spec, config)
        premium, _, _ = bs_value_delta_gamma(100.0, spec, 0.2, rate, 0.0)
        assert report.realized_pnl == pytest.approx(-premium * math.exp(rate), rel=1e-9)

    def test_report_gap_is_exact_difference(self):
        steps = 100
        config = HedgeConfig(implied_vol=0.2, realized_vol=0.25, rate=0.01, rehedge_steps=steps)
        path = simulate_gbm(0.01, 0.25, 100.0, GridSpec(1.0, steps), Seed(66))
        report = delta_hedge_pnl(path, ATM_CALL, config)
        assert report.gap == report.realized_pnl - report.predicted_accrual
        assert report.gammas.shape == path.times.shape
        assert report.positions.shape == path.times.shape
        assert report.gammas[-1] == 0.0

    def test_single_path_matches_batch(self):
        steps = 80
        config = HedgeConfig(implied_vol=0.2, realized_vol=0.3, rate=0.02, rehedge_steps=steps)
        grid = GridSpec(1.0, steps)
        bundle = simulate_gbm_paths(0.02, 0.3, 100.0, grid, Seed(67), 3)
        pnl, accrual = hedge_pnl_batch(bundle.times, bundle.values, ATM_CALL, config)
        for i in range(3):
            report = delta_hedge_pnl(bundle.path(i), ATM_CALL, config)
            assert report.realized_pnl == pnl[i]
            assert report.predicted_accrual == accrual[i]

    def test_rejects_grid_mismatch(self):
        config = HedgeConfig(implied_vol=0.2, realized_vol=0.3, rate=0.0, rehedge_steps=50)
        path = simulate_gbm(0.0, 0.3, 100.0, GridSpec(1.0, 49), Seed(68))
        with pytest.raises(ValueError, match="steps"):
            delta_hedge_pnl(path, ATM_CALL, config)

    def test_rejects_wrong_horizon(self):
        config = HedgeConfig(implied_vol=0.2, realized_vol=0.3, rate=0.0, rehedge_steps=50)
        path = simulate_gbm(0.0, 0.3, 100.0, GridSpec(2.0, 50), Seed(69))
        with pytest.raises(ValueError, match="cover"):
            delta_hedge_pnl(path, ATM_CALL, config)


class TestConfigValidation:
    def test_rejects_non_positive_vols(self):
        with pytest.raises(ValueError):
            HedgeConfig(implied_vol=0.0, realized_vol=0.2)
        with pytest.raises(ValueError):
            HedgeConfig(implied_vol=0.2, realized_vol=-0.1)

    def test_rejects_bad_option(self):
        with pytest.raises(ValueError):
            OptionSpec(strike=-1.0, maturity=1.0)
        with pytest.raises(ValueError):
            OptionSpec(strike=100.0, maturity=0.0)
        with pytest.raises(ValueError):
            OptionSpec(strike=100.0, maturity=1.0, kind="straddle")
