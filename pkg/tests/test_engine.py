import numpy as np
import pytest

from ioabm.economy import ModelConstants, Worker
from ioabm.engine import (
    AccountingError, Phase, close_accounts, compute_cpi, compute_real_gdp,
    init_economy, step_month,
)
from ioabm.io_table import technical_coefficients
from ioabm.shocks import parse_timeline
from ioabm.synthetic import build_balanced_sam, steady_state_economy, synthetic4


def rel_err(actual, expected):
    expected = np.asarray(expected, dtype=float)
    actual = np.asarray(actual, dtype=float)
    scale = np.maximum(np.abs(expected), 1e-12)
    return np.max(np.abs(actual - expected) / scale)


class TestSteadyStateFixedPoint:
    """A balanced table's stationary state reproduces its flows exactly.

    This also pins the sub-step order: permuting engine sub-steps breaks the
    equality (income earned in month t must be spendable in month t, stocks
    must be drawn before restocking, investment after depreciation)."""

    def test_flows_match_table_over_twelve_months(self, synthetic_w8,
                                                  constants_w8):
        sam, info, params = synthetic_w8
        state = steady_state_economy(sam, params, constants_w8, seed=5489)
        for _ in range(12):
            r = step_month(state)
            nz = info.intermediates_monthly > 1e-9
            assert rel_err(r.flows_intermediate[nz],
                           info.intermediates_monthly[nz]) < 1e-6
            assert rel_err(r.flows_household, info.household_monthly) < 1e-6
            assert rel_err(r.flows_government, info.government_monthly) < 1e-6
            assert rel_err(r.flows_gfcf, info.gfcf_monthly) < 1e-6
            assert rel_err(r.flows_exports, info.exports_monthly) < 1e-6
            assert rel_err(r.nominal_gdp, info.gdp_monthly) < 1e-6
            assert rel_err(r.wages_paid, info.labor_monthly.sum()) < 1e-6
            assert rel_err(r.taxes_paid, info.taxes_monthly.sum()) < 1e-6
            assert r.flows_imports.sum() == 0.0
            assert r.firm_births == 0 and r.firm_deaths == 0

    def test_unemployment_at_structural_rate(self, synthetic_w8, constants_w8):
        sam, info, params = synthetic_w8
        state = steady_state_economy(sam, params, constants_w8, seed=5489)
        r = step_month(state)
        assert r.unemployment_rate == pytest.approx(0.125)

    def test_multi_firm_sectors_preserve_aggregates(self, constants_w8):
        # With several sellers per sector the firm-level split is random but
        # sector flows stay on target while no seller stocks out.
        c = ModelConstants(workers_per_sector=64)
        sam, info, params = synthetic4(c)
        state = steady_state_economy(sam, params, c, seed=7, firms_per_sector=4)
        r = step_month(state)
        nz = info.intermediates_monthly > 1e-9
        assert rel_err(r.flows_intermediate[nz],
                       info.intermediates_monthly[nz]) < 1e-6
        assert rel_err(r.nominal_gdp, info.gdp_monthly) < 1e-6


class TestDegenerateStates:
    def test_zero_firm_state(self, synthetic_w8, constants_w8):
        sam, info, params = synthetic_w8
        coeffs = technical_coefficients(sam)
        state = init_economy(sam, coeffs, params, constants_w8, seed=1)
        state.phase = Phase.FREE_MARKET
        state.fm_entry_month = 0
        state.subsidy_rate = 0.0
        r = step_month(state)
        assert r.nominal_gdp == 0.0
        assert r.unemployment_rate == 1.0

    def test_total_shutdown_month(self, synthetic_w8, constants_w8):
        sam, info, params = synthetic_w8
        state = steady_state_economy(sam, params, constants_w8, seed=5489)
        state.timeline = parse_timeline(
            "[PANDEMIC_TIMELINE]\nstart_month = 0\n"
            "[PANDEMIC_TIMELINE.month.0]\ncapacity.default = 0.0\n"
            "[PANDEMIC_TIMELINE.month.1]\ncapacity.default = 0.0\n")
        r1 = step_month(state)
        assert r1.real_gdp == pytest.approx(0.0, abs=1e-9)
        # month one: output buffers still serve part of demand, but the
        # shortfall signal is already visible; by month two stocks are gone
        assert r1.unmet_demand_ratio > 0.1
        r2 = step_month(state)
        assert r2.real_gdp == pytest.approx(0.0, abs=1e-9)
        assert r2.unmet_demand_ratio > 0.5


class TestCloseAccounts:
    def test_closed_economy_residual_zero(self, constants_w8):
        codes = ["A", "B"]
        a = np.array([[0.1, 0.2], [0.1, 0.1]])
        sam, info = build_balanced_sam(
            codes, a, labor_coeff=np.array([0.4, 0.5]),
            tax_rate_production=np.array([0.02, 0.02]),
            tax_rate_products=np.array([0.02, 0.02]),
            household_monthly=np.array([40.0, 50.0]),
            government_monthly=np.array([5.0, 5.0]),
            exports_monthly=np.zeros(2),
            gfcf_weights=np.array([0.5, 0.5]), constants=constants_w8)
        from ioabm.io_table import CountryParams
        params = CountryParams(1000, 0.125, 1.0)
        state = steady_state_economy(sam, params, constants_w8, seed=3)
        for _ in range(3):
            r = step_month(state)
            assert r.net_external_flow == pytest.approx(0.0, abs=1e-12)
            assert abs(r.accounting_residual) <= 1e-9 * max(r.gross_flows, 1.0)

    def test_single_export_sale_changes_wealth_by_sale(self, synthetic_w8,
                                                       constants_w8):
        from ioabm.economy import ExternalSector, Firm, Ledger, SectorMarket

        ext = ExternalSector(export_demand=np.array([10.0]),
                             import_supply=np.zeros(1),
                             export_factor=np.ones(1),
                             import_factor=np.ones(1))
        firm = Firm(id=0, sector=0, input_stock=np.zeros(1),
                    input_stock_value=np.zeros(1), price=1.0,
                    output_stock=50.0)
        market = SectorMarket(0, [firm], 4.0)
        ledger = Ledger(external=ext)
        market.buy(ext, ledger, np.random.default_rng(0), "exports",
                   quantity=10.0)
        assert firm.wealth == pytest.approx(10.0)
        assert ledger.net_external == pytest.approx(10.0)

    def test_scripted_exchange_cycle_conserves(self):
        # Brute-force ledger replay: three agents trade in a cycle.
        from ioabm.economy import Ledger

        class Agent:
            def __init__(self, wealth):
                self.wealth = wealth

        a, b, c = Agent(10.0), Agent(0.0), Agent(5.0)
        ledger = Ledger()
        start = a.wealth + b.wealth + c.wealth
        ledger.transfer(a, b, 7.0, "x")
        ledger.transfer(b, c, 3.0, "y")
        ledger.transfer(c, a, 8.0, "z")
        assert a.wealth + b.wealth + c.wealth == pytest.approx(start)
        assert ledger.net_external == 0.0

    def test_residual_violation_raises(self, synthetic_w8, constants_w8):
        from ioabm.economy import Ledger

        sam, info, params = synthetic_w8
        state = steady_state_economy(sam, params, constants_w8, seed=5489)
        state.ledger = Ledger(external=state.external)
        state._wealth_snapshot = state.domestic_wealth()
        # out-of-ledger wealth mutation mid-month is a bookkeeping bug
        state.government.wealth += 1000.0
        with pytest.raises(AccountingError):
            close_accounts(state)


class TestIndices:
    def test_cpi_identity_at_base_prices(self, synthetic_w8, constants_w8):
        sam, info, params = synthetic_w8
        state = steady_state_economy(sam, params, constants_w8, seed=5489)
        assert compute_cpi(state, state.basket_weights) == pytest.approx(1.0)

    def test_cpi_single_sector_passthrough(self, synthetic_w8, constants_w8):
        sam, info, params = synthetic_w8
        state = steady_state_economy(sam, params, constants_w8, seed=5489)
        for f in state.firms.values():
            f.price = 1.05
        weights = np.zeros(state.n_sectors)
        weights[0] = 1.0
        assert compute_cpi(state, weights) == pytest.approx(1.05)

    def test_cpi_two_sector_symmetry(self, synthetic_w8, constants_w8):
        sam, info, params = synthetic_w8
        state = steady_state_economy(sam, params, constants_w8, seed=5489)
        prices = {0: 1.1, 1: 0.9}
        for f in state.firms.values():
            if f.sector in prices:
                f.price = prices[f.sector]
        weights = np.array([0.5, 0.5, 0.0, 0.0])
        assert compute_cpi(state, weights) == pytest.approx(1.0)

    def test_cpi_undefined_without_sellers(self, synthetic_w8, constants_w8):
        sam, info, params = synthetic_w8
        coeffs = technical_coefficients(sam)
        state = init_economy(sam, coeffs, params, constants_w8, seed=1)
        assert compute_cpi(state, state.basket_weights) is None

    def test_real_gdp_homogeneity(self):
        q = np.array([3.0, 4.0])
        p = np.array([1.3, 0.7])
        assert compute_real_gdp(2 * q, p) == pytest.approx(2 * compute_real_gdp(q, p))

    def test_real_gdp_base_period_identity(self, synthetic_w8, constants_w8):
        sam, info, params = synthetic_w8
        state = steady_state_economy(sam, params, constants_w8, seed=5489)
        r = step_month(state)
        assert r.real_gdp == pytest.approx(r.nominal_gdp, rel=1e-9)

    def test_real_gdp_dot_product(self):
        assert compute_real_gdp(np.array([2.0, 3.0]),
                                np.array([1.0, 2.0])) == 8.0

    def test_real_gdp_invariant_to_price_rescaling(self):
        # The Laspeyres index uses frozen base prices and quantities only.
        q = np.array([5.0, 7.0])
        base = np.array([1.0, 1.0])
        assert compute_real_gdp(q, base) == compute_real_gdp(q, base)
        # current prices do not enter the call signature at all
        assert compute_real_gdp(q * 1.0, base) == pytest.approx(12.0)


class TestDeterminism:
    def _run(self, seed, months=6):
        c = ModelConstants(workers_per_sector=64)
        sam, info, params = synthetic4(c)
        state = steady_state_economy(sam, params, c, seed=seed,
                                     firms_per_sector=4)
        out = []
        for _ in range(months):
            r = step_month(state)
            out.append((r.nominal_gdp, r.real_gdp, r.cpi,
                        tuple(r.sector_price), tuple(r.sector_output_q),
                        r.accounting_residual))
        return out

    def test_identical_runs_bit_identical(self):
        assert self._run(42) == self._run(42)

    def test_different_seeds_diverge(self):
        # multi-firm logit draws make firm-level paths seed-dependent
        a = self._run(1)
        b = self._run(2)
        assert a != b


class TestConservationLongRun:
    def test_every_month_conserves(self, calibrated_w8):
        for r in calibrated_w8.reports:
            assert abs(r.accounting_residual) <= 1e-9 * max(r.gross_flows, 1.0)
