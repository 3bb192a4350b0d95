import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ioabm.economy import (
    ExternalSector, Firm, Government, Ledger, ModelConstants, SectorMarket,
    Worker, adjust_price, collect_taxes, consume, external_step, fire_excess,
    government_purchases, invest, labor_match, logit_probabilities,
    pay_unemployment_benefits, produce, restock_inputs, smoothed,
)
from ioabm.io_table import CoefficientMatrix

C = ModelConstants()


def make_coeffs(n=3, a=None, capital=None, labor=None):
    return CoefficientMatrix(
        a=np.zeros((n, n)) if a is None else np.asarray(a, dtype=float),
        labor_coeff=np.full(n, 0.3) if labor is None else np.asarray(labor),
        capital_coeff=np.zeros(n) if capital is None else np.asarray(capital),
        tax_rate_production=np.zeros(n),
        tax_rate_products=np.zeros(n),
        import_coeff=np.zeros(n),
    )


def make_firm(sector=0, n=3, employees=0, wage=1.0, **kw):
    firm = Firm(id=0, sector=sector, input_stock=np.zeros(n),
                input_stock_value=np.zeros(n), **kw)
    for i in range(employees):
        firm.employees.append(Worker(id=i, sector=sector, employer=0,
                                     last_wage=wage))
    return firm


def make_market(prices_stocks, sector=0, gamma=4.0, import_capacity=0.0):
    sellers = []
    for i, (p, s) in enumerate(prices_stocks):
        f = Firm(id=100 + i, sector=sector, input_stock=np.zeros(1),
                 input_stock_value=np.zeros(1), price=p, output_stock=s)
        sellers.append(f)
    return SectorMarket(sector, sellers, gamma, import_capacity=import_capacity)


class TestProduce:
    def test_min_of_constraints(self):
        # labor cap 10, capital cap 8, input caps {12, 9} -> output 8
        a = np.zeros((3, 3))
        a[1][0] = 0.5   # stock 6 -> cap 12
        a[2][0] = 1.0   # stock 9 -> cap 9
        coeffs = make_coeffs(a=a, capital=[0.05, 0, 0])  # k_req = 1.0
        firm = make_firm(employees=10, fixed_capital=8.0)
        firm.input_stock = np.array([0.0, 6.0, 9.0])
        firm.input_stock_value = firm.input_stock.copy()
        out = produce(firm, coeffs, 1.0, productivity=1.0, constants=C)
        assert out == pytest.approx(8.0)
        assert firm.input_stock[1] == pytest.approx(6.0 - 0.5 * 8)
        assert firm.input_stock[2] == pytest.approx(9.0 - 8.0)
        assert firm.output_stock == pytest.approx(8.0)

    def test_full_lockdown_zero_output(self):
        coeffs = make_coeffs()
        firm = make_firm(employees=5)
        firm.input_stock = np.array([1.0, 1.0, 1.0])
        before = firm.input_stock.copy()
        out = produce(firm, coeffs, 0.0, productivity=1.0, constants=C)
        assert out == 0.0
        assert np.array_equal(firm.input_stock, before)

    def test_no_intermediate_inputs_required(self):
        coeffs = make_coeffs(capital=[0.05, 0, 0])
        firm = make_firm(employees=10, fixed_capital=7.0)
        out = produce(firm, coeffs, 1.0, productivity=1.0, constants=C)
        assert out == pytest.approx(min(10.0, 7.0))

    @settings(max_examples=60, deadline=None)
    @given(st.floats(0, 20), st.floats(0.01, 20), st.floats(0, 20),
           st.floats(0.1, 1.0))
    def test_never_exceeds_any_constraint(self, stock, fixcap, plan, cf):
        a = np.zeros((3, 3))
        a[1][0] = 0.7
        coeffs = make_coeffs(a=a, capital=[0.05, 0, 0])
        firm = make_firm(employees=3, fixed_capital=fixcap)
        firm.input_stock = np.array([0.0, stock, 0.0])
        firm.input_stock_value = firm.input_stock.copy()
        out = produce(firm, coeffs, cf, productivity=1.0, constants=C,
                      desired=plan)
        assert out <= 3 * cf + 1e-9
        assert out <= fixcap / 1.0 + 1e-9
        assert out <= stock / 0.7 + 1e-9
        assert out <= plan + 1e-9


class TestAdjustPrice:
    def test_sold_out_raises_price(self):
        firm = make_firm(price=100.0, avg_monthly_sales=10.0)
        adjust_price(firm, sold=12.0, available=12.0, constants=C)
        assert firm.price == pytest.approx(100.5)

    def test_excess_inventory_cuts_price(self):
        firm = make_firm(price=100.0, avg_monthly_sales=1.0)
        adjust_price(firm, sold=0.0, available=5.0, constants=C)
        assert firm.price == pytest.approx(99.5)

    def test_dead_band(self):
        # end stock exactly at the one-month target -> unchanged
        firm = make_firm(price=100.0, avg_monthly_sales=4.0)
        adjust_price(firm, sold=2.0, available=6.0, constants=C)
        assert firm.price == 100.0

    @settings(max_examples=80, deadline=None)
    @given(st.floats(0, 50), st.floats(0, 50), st.floats(0, 20),
           st.floats(0.01, 1000))
    def test_price_path_bounded(self, sold, extra, avg, price):
        # One multiplicative 0.5% step at most per month. The down step
        # x0.995 is marginally larger in log space than log(1.005), so the
        # bound is the larger of the two step magnitudes.
        available = sold + extra
        firm = make_firm(price=price, avg_monthly_sales=avg)
        adjust_price(firm, sold, available, C)
        bound = max(math.log(1 + C.price_step), -math.log(1 - C.price_step))
        assert abs(math.log(firm.price / price)) <= bound + 1e-12


class TestLaborMatch:
    def test_boundary_offer_equals_asking_hires(self):
        firm = make_firm(offer_wage=100.0)
        worker = Worker(id=1, sector=0, asking_wage=100.0, last_wage=90.0)
        rng = np.random.default_rng(0)
        hires = labor_match([worker], [(firm, 1)], rng, C)
        assert hires == [(firm, worker)]
        assert worker.employer == firm.id
        assert worker.last_wage == 100.0

    def test_rejection_adjusts_both_sides(self):
        firm = make_firm(offer_wage=99.0)
        worker = Worker(id=1, sector=0, asking_wage=100.0)
        rng = np.random.default_rng(0)
        hires = labor_match([worker], [(firm, 1)], rng, C)
        assert hires == []
        assert worker.asking_wage == pytest.approx(99.5)
        assert firm.offer_wage == pytest.approx(99.495)

    def test_empty_pool_raises_offer(self):
        firm = make_firm(offer_wage=100.0)
        rng = np.random.default_rng(0)
        hires = labor_match([], [(firm, 2)], rng, C)
        assert hires == []
        assert firm.offer_wage == pytest.approx(100.5)

    def test_wrong_sector_not_matched(self):
        firm = make_firm(sector=0, offer_wage=100.0)
        worker = Worker(id=1, sector=1, asking_wage=1.0)
        rng = np.random.default_rng(0)
        assert labor_match([worker], [(firm, 1)], rng, C) == []

    def test_fire_excess_releases_workers(self):
        firm = make_firm(employees=5)
        released = fire_excess(firm, 2, np.random.default_rng(0))
        assert len(released) == 3 and firm.n_employees() == 2
        assert all(w.employer is None for w in released)


class TestLogitSelection:
    def test_equal_prices_symmetric(self):
        probs = logit_probabilities([1.0, 1.0], gamma=4.0)
        assert probs == pytest.approx([0.5, 0.5])

    def test_hand_evaluated_logit(self):
        # prices 1.0 / 1.1, gamma 4, reference mean 1.05: independent
        # normal-form oracle exp(-gamma p / pbar), normalized.
        probs = logit_probabilities([1.0, 1.1], gamma=4.0)
        w1 = math.exp(-4.0 * 1.0 / 1.05)
        w2 = math.exp(-4.0 * 1.1 / 1.05)
        assert probs[0] == pytest.approx(w1 / (w1 + w2), rel=1e-12)
        assert probs[1] == pytest.approx(w2 / (w1 + w2), rel=1e-12)
        assert probs[0] == pytest.approx(0.594, abs=5e-4)
        assert probs[1] == pytest.approx(0.406, abs=5e-4)

    def test_gamma_zero_uniform(self):
        probs = logit_probabilities([1.0, 2.0, 5.0], gamma=0.0)
        assert probs == pytest.approx([1 / 3] * 3)

    @settings(max_examples=80, deadline=None)
    @given(st.lists(st.floats(0.1, 10.0), min_size=1, max_size=8))
    def test_probabilities_sum_to_one(self, prices):
        assert sum(logit_probabilities(prices, 4.0)) == pytest.approx(1.0)

    @settings(max_examples=80, deadline=None)
    @given(st.lists(st.floats(0.1, 10.0), min_size=2, max_size=8))
    def test_lower_price_never_less_likely(self, prices):
        probs = logit_probabilities(prices, 4.0)
        for i in range(len(prices)):
            for j in range(len(prices)):
                if prices[i] < prices[j]:
                    assert probs[i] >= probs[j]


class TestConsume:
    def test_budget_split_and_spend(self):
        market0 = make_market([(1.0, 100.0)], sector=0)
        market1 = make_market([(1.0, 100.0)], sector=1)
        ledger = Ledger()
        buyer = Firm(id=9, sector=0, input_stock=np.zeros(1),
                     input_stock_value=np.zeros(1), wealth=10.0)
        spent, unspent = consume(10.0, np.array([0.7, 0.3]),
                                 {0: market0, 1: market1}, 4.0,
                                 np.random.default_rng(0), ledger, buyer)
        assert spent == pytest.approx([7.0, 3.0])
        assert unspent == pytest.approx([0.0, 0.0])
        assert buyer.wealth == pytest.approx(0.0)

    def test_sector_without_sellers_leaves_budget_unspent(self):
        market0 = make_market([(1.0, 100.0)], sector=0)
        empty = SectorMarket(1, [], 4.0)
        ledger = Ledger()
        buyer = Firm(id=9, sector=0, input_stock=np.zeros(1),
                     input_stock_value=np.zeros(1), wealth=10.0)
        spent, unspent = consume(10.0, np.array([0.5, 0.5]),
                                 {0: market0, 1: empty}, 4.0,
                                 np.random.default_rng(0), ledger, buyer)
        assert spent[1] == 0.0
        assert unspent[1] == pytest.approx(5.0)
        assert empty.unmet_ratio() == pytest.approx(1.0)

    def test_stock_limit_spills_to_other_seller(self):
        market = make_market([(1.0, 2.0), (1.0, 100.0)], sector=0)
        ledger = Ledger()
        buyer = Firm(id=9, sector=0, input_stock=np.zeros(1),
                     input_stock_value=np.zeros(1), wealth=50.0)
        spent, unspent = consume(50.0, np.array([1.0]), {0: market}, 4.0,
                                 np.random.default_rng(0), ledger, buyer)
        assert spent[0] == pytest.approx(50.0)
        assert sum(f.sold_q for f in market.sellers) == pytest.approx(50.0)


class TestInvest:
    def test_at_target_no_orders(self):
        coeffs = make_coeffs(capital=[0.05, 0, 0])
        target = 1.0 / C.k_to_fixcap * 0.05 * C.capital_headroom * 10.0
        firm = make_firm(avg_monthly_sales=10.0, wealth=1e6)
        # above target even after depreciation -> nothing to order
        firm.fixed_capital = target / (1 - C.producer_capital_depreciation)
        market = make_market([(1.0, 1e6)])
        spent = invest(firm, coeffs, np.array([1.0, 0, 0]), {0: market}, C,
                       Ledger(), np.random.default_rng(0))
        assert spent == 0.0

    def test_proportional_split(self):
        # gap 100 across weights {0.6, 0.4} -> orders {60, 40}
        coeffs = make_coeffs(capital=[0.05, 0, 0])
        firm = make_firm(avg_monthly_sales=10.0, wealth=1e6)
        target = (0.05 / C.k_to_fixcap) * C.capital_headroom * 10.0
        firm.fixed_capital = (target - 100.0) / (1 - C.producer_capital_depreciation)
        m0 = make_market([(1.0, 1e6)], sector=0)
        m1 = make_market([(1.0, 1e6)], sector=1)
        ledger = Ledger()
        invest(firm, coeffs, np.array([0.6, 0.4, 0.0]), {0: m0, 1: m1}, C,
               ledger, np.random.default_rng(0))
        assert m0.sellers[0].sold_value == pytest.approx(60.0)
        assert m1.sellers[0].sold_value == pytest.approx(40.0)

    def test_steady_state_replacement_is_depreciation_share(self):
        coeffs = make_coeffs(capital=[0.05, 0, 0])
        firm = make_firm(avg_monthly_sales=10.0, wealth=1e6)
        target = (0.05 / C.k_to_fixcap) * C.capital_headroom * 10.0
        firm.fixed_capital = target
        market = make_market([(1.0, 1e6)])
        spent = invest(firm, coeffs, np.array([1.0, 0, 0]), {0: market}, C,
                       Ledger(), np.random.default_rng(0))
        assert spent == pytest.approx(C.producer_capital_depreciation * target)
        assert firm.fixed_capital == pytest.approx(target)  # fixed point


class TestGovernment:
    def test_tax_rate_arithmetic(self):
        gov = Government(tax_rate_production=np.array([0.05]),
                         tax_rate_products=np.array([0.0]))
        firm = make_firm(n=1, price=1.0)
        firm.produced_q = 1000.0
        total = collect_taxes(gov, {0: firm}, Ledger())
        assert total == pytest.approx(50.0)
        assert gov.wealth == pytest.approx(50.0)

    def test_benefit_is_80_percent_of_last_wage(self):
        gov = Government(tax_rate_production=np.zeros(1),
                         tax_rate_products=np.zeros(1))
        worker = Worker(id=0, sector=0, last_wage=100.0)
        paid = pay_unemployment_benefits(gov, [worker], C, Ledger())
        assert paid == pytest.approx(80.0)
        assert worker.wealth == pytest.approx(80.0)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(0.01, 500.0), min_size=1, max_size=10))
    def test_benefit_exactness_property(self, wages):
        gov = Government(tax_rate_production=np.zeros(1),
                         tax_rate_products=np.zeros(1))
        workers = [Worker(id=i, sector=0, last_wage=w)
                   for i, w in enumerate(wages)]
        pay_unemployment_benefits(gov, workers, C, Ledger())
        for w, wage in zip(workers, wages):
            assert w.wealth == pytest.approx(0.8 * wage, rel=1e-12)

    def test_baseline_month_purchases_are_column_over_12(self):
        gov = Government(tax_rate_production=np.zeros(1),
                         tax_rate_products=np.zeros(1),
                         consumption_factors=np.ones(1))
        market = make_market([(1.0, 100.0)])
        targets = np.array([60.0]) / 12.0
        spent = government_purchases(gov, targets, {0: market},
                                     np.random.default_rng(0), Ledger(),
                                     pegged_real=True, constants=C)
        assert spent[0] == pytest.approx(5.0)
        paid = pay_unemployment_benefits(gov, [], C, Ledger())
        assert paid == 0.0


class TestExternal:
    def _ext(self, demand, factor=1.0):
        return ExternalSector(
            export_demand=np.asarray(demand, dtype=float),
            import_supply=np.zeros(len(demand)),
            export_factor=np.full(len(demand), factor),
            import_factor=np.ones(len(demand)))

    def test_export_factor_zero_silences_exports(self):
        ext = self._ext([10.0], factor=0.0)
        market = make_market([(1.0, 100.0)])
        value, q = external_step(ext, {0: market}, np.random.default_rng(0),
                                 Ledger(external=ext))
        assert value[0] == 0.0 and q[0] == 0.0

    def test_monthly_demand_is_annual_over_12(self):
        # 120/year of exports -> external attempts 10/month at base prices
        ext = self._ext([120.0 / 12.0])
        market = make_market([(1.0, 100.0)])
        ledger = Ledger(external=ext)
        value, q = external_step(ext, {0: market}, np.random.default_rng(0),
                                 ledger)
        assert q[0] == pytest.approx(10.0)
        assert ledger.net_external == pytest.approx(10.0)

    def test_two_firm_market_cleared_brute_force(self):
        # Scripted: firms with stocks 3 and 100 at price 1, demand 10.
        # Whatever the draw order, total quantity must be 10 with zero
        # import fallback (domestic supply covers demand).
        ext = self._ext([10.0])
        market = make_market([(1.0, 3.0), (1.0, 100.0)], import_capacity=50.0)
        ledger = Ledger(external=ext)
        value, q = external_step(ext, {0: market}, np.random.default_rng(1),
                                 ledger)
        assert q[0] == pytest.approx(10.0)
        assert market.import_quantity == 0.0
        total_sold = sum(f.sold_q for f in market.sellers)
        assert total_sold == pytest.approx(10.0)

    def test_import_backstop_when_domestic_short(self):
        market = make_market([(1.0, 2.0)], import_capacity=5.0)
        ext = self._ext([1.0])
        ledger = Ledger(external=ext)
        buyer = Firm(id=9, sector=0, input_stock=np.zeros(1),
                     input_stock_value=np.zeros(1), wealth=100.0)
        spent, q = market.buy(buyer, ledger, np.random.default_rng(0),
                              "household", budget=6.0, external=ext)
        assert q == pytest.approx(6.0)
        assert market.import_quantity == pytest.approx(4.0)
        assert ledger.net_external == pytest.approx(-4.0)

    def test_import_capacity_caps_backstop(self):
        market = make_market([(1.0, 0.0)], import_capacity=2.0)
        ext = self._ext([0.0])
        ledger = Ledger(external=ext)
        buyer = Firm(id=9, sector=0, input_stock=np.zeros(1),
                     input_stock_value=np.zeros(1), wealth=100.0)
        spent, q = market.buy(buyer, ledger, np.random.default_rng(0),
                              "household", budget=6.0, external=ext)
        assert q == pytest.approx(2.0)
        assert market.unserved_value == pytest.approx(4.0)


class TestSmoothingAndRestock:
    def test_update_rule(self):
        assert smoothed(10.0, 20.0, 0.02) == pytest.approx(0.98 * 10 + 0.02 * 20)

    def test_geometric_convergence_bound(self):
        # |avg_t - s| = (1-alpha)^t |avg_0 - s|; within 1e-6 when the bound is
        avg, s = 0.0, 100.0
        months = math.ceil(math.log(1e-6 / abs(avg - s)) / math.log(0.98)) + 1
        for _ in range(months):
            avg = smoothed(avg, s, 0.02)
        assert abs(avg - s) < 1e-6

    def test_restock_orders_to_target(self):
        a = np.zeros((2, 2))
        a[0][1] = 0.4
        coeffs = make_coeffs(n=2, a=a)
        firm = make_firm(sector=1, n=2, avg_monthly_sales=10.0, wealth=1e6)
        market = make_market([(1.0, 1e6)], sector=0)
        spent = restock_inputs(firm, coeffs, {0: market}, C, Ledger(),
                               np.random.default_rng(0))
        target = C.stock_target_months * 10.0 * 0.4
        assert firm.input_stock[0] == pytest.approx(target)
        assert spent == pytest.approx(target)

    def test_restock_cash_limited(self):
        a = np.zeros((2, 2))
        a[0][1] = 0.4
        coeffs = make_coeffs(n=2, a=a)
        firm = make_firm(sector=1, n=2, avg_monthly_sales=10.0, wealth=3.0)
        market = make_market([(1.0, 1e6)], sector=0)
        spent = restock_inputs(firm, coeffs, {0: market}, C, Ledger(),
                               np.random.default_rng(0))
        assert spent <= 3.0 + 1e-9
        assert firm.wealth >= -1e-9
