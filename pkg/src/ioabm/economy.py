"""Agent population and market mechanics.

Workers, firms, government and the external sector, with the universal
behavioral rules: Leontief production, bilateral price/wage adjustment in
0.5% monthly steps, logit seller choice, stock-target input demand,
replacement investment, unemployment benefits at 80% of the last wage, and
firm entry on persistent unmet demand / exit on negative wealth.

All operations mutate a single economy's agents and must run single-threaded
within one simulation; money only ever moves through a :class:`Ledger` so the
monthly conservation check is an identity.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .io_table import CoefficientMatrix

_TINY = 1e-12


@dataclass(frozen=True)
class ModelConstants:
    """Universal behavioral constants, fixed for every country and year."""

    stock_target_months: float = 2.5      # input stock target, months of sales
    price_step: float = 0.005             # tatonnement step per month
    wage_step: float = 0.005
    logit_gamma: float = 4.0
    smoothing_alpha: float = 0.02         # sales expectation smoothing
    k_to_fixcap: float = 0.05             # operating surplus to capital stock
    benefit_ratio: float = 0.80
    kurzarbeit_wage_share: float = 0.90
    workers_per_sector: int = 32

    # Artifact-chosen tunables (documented in README).
    producer_capital_depreciation: float = 0.02   # per month
    household_durable_depreciation: float = 0.01  # reserved: wealth channel
    capital_headroom: float = 1.5    # capital target over average sales
    entry_unmet_threshold: float = 0.05
    entry_window_months: int = 3
    founder_seed_months: float = 3.0
    output_buffer_months: float = 0.5     # production plan restores to this
    price_cut_stock_months: float = 1.0   # inventory target in adjust_price
    household_wealth_propensity: float = 0.0
    factor_smoothing: float = 0.1
    consumption_chunks: int = 8
    transition_months: int = 36
    precalibration_months: int = 24

    def validate(self) -> None:
        for name in ("stock_target_months", "price_step", "wage_step",
                     "logit_gamma", "smoothing_alpha", "k_to_fixcap",
                     "benefit_ratio", "kurzarbeit_wage_share",
                     "workers_per_sector"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")


@dataclass
class Worker:
    id: int
    sector: int
    employer: int | None = None
    asking_wage: float = 1.0
    last_wage: float = 1.0          # contract wage while employed
    wealth: float = 0.0
    work_capacity_factor: float = 1.0
    month_income: float = 0.0       # wages + transfers received this month


@dataclass
class Firm:
    id: int
    sector: int
    employees: list[Worker] = field(default_factory=list)
    wealth: float = 0.0
    price: float = 1.0
    input_stock: np.ndarray = None          # quantity per supplying sector
    input_stock_value: np.ndarray = None    # acquisition cost of the stock
    output_stock: float = 0.0
    fixed_capital: float = 0.0
    avg_monthly_sales: float = 0.0
    offer_wage: float = 1.0
    founded_month: int = 0
    kurzarbeit_active: bool = False

    # per-month scratch, reset by begin_month
    produced_q: float = 0.0
    sold_q: float = 0.0
    sold_value: float = 0.0
    cogs_value: float = 0.0
    available_q: float = 0.0
    wage_bill: float = 0.0

    def begin_month(self) -> None:
        self.produced_q = 0.0
        self.sold_q = 0.0
        self.sold_value = 0.0
        self.cogs_value = 0.0
        self.available_q = 0.0
        self.wage_bill = 0.0
        self.kurzarbeit_active = False

    def n_employees(self) -> int:
        return len(self.employees)

    def current_wage_bill(self) -> float:
        return sum(w.last_wage for w in self.employees)

    def subsidy_eligible(self, cutoff_month: int) -> bool:
        return self.founded_month <= cutoff_month


@dataclass
class Government:
    wealth: float = 0.0
    tax_rate_production: np.ndarray = None
    tax_rate_products: np.ndarray = None
    consumption_factors: np.ndarray = None   # per-sector price-adjustment
    transfer_ledger: float = 0.0             # transfers paid this month


@dataclass
class ExternalSector:
    export_demand: np.ndarray = None      # quantity per month at base prices
    import_supply: np.ndarray = None      # baseline import quantity per month
    export_factor: np.ndarray = None
    import_factor: np.ndarray = None
    import_price: float = 1.0
    wealth: float = 0.0


class Ledger:
    """Records every money movement; wealth never changes outside transfer."""

    def __init__(self, external: ExternalSector | None = None):
        self.external = external
        self.net_external = 0.0   # money flowing into domestic agents
        self.totals: dict[str, float] = defaultdict(float)

    def transfer(self, payer, payee, amount: float, kind: str) -> None:
        if amount == 0.0:
            return
        payer.wealth -= amount
        payee.wealth += amount
        self.totals[kind] += amount
        if payer is self.external:
            self.net_external += amount
        if payee is self.external:
            self.net_external -= amount


def smoothed(avg: float, value: float, alpha: float) -> float:
    """Exponential smoothing update avg' = (1-alpha) avg + alpha value."""
    return (1.0 - alpha) * avg + alpha * value


def logit_probabilities(prices, gamma: float, reference: float | None = None) -> list[float]:
    """Seller selection probabilities, proportional to exp(-gamma p / pbar)."""
    prices = list(prices)
    if not prices:
        return []
    pbar = reference if reference is not None else sum(prices) / len(prices)
    if pbar <= 0:
        return [1.0 / len(prices)] * len(prices)
    weights = [math.exp(-gamma * p / pbar) for p in prices]
    total = sum(weights)
    return [w / total for w in weights]


class SectorMarket:
    """One month's goods market: posted-price domestic sellers plus an
    import backstop that serves demand left over when domestic stock runs out.
    """

    def __init__(self, sector: int, sellers: list[Firm], gamma: float,
                 import_capacity: float = 0.0, import_price: float = 1.0,
                 reference_price: float = 1.0):
        self.sector = sector
        self.sellers = sellers
        self.gamma = gamma
        self.import_capacity = import_capacity
        self.import_price = import_price
        self.reference_price = (
            sum(f.price for f in sellers) / len(sellers) if sellers
            else reference_price)
        self.attempted_value = 0.0
        self.unserved_value = 0.0
        self.import_value = 0.0
        self.import_quantity = 0.0
        self.sold_by_kind: dict[str, float] = defaultdict(float)

    def mean_price(self) -> float | None:
        if not self.sellers:
            return None
        return sum(f.price for f in self.sellers) / len(self.sellers)

    def _pick_seller(self, avail: list[Firm], rng) -> Firm:
        if len(avail) == 1:
            return avail[0]
        probs = logit_probabilities([f.price for f in avail], self.gamma)
        u = rng.random()
        acc = 0.0
        for f, p in zip(avail, probs):
            acc += p
            if u <= acc:
                return f
        return avail[-1]

    def buy(self, buyer, ledger: Ledger, rng, kind: str,
            budget: float | None = None, quantity: float | None = None,
            external: ExternalSector | None = None) -> tuple[float, float]:
        """Spend a budget or procure a quantity; returns (spent, bought).

        Domestic sellers are drawn by logit choice until stocks run out,
        then the import backstop fills the remainder up to its capacity.
        """
        assert (budget is None) != (quantity is None)
        want_value = budget if budget is not None else quantity * self.reference_price
        self.attempted_value += max(0.0, want_value)

        spent = 0.0
        bought = 0.0
        budget_left = budget
        qty_left = quantity
        while True:
            avail = [f for f in self.sellers if f.output_stock > _TINY]
            if not avail:
                break
            if budget_left is not None and budget_left <= _TINY:
                break
            if qty_left is not None and qty_left <= _TINY:
                break
            seller = self._pick_seller(avail, rng)
            if budget_left is not None:
                q = min(seller.output_stock, budget_left / seller.price)
            else:
                q = min(seller.output_stock, qty_left)
            if q <= _TINY:
                seller.output_stock = 0.0
                continue
            value = q * seller.price
            seller.output_stock -= q
            seller.sold_q += q
            seller.sold_value += value
            ledger.transfer(buyer, seller, value, kind)
            self.sold_by_kind[kind] += value
            spent += value
            bought += q
            if budget_left is not None:
                budget_left -= value
            else:
                qty_left -= q

        # Import backstop: only once domestic supply is exhausted.
        if external is not None and self.import_capacity > _TINY:
            if budget_left is not None and budget_left > _TINY:
                q = min(self.import_capacity, budget_left / self.import_price)
            elif qty_left is not None and qty_left > _TINY:
                q = min(self.import_capacity, qty_left)
            else:
                q = 0.0
            if q > _TINY:
                value = q * self.import_price
                ledger.transfer(buyer, external, value, "import:" + kind)
                self.import_capacity -= q
                self.import_value += value
                self.import_quantity += q
                spent += value
                bought += q
                if budget_left is not None:
                    budget_left -= value
                else:
                    qty_left -= q

        if budget_left is not None:
            self.unserved_value += max(0.0, budget_left)
        else:
            self.unserved_value += max(0.0, qty_left) * self.reference_price
        return spent, bought

    def unmet_ratio(self) -> float:
        """Demand share not served by domestic sellers (entry signal)."""
        if self.attempted_value <= _TINY:
            return 0.0
        return (self.unserved_value + self.import_value) / self.attempted_value


def ceil_tolerant(value: float, tol: float = 1e-9) -> int:
    return max(0, int(math.ceil(value - tol)))


def production_plan(firm: Firm, constants: ModelConstants) -> float:
    """Desired output: expected sales plus restoration of the output buffer."""
    buffer_target = constants.output_buffer_months * firm.avg_monthly_sales
    return max(0.0, firm.avg_monthly_sales + buffer_target - firm.output_stock)


def produce(firm: Firm, coeffs: CoefficientMatrix, capacity_factor: float,
            productivity: float, constants: ModelConstants,
            desired: float | None = None) -> float:
    """Leontief production: the binding minimum of labor, capital and input
    stocks, optionally capped by the firm's plan. Consumed inputs are
    deducted at acquisition cost.
    """
    j = firm.sector
    labor_cap = firm.n_employees() * productivity * capacity_factor
    output = labor_cap
    if coeffs.capital_coeff[j] > 0:
        k_req = coeffs.capital_coeff[j] / constants.k_to_fixcap
        output = min(output, firm.fixed_capital / k_req)
    col = coeffs.a[:, j]
    for i in np.nonzero(col > 0)[0]:
        output = min(output, firm.input_stock[i] / col[i])
    if desired is not None:
        output = min(output, desired)
    output = max(0.0, output)

    if output > 0:
        used = col * output
        use_idx = np.nonzero(used > 0)[0]
        for i in use_idx:
            stock = firm.input_stock[i]
            unit_cost = firm.input_stock_value[i] / stock if stock > _TINY else 0.0
            firm.cogs_value += used[i] * unit_cost
            firm.input_stock_value[i] = max(0.0, firm.input_stock_value[i] - used[i] * unit_cost)
        firm.input_stock[use_idx] -= used[use_idx]
        np.clip(firm.input_stock, 0.0, None, out=firm.input_stock)
        firm.output_stock += output
        firm.produced_q += output
    return output


def adjust_price(firm: Firm, sold: float, available: float,
                 constants: ModelConstants) -> float:
    """One tatonnement step: up when sold out, down when inventory exceeds
    the stock target, otherwise unchanged."""
    if available > _TINY and sold >= available - max(_TINY, 1e-9 * available):
        firm.price *= 1.0 + constants.price_step
    else:
        target = constants.price_cut_stock_months * firm.avg_monthly_sales
        if available - sold > target + _TINY:
            firm.price *= 1.0 - constants.price_step
    return firm.price


def labor_match(unemployed: list[Worker], hiring: list[tuple[Firm, int]],
                rng, constants: ModelConstants) -> list[tuple[Firm, Worker]]:
    """One monthly matching round.

    Each vacancy meets a random unemployed worker of the firm's sector; the
    hire happens iff offer >= asking. Afterwards still-unemployed workers
    shade their asking wage down and firms with unfilled vacancies raise
    their offer, both by one step.
    """
    pool: dict[int, list[Worker]] = defaultdict(list)
    for w in unemployed:
        if w.employer is None:
            pool[w.sector].append(w)

    hires: list[tuple[Firm, Worker]] = []
    unfilled: set[int] = set()
    for firm, vacancies in hiring:
        sector_pool = pool[firm.sector]
        filled = 0
        for _ in range(vacancies):
            if not sector_pool:
                break
            idx = int(rng.integers(len(sector_pool))) if len(sector_pool) > 1 else 0
            worker = sector_pool[idx]
            if firm.offer_wage >= worker.asking_wage - _TINY:
                sector_pool.pop(idx)
                worker.employer = firm.id
                worker.last_wage = firm.offer_wage
                worker.asking_wage = firm.offer_wage
                firm.employees.append(worker)
                hires.append((firm, worker))
                filled += 1
        if filled < vacancies:
            unfilled.add(firm.id)

    for w in unemployed:
        if w.employer is None:
            w.asking_wage *= 1.0 - constants.wage_step
    for firm, vacancies in hiring:
        if firm.id in unfilled:
            firm.offer_wage *= 1.0 + constants.wage_step
    return hires


def fire_excess(firm: Firm, keep: int, rng) -> list[Worker]:
    """Release randomly chosen employees beyond ``keep``."""
    released: list[Worker] = []
    while firm.n_employees() > keep:
        idx = int(rng.integers(firm.n_employees())) if firm.n_employees() > 1 else 0
        worker = firm.employees.pop(idx)
        worker.employer = None
        released.append(worker)
    return released


def index_asking_wages(workers: list[Worker], cpi_ratio: float) -> None:
    """CPI indexation of asking wages (employed wages are contracts)."""
    if cpi_ratio <= 0 or cpi_ratio == 1.0:
        return
    for w in workers:
        if w.employer is None:
            w.asking_wage *= cpi_ratio


def consume(budget: float, basket_weights: np.ndarray,
            markets: dict[int, SectorMarket], gamma: float, rng,
            ledger: Ledger, buyer, external: ExternalSector | None = None,
            chunks: int = 8, kind: str = "household",
            ) -> tuple[np.ndarray, np.ndarray]:
    """Split a budget across sectors by basket weights and spend it through
    logit seller choice. Returns (spent, unspent) per sector; a sector with
    no serviceable supply leaves its share unspent.
    """
    n = len(basket_weights)
    spent = np.zeros(n)
    unspent = np.zeros(n)
    if budget <= 0:
        return spent, unspent
    for i in range(n):
        share = budget * basket_weights[i]
        if share <= _TINY:
            continue
        market = markets.get(i)
        if market is None:
            unspent[i] = share
            continue
        chunk = share / chunks
        got = 0.0
        for _ in range(chunks):
            s, _q = market.buy(buyer, ledger, rng, kind, budget=chunk,
                               external=external)
            got += s
        spent[i] = got
        unspent[i] = share - got
    return spent, unspent


def invest(firm: Firm, coeffs: CoefficientMatrix, gfcf_weights: np.ndarray,
           markets: dict[int, SectorMarket], constants: ModelConstants,
           ledger: Ledger, rng, external: ExternalSector | None = None) -> float:
    """Depreciate fixed capital and order replacement toward the target
    implied by the sector's operating-surplus coefficient; orders are
    distributed over supplying sectors by the investment-composition weights.
    Returns money spent."""
    j = firm.sector
    firm.fixed_capital *= 1.0 - constants.producer_capital_depreciation
    if coeffs.capital_coeff[j] <= 0:
        return 0.0
    target = (coeffs.capital_coeff[j] / constants.k_to_fixcap) \
        * constants.capital_headroom * firm.avg_monthly_sales
    gap = target - firm.fixed_capital
    if gap <= _TINY:
        return 0.0
    budget = min(gap, max(0.0, firm.wealth - firm.current_wage_bill()))
    if budget <= _TINY:
        return 0.0
    spent_total = 0.0
    for i in np.nonzero(gfcf_weights > 0)[0]:
        market = markets.get(int(i))
        if market is None:
            continue
        spent, _q = market.buy(firm, ledger, rng, "gfcf",
                               budget=budget * gfcf_weights[i], external=external)
        spent_total += spent
    firm.fixed_capital += spent_total
    return spent_total


def restock_inputs(firm: Firm, coeffs: CoefficientMatrix,
                   markets: dict[int, SectorMarket], constants: ModelConstants,
                   ledger: Ledger, rng,
                   external: ExternalSector | None = None) -> float:
    """Order inputs up to stock_target_months of expected use per input."""
    j = firm.sector
    col = coeffs.a[:, j]
    idx = np.nonzero(col > 0)[0]
    if len(idx) == 0:
        return 0.0
    budget_left = max(0.0, firm.wealth)
    spent_total = 0.0
    for i in idx:
        target_q = constants.stock_target_months * firm.avg_monthly_sales * col[i]
        order_q = target_q - firm.input_stock[i]
        if order_q <= _TINY or budget_left <= _TINY:
            continue
        market = markets.get(int(i))
        if market is None:
            continue
        ref = market.mean_price() or market.reference_price
        max_q = budget_left / max(ref, _TINY)
        spent, q = market.buy(firm, ledger, rng, f"intermediate:{j}",
                              quantity=min(order_q, max_q), external=external)
        firm.input_stock[i] += q
        firm.input_stock_value[i] += spent
        budget_left -= spent
        spent_total += spent
    return spent_total


def pay_wages(firms: dict[int, Firm], ledger: Ledger) -> float:
    total = 0.0
    for firm in firms.values():
        for worker in firm.employees:
            ledger.transfer(firm, worker, worker.last_wage, "wages")
            worker.month_income += worker.last_wage
            firm.wage_bill += worker.last_wage
            total += worker.last_wage
    return total


def pay_unemployment_benefits(gov: Government, workers: list[Worker],
                              constants: ModelConstants, ledger: Ledger) -> float:
    """Every unemployed worker receives exactly benefit_ratio x last wage."""
    total = 0.0
    for w in workers:
        if w.employer is None:
            benefit = constants.benefit_ratio * w.last_wage
            ledger.transfer(gov, w, benefit, "benefits")
            w.month_income += benefit
            total += benefit
    gov.transfer_ledger += total
    return total


def collect_taxes(gov: Government, firms: dict[int, Firm], ledger: Ledger) -> float:
    """Ad-valorem production and product taxes, assessed on the month's
    production at the firm's current price."""
    total = 0.0
    for firm in firms.values():
        rate = (gov.tax_rate_production[firm.sector]
                + gov.tax_rate_products[firm.sector])
        tax = rate * firm.produced_q * firm.price
        if tax != 0.0:
            ledger.transfer(firm, gov, tax, "taxes")
            total += tax
    return total


def government_purchases(gov: Government, gov_targets_monthly: np.ndarray,
                         markets: dict[int, SectorMarket], rng, ledger: Ledger,
                         pegged_real: bool, constants: ModelConstants,
                         external: ExternalSector | None = None) -> np.ndarray:
    """Buy the government column. While calibrating, purchases are pegged to
    the real monthly targets and the per-sector consumption factors track the
    prices paid; in the free market the factors are frozen and nominal
    spending is target x factor."""
    n = len(gov_targets_monthly)
    spent = np.zeros(n)
    for i in range(n):
        target = gov_targets_monthly[i]
        if target <= _TINY:
            continue
        market = markets.get(i)
        if market is None:
            continue
        if pegged_real:
            s, _q = market.buy(gov, ledger, rng, "government",
                               quantity=target, external=external)
            price = market.mean_price()
            if price is not None:
                gov.consumption_factors[i] = smoothed(
                    gov.consumption_factors[i], price, constants.factor_smoothing)
        else:
            budget = target * gov.consumption_factors[i]
            s, _q = market.buy(gov, ledger, rng, "government",
                               budget=budget, external=external)
        spent[i] = s
    return spent


def government_step(gov: Government, state, markets: dict[int, SectorMarket],
                    constants: ModelConstants, ledger: Ledger, rng,
                    pegged_real: bool = False,
                    external: ExternalSector | None = None) -> dict[str, float]:
    """Full government month: transfers, tax collection, consumption.

    The engine invokes the pieces at their sub-step positions; this bundle
    exists for direct use and testing.
    """
    benefits = pay_unemployment_benefits(gov, state.workers, constants, ledger)
    taxes = collect_taxes(gov, state.firms, ledger)
    purchases = government_purchases(
        gov, state.government_targets_monthly, markets, rng, ledger,
        pegged_real, constants, external=external)
    return {"benefits": benefits, "taxes": taxes,
            "purchases": float(purchases.sum())}


def external_step(ext: ExternalSector, markets: dict[int, SectorMarket],
                  rng, ledger: Ledger) -> tuple[np.ndarray, np.ndarray]:
    """Rest-of-world purchases: fixed real export demand per sector, scaled
    by the export factor, bought at posted prices and limited by stock.
    Import sales were recorded by the backstop as they happened."""
    n = len(ext.export_demand)
    export_value = np.zeros(n)
    export_q = np.zeros(n)
    for i in range(n):
        demand = ext.export_demand[i] * ext.export_factor[i]
        if demand <= _TINY:
            continue
        market = markets.get(i)
        if market is None:
            continue
        spent, q = market.buy(ext, ledger, rng, "exports", quantity=demand,
                              external=None)
        export_value[i] = spent
        export_q[i] = q
    return export_value, export_q


def spawn_firms(state, unmet_window_ratio: np.ndarray, rng) -> list[Firm]:
    """Variation: one entrant per sector-month where the smoothed unmet
    demand ratio exceeds the threshold and an unemployed founder exists."""
    constants = state.constants
    new_firms: list[Firm] = []
    for i in range(state.n_sectors):
        if i in state.sam.inactive_sectors:
            continue
        if unmet_window_ratio[i] <= constants.entry_unmet_threshold:
            continue
        candidates = [w for w in state.workers
                      if w.sector == i and w.employer is None]
        if not candidates:
            continue
        founder = candidates[int(rng.integers(len(candidates)))] \
            if len(candidates) > 1 else candidates[0]
        firm = state.new_firm(i)
        firm.price = state.sector_price[i]
        firm.offer_wage = founder.asking_wage
        firm.avg_monthly_sales = state.productivity[i]
        founder.employer = firm.id
        founder.last_wage = founder.asking_wage
        firm.employees.append(founder)

        peers = [f for f in state.firms.values()
                 if f.sector == i and f.id != firm.id and f.n_employees() > 0]
        if peers:
            seed = constants.founder_seed_months * (
                sum(f.current_wage_bill() for f in peers) / len(peers))
        else:
            seed = constants.founder_seed_months * 3.0 * founder.asking_wage
        state.ledger.transfer(state.government, firm, seed, "founder_credit")
        new_firms.append(firm)
    return new_firms


def cull_firms(state) -> list[Firm]:
    """Retention filter: firms with wealth < 0 at close are removed, their
    employees released with last wage preserved, stocks written off, and the
    residual balance absorbed by the government."""
    removed = [f for f in state.firms.values() if f.wealth < 0.0]
    for firm in removed:
        for worker in list(firm.employees):
            worker.employer = None
        firm.employees.clear()
        state.ledger.transfer(firm, state.government, firm.wealth, "bankruptcy")
        del state.firms[firm.id]
    return removed
