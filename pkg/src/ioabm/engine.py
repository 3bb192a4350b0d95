"""Monthly tick orchestration and aggregate accounting.

``step_month`` executes the frozen sub-step order:

    (1) apply shock factors, (2) labor market, (3) production,
    (4) inter-firm input market, (5) household income and consumption,
    (6) government step, (7) external step, (8) investment,
    (9) price/wage tatonnement, (10) accounting close,
    (11) exit then entry, (12) record report.

The order is a contract: income earned in a month is spent in the same
month, which keeps a balanced table's flows an exact stationary point.
Money conservation is enforced every month: the sum of domestic wealth
changes must equal the net external flow to within float accumulation error.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import economy, shocks
from .economy import (
    ExternalSector, Firm, Government, Ledger, ModelConstants, SectorMarket,
    Worker, ceil_tolerant, smoothed,
)
from .io_table import CoefficientMatrix, CountryParams, SocialAccountingMatrix

_TINY = 1e-12
_FACTOR_CAP = 1e6


class Phase(enum.Enum):
    PRE_CALIBRATION = "PreCalibration"
    ASSISTED = "Assisted"
    TRANSITION = "Transition"
    FREE_MARKET = "FreeMarket"


PHASE_ORDER = [Phase.PRE_CALIBRATION, Phase.ASSISTED, Phase.TRANSITION,
               Phase.FREE_MARKET]


class AccountingError(RuntimeError):
    """Monthly double-entry residual above tolerance: a bookkeeping bug."""


class _Pool:
    """Internal zero-balance agent that funds pooled household spending."""

    def __init__(self):
        self.wealth = 0.0


@dataclass
class MonthReport:
    month: int
    phase: str
    nominal_gdp: float
    real_gdp: float
    cpi: float
    unemployment_rate: float
    employed: int
    firm_count: int
    firm_births: int
    firm_deaths: int
    micro_firm_share: float
    subsidy_rate: float
    hh_factor: float
    gov_factor: float
    unmet_demand_ratio: float
    net_external_flow: float
    accounting_residual: float
    gross_flows: float
    collapsed: bool
    sector_output_q: np.ndarray
    sector_price: np.ndarray
    sector_unmet_ratio: np.ndarray
    flows_intermediate: np.ndarray     # S x S money, supplier -> using sector
    flows_household: np.ndarray
    flows_government: np.ndarray
    flows_gfcf: np.ndarray
    flows_exports: np.ndarray
    flows_imports: np.ndarray
    wages_paid: float
    taxes_paid: float
    benefits_paid: float
    kurzarbeit_paid: float


@dataclass
class EconomyState:
    """Full agent population plus price/flow state at one month.

    Owns its RNG: runs are deterministic given the seed, and distinct states
    may run concurrently without coordination.
    """

    sam: SocialAccountingMatrix
    coeffs: CoefficientMatrix
    params: CountryParams
    constants: ModelConstants
    rng: np.random.Generator
    month: int = 0
    phase: Phase = Phase.PRE_CALIBRATION
    month_in_phase: int = 0
    subsidy_rate: float = 1.0
    workers: list[Worker] = field(default_factory=list)
    firms: dict[int, Firm] = field(default_factory=dict)
    government: Government = None
    external: ExternalSector = None
    timeline: "shocks.PandemicTimeline | None" = None
    fm_entry_month: int | None = None

    # structural per-sector arrays
    productivity: np.ndarray = None
    wage0: np.ndarray = None
    output_target_monthly: np.ndarray = None
    household_targets_monthly: np.ndarray = None
    government_targets_monthly: np.ndarray = None
    basket_weights: np.ndarray = None
    gfcf_weights: np.ndarray = None
    hh_factors: np.ndarray = None
    sector_price: np.ndarray = None
    sector_capacity: np.ndarray = None
    base_prices: np.ndarray = None

    cpi: float = 1.0
    cpi_prev: float = 1.0
    collapsed: bool = False
    next_firm_id: int = 0
    unmet_history: list[np.ndarray] = field(default_factory=list)
    ledger: Ledger = None
    pool: _Pool = field(default_factory=_Pool)
    _wealth_snapshot: float = 0.0

    @property
    def n_sectors(self) -> int:
        return self.sam.n_sectors

    def new_firm(self, sector: int) -> Firm:
        n = self.n_sectors
        firm = Firm(
            id=self.next_firm_id, sector=sector,
            input_stock=np.zeros(n), input_stock_value=np.zeros(n),
            founded_month=self.month,
        )
        self.next_firm_id += 1
        self.firms[firm.id] = firm
        return firm

    def unemployed(self) -> list[Worker]:
        return [w for w in self.workers if w.employer is None]

    def domestic_wealth(self) -> float:
        return (sum(w.wealth for w in self.workers)
                + sum(f.wealth for f in self.firms.values())
                + self.government.wealth + self.pool.wealth)

    def set_phase(self, phase: Phase) -> None:
        if PHASE_ORDER.index(phase) < PHASE_ORDER.index(self.phase):
            raise ValueError(f"phase may only move forward: {self.phase} -> {phase}")
        if phase is self.phase:
            return
        self.phase = phase
        self.month_in_phase = 0
        if phase is Phase.FREE_MARKET:
            self.fm_entry_month = self.month
            self.subsidy_rate = 0.0
            self.base_prices = self.sector_price.copy()


def init_economy(sam: SocialAccountingMatrix, coeffs: CoefficientMatrix,
                 params: CountryParams, constants: ModelConstants,
                 seed: int) -> EconomyState:
    """Create an empty economy: workers, government and external sector from
    the SAM; producers are seeded later, sector by sector, during
    pre-calibration."""
    n = sam.n_sectors
    active = sam.active_mask()
    x_m = sam.gross_output / 12.0
    w = constants.workers_per_sector
    n_target = max(1, round(w * (1.0 - params.nairu)))

    wage0 = np.ones(n)
    productivity = np.ones(n)
    for i in range(n):
        if active[i]:
            wage0[i] = (sam.compensation[i] / 12.0) / n_target
            productivity[i] = x_m[i] / n_target
            if wage0[i] <= 0:
                wage0[i] = max(1e-9, 1e-6 * x_m[i] / n_target)

    workers: list[Worker] = []
    wid = 0
    for i in range(n):
        if not active[i]:
            continue
        for _ in range(w):
            workers.append(Worker(id=wid, sector=i, asking_wage=wage0[i],
                                  last_wage=wage0[i]))
            wid += 1

    hh_targets = sam.household_consumption / 12.0
    hh_targets = np.where(active, hh_targets, 0.0)
    basket = hh_targets.sum()
    basket_weights = hh_targets / basket if basket > 0 else np.zeros(n)

    gfcf = np.where(active, sam.gfcf, 0.0)
    gfcf_weights = gfcf / gfcf.sum() if gfcf.sum() > 0 else np.zeros(n)

    government = Government(
        wealth=0.0,
        tax_rate_production=coeffs.tax_rate_production.copy(),
        tax_rate_products=coeffs.tax_rate_products.copy(),
        consumption_factors=np.ones(n),
    )
    external = ExternalSector(
        export_demand=np.where(active, sam.exports, 0.0) / 12.0,
        import_supply=sam.imports / 12.0,
        export_factor=np.ones(n),
        import_factor=np.ones(n),
    )

    state = EconomyState(
        sam=sam, coeffs=coeffs, params=params, constants=constants,
        rng=np.random.default_rng(seed),
        workers=workers, government=government, external=external,
        productivity=productivity, wage0=wage0,
        output_target_monthly=x_m,
        household_targets_monthly=hh_targets,
        government_targets_monthly=np.where(active, sam.government_consumption, 0.0) / 12.0,
        basket_weights=basket_weights, gfcf_weights=gfcf_weights,
        hh_factors=np.ones(n),
        sector_price=np.ones(n),
        sector_capacity=np.ones(n),
        base_prices=np.ones(n),
        cpi=params.initial_cpi, cpi_prev=params.initial_cpi,
    )
    return state


def create_initial_firms(state: EconomyState, sector: int,
                         count: int | None = None) -> list[Firm]:
    """Seed a sector's producers at the SAM-implied operating point.

    Initial producers receive endowed stocks and working capital (assisted
    start); they begin with no employees and staff up through the labor
    market, so the micro-firm share starts at 100%.
    """
    c = state.constants
    if count is None:
        count = max(1, round(c.workers_per_sector / 16))
    x_share = state.output_target_monthly[sector] / count
    col = state.coeffs.a[:, sector]
    created = []
    for _ in range(count):
        firm = state.new_firm(sector)
        firm.price = 1.0
        firm.offer_wage = state.wage0[sector]
        firm.avg_monthly_sales = x_share
        firm.input_stock = c.stock_target_months * x_share * col
        firm.input_stock_value = firm.input_stock.copy()
        firm.output_stock = c.output_buffer_months * x_share
        if state.coeffs.capital_coeff[sector] > 0:
            firm.fixed_capital = (state.coeffs.capital_coeff[sector]
                                  / c.k_to_fixcap) * c.capital_headroom * x_share
        firm.wealth = 3.0 * x_share * (col.sum() + state.coeffs.labor_coeff[sector])
        created.append(firm)
    return created


def initialization_schedule(n_sectors: int, precal_months: int,
                            coeffs: CoefficientMatrix,
                            active: np.ndarray) -> dict[int, list[int]]:
    """Sectors to initialize per pre-calibration month, suppliers first
    (ascending total input intensity approximates dependency order)."""
    order = sorted((i for i in range(n_sectors) if active[i]),
                   key=lambda i: (float(coeffs.a[:, i].sum()), i))
    span = min(precal_months, len(order)) or 1
    schedule: dict[int, list[int]] = {}
    for k, sec in enumerate(order):
        m = int(k * span / len(order))
        schedule.setdefault(m, []).append(sec)
    return schedule


def compute_cpi(state: EconomyState, basket_weights: np.ndarray) -> float | None:
    """Consumer price index: basket-weighted mean sector price relative to
    the base gauge, scaled by the country's CPI anchor. Sectors without
    sellers are skipped with renormalized weights; None if nothing trades."""
    total_w = 0.0
    acc = 0.0
    for i in range(state.n_sectors):
        if basket_weights[i] <= 0:
            continue
        sellers = [f for f in state.firms.values() if f.sector == i]
        if not sellers:
            continue
        mean_price = sum(f.price for f in sellers) / len(sellers)
        acc += basket_weights[i] * mean_price
        total_w += basket_weights[i]
    if total_w <= 0:
        return None
    return state.params.initial_cpi * (acc / total_w)


def compute_real_gdp(month_quantities: np.ndarray, base_prices: np.ndarray) -> float:
    """Laspeyres valuation: quantities at frozen base prices."""
    return float(np.dot(month_quantities, base_prices))


def close_accounts(state: EconomyState) -> float:
    """Double-entry close: residual between domestic wealth change and the
    net external flow. Raises on violation: that is a bookkeeping bug, never
    a model outcome."""
    residual = (state.domestic_wealth() - state._wealth_snapshot) \
        - state.ledger.net_external
    gross = sum(abs(v) for v in state.ledger.totals.values())
    tol = 1e-9 * max(gross, 1.0)
    if math.isfinite(residual) and abs(residual) > tol:
        raise AccountingError(
            f"month {state.month}: accounting residual {residual:.3e} "
            f"exceeds tolerance {tol:.3e}")
    return residual


def _mean_sector_prices(state: EconomyState) -> None:
    for i in range(state.n_sectors):
        sellers = [f for f in state.firms.values() if f.sector == i]
        if sellers:
            state.sector_price[i] = sum(f.price for f in sellers) / len(sellers)


def step_month(state: EconomyState,
               coeffs: CoefficientMatrix | None = None,
               sam: SocialAccountingMatrix | None = None,
               constants: ModelConstants | None = None) -> MonthReport:
    """Execute one month in the fixed sub-step order and advance the clock."""
    coeffs = coeffs or state.coeffs
    sam = sam or state.sam
    c = constants or state.constants
    rng = state.rng
    n = state.n_sectors
    gov = state.government
    ext = state.external

    state.ledger = Ledger(external=ext)
    ledger = state.ledger
    state._wealth_snapshot = state.domestic_wealth()
    gov.transfer_ledger = 0.0
    for firm in state.firms.values():
        firm.begin_month()

    # (1) shocks
    active_shock = None
    if state.timeline is not None and state.phase is Phase.FREE_MARKET:
        fm_month = state.month - state.fm_entry_month
        active_shock = shocks.shock_for_month(state.timeline, fm_month)
        shocks.apply_month_shock(state, active_shock)
    else:
        state.sector_capacity = np.ones(n)
        ext.export_factor = np.ones(n)
        ext.import_factor = np.ones(n)
        for w in state.workers:
            w.work_capacity_factor = 1.0
    if active_shock is not None:
        shocks.draw_kurzarbeit_participation(state, active_shock)

    # (2) labor market
    plans: dict[int, float] = {}
    hiring: list[tuple[Firm, int]] = []
    for firm in state.firms.values():
        plan = economy.production_plan(firm, c)
        plans[firm.id] = plan
        n_desired = ceil_tolerant(plan / state.productivity[firm.sector])
        if firm.kurzarbeit_active:
            continue  # short-time work: retain staff, no hiring round
        if n_desired < firm.n_employees():
            economy.fire_excess(firm, n_desired, rng)
        elif n_desired > firm.n_employees():
            ramp = max(1, firm.n_employees())
            vacancies = min(n_desired - firm.n_employees(), ramp)
            hiring.append((firm, vacancies))
    economy.labor_match(state.unemployed(), hiring, rng, c)

    # (3) production
    used_q = np.zeros(n)
    production_value = 0.0
    for firm in state.firms.values():
        before = firm.input_stock.copy()
        economy.produce(firm, coeffs, state.sector_capacity[firm.sector],
                        state.productivity[firm.sector], c,
                        desired=plans[firm.id])
        used_q += before - firm.input_stock
        firm.available_q = firm.output_stock
        production_value += firm.produced_q * firm.price

    # (4) inter-firm input market
    markets = _build_markets(state, c)
    for firm in state.firms.values():
        economy.restock_inputs(firm, coeffs, markets, c, ledger, rng,
                               external=ext)

    # (5) household income and consumption
    for w in state.workers:
        w.month_income = 0.0
    wages = economy.pay_wages(state.firms, ledger)
    benefits = economy.pay_unemployment_benefits(gov, state.workers, c, ledger)
    _household_consumption(state, markets, ledger)

    # (6) government step
    taxes = economy.collect_taxes(gov, state.firms, ledger)
    pegged = state.phase is not Phase.FREE_MARKET
    economy.government_purchases(gov, state.government_targets_monthly,
                                 markets, rng, ledger, pegged, c, external=ext)
    kurzarbeit_paid = 0.0
    if active_shock is not None:
        kurzarbeit_paid = shocks.pay_kurzarbeit(state, active_shock, ledger)

    # (7) external step
    economy.external_step(ext, markets, rng, ledger)

    # (8) investment
    for firm in state.firms.values():
        economy.invest(firm, coeffs, state.gfcf_weights, markets, c, ledger,
                       rng, external=ext)

    # (9) price/wage tatonnement, expectations, CPI indexation
    for firm in state.firms.values():
        economy.adjust_price(firm, firm.sold_q, firm.available_q, c)
        firm.avg_monthly_sales = smoothed(firm.avg_monthly_sales, firm.sold_q,
                                          c.smoothing_alpha)
    _mean_sector_prices(state)
    cpi = compute_cpi(state, state.basket_weights)
    cpi_flagged = cpi is None
    if cpi is None:
        cpi = state.cpi
    state.cpi_prev = state.cpi
    state.cpi = cpi
    if state.cpi_prev > 0:
        economy.index_asking_wages(state.workers, state.cpi / state.cpi_prev)

    # (10) accounting close
    residual = close_accounts(state)
    employed_at_close = sum(f.n_employees() for f in state.firms.values())

    # (11) exit then entry
    if state.subsidy_rate > 0:
        for firm in state.firms.values():
            if firm.wealth < 0:
                ledger.transfer(gov, firm, state.subsidy_rate * (-firm.wealth),
                                "production_subsidy")
    deaths = len(economy.cull_firms(state))
    sector_unmet = np.array([markets[i].unmet_ratio() if i in markets else 0.0
                             for i in range(n)])
    state.unmet_history.append(sector_unmet)
    if len(state.unmet_history) > c.entry_window_months:
        state.unmet_history.pop(0)
    births = 0
    if state.phase is not Phase.PRE_CALIBRATION:
        window = np.mean(state.unmet_history, axis=0)
        births = len(economy.spawn_firms(state, window, rng))

    # (12) record
    report = _record_report(state, markets, used_q, production_value,
                            employed_at_close, residual, wages, taxes,
                            benefits, kurzarbeit_paid, births, deaths,
                            sector_unmet, cpi_flagged)
    state.month += 1
    state.month_in_phase += 1
    return report


def _build_markets(state: EconomyState, c: ModelConstants) -> dict[int, SectorMarket]:
    markets: dict[int, SectorMarket] = {}
    unrestricted = state.phase is not Phase.FREE_MARKET
    for i in range(state.n_sectors):
        if i in state.sam.inactive_sectors:
            continue
        sellers = [f for f in state.firms.values() if f.sector == i]
        if unrestricted:
            cap = float("inf")
        else:
            cap = state.external.import_supply[i] * state.external.import_factor[i]
        markets[i] = SectorMarket(
            i, sellers, c.logit_gamma, import_capacity=cap,
            import_price=state.external.import_price,
            reference_price=state.sector_price[i],
        )
    return markets


def _household_consumption(state: EconomyState, markets, ledger: Ledger) -> None:
    """Pooled household spending: blended between the SAM real peg (while
    assisted) and income-driven budgets scaled by the consumption factors."""
    c = state.constants
    n = state.n_sectors
    income_total = sum(w.month_income for w in state.workers)
    s = state.subsidy_rate if state.phase is not Phase.FREE_MARKET else 0.0

    spend = np.zeros(n)
    for i in range(n):
        if state.household_targets_monthly[i] <= 0:
            continue
        price = markets[i].mean_price() if i in markets else None
        peg = state.household_targets_monthly[i] * (price if price is not None
                                                    else state.sector_price[i])
        income_driven = income_total * state.basket_weights[i] * state.hh_factors[i]
        spend[i] = s * peg + (1.0 - s) * income_driven
        if state.phase is not Phase.FREE_MARKET:
            denom = income_total * state.basket_weights[i]
            if denom > _TINY:
                target_factor = min(peg / denom, _FACTOR_CAP)
                state.hh_factors[i] = smoothed(state.hh_factors[i],
                                               target_factor, c.factor_smoothing)
    if c.household_wealth_propensity > 0:
        wealth_total = max(0.0, sum(w.wealth for w in state.workers))
        spend += (c.household_wealth_propensity * wealth_total
                  * state.basket_weights)

    total = float(spend.sum())
    if total <= _TINY:
        return
    # Workers fund the pool pro-rata to income (equally when incomeless).
    pool = state.pool
    if income_total > _TINY:
        for w in state.workers:
            ledger.transfer(w, pool, total * w.month_income / income_total,
                            "household_funding")
    else:
        share = total / len(state.workers)
        for w in state.workers:
            ledger.transfer(w, pool, share, "household_funding")
    weights = spend / total
    spent, unspent = economy.consume(
        total, weights, markets, c.logit_gamma, state.rng, ledger, pool,
        external=state.external, chunks=c.consumption_chunks)
    refund = float(unspent.sum())
    if refund > _TINY:
        if income_total > _TINY:
            for w in state.workers:
                ledger.transfer(pool, w, refund * w.month_income / income_total,
                                "household_refund")
        else:
            share = refund / len(state.workers)
            for w in state.workers:
                ledger.transfer(pool, w, share, "household_refund")


def _record_report(state: EconomyState, markets, used_q, production_value,
                   employed, residual, wages, taxes, benefits,
                   kurzarbeit_paid, births, deaths, sector_unmet,
                   cpi_flagged) -> MonthReport:
    n = state.n_sectors
    # Market seller lists were fixed before exit/entry, so same-month
    # production of firms culled at step 11 still counts. Production is
    # valued at the prices in effect while trading, before the step-9
    # adjustment; employment is the level at accounting close, before entry.
    out_q = np.zeros(n)
    cogs = 0.0
    for market in markets.values():
        for f in market.sellers:
            out_q[f.sector] += f.produced_q
            cogs += f.cogs_value
    nominal_gdp = production_value - cogs

    inter = np.zeros((n, n))
    hh = np.zeros(n)
    govf = np.zeros(n)
    gfcf = np.zeros(n)
    expv = np.zeros(n)
    impv = np.zeros(n)
    for i, market in markets.items():
        for kind, value in market.sold_by_kind.items():
            if kind.startswith("intermediate:"):
                inter[i][int(kind.split(":", 1)[1])] += value
            elif kind == "household":
                hh[i] += value
            elif kind == "government":
                govf[i] += value
            elif kind == "gfcf":
                gfcf[i] += value
            elif kind == "exports":
                expv[i] += value
        impv[i] = market.import_value

    total_workers = len(state.workers)
    unemployment = (1.0 - employed / total_workers) if total_workers else 1.0
    firm_count = len(state.firms)
    micro = (sum(1 for f in state.firms.values() if f.n_employees() <= 9)
             / firm_count) if firm_count else float("nan")

    net_q = out_q - used_q
    real_gdp = compute_real_gdp(net_q, state.base_prices)

    basket = state.basket_weights
    hh_factor = float(np.dot(basket, state.hh_factors)) if basket.sum() > 0 else 1.0
    gw = state.government_targets_monthly
    gov_factor = (float(np.dot(gw, state.government.consumption_factors) / gw.sum())
                  if gw.sum() > 0 else 1.0)

    values = [nominal_gdp, real_gdp, state.cpi]
    if (not all(math.isfinite(v) for v in values)
            or np.any(~np.isfinite(state.sector_price))
            or float(np.max(state.sector_price)) > 1e9):
        state.collapsed = True

    return MonthReport(
        month=state.month, phase=state.phase.value,
        nominal_gdp=float(nominal_gdp), real_gdp=float(real_gdp),
        cpi=float(state.cpi) if not cpi_flagged else float("nan"),
        unemployment_rate=float(unemployment), employed=employed,
        firm_count=firm_count, firm_births=births, firm_deaths=deaths,
        micro_firm_share=float(micro), subsidy_rate=float(state.subsidy_rate),
        hh_factor=hh_factor, gov_factor=gov_factor,
        unmet_demand_ratio=float(np.mean(sector_unmet)) if n else 0.0,
        net_external_flow=float(state.ledger.net_external),
        accounting_residual=float(residual),
        gross_flows=float(sum(abs(v) for v in state.ledger.totals.values())),
        collapsed=state.collapsed,
        sector_output_q=out_q, sector_price=state.sector_price.copy(),
        sector_unmet_ratio=sector_unmet,
        flows_intermediate=inter, flows_household=hh, flows_government=govf,
        flows_gfcf=gfcf, flows_exports=expv, flows_imports=impv,
        wages_paid=float(wages), taxes_paid=float(taxes),
        benefits_paid=float(benefits), kurzarbeit_paid=float(kurzarbeit_paid),
    )


MONTHLY_CSV_COLUMNS = [
    "month", "phase", "nominal_gdp", "real_gdp", "cpi", "unemployment_rate",
    "employed", "firm_count", "firm_births", "firm_deaths",
    "micro_firm_share", "subsidy_rate", "hh_factor", "gov_factor",
    "unmet_demand_ratio", "net_external_flow", "accounting_residual",
    "gross_flows", "collapsed", "wages_paid", "taxes_paid", "benefits_paid",
    "kurzarbeit_paid",
]


def write_monthly_csv(reports: list[MonthReport], codes: list[str],
                      path: str | Path) -> None:
    """Serialize the monthly report stream; column order is frozen, with
    per-sector output quantity and price columns appended."""
    path = Path(path)
    header = MONTHLY_CSV_COLUMNS + [f"out_q_{c}" for c in codes] \
        + [f"price_{c}" for c in codes]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in reports:
            row = [repr(getattr(r, col)) if not isinstance(getattr(r, col), str)
                   else getattr(r, col) for col in MONTHLY_CSV_COLUMNS]
            row += [repr(float(v)) for v in r.sector_output_q]
            row += [repr(float(v)) for v in r.sector_price]
            w.writerow(row)


def write_flows_csv(reports: list[MonthReport], codes: list[str],
                    path: str | Path) -> None:
    """Long-format monthly flows: supplier sector x using account."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["month", "supplier", "account", "value"])
        for r in reports:
            n = len(codes)
            for i in range(n):
                for j in range(n):
                    v = r.flows_intermediate[i][j]
                    if v != 0.0:
                        w.writerow([r.month, codes[i], codes[j], repr(float(v))])
                for name, vec in (("HH", r.flows_household),
                                  ("GOV", r.flows_government),
                                  ("GFCF", r.flows_gfcf),
                                  ("EXPORT", r.flows_exports),
                                  ("IMPORT", r.flows_imports)):
                    if vec[i] != 0.0:
                        w.writerow([r.month, codes[i], name, repr(float(vec[i]))])
