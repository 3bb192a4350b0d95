"""Balanced synthetic table construction.

Builds small SAMs whose flows admit an exact stationary state of the
simulated economy: column cost shares sum to one, row uses exhaust output,
and aggregate investment demand equals steady-state capital replacement
(monthly depreciation of the capital stock implied by the operating-surplus
coefficients). Used for fixtures and as the oracle in fixed-point tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .economy import ModelConstants
from .io_table import (
    CountryParams, SectorId, SocialAccountingMatrix, technical_coefficients,
)


@dataclass
class FixedPointInfo:
    """Exact monthly stationary flows implied by a balanced table."""

    output_monthly: np.ndarray            # x, quantity == money at base prices
    intermediates_monthly: np.ndarray     # S x S
    household_monthly: np.ndarray
    government_monthly: np.ndarray
    gfcf_monthly: np.ndarray
    exports_monthly: np.ndarray
    labor_monthly: np.ndarray
    taxes_monthly: np.ndarray
    gdp_monthly: float


def build_balanced_sam(
    codes: list[str],
    a: np.ndarray,
    labor_coeff: np.ndarray,
    tax_rate_production: np.ndarray,
    tax_rate_products: np.ndarray,
    household_monthly: np.ndarray,
    government_monthly: np.ndarray,
    exports_monthly: np.ndarray,
    gfcf_weights: np.ndarray,
    constants: ModelConstants = ModelConstants(),
    country: str = "SY",
) -> tuple[SocialAccountingMatrix, FixedPointInfo]:
    """Construct a balanced SAM from coefficients and final demand choices.

    The capital coefficient is the column residual
    ``1 - column_input_share - labor - taxes`` and must come out positive.
    Monthly outputs solve the demand system including steady-state
    replacement investment, which is distributed over ``gfcf_weights``.
    """
    n = len(codes)
    a = np.asarray(a, dtype=float)
    labor_coeff = np.asarray(labor_coeff, dtype=float)
    tax_rate_production = np.asarray(tax_rate_production, dtype=float)
    tax_rate_products = np.asarray(tax_rate_products, dtype=float)
    household_monthly = np.asarray(household_monthly, dtype=float)
    government_monthly = np.asarray(government_monthly, dtype=float)
    exports_monthly = np.asarray(exports_monthly, dtype=float)
    gfcf_weights = np.asarray(gfcf_weights, dtype=float)
    if gfcf_weights.sum() > 0:
        gfcf_weights = gfcf_weights / gfcf_weights.sum()

    capital_coeff = 1.0 - a.sum(axis=0) - labor_coeff - tax_rate_production - tax_rate_products
    if np.any(capital_coeff <= 0):
        raise ValueError("column shares exceed 1: no room for operating surplus")

    # Monthly replacement investment per unit output: depreciation applied to
    # the capital stock target (capital_coeff / k_to_fixcap) x headroom.
    invest_per_unit = (constants.producer_capital_depreciation
                       * constants.capital_headroom
                       / constants.k_to_fixcap) * capital_coeff
    # x = A x + c + g + e + W_f (invest_per_unit . x)
    m = np.eye(n) - a - np.outer(gfcf_weights, invest_per_unit)
    final = household_monthly + government_monthly + exports_monthly
    x = np.linalg.solve(m, final)
    if np.any(x <= 0):
        raise ValueError("chosen final demand yields non-positive outputs")

    gfcf_monthly = gfcf_weights * float(invest_per_unit @ x)
    inter_monthly = a * x[None, :]

    sam = SocialAccountingMatrix(
        country=country,
        sectors=[SectorId(i, c) for i, c in enumerate(codes)],
        intermediates=12.0 * inter_monthly,
        compensation=12.0 * labor_coeff * x,
        operating_surplus=12.0 * capital_coeff * x,
        taxes_production=12.0 * tax_rate_production * x,
        taxes_products=12.0 * tax_rate_products * x,
        op_res=np.zeros(n),
        op_nres=np.zeros(n),
        household_consumption=12.0 * household_monthly,
        government_consumption=12.0 * government_monthly,
        gfcf=12.0 * gfcf_monthly,
        exports=12.0 * exports_monthly,
        imports=np.zeros(n),
        gross_output=12.0 * x,
    )
    info = FixedPointInfo(
        output_monthly=x,
        intermediates_monthly=inter_monthly,
        household_monthly=household_monthly,
        government_monthly=government_monthly,
        gfcf_monthly=gfcf_monthly,
        exports_monthly=exports_monthly,
        labor_monthly=labor_coeff * x,
        taxes_monthly=(tax_rate_production + tax_rate_products) * x,
        gdp_monthly=float(((labor_coeff + capital_coeff + tax_rate_production
                            + tax_rate_products) * x).sum()),
    )
    return sam, info


def synthetic4(constants: ModelConstants = ModelConstants()) -> tuple[
        SocialAccountingMatrix, FixedPointInfo, CountryParams]:
    """The shipped 4-sector balanced fixture.

    AGR: primary, capital-heavy. MFG: input-heavy manufacturing.
    SRV: labor-heavy services. CAP: capital-goods producer (takes most GFCF).
    NAIRU 0.125 keeps target employment integral at w = 8, 32 and 64.
    """
    codes = ["AGR", "MFG", "SRV", "CAP"]
    a = np.array([
        [0.05, 0.25, 0.02, 0.05],
        [0.10, 0.20, 0.08, 0.20],
        [0.05, 0.10, 0.10, 0.10],
        [0.02, 0.05, 0.02, 0.05],
    ])
    labor = np.array([0.30, 0.20, 0.55, 0.35])
    tax_prod = np.array([0.04, 0.02, 0.02, 0.02])
    tax_products = np.array([0.06, 0.03, 0.03, 0.03])
    household = np.array([30.0, 40.0, 60.0, 5.0])
    government = np.array([2.0, 5.0, 25.0, 3.0])
    exports = np.array([10.0, 20.0, 8.0, 6.0])
    gfcf_w = np.array([0.0, 0.2, 0.0, 0.8])

    sam, info = build_balanced_sam(
        codes, a, labor, tax_prod, tax_products,
        household, government, exports, gfcf_w, constants,
    )
    params = CountryParams(active_population=4_000_000, nairu=0.125, initial_cpi=1.0)
    return sam, info, params


def steady_state_economy(sam: SocialAccountingMatrix, params: CountryParams,
                         constants: ModelConstants, seed: int = 5489,
                         firms_per_sector: int = 1):
    """An economy constructed directly at the balanced table's stationary
    point: employment, wages, stocks, capital and expectations all at target,
    free-market phase, frozen consumption factors. Stepping it reproduces the
    table's monthly flows exactly (up to float error)."""
    from .engine import Phase, init_economy

    coeffs = technical_coefficients(sam)
    state = init_economy(sam, coeffs, params, constants, seed)
    c = constants
    n = sam.n_sectors
    w = c.workers_per_sector
    n_target = max(1, round(w * (1.0 - params.nairu)))

    by_sector: dict[int, list] = {i: [] for i in range(n)}
    for worker in state.workers:
        by_sector[worker.sector].append(worker)

    for i in range(n):
        if i in sam.inactive_sectors:
            continue
        share = state.output_target_monthly[i] / firms_per_sector
        col = coeffs.a[:, i]
        pool = by_sector[i]
        pos = 0
        for _ in range(firms_per_sector):
            firm = state.new_firm(i)
            firm.price = 1.0
            firm.offer_wage = state.wage0[i]
            firm.avg_monthly_sales = share
            firm.input_stock = c.stock_target_months * share * col
            firm.input_stock_value = firm.input_stock.copy()
            firm.output_stock = c.output_buffer_months * share
            if coeffs.capital_coeff[i] > 0:
                firm.fixed_capital = (coeffs.capital_coeff[i] / c.k_to_fixcap) \
                    * c.capital_headroom * share
            firm.wealth = 12.0 * share
            hires = n_target // firms_per_sector
            for _ in range(hires):
                worker = pool[pos]
                pos += 1
                worker.employer = firm.id
                worker.last_wage = state.wage0[i]
                firm.employees.append(worker)
        # distribute any remainder of the employment target to the last firm
        while pos < n_target:
            worker = pool[pos]
            pos += 1
            worker.employer = firm.id
            worker.last_wage = state.wage0[i]
            firm.employees.append(worker)

    # Frozen household factors make income-driven spending hit the targets.
    income = sum(wk.last_wage for wk in state.workers if wk.employer is not None)
    income += sum(c.benefit_ratio * wk.last_wage for wk in state.workers
                  if wk.employer is None)
    for i in range(n):
        denom = income * state.basket_weights[i]
        if denom > 0:
            state.hh_factors[i] = state.household_targets_monthly[i] / denom
    state.phase = Phase.FREE_MARKET
    state.fm_entry_month = 0
    state.subsidy_rate = 0.0
    state.base_prices = np.ones(n)
    return state

