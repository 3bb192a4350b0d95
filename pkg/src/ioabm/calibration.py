"""Four-stage calibration driver.

Pre-calibration seeds producers sector by sector and lets the economy ramp
up under full assistance; the assisted stage subsidizes operating losses
until three convergence conditions hold simultaneously (unemployment SMA,
household and government consumption-factor stability); subsidies then decay
linearly over the transition stage, after which the economy runs free.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .engine import (
    EconomyState, MonthReport, Phase, create_initial_firms,
    init_economy, initialization_schedule, step_month,
)
from .economy import ModelConstants
from .io_table import (
    CoefficientMatrix, CountryParams, RepairReport, SocialAccountingMatrix,
)


@dataclass(frozen=True)
class ConvergenceCriteria:
    unemployment_factor: float = 1.36     # bound = factor x NAIRU
    window: int = 12                      # months
    stability_threshold: float = 0.02     # relative factor change
    timeout_months: int = 600

    def __post_init__(self):
        if self.window < 2:
            raise ValueError("window must be >= 2")
        for name in ("unemployment_factor", "stability_threshold", "timeout_months"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class TracePoint:
    month: int
    phase: str
    unemployment: float
    unemployment_sma: float
    hh_factor: float
    gov_factor: float
    micro_firm_share: float
    subsidy_rate: float


@dataclass
class CalibrationTrace:
    points: list[TracePoint] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.points)

    def unemployment_series(self) -> list[float]:
        return [p.unemployment for p in self.points]

    def hh_series(self) -> list[float]:
        return [p.hh_factor for p in self.points]

    def gov_series(self) -> list[float]:
        return [p.gov_factor for p in self.points]


@dataclass
class ConvergenceVerdict:
    unemployment_ok: bool
    household_ok: bool
    government_ok: bool

    @property
    def overall(self) -> bool:
        return self.unemployment_ok and self.household_ok and self.government_ok


@dataclass
class CalibratedEconomy:
    state: EconomyState
    trace: CalibrationTrace
    reports: list[MonthReport]
    convergence_month: int
    fm_entry_month: int
    micro_share_at_entry: float
    repair_report: RepairReport | None = None


class CalibrationTimeout(Exception):
    """Convergence never held before the timeout: a reportable structural
    anomaly of the input table, not a crash."""

    def __init__(self, months: int, trace: CalibrationTrace):
        super().__init__(f"calibration did not converge within {months} months")
        self.months = months
        self.trace = trace


def subsidy_rate(phase: Phase, month_in_phase: int,
                 transition_months: int = 36) -> float:
    """Assistance level: full while assisted, linear decay through the
    transition, zero in the free market."""
    if phase is Phase.ASSISTED or phase is Phase.PRE_CALIBRATION:
        return 1.0
    if phase is Phase.TRANSITION:
        return max(0.0, 1.0 - month_in_phase / transition_months)
    return 0.0


def check_convergence(trace: CalibrationTrace, params: CountryParams,
                      crit: ConvergenceCriteria = ConvergenceCriteria(),
                      ) -> ConvergenceVerdict:
    """Evaluate the three conditions on the trailing window of the trace."""
    if len(trace) < crit.window:
        raise ValueError(f"trace length {len(trace)} below window {crit.window}")
    tail = trace.points[-crit.window:]
    sma = sum(p.unemployment for p in tail) / crit.window
    unemployment_ok = sma <= crit.unemployment_factor * params.nairu

    def stable(first: float, last: float) -> bool:
        if last == 0.0:
            return first == 0.0
        return abs(last - first) / abs(last) < crit.stability_threshold

    household_ok = stable(tail[0].hh_factor, tail[-1].hh_factor)
    government_ok = stable(tail[0].gov_factor, tail[-1].gov_factor)
    return ConvergenceVerdict(unemployment_ok, household_ok, government_ok)


def micro_firm_share(state: EconomyState) -> float:
    """Fraction of firms with 0..9 employees."""
    if not state.firms:
        raise ValueError("micro_firm_share undefined with zero firms")
    micro = sum(1 for f in state.firms.values() if f.n_employees() <= 9)
    return micro / len(state.firms)


def _record_trace(trace: CalibrationTrace, state: EconomyState,
                  report: MonthReport, window: int) -> None:
    series = [p.unemployment for p in trace.points[-(window - 1):]]
    series.append(report.unemployment_rate)
    sma = sum(series) / len(series)
    trace.points.append(TracePoint(
        month=report.month, phase=report.phase,
        unemployment=report.unemployment_rate, unemployment_sma=sma,
        hh_factor=report.hh_factor, gov_factor=report.gov_factor,
        micro_firm_share=report.micro_firm_share,
        subsidy_rate=report.subsidy_rate,
    ))


def run_calibration(sam: SocialAccountingMatrix, params: CountryParams,
                    constants: ModelConstants, seed: int,
                    coeffs: CoefficientMatrix | None = None,
                    criteria: ConvergenceCriteria = ConvergenceCriteria(),
                    ) -> CalibratedEconomy:
    """Run pre-calibration, assisted and transition stages; returns the
    economy at free-market entry. Raises CalibrationTimeout when the three
    conditions never hold simultaneously before the timeout."""
    from .io_table import technical_coefficients

    coeffs = coeffs or technical_coefficients(sam)
    state = init_economy(sam, coeffs, params, constants, seed)
    schedule = initialization_schedule(
        sam.n_sectors, constants.precalibration_months, coeffs, sam.active_mask())

    trace = CalibrationTrace()
    reports: list[MonthReport] = []
    convergence_month = -1

    while True:
        if state.month >= criteria.timeout_months:
            raise CalibrationTimeout(criteria.timeout_months, trace)

        if state.phase is Phase.PRE_CALIBRATION:
            for sector in schedule.get(state.month_in_phase, []):
                create_initial_firms(state, sector)

        state.subsidy_rate = subsidy_rate(state.phase, state.month_in_phase,
                                          constants.transition_months)
        report = step_month(state)
        reports.append(report)
        _record_trace(trace, state, report, criteria.window)

        if state.phase is Phase.PRE_CALIBRATION:
            if state.month_in_phase >= constants.precalibration_months:
                state.set_phase(Phase.ASSISTED)
        elif state.phase is Phase.ASSISTED:
            if state.month_in_phase + 1 >= criteria.window:
                verdict = check_convergence(trace, params, criteria)
                if verdict.overall:
                    convergence_month = state.month
                    state.set_phase(Phase.TRANSITION)
        elif state.phase is Phase.TRANSITION:
            if state.month_in_phase >= constants.transition_months:
                state.set_phase(Phase.FREE_MARKET)
                break

    state.subsidy_rate = 0.0
    return CalibratedEconomy(
        state=state, trace=trace, reports=reports,
        convergence_month=convergence_month,
        fm_entry_month=state.month,
        micro_share_at_entry=micro_firm_share(state) if state.firms else float("nan"),
    )


def run_free_market(calibrated: CalibratedEconomy, months: int,
                    timeline=None) -> list[MonthReport]:
    """Autonomous free-market months; the forecast window."""
    state = calibrated.state
    state.timeline = timeline
    reports = []
    for _ in range(months):
        reports.append(step_month(state))
    return reports


def write_trace_csv(trace: CalibrationTrace, path) -> None:
    import csv
    from pathlib import Path
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["month", "phase", "unemployment", "unemployment_sma",
                    "hh_factor", "gov_factor", "micro_firm_share",
                    "subsidy_rate"])
        for p in trace.points:
            w.writerow([p.month, p.phase, repr(p.unemployment),
                        repr(p.unemployment_sma), repr(p.hh_factor),
                        repr(p.gov_factor), repr(p.micro_firm_share),
                        repr(p.subsidy_rate)])
