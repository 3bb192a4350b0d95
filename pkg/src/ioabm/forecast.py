"""Ensemble growth extraction, seed filtering and error metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .engine import EconomyState, MonthReport
from .io_table import SocialAccountingMatrix, gdp_target

DEFAULT_SEEDS = [5489, 12345, 67890, 31415, 99999, 54321,
                 11111, 77777, 22222, 33333, 44444, 55555]

GDP_FILTER_RATIO = 0.80          # nominal GDP >= this share of source VA
UNEMPLOYMENT_FILTER = 0.20       # mean unemployment <= this
OUTLIER_GROWTH_PP = 20.0         # |growth| above this is a stochastic outlier

SIZE_CLASSES = ["0-9", "10-49", "50-249", "250+"]
_SIZE_BOUNDS = [(0, 9), (10, 49), (50, 249), (250, None)]


@dataclass
class SeedRun:
    """One seed's free-market record: the monthly aggregate series plus
    convergence/collapse flags. Built from engine reports or raw series."""

    seed: int
    converged: bool
    collapse_flag: bool
    real_gdp: list[float] = field(default_factory=list)
    nominal_gdp: list[float] = field(default_factory=list)
    unemployment: list[float] = field(default_factory=list)
    monthly: list[MonthReport] = field(default_factory=list)
    convergence_month: int = -1
    micro_share_at_entry: float = float("nan")

    @classmethod
    def from_reports(cls, seed: int, monthly: list[MonthReport],
                     converged: bool, collapse_flag: bool,
                     **kwargs) -> "SeedRun":
        return cls(
            seed=seed, converged=converged, collapse_flag=collapse_flag,
            real_gdp=[r.real_gdp for r in monthly],
            nominal_gdp=[r.nominal_gdp for r in monthly],
            unemployment=[r.unemployment_rate for r in monthly],
            monthly=monthly, **kwargs)

    def real_gdp_series(self) -> list[float]:
        return list(self.real_gdp)

    def mean_annual_nominal_gdp(self) -> float:
        if not self.nominal_gdp:
            return 0.0
        return 12.0 * float(np.mean(self.nominal_gdp))

    def mean_unemployment(self) -> float:
        if not self.unemployment:
            return 1.0
        return float(np.mean(self.unemployment))


@dataclass
class EnsembleResult:
    kept_seeds: list[int]
    mean_growth: float
    sd: float
    sem: float
    per_seed_growth: dict[int, float]
    per_seed_r2: dict[int, float]
    running_mean: list[float] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)


def ols_growth(series) -> tuple[float, float]:
    """Annualized growth from an OLS line fit over 12 monthly values.

    Fits y = a + b t over t = 0..11; growth = 12 b / a x 100. The r2 of a
    zero-variance series is 0 by convention; a vanishing intercept leaves
    growth undefined (nan).
    """
    y = np.asarray(series, dtype=float)
    if len(y) != 12:
        raise ValueError(f"ols_growth expects 12 monthly values, got {len(y)}")
    t = np.arange(12.0)
    t_mean = t.mean()
    y_mean = y.mean()
    sxx = float(((t - t_mean) ** 2).sum())
    sxy = float(((t - t_mean) * (y - y_mean)).sum())
    b = sxy / sxx
    a = y_mean - b * t_mean
    if abs(a) < 1e-300:
        return float("nan"), 0.0
    growth = 12.0 * b / a * 100.0
    ss_tot = float(((y - y_mean) ** 2).sum())
    if ss_tot <= 0.0:
        return growth, 0.0
    resid = y - (a + b * t)
    r2 = 1.0 - float((resid ** 2).sum()) / ss_tot
    return growth, r2


def point_to_point_growth(series, span: int = 12) -> float:
    """Percent change from the first to the last value of the span."""
    y = list(series)
    if len(y) < span:
        raise ValueError(f"series length {len(y)} below span {span}")
    first = y[0]
    if first == 0:
        raise ValueError("point-to-point growth undefined from zero")
    return 100.0 * (y[span - 1] / first - 1.0)


@dataclass
class Exclusion:
    seed: int
    rule: str
    value: float


def filter_seeds(runs: list[SeedRun], sam: SocialAccountingMatrix,
                 outlier_filter: bool = False,
                 ) -> tuple[list[SeedRun], list[Exclusion]]:
    """Keep runs meeting the convergence thresholds.

    Inclusive boundaries: nominal GDP >= 80% of the table's value added and
    mean unemployment <= 20%. Collapsed or non-converged runs are dropped;
    the optional outlier rule drops |growth| > 20%.
    """
    target = gdp_target(sam)
    kept: list[SeedRun] = []
    excluded: list[Exclusion] = []
    for run in runs:
        if run.collapse_flag:
            excluded.append(Exclusion(run.seed, "collapsed", float("nan")))
            continue
        if not run.converged:
            excluded.append(Exclusion(run.seed, "not_converged", float("nan")))
            continue
        gdp = run.mean_annual_nominal_gdp()
        if gdp < GDP_FILTER_RATIO * target:
            excluded.append(Exclusion(run.seed, "nominal_gdp", gdp / target))
            continue
        unemp = run.mean_unemployment()
        if unemp > UNEMPLOYMENT_FILTER:
            excluded.append(Exclusion(run.seed, "unemployment", unemp))
            continue
        if outlier_filter:
            growth, _ = ols_growth(run.real_gdp_series()[:12])
            if not math.isfinite(growth) or abs(growth) > OUTLIER_GROWTH_PP:
                excluded.append(Exclusion(run.seed, "growth_outlier", growth))
                continue
        kept.append(run)
    return kept, excluded


def ensemble_stats(kept: list[SeedRun]) -> EnsembleResult:
    """Mean, sample SD and SEM of per-seed OLS growths, plus the running
    mean as seeds accumulate (for convergence plots)."""
    if not kept:
        raise ValueError("ensemble_stats requires at least one kept run")
    growths = {}
    r2s = {}
    for run in kept:
        g, r2 = ols_growth(run.real_gdp_series()[:12])
        growths[run.seed] = g
        r2s[run.seed] = r2
    values = [growths[r.seed] for r in kept]
    mean = float(np.mean(values))
    flags = []
    if len(values) >= 2:
        sd = float(np.std(values, ddof=1))
    else:
        sd = 0.0
        flags.append("single_seed_sd_undefined")
    sem = sd / math.sqrt(len(values))
    running = [float(np.mean(values[:k + 1])) for k in range(len(values))]
    return EnsembleResult(
        kept_seeds=[r.seed for r in kept], mean_growth=mean, sd=sd, sem=sem,
        per_seed_growth=growths, per_seed_r2=r2s, running_mean=running,
        flags=flags,
    )


def error_metrics(forecasts, actuals) -> dict[str, float]:
    """MAE, RMSE, mean signed error (forecast - actual) and the count of
    years within one percentage point."""
    f = np.asarray(list(forecasts), dtype=float)
    a = np.asarray(list(actuals), dtype=float)
    if len(f) != len(a):
        raise ValueError(f"length mismatch: {len(f)} forecasts, {len(a)} actuals")
    if len(f) == 0:
        raise ValueError("error_metrics requires at least one pair")
    err = f - a
    return {
        "mae": float(np.mean(np.abs(err))),
        "rmse": float(math.sqrt(np.mean(err ** 2))),
        "mean_signed": float(np.mean(err)),
        "within_1pp_count": int(np.sum(np.abs(err) <= 1.0 + 1e-12)),
        "n": len(f),
    }


def firm_size_distribution(state: EconomyState) -> dict[str, dict[str, float]]:
    """Firm-count and employment shares by employee size class."""
    if not state.firms:
        raise ValueError("firm_size_distribution undefined with zero firms")
    counts = dict.fromkeys(SIZE_CLASSES, 0)
    employment = dict.fromkeys(SIZE_CLASSES, 0)
    for firm in state.firms.values():
        n = firm.n_employees()
        for label, (lo, hi) in zip(SIZE_CLASSES, _SIZE_BOUNDS):
            if n >= lo and (hi is None or n <= hi):
                counts[label] += 1
                employment[label] += n
                break
    n_firms = sum(counts.values())
    n_emp = sum(employment.values())
    return {
        "count_share": {k: counts[k] / n_firms for k in SIZE_CLASSES},
        "employment_share": {k: (employment[k] / n_emp if n_emp else 0.0)
                             for k in SIZE_CLASSES},
    }
