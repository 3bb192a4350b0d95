"""Darwinian agent-based input-output economy simulator.

Calibrates an artificial multi-sector economy to a single symmetric
industry-by-industry table, runs autonomous free-market months (optionally
under encoded shock timelines), and extracts ensemble GDP-growth forecasts
and emergent industrial-organization statistics.
"""

__version__ = "0.1.0"

from .calibration import (
    CalibratedEconomy, CalibrationTimeout, CalibrationTrace,
    ConvergenceCriteria, check_convergence, micro_firm_share,
    run_calibration, run_free_market, subsidy_rate,
)
from .economy import (
    ExternalSector, Firm, Government, Ledger, ModelConstants, SectorMarket,
    Worker, adjust_price, consume, cull_firms, external_step,
    government_step, invest, labor_match, logit_probabilities, produce,
    spawn_firms,
)
from .engine import (
    AccountingError, EconomyState, MonthReport, Phase, close_accounts,
    compute_cpi, compute_real_gdp, init_economy, step_month,
)
from .forecast import (
    DEFAULT_SEEDS, EnsembleResult, SeedRun, ensemble_stats, error_metrics,
    filter_seeds, firm_size_distribution, ols_growth, point_to_point_growth,
)
from .io_table import (
    CoefficientMatrix, CountryParams, RepairPolicy, RepairReport, SectorId,
    SocialAccountingMatrix, TableFormatError, gdp_target, load_country_params,
    parse_figaro_csv, read_sam_csv, repair_inputs, repair_sam,
    technical_coefficients, write_sam_csv,
)
from .shocks import (
    MonthShock, PandemicTimeline, TimelineFormatError, apply_month_shock,
    kurzarbeit_payment, parse_timeline,
)
from .synthetic import build_balanced_sam, synthetic4
