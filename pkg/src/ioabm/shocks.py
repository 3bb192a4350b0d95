"""Exogenous shock timelines: per-month sector supply factors, trade
factors, and short-time-work subsidies applied during the free-market phase.

Timeline grammar (INI-like, either a standalone file or an embedded block of
the run config)::

    [PANDEMIC_TIMELINE]
    start_month = 0            ; free-market month the timeline starts at
    eligibility_cutoff = 0     ; firms founded after this FM month get no subsidy

    [PANDEMIC_TIMELINE.month.0]
    capacity.I = 0.03          ; fraction of the sector's workers able to work
    capacity.default = 0.90    ; applies to sectors not listed (default 1.0)
    export_factor.default = 0.7
    import_factor.default = 0.8
    kurzarbeit_participation = 0.70

Month sections must be contiguous from 0; unspecified sectors and factors
default to 1.0 (a no-op).
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

import numpy as np

TIMELINE_SECTION = "PANDEMIC_TIMELINE"
_MONTH_PREFIX = TIMELINE_SECTION + ".month."


class TimelineFormatError(ValueError):
    pass


@dataclass
class MonthShock:
    """One month's perturbation; absent entries mean normal operation."""

    sector_capacity: dict[str, float] = field(default_factory=dict)
    capacity_default: float = 1.0
    export_factor: dict[str, float] = field(default_factory=dict)
    export_default: float = 1.0
    import_factor: dict[str, float] = field(default_factory=dict)
    import_default: float = 1.0
    kurzarbeit_participation: float = 0.0

    def capacity_for(self, code: str) -> float:
        return self.sector_capacity.get(code, self.capacity_default)

    def export_for(self, code: str) -> float:
        return self.export_factor.get(code, self.export_default)

    def import_for(self, code: str) -> float:
        return self.import_factor.get(code, self.import_default)

    def is_noop(self) -> bool:
        return (not self.sector_capacity and not self.export_factor
                and not self.import_factor
                and self.capacity_default == 1.0
                and self.export_default == 1.0
                and self.import_default == 1.0
                and self.kurzarbeit_participation == 0.0)


@dataclass
class PandemicTimeline:
    start_month: int
    months: list[MonthShock]
    eligibility_cutoff: int

    def __post_init__(self):
        if not self.months:
            raise TimelineFormatError("timeline must declare at least one month")
        if self.eligibility_cutoff > self.start_month:
            raise TimelineFormatError(
                "eligibility_cutoff must not exceed start_month")

    def __len__(self) -> int:
        return len(self.months)


def _check_range(name: str, value: float, lo: float, hi: float | None) -> float:
    if value < lo or (hi is not None and value > hi):
        bound = f"[{lo}, {hi}]" if hi is not None else f">= {lo}"
        raise TimelineFormatError(f"{name} = {value} outside {bound}")
    return value


def parse_timeline(block: str) -> PandemicTimeline:
    """Parse a PANDEMIC_TIMELINE block into a timeline object."""
    cp = configparser.ConfigParser(interpolation=None, strict=True,
                                   inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    try:
        cp.read_string(block)
    except configparser.DuplicateSectionError as exc:
        raise TimelineFormatError(f"duplicate month section: {exc.section}") from None
    except configparser.Error as exc:
        raise TimelineFormatError(str(exc)) from None

    if TIMELINE_SECTION not in cp:
        raise TimelineFormatError(f"missing [{TIMELINE_SECTION}] section")
    head = cp[TIMELINE_SECTION]
    start_month = head.getint("start_month", fallback=0)
    cutoff = head.getint("eligibility_cutoff", fallback=start_month)

    month_sections: dict[int, str] = {}
    for name in cp.sections():
        if not name.startswith(_MONTH_PREFIX):
            continue
        try:
            idx = int(name[len(_MONTH_PREFIX):])
        except ValueError:
            raise TimelineFormatError(f"bad month section name {name!r}") from None
        if idx < 0:
            raise TimelineFormatError(f"negative month index in {name!r}")
        month_sections[idx] = name

    if not month_sections:
        raise TimelineFormatError("timeline declares no months")
    expected = list(range(len(month_sections)))
    if sorted(month_sections) != expected:
        raise TimelineFormatError(
            f"month sections must be contiguous from 0, got {sorted(month_sections)}")

    months = []
    for idx in expected:
        sec = cp[month_sections[idx]]
        shock = MonthShock()
        for key, raw in sec.items():
            value = float(raw)
            if key.startswith("capacity."):
                code = key.split(".", 1)[1]
                _check_range(key, value, 0.0, 1.0)
                if code == "default":
                    shock.capacity_default = value
                else:
                    shock.sector_capacity[code] = value
            elif key.startswith("export_factor."):
                code = key.split(".", 1)[1]
                _check_range(key, value, 0.0, None)
                if code == "default":
                    shock.export_default = value
                else:
                    shock.export_factor[code] = value
            elif key.startswith("import_factor."):
                code = key.split(".", 1)[1]
                _check_range(key, value, 0.0, None)
                if code == "default":
                    shock.import_default = value
                else:
                    shock.import_factor[code] = value
            elif key == "kurzarbeit_participation":
                shock.kurzarbeit_participation = _check_range(key, value, 0.0, 1.0)
            else:
                raise TimelineFormatError(f"unknown timeline key {key!r}")
        months.append(shock)
    return PandemicTimeline(start_month=start_month, months=months,
                            eligibility_cutoff=cutoff)


def load_timeline(path) -> PandemicTimeline:
    from pathlib import Path
    return parse_timeline(Path(path).read_text())


def shock_for_month(timeline: PandemicTimeline, fm_month: int) -> MonthShock | None:
    """The shock active at a given free-market month, None outside the span."""
    idx = fm_month - timeline.start_month
    if 0 <= idx < len(timeline.months):
        return timeline.months[idx]
    return None


def apply_month_shock(state, shock: MonthShock | None) -> None:
    """Set sector capacities and trade factors for the month; a None or
    exhausted timeline restores normal operation (all factors 1.0)."""
    n = state.n_sectors
    codes = state.sam.codes
    if shock is None:
        state.sector_capacity = np.ones(n)
        state.external.export_factor = np.ones(n)
        state.external.import_factor = np.ones(n)
        for w in state.workers:
            w.work_capacity_factor = 1.0
        return
    state.sector_capacity = np.array([shock.capacity_for(c) for c in codes])
    state.external.export_factor = np.array([shock.export_for(c) for c in codes])
    state.external.import_factor = np.array([shock.import_for(c) for c in codes])
    for w in state.workers:
        w.work_capacity_factor = state.sector_capacity[w.sector]


def draw_kurzarbeit_participation(state, shock: MonthShock) -> None:
    """One participation draw per firm per month, deterministic from the
    run's seed. Only firms founded up to the eligibility cutoff can join."""
    p = shock.kurzarbeit_participation
    cutoff_abs = (state.fm_entry_month or 0) + state.timeline.eligibility_cutoff
    for firm in state.firms.values():
        if p <= 0.0 or not firm.subsidy_eligible(cutoff_abs):
            firm.kurzarbeit_active = False
            continue
        firm.kurzarbeit_active = bool(state.rng.random() < p)


def kurzarbeit_payment(firm, shock: MonthShock, constants, sector_code: str) -> float:
    """Covered wage share for a participating firm: the subsidy pays
    kurzarbeit_wage_share of the idled fraction of the current wage bill."""
    if not firm.kurzarbeit_active:
        return 0.0
    idle = 1.0 - shock.capacity_for(sector_code)
    if idle <= 0.0:
        return 0.0
    return constants.kurzarbeit_wage_share * idle * firm.current_wage_bill()


def pay_kurzarbeit(state, shock: MonthShock, ledger) -> float:
    """Book the month's short-time-work transfers from government to firms."""
    total = 0.0
    codes = state.sam.codes
    for firm in state.firms.values():
        pay = kurzarbeit_payment(firm, shock, state.constants, codes[firm.sector])
        if pay > 0:
            ledger.transfer(state.government, firm, pay, "kurzarbeit")
            total += pay
    state.government.transfer_ledger += total
    return total
