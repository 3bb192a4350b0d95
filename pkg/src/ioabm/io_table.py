"""Symmetric industry-by-industry table ingestion and model coefficients.

Two input formats are accepted:

1. Inter-country matrix CSV ("figaro" layout). First row and first column
   carry ``COUNTRY_SECTOR`` labels (e.g. ``AT_C10T12``). Value-added rows use
   the pseudo-country ``W2`` (``W2_D1``, ``W2_B2A3G``, ``W2_D29X39``,
   ``W2_D21X31``, ``W2_OP_RES``, ``W2_OP_NRES``). Final-use columns per
   country: ``P3_S14`` (households), ``P3_S15`` (NPISH, folded into
   households), ``P3_S13`` (government), ``P51G`` (gross fixed capital
   formation), ``P5M`` (inventories/valuables, folded into GFCF).
   Extracting country X keeps X-to-X flows as the intermediate matrix,
   sums X rows into non-X columns as exports, and sums non-X industry rows
   into X columns as imports (classified by the supplying sector code).

2. Single-country SAM CSV, a row-block exchange format written by
   :func:`write_sam_csv`:

       country,XX                      (optional)
       sectors,<code>,<code>,...
       intermediates,<code>,v,v,...    (one row per supplying sector)
       compensation,v,v,...
       operating_surplus,v,...
       taxes_production,v,...
       taxes_products,v,...
       op_res,v,...
       op_nres,v,...
       household_consumption,v,...
       government_consumption,v,...
       gfcf,v,...
       exports,v,...
       imports,v,...
       gross_output,v,...

   Lines starting with ``#`` are comments.

All monetary values are stored in millions of currency units per year;
monthly model flows are annual values divided by 12.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

FINAL_USE_HOUSEHOLD = ("P3_S14", "P3_S15")
FINAL_USE_GOVERNMENT = ("P3_S13",)
FINAL_USE_GFCF = ("P51G", "P5M")
FINAL_USE_CODES = FINAL_USE_HOUSEHOLD + FINAL_USE_GOVERNMENT + FINAL_USE_GFCF
VALUE_ADDED_COUNTRY = "W2"

VA_ROW_COMPENSATION = "D1"
VA_ROW_SURPLUS = "B2A3G"
VA_ROW_TAX_PRODUCTION = "D29X39"
VA_ROW_TAX_PRODUCTS = "D21X31"
VA_ROW_OP_RES = "OP_RES"
VA_ROW_OP_NRES = "OP_NRES"

FIGARO_SECTOR_COUNT = 64


class TableFormatError(ValueError):
    """Raised for malformed or inconsistent input tables."""


@dataclass(frozen=True)
class SectorId:
    index: int
    code: str


@dataclass
class SocialAccountingMatrix:
    """Single-country social accounting matrix, annual flows.

    ``intermediates[i][j]`` is the flow from supplying sector i into using
    sector j, domestic-to-domestic only. Trade with the rest of the world is
    aggregated into the ``exports``/``imports`` vectors (classified by the
    sector producing the good).
    """

    country: str
    sectors: list[SectorId]
    intermediates: np.ndarray          # S x S
    compensation: np.ndarray           # L, per sector
    operating_surplus: np.ndarray      # K, per sector
    taxes_production: np.ndarray       # D29X39
    taxes_products: np.ndarray         # D21X31
    op_res: np.ndarray
    op_nres: np.ndarray
    household_consumption: np.ndarray
    government_consumption: np.ndarray
    gfcf: np.ndarray
    exports: np.ndarray
    imports: np.ndarray
    gross_output: np.ndarray
    inactive_sectors: tuple[int, ...] = ()

    @property
    def n_sectors(self) -> int:
        return len(self.sectors)

    @property
    def codes(self) -> list[str]:
        return [s.code for s in self.sectors]

    def active_mask(self) -> np.ndarray:
        mask = np.ones(self.n_sectors, dtype=bool)
        mask[list(self.inactive_sectors)] = False
        return mask

    def copy(self) -> "SocialAccountingMatrix":
        arrays = {
            name: getattr(self, name).copy()
            for name in (
                "intermediates", "compensation", "operating_surplus",
                "taxes_production", "taxes_products", "op_res", "op_nres",
                "household_consumption", "government_consumption", "gfcf",
                "exports", "imports", "gross_output",
            )
        }
        return replace(self, **arrays)


@dataclass
class CountryParams:
    """Non-table country inputs: labor force size, NAIRU, CPI anchor."""

    active_population: float
    nairu: float
    initial_cpi: float = 1.0

    def validate(self) -> None:
        if self.active_population <= 0:
            raise ValueError("active_population must be > 0")
        if not 0.0 < self.nairu < 0.5:
            raise ValueError("nairu must lie in (0, 0.5)")


@dataclass
class CoefficientMatrix:
    """Per-unit-of-output requirements derived from a repaired SAM."""

    a: np.ndarray                    # S x S Leontief input coefficients
    labor_coeff: np.ndarray
    capital_coeff: np.ndarray
    tax_rate_production: np.ndarray
    tax_rate_products: np.ndarray
    import_coeff: np.ndarray

    @property
    def n_sectors(self) -> int:
        return self.a.shape[0]


@dataclass(frozen=True)
class RepairPolicy:
    gos_floor_ratio: float = 0.01         # K floored at this share of output
    output_epsilon_ratio: float = 1e-9    # relative inactivity threshold
    fix_initial_cpi: bool = True
    flag_negative_production_taxes: bool = True


@dataclass(frozen=True)
class RepairAction:
    kind: str
    target: str
    before: float
    after: float
    note: str = ""


@dataclass
class RepairReport:
    actions: list[RepairAction] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        """True when no value was changed (flags still count as actions)."""
        return not any(a.before != a.after or a.kind == "gos_floor"
                       for a in self.actions)

    def add(self, kind: str, target: str, before: float, after: float,
            note: str = "") -> None:
        self.actions.append(RepairAction(kind, target, before, after, note))

    def by_kind(self, kind: str) -> list[RepairAction]:
        return [a for a in self.actions if a.kind == kind]

    def summary(self) -> str:
        if not self.actions:
            return "no repairs needed"
        return "; ".join(
            f"{a.kind}[{a.target}] {a.before:g} -> {a.after:g}" for a in self.actions
        )


def _parse_cell(text: str, row_label: str, col_label: str) -> float:
    try:
        return float(text) if text.strip() else 0.0
    except ValueError:
        raise TableFormatError(
            f"non-numeric cell at row {row_label!r}, column {col_label!r}: {text!r}"
        ) from None


def _split_label(label: str) -> tuple[str, str]:
    """Split COUNTRY_SECTOR on the first underscore."""
    if "_" not in label:
        raise TableFormatError(f"malformed header label {label!r}: expected COUNTRY_SECTOR")
    country, sector = label.split("_", 1)
    if not country or not sector:
        raise TableFormatError(f"malformed header label {label!r}")
    return country, sector


def parse_figaro_csv(path: str | Path, country: str,
                     expect_sectors: int | None = None) -> SocialAccountingMatrix:
    """Extract a single-country SAM from a table file.

    Dispatches on the file's first data line: ``sectors,``/``country,`` means
    the single-country exchange format, anything else the inter-country
    matrix layout. ``expect_sectors`` (64 for genuine FIGARO files) enforces
    the sector count.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        first = ""
        for line in fh:
            if line.strip() and not line.lstrip().startswith("#"):
                first = line
                break
    head = first.split(",")[0].strip().lower()
    if head in ("sectors", "country"):
        sam = read_sam_csv(path)
        if sam.country and country and sam.country != country:
            raise TableFormatError(
                f"file is for country {sam.country!r}, requested {country!r}"
            )
        sam.country = country or sam.country
    else:
        sam = _parse_intercountry_csv(path, country)
    if expect_sectors is not None and sam.n_sectors != expect_sectors:
        raise TableFormatError(
            f"expected {expect_sectors} sectors, found {sam.n_sectors}"
        )
    if sam.n_sectors < 2:
        raise TableFormatError("table must contain at least 2 sectors")
    return sam


def _parse_intercountry_csv(path: Path, country: str) -> SocialAccountingMatrix:
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if len(rows) < 2:
        raise TableFormatError(f"{path}: too few rows for a matrix table")

    header = [h.strip() for h in rows[0][1:]]
    if len(set(header)) != len(header):
        raise TableFormatError("malformed header: duplicate column labels")

    col_country: list[str] = []
    col_sector: list[str] = []
    for label in header:
        c, s = _split_label(label)
        col_country.append(c)
        col_sector.append(s)

    # Domestic industry columns in file order define the sector list.
    sector_codes = [s for c, s in zip(col_country, col_sector)
                    if c == country and s not in FINAL_USE_CODES]
    if not sector_codes:
        raise TableFormatError(f"country code {country!r} not present in table columns")
    if len(set(sector_codes)) != len(sector_codes):
        raise TableFormatError(f"duplicate sector columns for country {country!r}")
    n = len(sector_codes)
    sec_index = {code: i for i, code in enumerate(sector_codes)}

    dom_col = {}          # column position -> sector index (domestic industries)
    hh_cols, gov_cols, gfcf_cols = [], [], []
    foreign_cols = []     # every non-domestic column (industries + final use)
    for pos, (c, s) in enumerate(zip(col_country, col_sector)):
        if c == country:
            if s in FINAL_USE_HOUSEHOLD:
                hh_cols.append(pos)
            elif s in FINAL_USE_GOVERNMENT:
                gov_cols.append(pos)
            elif s in FINAL_USE_GFCF:
                gfcf_cols.append(pos)
            else:
                dom_col[pos] = sec_index[s]
        else:
            foreign_cols.append(pos)

    intermediates = np.zeros((n, n))
    household = np.zeros(n)
    government = np.zeros(n)
    gfcf = np.zeros(n)
    exports = np.zeros(n)
    imports = np.zeros(n)
    gross_output = np.zeros(n)
    va = {name: np.zeros(n) for name in (
        VA_ROW_COMPENSATION, VA_ROW_SURPLUS, VA_ROW_TAX_PRODUCTION,
        VA_ROW_TAX_PRODUCTS, VA_ROW_OP_RES, VA_ROW_OP_NRES)}
    seen_country = False

    for raw in rows[1:]:
        label = raw[0].strip()
        cells = raw[1:]
        if len(cells) != len(header):
            raise TableFormatError(
                f"row {label!r} has {len(cells)} cells, header has {len(header)}")
        rc, rs = _split_label(label)
        values = [_parse_cell(cells[pos], label, header[pos])
                  for pos in range(len(header))]

        if rc == VALUE_ADDED_COUNTRY:
            if rs in va:
                for pos, idx in dom_col.items():
                    va[rs][idx] = values[pos]
            continue
        if rc == country:
            seen_country = True
            if rs not in sec_index:
                raise TableFormatError(f"row sector {rs!r} missing from columns")
            i = sec_index[rs]
            for pos, idx in dom_col.items():
                intermediates[i][idx] = values[pos]
            household[i] = sum(values[p] for p in hh_cols)
            government[i] = sum(values[p] for p in gov_cols)
            gfcf[i] = sum(values[p] for p in gfcf_cols)
            exports[i] = sum(values[p] for p in foreign_cols)
            gross_output[i] = sum(values)
        else:
            # Foreign-supplied flows into any domestic column are imports of
            # that (foreign) sector's good type.
            if rs in sec_index:
                i = sec_index[rs]
                dom_positions = list(dom_col) + hh_cols + gov_cols + gfcf_cols
                imports[i] += sum(values[p] for p in dom_positions)

    if not seen_country:
        raise TableFormatError(f"country code {country!r} not present in table rows")

    sectors = [SectorId(i, code) for i, code in enumerate(sector_codes)]
    return SocialAccountingMatrix(
        country=country,
        sectors=sectors,
        intermediates=intermediates,
        compensation=va[VA_ROW_COMPENSATION],
        operating_surplus=va[VA_ROW_SURPLUS],
        taxes_production=va[VA_ROW_TAX_PRODUCTION],
        taxes_products=va[VA_ROW_TAX_PRODUCTS],
        op_res=va[VA_ROW_OP_RES],
        op_nres=va[VA_ROW_OP_NRES],
        household_consumption=household,
        government_consumption=government,
        gfcf=gfcf,
        exports=exports,
        imports=imports,
        gross_output=gross_output,
    )


_SAM_VECTOR_ROWS = (
    "compensation", "operating_surplus", "taxes_production", "taxes_products",
    "op_res", "op_nres", "household_consumption", "government_consumption",
    "gfcf", "exports", "imports", "gross_output",
)


def read_sam_csv(path: str | Path) -> SocialAccountingMatrix:
    """Read the single-country row-block SAM exchange format."""
    path = Path(path)
    country = ""
    codes: list[str] = []
    inter_rows: dict[str, list[float]] = {}
    vectors: dict[str, list[float]] = {}

    with path.open(newline="") as fh:
        for lineno, raw in enumerate(csv.reader(fh), start=1):
            if not raw or not any(c.strip() for c in raw):
                continue
            if raw[0].lstrip().startswith("#"):
                continue
            key = raw[0].strip()
            if key == "country":
                country = raw[1].strip()
            elif key == "sectors":
                codes = [c.strip() for c in raw[1:] if c.strip()]
            elif key == "intermediates":
                if not codes:
                    raise TableFormatError(f"line {lineno}: intermediates before sectors")
                code = raw[1].strip()
                inter_rows[code] = [_parse_cell(v, key, code) for v in raw[2:]]
            elif key in _SAM_VECTOR_ROWS:
                vectors[key] = [_parse_cell(v, key, str(i)) for i, v in enumerate(raw[1:])]
            else:
                raise TableFormatError(f"line {lineno}: unknown row key {key!r}")

    if not codes:
        raise TableFormatError("missing 'sectors' row")
    n = len(codes)
    missing = [k for k in _SAM_VECTOR_ROWS if k not in vectors]
    if missing:
        raise TableFormatError(f"missing SAM rows: {', '.join(missing)}")
    for k, v in vectors.items():
        if len(v) != n:
            raise TableFormatError(f"row {k!r} has {len(v)} values, expected {n}")
    intermediates = np.zeros((n, n))
    for i, code in enumerate(codes):
        if code not in inter_rows:
            raise TableFormatError(f"missing intermediates row for sector {code!r}")
        row = inter_rows[code]
        if len(row) != n:
            raise TableFormatError(f"intermediates row {code!r} has {len(row)} values")
        intermediates[i] = row

    sectors = [SectorId(i, c) for i, c in enumerate(codes)]
    return SocialAccountingMatrix(
        country=country,
        sectors=sectors,
        intermediates=intermediates,
        **{k: np.asarray(vectors[k], dtype=float) for k in _SAM_VECTOR_ROWS},
    )


def write_sam_csv(sam: SocialAccountingMatrix, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        if sam.country:
            w.writerow(["country", sam.country])
        w.writerow(["sectors"] + sam.codes)
        for i, code in enumerate(sam.codes):
            w.writerow(["intermediates", code] + [repr(float(v)) for v in sam.intermediates[i]])
        for name in _SAM_VECTOR_ROWS:
            w.writerow([name] + [repr(float(v)) for v in getattr(sam, name)])


def load_country_params(path: str | Path) -> CountryParams:
    """Read a key=value country parameters file."""
    values: dict[str, float] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise TableFormatError(f"params line {lineno}: expected key=value, got {line!r}")
        key, _, val = line.partition("=")
        try:
            values[key.strip()] = float(val.strip())
        except ValueError:
            raise TableFormatError(f"params line {lineno}: non-numeric value {val!r}") from None
    try:
        params = CountryParams(
            active_population=values["active_population"],
            nairu=values["nairu"],
            initial_cpi=values.get("initial_cpi", 1.0),
        )
    except KeyError as exc:
        raise TableFormatError(f"missing country parameter {exc.args[0]!r}") from None
    return params


def repair_sam(sam: SocialAccountingMatrix,
               policy: RepairPolicy = RepairPolicy()) -> tuple[SocialAccountingMatrix, RepairReport]:
    """Repair known table anomalies; total (never fails), idempotent.

    Flags near-zero-output sectors inactive, floors gross operating surplus
    at ``gos_floor_ratio`` of gross output, and flags (without modifying)
    negative production taxes.
    """
    out = sam.copy()
    report = RepairReport()

    total_output = float(np.sum(np.abs(out.gross_output)))
    eps = policy.output_epsilon_ratio * total_output
    inactive = []
    for i, code in enumerate(out.codes):
        if out.gross_output[i] <= eps:
            inactive.append(i)
            if i not in sam.inactive_sectors:
                report.add("inactive_sector", code, float(out.gross_output[i]),
                           float(out.gross_output[i]),
                           "gross output below threshold; excluded from coefficients")
    out.inactive_sectors = tuple(sorted(set(inactive)))

    floor = policy.gos_floor_ratio * out.gross_output
    for i, code in enumerate(out.codes):
        if i in out.inactive_sectors:
            continue
        if out.operating_surplus[i] < floor[i]:
            before = float(out.operating_surplus[i])
            out.operating_surplus[i] = floor[i]
            report.add("gos_floor", code, before, float(floor[i]), "GOS floored")

    if policy.flag_negative_production_taxes:
        for i, code in enumerate(out.codes):
            if out.taxes_production[i] < 0:
                v = float(out.taxes_production[i])
                report.add("negative_production_tax", code, v, v,
                           "kept as-is; outside validated range")

    return out, report


def repair_country_params(params: CountryParams,
                          policy: RepairPolicy = RepairPolicy()) -> tuple[CountryParams, RepairReport]:
    report = RepairReport()
    out = CountryParams(params.active_population, params.nairu, params.initial_cpi)
    if policy.fix_initial_cpi and out.initial_cpi <= 0:
        report.add("initial_cpi", "country", float(out.initial_cpi), 1.0,
                   "non-positive CPI anchor replaced")
        out.initial_cpi = 1.0
    out.validate()
    return out, report


def repair_inputs(sam: SocialAccountingMatrix, params: CountryParams,
                  policy: RepairPolicy = RepairPolicy(),
                  ) -> tuple[SocialAccountingMatrix, CountryParams, RepairReport]:
    """Repair the SAM and the country parameters in one pass."""
    sam2, report = repair_sam(sam, policy)
    params2, preport = repair_country_params(params, policy)
    report.actions.extend(preport.actions)
    return sam2, params2, report


def technical_coefficients(sam: SocialAccountingMatrix) -> CoefficientMatrix:
    """Per-unit input, factor, tax and import coefficients.

    Requires a repaired SAM: every sector with non-positive gross output must
    already carry the inactive flag, otherwise the division guard trips.
    """
    n = sam.n_sectors
    active = sam.active_mask()
    if np.any((sam.gross_output <= 0) & active):
        raise ValueError("division guard: non-positive gross output in an "
                         "active sector; run repair_sam first")
    denom = np.where(active, sam.gross_output, 1.0)

    a = np.where(active[None, :], sam.intermediates / denom[None, :], 0.0)
    a[~active, :] = 0.0

    def ratio(v: np.ndarray) -> np.ndarray:
        return np.where(active, v / denom, 0.0)

    return CoefficientMatrix(
        a=a,
        labor_coeff=ratio(sam.compensation),
        capital_coeff=ratio(sam.operating_surplus),
        tax_rate_production=ratio(sam.taxes_production),
        tax_rate_products=ratio(sam.taxes_products),
        import_coeff=ratio(sam.imports),
    )


def gdp_target(sam: SocialAccountingMatrix) -> float:
    """Total value added at market prices: the calibration reference."""
    return float(np.sum(sam.compensation) + np.sum(sam.operating_surplus)
                 + np.sum(sam.taxes_production) + np.sum(sam.taxes_products)
                 + np.sum(sam.op_res) + np.sum(sam.op_nres))
