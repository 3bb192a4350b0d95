"""Run orchestration: single runs, ensembles and multi-year panels.

Exit codes are a frozen contract:

    0  success (converged run / non-empty ensemble / panel written)
    1  unexpected internal error
    2  input error (missing file, parse failure, bad config)
    3  calibration timeout
    4  empty ensemble (every seed excluded or failed)

Every data file is reproducible byte-for-byte for a given config and seed;
wall-clock timestamps live only in ``metadata.json``.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import configparser
import csv
import dataclasses
import datetime
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import (
    CalibrationTimeout, ConvergenceCriteria, run_calibration, run_free_market,
    write_trace_csv,
)
from .config import ConfigError, RunConfig, load_run_config
from .engine import write_flows_csv, write_monthly_csv
from .forecast import (
    SeedRun, ensemble_stats, error_metrics, filter_seeds, ols_growth,
    point_to_point_growth,
)
from .io_table import (
    TableFormatError, gdp_target, load_country_params, parse_figaro_csv,
    repair_inputs, technical_coefficients,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INPUT = 2
EXIT_TIMEOUT = 3
EXIT_EMPTY_ENSEMBLE = 4


def _json_dump(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=1,
                               allow_nan=True, default=str) + "\n")


def _load_inputs(config: RunConfig):
    sam_raw = parse_figaro_csv(config.sam_path, config.country_code,
                               expect_sectors=config.figaro_sectors)
    params_raw = load_country_params(config.params_path)
    sam, params, repair_report = repair_inputs(sam_raw, params_raw,
                                               config.repair_policy)
    coeffs = technical_coefficients(sam)
    return sam, params, coeffs, repair_report


def run_single(config: RunConfig, seed: int) -> tuple[int, dict]:
    """One calibrated run plus free-market months; writes a run directory.

    Inputs are parsed before any output is created, so input errors leave no
    partial run directory behind.
    """
    sam, params, coeffs, repair_report = _load_inputs(config)
    constants = config.constants()
    criteria = ConvergenceCriteria(timeout_months=config.timeout_months)

    run_dir = config.output_dir / f"seed_{seed}"
    run_dir.mkdir(parents=True, exist_ok=True)

    summary: dict = {
        "seed": seed,
        "country": sam.country,
        "scale": config.scale,
        "free_market_months": config.free_market_months,
        "gdp_target": gdp_target(sam),
        "repairs": [dataclasses.asdict(a) for a in repair_report.actions],
        "version": __version__,
    }

    try:
        calibrated = run_calibration(sam, params, constants, seed,
                                     coeffs=coeffs, criteria=criteria)
    except CalibrationTimeout as exc:
        write_trace_csv(exc.trace, run_dir / "calibration_trace.csv")
        summary.update(status="timeout", timeout_months=exc.months)
        _json_dump(summary, run_dir / "run_summary.json")
        _write_metadata(run_dir)
        return EXIT_TIMEOUT, summary

    fm_reports = run_free_market(calibrated, config.free_market_months,
                                 timeline=config.timeline)
    state = calibrated.state
    all_reports = calibrated.reports + fm_reports

    write_monthly_csv(all_reports, sam.codes, run_dir / "monthly.csv")
    write_flows_csv(fm_reports, sam.codes, run_dir / "flows.csv")
    write_trace_csv(calibrated.trace, run_dir / "calibration_trace.csv")

    real = [r.real_gdp for r in fm_reports]
    nominal = [r.nominal_gdp for r in fm_reports]
    unemp = [r.unemployment_rate for r in fm_reports]
    growth, r2 = ols_growth(real[:12])
    collapse = any(r.collapsed for r in fm_reports)

    n = sam.n_sectors
    mean_inter = np.mean([r.flows_intermediate for r in fm_reports], axis=0) * 12.0
    mean_vec = {
        name: (np.mean([getattr(r, f"flows_{name}") for r in fm_reports], axis=0)
               * 12.0).tolist()
        for name in ("household", "government", "gfcf", "exports", "imports")
    }
    summary.update(
        status="collapsed" if collapse else "converged",
        convergence_month=calibrated.convergence_month,
        fm_entry_month=calibrated.fm_entry_month,
        micro_share_at_entry=calibrated.micro_share_at_entry,
        growth_ols_pct=growth,
        r_squared=r2,
        growth_point_to_point_pct=point_to_point_growth(real, span=12),
        mean_annual_nominal_gdp=12.0 * float(np.mean(nominal)),
        mean_unemployment=float(np.mean(unemp)),
        collapse=collapse,
        firm_count=len(state.firms),
        real_gdp_series=real,
        nominal_gdp_series=nominal,
        unemployment_series=unemp,
        mean_annual_flows={"intermediates": mean_inter.tolist(), **mean_vec,
                           "sectors": sam.codes, "n_sectors": n},
    )
    _json_dump(summary, run_dir / "run_summary.json")
    _write_metadata(run_dir)
    return EXIT_OK, summary


def _write_metadata(run_dir: Path) -> None:
    meta = {"written_at": datetime.datetime.now(datetime.timezone.utc).isoformat()}
    _json_dump(meta, run_dir / "metadata.json")


def _seed_worker(config: RunConfig, seed: int) -> dict:
    try:
        code, summary = run_single(config, seed)
        summary["exit_code"] = code
        return summary
    except (ConfigError, TableFormatError) as exc:
        return {"seed": seed, "status": "input_error", "error": str(exc),
                "exit_code": EXIT_INPUT}
    except Exception as exc:  # per-seed failures must not abort the ensemble
        return {"seed": seed, "status": "failed", "error": repr(exc),
                "exit_code": EXIT_ERROR}


def run_ensemble(config: RunConfig, jobs: int = 1,
                 outlier_filter: bool = False) -> tuple[int, dict]:
    """Run every configured seed (optionally in parallel workers), filter,
    and aggregate. Aggregation is a deterministic reduce keyed by seed."""
    sam, _params, _coeffs, _rep = _load_inputs(config)
    config.output_dir.mkdir(parents=True, exist_ok=True)

    seeds = list(config.seeds)
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {seed: pool.submit(_seed_worker, config, seed)
                       for seed in seeds}
            results = {seed: futures[seed].result() for seed in seeds}
    else:
        results = {seed: _seed_worker(config, seed) for seed in seeds}

    runs: list[SeedRun] = []
    failures: list[dict] = []
    for seed in seeds:
        s = results[seed]
        if s.get("status") in ("converged", "collapsed"):
            runs.append(SeedRun(
                seed=seed, converged=True,
                collapse_flag=bool(s.get("collapse", False)),
                real_gdp=s["real_gdp_series"],
                nominal_gdp=s["nominal_gdp_series"],
                unemployment=s["unemployment_series"],
                micro_share_at_entry=s.get("micro_share_at_entry", float("nan")),
            ))
        elif s.get("status") == "timeout":
            runs.append(SeedRun(seed=seed, converged=False, collapse_flag=False))
        else:
            failures.append(s)

    kept, excluded = filter_seeds(runs, sam, outlier_filter=outlier_filter)
    per_seed_rows = []
    kept_ids = {r.seed for r in kept}
    exclusion_by_seed = {e.seed: e for e in excluded}
    for seed in seeds:
        s = results[seed]
        row = {
            "seed": seed,
            "status": s.get("status"),
            "kept": seed in kept_ids,
            "exclusion_rule": (exclusion_by_seed[seed].rule
                               if seed in exclusion_by_seed else ""),
            "growth_ols_pct": s.get("growth_ols_pct"),
            "r_squared": s.get("r_squared"),
            "mean_annual_nominal_gdp": s.get("mean_annual_nominal_gdp"),
            "mean_unemployment": s.get("mean_unemployment"),
        }
        per_seed_rows.append(row)

    ensemble: dict = {
        "seeds": seeds,
        "per_seed": per_seed_rows,
        "failures": failures,
        "excluded": [dataclasses.asdict(e) for e in excluded],
        "gdp_target": gdp_target(sam),
        "outlier_filter": outlier_filter,
    }
    code = EXIT_OK
    if kept:
        stats = ensemble_stats(kept)
        ensemble["stats"] = {
            "kept_seeds": stats.kept_seeds,
            "n_kept": len(stats.kept_seeds),
            "mean_growth_pct": stats.mean_growth,
            "sd_pp": stats.sd,
            "sem_pp": stats.sem,
            "running_mean": stats.running_mean,
            "flags": stats.flags,
            "per_seed_growth": {str(k): v for k, v in stats.per_seed_growth.items()},
            "per_seed_r2": {str(k): v for k, v in stats.per_seed_r2.items()},
        }
    else:
        ensemble["stats"] = None
        code = EXIT_EMPTY_ENSEMBLE

    _json_dump(ensemble, config.output_dir / "ensemble_summary.json")
    with (config.output_dir / "ensemble_summary.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        cols = ["seed", "status", "kept", "exclusion_rule", "growth_ols_pct",
                "r_squared", "mean_annual_nominal_gdp", "mean_unemployment"]
        w.writerow(cols)
        for row in per_seed_rows:
            w.writerow([row[c] for c in cols])
    return code, ensemble


def load_benchmark_csv(path: Path) -> dict[int, float]:
    """Benchmark file: CSV rows of year, actual growth (header optional)."""
    out: dict[int, float] = {}
    with path.open(newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                year = int(row[0])
                out[year] = float(row[1])
            except (ValueError, IndexError):
                continue  # header or malformed row
    if not out:
        raise TableFormatError(f"benchmark file {path} has no year rows")
    return out


def run_panel(panel_path: Path, jobs: int = 1,
              outlier_filter: bool = False) -> tuple[int, dict]:
    """Multi-year panel: one independent ensemble per calibration year,
    joined against a benchmark series with Table-2-style error metrics."""
    cp = configparser.ConfigParser(interpolation=None, strict=True,
                                   inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    if not panel_path.exists():
        raise ConfigError(f"panel config not found: {panel_path}")
    cp.read(panel_path)
    if "panel" not in cp:
        raise ConfigError("missing [panel] section")
    base = panel_path.parent
    bench_path = cp["panel"].get("benchmark", "").strip()
    benchmark = (load_benchmark_csv(base / bench_path if not Path(bench_path).is_absolute()
                                    else Path(bench_path)) if bench_path else {})
    out_dir = Path(cp["panel"].get("output_dir", "panel_out"))
    if not out_dir.is_absolute():
        out_dir = base / out_dir
    out_dir.mkdir(parents=True, exist_ok=True)

    years = []
    for sec in cp.sections():
        if sec.startswith("panel.year."):
            years.append((int(sec.split(".")[-1]), sec))
    years.sort()
    if not years:
        raise ConfigError("panel declares no [panel.year.N] sections")

    rows = []
    for year, sec in years:
        cfg = load_run_config(base / cp[sec]["config"]
                              if not Path(cp[sec]["config"]).is_absolute()
                              else Path(cp[sec]["config"]))
        cfg.output_dir = out_dir / f"year_{year}"
        forecast_year = int(cp[sec].get("forecast_year", year + 1))
        code, ens = run_ensemble(cfg, jobs=jobs, outlier_filter=outlier_filter)
        row = {"calibration_year": year, "forecast_year": forecast_year,
               "ensemble_exit": code}
        if ens.get("stats"):
            row.update(mean_growth_pct=ens["stats"]["mean_growth_pct"],
                       sd_pp=ens["stats"]["sd_pp"], sem_pp=ens["stats"]["sem_pp"],
                       n_kept=ens["stats"]["n_kept"])
        else:
            row.update(mean_growth_pct=None, sd_pp=None, sem_pp=None, n_kept=0)
        if forecast_year in benchmark and row["mean_growth_pct"] is not None:
            row["actual_pct"] = benchmark[forecast_year]
            row["error_pp"] = row["mean_growth_pct"] - benchmark[forecast_year]
        else:
            row["actual_pct"] = None
            row["error_pp"] = None
            row["flag"] = "no_benchmark" if forecast_year not in benchmark else "no_forecast"
        rows.append(row)

    paired = [(r["mean_growth_pct"], r["actual_pct"]) for r in rows
              if r["actual_pct"] is not None and r["mean_growth_pct"] is not None]
    metrics = (error_metrics([p[0] for p in paired], [p[1] for p in paired])
               if paired else None)

    panel = {"years": rows, "metrics": metrics}
    _json_dump(panel, out_dir / "panel_summary.json")
    with (out_dir / "panel_report.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        cols = ["calibration_year", "forecast_year", "n_kept",
                "mean_growth_pct", "sd_pp", "sem_pp", "actual_pct", "error_pp"]
        w.writerow(cols)
        for r in rows:
            w.writerow([r.get(c) for c in cols])
    return EXIT_OK, panel


def _apply_overrides(config: RunConfig, args) -> None:
    if args.timeout_months is not None:
        config.timeout_months = args.timeout_months
    if args.scale is not None:
        config.scale = args.scale
    if getattr(args, "output", None):
        config.output_dir = Path(args.output)
    config.validate()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ioabm",
        description="Agent-based input-output economy simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="run config file")
    common.add_argument("--timeout-months", type=int, default=None)
    common.add_argument("--scale", type=int, default=None,
                        help="workers per sector override")
    common.add_argument("--output", default=None, help="output directory override")

    p_run = sub.add_parser("run", parents=[common], help="single seeded run")
    p_run.add_argument("--seed", type=int, default=None,
                       help="seed (default: first configured seed)")

    p_ens = sub.add_parser("ensemble", parents=[common], help="multi-seed ensemble")
    p_ens.add_argument("--jobs", type=int, default=1, help="parallel seed workers")
    p_ens.add_argument("--outlier-filter", action="store_true",
                       help="also exclude |growth| > 20%% outliers")

    p_panel = sub.add_parser("panel", help="multi-year panel with benchmarks")
    p_panel.add_argument("--config", required=True, help="panel config file")
    p_panel.add_argument("--jobs", type=int, default=1)
    p_panel.add_argument("--outlier-filter", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            config = load_run_config(args.config)
            _apply_overrides(config, args)
            seed = args.seed if args.seed is not None else config.seeds[0]
            code, summary = run_single(config, seed)
            status = summary.get("status")
            print(f"run seed={seed} status={status} "
                  f"growth={summary.get('growth_ols_pct')}")
            return code
        if args.command == "ensemble":
            config = load_run_config(args.config)
            _apply_overrides(config, args)
            code, ens = run_ensemble(config, jobs=args.jobs,
                                     outlier_filter=args.outlier_filter)
            stats = ens.get("stats")
            if stats:
                print(f"ensemble kept={stats['n_kept']}/{len(ens['seeds'])} "
                      f"mean={stats['mean_growth_pct']:.3f}% "
                      f"sd={stats['sd_pp']:.3f}pp sem={stats['sem_pp']:.3f}pp")
            else:
                print("ensemble empty: every seed excluded or failed")
            return code
        if args.command == "panel":
            code, panel = run_panel(Path(args.config), jobs=args.jobs,
                                    outlier_filter=args.outlier_filter)
            if panel["metrics"]:
                m = panel["metrics"]
                print(f"panel MAE={m['mae']:.3f}pp RMSE={m['rmse']:.3f}pp "
                      f"signed={m['mean_signed']:+.3f}pp "
                      f"within1pp={m['within_1pp_count']}/{m['n']}")
            return code
    except (ConfigError, TableFormatError, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CalibrationTimeout as exc:
        print(f"timeout: {exc}", file=sys.stderr)
        return EXIT_TIMEOUT
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
