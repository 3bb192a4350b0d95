"""Declarative run configuration.

One INI-style file fully determines a run::

    [run]
    sam = fixtures/synthetic4/table.csv
    country = SY
    params = fixtures/synthetic4/params.txt
    scale = 8                  ; workers per sector
    free_market_months = 12
    seeds = 5489, 12345, 67890
    output_dir = out
    timeout_months = 600
    figaro_sectors =           ; set to 64 to enforce FIGARO mode
    timeline = shocks.ini      ; optional external timeline file

    [repair]
    gos_floor_ratio = 0.01
    output_epsilon_ratio = 1e-9
    fix_initial_cpi = true

    [constants]
    smoothing_alpha = 0.02     ; any ModelConstants field may be overridden

An optional embedded ``[PANDEMIC_TIMELINE]`` block (with its per-month
sections) encodes a shock scenario; relative paths resolve against the
config file's directory.
"""

from __future__ import annotations

import configparser
import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path

from .economy import ModelConstants
from .forecast import DEFAULT_SEEDS
from .io_table import RepairPolicy
from .shocks import TIMELINE_SECTION, PandemicTimeline, parse_timeline

OUTPUT_ROOT_ENV = "IOABM_OUTPUT_ROOT"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    sam_path: Path
    params_path: Path
    country_code: str = ""
    scale: int = 32
    free_market_months: int = 12
    seeds: list[int] = field(default_factory=lambda: list(DEFAULT_SEEDS))
    timeline: PandemicTimeline | None = None
    output_dir: Path = Path("out")
    timeout_months: int = 600
    figaro_sectors: int | None = None
    repair_policy: RepairPolicy = RepairPolicy()
    constants_overrides: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.scale < 4:
            raise ConfigError("scale must be >= 4 workers per sector")
        if self.free_market_months < 12:
            raise ConfigError("free_market_months must be >= 12 for the "
                              "12-month growth regression")
        if not self.seeds:
            raise ConfigError("at least one seed is required")

    def constants(self) -> ModelConstants:
        overrides = dict(self.constants_overrides)
        overrides["workers_per_sector"] = self.scale
        return ModelConstants(**overrides)


def _resolve(base: Path, value: str) -> Path:
    p = Path(value)
    return p if p.is_absolute() else base / p


def load_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser(interpolation=None, strict=True,
                                   inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if "run" not in cp:
        raise ConfigError(f"{path}: missing [run] section")
    run = cp["run"]
    base = path.parent

    try:
        sam_path = _resolve(base, run["sam"])
        params_path = _resolve(base, run["params"])
    except KeyError as exc:
        raise ConfigError(f"{path}: missing run.{exc.args[0]}") from None

    seeds_raw = run.get("seeds", "")
    seeds = ([int(s) for s in seeds_raw.replace(",", " ").split()]
             if seeds_raw.strip() else list(DEFAULT_SEEDS))

    out_root = os.environ.get(OUTPUT_ROOT_ENV)
    output_dir = run.get("output_dir", "out")
    if out_root and not Path(output_dir).is_absolute():
        output = Path(out_root) / output_dir
    else:
        output = _resolve(base, output_dir)

    figaro = run.get("figaro_sectors", "").strip()

    timeline = None
    if run.get("timeline", "").strip():
        timeline_path = _resolve(base, run["timeline"].strip())
        if not timeline_path.exists():
            raise ConfigError(f"timeline file not found: {timeline_path}")
        timeline = parse_timeline(timeline_path.read_text())
    embedded = [s for s in cp.sections()
                if s == TIMELINE_SECTION or s.startswith(TIMELINE_SECTION + ".")]
    if embedded:
        if timeline is not None:
            raise ConfigError("both an embedded timeline and a timeline file given")
        block_lines = []
        for sec in embedded:
            block_lines.append(f"[{sec}]")
            for k, v in cp[sec].items():
                block_lines.append(f"{k} = {v}")
        timeline = parse_timeline("\n".join(block_lines))

    policy_kwargs = {}
    if "repair" in cp:
        rep = cp["repair"]
        if rep.get("gos_floor_ratio"):
            policy_kwargs["gos_floor_ratio"] = rep.getfloat("gos_floor_ratio")
        if rep.get("output_epsilon_ratio"):
            policy_kwargs["output_epsilon_ratio"] = rep.getfloat("output_epsilon_ratio")
        if rep.get("fix_initial_cpi"):
            policy_kwargs["fix_initial_cpi"] = rep.getboolean("fix_initial_cpi")

    overrides = {}
    if "constants" in cp:
        valid = {f.name: f.type for f in dataclasses.fields(ModelConstants)}
        for key, raw in cp["constants"].items():
            if key not in valid:
                raise ConfigError(f"unknown constants override {key!r}")
            caster = int if valid[key] in (int, "int") else float
            overrides[key] = caster(raw)

    cfg = RunConfig(
        sam_path=sam_path, params_path=params_path,
        country_code=run.get("country", "").strip(),
        scale=run.getint("scale", 32),
        free_market_months=run.getint("free_market_months", 12),
        seeds=seeds, timeline=timeline, output_dir=output,
        timeout_months=run.getint("timeout_months", 600),
        figaro_sectors=int(figaro) if figaro else None,
        repair_policy=RepairPolicy(**policy_kwargs),
        constants_overrides=overrides,
    )
    cfg.validate()
    return cfg
