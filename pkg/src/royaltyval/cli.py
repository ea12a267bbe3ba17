"""Command-line pipeline: validate, curves, multipliers, value, compare, synth.

Global flags (--config, --format, --out) come before the subcommand.
Settings resolve as command-line flag over config-file value over built-in
default. All outputs are plain CSV/JSON with no timestamps, so a command
run twice on the same inputs produces byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Iterable, Sequence

from . import curves as curves_mod
from . import ingest, market, synth
from .model import MissingCellError, MultiplierTable, ShareSurface, multiplier_table, price

MULTIPLIERS_HEADER = ("base_age", "duration", "level", "multiplier")
REJECTED_QUOTES_HEADER = ("asset_id", "reason")
COMPARE_ERRORS_HEADER = ("asset_id", "error")

__all__ = ["Config", "load_config_file", "main"]


@dataclass(frozen=True)
class Config:
    rate: float = 0.10
    percentile_levels: tuple[float, ...] = (10.0, 50.0, 90.0)
    dollar_age_tolerance: float = 0.30
    zero_floor: float = 0.0
    min_cohort: int = 5
    max_duration: int = 10
    min_bid_ask_ratio: float = 0.5
    output_format: str = "csv"

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("rate must be >= 0")
        if not self.percentile_levels:
            raise ValueError("percentile_levels must be non-empty")
        for p in self.percentile_levels:
            if not 0.0 < p < 100.0:
                raise ValueError(f"percentile level {p!r} outside (0, 100)")
        if self.dollar_age_tolerance < 0:
            raise ValueError("dollar_age_tolerance must be >= 0")
        if self.zero_floor < 0:
            raise ValueError("zero_floor must be >= 0")
        if self.min_cohort < 1:
            raise ValueError("min_cohort must be >= 1")
        if self.max_duration < 1:
            raise ValueError("max_duration must be >= 1")
        if not 0.0 <= self.min_bid_ask_ratio <= 1.0:
            raise ValueError("min_bid_ask_ratio must be in [0, 1]")
        if self.output_format not in ("csv", "json"):
            raise ValueError("output_format must be 'csv' or 'json'")


_CONFIG_FIELDS = {f.name for f in fields(Config)}


def load_config_file(path: str | Path) -> dict:
    """Read a flat JSON config; unknown keys are an error to catch typos."""
    with open(path, "r", encoding="utf-8") as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    unknown = set(data) - _CONFIG_FIELDS
    if unknown:
        raise ValueError(f"{path}: unknown config keys: {sorted(unknown)}")
    if "percentile_levels" in data:
        levels = data["percentile_levels"]
        if not isinstance(levels, list):
            raise ValueError(f"{path}: percentile_levels must be a list")
        data["percentile_levels"] = tuple(sorted(float(p) for p in levels))
    return data


def _resolve_config(args: argparse.Namespace) -> Config:
    overrides: dict = {}
    if args.config is not None:
        overrides.update(load_config_file(args.config))
    if getattr(args, "format", None) is not None:
        overrides["output_format"] = args.format
    for flag, field in (
        ("rate", "rate"),
        ("tolerance", "dollar_age_tolerance"),
        ("min_cohort", "min_cohort"),
        ("max_duration", "max_duration"),
        ("min_bid_ask_ratio", "min_bid_ask_ratio"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[field] = value
    return replace(Config(), **overrides)


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------

def _write_csv(path: Path, header: tuple[str, ...], rows: Iterable[Sequence[str]]):
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path: Path, payload) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _fail(message: str) -> None:
    print(f"error: {message}", file=sys.stderr)


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# Shared pipeline steps
# ---------------------------------------------------------------------------

def _load_dataset(args, cfg: Config):
    records = ingest.parse_cashflows(args.cashflows)
    ages = ingest.parse_assets(args.assets)
    raw = ingest.assemble_raw_assets(records, ages)
    return ingest.build_dataset(
        raw,
        zero_floor=cfg.zero_floor,
        dollar_age_tolerance=cfg.dollar_age_tolerance,
    )


def _surface_for(args, cfg: Config, levels: tuple[float, ...]) -> ShareSurface:
    """Surface from --surface file when given, else built from data paths."""
    if getattr(args, "surface", None) is not None:
        return curves_mod.load_surface(args.surface)
    if args.cashflows is None or args.assets is None or args.age is None:
        raise ValueError("need either --surface or --cashflows/--assets/--age")
    dataset, _ = _load_dataset(args, cfg)
    return curves_mod.build_surface(
        dataset,
        args.age,
        levels,
        max_horizon=cfg.max_duration,
        min_cohort=cfg.min_cohort,
    )


def _multiplier_json(table: MultiplierTable) -> dict:
    return {
        "base_age": table.base_age,
        "discount_rate": table.discount_rate,
        "entries": [
            {"duration": d, "level": p, "multiplier": table.entries[(d, p)]}
            for d in table.durations
            for p in table.levels
        ],
    }


def _multiplier_csv_rows(table: MultiplierTable) -> list[tuple[str, ...]]:
    return [
        (str(table.base_age), str(d), f"{p:g}", f"{table.entries[(d, p)]:.6f}")
        for d in table.durations
        for p in table.levels
    ]


def _band_surfaces(dataset, cfg: Config) -> dict[int, ShareSurface]:
    """Usable m10/m50/m90 surfaces for every integer age the data reaches."""
    surfaces: dict[int, ShareSurface] = {}
    if not dataset:
        return surfaces
    top_age = math.ceil(max(a.dollar_age for a in dataset))
    for t in range(1, top_age + 1):
        surface = curves_mod.build_surface(
            dataset,
            t,
            market.BAND_LEVELS,
            max_horizon=cfg.max_duration,
            min_cohort=cfg.min_cohort,
        )
        if surface.cell_horizons():
            surfaces[t] = surface
    return surfaces


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _cmd_validate(args, cfg: Config) -> int:
    out = _out_dir(args)
    _, report = _load_dataset(args, cfg)
    ingest.write_filter_report_csv(out / "filter_report.csv", report)
    _write_json(out / "filter_summary.json", report.summary())
    print(f"accepted {report.accepted_count} of {report.total} assets")
    return 0 if report.accepted_count >= 1 else 2


def _cmd_curves(args, cfg: Config) -> int:
    out = _out_dir(args)
    dataset, _ = _load_dataset(args, cfg)
    surface = curves_mod.build_surface(
        dataset,
        args.age,
        cfg.percentile_levels,
        max_horizon=cfg.max_duration,
        min_cohort=cfg.min_cohort,
    )
    if not surface.cell_horizons():
        _fail(
            f"no cohort of at least {cfg.min_cohort} assets at any horizon "
            f"for base age {args.age}"
        )
        return 2
    if cfg.output_format == "json":
        _write_json(out / f"surface_age{args.age}.json", curves_mod.surface_to_json_dict(surface))
    else:
        _write_csv(
            out / f"surface_age{args.age}.csv",
            curves_mod.SURFACE_HEADER,
            curves_mod.surface_csv_rows(surface),
        )
    return 0


def _cmd_multipliers(args, cfg: Config) -> int:
    out = _out_dir(args)
    surface = _surface_for(args, cfg, cfg.percentile_levels)
    max_duration = args.durations if args.durations is not None else cfg.max_duration
    try:
        table = multiplier_table(surface, cfg.rate, max_duration)
    except MissingCellError as exc:
        _fail(str(exc))
        return 2
    if cfg.output_format == "json":
        _write_json(out / f"multipliers_age{table.base_age}.json", _multiplier_json(table))
    else:
        _write_csv(
            out / f"multipliers_age{table.base_age}.csv",
            MULTIPLIERS_HEADER,
            _multiplier_csv_rows(table),
        )
    return 0


def _cmd_value(args, cfg: Config) -> int:
    if args.ltm is None or not (math.isfinite(args.ltm) and args.ltm > 0):
        _fail("--ltm must be a positive amount")
        return 1
    surface = _surface_for(args, cfg, market.BAND_LEVELS)
    try:
        table = multiplier_table(surface, cfg.rate, args.duration)
        band = [
            (p, table.entry(args.duration, p)) for p in market.BAND_LEVELS
        ]
    except MissingCellError as exc:
        _fail(str(exc))
        return 2
    print("level,multiplier,price")
    for p, mult in band:
        print(f"{p:g},{mult:.6f},{price(mult, args.ltm):.2f}")
    return 0


def _cmd_compare(args, cfg: Config) -> int:
    out = _out_dir(args)
    quotes = market.parse_quotes(args.quotes)
    if not quotes:
        _fail(f"no quotes in {args.quotes}")
        return 2
    dataset, _ = _load_dataset(args, cfg)
    accepted, rejected = market.filter_quotes(
        quotes, cfg.max_duration, cfg.min_bid_ask_ratio
    )
    surfaces = _band_surfaces(dataset, cfg)
    rows, errors = market.compare(accepted, surfaces, cfg.rate)

    _write_csv(
        out / "rejected_quotes.csv",
        REJECTED_QUOTES_HEADER,
        [(q.asset_id, reason.value) for q, reason in rejected],
    )
    _write_csv(
        out / "comparison_errors.csv",
        COMPARE_ERRORS_HEADER,
        [(e.asset_id, e.message) for e in errors],
    )
    by_duration = market.aggregate_plot_data(rows, "duration")
    by_age = market.aggregate_plot_data(rows, "dollar_age_bucket")
    if cfg.output_format == "json":
        _write_json(out / "comparison.json", _comparison_json(rows, errors))
        _write_json(out / "by_duration.json", _plot_json("duration", by_duration))
        _write_json(out / "by_dollar_age.json", _plot_json("dollar_age_bucket", by_age))
    else:
        _write_csv(out / "comparison.csv", market.COMPARISON_HEADER, market.comparison_csv_rows(rows))
        _write_csv(out / "by_duration.csv", market.PLOT_HEADER, market.plot_csv_rows(by_duration))
        _write_csv(out / "by_dollar_age.csv", market.PLOT_HEADER, market.plot_csv_rows(by_age))
    return 0 if rows else 2


def _comparison_json(rows, errors) -> dict:
    return {
        "rows": [
            {
                "asset_id": r.asset_id,
                "duration": r.duration,
                "dollar_age": r.dollar_age,
                "bid_multiplier": r.bid_multiplier,
                "ask_multiplier": r.ask_multiplier,
                "model_m10": r.model_m10,
                "model_m50": r.model_m50,
                "model_m90": r.model_m90,
                "bid_gap_to_m10": r.bid_gap_to_m10,
                "ask_gap_to_m50": r.ask_gap_to_m50,
            }
            for r in rows
        ],
        "errors": [{"asset_id": e.asset_id, "error": e.message} for e in errors],
    }


def _plot_json(axis: str, groups) -> dict:
    return {
        "axis": axis,
        "groups": [
            {
                "axis_value": g.axis_value,
                "n": g.n,
                "mean_bid_mult": g.mean_bid_mult,
                "mean_ask_mult": g.mean_ask_mult,
                "mean_m10": g.mean_m10,
                "mean_m50": g.mean_m50,
                "mean_m90": g.mean_m90,
            }
            for g in groups
        ],
    }


def _cmd_synth(args, cfg: Config) -> int:
    out = _out_dir(args)
    with open(args.spec, "r", encoding="utf-8") as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as exc:
            _fail(f"{args.spec}: invalid JSON: {exc}")
            return 1
    try:
        spec = synth.PopulationSpec.from_json_dict(data)
    except ValueError as exc:
        _fail(f"{args.spec}: {exc}")
        return 1
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)

    population = synth.gen_population(spec)
    ingest.write_cashflows_csv(out / "cashflows.csv", population)
    ingest.write_assets_csv(out / "assets.csv", population)

    dataset, _ = ingest.build_dataset(
        population,
        zero_floor=cfg.zero_floor,
        dollar_age_tolerance=cfg.dollar_age_tolerance,
    )
    quotes = synth.gen_quotes(
        dataset,
        rate=cfg.rate,
        bid_level=10.0,
        ask_level=50.0,
        seed=spec.seed,
        noise=0.05,
        min_cohort=cfg.min_cohort,
        max_duration=cfg.max_duration,
    )
    market.write_quotes_csv(out / "quotes.csv", quotes)
    return 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="royaltyval",
        description="Valuation bands for royalty catalogs from cohort share curves.",
    )
    parser.add_argument("--config", help="flat JSON config file")
    parser.add_argument("--format", choices=("csv", "json"), help="output format")
    parser.add_argument("--out", default=".", help="output directory (default: .)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_data_flags(p, required=True):
        p.add_argument("--cashflows", required=required, help="cashflows.csv path")
        p.add_argument("--assets", required=required, help="assets.csv path")

    p = sub.add_parser("validate", help="run the ingest filters, write a report")
    add_data_flags(p)
    p.add_argument("--tolerance", type=float, help="dollar-age tolerance (default 0.30)")
    p.set_defaults(handler=_cmd_validate)

    p = sub.add_parser("curves", help="build a percentile share surface")
    add_data_flags(p)
    p.add_argument("--age", type=int, required=True, help="base age in years")
    p.add_argument("--tolerance", type=float)
    p.add_argument("--min-cohort", dest="min_cohort", type=int)
    p.add_argument("--max-duration", dest="max_duration", type=int)
    p.set_defaults(handler=_cmd_curves)

    p = sub.add_parser("multipliers", help="discount a surface into multiplier bands")
    add_data_flags(p, required=False)
    p.add_argument("--surface", help="surface .csv/.json (alternative to data paths)")
    p.add_argument("--age", type=int, help="base age when building from data")
    p.add_argument("--rate", type=float, help="discount rate (default 0.10)")
    p.add_argument("--durations", type=int, help="longest duration to tabulate")
    p.add_argument("--tolerance", type=float)
    p.add_argument("--min-cohort", dest="min_cohort", type=int)
    p.add_argument("--max-duration", dest="max_duration", type=int)
    p.set_defaults(handler=_cmd_multipliers)

    p = sub.add_parser("value", help="price an LTM figure with the model band")
    add_data_flags(p, required=False)
    p.add_argument("--surface")
    p.add_argument("--age", type=int)
    p.add_argument("--ltm", type=float, required=True, help="last-twelve-months revenue")
    p.add_argument("--duration", type=int, required=True, help="contract duration in years")
    p.add_argument("--rate", type=float)
    p.add_argument("--tolerance", type=float)
    p.add_argument("--min-cohort", dest="min_cohort", type=int)
    p.add_argument("--max-duration", dest="max_duration", type=int)
    p.set_defaults(handler=_cmd_value)

    p = sub.add_parser("compare", help="compare market quotes against model bands")
    add_data_flags(p)
    p.add_argument("--quotes", required=True, help="quotes.csv path")
    p.add_argument("--rate", type=float)
    p.add_argument("--tolerance", type=float)
    p.add_argument("--min-cohort", dest="min_cohort", type=int)
    p.add_argument("--max-duration", dest="max_duration", type=int)
    p.add_argument("--min-bid-ask-ratio", dest="min_bid_ask_ratio", type=float)
    p.set_defaults(handler=_cmd_compare)

    p = sub.add_parser("synth", help="generate a synthetic dataset with quotes")
    p.add_argument("--spec", required=True, help="population spec JSON")
    p.add_argument("--seed", type=int, help="override the spec's seed")
    p.add_argument("--rate", type=float)
    p.add_argument("--tolerance", type=float)
    p.add_argument("--min-cohort", dest="min_cohort", type=int)
    p.add_argument("--max-duration", dest="max_duration", type=int)
    p.set_defaults(handler=_cmd_synth)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
        return args.handler(args, cfg)
    except ingest.ParseError as exc:
        _fail(str(exc))
        return 1
    except OSError as exc:
        _fail(str(exc))
        return 1
    except ValueError as exc:
        _fail(str(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
