"""Percentile revenue-share surfaces estimated from an accepted dataset.

For a base age t and horizon i, the observed share of an asset is its
year-(t+i) revenue divided by its year-t revenue. The cohort at (t, i) is
every asset old enough (dollar age at or above t+i) whose annual buckets
exist at both years; surfaces store chosen percentiles of those cohorts.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, TextIO, Union

from .model import Asset, ShareSurface

DEFAULT_LEVELS = (10.0, 50.0, 90.0)
DEFAULT_MIN_COHORT = 5

SURFACE_HEADER = ("base_age", "horizon", "level", "share", "cohort_size")

__all__ = [
    "DEFAULT_LEVELS",
    "DEFAULT_MIN_COHORT",
    "SURFACE_HEADER",
    "Cohort",
    "build_cohort",
    "build_surface",
    "load_surface",
    "observed_share",
    "parse_surface_csv",
    "percentile",
    "surface_csv_rows",
    "surface_from_json_dict",
    "surface_rows_to_surface",
    "surface_to_json_dict",
]


@dataclass(frozen=True)
class Cohort:
    """Assets contributing an observed share at one (base age, horizon)."""

    base_age: int
    horizon: int
    member_ids: tuple[str, ...]
    shares: tuple[float, ...]

    def __post_init__(self):
        if len(self.member_ids) != len(self.shares):
            raise ValueError("member_ids and shares must align")
        if list(self.member_ids) != sorted(self.member_ids):
            raise ValueError("member_ids must be sorted")
        for s in self.shares:
            if not math.isfinite(s) or s <= 0.0:
                raise ValueError("cohort shares must be finite and > 0")

    def __len__(self) -> int:
        return len(self.shares)


def observed_share(asset: Asset, base_age: int, horizon: int) -> float | None:
    """Share of base-year revenue seen `horizon` years later, if observable.

    Absent (None) when the asset is too young (dollar age below
    base_age + horizon) or its annual buckets do not reach that far.
    """
    if base_age < 1 or horizon < 1:
        raise ValueError("base_age and horizon must be >= 1")
    target = base_age + horizon
    if asset.dollar_age < target:
        return None
    if len(asset.series) < target:
        return None
    base = float(asset.series.amount_in_year(base_age))
    later = float(asset.series.amount_in_year(target))
    return later / base


def percentile(values: Sequence[float], level: float) -> float:
    """Percentile by linear interpolation between closest ranks.

    Sorting ascending to v[0..n-1], the result sits at fractional rank
    h = (n-1) * level / 100. Level 0 is the minimum, level 100 the
    maximum.
    """
    if len(values) == 0:
        raise ValueError("percentile of empty collection")
    if not 0.0 <= level <= 100.0:
        raise ValueError(f"level must be in [0, 100], got {level!r}")
    v = sorted(float(x) for x in values)
    h = (len(v) - 1) * level / 100.0
    lo = math.floor(h)
    frac = h - lo
    if frac == 0.0:
        return v[lo]
    return v[lo] + frac * (v[lo + 1] - v[lo])


def build_cohort(dataset: Iterable[Asset], base_age: int, horizon: int) -> Cohort:
    """Collect every observed share at (base_age, horizon), ids sorted."""
    members = []
    for asset in dataset:
        share = observed_share(asset, base_age, horizon)
        if share is not None:
            members.append((asset.asset_id, share))
    members.sort(key=lambda pair: pair[0])
    return Cohort(
        base_age,
        horizon,
        tuple(asset_id for asset_id, _ in members),
        tuple(share for _, share in members),
    )


def build_surface(
    dataset: Iterable[Asset],
    base_age: int,
    levels: Sequence[float] = DEFAULT_LEVELS,
    max_horizon: int = 10,
    min_cohort: int = DEFAULT_MIN_COHORT,
) -> ShareSurface:
    """Percentile shares for horizons 1..max_horizon at one base age.

    Cohort sizes are recorded for every horizon; cells are emitted only
    where the cohort reaches min_cohort, so thin tails stay blank rather
    than producing meaningless percentiles.
    """
    if max_horizon < 1:
        raise ValueError("max_horizon must be >= 1")
    if min_cohort < 1:
        raise ValueError("min_cohort must be >= 1")
    level_tuple = tuple(float(p) for p in levels)
    assets = list(dataset)

    values: dict[tuple[int, float], float] = {}
    counts: dict[int, int] = {}
    for horizon in range(1, max_horizon + 1):
        cohort = build_cohort(assets, base_age, horizon)
        counts[horizon] = len(cohort)
        if len(cohort) >= min_cohort:
            for p in level_tuple:
                values[(horizon, p)] = percentile(cohort.shares, p)
    return ShareSurface(base_age, level_tuple, values, counts)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def surface_csv_rows(surface: ShareSurface) -> list[tuple[str, str, str, str, str]]:
    """Canonical CSV rows (horizon ascending, level ascending), one per cell."""
    rows = []
    for horizon in surface.cell_horizons():
        for p in surface.levels:
            rows.append(
                (
                    str(surface.base_age),
                    str(horizon),
                    f"{p:g}",
                    f"{surface.values[(horizon, p)]:.6f}",
                    str(surface.counts[horizon]),
                )
            )
    return rows


def surface_rows_to_surface(rows: Iterable[Sequence[str]]) -> ShareSurface:
    """Rebuild a surface from its CSV rows (celled horizons only)."""
    base_age = None
    levels: set[float] = set()
    values: dict[tuple[int, float], float] = {}
    counts: dict[int, int] = {}
    for row in rows:
        if len(row) != len(SURFACE_HEADER):
            raise ValueError(f"expected {len(SURFACE_HEADER)} fields, got {row!r}")
        t, horizon, level, share, n = row
        t = int(t)
        if base_age is None:
            base_age = t
        elif t != base_age:
            raise ValueError("surface rows mix base ages")
        i, p = int(horizon), float(level)
        levels.add(p)
        values[(i, p)] = float(share)
        counts[i] = int(n)
    if base_age is None:
        raise ValueError("no surface rows")
    return ShareSurface(base_age, tuple(sorted(levels)), values, counts)


def parse_surface_csv(source: Union[str, Path, TextIO]) -> ShareSurface:
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8-sig", newline="") as handle:
            rows = list(csv.reader(handle))
    else:
        rows = list(csv.reader(source))
    if not rows or tuple(rows[0]) != SURFACE_HEADER:
        raise ValueError(f"bad surface header, expected {','.join(SURFACE_HEADER)}")
    return surface_rows_to_surface(rows[1:])


def surface_to_json_dict(surface: ShareSurface) -> dict:
    """Lossless JSON form: full-precision shares plus all cohort counts."""
    return {
        "base_age": surface.base_age,
        "levels": list(surface.levels),
        "counts": {str(i): surface.counts[i] for i in sorted(surface.counts)},
        "cells": [
            {"horizon": i, "level": p, "share": surface.values[(i, p)]}
            for i in surface.cell_horizons()
            for p in surface.levels
        ],
    }


def surface_from_json_dict(data: dict) -> ShareSurface:
    try:
        base_age = int(data["base_age"])
        levels = tuple(float(p) for p in data["levels"])
        counts = {int(i): int(n) for i, n in data["counts"].items()}
        values = {
            (int(cell["horizon"]), float(cell["level"])): float(cell["share"])
            for cell in data["cells"]
        }
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"bad surface JSON: {exc}") from None
    return ShareSurface(base_age, levels, values, counts)


def load_surface(path: Union[str, Path]) -> ShareSurface:
    """Load a surface from .json (lossless) or .csv (display precision)."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        with open(path, "r", encoding="utf-8") as handle:
            return surface_from_json_dict(json.load(handle))
    return parse_surface_csv(path)
