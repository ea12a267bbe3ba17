"""Core valuation arithmetic: revenue shares, discounting, multiplier bands.

A multiplier is a dimensionless price quoted per unit of last-twelve-months
revenue; a price is multiplier times LTM. Amounts are plain decimal currency
values, single currency assumed. All values here are immutable after
construction and safe to share between workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal
from typing import Mapping, Sequence, Union

Amount = Union[Decimal, float, int]

__all__ = [
    "Amount",
    "AnnualSeries",
    "Asset",
    "MissingCellError",
    "MultiplierTable",
    "ShareSurface",
    "discount_factor",
    "multiplier_from_shares",
    "multiplier_table",
    "price",
]


class MissingCellError(ValueError):
    """A multiplier computation needs a (horizon, level) cell the surface lacks."""

    def __init__(self, horizon: int, level: float):
        super().__init__(
            f"surface has no cell at horizon={horizon}, level={level:g}"
        )
        self.horizon = horizon
        self.level = level


def _is_finite(x: Amount) -> bool:
    if isinstance(x, Decimal):
        return x.is_finite()
    return math.isfinite(x)


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AnnualSeries:
    """Annual revenue of one asset; index k (1-based) is its k-th year of life.

    Ingestion produces exact Decimal amounts; synthetic or test data may use
    floats. Series attached to accepted assets contain strictly positive
    amounts (zero-revenue years knock the whole asset out upstream).
    """

    asset_id: str
    amounts: tuple[Amount, ...]

    def __post_init__(self):
        if len(self.amounts) < 1:
            raise ValueError(f"{self.asset_id}: annual series must be non-empty")
        for k, a in enumerate(self.amounts, start=1):
            if not _is_finite(a):
                raise ValueError(f"{self.asset_id}: non-finite amount in year {k}")

    def __len__(self) -> int:
        return len(self.amounts)

    def amount_in_year(self, age_year: int) -> Amount:
        """Revenue during the asset's age_year-th year (1-based)."""
        if not 1 <= age_year <= len(self.amounts):
            raise ValueError(f"{self.asset_id}: no bucket for age year {age_year}")
        return self.amounts[age_year - 1]

    @property
    def last_year(self) -> Amount:
        """Most recent complete year of revenue (the LTM figure)."""
        return self.amounts[-1]


@dataclass(frozen=True)
class Asset:
    """An accepted catalog item: identifier, dollar age, annual cashflows."""

    asset_id: str
    dollar_age: float
    series: AnnualSeries

    def __post_init__(self):
        if not math.isfinite(self.dollar_age) or self.dollar_age <= 0:
            raise ValueError(f"{self.asset_id}: dollar_age must be > 0")


@dataclass(frozen=True)
class ShareSurface:
    """Percentile revenue-share curves for one base age.

    ``values`` maps (horizon, level) to the share of base-year revenue
    observed that many years past the base age. ``counts`` records cohort
    size for every horizon from 1 up to the maximum requested, including
    horizons too thin to receive cells. Shares are rate-independent.
    """

    base_age: int
    levels: tuple[float, ...]
    values: Mapping[tuple[int, float], float]
    counts: Mapping[int, int]

    def __post_init__(self):
        if self.base_age < 1:
            raise ValueError("base_age must be >= 1")
        if not self.levels:
            raise ValueError("at least one percentile level required")
        for p in self.levels:
            if not 0.0 < p < 100.0:
                raise ValueError(f"percentile level {p!r} outside (0, 100)")
        if list(self.levels) != sorted(set(self.levels)):
            raise ValueError("levels must be strictly increasing")

        horizons = sorted(self.counts)
        if horizons and horizons != list(range(1, horizons[-1] + 1)):
            raise ValueError("counts must cover horizons 1..H contiguously")
        prev = None
        for i in horizons:
            n = self.counts[i]
            if n < 0:
                raise ValueError(f"negative cohort count at horizon {i}")
            if prev is not None and n > prev:
                raise ValueError(f"cohort count increases at horizon {i}")
            prev = n

        for (i, p), s in self.values.items():
            if i not in self.counts:
                raise ValueError(f"cell at horizon {i} has no cohort count")
            if p not in self.levels:
                raise ValueError(f"cell level {p!r} not in declared levels")
            if not math.isfinite(s) or s < 0.0:
                raise ValueError(f"share at ({i}, {p:g}) must be finite and >= 0")
        for i in horizons:
            present = [p for p in self.levels if (i, p) in self.values]
            if present and len(present) != len(self.levels):
                raise ValueError(f"horizon {i} has cells for only some levels")
            ordered = [self.values[(i, p)] for p in present]
            if any(a > b for a, b in zip(ordered, ordered[1:])):
                raise ValueError(f"shares at horizon {i} not ordered by level")

    @property
    def max_horizon(self) -> int:
        return max(self.counts, default=0)

    def cell_horizons(self) -> list[int]:
        """Horizons that received cells, ascending (always a prefix 1..K)."""
        return sorted({i for i, _ in self.values})

    def has_cell(self, horizon: int, level: float) -> bool:
        return (horizon, float(level)) in self.values

    def share(self, horizon: int, level: float) -> float:
        try:
            return self.values[(horizon, float(level))]
        except KeyError:
            raise MissingCellError(horizon, float(level)) from None


@dataclass(frozen=True)
class MultiplierTable:
    """Multiplier bands per (duration, level) at a fixed discount rate.

    Entries are prefix sums of discounted shares, so they are non-decreasing
    in duration for a given level, and non-decreasing in level for a given
    duration.
    """

    base_age: int
    discount_rate: float
    entries: Mapping[tuple[int, float], float]

    def __post_init__(self):
        if self.discount_rate < 0:
            raise ValueError("discount_rate must be >= 0")
        for (d, p), m in self.entries.items():
            if not math.isfinite(m) or m < 0.0:
                raise ValueError(f"multiplier at ({d}, {p:g}) must be finite and >= 0")
        for p in self.levels:
            column = [self.entries[(d, p)] for d in self.durations if (d, p) in self.entries]
            if any(a > b for a, b in zip(column, column[1:])):
                raise ValueError(f"multipliers at level {p:g} decrease in duration")
        for d in self.durations:
            row = [self.entries[(d, p)] for p in self.levels if (d, p) in self.entries]
            if any(a > b for a, b in zip(row, row[1:])):
                raise ValueError(f"multipliers at duration {d} decrease in level")

    @property
    def durations(self) -> list[int]:
        return sorted({d for d, _ in self.entries})

    @property
    def levels(self) -> list[float]:
        return sorted({p for _, p in self.entries})

    def entry(self, duration: int, level: float) -> float:
        try:
            return self.entries[(duration, float(level))]
        except KeyError:
            raise MissingCellError(duration, float(level)) from None


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def discount_factor(rate: float, year: int) -> float:
    """Present-value factor 1/(1+rate)^year for a cashflow `year` years out."""
    if rate < 0:
        raise ValueError("rate must be >= 0")
    if year < 1:
        raise ValueError("year must be >= 1")
    return 1.0 / (1.0 + rate) ** year


def multiplier_from_shares(shares: Sequence[Amount], rate: float) -> float:
    """Discounted sum of year-1..d revenue shares: the duration-d multiplier.

    Terms are accumulated in ascending year order with plain float addition,
    which keeps results bit-for-bit reproducible across runs.
    """
    if rate < 0:
        raise ValueError("rate must be >= 0")
    if len(shares) < 1:
        raise ValueError("at least one share required")
    total = 0.0
    for year, raw in enumerate(shares, start=1):
        s = float(raw)
        if not math.isfinite(s) or s < 0.0:
            raise ValueError(f"share for year {year} must be finite and >= 0")
        total += s * discount_factor(rate, year)
    return total


def price(multiplier: float, ltm: float) -> float:
    """Price implied by a multiplier and a positive LTM revenue figure."""
    if not math.isfinite(multiplier) or multiplier < 0.0:
        raise ValueError("multiplier must be finite and >= 0")
    ltm = float(ltm)
    if not math.isfinite(ltm) or ltm <= 0.0:
        raise ValueError("ltm must be > 0")
    return multiplier * ltm


def multiplier_table(
    surface: ShareSurface, rate: float, max_duration: int
) -> MultiplierTable:
    """Build the multiplier band table for durations 1..max_duration.

    Every level's entries are the running prefix sum of its discounted
    shares, so entry(d) is bit-identical to multiplier_from_shares applied
    to the first d shares. Raises MissingCellError naming the first
    (horizon, level) cell the surface lacks, scanning horizons ascending
    and levels ascending within a horizon.
    """
    if rate < 0:
        raise ValueError("rate must be >= 0")
    if max_duration < 1:
        raise ValueError("max_duration must be >= 1")
    for i in range(1, max_duration + 1):
        for p in surface.levels:
            if not surface.has_cell(i, p):
                raise MissingCellError(i, p)

    entries: dict[tuple[int, float], float] = {}
    for p in surface.levels:
        running = 0.0
        for d in range(1, max_duration + 1):
            running += surface.values[(d, p)] * discount_factor(rate, d)
            entries[(d, p)] = running
    return MultiplierTable(surface.base_age, rate, entries)
