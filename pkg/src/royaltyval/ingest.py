"""Cashflow ingestion: CSV parsing, annualization, and the acceptance filters.

Amounts travel as exact decimals (cent precision) through this module, so
annual bucket sums conserve input revenue exactly; conversion to binary
floats happens downstream where shares are formed. Filtering applies a
fixed check order per asset and the first failing check wins, which keeps
rejection reports reproducible.
"""

from __future__ import annotations

import csv
import math
import re
from collections import Counter
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence, TextIO, Union

from .model import AnnualSeries, Asset

CASHFLOWS_HEADER = ("asset_id", "period_start", "period_months", "amount")
ASSETS_HEADER = ("asset_id", "dollar_age")
REPORT_HEADER = ("asset_id", "status", "reason")

DEFAULT_ZERO_FLOOR = 0.0
DEFAULT_AGE_TOLERANCE = 0.30

_AMOUNT_RE = re.compile(r"^-?\d+(\.\d{1,2})?$")
_MONTH_RE = re.compile(r"^(\d{4})-(\d{2})$")

Source = Union[str, Path, TextIO]

__all__ = [
    "ASSETS_HEADER",
    "CASHFLOWS_HEADER",
    "AnnualizeError",
    "CashflowRecord",
    "FilterDecision",
    "FilterReport",
    "Month",
    "ParseError",
    "RawAsset",
    "RejectReason",
    "annualize",
    "assemble_raw_assets",
    "build_dataset",
    "filter_dollar_age",
    "filter_zero_years",
    "oldest_cashflow_age",
    "parse_assets",
    "parse_cashflows",
    "write_assets_csv",
    "write_cashflows_csv",
    "write_filter_report_csv",
]


class ParseError(ValueError):
    """Malformed input; carries the 1-based line number when known."""

    def __init__(self, message: str, *, line: int | None = None, path: str | None = None):
        prefix = ""
        if path is not None:
            prefix += f"{path}:"
        if line is not None:
            prefix += f"line {line}: "
        super().__init__(prefix + message)
        self.line = line
        self.path = path


class RejectReason(str, Enum):
    """Why an asset was dropped; listed in the order checks run."""

    NEGATIVE_AMOUNT = "NEGATIVE_AMOUNT"
    GAP_IN_HISTORY = "GAP_IN_HISTORY"
    INSUFFICIENT_HISTORY = "INSUFFICIENT_HISTORY"
    ZERO_REVENUE_YEAR = "ZERO_REVENUE_YEAR"
    DOLLAR_AGE_MISMATCH = "DOLLAR_AGE_MISMATCH"


class AnnualizeError(ValueError):
    """Annualization failed; maps onto a rejection reason."""

    def __init__(self, reason: RejectReason, message: str):
        super().__init__(message)
        self.reason = reason


# ---------------------------------------------------------------------------
# Raw record types
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class Month:
    """A calendar month; ordering follows calendar order."""

    year: int
    month: int

    def __post_init__(self):
        if not 1 <= self.month <= 12:
            raise ValueError(f"month out of range: {self.month}")

    @property
    def index(self) -> int:
        """Months since year 0, a convenient integer timeline."""
        return self.year * 12 + (self.month - 1)

    def plus(self, months: int) -> "Month":
        idx = self.index + months
        return Month(idx // 12, idx % 12 + 1)

    def __str__(self) -> str:
        return f"{self.year:04d}-{self.month:02d}"

    @classmethod
    def parse(cls, text: str) -> "Month":
        m = _MONTH_RE.match(text)
        if not m:
            raise ValueError(f"period_start must be YYYY-MM, got {text!r}")
        return cls(int(m.group(1)), int(m.group(2)))


@dataclass(frozen=True)
class CashflowRecord:
    """One revenue observation covering one or three consecutive months.

    Amounts may be negative here; validity is enforced at parse time for
    file input and during dataset construction for records built in code.
    """

    asset_id: str
    period_start: Month
    period_months: int
    amount: Decimal

    def __post_init__(self):
        if self.period_months not in (1, 3):
            raise ValueError(f"period_months must be 1 or 3, got {self.period_months}")
        if not self.amount.is_finite():
            raise ValueError(f"{self.asset_id}: non-finite amount")

    @property
    def start_index(self) -> int:
        return self.period_start.index

    @property
    def end_index(self) -> int:
        """Exclusive index of the first month after this record's coverage."""
        return self.period_start.index + self.period_months


@dataclass(frozen=True)
class RawAsset:
    """An unfiltered asset: dollar age plus its sorted cashflow records."""

    asset_id: str
    dollar_age: float
    records: tuple[CashflowRecord, ...]

    def __post_init__(self):
        if not self.records:
            raise ValueError(f"{self.asset_id}: no cashflow records")
        if not self.dollar_age > 0:
            raise ValueError(f"{self.asset_id}: dollar_age must be > 0")
        for prev, cur in zip(self.records, self.records[1:]):
            if cur.start_index < prev.end_index:
                raise ValueError(
                    f"{self.asset_id}: records overlap at {cur.period_start}"
                )


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def _open_rows(source: Source):
    if isinstance(source, (str, Path)):
        handle = open(source, "r", encoding="utf-8-sig", newline="")
        return handle, str(source), True
    return source, getattr(source, "name", None), False


def _check_header(row: list[str] | None, expected: tuple[str, ...], path: str | None):
    if row is None:
        raise ParseError("file is empty, expected a header row", line=1, path=path)
    if tuple(field.strip() for field in row) != expected:
        raise ParseError(
            f"bad header {row!r}, expected {','.join(expected)}", line=1, path=path
        )


def parse_amount(text: str) -> Decimal:
    """Parse a currency amount with up to two fractional digits."""
    raw = text.strip()
    if not _AMOUNT_RE.match(raw):
        raise ValueError(f"bad amount {text!r} (decimal with <= 2 fraction digits)")
    value = Decimal(raw)
    if value < 0:
        raise ValueError(f"NEGATIVE_AMOUNT: amount {text!r} is negative")
    return value


def parse_cashflows(source: Source) -> list[CashflowRecord]:
    """Read cashflows.csv; ordering preserved as read.

    Raises ParseError with a 1-based line number for malformed rows,
    unknown frequencies, negative amounts, and duplicate
    (asset_id, period_start) pairs.
    """
    handle, path, close = _open_rows(source)
    try:
        reader = csv.reader(handle)
        rows = iter(reader)
        _check_header(next(rows, None), CASHFLOWS_HEADER, path)
        records: list[CashflowRecord] = []
        seen: set[tuple[str, int]] = set()
        for line, row in enumerate(rows, start=2):
            if len(row) != len(CASHFLOWS_HEADER):
                raise ParseError(f"expected 4 fields, got {len(row)}", line=line, path=path)
            asset_id, start_text, months_text, amount_text = (f.strip() for f in row)
            if not asset_id:
                raise ParseError("empty asset_id", line=line, path=path)
            try:
                start = Month.parse(start_text)
            except ValueError as exc:
                raise ParseError(str(exc), line=line, path=path) from None
            if months_text not in ("1", "3"):
                raise ParseError(
                    f"unknown frequency {months_text!r} (period_months must be 1 or 3)",
                    line=line,
                    path=path,
                )
            try:
                amount = parse_amount(amount_text)
            except ValueError as exc:
                raise ParseError(str(exc), line=line, path=path) from None
            key = (asset_id, start.index)
            if key in seen:
                raise ParseError(
                    f"duplicate record for {asset_id} at {start}", line=line, path=path
                )
            seen.add(key)
            records.append(CashflowRecord(asset_id, start, int(months_text), amount))
        return records
    finally:
        if close:
            handle.close()


def parse_assets(source: Source) -> dict[str, float]:
    """Read assets.csv into an asset_id -> dollar_age mapping."""
    handle, path, close = _open_rows(source)
    try:
        reader = csv.reader(handle)
        rows = iter(reader)
        _check_header(next(rows, None), ASSETS_HEADER, path)
        ages: dict[str, float] = {}
        for line, row in enumerate(rows, start=2):
            if len(row) != len(ASSETS_HEADER):
                raise ParseError(f"expected 2 fields, got {len(row)}", line=line, path=path)
            asset_id, age_text = (f.strip() for f in row)
            if not asset_id:
                raise ParseError("empty asset_id", line=line, path=path)
            if asset_id in ages:
                raise ParseError(f"duplicate asset {asset_id}", line=line, path=path)
            try:
                age = float(age_text)
            except ValueError:
                raise ParseError(f"bad dollar_age {age_text!r}", line=line, path=path) from None
            if not (math.isfinite(age) and age > 0):
                raise ParseError(
                    f"dollar_age must be a positive finite number, got {age_text!r}",
                    line=line,
                    path=path,
                )
            ages[asset_id] = age
        return ages
    finally:
        if close:
            handle.close()


def assemble_raw_assets(
    records: Iterable[CashflowRecord], dollar_ages: Mapping[str, float]
) -> list[RawAsset]:
    """Join parsed cashflows with dollar ages into RawAssets, sorted by id.

    Every cashflow must reference a known asset and every asset must have
    at least one cashflow; anything else is a ParseError, since the two
    files are inconsistent rather than merely containing a bad asset.
    """
    grouped: dict[str, list[CashflowRecord]] = {}
    for rec in records:
        grouped.setdefault(rec.asset_id, []).append(rec)

    unknown = sorted(set(grouped) - set(dollar_ages))
    if unknown:
        raise ParseError(f"cashflows reference unknown assets: {', '.join(unknown)}")
    missing = sorted(set(dollar_ages) - set(grouped))
    if missing:
        raise ParseError(f"assets have no cashflows: {', '.join(missing)}")

    assets = []
    for asset_id in sorted(grouped):
        recs = sorted(grouped[asset_id], key=lambda r: r.start_index)
        try:
            assets.append(RawAsset(asset_id, dollar_ages[asset_id], tuple(recs)))
        except ValueError as exc:
            raise ParseError(str(exc)) from None
    return assets


# ---------------------------------------------------------------------------
# Annualization and filters
# ---------------------------------------------------------------------------

def oldest_cashflow_age(records: Sequence[CashflowRecord]) -> float:
    """Age in years of the oldest cashflow: months spanned from the first
    period start to the end of the last covered period, divided by 12."""
    if not records:
        raise ValueError("no records")
    first = min(r.start_index for r in records)
    last = max(r.end_index for r in records)
    return (last - first) / 12.0


def annualize(records: Sequence[CashflowRecord]) -> AnnualSeries:
    """Sum gap-free monthly/quarterly records into whole song-age years.

    Buckets run forward from the first covered month: bucket k holds
    coverage months 12(k-1)+1 .. 12k, so bucket index equals song-age
    year. Records are attributed to the bucket containing their first
    covered month. A trailing bucket with fewer than 12 covered months
    is dropped.
    """
    if not records:
        raise ValueError("no records")
    recs = sorted(records, key=lambda r: r.start_index)
    for prev, cur in zip(recs, recs[1:]):
        if cur.start_index != prev.end_index:
            raise AnnualizeError(
                RejectReason.GAP_IN_HISTORY,
                f"{recs[0].asset_id}: coverage gap before {cur.period_start}",
            )
    origin = recs[0].start_index
    total_months = recs[-1].end_index - origin
    complete_years = total_months // 12
    if complete_years < 1:
        raise AnnualizeError(
            RejectReason.INSUFFICIENT_HISTORY,
            f"{recs[0].asset_id}: only {total_months} months of coverage",
        )
    buckets = [Decimal(0)] * complete_years
    for rec in recs:
        k = (rec.start_index - origin) // 12
        if k < complete_years:
            buckets[k] += rec.amount
    return AnnualSeries(recs[0].asset_id, tuple(buckets))


def filter_zero_years(series: AnnualSeries, zero_floor: float = DEFAULT_ZERO_FLOOR) -> bool:
    """Accept unless any annual amount is at or below the floor."""
    if zero_floor < 0:
        raise ValueError("zero_floor must be >= 0")
    return all(amount > zero_floor for amount in series.amounts)


def filter_dollar_age(
    dollar_age: float, oldest_age: float, tolerance: float = DEFAULT_AGE_TOLERANCE
) -> bool:
    """Accept when dollar age sits within the relative tolerance of the
    oldest-cashflow age; boundary equality accepts."""
    if not oldest_age > 0:
        raise ValueError("oldest_age must be > 0")
    if tolerance < 0:
        raise ValueError("tolerance must be >= 0")
    return abs(dollar_age - oldest_age) <= tolerance * oldest_age


# ---------------------------------------------------------------------------
# Dataset construction and reporting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FilterDecision:
    asset_id: str
    accepted: bool
    reason: RejectReason | None

    @property
    def status(self) -> str:
        return "accepted" if self.accepted else "rejected"


@dataclass(frozen=True)
class FilterReport:
    """Per-asset accept/reject outcomes, one entry per input asset."""

    decisions: tuple[FilterDecision, ...]

    @property
    def total(self) -> int:
        return len(self.decisions)

    @property
    def accepted_count(self) -> int:
        return sum(1 for d in self.decisions if d.accepted)

    @property
    def rejected_count(self) -> int:
        return self.total - self.accepted_count

    def reason_counts(self) -> dict[RejectReason, int]:
        counts = Counter(d.reason for d in self.decisions if d.reason is not None)
        return {reason: counts.get(reason, 0) for reason in RejectReason}

    def summary(self) -> dict:
        """JSON-ready summary with per-reason counts."""
        return {
            "total": self.total,
            "accepted": self.accepted_count,
            "rejected": self.rejected_count,
            "reasons": {r.value: n for r, n in self.reason_counts().items()},
        }


def build_dataset(
    raw_assets: Iterable[RawAsset],
    *,
    zero_floor: float = DEFAULT_ZERO_FLOOR,
    dollar_age_tolerance: float = DEFAULT_AGE_TOLERANCE,
) -> tuple[list[Asset], FilterReport]:
    """Run the full per-asset filter chain over raw assets.

    Checks run in a fixed order and the first failure decides the
    rejection reason: negative amounts, coverage gaps, insufficient
    history, zero-revenue years, dollar-age mismatch. Nothing raises per
    asset; every input lands in the report exactly once. Output is
    sorted by asset_id and so is independent of input order.
    """
    ordered = sorted(raw_assets, key=lambda a: a.asset_id)
    ids = [a.asset_id for a in ordered]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate asset_id in raw assets")

    accepted: list[Asset] = []
    decisions: list[FilterDecision] = []
    for raw in ordered:
        series, reason = _apply_filters(raw, zero_floor, dollar_age_tolerance)
        if reason is None:
            accepted.append(Asset(raw.asset_id, raw.dollar_age, series))
            decisions.append(FilterDecision(raw.asset_id, True, None))
        else:
            decisions.append(FilterDecision(raw.asset_id, False, reason))
    return accepted, FilterReport(tuple(decisions))


def _apply_filters(
    raw: RawAsset, zero_floor: float, tolerance: float
) -> tuple[AnnualSeries | None, RejectReason | None]:
    if any(rec.amount < 0 for rec in raw.records):
        return None, RejectReason.NEGATIVE_AMOUNT
    try:
        series = annualize(raw.records)
    except AnnualizeError as exc:
        return None, exc.reason
    if not filter_zero_years(series, zero_floor):
        return None, RejectReason.ZERO_REVENUE_YEAR
    oldest = oldest_cashflow_age(raw.records)
    if not filter_dollar_age(raw.dollar_age, oldest, tolerance):
        return None, RejectReason.DOLLAR_AGE_MISMATCH
    return series, None


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _write_csv(path: str | Path, header: tuple[str, ...], rows: Iterable[Sequence[str]]):
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_cashflows_csv(path: str | Path, raw_assets: Iterable[RawAsset]) -> None:
    rows = []
    for asset in sorted(raw_assets, key=lambda a: a.asset_id):
        for rec in asset.records:
            rows.append(
                (rec.asset_id, str(rec.period_start), str(rec.period_months), f"{rec.amount:.2f}")
            )
    _write_csv(path, CASHFLOWS_HEADER, rows)


def write_assets_csv(path: str | Path, raw_assets: Iterable[RawAsset]) -> None:
    rows = [
        (a.asset_id, f"{a.dollar_age:.6f}")
        for a in sorted(raw_assets, key=lambda a: a.asset_id)
    ]
    _write_csv(path, ASSETS_HEADER, rows)


def write_filter_report_csv(path: str | Path, report: FilterReport) -> None:
    rows = [
        (d.asset_id, d.status, d.reason.value if d.reason else "")
        for d in report.decisions
    ]
    _write_csv(path, REPORT_HEADER, rows)
