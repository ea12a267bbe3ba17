"""Market quotes: implied multipliers, quote filters, model-band comparison.

Quotes carry raw bid/ask prices plus LTM revenue; dividing either price by
LTM gives the implied multiplier the market is paying. Comparison rows put
those implied multipliers next to the model's m10/m50/m90 band for the
quote's age and contract duration.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence, TextIO, Union

from .model import MissingCellError, ShareSurface, multiplier_table

QUOTES_HEADER = ("asset_id", "ltm", "best_bid", "ask", "duration_years", "dollar_age")
COMPARISON_HEADER = (
    "asset_id",
    "duration",
    "dollar_age",
    "bid_multiplier",
    "ask_multiplier",
    "model_m10",
    "model_m50",
    "model_m90",
    "bid_gap_to_m10",
    "ask_gap_to_m50",
)
PLOT_HEADER = (
    "axis_value",
    "n",
    "mean_bid_mult",
    "mean_ask_mult",
    "mean_m10",
    "mean_m50",
    "mean_m90",
)

BAND_LEVELS = (10.0, 50.0, 90.0)

DEFAULT_MAX_DURATION = 10
DEFAULT_MIN_BID_ASK_RATIO = 0.5

__all__ = [
    "BAND_LEVELS",
    "COMPARISON_HEADER",
    "PLOT_HEADER",
    "QUOTES_HEADER",
    "ComparisonError",
    "ComparisonRow",
    "MarketQuote",
    "PlotGroup",
    "QuoteRejectReason",
    "aggregate_plot_data",
    "compare",
    "comparison_csv_rows",
    "filter_quotes",
    "implied_multipliers",
    "parse_quotes",
    "plot_csv_rows",
    "round_half_up",
    "write_quotes_csv",
]


class QuoteRejectReason(str, Enum):
    DURATION_TOO_LONG = "DURATION_TOO_LONG"
    BID_TOO_LOW = "BID_TOO_LOW"


@dataclass(frozen=True)
class MarketQuote:
    """One marketplace listing: seller's ask, best bid if any, and LTM."""

    asset_id: str
    ltm: float
    best_bid: float | None
    ask: float
    duration_years: int
    dollar_age: float

    def __post_init__(self):
        if not (math.isfinite(self.ltm) and self.ltm > 0):
            raise ValueError(f"{self.asset_id}: ltm must be > 0")
        if not (math.isfinite(self.ask) and self.ask > 0):
            raise ValueError(f"{self.asset_id}: ask must be > 0")
        if self.best_bid is not None and not (
            math.isfinite(self.best_bid) and self.best_bid >= 0
        ):
            raise ValueError(f"{self.asset_id}: best_bid must be >= 0")
        if self.duration_years < 1:
            raise ValueError(f"{self.asset_id}: duration_years must be >= 1")
        if not (math.isfinite(self.dollar_age) and self.dollar_age > 0):
            raise ValueError(f"{self.asset_id}: dollar_age must be > 0")


def implied_multipliers(quote: MarketQuote) -> tuple[float | None, float]:
    """(bid multiplier if a bid exists, ask multiplier), both price / LTM."""
    if quote.ltm <= 0:
        raise ValueError("ltm must be > 0")
    bid = None if quote.best_bid is None else quote.best_bid / quote.ltm
    return bid, quote.ask / quote.ltm


def filter_quotes(
    quotes: Iterable[MarketQuote],
    max_duration: int = DEFAULT_MAX_DURATION,
    min_bid_ask_ratio: float = DEFAULT_MIN_BID_ASK_RATIO,
) -> tuple[list[MarketQuote], list[tuple[MarketQuote, QuoteRejectReason]]]:
    """Drop over-long contracts and implausibly low bids.

    Duration is checked first. A quote with no bid passes the bid check;
    a bid exactly at the ratio boundary is kept.
    """
    if max_duration < 1:
        raise ValueError("max_duration must be >= 1")
    if not 0.0 <= min_bid_ask_ratio <= 1.0:
        raise ValueError("min_bid_ask_ratio must be in [0, 1]")
    accepted: list[MarketQuote] = []
    rejected: list[tuple[MarketQuote, QuoteRejectReason]] = []
    for quote in quotes:
        if quote.duration_years > max_duration:
            rejected.append((quote, QuoteRejectReason.DURATION_TOO_LONG))
            continue
        bid_mult, ask_mult = implied_multipliers(quote)
        if bid_mult is not None and bid_mult < min_bid_ask_ratio * ask_mult:
            rejected.append((quote, QuoteRejectReason.BID_TOO_LOW))
            continue
        accepted.append(quote)
    return accepted, rejected


def round_half_up(x: float) -> int:
    """Round a positive real to the nearest integer, ties upward."""
    if x < 0:
        raise ValueError("round_half_up expects a non-negative value")
    return math.floor(x + 0.5)


@dataclass(frozen=True)
class ComparisonRow:
    """A quote's implied multipliers next to the model band for its terms."""

    asset_id: str
    duration: int
    dollar_age: float
    bid_multiplier: float | None
    ask_multiplier: float
    model_m10: float
    model_m50: float
    model_m90: float
    bid_gap_to_m10: float | None
    ask_gap_to_m50: float

    def __post_init__(self):
        if not self.model_m10 <= self.model_m50 <= self.model_m90:
            raise ValueError(f"{self.asset_id}: band out of order")


@dataclass(frozen=True)
class ComparisonError:
    """Row-level failure; the run carries on without this quote."""

    asset_id: str
    message: str


def compare(
    quotes: Iterable[MarketQuote],
    surfaces_by_age: Mapping[int, ShareSurface],
    rate: float,
    rounding=round_half_up,
) -> tuple[list[ComparisonRow], list[ComparisonError]]:
    """Line each quote up against the model band at its age and duration.

    The quote's dollar age is rounded to an integer base age, then clamped
    into the range of ages that have surfaces; a hole inside that range or
    a surface without enough horizons yields a row-level error rather than
    failing the run. Rows and errors come back sorted by asset_id.
    """
    available = sorted(surfaces_by_age)
    rows: list[ComparisonRow] = []
    errors: list[ComparisonError] = []
    for quote in sorted(quotes, key=lambda q: q.asset_id):
        if not available:
            errors.append(ComparisonError(quote.asset_id, "no surfaces available"))
            continue
        t = rounding(quote.dollar_age)
        t = min(max(t, available[0]), available[-1])
        surface = surfaces_by_age.get(t)
        if surface is None:
            errors.append(
                ComparisonError(quote.asset_id, f"no surface for base age {t}")
            )
            continue
        try:
            table = multiplier_table(surface, rate, quote.duration_years)
            m10 = table.entry(quote.duration_years, 10.0)
            m50 = table.entry(quote.duration_years, 50.0)
            m90 = table.entry(quote.duration_years, 90.0)
        except MissingCellError as exc:
            errors.append(
                ComparisonError(quote.asset_id, f"base age {t}: {exc}")
            )
            continue
        bid_mult, ask_mult = implied_multipliers(quote)
        rows.append(
            ComparisonRow(
                asset_id=quote.asset_id,
                duration=quote.duration_years,
                dollar_age=quote.dollar_age,
                bid_multiplier=bid_mult,
                ask_multiplier=ask_mult,
                model_m10=m10,
                model_m50=m50,
                model_m90=m90,
                bid_gap_to_m10=None if bid_mult is None else bid_mult - m10,
                ask_gap_to_m50=ask_mult - m50,
            )
        )
    return rows, errors


@dataclass(frozen=True)
class PlotGroup:
    axis_value: int
    n: int
    mean_bid_mult: float | None
    mean_ask_mult: float
    mean_m10: float
    mean_m50: float
    mean_m90: float


def aggregate_plot_data(
    rows: Sequence[ComparisonRow], axis: str = "duration"
) -> list[PlotGroup]:
    """Group comparison rows for plotting, by duration or dollar-age bucket.

    Bid means cover only rows that have bids; a group with no bids gets
    None. Groups come back sorted by axis value; empty input yields an
    empty table.
    """
    if axis == "duration":
        key = lambda row: row.duration
    elif axis == "dollar_age_bucket":
        key = lambda row: round_half_up(row.dollar_age)
    else:
        raise ValueError(f"axis must be 'duration' or 'dollar_age_bucket', got {axis!r}")

    grouped: dict[int, list[ComparisonRow]] = {}
    for row in rows:
        grouped.setdefault(key(row), []).append(row)

    def mean(values: list[float]) -> float:
        return sum(values) / len(values)

    table = []
    for value in sorted(grouped):
        members = grouped[value]
        bids = [r.bid_multiplier for r in members if r.bid_multiplier is not None]
        table.append(
            PlotGroup(
                axis_value=value,
                n=len(members),
                mean_bid_mult=mean(bids) if bids else None,
                mean_ask_mult=mean([r.ask_multiplier for r in members]),
                mean_m10=mean([r.model_m10 for r in members]),
                mean_m50=mean([r.model_m50 for r in members]),
                mean_m90=mean([r.model_m90 for r in members]),
            )
        )
    return table


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def parse_quotes(source: Union[str, Path, TextIO]) -> list[MarketQuote]:
    """Read quotes.csv; an empty best_bid field means no bid was posted."""
    from .ingest import ParseError

    if isinstance(source, (str, Path)):
        handle = open(source, "r", encoding="utf-8-sig", newline="")
        path: str | None = str(source)
        close = True
    else:
        handle, path, close = source, getattr(source, "name", None), False
    try:
        reader = iter(csv.reader(handle))
        header = next(reader, None)
        if header is None or tuple(f.strip() for f in header) != QUOTES_HEADER:
            raise ParseError(
                f"bad header, expected {','.join(QUOTES_HEADER)}", line=1, path=path
            )
        quotes = []
        for line, row in enumerate(reader, start=2):
            if len(row) != len(QUOTES_HEADER):
                raise ParseError(
                    f"expected {len(QUOTES_HEADER)} fields, got {len(row)}",
                    line=line,
                    path=path,
                )
            asset_id, ltm, bid, ask, duration, age = (f.strip() for f in row)
            try:
                quotes.append(
                    MarketQuote(
                        asset_id=asset_id,
                        ltm=float(ltm),
                        best_bid=float(bid) if bid else None,
                        ask=float(ask),
                        duration_years=int(duration),
                        dollar_age=float(age),
                    )
                )
            except ValueError as exc:
                raise ParseError(str(exc), line=line, path=path) from None
        return quotes
    finally:
        if close:
            handle.close()


def write_quotes_csv(path: Union[str, Path], quotes: Iterable[MarketQuote]) -> None:
    """Write quotes with full-precision prices (repr round-trips floats)."""
    rows = []
    for q in sorted(quotes, key=lambda q: q.asset_id):
        rows.append(
            (
                q.asset_id,
                repr(q.ltm),
                "" if q.best_bid is None else repr(q.best_bid),
                repr(q.ask),
                str(q.duration_years),
                repr(q.dollar_age),
            )
        )
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(QUOTES_HEADER)
        writer.writerows(rows)


def comparison_csv_rows(rows: Sequence[ComparisonRow]) -> list[tuple[str, ...]]:
    out = []
    for r in rows:
        out.append(
            (
                r.asset_id,
                str(r.duration),
                f"{r.dollar_age:.6f}",
                "" if r.bid_multiplier is None else f"{r.bid_multiplier:.6f}",
                f"{r.ask_multiplier:.6f}",
                f"{r.model_m10:.6f}",
                f"{r.model_m50:.6f}",
                f"{r.model_m90:.6f}",
                "" if r.bid_gap_to_m10 is None else f"{r.bid_gap_to_m10:.6f}",
                f"{r.ask_gap_to_m50:.6f}",
            )
        )
    return out


def plot_csv_rows(groups: Sequence[PlotGroup]) -> list[tuple[str, ...]]:
    out = []
    for g in groups:
        out.append(
            (
                str(g.axis_value),
                str(g.n),
                "" if g.mean_bid_mult is None else f"{g.mean_bid_mult:.6f}",
                f"{g.mean_ask_mult:.6f}",
                f"{g.mean_m10:.6f}",
                f"{g.mean_m50:.6f}",
                f"{g.mean_m90:.6f}",
            )
        )
    return out
