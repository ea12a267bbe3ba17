from decimal import Decimal

from royaltyval.ingest import CashflowRecord, Month, RawAsset


def monthly_records(asset_id, amounts, start=Month(2019, 1)):
    """Consecutive monthly records from `start`, one per amount."""
    records = []
    month = start
    for amount in amounts:
        records.append(CashflowRecord(asset_id, month, 1, Decimal(str(amount))))
        month = month.plus(1)
    return tuple(records)


def quarterly_records(asset_id, amounts, start=Month(2019, 1)):
    """Consecutive quarterly records from `start`, one per amount."""
    records = []
    month = start
    for amount in amounts:
        records.append(CashflowRecord(asset_id, month, 3, Decimal(str(amount))))
        month = month.plus(3)
    return tuple(records)


def raw_monthly_asset(asset_id, amounts, dollar_age=None, start=Month(2019, 1)):
    """RawAsset with monthly records; dollar age defaults to the span."""
    if dollar_age is None:
        dollar_age = len(amounts) / 12.0
    return RawAsset(asset_id, dollar_age, monthly_records(asset_id, amounts, start))
