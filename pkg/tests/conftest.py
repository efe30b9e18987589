"""Shared builders for hand-made tapes and trades."""

from __future__ import annotations

import datetime as dt

import pytest

from bondtca.calendars import BusinessCalendar
from bondtca.classify import SignedTrade
from bondtca.ingest import CleanTrade, RawTradeReport

MONDAY = dt.datetime(2015, 1, 5, 10, 0, 0)  # a business-day mid-morning


def ts(seconds: float = 0.0, base: dt.datetime = MONDAY) -> dt.datetime:
    return base + dt.timedelta(seconds=seconds)


def make_report(**kw) -> RawTradeReport:
    defaults = dict(
        record_id="R1",
        cusip="TESTCUSIP",
        timestamp=MONDAY,
        price=100.0,
        volume=50_000.0,
        kind="trade",
        references=None,
        capacity="principal",
        contra_party="customer",
        customer_side="customer_buy",
        sale_conditions=frozenset(),
        sub_product="corporate_bond",
        row=0,
    )
    defaults.update(kw)
    if defaults["contra_party"] == "dealer":
        defaults["customer_side"] = None
    return RawTradeReport(**defaults)


def make_clean(k: int = 0, **kw) -> CleanTrade:
    defaults = dict(
        cusip="TESTCUSIP",
        k=k,
        timestamp=ts(60.0 * k),
        price=100.0,
        volume=50_000.0,
        leg="customer_buy",
    )
    defaults.update(kw)
    return CleanTrade(**defaults)


def make_signed(k: int = 0, **kw) -> SignedTrade:
    defaults = dict(
        cusip="TESTCUSIP",
        k=k,
        timestamp=ts(60.0 * k),
        price=100.0,
        volume=50_000.0,
        leg="customer_buy",
        epsilon=1,
        is_rpt=False,
    )
    defaults.update(kw)
    if "epsilon" not in kw:
        leg = defaults["leg"]
        defaults["epsilon"] = {"customer_buy": 1, "customer_sell": -1}.get(leg, 0)
    return SignedTrade(**defaults)


@pytest.fixture
def calendar() -> BusinessCalendar:
    return BusinessCalendar()


def tape_csv(rows: list[str]) -> bytes:
    header = (
        "record_id,cusip,exec_date,exec_time,price,volume,report_kind,"
        "references_record,capacity,contra_party,customer_side,sale_condition,sub_product"
    )
    return ("\n".join([header] + rows) + "\n").encode()


def trade_row(
    record_id: str,
    kind: str = "trade",
    references: str = "",
    cusip: str = "TESTCUSIP",
    date: str = "2015-01-05",
    time: str = "10:00:00",
    price: float = 100.0,
    volume: float = 50_000.0,
    capacity: str = "principal",
    contra: str = "customer",
    side: str = "customer_buy",
    condition: str = "",
    sub_product: str = "corporate_bond",
) -> str:
    if contra == "dealer":
        side = ""
    return (
        f"{record_id},{cusip},{date},{time},{price},{volume},{kind},"
        f"{references},{capacity},{contra},{side},{condition},{sub_product}"
    )
