"""Spread and mid-price estimation from signed trades.

A vanilla spread observation comes from two consecutive opposite-sign
trades of one bond executed close together in time. Two mid-price
conventions are supported because the source convention places the
reconstructed mid outside [bid, ask] in the canonical sell-then-buy case:

* ``paper``:     M = P_k - eps_{k+1} * psi / 2   (as printed)
* ``corrected``: M = P_k + eps_{k+1} * psi / 2   (mid between bid and ask)
"""

from __future__ import annotations

import datetime as dt
import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

from .calendars import IsoWeek
from .classify import SignedTrade
from .ingest import CUSTOMER_BUY, CUSTOMER_SELL, DEALER_DEALER

log = logging.getLogger(__name__)

DEFAULT_DELTA_T = 300.0  # seconds
MID_CONVENTIONS = ("paper", "corrected")


@dataclass(slots=True)
class SpreadObservation:
    cusip: str
    k: int  # index of the later trade of the pair
    timestamp: dt.datetime
    psi: float  # price units
    mid: float
    s_bp: float  # basis points


@dataclass(slots=True)
class WeeklySpread:
    cusip: str
    week: IsoWeek
    mean_s_bp: float
    n_obs: int


@dataclass(slots=True)
class OneSidedSpread:
    cusip: str
    day: dt.date
    spread_buy: float | None  # fraction, volume-weighted over customer buys
    spread_sell: float | None
    reference_price: float | None


def estimate_spreads(
    trades: Sequence[SignedTrade],
    delta_t: float = DEFAULT_DELTA_T,
    mid_convention: str = "paper",
) -> list[SpreadObservation]:
    """Vanilla spread, mid and bp spread from opposite-sign adjacent pairs.

    ``trades`` must be one bond in chronological order. Pairs with a
    non-positive reconstructed mid are dropped and logged.
    """
    if mid_convention not in MID_CONVENTIONS:
        raise ValueError(f"mid_convention must be one of {MID_CONVENTIONS}")
    sign = -1.0 if mid_convention == "paper" else 1.0
    out: list[SpreadObservation] = []
    for a, b in zip(trades, trades[1:]):
        if a.epsilon == 0 or b.epsilon != -a.epsilon:
            continue
        if abs((b.timestamp - a.timestamp).total_seconds()) >= delta_t:
            continue
        psi = (b.price - a.price) * b.epsilon
        mid = a.price + sign * b.epsilon * psi / 2.0
        if mid <= 0:
            log.warning("degenerate mid %.6g for %s at k=%d; observation dropped", mid, b.cusip, b.k)
            continue
        out.append(
            SpreadObservation(
                cusip=b.cusip,
                k=b.k,
                timestamp=b.timestamp,
                psi=psi,
                mid=mid,
                s_bp=psi / mid * 1e4,
            )
        )
    return out


def used_trade_fraction(n_trades: int, observations: Sequence[SpreadObservation]) -> float:
    """Fraction of the bond's trades participating in any spread pair."""
    if n_trades == 0:
        return 0.0
    used: set[int] = set()
    for obs in observations:
        used.add(obs.k)
        used.add(obs.k - 1)
    return len(used) / n_trades


def aggregate_weekly(obs: Iterable[SpreadObservation]) -> list[WeeklySpread]:
    """Unweighted mean bp spread per (bond, ISO week)."""
    sums: dict[tuple[str, IsoWeek], tuple[float, int]] = {}
    for o in obs:
        key = (o.cusip, IsoWeek.of(o.timestamp.date()))
        total, count = sums.get(key, (0.0, 0))
        sums[key] = (total + o.s_bp, count + 1)
    return [
        WeeklySpread(cusip=c, week=w, mean_s_bp=total / count, n_obs=count)
        for (c, w), (total, count) in sorted(sums.items())
    ]


def reference_price(
    trades: Sequence[SignedTrade],
    min_volume: float = 100_000.0,
    exclusion_minutes: float = 15.0,
) -> float | None:
    """Inter-dealer VWAP reference for one bond-day.

    Only dealer-dealer trades with volume strictly above ``min_volume``
    qualify; those within ``exclusion_minutes`` of any customer trade of the
    day are excluded (the union-window form of the per-trade exclusion).
    Returns None when no trade qualifies.
    """
    window = dt.timedelta(minutes=exclusion_minutes)
    customer_times = [t.timestamp for t in trades if t.leg != DEALER_DEALER]

    def excluded(ts: dt.datetime) -> bool:
        return any(abs(ts - ct) <= window for ct in customer_times)

    pv = 0.0
    v = 0.0
    for t in trades:
        if t.leg != DEALER_DEALER or t.volume <= min_volume:
            continue
        if excluded(t.timestamp):
            continue
        pv += t.price * t.volume
        v += t.volume
    return pv / v if v > 0 else None


def one_sided_spreads(
    trades: Sequence[SignedTrade], ref: float, day: dt.date | None = None
) -> OneSidedSpread:
    """Volume-weighted one-sided buy/sell spreads against a reference price."""
    buy_pv = buy_v = sell_pv = sell_v = 0.0
    for t in trades:
        if t.leg == CUSTOMER_BUY:
            buy_pv += (t.price - ref) / ref * t.volume
            buy_v += t.volume
        elif t.leg == CUSTOMER_SELL:
            sell_pv += (ref - t.price) / ref * t.volume
            sell_v += t.volume
    cusip = trades[0].cusip if trades else ""
    if day is None and trades:
        day = trades[0].timestamp.date()
    return OneSidedSpread(
        cusip=cusip,
        day=day,  # type: ignore[arg-type]
        spread_buy=buy_pv / buy_v if buy_v > 0 else None,
        spread_sell=sell_pv / sell_v if sell_v > 0 else None,
        reference_price=ref,
    )


def one_sided_spreads_by_day(
    trades: Iterable[SignedTrade],
    min_volume: float = 100_000.0,
    exclusion_minutes: float = 15.0,
) -> list[OneSidedSpread]:
    """Bond-day one-sided spreads with per-trade reference prices.

    Each customer trade is marked against the VWAP of the day's qualifying
    inter-dealer trades, excluding those within the window of that trade
    (the per-trade form of the exclusion); the bond-day figure is the
    volume-weighted average of the trade-level spreads.
    """
    window = dt.timedelta(minutes=exclusion_minutes)
    by_day: dict[tuple[str, dt.date], list[SignedTrade]] = {}
    for t in trades:
        by_day.setdefault((t.cusip, t.timestamp.date()), []).append(t)
    out: list[OneSidedSpread] = []
    for (cusip, day), day_trades in sorted(by_day.items()):
        dealers = [t for t in day_trades if t.leg == DEALER_DEALER and t.volume > min_volume]
        if not dealers:
            continue
        buy_pv = buy_v = sell_pv = sell_v = 0.0
        ref_any = None
        for t in day_trades:
            if t.leg == DEALER_DEALER:
                continue
            pv = sum(
                d.price * d.volume for d in dealers if abs(d.timestamp - t.timestamp) > window
            )
            v = sum(d.volume for d in dealers if abs(d.timestamp - t.timestamp) > window)
            if v <= 0:
                continue
            ref = pv / v
            ref_any = ref
            if t.leg == CUSTOMER_BUY:
                buy_pv += (t.price - ref) / ref * t.volume
                buy_v += t.volume
            else:
                sell_pv += (ref - t.price) / ref * t.volume
                sell_v += t.volume
        if ref_any is None:
            continue
        out.append(
            OneSidedSpread(
                cusip=cusip,
                day=day,
                spread_buy=buy_pv / buy_v if buy_v > 0 else None,
                spread_sell=sell_pv / sell_v if sell_v > 0 else None,
                reference_price=ref_any,
            )
        )
    return out
