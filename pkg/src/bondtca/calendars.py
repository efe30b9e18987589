"""Business-day calendars and ISO-week keys.

The calendar is data, not code: holidays arrive as a file with one ISO date
per line so the engine stays jurisdiction-neutral. Weekends are always
non-business days.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, NamedTuple

from .errors import ConfigError


class IsoWeek(NamedTuple):
    """ISO-8601 (year, week) key; sortable and usable as a dict key."""

    year: int
    week: int

    @classmethod
    def of(cls, day: dt.date) -> "IsoWeek":
        iso = day.isocalendar()
        return cls(iso[0], iso[1])

    @classmethod
    def parse(cls, label: str) -> "IsoWeek":
        # Accepts "2015-W03" or "2015W03".
        try:
            year, _, week = label.upper().partition("W")
            return cls(int(year.rstrip("-")), int(week))
        except ValueError as exc:
            raise ConfigError(f"bad ISO week label {label!r}, expected YYYY-Www") from exc

    @property
    def label(self) -> str:
        return f"{self.year}-W{self.week:02d}"

    def monday(self) -> dt.date:
        return dt.date.fromisocalendar(self.year, self.week, 1)

    def next(self) -> "IsoWeek":
        return IsoWeek.of(self.monday() + dt.timedelta(days=7))


def week_range(start: IsoWeek, stop: IsoWeek) -> list[IsoWeek]:
    """All ISO weeks from start to stop inclusive."""
    if stop < start:
        raise ConfigError(f"week range {start.label}..{stop.label} is reversed")
    out = [start]
    while out[-1] < stop:
        out.append(out[-1].next())
    return out


@dataclass(frozen=True)
class BusinessCalendar:
    """Weekday calendar minus an explicit holiday set."""

    holidays: frozenset[dt.date] = field(default_factory=frozenset)

    @classmethod
    def from_file(cls, path: str | Path) -> "BusinessCalendar":
        """Load holidays from a text file: one YYYY-MM-DD per line, '#' comments."""
        days = set()
        for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            try:
                days.add(dt.date.fromisoformat(text))
            except ValueError as exc:
                raise ConfigError(f"bad holiday date {text!r} at {path}:{lineno}") from exc
        return cls(frozenset(days))

    def is_business_day(self, day: dt.date) -> bool:
        return day.weekday() < 5 and day not in self.holidays

    def business_days(self, start: dt.date, stop: dt.date) -> Iterator[dt.date]:
        """Business days in [start, stop)."""
        day = start
        while day < stop:
            if self.is_business_day(day):
                yield day
            day += dt.timedelta(days=1)

    def business_days_in_week(self, week: IsoWeek) -> int:
        monday = week.monday()
        return sum(
            1 for i in range(7) if self.is_business_day(monday + dt.timedelta(days=i))
        )
