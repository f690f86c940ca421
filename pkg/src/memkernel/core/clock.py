"""UTC clocks and the canonical timestamp form.

All instants are timezone-aware UTC datetimes with microsecond precision and
serialize as `YYYY-MM-DDTHH:MM:SS.ffffffZ` (always six fractional digits, so
equal instants always produce equal bytes).
"""

from __future__ import annotations

import threading
from datetime import datetime, timezone

UTC = timezone.utc

EPOCH = datetime(1970, 1, 1, tzinfo=UTC)


def utc_now() -> datetime:
    return datetime.now(tz=UTC)


def format_instant(dt: datetime) -> str:
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=UTC)
    return dt.astimezone(UTC).strftime("%Y-%m-%dT%H:%M:%S.%f") + "Z"


def parse_instant(text: str) -> datetime:
    """Parse an ISO-8601 instant; a trailing Z or an explicit offset both work."""
    raw = text.strip()
    if raw.endswith("Z") or raw.endswith("z"):
        raw = raw[:-1] + "+00:00"
    dt = datetime.fromisoformat(raw)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=UTC)
    return dt.astimezone(UTC)


class SystemClock:
    """Wall-clock time; only deployments in Real mode use this."""

    def now(self) -> datetime:
        return utc_now()


class ManualClock:
    """Injected clock: advances only when told, never goes backwards."""

    def __init__(self, start: datetime | None = None):
        self._now = start if start is not None else EPOCH
        self._lock = threading.Lock()

    def now(self) -> datetime:
        with self._lock:
            return self._now

    def set(self, instant: datetime) -> None:
        with self._lock:
            self._now = instant

    def observe(self, instant: datetime) -> datetime:
        """Advance to `instant` if it is ahead; returns the current time."""
        with self._lock:
            if instant > self._now:
                self._now = instant
            return self._now
