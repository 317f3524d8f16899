"""Per-time display states for traffic signal heads.

Turns the discrete state-string log into per-link color intervals, then
answers display queries for the three head designs. Yellow is inserted
automatically into the tail of a green interval that switches to red,
unless the log itself already contains explicit yellow for that link.
"""

from __future__ import annotations

import bisect
import enum
import logging
import warnings
from dataclasses import dataclass, field
from math import ceil

from .errors import ValidationError
from .ingest import SignalStateLog

log = logging.getLogger(__name__)


class LampColor(enum.Enum):
    GREEN = "green"
    YELLOW = "yellow"
    RED = "red"
    DARK = "dark"


class HeadDesign(enum.Enum):
    TWO_HEAD = "two_head"  # red and green only
    THREE_HEAD = "three_head"  # red, yellow, green
    COUNTDOWN = "countdown"  # red/green plus a seconds-to-switch numeral


_CHAR_COLOR = {
    "G": LampColor.GREEN,
    "g": LampColor.GREEN,
    "y": LampColor.YELLOW,
    "r": LampColor.RED,
    "u": LampColor.RED,
    "o": LampColor.DARK,
    "O": LampColor.DARK,
}

DEFAULT_YELLOW_DURATION = 3.0


@dataclass
class _LinkTimeline:
    starts: list[float] = field(default_factory=list)
    colors: list[LampColor] = field(default_factory=list)


@dataclass
class SignalTimeline:
    """Immutable per-link color intervals; queries are pure and thread-safe."""

    _links: dict[tuple[str, int], _LinkTimeline] = field(default_factory=dict)
    _explicit_yellow: set[tuple[str, int]] = field(default_factory=set)

    def known(self, tls_id: str, link: int) -> bool:
        return (tls_id, link) in self._links

    def links(self) -> list[tuple[str, int]]:
        return sorted(self._links.keys())

    def link_count(self, tls_id: str) -> int:
        return sum(1 for key in self._links if key[0] == tls_id)

    def has_explicit_yellow(self, tls_id: str, link: int) -> bool:
        return (tls_id, link) in self._explicit_yellow

    def intervals(self, tls_id: str, link: int) -> list[tuple[float, LampColor]]:
        tl = self._links.get((tls_id, link))
        return list(zip(tl.starts, tl.colors)) if tl else []

    def raw_color_at(self, tls_id: str, link: int, t: float) -> LampColor:
        """Logged color at time t; dark before the first entry.

        The final logged state holds for all later times: the log records
        switches, so the last entry is the last known state.
        """
        tl = self._links.get((tls_id, link))
        if tl is None or not tl.starts:
            return LampColor.DARK
        idx = bisect.bisect_right(tl.starts, t) - 1
        if idx < 0:
            return LampColor.DARK
        return tl.colors[idx]

    def next_switch(self, tls_id: str, link: int, t: float) -> float | None:
        """Time of the next raw color change strictly after t, or None."""
        tl = self._links.get((tls_id, link))
        if tl is None:
            return None
        idx = bisect.bisect_right(tl.starts, t)
        return tl.starts[idx] if idx < len(tl.starts) else None

    def current_interval(
        self, tls_id: str, link: int, t: float
    ) -> tuple[float, float | None, LampColor, LampColor | None]:
        """(start, end, color, next_color) of the interval containing t."""
        tl = self._links[(tls_id, link)]
        idx = bisect.bisect_right(tl.starts, t) - 1
        start = tl.starts[idx]
        if idx + 1 < len(tl.starts):
            return start, tl.starts[idx + 1], tl.colors[idx], tl.colors[idx + 1]
        return start, None, tl.colors[idx], None


def build_signal_timeline(signal_log: SignalStateLog) -> SignalTimeline:
    """Derive per-link color intervals from a state-string log.

    State strings for the same tls id must all have the same length; entries
    that repeat the previous color for a link are coalesced into one interval.
    """
    timeline = SignalTimeline()
    lengths: dict[str, int] = {}
    for t, tls_id, state in signal_log.entries:
        expected = lengths.setdefault(tls_id, len(state))
        if len(state) != expected:
            raise ValidationError(
                f"tls {tls_id!r} has state strings of differing length "
                f"({expected} then {len(state)})"
            )
        for link, ch in enumerate(state):
            color = _CHAR_COLOR[ch]
            if color is LampColor.YELLOW:
                timeline._explicit_yellow.add((tls_id, link))
            tl = timeline._links.setdefault((tls_id, link), _LinkTimeline())
            if tl.colors and tl.colors[-1] is color:
                continue
            tl.starts.append(t)
            tl.colors.append(color)
    return timeline


def display_state_at(
    timeline: SignalTimeline,
    tls_id: str,
    link: int,
    t: float,
    design: HeadDesign,
    yellow_duration: float = DEFAULT_YELLOW_DURATION,
) -> LampColor:
    """Displayed lamp color for a head of the given design at time t.

    Three-head designs show yellow for the last ``yellow_duration`` seconds
    of a green interval that switches to red; logs already containing
    explicit yellow for the link are honored verbatim instead. Two-head
    designs have no yellow lamp and display logged yellow as red.
    """
    if yellow_duration < 0:
        raise ValidationError("yellow_duration must be >= 0")
    if not timeline.known(tls_id, link):
        warnings.warn(f"unknown signal link ({tls_id!r}, {link}); displaying dark")
        return LampColor.DARK
    raw = timeline.raw_color_at(tls_id, link, t)
    if design is HeadDesign.TWO_HEAD:
        return LampColor.RED if raw is LampColor.YELLOW else raw
    if design is HeadDesign.THREE_HEAD:
        if (
            raw is LampColor.GREEN
            and yellow_duration > 0
            and not timeline.has_explicit_yellow(tls_id, link)
        ):
            _, end, _, next_color = timeline.current_interval(tls_id, link, t)
            if end is not None and next_color is LampColor.RED and t >= end - yellow_duration:
                return LampColor.YELLOW
        return raw
    return raw  # countdown: numeral handled by countdown_at


def countdown_at(timeline: SignalTimeline, tls_id: str, link: int, t: float) -> int:
    """Whole seconds until the next raw color change; 0 when none remains."""
    if not timeline.known(tls_id, link):
        warnings.warn(f"unknown signal link ({tls_id!r}, {link}); countdown 0")
        return 0
    nxt = timeline.next_switch(tls_id, link, t)
    if nxt is None:
        return 0
    return max(0, ceil(nxt - t - 1e-9))
