"""Interval algebra over cough events.

Times are seconds from recording start, always double precision, never
sample indices; conversion from samples happens at ingestion only.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import ValidationError

#: Default boundary tolerances (seconds) used for event matching.
DEFAULT_TOLERANCE = 0.25
#: Events longer than this (seconds) are split into multiple events.
DEFAULT_MAX_EVENT_DURATION = 0.6


@dataclass(frozen=True)
class Event:
    """One cough occurrence as an absolute time interval."""

    onset: float
    offset: float

    def __post_init__(self):
        if not (math.isfinite(self.onset) and math.isfinite(self.offset)):
            raise ValidationError(f"event bounds must be finite, got ({self.onset}, {self.offset})")
        if self.onset < 0:
            raise ValidationError(f"event onset must be >= 0, got {self.onset}")
        if self.offset <= self.onset:
            raise ValidationError(f"event must have offset > onset, got ({self.onset}, {self.offset})")

    @property
    def duration(self) -> float:
        return self.offset - self.onset

    def overlap(self, other: "Event") -> float:
        """Length of the intersection with another event, 0 if disjoint."""
        return max(0.0, min(self.offset, other.offset) - max(self.onset, other.onset))


@dataclass(frozen=True)
class EventTimeline:
    """Sorted, non-overlapping events for one recording.

    ``duration`` is the total recording length; every event lies inside
    ``[0, duration]``. Touching events (offset == next onset) are allowed
    here but merged by :func:`normalize_timeline`.
    """

    recording_id: str
    duration: float
    events: tuple[Event, ...]

    def __post_init__(self):
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise ValidationError(f"recording duration must be positive and finite, got {self.duration}")
        object.__setattr__(self, "events", tuple(self.events))
        prev = None
        for ev in self.events:
            if ev.offset > self.duration:
                raise ValidationError(
                    f"event ({ev.onset}, {ev.offset}) extends past recording duration "
                    f"{self.duration} in '{self.recording_id}'"
                )
            if prev is not None and ev.onset < prev.offset:
                raise ValidationError(
                    f"events ({prev.onset}, {prev.offset}) and ({ev.onset}, {ev.offset}) "
                    f"overlap or are out of order in '{self.recording_id}'"
                )
            prev = ev

    def __len__(self) -> int:
        return len(self.events)

    @property
    def total_event_duration(self) -> float:
        return sum(ev.duration for ev in self.events)


@dataclass(frozen=True)
class ScoringParams:
    """Event-matching configuration.

    Defaults follow cough physiology: 0.25 s boundary tolerances and a
    0.6 s maximum single-cough duration. ``min_separation`` is the gap
    used by the optional prediction merge pre-pass (off by default); the
    scorer itself never merges.
    """

    tolerance_start: float = DEFAULT_TOLERANCE
    tolerance_end: float = DEFAULT_TOLERANCE
    max_event_duration: float = DEFAULT_MAX_EVENT_DURATION
    min_separation: float = 0.0

    def __post_init__(self):
        for name in ("tolerance_start", "tolerance_end", "min_separation"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be >= 0")
        if self.max_event_duration <= 0:
            raise ValidationError("max_event_duration must be > 0")


def _as_event(raw) -> Event:
    if isinstance(raw, Event):
        return raw
    onset, offset = raw
    return Event(float(onset), float(offset))


def normalize_timeline(
    raw_events: Iterable[Event | tuple[float, float]],
    recording_id: str,
    duration: float,
) -> EventTimeline:
    """Sort, merge, and clip raw events into a valid timeline.

    Overlapping or touching events are merged into one (a zero-gap
    boundary between two annotations is an artifact, and downstream
    matching is any-overlap). Events are clipped to ``[0, duration]``.

    Raises ValidationError for non-positive duration or an event whose
    onset is at or past the end of the recording.
    """
    if not (math.isfinite(duration) and duration > 0):
        raise ValidationError(f"recording duration must be positive, got {duration}")
    events = sorted((_as_event(e) for e in raw_events), key=lambda ev: (ev.onset, ev.offset))
    merged: list[list[float]] = []
    for ev in events:
        if ev.onset >= duration:
            raise ValidationError(
                f"event ({ev.onset}, {ev.offset}) starts at or past recording duration "
                f"{duration} in '{recording_id}'"
            )
        onset = ev.onset
        offset = min(ev.offset, duration)
        if merged and onset <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], offset)
        else:
            merged.append([onset, offset])
    return EventTimeline(recording_id, duration, tuple(Event(on, off) for on, off in merged))


def _split_event(event: Event, max_duration: float) -> list[Event]:
    pieces = []
    start = event.onset
    while event.offset - start > max_duration:
        end = start + max_duration
        # float rounding can make end - start exceed max_duration by one
        # ulp; nudge down so no piece ever exceeds the bound
        while end - start > max_duration:
            end = math.nextafter(end, start)
        pieces.append(Event(start, end))
        start = end
    pieces.append(Event(start, event.offset))
    return pieces


def split_long_events(timeline: EventTimeline, max_event_duration: float) -> EventTimeline:
    """Segment every event longer than ``max_event_duration`` into pieces.

    All pieces but the last have the maximum length and are contiguous,
    so the union of output intervals equals the input intervals.
    """
    if max_event_duration <= 0:
        raise ValidationError("max_event_duration must be > 0")
    out: list[Event] = []
    for ev in timeline.events:
        if ev.duration <= max_event_duration:
            out.append(ev)
        else:
            out.extend(_split_event(ev, max_event_duration))
    return EventTimeline(timeline.recording_id, timeline.duration, tuple(out))


def extend_with_tolerance(event: Event, params: ScoringParams) -> Event:
    """Widen an event by the matching tolerances, clamping the onset at 0."""
    return Event(max(0.0, event.onset - params.tolerance_start), event.offset + params.tolerance_end)


def merge_close_events(timeline: EventTimeline, min_gap: float) -> EventTimeline:
    """Merge consecutive events separated by less than ``min_gap`` seconds.

    Used as the optional pre-pass over predictions before event scoring;
    ``min_gap <= 0`` returns the timeline unchanged.
    """
    if min_gap <= 0 or len(timeline) < 2:
        return timeline
    merged = [[timeline.events[0].onset, timeline.events[0].offset]]
    for ev in timeline.events[1:]:
        if ev.onset - merged[-1][1] < min_gap:
            merged[-1][1] = max(merged[-1][1], ev.offset)
        else:
            merged.append([ev.onset, ev.offset])
    return EventTimeline(
        timeline.recording_id, timeline.duration, tuple(Event(on, off) for on, off in merged)
    )


# ---------------------------------------------------------------------------
# Event-list CSV: header `recording_id,onset_s,offset_s`, decimal seconds,
# one event per row. Shared by every module that reads or writes events.

EVENT_CSV_HEADER = ("recording_id", "onset_s", "offset_s")


def read_event_csv(path) -> dict[str, list[Event]]:
    """Read an event-list CSV into raw (unnormalized) events per recording."""
    per_recording: dict[str, list[Event]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != EVENT_CSV_HEADER:
            raise ValidationError(
                f"{path}: expected header {','.join(EVENT_CSV_HEADER)}, got {header}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ValidationError(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
            rec_id = row[0].strip()
            try:
                event = Event(float(row[1]), float(row[2]))
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from exc
            per_recording.setdefault(rec_id, []).append(event)
    return per_recording


def write_event_csv(path, timelines: Sequence[EventTimeline]) -> None:
    """Write timelines to the shared event-list CSV format."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(EVENT_CSV_HEADER)
        for timeline in timelines:
            for ev in timeline.events:
                writer.writerow([timeline.recording_id, repr(ev.onset), repr(ev.offset)])
