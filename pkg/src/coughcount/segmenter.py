"""Physiology-constrained conversion of window decisions into cough events.

Pipeline: the union of classifier-positive windows defines the search
spans; within each span, hysteresis thresholding on the short-time signal
power finds cough spike regions; regions whose peaks are closer than a
physiological minimum are merged; each surviving spike becomes an event
whose end is placed from the running average cough duration of the
current burst; anything longer than a single cough is split.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .events import Event, EventTimeline, split_long_events
from .windows import WindowSeries


@dataclass(frozen=True)
class CoughPhaseModel:
    """Durations (seconds) of the physiological phases of a cough.

    Compressive build-up ~0.2 s (visible mainly in chest kinematics),
    explosive spike 0.03-0.05 s, expiratory decay 0.2-0.5 s; a whole
    cough typically lasts 0.3-0.5 s and never more than 0.6 s once vocal
    artefacts are allowed for.
    """

    compressive: tuple[float, float] = (0.0, 0.2)
    spike: tuple[float, float] = (0.03, 0.05)
    expiratory: tuple[float, float] = (0.2, 0.5)
    typical_duration: tuple[float, float] = (0.3, 0.5)
    max_duration: float = 0.6

    def __post_init__(self):
        for name in ("compressive", "spike", "expiratory", "typical_duration"):
            lo, hi = getattr(self, name)
            if not 0 <= lo <= hi:
                raise ValidationError(f"phase range {name} must satisfy 0 <= lo <= hi")
        if self.max_duration < self.typical_duration[1]:
            raise ValidationError("max_duration must cover the upper typical duration")

    @property
    def min_event_duration(self) -> float:
        """Shortest plausible cough: minimal spike plus minimal expiratory phase."""
        return self.spike[0] + self.expiratory[0]


@dataclass(frozen=True)
class SegmenterConfig:
    """Tunables of the segmentation pipeline.

    Hysteresis thresholds are fractions of the per-span peak power, so the
    detector is robust to recording-level gain differences. The 0.2 s
    minimum peak separation mirrors the expiratory minimum: a new spike
    cannot occur earlier. 10 ms / 5 ms power frames resolve the 0.03 s
    spike comfortably. A burst ends after ``burst_reset_gap`` without
    events, which also resets the running average duration.
    """

    hi_fraction: float = 0.3
    lo_fraction: float = 0.1
    min_peak_separation: float = 0.2
    avg_duration_init: float = 0.35
    burst_reset_gap: float = 1.0
    frame_length: float = 0.010
    frame_hop: float = 0.005
    phase_model: CoughPhaseModel = field(default_factory=CoughPhaseModel)

    def __post_init__(self):
        if not 0 < self.lo_fraction < self.hi_fraction <= 1:
            raise ValidationError("need 0 < lo_fraction < hi_fraction <= 1")
        if self.min_peak_separation <= 0:
            raise ValidationError("min_peak_separation must be > 0")
        if self.frame_length < self.frame_hop or self.frame_hop <= 0:
            raise ValidationError("need frame_length >= frame_hop > 0")
        if self.avg_duration_init <= 0 or self.burst_reset_gap <= 0:
            raise ValidationError("avg_duration_init and burst_reset_gap must be > 0")


@dataclass(frozen=True)
class PowerEnvelope:
    """Short-time mean-square power on a uniform frame grid."""

    start_time: float
    frame_length: float
    frame_hop: float
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if np.any(values < 0):
            raise ValidationError("power values must be >= 0")
        object.__setattr__(self, "values", values)

    @property
    def frame_starts(self) -> np.ndarray:
        return self.start_time + np.arange(len(self.values)) * self.frame_hop

    @property
    def frame_centers(self) -> np.ndarray:
        return self.frame_starts + self.frame_length / 2.0


@dataclass(frozen=True)
class SpikeRegion:
    """A candidate cough spike: contiguous frames above the hysteresis floor."""

    start: float
    end: float
    peak_time: float
    peak_power: float


def power_envelope(
    audio: np.ndarray, sample_rate: float, frame_length: float = 0.010, frame_hop: float = 0.005
) -> PowerEnvelope:
    """Mean squared amplitude per frame.

    Frames shorter than the signal tail are dropped; a signal shorter than
    one frame yields a single frame over all of it.
    """
    audio = np.asarray(audio, dtype=np.float64)
    if audio.ndim != 1 or len(audio) == 0:
        raise ValidationError("audio must be a non-empty mono signal")
    if sample_rate <= 0:
        raise ValidationError("sample_rate must be > 0")
    if frame_length < frame_hop or frame_hop <= 0:
        raise ValidationError("need frame_length >= frame_hop > 0")
    frame_n = max(1, round(frame_length * sample_rate))
    hop_n = max(1, round(frame_hop * sample_rate))
    if len(audio) < frame_n:
        frame_n = len(audio)
    n_frames = (len(audio) - frame_n) // hop_n + 1
    csum = np.concatenate([[0.0], np.cumsum(audio * audio)])
    starts = np.arange(n_frames) * hop_n
    values = (csum[starts + frame_n] - csum[starts]) / frame_n
    # cumulative sums can leave tiny negative residue on silent stretches
    np.maximum(values, 0.0, out=values)
    return PowerEnvelope(
        start_time=0.0,
        frame_length=frame_n / sample_rate,
        frame_hop=hop_n / sample_rate,
        values=values,
    )


def positive_spans(decisions: WindowSeries) -> list[tuple[float, float]]:
    """Union of the classifier-positive window intervals, merged."""
    spans: list[list[float]] = []
    for start, flag in zip(decisions.starts, decisions.decisions):
        if not flag:
            continue
        end = float(start) + decisions.window_length
        if spans and start <= spans[-1][1]:
            spans[-1][1] = max(spans[-1][1], end)
        else:
            spans.append([float(start), end])
    return [(s, e) for s, e in spans]


def hysteresis_regions(
    envelope: PowerEnvelope,
    spans: Sequence[tuple[float, float]],
    config: SegmenterConfig,
) -> list[SpikeRegion]:
    """Two-threshold spike detection within the classifier-positive spans.

    Each span is thresholded against its own peak power: a region opens at
    ``hi_fraction * peak`` and persists down to ``lo_fraction * peak``,
    suppressing the chatter a single threshold would produce. No region is
    ever produced outside a span.
    """
    regions: list[SpikeRegion] = []
    centers = envelope.frame_centers
    starts = envelope.frame_starts
    values = envelope.values
    for span_start, span_end in spans:
        idx = np.nonzero((centers >= span_start) & (centers < span_end))[0]
        if len(idx) == 0:
            continue
        peak = float(np.max(values[idx]))
        if peak <= 0.0:
            continue
        hi = config.hi_fraction * peak
        lo = config.lo_fraction * peak
        open_at = None
        for i in idx:
            v = values[i]
            if open_at is None:
                if v >= hi:
                    open_at = i
            elif v < lo:
                regions.append(_close_region(open_at, i - 1, starts, values, envelope.frame_length))
                open_at = None
        if open_at is not None:
            regions.append(_close_region(open_at, int(idx[-1]), starts, values, envelope.frame_length))
    return regions


def _close_region(first: int, last: int, starts, values, frame_length: float) -> SpikeRegion:
    peak_idx = first + int(np.argmax(values[first : last + 1]))
    return SpikeRegion(
        start=float(starts[first]),
        end=float(starts[last]) + frame_length,
        peak_time=float(starts[peak_idx]) + frame_length / 2.0,
        peak_power=float(values[peak_idx]),
    )


def _merge_regions(regions: Sequence[SpikeRegion], min_separation: float) -> list[SpikeRegion]:
    """Fuse regions whose peaks are physiologically too close.

    Peak distances are measured from the first region of each group; the
    merged region spans the union and keeps the strongest peak as its
    spike.
    """
    merged: list[SpikeRegion] = []
    i = 0
    while i < len(regions):
        anchor = regions[i]
        start, end = anchor.start, anchor.end
        peak_time, peak_power = anchor.peak_time, anchor.peak_power
        j = i + 1
        while j < len(regions) and regions[j].peak_time - anchor.peak_time < min_separation:
            start = min(start, regions[j].start)
            end = max(end, regions[j].end)
            if regions[j].peak_power > peak_power:
                peak_time, peak_power = regions[j].peak_time, regions[j].peak_power
            j += 1
        merged.append(SpikeRegion(start, end, peak_time, peak_power))
        i = j
    return merged


def refine_events(
    regions: Sequence[SpikeRegion],
    duration: float,
    config: SegmenterConfig,
    recording_id: str = "",
    initial_avg: float | None = None,
) -> EventTimeline:
    """Turn spike regions into non-overlapping cough events.

    Each merged region starts an event at the region onset; the event end
    is the running average cough duration (clamped to the physiological
    range, initialized to ``avg_duration_init``) past the onset, extended
    to cover the whole region when the region itself is longer, and
    truncated so it never crosses the next event's onset or the recording
    end. The running average is the mean of realized durations within the
    current burst; a gap of ``burst_reset_gap`` without events resets it.
    """
    if any(b.peak_time < a.peak_time for a, b in zip(regions, regions[1:])):
        raise ValidationError("spike regions must be sorted by peak time")
    phase = config.phase_model
    min_dur = phase.min_event_duration
    max_dur = phase.max_duration
    groups = _merge_regions(regions, config.min_peak_separation)

    events: list[Event] = []
    burst_durations: list[float] = []
    for k, group in enumerate(groups):
        onset = group.start
        if onset >= duration:
            continue
        if events and onset - events[-1].offset > config.burst_reset_gap:
            burst_durations = []
        if burst_durations:
            avg = sum(burst_durations) / len(burst_durations)
        else:
            avg = config.avg_duration_init if initial_avg is None else initial_avg
        offset = onset + min(max(avg, min_dur), max_dur)
        offset = max(offset, group.end)
        if k + 1 < len(groups):
            offset = min(offset, groups[k + 1].start)
        offset = min(offset, duration)
        if offset <= onset:
            continue
        events.append(Event(onset, offset))
        realized = offset - onset
        burst_durations.append(min(max(realized, min_dur), max_dur))
    return EventTimeline(recording_id, duration, tuple(events))


def segment_events(
    audio: np.ndarray,
    sample_rate: float,
    decisions: WindowSeries,
    config: SegmenterConfig | None = None,
) -> EventTimeline:
    """Full pipeline from window decisions plus raw audio to cough events.

    Decisions are expected from a classifier run with 50% window overlap
    so neighbouring windows cover every spike; any grid works, since only
    the union of positive windows matters. Deterministic; all-negative
    decisions yield an empty timeline.
    """
    if config is None:
        config = SegmenterConfig()
    audio = np.asarray(audio, dtype=np.float64)
    duration = len(audio) / sample_rate
    if duration <= 0:
        raise ValidationError("audio must be non-empty")
    spans = positive_spans(decisions)
    if not spans:
        return EventTimeline(decisions.recording_id, duration, ())
    envelope = power_envelope(audio, sample_rate, config.frame_length, config.frame_hop)
    regions = hysteresis_regions(envelope, spans, config)
    timeline = refine_events(regions, duration, config, recording_id=decisions.recording_id)
    return split_long_events(timeline, config.phase_model.max_duration)


