"""Event-based scoring with tolerance-aware any-overlap matching.

A reference event is a TP when at least one predicted event overlaps its
tolerance-extended interval by more than the minimum overlap (0 s by
default), otherwise an FN. A predicted event is an FP only when it
overlaps no extended reference event; one prediction covering several
references marks each of them TP without itself becoming an FP. TNs are
undefined at the event level.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import ValidationError
from .events import (
    EventTimeline,
    ScoringParams,
    extend_with_tolerance,
    merge_close_events,
)
from .sample_scoring import MetricReport, _f1, _ratio, fp_per_hour


@dataclass(frozen=True)
class EventCounts:
    """Event-level match counts for one or more recordings."""

    tp: int
    fn: int
    fp: int
    n_ref: int
    n_pred: int
    monitored_duration: float

    def __post_init__(self):
        for name in ("tp", "fn", "fp", "n_ref", "n_pred"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be >= 0")
        if self.tp + self.fn != self.n_ref:
            raise ValidationError(f"tp + fn must equal n_ref, got {self.tp}+{self.fn} != {self.n_ref}")
        if self.fp > self.n_pred:
            raise ValidationError(f"fp ({self.fp}) cannot exceed n_pred ({self.n_pred})")
        if self.monitored_duration < 0:
            raise ValidationError("monitored_duration must be >= 0")


def _check_same_recording(reference: EventTimeline, predicted: EventTimeline) -> None:
    if reference.recording_id != predicted.recording_id:
        raise ValidationError(
            f"cannot score '{predicted.recording_id}' against reference "
            f"'{reference.recording_id}': recordings differ"
        )
    if reference.duration != predicted.duration:
        raise ValidationError(
            f"timeline durations differ for '{reference.recording_id}': "
            f"{reference.duration} vs {predicted.duration}"
        )


def score_events(
    reference: EventTimeline,
    predicted: EventTimeline,
    params: ScoringParams,
    *,
    min_overlap: float = 0.0,
    merge_predictions: bool = False,
) -> EventCounts:
    """Match predicted against reference events for one recording.

    Both timelines must already be normalized, with long events split per
    ``params.max_event_duration``. Tolerances extend reference events
    only: they model annotation boundary uncertainty of the ground truth.
    ``merge_predictions`` enables the optional pre-pass fusing predictions
    separated by less than ``params.min_separation`` (off by default).
    """
    _check_same_recording(reference, predicted)
    if merge_predictions:
        predicted = merge_close_events(predicted, params.min_separation)
    extended = [extend_with_tolerance(ev, params) for ev in reference.events]

    tp = 0
    pred_matched = [False] * len(predicted.events)
    for ref in extended:
        hit = False
        for j, pred in enumerate(predicted.events):
            if pred.onset >= ref.offset:
                break
            if ref.overlap(pred) > min_overlap:
                hit = True
                pred_matched[j] = True
        if hit:
            tp += 1
    fp = pred_matched.count(False)
    return EventCounts(
        tp=tp,
        fn=len(reference.events) - tp,
        fp=fp,
        n_ref=len(reference.events),
        n_pred=len(predicted.events),
        monitored_duration=reference.duration,
    )


def aggregate_counts(per_recording: Sequence[EventCounts]) -> EventCounts:
    """Field-wise sums across recordings; monitored durations add up."""
    if not per_recording:
        raise ValidationError("cannot aggregate an empty list of counts")
    return EventCounts(
        tp=sum(c.tp for c in per_recording),
        fn=sum(c.fn for c in per_recording),
        fp=sum(c.fp for c in per_recording),
        n_ref=sum(c.n_ref for c in per_recording),
        n_pred=sum(c.n_pred for c in per_recording),
        monitored_duration=sum(c.monitored_duration for c in per_recording),
    )


def eb_metrics(counts: EventCounts) -> MetricReport:
    """SE, PR, F1, and FP/hr from event counts (0/0 reported as absent)."""
    se = _ratio(counts.tp, counts.tp + counts.fn)
    pr = _ratio(counts.tp, counts.tp + counts.fp)
    return MetricReport(
        mode="event",
        metrics={
            "SE": se,
            "PR": pr,
            "F1": _f1(se, pr),
            "FP_per_hr": fp_per_hour(counts.fp, counts.monitored_duration),
        },
        counts=counts,
    )
