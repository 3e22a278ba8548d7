"""Sample-based (windowed) scoring.

Windows are labeled positive when they overlap any reference event by
more than 0 s, confusion counts are taken over the window grid, and the
full metric set (SE, SP, AC, PR, F1, NPV, FP/hr) is reported. Undefined
ratios (0/0) are reported as absent (None), never coerced to 0 or 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .errors import SingleClassError, ValidationError
from .events import EventTimeline
from .windows import WindowSeries, window_starts

SECONDS_PER_HOUR = 3600.0


@dataclass(frozen=True)
class ConfusionCounts:
    """Window-level 2x2 counts plus the monitored duration they cover."""

    tp: int
    tn: int
    fp: int
    fn: int
    monitored_duration: float

    def __post_init__(self):
        for name in ("tp", "tn", "fp", "fn"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be >= 0")
        if self.monitored_duration < 0:
            raise ValidationError("monitored_duration must be >= 0")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


def aggregate_confusion(per_recording: Sequence[ConfusionCounts]) -> ConfusionCounts:
    """Field-wise sums across recordings (micro-averaging input)."""
    if not per_recording:
        raise ValidationError("cannot aggregate an empty list of counts")
    return ConfusionCounts(
        tp=sum(c.tp for c in per_recording),
        tn=sum(c.tn for c in per_recording),
        fp=sum(c.fp for c in per_recording),
        fn=sum(c.fn for c in per_recording),
        monitored_duration=sum(c.monitored_duration for c in per_recording),
    )


def label_windows(reference: EventTimeline, window_length: float, hop: float) -> np.ndarray:
    """Binary ground-truth labels for the window grid of one recording.

    A window is positive iff ``[start, start + window_length)`` overlaps a
    reference event by more than 0 s (a whole cough or any fraction of
    one). The final partial window is dropped; a window length exceeding
    the recording duration yields an empty label array with a warning.
    """
    starts = window_starts(reference.duration, window_length, hop)
    labels = np.zeros(len(starts), dtype=bool)
    for ev in reference.events:
        # windows overlapping (onset, offset): start < offset and start + L > onset
        first = int(np.searchsorted(starts, ev.onset - window_length, side="right"))
        last = int(np.searchsorted(starts, ev.offset, side="left"))
        labels[first:last] = True
    return labels


def confusion_counts(
    decisions: WindowSeries, labels: Sequence[bool], duration: float
) -> ConfusionCounts:
    """Standard 2x2 counting of window decisions against labels.

    ``duration`` is the recording length in seconds (the window grid does
    not retain it); it becomes the monitored duration behind FP/hr.
    """
    labels = np.asarray(labels, dtype=bool)
    if len(labels) != len(decisions):
        raise ValidationError(
            f"decision/label length mismatch in '{decisions.recording_id}': "
            f"{len(decisions)} decisions vs {len(labels)} labels"
        )
    pred = decisions.decisions
    return ConfusionCounts(
        tp=int(np.sum(pred & labels)),
        tn=int(np.sum(~pred & ~labels)),
        fp=int(np.sum(pred & ~labels)),
        fn=int(np.sum(~pred & labels)),
        monitored_duration=float(duration),
    )


def _ratio(num: float, den: float) -> Optional[float]:
    return num / den if den > 0 else None


def _f1(se: Optional[float], pr: Optional[float]) -> Optional[float]:
    if se is None or pr is None or se + pr == 0:
        return None
    return 2.0 * se * pr / (se + pr)


def fp_per_hour(fp: int, monitored_duration: float) -> float:
    if monitored_duration <= 0:
        raise ValidationError("FP/hr requires a positive monitored duration")
    return fp / (monitored_duration / SECONDS_PER_HOUR)


@dataclass(frozen=True)
class MetricReport:
    """Named metric values plus the raw counts they derive from.

    ``metrics`` maps metric name to value, with None marking ratios whose
    denominator was zero. ``mode`` is "sample" or "event".
    """

    mode: str
    metrics: Mapping[str, Optional[float]]
    counts: Union[ConfusionCounts, "EventCounts"]  # noqa: F821 - event counts live in event_scoring


def sb_metrics(counts: ConfusionCounts) -> MetricReport:
    """Sensitivity, specificity, accuracy, precision, F1, NPV, and FP/hr."""
    se = _ratio(counts.tp, counts.tp + counts.fn)
    sp = _ratio(counts.tn, counts.tn + counts.fp)
    pr = _ratio(counts.tp, counts.tp + counts.fp)
    return MetricReport(
        mode="sample",
        metrics={
            "SE": se,
            "SP": sp,
            "AC": _ratio(counts.tp + counts.tn, counts.total),
            "PR": pr,
            "F1": _f1(se, pr),
            "NPV": _ratio(counts.tn, counts.tn + counts.fn),
            "FP_per_hr": fp_per_hour(counts.fp, counts.monitored_duration),
        },
        counts=counts,
    )


def roc_auc(scores: Sequence[float], labels: Sequence[bool]) -> float:
    """Area under the ROC curve (SE versus 1-SP over all thresholds).

    Trapezoidal integration over the distinct score thresholds; tied
    scores collapse onto one curve point, which makes the result equal to
    the rank statistic P(score+ > score-) with ties counting 1/2.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValidationError("scores and labels must be 1-D sequences of equal length")
    n_pos = int(np.sum(labels))
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassError(
            f"ROC-AUC needs both classes, got {n_pos} positive / {n_neg} negative labels"
        )
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = labels[order]
    tps = np.cumsum(sorted_labels)
    fps = np.arange(1, len(labels) + 1) - tps
    # keep only the last index of each tied-score run
    distinct = np.nonzero(np.diff(sorted_scores))[0]
    idx = np.concatenate([distinct, [len(labels) - 1]])
    tpr = np.concatenate([[0.0], tps[idx] / n_pos])
    fpr = np.concatenate([[0.0], fps[idx] / n_neg])
    return float(np.trapz(tpr, fpr))
