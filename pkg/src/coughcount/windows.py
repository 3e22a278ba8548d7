"""Fixed-length analysis windows and the window-prediction CSV format."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

#: Grid arithmetic tolerance (seconds). Window counts are exact integers in
#: real arithmetic; this absorbs float rounding like (5.6-0.8)/0.8 = 5.999...
GRID_EPS = 1e-9


def window_count(duration: float, window_length: float, hop: float) -> int:
    """Number of full windows on the grid; the final partial window is dropped."""
    if window_length <= 0:
        raise ValidationError(f"window_length must be > 0, got {window_length}")
    if hop <= 0:
        raise ValidationError(f"hop must be > 0, got {hop}")
    if window_length > duration + GRID_EPS:
        return 0
    return int(np.floor((duration - window_length) / hop + GRID_EPS)) + 1


def window_starts(duration: float, window_length: float, hop: float) -> np.ndarray:
    """Start times ``k * hop`` of all full windows within the recording."""
    n = window_count(duration, window_length, hop)
    if n == 0:
        warnings.warn(
            f"window_length {window_length} s exceeds recording duration {duration} s; "
            "no windows produced",
            stacklevel=2,
        )
        return np.empty(0, dtype=np.float64)
    return np.arange(n, dtype=np.float64) * hop


@dataclass(frozen=True)
class WindowSeries:
    """Per-window scores and binary decisions for one recording.

    ``starts`` holds the window start times; window ``i`` covers
    ``[starts[i], starts[i] + window_length)``.
    """

    recording_id: str
    window_length: float
    hop: float
    starts: np.ndarray
    scores: np.ndarray
    decisions: np.ndarray

    def __post_init__(self):
        if self.window_length <= 0:
            raise ValidationError("window_length must be > 0")
        if self.hop <= 0:
            raise ValidationError("hop must be > 0")
        starts = np.asarray(self.starts, dtype=np.float64)
        scores = np.asarray(self.scores, dtype=np.float64)
        decisions = np.asarray(self.decisions, dtype=bool)
        if not (len(starts) == len(scores) == len(decisions)):
            raise ValidationError(
                f"starts/scores/decisions length mismatch in '{self.recording_id}': "
                f"{len(starts)}/{len(scores)}/{len(decisions)}"
            )
        if len(starts) and (np.any(np.diff(starts) <= 0) or starts[0] < 0):
            raise ValidationError(f"window starts must be non-negative and increasing in '{self.recording_id}'")
        if len(scores) and (np.any(scores < 0) or np.any(scores > 1)):
            raise ValidationError(f"scores must lie in [0, 1] in '{self.recording_id}'")
        object.__setattr__(self, "starts", starts)
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "decisions", decisions)

    def __len__(self) -> int:
        return len(self.starts)


# ---------------------------------------------------------------------------
# Window-prediction CSV: one row per window.

WINDOW_CSV_HEADER = ("recording_id", "window_start_s", "window_length_s", "score", "decision")


def write_window_csv(path, series_list) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(WINDOW_CSV_HEADER)
        for series in series_list:
            for start, score, decision in zip(series.starts, series.scores, series.decisions):
                writer.writerow(
                    [series.recording_id, repr(float(start)), repr(series.window_length),
                     repr(float(score)), int(decision)]
                )


def read_window_csv(path) -> dict[str, WindowSeries]:
    """Parse a window-prediction CSV into one series per recording.

    Rows are validated individually (score range, decision flag) with the
    offending line number in the message; the per-recording grid must have
    a uniform hop.
    """
    rows: dict[str, list[tuple[float, float, float, bool]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != WINDOW_CSV_HEADER:
            raise ValidationError(
                f"{path}: expected header {','.join(WINDOW_CSV_HEADER)}, got {header}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise ValidationError(f"{path}:{lineno}: expected 5 columns, got {len(row)}")
            rec_id = row[0].strip()
            try:
                start, length, score = float(row[1]), float(row[2]), float(row[3])
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from exc
            if not 0.0 <= score <= 1.0:
                raise ValidationError(f"{path}:{lineno}: score {score} outside [0, 1]")
            if row[4].strip() not in ("0", "1"):
                raise ValidationError(f"{path}:{lineno}: decision must be 0 or 1, got {row[4]!r}")
            rows.setdefault(rec_id, []).append((start, length, score, row[4].strip() == "1"))
    out = {}
    for rec_id, entries in rows.items():
        entries.sort(key=lambda e: e[0])
        lengths = {e[1] for e in entries}
        if len(lengths) != 1:
            raise ValidationError(f"{path}: recording '{rec_id}' mixes window lengths {sorted(lengths)}")
        starts = np.array([e[0] for e in entries])
        hops = np.diff(starts)
        if len(hops) and np.ptp(hops) > GRID_EPS:
            raise ValidationError(f"{path}: recording '{rec_id}' has a non-uniform window hop")
        # single-window recordings carry no hop information; use the length
        hop = float(hops[0]) if len(hops) else entries[0][1]
        out[rec_id] = WindowSeries(
            recording_id=rec_id,
            window_length=entries[0][1],
            hop=hop,
            starts=starts,
            scores=np.array([e[2] for e in entries]),
            decisions=np.array([e[3] for e in entries], dtype=bool),
        )
    return out
