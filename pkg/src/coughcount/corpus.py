"""Dataset ingestion, class-imbalance scenario construction, and window cutting.

A corpus root holds mono PCM WAV files, a manifest CSV
(`recording_id,file_path,sound_class,subject_id`, paths relative to the
audio directory) and an annotations CSV in the shared event-list format.
Cough recordings get a normalized reference timeline; all other classes
get an empty one.
"""

from __future__ import annotations

import csv
import hashlib
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional

import numpy as np
from scipy.io import wavfile

from .errors import CorpusError, ValidationError
from .events import EventTimeline, normalize_timeline, read_event_csv
from .windows import window_count, window_starts

SOUND_CLASSES = frozenset(
    {"cough", "silence", "background", "breathing", "throat-clearing", "speech", "laughter", "other-noise"}
)

MANIFEST_HEADER = ("recording_id", "file_path", "sound_class", "subject_id")


@dataclass(frozen=True)
class Recording:
    """One recording's audio and metadata.

    ``audio`` may be None for metadata-only corpora (scenario math needs
    only durations and classes); when present it is mono float64 in
    [-1, 1] and ``duration == len(audio) / sample_rate``.
    """

    recording_id: str
    sample_rate: float
    duration: float
    sound_class: str
    subject_id: str
    audio: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.sound_class not in SOUND_CLASSES:
            raise CorpusError(
                f"unknown sound_class '{self.sound_class}' for '{self.recording_id}'; "
                f"expected one of {sorted(SOUND_CLASSES)}"
            )
        if self.duration <= 0:
            raise CorpusError(f"recording '{self.recording_id}' has non-positive duration")
        if self.audio is not None:
            audio = np.asarray(self.audio, dtype=np.float64)
            if audio.ndim != 1:
                raise CorpusError(f"recording '{self.recording_id}' is not mono")
            if len(audio) != round(self.duration * self.sample_rate):
                raise CorpusError(
                    f"recording '{self.recording_id}': duration {self.duration} s does not "
                    f"match {len(audio)} samples at {self.sample_rate} Hz"
                )
            object.__setattr__(self, "audio", audio)


@dataclass
class Corpus:
    """Recordings plus one reference timeline per recording."""

    recordings: dict[str, Recording]
    references: dict[str, EventTimeline]

    def __len__(self) -> int:
        return len(self.recordings)

    def subset(self, recording_ids) -> "Corpus":
        keep = set(recording_ids)
        return Corpus(
            recordings={k: v for k, v in self.recordings.items() if k in keep},
            references={k: v for k, v in self.references.items() if k in keep},
        )

    def content_hash(self) -> str:
        """Stable digest of ids, classes, durations and event counts."""
        h = hashlib.sha256()
        for rec_id in sorted(self.recordings):
            rec = self.recordings[rec_id]
            ref = self.references[rec_id]
            h.update(f"{rec_id}|{rec.sound_class}|{rec.subject_id}|{rec.duration!r}|{len(ref)}\n".encode())
            for ev in ref.events:
                h.update(f"{ev.onset!r},{ev.offset!r}\n".encode())
        return h.hexdigest()


def _read_wav(path: Path, recording_id: str) -> tuple[float, np.ndarray]:
    if not path.exists():
        raise FileNotFoundError(f"audio file for '{recording_id}' not found: {path}")
    try:
        rate, data = wavfile.read(path)
    except Exception as exc:
        raise CorpusError(f"unreadable WAV for '{recording_id}' at {path}: {exc}") from exc
    if data.ndim != 1:
        raise CorpusError(
            f"'{recording_id}' has {data.shape[1]} channels; only mono PCM WAV is accepted"
        )
    if data.dtype.kind == "i":
        scale = float(np.iinfo(data.dtype).max)
        audio = data.astype(np.float64) / scale
    elif data.dtype.kind == "u":
        # 8-bit PCM is unsigned with midpoint 128
        audio = (data.astype(np.float64) - 128.0) / 127.0
    else:
        audio = data.astype(np.float64)
    return float(rate), audio


def read_manifest(manifest_path) -> list[dict[str, str]]:
    rows = []
    with open(manifest_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != MANIFEST_HEADER:
            raise CorpusError(
                f"{manifest_path}: expected header {','.join(MANIFEST_HEADER)}, got {header}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise CorpusError(f"{manifest_path}:{lineno}: expected 4 columns, got {len(row)}")
            rows.append(dict(zip(MANIFEST_HEADER, (c.strip() for c in row))))
    seen = set()
    for row in rows:
        if row["recording_id"] in seen:
            raise CorpusError(f"{manifest_path}: duplicate recording_id '{row['recording_id']}'")
        seen.add(row["recording_id"])
    return rows


def write_manifest(manifest_path, recordings, file_paths: Mapping[str, str]) -> None:
    with open(manifest_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_HEADER)
        for rec in recordings:
            writer.writerow([rec.recording_id, file_paths[rec.recording_id], rec.sound_class, rec.subject_id])


def load_corpus(audio_dir, annotations_path, manifest_path) -> Corpus:
    """Read WAVs, manifest and annotations into a validated corpus.

    Every failure names the offending recording: missing audio file,
    unreadable or multi-channel WAV, an annotation for an unknown
    recording, or an annotation beyond the recording duration.
    """
    audio_dir = Path(audio_dir)
    manifest = read_manifest(manifest_path)
    annotations = read_event_csv(annotations_path)

    recordings: dict[str, Recording] = {}
    references: dict[str, EventTimeline] = {}
    for row in manifest:
        rec_id = row["recording_id"]
        rate, audio = _read_wav(audio_dir / row["file_path"], rec_id)
        duration = len(audio) / rate
        recordings[rec_id] = Recording(
            recording_id=rec_id,
            sample_rate=rate,
            duration=duration,
            sound_class=row["sound_class"],
            subject_id=row["subject_id"],
            audio=audio,
        )
        raw_events = annotations.get(rec_id, [])
        for ev in raw_events:
            if ev.offset > duration or ev.onset >= duration:
                raise CorpusError(
                    f"annotation ({ev.onset}, {ev.offset}) lies beyond the "
                    f"{duration} s duration of '{rec_id}'"
                )
        references[rec_id] = normalize_timeline(raw_events, rec_id, duration)

    unknown = set(annotations) - set(recordings)
    if unknown:
        raise CorpusError(f"annotations reference unknown recordings: {sorted(unknown)}")
    return Corpus(recordings, references)


def cut_windows(duration: float, window_length: float = 0.8, overlap_fraction: float = 0.0) -> np.ndarray:
    """Window start times for a recording; last partial window dropped.

    The default 0.8 s windows at zero overlap match sample-based scoring;
    the segmenter consumes a 50% overlap grid instead.
    """
    if not 0 <= overlap_fraction < 1:
        raise ValidationError(f"overlap_fraction must be in [0, 1), got {overlap_fraction}")
    hop = window_length * (1.0 - overlap_fraction)
    return window_starts(duration, window_length, hop)


# ---------------------------------------------------------------------------
# Class-imbalance scenarios


@dataclass(frozen=True)
class ScenarioSpec:
    """Target test-set composition over segmented window counts.

    ``target_fractions`` maps sound class to its desired share of windows;
    None means keep the whole corpus unchanged. Classes absent from the
    map are removed entirely. Matching is approximate (recordings are
    removed whole); ``tolerance`` is the accepted deviation per class.
    """

    name: str
    target_fractions: Optional[Mapping[str, float]]
    tolerance: float = 0.01
    seed: int = 0
    notes: str = ""

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValidationError("tolerance must be > 0")
        if self.target_fractions is not None:
            fractions = dict(self.target_fractions)
            for cls, frac in fractions.items():
                if cls not in SOUND_CLASSES:
                    raise ValidationError(f"scenario '{self.name}': unknown sound_class '{cls}'")
                if frac < 0:
                    raise ValidationError(f"scenario '{self.name}': negative fraction for '{cls}'")
            total = sum(fractions.values())
            if abs(total - 1.0) > 1e-9:
                raise ValidationError(f"scenario '{self.name}': fractions sum to {total}, expected 1")
            object.__setattr__(self, "target_fractions", fractions)


@dataclass
class ScenarioResult:
    """Outcome of scenario construction."""

    spec: ScenarioSpec
    subset: Corpus
    window_length: float
    achieved_fractions: dict[str, float]
    removed: tuple[str, ...]
    within_tolerance: bool


def _class_window_counts(corpus: Corpus, window_length: float) -> dict[str, dict[str, int]]:
    per_class: dict[str, dict[str, int]] = {}
    for rec in corpus.recordings.values():
        n = window_count(rec.duration, window_length, window_length)
        per_class.setdefault(rec.sound_class, {})[rec.recording_id] = n
    return per_class


def build_scenario(corpus: Corpus, spec: ScenarioSpec, window_length: float = 0.8) -> ScenarioResult:
    """Subsample non-cough recordings to approach the target distribution.

    Cough recordings are always retained. Non-cough recordings are removed
    whole, by seeded uniform draws from the currently most over-represented
    class, until every class share of segmented windows sits within
    ``spec.tolerance`` of its target or no usable removal remains. A draw
    is restricted to recordings whose removal would not overshoot the
    class below its own band. Deterministic for a fixed seed (NumPy PCG64).
    """
    if spec.target_fractions is None:
        return ScenarioResult(
            spec=spec,
            subset=corpus.subset(corpus.recordings),
            window_length=window_length,
            achieved_fractions=_achieved(corpus, window_length),
            removed=(),
            within_tolerance=True,
        )

    rng = np.random.default_rng(spec.seed)
    counts = _class_window_counts(corpus, window_length)
    targets = dict(spec.target_fractions)
    removed: list[str] = []

    # classes with no share in the target are eliminated outright
    for cls in sorted(set(counts) - set(targets)):
        if cls == "cough":
            continue
        removed.extend(sorted(counts.pop(cls)))

    def shares() -> dict[str, float]:
        total = sum(sum(c.values()) for c in counts.values())
        if total == 0:
            return {cls: 0.0 for cls in targets}
        return {cls: sum(counts.get(cls, {}).values()) / total for cls in targets}

    while True:
        current = shares()
        total = sum(sum(c.values()) for c in counts.values())
        if total == 0 or all(abs(share - targets[cls]) <= spec.tolerance for cls, share in current.items()):
            break
        # shed windows from the most over-represented removable class first
        candidates = sorted(
            (cls for cls in counts if cls != "cough" and cls in targets and counts[cls]),
            key=lambda c: (targets[c] - current[c], c),
        )
        removed_one = False
        for cls in candidates:
            pool = counts[cls]
            pool_sum = sum(pool.values())
            # removal must not push this class below its own band
            usable = sorted(
                rid
                for rid, n in pool.items()
                if total - n > 0 and (pool_sum - n) / (total - n) >= targets[cls] - spec.tolerance
            )
            if not usable:
                continue
            pick = usable[int(rng.integers(len(usable)))]
            removed.append(pick)
            del pool[pick]
            removed_one = True
            break
        if not removed_one:
            break

    subset = corpus.subset(set(corpus.recordings) - set(removed))
    achieved = _achieved(subset, window_length, classes=targets)
    within = all(abs(achieved.get(cls, 0.0) - frac) <= spec.tolerance for cls, frac in targets.items())
    if not within:
        warnings.warn(
            f"scenario '{spec.name}': target unreachable; achieved fractions {achieved}",
            stacklevel=2,
        )
    return ScenarioResult(
        spec=spec,
        subset=subset,
        window_length=window_length,
        achieved_fractions=achieved,
        removed=tuple(removed),
        within_tolerance=within,
    )


def _achieved(corpus: Corpus, window_length: float, classes=None) -> dict[str, float]:
    counts: dict[str, int] = {}
    for rec in corpus.recordings.values():
        counts[rec.sound_class] = counts.get(rec.sound_class, 0) + window_count(
            rec.duration, window_length, window_length
        )
    total = sum(counts.values())
    keys = set(counts) | set(classes or ())
    return {cls: (counts.get(cls, 0) / total if total else 0.0) for cls in sorted(keys)}
