"""Diarization error rate with a miss / false-alarm / confusion breakdown.

Scoring is time-quantized: the timeline is divided into frames of length
``step`` and every frame is audited against the reference. Frames within
``collar`` seconds of any reference segment boundary are excluded, and
overlap frames (two or more reference speakers) are excluded unless
``score_overlap`` is set. Hypothesis speakers are matched to reference
speakers by one optimal one-to-one mapping per recording, found by the
Hungarian algorithm on the matrix of scored overlap durations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .stitch import SegmentList


class UndefinedDerError(ValueError):
    """No scored reference speech remains, so DER is undefined."""


@dataclass(frozen=True)
class ReferenceAnnotation:
    """Ground-truth segments of one recording."""

    recording_id: str
    segments: SegmentList
    num_speakers: int

    @classmethod
    def from_segments(cls, recording_id: str, segments: SegmentList) -> "ReferenceAnnotation":
        return cls(
            recording_id=recording_id,
            segments=segments,
            num_speakers=len(segments.speakers()),
        )

    def __post_init__(self) -> None:
        distinct = len(self.segments.speakers())
        if self.num_speakers != distinct:
            raise ValueError(
                f"num_speakers {self.num_speakers} does not match {distinct} distinct speakers"
            )


@dataclass(frozen=True)
class DerBreakdown:
    """Error times in seconds plus the scored reference speech they divide."""

    missed: float
    false_alarm: float
    confusion: float
    scored_speech: float

    def __post_init__(self) -> None:
        if self.scored_speech <= 0:
            raise UndefinedDerError("scored_speech must be positive")
        for name in ("missed", "false_alarm", "confusion"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def der(self) -> float:
        return (self.missed + self.false_alarm + self.confusion) / self.scored_speech


def _rasterize(segments: SegmentList, speakers: list[str], num_frames: int, step: float) -> np.ndarray:
    """Boolean (num_frames, len(speakers)) activity sampled at frame centers."""
    out = np.zeros((num_frames, len(speakers)), dtype=bool)
    column = {speaker: i for i, speaker in enumerate(speakers)}
    centers = (np.arange(num_frames) + 0.5) * step
    for segment in segments:
        col = column[segment.speaker]
        mask = (centers >= segment.onset) & (centers < segment.onset + segment.duration)
        out[mask, col] = True
    return out


def compute_der(
    hyp: SegmentList,
    ref: ReferenceAnnotation,
    collar: float = 0.25,
    score_overlap: bool = True,
    step: float = 0.01,
) -> DerBreakdown:
    """Score a hypothesis against a reference.

    Raises UndefinedDerError when no scored reference speech remains (for
    example, an empty reference, or a collar wide enough to swallow every
    segment).
    """
    if collar < 0:
        raise ValueError(f"collar must be >= 0, got {collar}")
    if not step > 0:
        raise ValueError(f"step must be > 0, got {step}")
    ref_speakers = ref.segments.speakers()
    hyp_speakers = hyp.speakers()
    end = 0.0
    for segment in list(ref.segments) + list(hyp):
        end = max(end, segment.onset + segment.duration)
    num_frames = int(np.ceil(end / step - 1e-9)) if end > 0 else 0
    if num_frames == 0:
        raise UndefinedDerError("no reference speech to score")
    ref_act = _rasterize(ref.segments, ref_speakers, num_frames, step)
    hyp_act = _rasterize(hyp, hyp_speakers, num_frames, step)

    scored = np.ones(num_frames, dtype=bool)
    if collar > 0:
        boundaries = []
        for segment in ref.segments:
            boundaries.append(segment.onset)
            boundaries.append(segment.onset + segment.duration)
        boundaries = np.sort(np.asarray(boundaries))
        centers = (np.arange(num_frames) + 0.5) * step
        pos = np.searchsorted(boundaries, centers)
        left = np.where(pos > 0, centers - boundaries[np.maximum(pos - 1, 0)], np.inf)
        right = np.where(
            pos < len(boundaries), boundaries[np.minimum(pos, len(boundaries) - 1)] - centers, np.inf
        )
        scored &= np.minimum(left, right) > collar
    ref_counts = ref_act.sum(axis=1)
    if not score_overlap:
        scored &= ref_counts <= 1

    scored_speech = float(ref_counts[scored].sum()) * step
    if scored_speech <= 0:
        raise UndefinedDerError("no scored reference speech remains")

    ref_sc = ref_act[scored]
    hyp_sc = hyp_act[scored]
    overlap = (ref_sc[:, :, None] & hyp_sc[:, None, :]).sum(axis=0)
    correct = 0
    if overlap.size:
        rows, cols = linear_sum_assignment(-overlap)
        correct = int(overlap[rows, cols].sum())
    n_ref = ref_sc.sum(axis=1).astype(int)
    n_hyp = hyp_sc.sum(axis=1).astype(int)
    missed = int(np.maximum(n_ref - n_hyp, 0).sum())
    false_alarm = int(np.maximum(n_hyp - n_ref, 0).sum())
    confusion = int(np.minimum(n_ref, n_hyp).sum()) - correct
    return DerBreakdown(
        missed=missed * step,
        false_alarm=false_alarm * step,
        confusion=confusion * step,
        scored_speech=scored_speech,
    )


@dataclass(frozen=True)
class DerTableRow:
    bucket: str
    recordings: int
    missed: float
    false_alarm: float
    confusion: float
    scored_speech: float

    @property
    def der(self) -> float:
        return (self.missed + self.false_alarm + self.confusion) / self.scored_speech


def report_by_speaker_count(
    results: list[tuple[str, DerBreakdown, int]],
) -> list[DerTableRow]:
    """Aggregate per-recording breakdowns into buckets by reference speaker count.

    Every bucket row pools the error and speech times of its recordings,
    so bucket DER is time-weighted; the final "All" row pools everything.
    """
    if not results:
        raise ValueError("no results to aggregate")
    buckets: dict[int, list[DerBreakdown]] = {}
    for _, breakdown, count in results:
        buckets.setdefault(count, []).append(breakdown)

    def pooled(label: str, items: list[DerBreakdown]) -> DerTableRow:
        return DerTableRow(
            bucket=label,
            recordings=len(items),
            missed=sum(b.missed for b in items),
            false_alarm=sum(b.false_alarm for b in items),
            confusion=sum(b.confusion for b in items),
            scored_speech=sum(b.scored_speech for b in items),
        )

    rows = [pooled(str(count), buckets[count]) for count in sorted(buckets)]
    rows.append(pooled("All", [b for _, b, _ in results]))
    return rows


def format_der_table(rows: list[DerTableRow]) -> str:
    header = f"{'speakers':>8} {'recs':>5} {'miss':>9} {'fa':>9} {'conf':>9} {'scored':>10} {'DER%':>7}"
    lines = [header]
    for row in rows:
        lines.append(
            f"{row.bucket:>8} {row.recordings:>5} {row.missed:>9.3f} {row.false_alarm:>9.3f} "
            f"{row.confusion:>9.3f} {row.scored_speech:>10.3f} {100 * row.der:>7.2f}"
        )
    return "\n".join(lines)


def der_table_rows_tsv(rows: list[DerTableRow]) -> str:
    lines = ["bucket\trecordings\tmissed\tfalse_alarm\tconfusion\tscored_speech\tder"]
    for row in rows:
        lines.append(
            f"{row.bucket}\t{row.recordings}\t{row.missed:.6f}\t{row.false_alarm:.6f}"
            f"\t{row.confusion:.6f}\t{row.scored_speech:.6f}\t{row.der:.6f}"
        )
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class CountingReport:
    """Confusion counts of (reference K, estimated K) plus exact-match accuracy."""

    confusion: dict[tuple[int, int], int]
    accuracy: float


def speaker_counting_accuracy(results: list[tuple[int, int]]) -> CountingReport:
    """Tabulate (estimated K, reference K) pairs."""
    if not results:
        raise ValueError("no results to tabulate")
    confusion: dict[tuple[int, int], int] = {}
    hits = 0
    for estimated, actual in results:
        confusion[(actual, estimated)] = confusion.get((actual, estimated), 0) + 1
        if estimated == actual:
            hits += 1
    return CountingReport(confusion=confusion, accuracy=hits / len(results))


def format_counting_table(report: CountingReport) -> str:
    refs = sorted({r for r, _ in report.confusion})
    ests = sorted({e for _, e in report.confusion})
    lines = ["ref\\est " + " ".join(f"{e:>5}" for e in ests)]
    for r in refs:
        cells = " ".join(f"{report.confusion.get((r, e), 0):>5}" for e in ests)
        lines.append(f"{r:>7} {cells}")
    lines.append(f"accuracy {report.accuracy:.4f}")
    return "\n".join(lines)
