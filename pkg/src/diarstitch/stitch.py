"""Stitch per-block diarization posteriors into one recording-level result.

Given a cluster assignment mapping each non-silent slot to a global
speaker id, the per-block posterior columns are routed into a global
activity matrix. When several slots of one block share a global speaker
(the clustering decided one speaker was split across outputs), their
posteriors are merged by taking the framewise maximum.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from .core import SILENT, BlockRecord, ClusterAssignment, EmbeddingIndex, FrameGrid


class Segment(NamedTuple):
    speaker: str
    onset: float
    duration: float


@dataclass(frozen=True)
class SegmentList:
    """Diarization segments, the precursor of an RTTM file."""

    segments: list[Segment]

    def __iter__(self) -> Iterator[Segment]:
        return iter(self.segments)

    def __len__(self) -> int:
        return len(self.segments)

    def speakers(self) -> list[str]:
        return sorted({segment.speaker for segment in self.segments})

    def validate(self) -> None:
        """Check durations are positive and per-speaker segments do not overlap."""
        by_speaker: dict[str, list[Segment]] = {}
        for segment in self.segments:
            if segment.duration <= 0:
                raise ValueError(f"segment {segment} has non-positive duration")
            if segment.onset < 0:
                raise ValueError(f"segment {segment} has negative onset")
            by_speaker.setdefault(segment.speaker, []).append(segment)
        for speaker, segments in by_speaker.items():
            ordered = sorted(segments, key=lambda seg: seg.onset)
            for prev, cur in zip(ordered, ordered[1:]):
                if cur.onset < prev.onset + prev.duration - 1e-9:
                    raise ValueError(f"speaker {speaker}: overlapping segments {prev} and {cur}")


@dataclass(frozen=True)
class SpeakerActivity:
    """Global per-speaker, per-frame activity in [0, 1]."""

    recording_id: str
    num_speakers: int
    activity: np.ndarray
    frame_grid: FrameGrid

    def __post_init__(self) -> None:
        activity = np.asarray(self.activity, dtype=float)
        if activity.ndim != 2 or activity.shape[1] != self.num_speakers:
            raise ValueError(
                f"activity shape {activity.shape} does not match {self.num_speakers} speakers"
            )
        activity.setflags(write=False)
        object.__setattr__(self, "activity", activity)

    @property
    def num_frames(self) -> int:
        return self.activity.shape[0]


def merge_coassigned_slots(block: BlockRecord, assignment: ClusterAssignment) -> np.ndarray:
    """Route one block's posterior columns into global speaker columns.

    Column g of the output is the framewise maximum over the block's
    non-silent slots assigned to global speaker g; speakers with no slot in
    this block get an all-zero column. Silent slots contribute nothing.
    """
    out = np.zeros((block.num_frames, assignment.num_speakers))
    posteriors = np.asarray(block.posteriors, dtype=float)
    for slot in range(block.s_local):
        label = assignment.label(EmbeddingIndex(block.block_index, slot))
        if label == SILENT:
            continue
        if not 0 <= label < assignment.num_speakers:
            raise ValueError(f"slot {slot} of block {block.block_index}: label {label} out of range")
        out[:, label] = np.maximum(out[:, label], posteriors[:, slot])
    return out


def stitch(
    blocks: list[BlockRecord], assignment: ClusterAssignment, frame_grid: FrameGrid
) -> SpeakerActivity:
    """Concatenate per-block merged activity in block order."""
    if not blocks:
        raise ValueError("recording has no blocks")
    ordered = sorted(blocks, key=lambda b: b.block_index)
    for block in ordered:
        for slot in range(block.s_local):
            index = EmbeddingIndex(block.block_index, slot)
            if index not in assignment.labels:
                raise ValueError(f"assignment does not cover slot {index}")
    merged = [merge_coassigned_slots(block, assignment) for block in ordered]
    activity = np.vstack(merged)
    return SpeakerActivity(
        recording_id=ordered[0].recording_id,
        num_speakers=assignment.num_speakers,
        activity=activity,
        frame_grid=frame_grid,
    )


def binarize_to_segments(
    activity: SpeakerActivity, threshold: float = 0.5, min_duration: float = 0.0
) -> SegmentList:
    """Threshold activity into speaker segments on the frame grid.

    A frame is active iff its value is >= threshold; maximal runs of active
    frames become segments, and runs shorter than min_duration are dropped.
    Runs extend across block boundaries, so no artificial splits appear at
    block seams.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    if min_duration < 0:
        raise ValueError(f"min_duration must be >= 0, got {min_duration}")
    frame = activity.frame_grid.frame_duration
    segments: list[Segment] = []
    for speaker in range(activity.num_speakers):
        active = activity.activity[:, speaker] >= threshold
        padded = np.concatenate(([False], active, [False]))
        edges = np.flatnonzero(np.diff(padded.astype(np.int8)))
        for start, stop in zip(edges[::2], edges[1::2]):
            duration = (stop - start) * frame
            if duration < min_duration - 1e-12:
                continue
            segments.append(Segment(f"spk{speaker}", start * frame, duration))
    segments.sort(key=lambda seg: (seg.onset, seg.speaker))
    return SegmentList(segments=segments)
