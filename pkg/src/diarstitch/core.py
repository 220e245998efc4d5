"""Domain types and bookkeeping for block-wise diarization recordings.

A recording is processed as a sequence of fixed-length blocks. For each
block an upstream frontend emits per-frame speech-activity posteriors for
a fixed number of speaker slots, plus one speaker embedding per slot.
Because blocks are processed independently, slot s of block i and slot s
of block i+1 need not belong to the same speaker; resolving that
permutation ambiguity is the job of the clustering module. The types here
carry the block data and the index arithmetic shared by everything else.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

#: Global-speaker label reserved for slots excluded as silent.
SILENT = -1


class EmbeddingIndex(NamedTuple):
    """Identifies one embedding slot within a recording."""

    block_index: int
    slot: int


@dataclass(frozen=True)
class FrameGrid:
    """Frame timing shared by all blocks of a recording.

    The final block of a recording may hold fewer than ``frames_per_block``
    frames; every other block holds exactly that many.
    """

    frame_duration: float
    frames_per_block: int

    def __post_init__(self) -> None:
        if not self.frame_duration > 0:
            raise ValueError(f"frame_duration must be > 0, got {self.frame_duration}")
        if self.frames_per_block < 1:
            raise ValueError(f"frames_per_block must be >= 1, got {self.frames_per_block}")

    @property
    def block_duration(self) -> float:
        return self.frame_duration * self.frames_per_block


@dataclass(frozen=True)
class BlockRecord:
    """One block of frontend output.

    posteriors: float array of shape (num_frames, s_local), entries in [0, 1].
    embeddings: float array of shape (s_local, dim), one vector per slot.
    """

    recording_id: str
    block_index: int
    start_time: float
    posteriors: np.ndarray
    embeddings: np.ndarray

    def __post_init__(self) -> None:
        post = np.asarray(self.posteriors)
        emb = np.asarray(self.embeddings)
        if post.ndim != 2:
            raise ValueError(f"block {self.block_index}: posteriors must be 2-D, got shape {post.shape}")
        if emb.ndim != 2:
            raise ValueError(f"block {self.block_index}: embeddings must be 2-D, got shape {emb.shape}")
        if emb.shape[0] != post.shape[1]:
            raise ValueError(
                f"block {self.block_index}: {post.shape[1]} posterior columns but "
                f"{emb.shape[0]} embedding rows"
            )
        if self.block_index < 0:
            raise ValueError(f"block_index must be >= 0, got {self.block_index}")
        post.setflags(write=False)
        emb.setflags(write=False)
        object.__setattr__(self, "posteriors", post)
        object.__setattr__(self, "embeddings", emb)

    @property
    def num_frames(self) -> int:
        return self.posteriors.shape[0]

    @property
    def s_local(self) -> int:
        return self.posteriors.shape[1]

    @property
    def embedding_dim(self) -> int:
        return self.embeddings.shape[1]


@dataclass(frozen=True)
class ClusterAssignment:
    """Map from embedding slots to global speaker ids.

    Slots excluded as silent carry the ``SILENT`` label. Every non-silent
    label lies in ``[0, num_speakers)``.
    """

    labels: dict[EmbeddingIndex, int]
    num_speakers: int

    def label(self, index: EmbeddingIndex) -> int:
        """Label for a slot; slots absent from the map count as silent."""
        return self.labels.get(index, SILENT)

    def validate(self) -> None:
        if self.num_speakers < 0:
            raise ValueError(f"num_speakers must be >= 0, got {self.num_speakers}")
        for index, lab in self.labels.items():
            if lab == SILENT:
                continue
            if not 0 <= lab < self.num_speakers:
                raise ValueError(f"slot {index}: label {lab} outside [0, {self.num_speakers})")

    def with_silent(self, indices: Iterable[EmbeddingIndex]) -> "ClusterAssignment":
        """Return a copy whose label map covers ``indices``, filling SILENT."""
        labels = dict(self.labels)
        for index in indices:
            labels.setdefault(index, SILENT)
        return ClusterAssignment(labels=labels, num_speakers=self.num_speakers)


def segment_plan(
    total_duration: float, block_duration: float, frame_duration: float
) -> list[tuple[int, float, int]]:
    """Plan the block tiling of a recording.

    Returns (block_index, start_time, num_frames) triples that tile
    [0, total_duration) without gap or overlap. All blocks have
    block_duration / frame_duration frames except possibly a shorter final
    block. block_duration must be an integer multiple of frame_duration.
    """
    if not total_duration > 0:
        raise ValueError(f"total_duration must be > 0, got {total_duration}")
    if not block_duration > 0:
        raise ValueError(f"block_duration must be > 0, got {block_duration}")
    if not frame_duration > 0:
        raise ValueError(f"frame_duration must be > 0, got {frame_duration}")
    ratio = block_duration / frame_duration
    frames_per_block = int(round(ratio))
    if frames_per_block < 1 or abs(ratio - frames_per_block) > 1e-9 * max(1.0, ratio):
        raise ValueError(
            f"block_duration {block_duration} is not an integer multiple of "
            f"frame_duration {frame_duration}"
        )
    total_frames = max(1, int(round(total_duration / frame_duration)))
    plan = []
    index = 0
    frame = 0
    while frame < total_frames:
        count = min(frames_per_block, total_frames - frame)
        plan.append((index, float(index * block_duration), count))
        index += 1
        frame += count
    return plan


def validate_recording(blocks: list[BlockRecord], frame_duration: float | None = None) -> None:
    """Check the cross-block invariants of a recording.

    Raises ValueError naming the first violated invariant and the offending
    block. When ``frame_duration`` is given, the stored start times are also
    checked against ``block_index * frames_per_block * frame_duration``.
    """
    if not blocks:
        raise ValueError("recording has no blocks")
    ordered = sorted(blocks, key=lambda b: b.block_index)
    indices = [b.block_index for b in ordered]
    if indices != list(range(len(ordered))):
        raise ValueError(f"block indices must be contiguous 0..{len(ordered) - 1}, got {indices}")
    first = ordered[0]
    for block in ordered:
        if block.recording_id != first.recording_id:
            raise ValueError(
                f"block {block.block_index}: recording_id {block.recording_id!r} "
                f"differs from {first.recording_id!r}"
            )
        if block.s_local != first.s_local:
            raise ValueError(
                f"block {block.block_index}: s_local {block.s_local} differs from {first.s_local}"
            )
        if block.embedding_dim != first.embedding_dim:
            raise ValueError(
                f"block {block.block_index}: embedding dimension {block.embedding_dim} "
                f"differs from {first.embedding_dim}"
            )
        if block.num_frames < 1:
            raise ValueError(f"block {block.block_index}: empty posterior matrix")
        if not np.all(np.isfinite(block.posteriors)):
            raise ValueError(f"block {block.block_index}: non-finite posterior value")
        if block.posteriors.min() < 0.0 or block.posteriors.max() > 1.0:
            raise ValueError(
                f"block {block.block_index}: posterior value outside [0, 1] "
                f"(min {block.posteriors.min()}, max {block.posteriors.max()})"
            )
        if not np.all(np.isfinite(block.embeddings)):
            raise ValueError(f"block {block.block_index}: non-finite embedding value")
    frames_per_block = first.num_frames
    for block in ordered[:-1]:
        if block.num_frames != frames_per_block:
            raise ValueError(
                f"block {block.block_index}: {block.num_frames} frames, expected "
                f"{frames_per_block} (only the final block may be shorter)"
            )
    if ordered[-1].num_frames > frames_per_block:
        raise ValueError(
            f"block {ordered[-1].block_index}: final block has {ordered[-1].num_frames} frames, "
            f"more than the block size {frames_per_block}"
        )
    if frame_duration is not None:
        block_duration = frames_per_block * frame_duration
        for block in ordered:
            expected = block.block_index * block_duration
            if abs(block.start_time - expected) > 1e-6 * max(1.0, abs(expected)):
                raise ValueError(
                    f"block {block.block_index}: start_time {block.start_time} does not match "
                    f"block_index * block_duration = {expected}"
                )


def all_embedding_indices(blocks: list[BlockRecord]) -> list[EmbeddingIndex]:
    """Every (block, slot) pair of a recording, in (block, slot) order."""
    return [
        EmbeddingIndex(block.block_index, slot)
        for block in sorted(blocks, key=lambda b: b.block_index)
        for slot in range(block.s_local)
    ]
