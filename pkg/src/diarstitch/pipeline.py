"""End-to-end diarization of one recording from block-level frontend output.

Wires the stages together: validate, detect silent slots, cluster the
remaining embeddings with the chosen algorithm, stitch block posteriors
into global speaker activity, and binarize to segments.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .clustering import (
    DistanceThreshold,
    Eigengap,
    NumClusters,
    apply_cannot_link_affinity,
    build_affinity_matrix,
    build_distance_matrix,
    ahc,
    constrained_ahc,
    cop_kmeans,
    kmeans,
    oracle_clustering,
    spectral_clustering,
    within_block_pairs,
)
from .core import BlockRecord, ClusterAssignment, FrameGrid, validate_recording
from .scoring import ReferenceAnnotation
from .silence import SilenceMask, active_embeddings, detect_silent_speakers
from .stitch import SegmentList, SpeakerActivity, binarize_to_segments, stitch

log = logging.getLogger("diarstitch")

ALGORITHMS = ("kmeans", "cop-kmeans", "ahc", "cahc", "sc", "csc", "oracle")
#: Algorithms that have no estimated-speaker-count mode.
NEEDS_SPEAKER_COUNT = ("kmeans", "cop-kmeans")


@dataclass(frozen=True)
class PipelineConfig:
    algorithm: str = "cahc"
    num_speakers: int | str = "estimate"  # positive int, or "estimate" / "oracle"
    tau: float = 0.05
    kappa: float = 10000.0
    ahc_threshold: float = 1.0
    max_k: int = 10
    seed: int = 0
    posterior_threshold: float = 0.5
    min_segment_duration: float = 0.0
    metric: str = "euclidean"
    kmeans_max_iter: int = 100
    cop_restarts: int = 20

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}, expected one of {ALGORITHMS}")
        if isinstance(self.num_speakers, str):
            if self.num_speakers not in ("estimate", "oracle"):
                raise ValueError("num_speakers must be a positive int, 'estimate', or 'oracle'")
        elif self.num_speakers < 1:
            raise ValueError(f"num_speakers must be >= 1, got {self.num_speakers}")
        if self.algorithm in NEEDS_SPEAKER_COUNT and self.num_speakers == "estimate":
            raise ValueError(f"{self.algorithm} has no estimated-speaker-count mode")


@dataclass(frozen=True)
class DiarizationResult:
    recording_id: str
    mask: SilenceMask
    assignment: ClusterAssignment
    activity: SpeakerActivity
    segments: SegmentList


def _resolve_count(
    config: PipelineConfig, reference: ReferenceAnnotation | None, available: int
) -> int | None:
    """Target cluster count, or None in estimated mode."""
    if config.num_speakers == "estimate":
        return None
    if config.num_speakers == "oracle":
        if reference is None:
            raise ValueError("num_speakers='oracle' requires a reference annotation")
        count = reference.num_speakers
    else:
        count = int(config.num_speakers)
    return max(1, min(count, available))


def diarize_recording(
    blocks: list[BlockRecord],
    frame_duration: float,
    config: PipelineConfig,
    reference: ReferenceAnnotation | None = None,
) -> DiarizationResult:
    validate_recording(blocks, frame_duration)
    recording_id = blocks[0].recording_id
    grid = FrameGrid(
        frame_duration=frame_duration,
        frames_per_block=max(b.num_frames for b in blocks),
    )
    mask = detect_silent_speakers(blocks, config.tau)
    embeddings = active_embeddings(blocks, mask)
    log.info(
        "%s: %d blocks, %d non-silent slots of %d", recording_id, len(blocks),
        len(embeddings), len(mask.silent),
    )
    if not embeddings:
        log.warning("%s: every slot is silent, emitting empty diarization", recording_id)
        assignment = ClusterAssignment(labels={}, num_speakers=0).with_silent(mask.silent)
        activity = stitch(blocks, assignment, grid)
        return DiarizationResult(recording_id, mask, assignment, activity,
                                 binarize_to_segments(activity, config.posterior_threshold,
                                                      config.min_segment_duration))

    count = _resolve_count(config, reference, len(embeddings))
    algorithm = config.algorithm
    if algorithm == "oracle":
        if reference is None:
            raise ValueError("algorithm 'oracle' requires a reference annotation")
        assignment = oracle_clustering(
            blocks, mask, reference, frame_duration, config.posterior_threshold
        )
    elif algorithm == "kmeans":
        assignment = kmeans(embeddings, count, config.seed, config.kmeans_max_iter)
    elif algorithm == "cop-kmeans":
        index_map = [index for index, _ in embeddings]
        assignment = cop_kmeans(
            embeddings, count, within_block_pairs(index_map), config.seed,
            config.kmeans_max_iter, config.cop_restarts,
        )
    elif algorithm in ("ahc", "cahc"):
        stop = NumClusters(count) if count is not None else DistanceThreshold(config.ahc_threshold)
        if algorithm == "ahc":
            assignment = ahc(build_distance_matrix(embeddings, config.metric), stop)
        else:
            assignment = constrained_ahc(embeddings, stop, config.kappa, config.metric)
    else:  # sc / csc
        affinity = build_affinity_matrix(embeddings)
        if algorithm == "csc":
            affinity = apply_cannot_link_affinity(affinity)
        rule = count if count is not None else Eigengap(min(config.max_k, affinity.size))
        assignment = spectral_clustering(affinity, rule)
    assignment = assignment.with_silent(mask.silent)
    assignment.validate()
    log.info("%s: clustered into %d speakers with %s", recording_id,
             assignment.num_speakers, algorithm)
    activity = stitch(blocks, assignment, grid)
    segments = binarize_to_segments(
        activity, config.posterior_threshold, config.min_segment_duration
    )
    log.info("%s: %d segments", recording_id, len(segments))
    return DiarizationResult(recording_id, mask, assignment, activity, segments)


def assignment_report(result: DiarizationResult) -> str:
    """One line per slot: block, slot, global label or SILENT."""
    lines = [f"# {result.recording_id}: {result.assignment.num_speakers} speakers"]
    for index in sorted(result.assignment.labels):
        label = result.assignment.labels[index]
        text = "SILENT" if label < 0 else str(label)
        lines.append(f"{result.recording_id}\t{index.block_index}\t{index.slot}\t{text}")
    return "\n".join(lines) + "\n"
