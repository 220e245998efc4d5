"""Stitch block-wise speaker diarization outputs into recording-level results.

A frontend that diarizes fixed-length blocks independently leaves an
ambiguity: output slot s in one block and the same slot in the next block
need not be the same speaker. This package resolves that permutation by
clustering per-block speaker embeddings under cannot-link constraints
(two non-silent slots of one block are never the same speaker), stitches
the block posteriors into global speaker activity, scores the result with
DER, and ships a deterministic synthetic generator that stands in for the
trained frontend.
"""

from .core import (
    SILENT,
    BlockRecord,
    ClusterAssignment,
    EmbeddingIndex,
    FrameGrid,
    segment_plan,
    validate_recording,
)
from .clustering import (
    AffinityMatrix,
    DistanceMatrix,
    DistanceThreshold,
    EigenDecomposition,
    Eigengap,
    InfeasibleConstraintsError,
    NumClusters,
    ahc,
    apply_cannot_link_affinity,
    apply_cannot_link_distance,
    build_affinity_matrix,
    build_distance_matrix,
    constrained_ahc,
    cop_kmeans,
    eigengap_estimate,
    kmeans,
    oracle_clustering,
    spectral_clustering,
    symmetric_eigendecomposition,
    within_block_pairs,
)
from .io import ArchiveError, read_block_archive, read_rttm, write_block_archive, write_rttm
from .pipeline import ALGORITHMS, DiarizationResult, PipelineConfig, diarize_recording
from .scoring import (
    CountingReport,
    DerBreakdown,
    ReferenceAnnotation,
    UndefinedDerError,
    compute_der,
    report_by_speaker_count,
    speaker_counting_accuracy,
)
from .silence import SilenceMask, active_embeddings, detect_silent_speakers
from .stitch import (
    Segment,
    SegmentList,
    SpeakerActivity,
    binarize_to_segments,
    merge_coassigned_slots,
    stitch,
)
from .synth import SynthConfig, generate_recording

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "AffinityMatrix",
    "ArchiveError",
    "BlockRecord",
    "ClusterAssignment",
    "CountingReport",
    "DerBreakdown",
    "DiarizationResult",
    "DistanceMatrix",
    "DistanceThreshold",
    "EigenDecomposition",
    "Eigengap",
    "EmbeddingIndex",
    "FrameGrid",
    "InfeasibleConstraintsError",
    "NumClusters",
    "PipelineConfig",
    "ReferenceAnnotation",
    "SILENT",
    "Segment",
    "SegmentList",
    "SilenceMask",
    "SpeakerActivity",
    "SynthConfig",
    "UndefinedDerError",
    "active_embeddings",
    "ahc",
    "apply_cannot_link_affinity",
    "apply_cannot_link_distance",
    "binarize_to_segments",
    "build_affinity_matrix",
    "build_distance_matrix",
    "compute_der",
    "constrained_ahc",
    "cop_kmeans",
    "detect_silent_speakers",
    "diarize_recording",
    "eigengap_estimate",
    "generate_recording",
    "kmeans",
    "merge_coassigned_slots",
    "oracle_clustering",
    "read_block_archive",
    "read_rttm",
    "report_by_speaker_count",
    "segment_plan",
    "speaker_counting_accuracy",
    "spectral_clustering",
    "stitch",
    "symmetric_eigendecomposition",
    "validate_recording",
    "within_block_pairs",
    "write_block_archive",
    "write_rttm",
]
