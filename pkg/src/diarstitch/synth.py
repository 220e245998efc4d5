"""Deterministic generator of block-level diarization frontend output.

Stands in for a trained neural frontend during tests and demos: it invents
speaker centroids, simulates per-block turn taking (with overlap), emits
posteriors and embeddings with controllable noise, and returns the exact
ground truth alongside. With all noise at zero the posteriors equal the
reference activity bit for bit and every slot embedding sits exactly on
its speaker centroid.

Guarantees relied on elsewhere:
  * every speaker is active in at least one block;
  * every active slot has mean activity >= 0.1, so the default silence
    threshold (0.05) never drops a real speaker;
  * inactive slots have near-zero posteriors and far-outlier embeddings;
  * no two non-silent slots of one block belong to the same speaker;
  * a fixed seed yields identical output on every run.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SILENT, BlockRecord, ClusterAssignment, EmbeddingIndex
from .scoring import ReferenceAnnotation
from .stitch import Segment, SegmentList

#: Minimum fraction of a block an active speaker talks.
MIN_ACTIVITY_FRACTION = 0.1


@dataclass(frozen=True)
class SynthConfig:
    num_speakers: int
    num_blocks: int
    frames_per_block: int
    s_local: int = 3
    embedding_dim: int = 16
    inter_speaker_distance: float = 3.0
    intra_speaker_stddev: float = 0.3
    posterior_noise_stddev: float = 0.1
    speaker_activity_prob: float = 0.7
    overlap_prob: float = 0.2
    seed: int = 0
    activity_balance: float = 1.0
    frame_duration: float = 0.1
    recording_id: str = "synth"

    def __post_init__(self) -> None:
        if self.num_speakers < 1:
            raise ValueError("num_speakers must be >= 1")
        if self.num_blocks < 1:
            raise ValueError("num_blocks must be >= 1")
        if not 1 <= self.s_local <= 10:
            raise ValueError("s_local must lie in [1, 10]")
        if self.frames_per_block < max(4, 2 * self.s_local):
            raise ValueError(
                f"frames_per_block must be >= {max(4, 2 * self.s_local)} for turn simulation"
            )
        if self.embedding_dim < 1:
            raise ValueError("embedding_dim must be >= 1")
        if self.inter_speaker_distance < 0:
            raise ValueError("inter_speaker_distance must be >= 0")
        for name in ("intra_speaker_stddev", "posterior_noise_stddev"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("speaker_activity_prob", "overlap_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if not self.activity_balance > 0:
            raise ValueError("activity_balance must be > 0")
        if self.num_blocks * self.s_local < self.num_speakers:
            raise ValueError(
                f"{self.num_speakers} speakers cannot all appear in {self.num_blocks} "
                f"blocks of {self.s_local} slots"
            )
        if not self.frame_duration > 0:
            raise ValueError("frame_duration must be > 0")


def _place_centroids(config: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    """Greedy rejection sampling of centroids on a sphere.

    The sphere radius equals the requested separation, so random pairs are
    typically sqrt(2) times farther apart than required. Raises when the
    geometry cannot host the requested number of centroids.
    """
    radius = config.inter_speaker_distance
    centroids: list[np.ndarray] = []
    attempts_left = 1000 * config.num_speakers
    while len(centroids) < config.num_speakers:
        if attempts_left <= 0:
            raise ValueError(
                f"could not place {config.num_speakers} centroids with separation "
                f"{config.inter_speaker_distance} in dimension {config.embedding_dim}"
            )
        attempts_left -= 1
        direction = rng.normal(size=config.embedding_dim)
        norm = np.linalg.norm(direction)
        if norm == 0:
            continue
        candidate = radius * direction / norm
        if all(
            np.linalg.norm(candidate - other) >= config.inter_speaker_distance
            for other in centroids
        ):
            centroids.append(candidate)
    return np.vstack(centroids)


def _allocate_turns(
    total: int, n_turns: int, min_len: int, rng: np.random.Generator
) -> list[int]:
    """Split ``total`` frames into ``n_turns`` lengths, each >= min_len."""
    spare = total - n_turns * min_len
    proportions = rng.dirichlet(np.ones(n_turns))
    extra = np.floor(proportions * spare).astype(int)
    remainder = spare - int(extra.sum())
    if remainder > 0:
        order = np.argsort(-(proportions * spare - extra), kind="stable")
        for i in order[:remainder]:
            extra[i] += 1
    return [min_len + int(e) for e in extra]


def _block_activity(
    active: list[int], frames: int, overlap_prob: float, rng: np.random.Generator
) -> np.ndarray:
    """Boolean (frames, len(active)) turn-taking pattern for a block.

    Turns tile the whole block; every active speaker owns at least one
    turn. At each owner change, the previous owner keeps talking into the
    next turn with probability overlap_prob, which creates overlap.
    """
    n_active = len(active)
    min_len = max(2, int(np.ceil(MIN_ACTIVITY_FRACTION * frames)))
    max_turns = max(n_active, frames // min_len)
    n_turns = int(min(n_active + rng.integers(0, n_active + 1), max_turns))
    lengths = _allocate_turns(frames, n_turns, min_len, rng)
    owners = list(rng.permutation(n_active))
    while len(owners) < n_turns:
        owners.append(int(rng.integers(n_active)))
    owners = [int(owners[i]) for i in rng.permutation(n_turns)]

    activity = np.zeros((frames, n_active), dtype=bool)
    start = 0
    spans: list[tuple[int, int, int]] = []
    for owner, length in zip(owners, lengths):
        activity[start : start + length, owner] = True
        spans.append((owner, start, start + length))
        start += length
    for (prev_owner, _, prev_stop), (owner, turn_start, turn_stop) in zip(spans, spans[1:]):
        if prev_owner == owner:
            continue
        room = turn_stop - turn_start - 1
        if room >= 1 and rng.random() < overlap_prob:
            extension = int(rng.integers(1, room + 1))
            activity[turn_start : turn_start + extension, prev_owner] = True
    return activity


def _activity_to_segments(
    activity: np.ndarray, frame_duration: float, speaker_names: list[str]
) -> SegmentList:
    segments: list[Segment] = []
    for col, name in enumerate(speaker_names):
        active = activity[:, col]
        padded = np.concatenate(([False], active, [False]))
        edges = np.flatnonzero(np.diff(padded.astype(np.int8)))
        for a, b in zip(edges[::2], edges[1::2]):
            segments.append(Segment(name, a * frame_duration, (b - a) * frame_duration))
    segments.sort(key=lambda seg: (seg.onset, seg.speaker))
    return SegmentList(segments=segments)


def generate_recording(
    config: SynthConfig,
) -> tuple[list[BlockRecord], ReferenceAnnotation, ClusterAssignment]:
    """Generate one synthetic recording.

    Returns the block records, the exact reference annotation, and the
    ground-truth slot assignment (speaker index per non-silent slot, SILENT
    elsewhere).
    """
    rng = np.random.default_rng(config.seed)
    centroids = _place_centroids(config, rng)
    weights = rng.dirichlet(np.full(config.num_speakers, config.activity_balance))
    outlier_radius = 5.0 * config.inter_speaker_distance + 10.0 * config.intra_speaker_stddev + 1.0
    silent_noise = min(config.posterior_noise_stddev, 0.02)

    active_sets: list[list[int]] = [[] for _ in range(config.num_blocks)]
    for speaker in range(config.num_speakers):
        active_sets[speaker // config.s_local].append(speaker)
    for block in range(config.num_blocks):
        forced = len(active_sets[block])
        target = 1 + int(rng.binomial(config.s_local - 1, config.speaker_activity_prob))
        target = min(max(target, forced), config.s_local, config.num_speakers)
        candidates = [s for s in range(config.num_speakers) if s not in active_sets[block]]
        extra = target - forced
        if extra > 0 and candidates:
            probs = weights[candidates] / weights[candidates].sum()
            chosen = rng.choice(candidates, size=min(extra, len(candidates)), replace=False, p=probs)
            active_sets[block].extend(int(s) for s in chosen)

    blocks: list[BlockRecord] = []
    labels: dict[EmbeddingIndex, int] = {}
    global_activity = np.zeros(
        (config.num_blocks * config.frames_per_block, config.num_speakers), dtype=bool
    )
    for block_index in range(config.num_blocks):
        active = active_sets[block_index]
        pattern = _block_activity(active, config.frames_per_block, config.overlap_prob, rng)
        row0 = block_index * config.frames_per_block
        for col, speaker in enumerate(active):
            global_activity[row0 : row0 + config.frames_per_block, speaker] = pattern[:, col]

        slot_of_active = rng.permutation(config.s_local)[: len(active)]
        posteriors = np.zeros((config.frames_per_block, config.s_local))
        embeddings = np.zeros((config.s_local, config.embedding_dim))
        active_slots = set()
        for col, speaker in enumerate(active):
            slot = int(slot_of_active[col])
            active_slots.add(slot)
            clean = pattern[:, col].astype(float)
            if config.posterior_noise_stddev > 0:
                clean = clean + rng.normal(0.0, config.posterior_noise_stddev, clean.shape)
            posteriors[:, slot] = np.clip(clean, 0.0, 1.0)
            noise = (
                rng.normal(0.0, config.intra_speaker_stddev, config.embedding_dim)
                if config.intra_speaker_stddev > 0
                else 0.0
            )
            embeddings[slot] = centroids[speaker] + noise
            labels[EmbeddingIndex(block_index, slot)] = speaker
        for slot in range(config.s_local):
            if slot in active_slots:
                continue
            if silent_noise > 0:
                posteriors[:, slot] = np.clip(
                    rng.normal(0.0, silent_noise, config.frames_per_block), 0.0, 1.0
                )
            direction = rng.normal(size=config.embedding_dim)
            norm = np.linalg.norm(direction)
            direction = direction / norm if norm > 0 else np.eye(config.embedding_dim)[0]
            embeddings[slot] = outlier_radius * direction
            labels[EmbeddingIndex(block_index, slot)] = SILENT
        blocks.append(
            BlockRecord(
                recording_id=config.recording_id,
                block_index=block_index,
                start_time=block_index * config.frames_per_block * config.frame_duration,
                posteriors=posteriors.astype(np.float32),
                embeddings=embeddings.astype(np.float32),
            )
        )

    speaker_names = [f"spk{s}" for s in range(config.num_speakers)]
    segments = _activity_to_segments(global_activity, config.frame_duration, speaker_names)
    reference = ReferenceAnnotation(
        recording_id=config.recording_id,
        segments=segments,
        num_speakers=config.num_speakers,
    )
    truth = ClusterAssignment(labels=labels, num_speakers=config.num_speakers)
    return blocks, reference, truth
