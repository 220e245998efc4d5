"""File formats: RTTM segment interchange and the block archive.

The block archive is a directory holding one recording: a UTF-8
``header.txt`` of ``key: value`` lines plus two flat little-endian
float32 binary files per block, ``posteriors_NNNN.f32`` (row-major
frames x slots) and ``embeddings_NNNN.f32`` (row-major slots x dim).
Payloads are float32, so a round trip through the archive is bit-exact
for float32 data. Readers reject malformed input instead of repairing it.
"""

from __future__ import annotations

import re
from pathlib import Path
from typing import IO, Iterable

import numpy as np

from .core import BlockRecord
from .stitch import Segment, SegmentList

_HEADER_NAME = "header.txt"
_FORMAT_TAG = "block-archive-v1"


class ArchiveError(ValueError):
    """Malformed block archive."""


# ---------------------------------------------------------------------------
# RTTM


def read_rttm(stream: Iterable[str]) -> dict[str, SegmentList]:
    """Parse SPEAKER records grouped by recording id.

    Lines: ``SPEAKER <file> <chan> <onset> <dur> <NA> <NA> <speaker> <NA> <NA>``
    with whitespace-separated fields. Blank lines and ``;;`` comments are
    ignored; anything else malformed raises with its line number.
    """
    grouped: dict[str, list[Segment]] = {}
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith(";;"):
            continue
        fields = line.split()
        if len(fields) != 10:
            raise ValueError(f"line {lineno}: expected 10 fields, got {len(fields)}")
        if fields[0] != "SPEAKER":
            raise ValueError(f"line {lineno}: unsupported record type {fields[0]!r}")
        file_id = fields[1]
        try:
            int(fields[2])
        except ValueError:
            raise ValueError(f"line {lineno}: channel {fields[2]!r} is not an integer") from None
        try:
            onset = float(fields[3])
            duration = float(fields[4])
        except ValueError:
            raise ValueError(f"line {lineno}: non-numeric onset or duration") from None
        if onset < 0:
            raise ValueError(f"line {lineno}: negative onset {onset}")
        if duration <= 0:
            raise ValueError(f"line {lineno}: non-positive duration {duration}")
        grouped.setdefault(file_id, []).append(Segment(fields[7], onset, duration))
    return {file_id: SegmentList(segments) for file_id, segments in grouped.items()}


def write_rttm(segments_by_recording: dict[str, SegmentList], stream: IO[str]) -> None:
    """Write sorted SPEAKER records with millisecond precision."""
    rows = []
    for file_id, segments in segments_by_recording.items():
        for segment in segments:
            for label, value in (("file id", file_id), ("speaker", segment.speaker)):
                if not value or re.search(r"\s", value):
                    raise ValueError(f"{label} {value!r} is empty or contains whitespace")
            rows.append((file_id, segment.onset, segment.speaker, segment.duration))
    rows.sort(key=lambda row: (row[0], row[1], row[2]))
    for file_id, onset, speaker, duration in rows:
        stream.write(
            f"SPEAKER {file_id} 1 {onset:.3f} {duration:.3f} <NA> <NA> {speaker} <NA> <NA>\n"
        )


# ---------------------------------------------------------------------------
# block archive


def write_block_archive(blocks: list[BlockRecord], frame_duration: float, path: str | Path) -> None:
    if not blocks:
        raise ValueError("cannot write an archive with no blocks")
    directory = Path(path)
    directory.mkdir(parents=True, exist_ok=True)
    ordered = sorted(blocks, key=lambda b: b.block_index)
    first = ordered[0]
    lines = [
        f"format: {_FORMAT_TAG}",
        f"recording_id: {first.recording_id}",
        f"frame_duration: {frame_duration!r}",
        f"s_local: {first.s_local}",
        f"embedding_dim: {first.embedding_dim}",
        f"num_blocks: {len(ordered)}",
        "block_frames: " + " ".join(str(b.num_frames) for b in ordered),
        "block_starts: " + " ".join(repr(float(b.start_time)) for b in ordered),
    ]
    for block in ordered:
        post = np.ascontiguousarray(block.posteriors, dtype="<f4")
        emb = np.ascontiguousarray(block.embeddings, dtype="<f4")
        (directory / f"posteriors_{block.block_index:04d}.f32").write_bytes(post.tobytes())
        (directory / f"embeddings_{block.block_index:04d}.f32").write_bytes(emb.tobytes())
    (directory / _HEADER_NAME).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _parse_header(text: str, path: Path) -> dict[str, str]:
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if ":" not in line:
            raise ArchiveError(f"{path}: header line {lineno} is not 'key: value'")
        key, value = line.split(":", 1)
        entries[key.strip()] = value.strip()
    expected = {
        "format",
        "recording_id",
        "frame_duration",
        "s_local",
        "embedding_dim",
        "num_blocks",
        "block_frames",
        "block_starts",
    }
    if set(entries) != expected:
        missing = expected - set(entries)
        extra = set(entries) - expected
        raise ArchiveError(f"{path}: header keys mismatch (missing {missing}, extra {extra})")
    if entries["format"] != _FORMAT_TAG:
        raise ArchiveError(f"{path}: unsupported format {entries['format']!r}")
    return entries


def read_block_archive(path: str | Path) -> tuple[list[BlockRecord], float]:
    """Read one recording; returns (blocks, frame_duration)."""
    directory = Path(path)
    header_path = directory / _HEADER_NAME
    if not header_path.is_file():
        raise ArchiveError(f"{directory}: missing {_HEADER_NAME}")
    entries = _parse_header(header_path.read_text(encoding="utf-8"), header_path)
    try:
        frame_duration = float(entries["frame_duration"])
        s_local = int(entries["s_local"])
        embedding_dim = int(entries["embedding_dim"])
        num_blocks = int(entries["num_blocks"])
        block_frames = [int(v) for v in entries["block_frames"].split()]
        block_starts = [float(v) for v in entries["block_starts"].split()]
    except ValueError as err:
        raise ArchiveError(f"{header_path}: malformed numeric field ({err})") from None
    if num_blocks < 1:
        raise ArchiveError(f"{header_path}: num_blocks must be >= 1")
    if len(block_frames) != num_blocks or len(block_starts) != num_blocks:
        raise ArchiveError(
            f"{header_path}: header claims {num_blocks} blocks but lists "
            f"{len(block_frames)} frame counts and {len(block_starts)} start times"
        )
    recording_id = entries["recording_id"]
    blocks = []
    for index in range(num_blocks):
        frames = block_frames[index]
        post_path = directory / f"posteriors_{index:04d}.f32"
        emb_path = directory / f"embeddings_{index:04d}.f32"
        for file_path, rows, cols in (
            (post_path, frames, s_local),
            (emb_path, s_local, embedding_dim),
        ):
            if not file_path.is_file():
                raise ArchiveError(f"{directory}: header/body mismatch, missing {file_path.name}")
            expected_bytes = rows * cols * 4
            actual = file_path.stat().st_size
            if actual != expected_bytes:
                raise ArchiveError(
                    f"{file_path}: truncated or oversized payload "
                    f"({actual} bytes, expected {expected_bytes})"
                )
        post = np.frombuffer(post_path.read_bytes(), dtype="<f4").reshape(frames, s_local)
        emb = np.frombuffer(emb_path.read_bytes(), dtype="<f4").reshape(s_local, embedding_dim)
        for name, payload in (("posteriors", post), ("embeddings", emb)):
            if not np.all(np.isfinite(payload)):
                raise ArchiveError(f"{directory}: non-finite value in {name} of block {index}")
        blocks.append(
            BlockRecord(
                recording_id=recording_id,
                block_index=index,
                start_time=block_starts[index],
                posteriors=post,
                embeddings=emb,
            )
        )
    return blocks, frame_duration
