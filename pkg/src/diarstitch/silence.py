"""Silent-slot detection applied before clustering.

A frontend trained with more output slots than there are active speakers
in a block fills the spare slots with near-zero activity. Those slots must
be dropped before clustering: their embeddings are meaningless, and two
silent slots of one block must not receive a cannot-link constraint
between them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BlockRecord, EmbeddingIndex


@dataclass(frozen=True)
class SilenceMask:
    """Per-slot silence decisions for one recording."""

    silent: dict[EmbeddingIndex, bool]
    tau: float

    def is_silent(self, index: EmbeddingIndex) -> bool:
        return self.silent[index]

    def active_indices(self) -> list[EmbeddingIndex]:
        return [index for index in sorted(self.silent) if not self.silent[index]]

    def silent_indices(self) -> list[EmbeddingIndex]:
        return [index for index in sorted(self.silent) if self.silent[index]]


def detect_silent_speakers(blocks: list[BlockRecord], tau: float = 0.05) -> SilenceMask:
    """Mark slot (i, s) silent iff the mean posterior of column s in block i
    is strictly below ``tau``.

    tau = 0 therefore marks every slot active.
    """
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    silent: dict[EmbeddingIndex, bool] = {}
    for block in sorted(blocks, key=lambda b: b.block_index):
        if block.num_frames < 1:
            raise ValueError(f"block {block.block_index}: empty posterior matrix")
        means = np.asarray(block.posteriors, dtype=float).mean(axis=0)
        for slot in range(block.s_local):
            silent[EmbeddingIndex(block.block_index, slot)] = bool(means[slot] < tau)
    return SilenceMask(silent=silent, tau=tau)


def active_embeddings(
    blocks: list[BlockRecord], mask: SilenceMask
) -> list[tuple[EmbeddingIndex, np.ndarray]]:
    """Embedding vectors of the non-silent slots, in (block, slot) order."""
    by_index = {block.block_index: block for block in blocks}
    out = []
    for index in mask.active_indices():
        block = by_index[index.block_index]
        out.append((index, np.asarray(block.embeddings[index.slot], dtype=float)))
    return out
