"""Clustering algorithms that resolve the inter-block speaker permutation.

Six algorithms are provided: k-means, COP-Kmeans, agglomerative
hierarchical clustering (AHC), spectral clustering (SC), and the
constrained variants of AHC and SC. The constrained variants encode one
piece of prior knowledge as cannot-link constraints: two distinct
non-silent slots of the same block always belong to different speakers.
For AHC the constraint is a dominating distance ``kappa`` inserted into
every within-block pair; for SC the corresponding graph edges are zeroed.
Oracle clustering (the per-block slot assignment closest to a reference)
gives the performance ceiling of any stitching strategy.

All algorithms are deterministic given their inputs and seed.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import SILENT, BlockRecord, ClusterAssignment, EmbeddingIndex
from .scoring import ReferenceAnnotation
from .silence import SilenceMask

#: Neighbor rank used for the locally scaled affinity bandwidth.
AFFINITY_NEIGHBOR = 7


class InfeasibleConstraintsError(RuntimeError):
    """COP-Kmeans could not find a constraint-satisfying assignment."""


@dataclass(frozen=True)
class NumClusters:
    """Stop merging when exactly k clusters remain."""

    k: int


@dataclass(frozen=True)
class DistanceThreshold:
    """Merge while the smallest average-linkage distance is below theta."""

    theta: float


StoppingRule = NumClusters | DistanceThreshold


@dataclass(frozen=True)
class Eigengap:
    """Estimate the cluster count from the Laplacian spectrum, capped at max_k."""

    max_k: int


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric pairwise distances over the non-silent embeddings."""

    entries: np.ndarray
    index_map: list[EmbeddingIndex]

    def __post_init__(self) -> None:
        entries = np.asarray(self.entries, dtype=float)
        n = len(self.index_map)
        if entries.shape != (n, n):
            raise ValueError(f"distance matrix shape {entries.shape} does not match {n} indices")
        if not np.all(np.isfinite(entries)):
            raise ValueError("distance matrix has non-finite entries")
        if entries.size and entries.min() < 0:
            raise ValueError("distance matrix has negative entries")
        if not np.array_equal(entries, entries.T):
            raise ValueError("distance matrix is not symmetric")
        if np.any(np.diag(entries) != 0):
            raise ValueError("distance matrix diagonal is not zero")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def size(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class AffinityMatrix:
    """Symmetric pairwise similarities in [0, 1] over the non-silent embeddings."""

    entries: np.ndarray
    index_map: list[EmbeddingIndex]

    def __post_init__(self) -> None:
        entries = np.asarray(self.entries, dtype=float)
        n = len(self.index_map)
        if entries.shape != (n, n):
            raise ValueError(f"affinity matrix shape {entries.shape} does not match {n} indices")
        if not np.all(np.isfinite(entries)):
            raise ValueError("affinity matrix has non-finite entries")
        if entries.size and (entries.min() < 0 or entries.max() > 1):
            raise ValueError("affinity entries must lie in [0, 1]")
        if not np.array_equal(entries, entries.T):
            raise ValueError("affinity matrix is not symmetric")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def size(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues (ascending) and orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


# ---------------------------------------------------------------------------
# pairwise structure construction


def _stack_vectors(
    embeddings: Sequence[tuple[EmbeddingIndex, np.ndarray]],
) -> tuple[list[EmbeddingIndex], np.ndarray]:
    if not embeddings:
        raise ValueError("need at least one embedding")
    index_map = [index for index, _ in embeddings]
    vectors = [np.asarray(vec, dtype=float).ravel() for _, vec in embeddings]
    dim = vectors[0].shape[0]
    for index, vec in zip(index_map, vectors):
        if vec.shape[0] != dim:
            raise ValueError(f"embedding {index}: dimension {vec.shape[0]} differs from {dim}")
    return index_map, np.vstack(vectors)


def _pairwise_euclidean(x: np.ndarray) -> np.ndarray:
    sq = (x**2).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.clip(d2, 0.0, None, out=d2)
    d = np.sqrt(d2)
    d = (d + d.T) / 2.0
    np.fill_diagonal(d, 0.0)
    return d


def build_distance_matrix(
    embeddings: Sequence[tuple[EmbeddingIndex, np.ndarray]], metric: str = "euclidean"
) -> DistanceMatrix:
    """Pairwise distance matrix over the given embeddings.

    metric "euclidean" is the default; "cosine" (1 - cosine similarity) is
    available for experimentation and rejects zero vectors.
    """
    index_map, x = _stack_vectors(embeddings)
    if metric == "euclidean":
        d = _pairwise_euclidean(x)
    elif metric == "cosine":
        norms = np.linalg.norm(x, axis=1)
        if np.any(norms == 0):
            raise ValueError("cosine distance undefined for zero vectors")
        unit = x / norms[:, None]
        d = 1.0 - unit @ unit.T
        np.clip(d, 0.0, None, out=d)
        d = (d + d.T) / 2.0
        np.fill_diagonal(d, 0.0)
    else:
        raise ValueError(f"unknown metric {metric!r}")
    return DistanceMatrix(entries=d, index_map=list(index_map))


def within_block_pairs(index_map: Sequence[EmbeddingIndex]) -> list[tuple[int, int]]:
    """Row positions (a, b), a < b, whose indices share a block."""
    pairs = []
    for a in range(len(index_map)):
        for b in range(a + 1, len(index_map)):
            if index_map[a].block_index == index_map[b].block_index:
                pairs.append((a, b))
    return pairs


def apply_cannot_link_distance(d: DistanceMatrix, kappa: float) -> DistanceMatrix:
    """Insert the dominating distance kappa into every within-block pair.

    kappa must exceed every distance that is not being overwritten, so the
    constraint dominates all genuine distances; re-applying with the same
    kappa is a no-op.
    """
    pairs = within_block_pairs(d.index_map)
    entries = d.entries.copy()
    mask = np.zeros_like(entries, dtype=bool)
    for a, b in pairs:
        mask[a, b] = mask[b, a] = True
    unconstrained = entries[~mask & ~np.eye(d.size, dtype=bool)]
    limit = float(unconstrained.max()) if unconstrained.size else 0.0
    if not kappa > limit:
        raise ValueError(
            f"kappa {kappa} does not dominate the largest unconstrained distance {limit}"
        )
    entries[mask] = kappa
    return DistanceMatrix(entries=entries, index_map=list(d.index_map))


def apply_cannot_link_affinity(a: AffinityMatrix) -> AffinityMatrix:
    """Zero the graph edges between distinct non-silent slots of one block."""
    entries = a.entries.copy()
    for i, j in within_block_pairs(a.index_map):
        entries[i, j] = entries[j, i] = 0.0
    return AffinityMatrix(entries=entries, index_map=list(a.index_map))


def build_affinity_matrix(
    embeddings: Sequence[tuple[EmbeddingIndex, np.ndarray]],
    neighbor: int = AFFINITY_NEIGHBOR,
) -> AffinityMatrix:
    """Gaussian affinity with locally scaled bandwidths.

    entries[i][j] = exp(-dist(i,j)^2 / (sigma_i * sigma_j)) where sigma_i is
    the distance from point i to its ``neighbor``-th nearest neighbor
    (capped at N - 1). The local scale adapts the kernel to each cluster's
    own spread, which keeps cross-speaker similarities near zero even when
    speakers dominate the pairwise-distance distribution. Coincident points
    get affinity exactly 1; if a local scale degenerates to zero, positive
    distances map to affinity 0. A single embedding yields the 1x1 identity.
    """
    index_map, x = _stack_vectors(embeddings)
    n = x.shape[0]
    if n == 1:
        return AffinityMatrix(entries=np.ones((1, 1)), index_map=list(index_map))
    d = _pairwise_euclidean(x)
    rank = min(neighbor, n - 1)
    sigma = np.sort(d, axis=1)[:, rank]
    prod = sigma[:, None] * sigma[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.exp(-(d**2) / prod)
    a[(prod == 0) & (d > 0)] = 0.0
    a[d == 0] = 1.0
    a = (a + a.T) / 2.0
    np.clip(a, 0.0, 1.0, out=a)
    np.fill_diagonal(a, 1.0)
    return AffinityMatrix(entries=a, index_map=list(index_map))


# ---------------------------------------------------------------------------
# agglomerative hierarchical clustering


def _canonical_assignment(
    index_map: Sequence[EmbeddingIndex], positions_by_cluster: list[list[int]]
) -> ClusterAssignment:
    """Relabel clusters by their smallest member position for determinism."""
    ordered = sorted(positions_by_cluster, key=min)
    labels: dict[EmbeddingIndex, int] = {}
    for cluster_id, members in enumerate(ordered):
        for pos in members:
            labels[index_map[pos]] = cluster_id
    return ClusterAssignment(labels=labels, num_speakers=len(ordered))


def ahc(d: DistanceMatrix, stop: StoppingRule) -> ClusterAssignment:
    """Average-linkage agglomeration over a precomputed distance matrix.

    Under NumClusters(k) merging continues until exactly k clusters remain;
    under DistanceThreshold(theta) it continues while the smallest
    average-linkage distance is strictly below theta. Ties are broken by
    the lexicographically smallest (row, col) pair, so results are
    reproducible.
    """
    n = d.size
    if isinstance(stop, NumClusters):
        if not 1 <= stop.k <= n:
            raise ValueError(f"requested {stop.k} clusters from {n} points")
    elif isinstance(stop, DistanceThreshold):
        if not stop.theta > 0:
            raise ValueError(f"distance threshold must be > 0, got {stop.theta}")
    else:
        raise TypeError(f"unknown stopping rule {stop!r}")

    work = d.entries.astype(float).copy()
    sizes = np.ones(n)
    alive = np.ones(n, dtype=bool)
    members: list[list[int]] = [[i] for i in range(n)]
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)

    remaining = n
    while remaining > 1:
        if isinstance(stop, NumClusters) and remaining <= stop.k:
            break
        candidates = np.where(upper & alive[:, None] & alive[None, :], work, np.inf)
        flat = int(np.argmin(candidates))
        i, j = divmod(flat, n)
        best = candidates[i, j]
        if isinstance(stop, DistanceThreshold) and not best < stop.theta:
            break
        others = alive.copy()
        others[i] = others[j] = False
        merged = (sizes[i] * work[i, others] + sizes[j] * work[j, others]) / (sizes[i] + sizes[j])
        work[i, others] = merged
        work[others, i] = merged
        sizes[i] += sizes[j]
        alive[j] = False
        members[i].extend(members[j])
        remaining -= 1

    clusters = [members[i] for i in range(n) if alive[i]]
    return _canonical_assignment(d.index_map, clusters)


def constrained_ahc(
    embeddings: Sequence[tuple[EmbeddingIndex, np.ndarray]],
    stop: StoppingRule,
    kappa: float = 10000.0,
    metric: str = "euclidean",
) -> ClusterAssignment:
    """AHC on a distance matrix with kappa inserted at within-block pairs.

    With DistanceThreshold(theta), theta < kappa, no two slots of one block
    can end up in the same cluster. With NumClusters(k) the kappa entries
    are ordinary (huge) distances, so constrained pairs may still merge when
    k forces it.
    """
    d = build_distance_matrix(embeddings, metric=metric)
    return ahc(apply_cannot_link_distance(d, kappa), stop)


# ---------------------------------------------------------------------------
# k-means and COP-Kmeans


def _kmeans_pp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]))
    first = int(rng.integers(n))
    centers[0] = x[first]
    d2 = ((x - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = float(d2.sum())
        if total > 0.0:
            target = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(d2), target, side="right"))
            idx = min(idx, n - 1)
        else:
            idx = j % n  # all remaining points coincide with a center
        centers[j] = x[idx]
        d2 = np.minimum(d2, ((x - centers[j]) ** 2).sum(axis=1))
    return centers


def _lloyd(
    x: np.ndarray,
    centers: np.ndarray,
    max_iter: int,
    adjacency: list[set[int]] | None = None,
) -> tuple[np.ndarray | None, float, list[float]]:
    """Lloyd iterations; returns (labels, objective, per-iteration objectives).

    With ``adjacency`` (cannot-link neighbor sets), points are assigned in
    index order to the nearest center that conflicts with no
    already-assigned neighbor; an unassignable point fails the whole pass
    (labels None). The objective is the sum of squared distances to the
    assigned centers and never increases from one iteration to the next.
    """
    n = x.shape[0]
    k = centers.shape[0]
    centers = centers.copy()
    labels = np.full(n, -1)
    history: list[float] = []
    for _ in range(max_iter):
        d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        if adjacency is None:
            new_labels = np.argmin(d2, axis=1)
        else:
            new_labels = np.full(n, -1)
            for p in range(n):
                forbidden = {new_labels[q] for q in adjacency[p] if new_labels[q] >= 0}
                assigned = False
                for c in np.argsort(d2[p], kind="stable"):
                    if int(c) not in forbidden:
                        new_labels[p] = int(c)
                        assigned = True
                        break
                if not assigned:
                    return None, float("inf"), history
        history.append(float(d2[np.arange(n), new_labels].sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            mask = labels == c
            if mask.any():
                centers[c] = x[mask].mean(axis=0)
            else:
                # revive an empty cluster at the point farthest from its center
                assigned_d2 = ((x - centers[labels]) ** 2).sum(axis=1)
                centers[c] = x[int(np.argmax(assigned_d2))]
    return labels, history[-1], history


def _kmeans_positions(
    x: np.ndarray, k: int, seed: int, max_iter: int
) -> tuple[np.ndarray, float, list[float]]:
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp_init(x, k, rng)
    labels, objective, history = _lloyd(x, centers, max_iter)
    assert labels is not None
    return labels, objective, history


def _positions_to_clusters(labels: np.ndarray) -> list[list[int]]:
    clusters: dict[int, list[int]] = {}
    for pos, lab in enumerate(labels):
        clusters.setdefault(int(lab), []).append(pos)
    return list(clusters.values())


def kmeans(
    embeddings: Sequence[tuple[EmbeddingIndex, np.ndarray]],
    k: int,
    seed: int = 0,
    max_iter: int = 100,
) -> ClusterAssignment:
    """Seeded k-means++ initialization followed by Lloyd iterations."""
    index_map, x = _stack_vectors(embeddings)
    if not 1 <= k <= x.shape[0]:
        raise ValueError(f"k must lie in [1, {x.shape[0]}], got {k}")
    labels, _, _ = _kmeans_positions(x, k, seed, max_iter)
    return _canonical_assignment(index_map, _positions_to_clusters(labels))


def cop_kmeans(
    embeddings: Sequence[tuple[EmbeddingIndex, np.ndarray]],
    k: int,
    cannot_links: Sequence[tuple[int, int]],
    seed: int = 0,
    max_iter: int = 100,
    restarts: int = 20,
) -> ClusterAssignment:
    """K-means honoring cannot-link constraints between row positions.

    Each point is assigned to the nearest center that violates no
    cannot-link against points already assigned in the current pass. If any
    point has no feasible center the pass fails and a fresh seeded
    initialization is tried, up to ``restarts`` attempts in total; if all
    fail, InfeasibleConstraintsError is raised. With an empty constraint
    set the result equals ``kmeans`` with the same seed.
    """
    index_map, x = _stack_vectors(embeddings)
    n = x.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    adjacency: list[set[int]] = [set() for _ in range(n)]
    for a, b in cannot_links:
        if not (0 <= a < n and 0 <= b < n):
            raise ValueError(f"cannot-link ({a}, {b}) outside [0, {n})")
        if a == b:
            raise ValueError(f"cannot-link pairs a point with itself: {a}")
        adjacency[a].add(b)
        adjacency[b].add(a)
    rng = np.random.default_rng(seed)
    for _ in range(max(1, restarts)):
        centers = _kmeans_pp_init(x, k, rng)
        labels, _, _ = _lloyd(x, centers, max_iter, adjacency)
        if labels is not None:
            return _canonical_assignment(index_map, _positions_to_clusters(labels))
    raise InfeasibleConstraintsError(
        f"no constraint-satisfying assignment found in {max(1, restarts)} restarts "
        f"(k={k}, {sum(len(s) for s in adjacency) // 2} cannot-links over {n} points)"
    )


# ---------------------------------------------------------------------------
# eigendecomposition, eigengap, spectral clustering


def symmetric_eigendecomposition(matrix: np.ndarray) -> EigenDecomposition:
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.

    Rotations are applied until every off-diagonal magnitude is at most
    1e-12 times the Frobenius norm of the input. Eigenvalues are returned
    ascending with matching orthonormal eigenvector columns.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    if float(np.abs(a - a.T).max(initial=0.0)) > 1e-10 * scale:
        raise ValueError("matrix is not symmetric within 1e-10 relative tolerance")
    n = a.shape[0]
    a = (a + a.T) / 2.0
    v = np.eye(n)
    if n == 1:
        return EigenDecomposition(eigenvalues=np.diag(a).copy(), eigenvectors=v)
    fro = float(np.linalg.norm(a))
    tol = 1e-12 * fro
    if fro == 0.0:
        return EigenDecomposition(eigenvalues=np.zeros(n), eigenvectors=v)

    def max_offdiag() -> float:
        off = np.abs(a - np.diag(np.diag(a)))
        return float(off.max())

    converged = max_offdiag() <= tol
    for _ in range(100):
        if converged:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= tol:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp = a[:, p].copy()
                cq = a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
        converged = max_offdiag() <= tol
    if not converged:
        raise RuntimeError("Jacobi iteration did not converge in 100 sweeps")
    eigenvalues = np.diag(a).copy()
    order = np.argsort(eigenvalues, kind="stable")
    return EigenDecomposition(eigenvalues=eigenvalues[order], eigenvectors=v[:, order])


def eigengap_estimate(eigenvalues: np.ndarray, max_k: int) -> int:
    """Cluster count at the largest gap of an ascending eigenvalue sequence.

    k = argmax over 1 <= j <= min(max_k, N-1) of (lambda_{j+1} - lambda_j),
    taking the smallest j on ties. Fewer than two eigenvalues yield 1.
    """
    vals = np.asarray(eigenvalues, dtype=float).ravel()
    if max_k < 1:
        raise ValueError(f"max_k must be >= 1, got {max_k}")
    n = vals.shape[0]
    if n < 2:
        return 1
    span = max(1.0, float(np.abs(vals).max()))
    if np.any(np.diff(vals) < -1e-9 * span):
        raise ValueError("eigenvalues must be ascending")
    limit = min(max_k, n - 1)
    gaps = vals[1 : limit + 1] - vals[:limit]
    return int(np.argmax(gaps)) + 1


def spectral_clustering(
    a: AffinityMatrix,
    k: int | Eigengap,
    kmeans_restarts: int = 10,
    kmeans_max_iter: int = 100,
) -> ClusterAssignment:
    """Unnormalized spectral clustering of an affinity graph.

    Builds the graph Laplacian L = Degree - A, embeds each point as its row
    in the eigenvector matrix of the k smallest eigenvalues, and clusters
    the rows with k-means (fixed internal seeds, ``kmeans_restarts``
    restarts keeping the best objective). With an Eigengap rule, k is first
    chosen from the Laplacian spectrum.
    """
    n = a.size
    entries = a.entries
    degree = entries.sum(axis=1)
    laplacian = np.diag(degree) - entries
    laplacian = (laplacian + laplacian.T) / 2.0
    decomposition = symmetric_eigendecomposition(laplacian)
    if isinstance(k, Eigengap):
        if not 1 <= k.max_k <= n:
            raise ValueError(f"max_k must lie in [1, {n}], got {k.max_k}")
        num = eigengap_estimate(decomposition.eigenvalues, k.max_k)
    else:
        if not 1 <= k <= n:
            raise ValueError(f"k must lie in [1, {n}], got {k}")
        num = k
    embedding = decomposition.eigenvectors[:, :num]
    best_labels: np.ndarray | None = None
    best_objective = np.inf
    for seed in range(kmeans_restarts):
        labels, objective, _ = _kmeans_positions(embedding, num, seed, kmeans_max_iter)
        if objective < best_objective:
            best_objective = objective
            best_labels = labels
    assert best_labels is not None
    return _canonical_assignment(a.index_map, _positions_to_clusters(best_labels))


# ---------------------------------------------------------------------------
# oracle clustering


def _rasterize_reference(
    reference: ReferenceAnnotation,
    speakers: list[str],
    start_time: float,
    num_frames: int,
    frame_duration: float,
) -> np.ndarray:
    """Boolean (num_frames, len(speakers)) activity of the reference within a block."""
    out = np.zeros((num_frames, len(speakers)), dtype=bool)
    column = {speaker: i for i, speaker in enumerate(speakers)}
    centers = start_time + (np.arange(num_frames) + 0.5) * frame_duration
    for segment in reference.segments:
        col = column[segment.speaker]
        mask = (centers >= segment.onset) & (centers < segment.onset + segment.duration)
        out[mask, col] = True
    return out


def oracle_clustering(
    blocks: list[BlockRecord],
    mask: SilenceMask,
    reference: ReferenceAnnotation,
    frame_duration: float,
    posterior_threshold: float = 0.5,
) -> ClusterAssignment:
    """Per-block slot-to-speaker assignment closest to the reference.

    For each block independently, every map from its non-silent slots to
    reference speakers is evaluated by the frame-level error between the
    merged binarized posteriors and the reference restricted to the block;
    the minimizing map is kept. Maps may send two slots to one speaker, so
    the oracle is at least as good as any clustering that merges slots.
    Global ids are reference speaker identities (sorted label order), which
    makes the assignment consistent across blocks. The search is exact: a
    slot only ever benefits from targeting a speaker active in the block or
    one shared representative inactive speaker, so only those targets are
    enumerated.
    """
    speakers = sorted({segment.speaker for segment in reference.segments})
    num_speakers = len(speakers)
    if num_speakers == 0:
        labels = {index: SILENT for index in mask.silent}
        return ClusterAssignment(labels=labels, num_speakers=0)
    labels: dict[EmbeddingIndex, int] = {index: SILENT for index in mask.silent_indices()}
    for block in sorted(blocks, key=lambda b: b.block_index):
        slots = [
            s
            for s in range(block.s_local)
            if not mask.is_silent(EmbeddingIndex(block.block_index, s))
        ]
        if not slots:
            continue
        binarized = np.asarray(block.posteriors, dtype=float)[:, slots] >= posterior_threshold
        ref_block = _rasterize_reference(
            reference, speakers, block.start_time, block.num_frames, frame_duration
        )
        active = [r for r in range(num_speakers) if ref_block[:, r].any()]
        inactive = [r for r in range(num_speakers) if not ref_block[:, r].any()]
        targets = active + inactive[:1]
        ref_counts = ref_block.sum(axis=1)
        best_map: tuple[int, ...] | None = None
        best_error = np.inf
        for candidate in itertools.product(targets, repeat=len(slots)):
            hyp = np.zeros_like(ref_block)
            for pos, target in enumerate(candidate):
                hyp[:, target] |= binarized[:, pos]
            hyp_counts = hyp.sum(axis=1)
            correct = (hyp & ref_block).sum()
            error = int(np.maximum(ref_counts, hyp_counts).sum() - correct)
            if error < best_error:
                best_error = error
                best_map = candidate
        assert best_map is not None
        for pos, slot in enumerate(slots):
            labels[EmbeddingIndex(block.block_index, slot)] = int(best_map[pos])
    return ClusterAssignment(labels=labels, num_speakers=num_speakers)
