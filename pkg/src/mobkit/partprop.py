"""Motion part proposal.

Two proposal routes share one output type:

* `propose_parts` grows clusters on a k-NN graph at several distance scales
  and also emits unions of adjacent clusters; confidence is a geometric
  compactness/isolation heuristic.
* `similarity_proposals` binarizes rows of a feature-distance matrix, the
  route the similarity losses and thresholds belong to. With the hand-crafted
  feature map it amounts to metric-ball proposals and is kept mainly for
  threshold sweeps; a learned feature map can be plugged in unchanged.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from mobkit.core import PointCloud, bbox_diagonal


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class PartProposal:
    indices: np.ndarray
    confidence: float

    def __post_init__(self):
        idx = np.unique(np.asarray(self.indices, dtype=np.int64))
        if idx.size == 0:
            raise ValueError("proposal must be non-empty")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must lie in [0, 1]")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)


@dataclass(frozen=True)
class ProposerConfig:
    k_neighbors: int = 12
    scales: tuple[float, ...] = (0.01, 0.02, 0.04)
    tau_conf: float = 0.5
    min_cluster: int = 16
    adjacency_factor: float = 2.0
    max_proposals: int | None = None  # default: cloud size


# ---------------------------------------------------------------------------
# similarity machinery
# ---------------------------------------------------------------------------

def similarity_matrix(features: np.ndarray) -> np.ndarray:
    """Pairwise L2 feature distances; symmetric with a zero diagonal."""
    f = np.asarray(features, dtype=np.float64)
    sq = np.sum(f * f, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (f @ f.T)
    np.fill_diagonal(d2, 0.0)
    d2 = np.maximum(d2, 0.0)
    d = np.sqrt(d2)
    return (d + d.T) / 2.0


def similarity_loss(features: np.ndarray, co_membership: np.ndarray,
                    margin: float = 100.0) -> float:
    """Hinge similarity loss over ordered point pairs.

    Co-member pairs contribute their feature distance, non-member pairs
    contribute max(0, margin - distance).
    """
    if margin <= 0:
        raise ValueError("margin must be positive")
    f = np.asarray(features, dtype=np.float64)
    co = np.asarray(co_membership, dtype=bool)
    n = f.shape[0]
    if co.shape != (n, n):
        raise ValueError("co_membership must be an NxN relation")
    d = similarity_matrix(f)
    off = ~np.eye(n, dtype=bool)
    same = co & off
    different = ~co & off
    return float(d[same].sum() + np.maximum(0.0, margin - d[different]).sum())


def binarize_row(sim: np.ndarray, row: int, tau_sim: float) -> np.ndarray:
    """Indices whose feature distance to `row` falls below the threshold;
    always contains `row` itself."""
    if tau_sim <= 0:
        raise ValueError("tau_sim must be positive")
    sim = np.asarray(sim)
    return np.nonzero(sim[row] < tau_sim)[0].astype(np.int64)


def confidence_ground_truth(proposal, gt) -> float:
    """IoU between a proposed part and its ground-truth counterpart."""
    a = np.unique(np.asarray(proposal, dtype=np.int64))
    b = np.unique(np.asarray(gt, dtype=np.int64))
    if a.size == 0 or b.size == 0:
        raise DomainError("confidence needs two non-empty point sets")
    inter = np.intersect1d(a, b).size
    union = np.union1d(a, b).size
    return inter / union


def estimate_normals(cloud: PointCloud, k: int = 16) -> np.ndarray:
    """Per-point unit normals from local PCA (smallest eigenvector), with a
    sign convention of largest-magnitude component positive."""
    pts = cloud.points
    k = min(k, len(cloud) - 1)
    if k < 2:
        out = np.zeros_like(pts)
        out[:, 2] = 1.0
        return out
    tree = cKDTree(pts)
    _, idx = tree.query(pts, k=k + 1)
    normals = np.empty_like(pts)
    for i in range(pts.shape[0]):
        nb = pts[idx[i]]
        nb = nb - nb.mean(axis=0)
        _, vecs = np.linalg.eigh(nb.T @ nb)
        n = vecs[:, 0]
        j = int(np.argmax(np.abs(n)))
        normals[i] = -n if n[j] < 0 else n
    return normals


def build_feature_map(cloud: PointCloud, k: int = 16, gain: float = 300.0) -> np.ndarray:
    """Hand-crafted 9-D per-point features: diagonal-normalized position,
    normal, and the local covariance spectrum. Stands in for a learned map."""
    diag = bbox_diagonal(cloud) or 1.0
    pts = cloud.points / diag
    normals = cloud.normals if cloud.normals is not None else estimate_normals(cloud, k)
    k = min(k, len(cloud) - 1)
    eigs = np.zeros((len(cloud), 3))
    if k >= 2:
        tree = cKDTree(cloud.points)
        _, idx = tree.query(cloud.points, k=k + 1)
        for i in range(len(cloud)):
            nb = cloud.points[idx[i]]
            nb = nb - nb.mean(axis=0)
            vals = np.linalg.eigvalsh(nb.T @ nb / (k + 1))
            eigs[i] = np.sqrt(np.maximum(vals, 0.0)) / diag
    return gain * np.concatenate([pts, normals, eigs], axis=1)


# ---------------------------------------------------------------------------
# clustering proposer
# ---------------------------------------------------------------------------

def _components(points: np.ndarray, radius: float, k: int) -> list[np.ndarray]:
    """Connected components of the k-NN graph with edges shorter than radius."""
    n = points.shape[0]
    tree = cKDTree(points)
    dist, idx = tree.query(points, k=min(k + 1, n))
    neighbors = [idx[i][(dist[i] < radius) & (idx[i] != i)] for i in range(n)]
    adj = [set() for _ in range(n)]
    for i in range(n):
        for j in neighbors[i]:
            adj[i].add(int(j))
            adj[int(j)].add(i)
    seen = np.zeros(n, dtype=bool)
    comps = []
    for start in range(n):
        if seen[start]:
            continue
        queue = deque([start])
        seen[start] = True
        comp = [start]
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    comp.append(v)
                    queue.append(v)
        comps.append(np.array(sorted(comp), dtype=np.int64))
    return comps


def _compactness_confidence(points: np.ndarray, member: np.ndarray, k: int) -> float:
    """Isolation-to-spacing ratio squashed to [0, 1].

    The gap to the nearest external point is compared with the mean
    nearest-neighbor spacing inside the cluster; well-separated clusters
    score above 0.5, fragments of a denser whole score below.
    """
    n = points.shape[0]
    inside = np.zeros(n, dtype=bool)
    inside[member] = True
    if inside.all():
        return 1.0
    cluster_pts = points[member]
    if member.size < 2:
        return 0.0
    ctree = cKDTree(cluster_pts)
    d_in, _ = ctree.query(cluster_pts, k=2)
    spacing = float(d_in[:, 1].mean())
    outside_pts = points[~inside]
    otree = cKDTree(outside_pts)
    d_out, _ = otree.query(cluster_pts, k=1)
    gap = float(d_out.min())
    if spacing <= 0:
        return 1.0
    x = gap / spacing
    return x / (1.0 + x)


def propose_parts(cloud: PointCloud,
                  config: ProposerConfig = ProposerConfig()) -> list[PartProposal]:
    """Multi-scale clustering proposer.

    At each scale, connected components of the k-NN graph (edge predicate:
    distance < scale x diagonal) become proposals, as do unions of adjacent
    component pairs. Exact-duplicate index sets are merged keeping the best
    confidence; proposals at or below tau_conf are dropped; output is sorted
    by confidence (descending), then lowest member index, capped at N.
    """
    n = len(cloud)
    if n < config.min_cluster:
        raise DomainError(f"cloud has {n} points; need >= {config.min_cluster}")
    diag = bbox_diagonal(cloud)
    pts = cloud.points

    candidates: dict[bytes, np.ndarray] = {}

    def offer(indices: np.ndarray):
        key = indices.tobytes()
        if key not in candidates:
            candidates[key] = indices

    for scale in config.scales:
        radius = scale * diag
        comps = [c for c in _components(pts, radius, config.k_neighbors)
                 if c.size >= config.min_cluster]
        for c in comps:
            offer(c)
        # Unions of adjacent cluster pairs recover parts split by a gap
        # slightly wider than this scale.
        if len(comps) > 1:
            trees = [cKDTree(pts[c]) for c in comps]
            limit = config.adjacency_factor * radius
            for a in range(len(comps)):
                for b in range(a + 1, len(comps)):
                    d = trees[a].query(pts[comps[b]], k=1,
                                       distance_upper_bound=limit)[0]
                    if np.isfinite(d).any():
                        offer(np.union1d(comps[a], comps[b]))

    proposals = []
    for indices in candidates.values():
        conf = _compactness_confidence(pts, indices, config.k_neighbors)
        if conf > config.tau_conf:
            proposals.append(PartProposal(indices, conf))
    proposals.sort(key=lambda p: (-p.confidence, int(p.indices[0]), p.indices.size))
    cap = config.max_proposals if config.max_proposals is not None else n
    return proposals[:cap]


def similarity_proposals(cloud: PointCloud, tau_sim: float = 100.0,
                         features: np.ndarray | None = None,
                         k: int = 12) -> list[PartProposal]:
    """Row-binarization proposals from the feature-distance matrix."""
    f = features if features is not None else build_feature_map(cloud)
    sim = similarity_matrix(f)
    candidates: dict[bytes, np.ndarray] = {}
    for row in range(len(cloud)):
        indices = binarize_row(sim, row, tau_sim)
        if indices.size:
            candidates.setdefault(indices.tobytes(), indices)
    out = []
    for indices in candidates.values():
        conf = _compactness_confidence(cloud.points, indices, k)
        out.append(PartProposal(indices, conf))
    out.sort(key=lambda p: (-p.confidence, int(p.indices[0]), p.indices.size))
    return out
