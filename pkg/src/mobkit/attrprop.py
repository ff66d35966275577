"""Motion attribute proposal.

Axis lines are encoded pose-invariantly as (anchor point index, displacement
to the line, orientation); orientations are classified against a 14-entry
direction codebook with an additive residual. A deterministic geometric
generator proposes candidate attributes for a part: lines along its PCA axes,
the principal direction of its contact region with the static remainder, and
its bounding-box edges.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from mobkit.core import (
    Line,
    MotionAxis,
    MotionType,
    PointCloud,
    axis_point_distances,
    bbox_diagonal,
)

_PROB_CLAMP = 1e-12

# 6 cube-face directions followed by the 8 normalized cube-corner diagonals.
_FACES = np.array([
    [1, 0, 0], [-1, 0, 0],
    [0, 1, 0], [0, -1, 0],
    [0, 0, 1], [0, 0, -1],
], dtype=np.float64)
_CORNERS = np.array([
    [1, 1, 1], [1, 1, -1], [1, -1, 1], [1, -1, -1],
    [-1, 1, 1], [-1, 1, -1], [-1, -1, 1], [-1, -1, -1],
], dtype=np.float64) / math.sqrt(3.0)
DEFAULT_ORIENTATION_CODEBOOK = np.concatenate([_FACES, _CORNERS])
DEFAULT_ORIENTATION_CODEBOOK.setflags(write=False)


class DegeneratePartError(ValueError):
    """Raised when no attribute candidate class can be built for a part."""


@dataclass(frozen=True)
class OrientationCode:
    """Codebook class plus the pre-normalization residual vector."""

    class_index: int
    residual: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.residual, dtype=np.float64)
        r.setflags(write=False)
        object.__setattr__(self, "residual", r)


@dataclass(frozen=True)
class AttributeProposal:
    motion_type: MotionType
    axis: MotionAxis
    source: str  # "pca" | "contact" | "bbox-edge"


def encode_orientation(v, book: np.ndarray | None = None) -> OrientationCode:
    """Classify a unit direction against the codebook; ties pick the lowest
    index. decode(encode(v)) reproduces v exactly."""
    book = DEFAULT_ORIENTATION_CODEBOOK if book is None else np.asarray(book)
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v)
    if n < 1e-12:
        raise ValueError("cannot encode a zero vector")
    if abs(n - 1.0) > 1e-6:
        raise ValueError("orientation must be unit length")
    dots = book @ v
    cls = int(np.argmax(dots))  # argmax returns the first (lowest) maximum
    return OrientationCode(cls, v - book[cls])


def decode_orientation(code: OrientationCode, book: np.ndarray | None = None) -> np.ndarray:
    book = DEFAULT_ORIENTATION_CODEBOOK if book is None else np.asarray(book)
    v = book[code.class_index] + code.residual
    return v / np.linalg.norm(v)


def canonical_direction(d) -> np.ndarray:
    """Flip an axis direction so its largest-magnitude component is positive
    (rotation axes are treated as undirected)."""
    d = np.asarray(d, dtype=np.float64)
    k = int(np.argmax(np.abs(d)))
    return -d if d[k] < 0 else d.copy()


def encode_axis(line: Line, cloud: PointCloud) -> MotionAxis:
    """Anchor a line at the cloud point nearest to it (ties pick the lowest
    index); the displacement runs from the anchor to its closest point on
    the line."""
    dists = axis_point_distances(cloud.points, line)
    anchor = int(np.argmin(dists))
    closest = line.closest_point(cloud.points[anchor])
    direction = canonical_direction(line.direction)
    return MotionAxis(anchor, closest - cloud.points[anchor], direction)


def decode_axis(axis: MotionAxis, cloud: PointCloud) -> Line:
    return axis.line(cloud)


def _clamped_log(p) -> np.ndarray:
    return np.log(np.maximum(np.asarray(p, dtype=np.float64), _PROB_CLAMP))


def anchor_loss(pred_indicator, pred_displacement, gt_indicator,
                gt_displacement) -> float:
    """Binary cross-entropy of the anchor indicators plus squared-L2
    displacement error."""
    p = np.asarray(pred_indicator, dtype=np.float64)
    y = np.asarray(gt_indicator, dtype=np.float64)
    if p.shape != y.shape:
        raise ValueError("indicator length mismatch")
    if np.any(p < 0) or np.any(p > 1):
        raise ValueError("indicator probabilities must lie in [0, 1]")
    ce = -float(np.sum(y * _clamped_log(p) + (1 - y) * _clamped_log(1 - p)))
    d = np.asarray(pred_displacement, float) - np.asarray(gt_displacement, float)
    return ce + float(d @ d)


def orientation_loss(pred_class_probs, pred_residual,
                     gt_code: OrientationCode) -> float:
    p = np.asarray(pred_class_probs, dtype=np.float64)
    if p.shape[0] != 14 or abs(p.sum() - 1.0) > 1e-6 or np.any(p < 0):
        raise ValueError("need 14 non-negative class probabilities summing to 1")
    nll = -float(_clamped_log(p[gt_code.class_index]))
    r = np.asarray(pred_residual, float) - gt_code.residual
    return nll + float(r @ r)


def type_loss(pred_probs, gt: MotionType) -> float:
    p = np.asarray(pred_probs, dtype=np.float64)
    if p.shape[0] != 3 or abs(p.sum() - 1.0) > 1e-6 or np.any(p < 0):
        raise ValueError("need 3 non-negative type probabilities summing to 1")
    order = (MotionType.TRANSLATION, MotionType.ROTATION,
             MotionType.ROTATION_TRANSLATION)
    return -float(_clamped_log(p[order.index(gt)]))


# ---------------------------------------------------------------------------
# deterministic candidate generation
# ---------------------------------------------------------------------------

def _split_blobs(points: np.ndarray, radius: float, max_blobs: int = 4) -> list:
    """Single-linkage components of a point set, largest first."""
    n = points.shape[0]
    if n == 0:
        return []
    from scipy.spatial import cKDTree

    tree = cKDTree(points)
    seen = np.zeros(n, dtype=bool)
    blobs = []
    for start in range(n):
        if seen[start]:
            continue
        stack = [start]
        seen[start] = True
        members = [start]
        while stack:
            u = stack.pop()
            for v in tree.query_ball_point(points[u], radius):
                if not seen[v]:
                    seen[v] = True
                    members.append(v)
                    stack.append(v)
        blobs.append(np.array(sorted(members)))
    blobs.sort(key=lambda b: (-b.size, int(b[0])))
    return [points[b] for b in blobs[:max_blobs]]


def _snap(line: Line, cloud: PointCloud, book) -> MotionAxis:
    axis = encode_axis(line, cloud)
    code = encode_orientation(axis.orientation, book)
    decoded = decode_orientation(code, book)
    return MotionAxis(axis.anchor_index, axis.displacement, decoded)


def propose_attributes(cloud: PointCloud, part, *, contact_band: float = 0.05,
                       rt_angle_tol_deg: float = 5.0,
                       book: np.ndarray | None = None) -> list[AttributeProposal]:
    """Deterministic axis candidates for one part.

    Candidate classes (degenerate ones are skipped):
      * lines through the part centroid along its three PCA axes, proposed
        as both rotation and translation;
      * the principal direction of the part's contact region with the static
        remainder, through the contact centroid (rotation);
      * the twelve part-bbox edge lines (rotation).
    A combined rotation+translation candidate is added whenever a rotation
    and a translation candidate share a direction within ``rt_angle_tol_deg``.
    """
    part = np.unique(np.asarray(part, dtype=np.int64))
    if part.size == 0 or part[-1] >= len(cloud):
        raise ValueError("part is empty or out of range")
    pts = cloud.points[part]
    diag = bbox_diagonal(cloud)
    proposals: list[AttributeProposal] = []

    def add(line: Line, motion_type: MotionType, source: str):
        proposals.append(AttributeProposal(motion_type, _snap(line, cloud, book),
                                           source))

    # PCA axes through the centroid, largest eigenvalue first.
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    if part.size >= 4:
        cov = centered.T @ centered / part.size
        eigvals, eigvecs = np.linalg.eigh(cov)
        if eigvals[-1] > 1e-18:
            for k in (2, 1, 0):
                direction = canonical_direction(eigvecs[:, k])
                line = Line(centroid, direction / np.linalg.norm(direction))
                add(line, MotionType.ROTATION, "pca")
                add(line, MotionType.TRANSLATION, "pca")

    # Contact region: part points close to the static remainder, split into
    # connected blobs (a part can touch the static side at several joints).
    # Each blob proposes its principal direction and its normal, both through
    # the blob centroid: the former captures hinge lines and slide rails, the
    # latter pivot axes perpendicular to a flat contact patch.
    rest = np.setdiff1d(np.arange(len(cloud), dtype=np.int64), part)
    if rest.size:
        from scipy.spatial import cKDTree

        tree = cKDTree(cloud.points[rest])
        d, _ = tree.query(pts, k=1)
        mask = d <= contact_band * diag
        contact = pts[mask]
        for blob in _split_blobs(contact, contact_band * diag):
            if blob.shape[0] < 3:
                continue
            c0 = blob.mean(axis=0)
            cc = blob - c0
            cov = cc.T @ cc / blob.shape[0]
            eigvals, eigvecs = np.linalg.eigh(cov)
            if eigvals[2] <= 1e-18:
                continue
            directions = [canonical_direction(eigvecs[:, 2]),
                          canonical_direction(eigvecs[:, 0])]
            # Anchor once at the blob itself and once at the counterpart
            # static points: joint hardware is rotationally symmetric about
            # the true axis, so its centroid tends to sit right on it.
            anchors = [c0]
            near = tree.query_ball_point(blob, contact_band * diag)
            counter = sorted({j for row in near for j in row})
            if counter:
                anchors.append(cloud.points[rest[np.asarray(counter)]].mean(axis=0))
            for direction in directions:
                for point in anchors:
                    add(Line(point, direction), MotionType.ROTATION, "contact")
            # A prismatic contact strip runs along the slide direction.
            add(Line(c0, directions[0]), MotionType.TRANSLATION, "contact")

    # Part-bbox edge lines.
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    extent = hi - lo
    for ax in range(3):
        if extent[ax] < 1e-12:
            continue
        others = [a for a in range(3) if a != ax]
        direction = np.zeros(3)
        direction[ax] = 1.0
        for c0 in (lo[others[0]], hi[others[0]]):
            for c1 in (lo[others[1]], hi[others[1]]):
                point = np.zeros(3)
                point[ax] = lo[ax]
                point[others[0]] = c0
                point[others[1]] = c1
                add(Line(point, direction), MotionType.ROTATION, "bbox-edge")

    if not proposals:
        raise DegeneratePartError("no attribute candidates for this part")

    # Screw candidates: a rotation and a translation sharing a direction.
    cos_tol = math.cos(math.radians(rt_angle_tol_deg))
    rotations = [p for p in proposals if p.motion_type is MotionType.ROTATION]
    translations = [p for p in proposals if p.motion_type is MotionType.TRANSLATION]
    for rp in rotations:
        for tp in translations:
            if abs(float(rp.axis.orientation @ tp.axis.orientation)) >= cos_tol:
                proposals.append(AttributeProposal(
                    MotionType.ROTATION_TRANSLATION, rp.axis, rp.source))
                break
    return proposals
