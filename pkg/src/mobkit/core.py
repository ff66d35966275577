"""Core domain types and exact rigid-motion kinematics.

A shape is a static point cloud. A *mobility* is a subset of its points (a
motion part) together with a motion type and a motion axis line. This module
holds those types plus the pure geometric operations everything else builds
on: rotating/translating points about an axis line, the normalized per-point
motion field used for mobility comparison, and the unnormalized motion flow
used for evaluation.

Conventions:
    * rotation amounts are degrees, counter-clockwise about the axis
      direction (right-hand rule);
    * translation amounts are model units along the axis direction;
    * a combined rotation+translation applies the rotation first, then the
      translation along the same line (screw style).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

UNIT_TOLERANCE = 1e-6

# Guard factor for the distance normalization in `move`: points closer to a
# rotation axis than this fraction of the bounding-box diagonal are treated
# as being at that distance.
EPS_DISTANCE_FACTOR = 1e-4


class InvalidAxisError(ValueError):
    """Raised when an axis direction is not unit length."""


def _vec3(x, name: str = "vector") -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {v.shape}")
    return v


def _unit3(x, name: str = "direction") -> np.ndarray:
    v = _vec3(x, name)
    n = np.linalg.norm(v)
    if abs(n - 1.0) > UNIT_TOLERANCE:
        raise InvalidAxisError(f"{name} must be unit length, got norm {n}")
    return v


@dataclass(frozen=True)
class PointCloud:
    """N static 3D points with optional unit normals.

    Arrays are stored as float64 and made read-only; instances are safe to
    share across threads.
    """

    points: np.ndarray
    normals: np.ndarray | None = None

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=np.float64))
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 1:
            raise ValueError(f"points must have shape (N>=1, 3), got {pts.shape}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.normals is not None:
            nrm = np.ascontiguousarray(np.asarray(self.normals, dtype=np.float64))
            if nrm.shape != pts.shape:
                raise ValueError("normals must match points in shape")
            lengths = np.linalg.norm(nrm, axis=1)
            if np.any(np.abs(lengths - 1.0) > UNIT_TOLERANCE):
                raise ValueError("normals must be unit length")
            nrm.setflags(write=False)
            object.__setattr__(self, "normals", nrm)

    def __len__(self) -> int:
        return self.points.shape[0]

    def diagonal(self) -> float:
        return bbox_diagonal(self)


class MotionType(Enum):
    TRANSLATION = "T"
    ROTATION = "R"
    ROTATION_TRANSLATION = "RT"

    @property
    def code(self) -> str:
        return self.value

    @classmethod
    def from_code(cls, code: str) -> "MotionType":
        for t in cls:
            if t.value == code:
                return t
        raise ValueError(f"unknown motion type code: {code!r}")

    @property
    def has_rotation(self) -> bool:
        return self in (MotionType.ROTATION, MotionType.ROTATION_TRANSLATION)

    @property
    def has_translation(self) -> bool:
        return self in (MotionType.TRANSLATION, MotionType.ROTATION_TRANSLATION)


@dataclass(frozen=True)
class Line:
    """Infinite line: a point on it plus a unit direction."""

    point: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        p = _vec3(self.point, "line point")
        d = _unit3(self.direction, "line direction")
        p.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "point", p)
        object.__setattr__(self, "direction", d)

    def closest_point(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=np.float64)
        rel = p - self.point
        return self.point + (rel @ self.direction) * self.direction


@dataclass(frozen=True)
class MotionAxis:
    """Pose-invariant axis encoding: cloud anchor index + displacement to the
    line + unit orientation.

    The encoded line passes through ``cloud.points[anchor_index] +
    displacement`` with direction ``orientation``.
    """

    anchor_index: int
    displacement: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        if self.anchor_index < 0:
            raise ValueError("anchor_index must be non-negative")
        d = _vec3(self.displacement, "displacement")
        o = _unit3(self.orientation, "orientation")
        d.setflags(write=False)
        o.setflags(write=False)
        object.__setattr__(self, "displacement", d)
        object.__setattr__(self, "orientation", o)

    def line(self, cloud: PointCloud) -> Line:
        if self.anchor_index >= len(cloud):
            raise ValueError("anchor_index out of range for this cloud")
        return Line(cloud.points[self.anchor_index] + self.displacement, self.orientation)


@dataclass(frozen=True)
class Mobility:
    """A motion part (sorted unique point indices) plus motion type and axis."""

    part: np.ndarray
    motion_type: MotionType
    axis: MotionAxis

    def __post_init__(self):
        part = np.asarray(self.part, dtype=np.int64).ravel()
        if part.size == 0:
            raise ValueError("part must be non-empty")
        part = np.unique(part)
        if part[0] < 0:
            raise ValueError("part indices must be non-negative")
        part.setflags(write=False)
        object.__setattr__(self, "part", part)

    def part_set(self) -> frozenset:
        return frozenset(int(i) for i in self.part)


@dataclass(frozen=True)
class MoveAmounts:
    """Canonical motion amounts: translation as a fraction of the bounding-box
    diagonal, rotation in degrees."""

    translation_delta: float = 0.15
    rotation_delta: float = 90.0

    def __post_init__(self):
        if not self.translation_delta > 0:
            raise ValueError("translation_delta must be positive")
        if not 0 < self.rotation_delta <= 180:
            raise ValueError("rotation_delta must be in (0, 180]")


@dataclass(frozen=True)
class MotionFlow:
    """Per-point displacement vectors; zero for points outside every part."""

    vectors: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError("vectors must have shape (N, 3)")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)


def bbox_diagonal(cloud: PointCloud) -> float:
    """Euclidean length of the axis-aligned bounding-box diagonal.

    Zero for a single point.
    """
    lo = cloud.points.min(axis=0)
    hi = cloud.points.max(axis=0)
    return float(np.linalg.norm(hi - lo))


def axis_point_distance(p, line: Line) -> float:
    """Perpendicular distance from a point to an infinite line."""
    p = _vec3(p, "point")
    rel = p - line.point
    return float(np.linalg.norm(rel - (rel @ line.direction) * line.direction))


def axis_point_distances(points: np.ndarray, line: Line) -> np.ndarray:
    """Vectorized `axis_point_distance` over an (N, 3) array."""
    rel = np.asarray(points, dtype=np.float64) - line.point
    along = rel @ line.direction
    perp = rel - np.outer(along, line.direction)
    return np.linalg.norm(perp, axis=1)


def rotate_about_line(points: np.ndarray, line: Line, degrees: float) -> np.ndarray:
    """Rodrigues rotation of points about a line by an angle in degrees."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    theta = math.radians(degrees)
    c, s = math.cos(theta), math.sin(theta)
    k = line.direction
    rel = pts - line.point
    rotated = rel * c + np.cross(k, rel) * s + np.outer(rel @ k, k) * (1.0 - c)
    return rotated + line.point


def transform_points(points: np.ndarray, line: Line, motion_type: MotionType,
                     amount) -> np.ndarray:
    """Transform points about an axis line.

    ``amount`` is model units for TRANSLATION, degrees for ROTATION, and a
    ``(degrees, units)`` pair for ROTATION_TRANSLATION (rotation first).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if motion_type is MotionType.TRANSLATION:
        return pts + float(amount) * line.direction
    if motion_type is MotionType.ROTATION:
        return rotate_about_line(pts, line, float(amount))
    degrees, units = amount
    rotated = rotate_about_line(pts, line, float(degrees))
    return rotated + float(units) * line.direction


def transform_about_axis(p, line: Line, motion_type: MotionType, amount) -> np.ndarray:
    """Single-point version of `transform_points`; preserves rigidity exactly."""
    return transform_points(_vec3(p, "point"), line, motion_type, amount)[0]


def _snapshot_amount(motion_type: MotionType, amounts: MoveAmounts, diag: float):
    if motion_type is MotionType.TRANSLATION:
        return amounts.translation_delta * diag
    if motion_type is MotionType.ROTATION:
        return amounts.rotation_delta
    return (amounts.rotation_delta, amounts.translation_delta * diag)


def displacement_field(cloud: PointCloud, mobility: Mobility,
                       amounts: MoveAmounts) -> np.ndarray:
    """Raw per-point displacement T(p) - p for part points, zero elsewhere."""
    part = mobility.part
    if part[-1] >= len(cloud):
        raise ValueError("part index out of range for this cloud")
    diag = bbox_diagonal(cloud)
    line = mobility.axis.line(cloud)
    amount = _snapshot_amount(mobility.motion_type, amounts, diag)
    out = np.zeros_like(cloud.points)
    moved = transform_points(cloud.points[part], line, mobility.motion_type, amount)
    out[part] = moved - cloud.points[part]
    return out


def move_field(cloud: PointCloud, mobility: Mobility, amounts: MoveAmounts,
               *, normalize_translation: bool = False) -> np.ndarray:
    """Normalized per-point motion field.

    Part points move by the canonical amounts; the displacement of a point
    under a motion with a rotational component is divided by its distance to
    the axis line (floored at a small fraction of the diagonal, so points on
    the axis do not blow up). Pure translation displacement is uniform and
    independent of where the axis line sits, so it is left unnormalized
    unless ``normalize_translation`` is set.
    """
    disp = displacement_field(cloud, mobility, amounts)
    normalize = mobility.motion_type.has_rotation or normalize_translation
    if normalize:
        diag = bbox_diagonal(cloud)
        line = mobility.axis.line(cloud)
        part = mobility.part
        dist = axis_point_distances(cloud.points[part], line)
        dist = np.maximum(dist, EPS_DISTANCE_FACTOR * diag)
        disp[part] = disp[part] / dist[:, None]
    return disp


def move(p_index: int, cloud: PointCloud, mobility: Mobility, amounts: MoveAmounts,
         *, normalize_translation: bool = False) -> np.ndarray:
    """Normalized motion of one point; the zero vector if it is not in the part."""
    if not 0 <= p_index < len(cloud):
        raise IndexError(f"point index {p_index} out of range")
    if int(p_index) not in mobility.part_set():
        return np.zeros(3)
    return move_field(cloud, mobility, amounts,
                      normalize_translation=normalize_translation)[p_index]


def mobility_to_flow(cloud: PointCloud, mobilities: Sequence[Mobility],
                     amounts: MoveAmounts) -> MotionFlow:
    """Convert mobilities into a single motion flow.

    Displacements are unnormalized. When parts overlap, later mobilities
    overwrite earlier ones on the shared indices.
    """
    vectors = np.zeros_like(cloud.points)
    for m in mobilities:
        disp = displacement_field(cloud, m, amounts)
        vectors[m.part] = disp[m.part]
    return MotionFlow(vectors)
