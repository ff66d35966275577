"""Evaluation metrics for predicted mobilities against ground truth.

Mobilities are grouped by identical part sets (a part may carry several
motions); groups are matched to ground-truth groups by Hungarian assignment
on part IoU, and attributes within a matched group pair are matched by
minimal orientation error (ties broken in favor of matching motion types).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from mobkit.core import (
    Line,
    Mobility,
    MotionType,
    MoveAmounts,
    PointCloud,
    axis_point_distance,
    bbox_diagonal,
    mobility_to_flow,
)
from mobkit.bench.generate import Annotation


@dataclass(frozen=True)
class EvalReport:
    """iou/ta in [0,1]; epe in model units; md as a fraction of the diagonal;
    oe in degrees. md/oe are NaN when no attribute pairs were matched."""

    iou: float
    epe: float
    md: float
    oe: float
    ta: float

    def as_dict(self) -> dict:
        return {"iou": self.iou, "epe": self.epe, "md": self.md,
                "oe": self.oe, "ta": self.ta}


def part_iou(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    inter = np.intersect1d(a, b).size
    union = np.union1d(a, b).size
    return inter / union if union else 0.0


def orientation_error_deg(d_pred, d_gt) -> float:
    """Undirected angle between two axis directions, in [0, 90] degrees."""
    c = abs(float(np.dot(d_pred, d_gt)))
    return math.degrees(math.acos(min(1.0, c)))


def _clip_line_to_bbox(line: Line, lo, hi):
    """Intersect an infinite line with an AABB (slab method); returns the
    parameter interval or None when the line misses the box."""
    t0, t1 = -math.inf, math.inf
    for k in range(3):
        d = line.direction[k]
        p = line.point[k]
        if abs(d) < 1e-15:
            if p < lo[k] - 1e-12 or p > hi[k] + 1e-12:
                return None
            continue
        a = (lo[k] - p) / d
        b = (hi[k] - p) / d
        t0 = max(t0, min(a, b))
        t1 = min(t1, max(a, b))
    if t0 > t1:
        return None
    return t0, t1


def axis_min_distance(pred_line: Line, gt_line: Line, cloud: PointCloud) -> float:
    """Distance from the midpoint of the GT axis segment (clipped to the
    cloud bbox) to the predicted line, as a fraction of the diagonal."""
    lo = cloud.points.min(axis=0)
    hi = cloud.points.max(axis=0)
    span = _clip_line_to_bbox(gt_line, lo, hi)
    if span is None:
        mid = gt_line.closest_point((lo + hi) / 2)
    else:
        mid = gt_line.point + (span[0] + span[1]) / 2 * gt_line.direction
    diag = bbox_diagonal(cloud)
    return axis_point_distance(mid, pred_line) / diag if diag > 0 else 0.0


def _group_by_part(mobilities) -> list[tuple[np.ndarray, list[Mobility]]]:
    groups: list[tuple[frozenset, np.ndarray, list]] = []
    for m in mobilities:
        key = m.part_set()
        for gkey, gidx, glist in groups:
            if gkey == key:
                glist.append(m)
                break
        else:
            groups.append((key, m.part, [m]))
    return [(idx, lst) for _, idx, lst in groups]


def _match_attributes(pred: list[Mobility], gt: list[Mobility], cloud: PointCloud):
    """Pair attributes by minimal OE; among OE ties prefer same motion type."""
    cost = np.zeros((len(pred), len(gt)))
    for i, pm in enumerate(pred):
        for j, gm in enumerate(gt):
            oe = orientation_error_deg(pm.axis.orientation, gm.axis.orientation)
            cost[i, j] = oe + (1e-6 if pm.motion_type is not gm.motion_type else 0.0)
    rows, cols = linear_sum_assignment(cost)
    return list(zip(rows.tolist(), cols.tolist()))


def evaluate(pred: list[Mobility], gt: Annotation,
             amounts: MoveAmounts = MoveAmounts()) -> EvalReport:
    """Score predicted mobilities against a ground-truth annotation."""
    cloud = gt.cloud
    gt_mob = gt.mobilities()
    n_gt = len(gt_mob)

    pred_flow = mobility_to_flow(cloud, pred, amounts).vectors
    gt_flow = mobility_to_flow(cloud, gt_mob, amounts).vectors
    epe = float(np.linalg.norm(pred_flow - gt_flow, axis=1).mean())

    if not pred:
        return EvalReport(iou=0.0, epe=epe, md=float("nan"), oe=float("nan"),
                          ta=0.0 if n_gt else 1.0)

    pred_groups = _group_by_part(pred)
    gt_groups = _group_by_part(gt_mob)
    iou_matrix = np.zeros((len(pred_groups), len(gt_groups)))
    for i, (pidx, _) in enumerate(pred_groups):
        for j, (gidx, _) in enumerate(gt_groups):
            iou_matrix[i, j] = part_iou(pidx, gidx)
    rows, cols = linear_sum_assignment(-iou_matrix)

    ious = []
    oes = []
    mds = []
    type_hits = 0
    matched_gt_groups = set()
    matched_gt_attrs = 0
    for i, j in zip(rows, cols):
        if iou_matrix[i, j] <= 0.0:
            continue
        matched_gt_groups.add(j)
        ious.append(iou_matrix[i, j])
        pg, gg = pred_groups[i][1], gt_groups[j][1]
        for pi, gi in _match_attributes(pg, gg, cloud):
            pm, gm = pg[pi], gg[gi]
            matched_gt_attrs += 1
            oes.append(orientation_error_deg(pm.axis.orientation,
                                             gm.axis.orientation))
            mds.append(axis_min_distance(pm.axis.line(cloud),
                                         gm.axis.line(cloud), cloud))
            if pm.motion_type is gm.motion_type:
                type_hits += 1

    # Unmatched GT groups count as IoU 0; unmatched GT attributes as TA misses.
    for j in range(len(gt_groups)):
        if j not in matched_gt_groups:
            ious.append(0.0)
    iou = float(np.mean(ious)) if ious else 0.0
    ta = type_hits / n_gt if n_gt else 1.0
    oe = float(np.mean(oes)) if oes else float("nan")
    md = float(np.mean(mds)) if mds else float("nan")
    return EvalReport(iou=iou, epe=epe, md=md, oe=oe, ta=ta)


def proposal_recall(proposals, gt: Annotation, iou_threshold: float = 0.5) -> float:
    """Fraction of GT parts covered by some proposal at the IoU threshold."""
    if not gt.parts:
        return 1.0
    hits = 0
    for part in gt.parts:
        best = 0.0
        for prop in proposals:
            indices = prop.indices if hasattr(prop, "indices") else prop
            best = max(best, part_iou(indices, part.indices))
        if best >= iou_threshold:
            hits += 1
    return hits / len(gt.parts)
