"""Motion-driven scoring of (part, attribute) combinations.

`matching_score` compares two mobilities by the mean L2 difference of their
normalized per-point motion fields; it is the training target for a learned
matcher and the oracle when ground truth is available. Without ground truth,
candidates are ranked by `plausibility_energy`: move the part through a few
snapshot amounts and measure how much points near the static remainder change
their nearest-static distance. A true mobility barely disturbs it.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from mobkit.core import (
    Mobility,
    MotionType,
    MoveAmounts,
    PointCloud,
    bbox_diagonal,
    move_field,
    transform_points,
)
from mobkit.partprop import PartProposal
from mobkit.attrprop import AttributeProposal


@dataclass(frozen=True)
class MobilityProposal:
    mobility: Mobility
    confidence: float
    matching_error: float

    def __post_init__(self):
        if self.matching_error < 0:
            raise ValueError("matching_error must be non-negative")


def matching_score(cloud: PointCloud, m_a: Mobility, m_b: Mobility,
                   amounts: MoveAmounts = MoveAmounts()) -> float:
    """Mean per-point L2 difference between two normalized motion fields.

    A pseudometric over mobilities on a fixed cloud: symmetric, non-negative,
    zero for identical mobilities, and triangle-inequality compliant.
    """
    fa = move_field(cloud, m_a, amounts)
    fb = move_field(cloud, m_b, amounts)
    return float(np.linalg.norm(fa - fb, axis=1).mean())


def matching_score_loss(predicted: float, cloud: PointCloud, proposal: Mobility,
                        gt: Mobility, amounts: MoveAmounts = MoveAmounts()) -> float:
    """Absolute error of a predicted matching score against the true one."""
    if predicted < 0:
        raise ValueError("predicted score must be non-negative")
    return abs(predicted - matching_score(cloud, proposal, gt, amounts))


DEFAULT_SNAPSHOT_FRACTIONS = (1.0 / 3.0, 2.0 / 3.0, 1.0)


def _snapshot_specs(motion_type: MotionType, amounts: MoveAmounts, diag: float,
                    fractions: Sequence[float]):
    specs = []
    for f in fractions:
        if motion_type is MotionType.TRANSLATION:
            specs.append(f * amounts.translation_delta * diag)
        elif motion_type is MotionType.ROTATION:
            specs.append(f * amounts.rotation_delta)
        else:
            specs.append((f * amounts.rotation_delta,
                          f * amounts.translation_delta * diag))
    return specs


def plausibility_energy(cloud: PointCloud, m: Mobility,
                        amounts: MoveAmounts = MoveAmounts(), *,
                        contact_band: float = 0.05,
                        distance_clamp: float = 0.1,
                        fractions: Sequence[float] = DEFAULT_SNAPSHOT_FRACTIONS,
                        no_contact_penalty: float = 1.0,
                        min_motion: float = 0.03) -> float:
    """Structure-tearing proxy for a mobility, lower is better.

    Contact points are part points within ``contact_band`` x diagonal of the
    static remainder before motion. For each snapshot, the change of each
    contact point's nearest-static-point distance is accumulated (clamped at
    ``distance_clamp`` x diagonal); the result is the mean over contacts and
    snapshots, normalized by the diagonal. A part with no contact points
    returns ``no_contact_penalty``, as does a degenerate motion that moves
    the part by less than ``min_motion`` x diagonal on average at the full
    amounts (e.g. a rotation about an axis running through the part itself).
    """
    part = m.part
    n = len(cloud)
    if part[-1] >= n:
        raise ValueError("part index out of range")
    if part.size >= n:
        raise ValueError("part must be a strict subset of the cloud")
    diag = bbox_diagonal(cloud)
    static_mask = np.ones(n, dtype=bool)
    static_mask[part] = False
    static_pts = cloud.points[static_mask]
    tree = cKDTree(static_pts)

    part_pts = cloud.points[part]
    line = m.axis.line(cloud)
    specs = _snapshot_specs(m.motion_type, amounts, diag, fractions)
    moved_full = transform_points(part_pts, line, m.motion_type, specs[-1])
    mean_disp = float(np.linalg.norm(moved_full - part_pts, axis=1).mean())
    if mean_disp < min_motion * diag:
        return float(no_contact_penalty)

    d_before, _ = tree.query(part_pts, k=1)
    contact = d_before <= contact_band * diag
    if not contact.any():
        return float(no_contact_penalty)
    contact_pts = part_pts[contact]
    d0 = d_before[contact]

    clamp = distance_clamp * diag
    total = 0.0
    for amount in specs:
        moved = transform_points(contact_pts, line, m.motion_type, amount)
        d1, _ = tree.query(moved, k=1)
        total += float(np.minimum(np.abs(d1 - d0), clamp).sum())
    return total / (len(specs) * contact_pts.shape[0] * diag)


_SOURCE_ORDER = {"pca": 0, "contact": 1, "bbox-edge": 2}
_TYPE_ORDER = {MotionType.TRANSLATION: 0, MotionType.ROTATION: 1,
               MotionType.ROTATION_TRANSLATION: 2}


def match_proposals(cloud: PointCloud, parts: Sequence[PartProposal],
                    attrs_per_part: Callable[[np.ndarray], Sequence[AttributeProposal]],
                    amounts: MoveAmounts = MoveAmounts(), *,
                    gt_mobilities: Sequence[Mobility] | None = None,
                    contact_band: float = 0.05,
                    distance_clamp: float = 0.1,
                    fractions: Sequence[float] = DEFAULT_SNAPSHOT_FRACTIONS,
                    ) -> list[MobilityProposal]:
    """Score every (part, attribute) combination.

    Ranking uses the plausibility energy, or the matching score against the
    closest ground-truth mobility when ``gt_mobilities`` is given (oracle
    mode, used to build training-style fixtures). Part proposals covering the
    whole cloud are skipped: they have no static remainder to move against.
    Output order: per part by ascending error, parts by lowest member index.
    """
    n = len(cloud)
    out = []
    for part_prop in parts:
        indices = part_prop.indices
        if indices.size >= n:
            continue
        try:
            attrs = attrs_per_part(indices)
        except ValueError:
            continue
        scored = []
        for seq, attr in enumerate(attrs):
            mobility = Mobility(indices, attr.motion_type, attr.axis)
            if gt_mobilities is not None:
                error = min(matching_score(cloud, mobility, g, amounts)
                            for g in gt_mobilities)
            else:
                error = plausibility_energy(
                    cloud, mobility, amounts, contact_band=contact_band,
                    distance_clamp=distance_clamp, fractions=fractions)
            scored.append((error, _SOURCE_ORDER.get(attr.source, 9),
                           _TYPE_ORDER[attr.motion_type], seq,
                           MobilityProposal(mobility, part_prop.confidence, error)))
        scored.sort(key=lambda t: t[:4])
        out.append((int(indices[0]), [s[-1] for s in scored]))
    out.sort(key=lambda t: t[0])
    return [p for _, plist in out for p in plist]


def filter_training_proposals(proposals: Sequence[MobilityProposal],
                              max_error: float = 0.05,
                              top_fraction: float = 0.10) -> list[MobilityProposal]:
    """Keep proposals with error at most ``max_error`` that also rank within
    the best ``top_fraction`` of the list (training-set selection rule)."""
    if not proposals:
        return []
    ranked = sorted(proposals, key=lambda p: p.matching_error)
    keep = max(1, int(len(ranked) * top_fraction))
    top = ranked[:keep]
    return [p for p in top if p.matching_error <= max_error]
