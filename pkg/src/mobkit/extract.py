"""Final mobility extraction.

Greedy non-maximum suppression over part proposals by matching error, then
per kept part a multi-attribute selection: exactly one translation direction,
and rotation axes accepted greedily while keeping every pair more than a
minimum angle apart (undirected). Combined rotation+translation proposals
compete in both pools; one is reported as such only when the same proposal
wins both coaxially, otherwise it demotes to the surviving component type.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from mobkit.core import Mobility, MotionType
from mobkit.matching import MobilityProposal


@dataclass(frozen=True)
class ExtractionConfig:
    part_overlap_iou: float = 0.5
    attribute_collection_iou: float = 0.5
    rotation_angle_min_deg: float = 45.0
    # Pure-type proposals within this error margin beat a combined
    # rotation+translation one; keeps near-tied screw candidates from
    # absorbing a part that genuinely has separate motions.
    rt_tie_margin: float = 0.002

    def __post_init__(self):
        if not 0 < self.part_overlap_iou <= 1 or not 0 < self.attribute_collection_iou <= 1:
            raise ValueError("IoU thresholds must lie in (0, 1]")
        if not 0 < self.rotation_angle_min_deg <= 90:
            raise ValueError("rotation_angle_min_deg must lie in (0, 90]")


def part_iou(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    inter = np.intersect1d(a, b).size
    union = np.union1d(a, b).size
    return inter / union if union else 0.0


def undirected_angle_deg(a, b) -> float:
    c = abs(float(np.dot(a, b)))
    return math.degrees(math.acos(min(1.0, c)))


def _order_key(p: MobilityProposal):
    return (p.matching_error, int(p.mobility.part[0]), p.mobility.part.size)


def nms_parts(proposals: Sequence[MobilityProposal],
              config: ExtractionConfig = ExtractionConfig()) -> list[MobilityProposal]:
    """Keep the best-scoring proposal of every group of overlapping parts."""
    accepted: list[MobilityProposal] = []
    for prop in sorted(proposals, key=_order_key):
        if all(part_iou(prop.mobility.part, a.mobility.part) <= config.part_overlap_iou
               for a in accepted):
            accepted.append(prop)
    return accepted


def select_attributes(kept_part: MobilityProposal,
                      pool: Sequence[MobilityProposal],
                      config: ExtractionConfig = ExtractionConfig()) -> list[Mobility]:
    """Distinct motion attributes for one kept part.

    Collects pool entries whose part overlaps the kept one, keeps the single
    best translation direction, and greedily accepts rotation axes more than
    the minimum angle apart. Output mobilities reuse the kept part's points.
    """
    part = kept_part.mobility.part
    related = [p for p in pool
               if part_iou(part, p.mobility.part) > config.attribute_collection_iou]

    def eff_error(p: MobilityProposal) -> float:
        handicap = config.rt_tie_margin \
            if p.mobility.motion_type is MotionType.ROTATION_TRANSLATION else 0.0
        return p.matching_error + handicap

    translations = [p for p in related if p.mobility.motion_type.has_translation]
    rotations = [p for p in related if p.mobility.motion_type.has_rotation]

    t_winner = min(translations, key=lambda p: (eff_error(p), _order_key(p))) \
        if translations else None

    accepted_r: list[MobilityProposal] = []
    for p in sorted(rotations, key=lambda p: (eff_error(p), _order_key(p))):
        axis_dir = p.mobility.axis.orientation
        if all(undirected_angle_deg(axis_dir, a.mobility.axis.orientation)
               > config.rotation_angle_min_deg for a in accepted_r):
            accepted_r.append(p)

    out: list[Mobility] = []
    consumed_t = False
    for p in accepted_r:
        motion_type = MotionType.ROTATION
        if p.mobility.motion_type is MotionType.ROTATION_TRANSLATION \
                and t_winner is p:
            motion_type = MotionType.ROTATION_TRANSLATION
            consumed_t = True
        out.append(Mobility(part, motion_type, p.mobility.axis))
    if t_winner is not None and not consumed_t:
        out.append(Mobility(part, MotionType.TRANSLATION, t_winner.mobility.axis))
    return out


def extract_mobilities(proposals: Sequence[MobilityProposal],
                       config: ExtractionConfig = ExtractionConfig(),
                       ) -> list[tuple[MobilityProposal, list[Mobility]]]:
    """Part NMS followed by per-part attribute selection."""
    kept = nms_parts(proposals, config)
    return [(k, select_attributes(k, proposals, config)) for k in kept]
